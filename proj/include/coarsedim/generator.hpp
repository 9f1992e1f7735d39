#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "common.hpp"

namespace coarsedim {

// ======================================================
// SetGenerator: symbolic, possibly unbounded point sets
// ======================================================

struct SetGenerator;
using GenPtr = std::shared_ptr<const SetGenerator>;

/// Symbolic description of a subset of R^d that can be enumerated inside any
/// open ball B(r). Enumeration is deterministic and monotone in r.
struct SetGenerator {
    enum class Kind {
        integers,
        powers_plus_index,  // {2^n, 2^n + n : n in N}
        reciprocals,        // {1/n : n >= 1}
        explicit_list,
        arithmetic_progression,  // {start + k*step : k in Z}
        cantor_like,             // level-`depth` left endpoints on [0,1]
        union_set,
        scale,
        translate,
        product,
        power,
        linear_image,
        difference,
    };

    Kind kind;
    int ambient_dim = 1;
    std::vector<double> numbers;  // payload, meaning depends on kind
    long long int_param = 0;      // power exponent / cantor depth
    std::vector<GenPtr> children;

    static GenPtr integers() { return make(Kind::integers, 1); }
    static GenPtr powers_plus_index() { return make(Kind::powers_plus_index, 1); }
    static GenPtr reciprocals() { return make(Kind::reciprocals, 1); }

    static GenPtr explicit_list(int dim, std::vector<double> flat_points) {
        if (dim <= 0) throw InputError("explicit_list: dimension must be positive");
        if (flat_points.size() % static_cast<std::size_t>(dim) != 0)
            throw InputError("explicit_list: point data not a multiple of dim");
        auto g = make(Kind::explicit_list, dim);
        g->numbers = std::move(flat_points);
        return g;
    }

    static GenPtr arithmetic_progression(double start, double step) {
        auto g = make(Kind::arithmetic_progression, 1);
        g->numbers = {start, step};
        return g;
    }

    static GenPtr cantor_like(double ratio, long long depth) {
        if (!(ratio > 0.0 && ratio <= 0.5)) throw InputError("cantor_like: ratio must lie in (0, 1/2]");
        if (depth < 0) throw InputError("cantor_like: depth must be >= 0");
        auto g = make(Kind::cantor_like, 1);
        g->numbers = {ratio};
        g->int_param = depth;
        return g;
    }

    static GenPtr union_of(std::vector<GenPtr> cs) {
        if (cs.empty()) throw InputError("union: needs at least one child");
        const int d = cs.front()->ambient_dim;
        for (const auto& c : cs)
            if (c->ambient_dim != d) throw InputError("union: children must share ambient dimension");
        auto g = make(Kind::union_set, d);
        g->children = std::move(cs);
        return g;
    }

    static GenPtr scaled(GenPtr child, double factor) {
        if (factor == 0.0) throw InputError("scale: factor must be nonzero");
        auto g = make(Kind::scale, child->ambient_dim);
        g->numbers = {factor};
        g->children = {std::move(child)};
        return g;
    }

    static GenPtr translated(GenPtr child, std::vector<double> offset) {
        if (static_cast<int>(offset.size()) != child->ambient_dim)
            throw InputError("translate: offset dimension mismatch");
        auto g = make(Kind::translate, child->ambient_dim);
        g->numbers = std::move(offset);
        g->children = {std::move(child)};
        return g;
    }

    static GenPtr product_of(std::vector<GenPtr> cs) {
        if (cs.empty()) throw InputError("product: needs at least one child");
        int d = 0;
        for (const auto& c : cs) d += c->ambient_dim;
        auto g = make(Kind::product, d);
        g->children = std::move(cs);
        return g;
    }

    static GenPtr power_of(GenPtr child, long long k) {
        if (k < 1) throw InputError("power: exponent must be >= 1");
        auto g = make(Kind::power, child->ambient_dim * static_cast<int>(k));
        g->int_param = k;
        g->children = {std::move(child)};
        return g;
    }

    static GenPtr linear_image_of(GenPtr child, std::vector<double> coeffs) {
        if (static_cast<int>(coeffs.size()) != child->ambient_dim)
            throw InputError("linear-image: coefficient count must match child dimension");
        auto g = make(Kind::linear_image, 1);
        g->numbers = std::move(coeffs);
        g->children = {std::move(child)};
        return g;
    }

    static GenPtr difference_of(GenPtr a, GenPtr b) {
        if (a->ambient_dim != b->ambient_dim)
            throw InputError("difference: children must share ambient dimension");
        auto g = make(Kind::difference, a->ambient_dim);
        g->children = {std::move(a), std::move(b)};
        return g;
    }

private:
    static std::shared_ptr<SetGenerator> make(Kind k, int dim) {
        auto g = std::make_shared<SetGenerator>();
        g->kind = k;
        g->ambient_dim = dim;
        return g;
    }
};

inline const char* kind_name(SetGenerator::Kind k) {
    switch (k) {
        case SetGenerator::Kind::integers: return "integers";
        case SetGenerator::Kind::powers_plus_index: return "powersplusindex";
        case SetGenerator::Kind::reciprocals: return "reciprocals";
        case SetGenerator::Kind::explicit_list: return "explicit";
        case SetGenerator::Kind::arithmetic_progression: return "ap";
        case SetGenerator::Kind::cantor_like: return "cantor";
        case SetGenerator::Kind::union_set: return "union";
        case SetGenerator::Kind::scale: return "scale";
        case SetGenerator::Kind::translate: return "translate";
        case SetGenerator::Kind::product: return "product";
        case SetGenerator::Kind::power: return "power";
        case SetGenerator::Kind::linear_image: return "linear-image";
        case SetGenerator::Kind::difference: return "difference";
    }
    return "?";
}

// ======================================================
// enumerate
// ======================================================

namespace detail {

inline void check_budget(std::size_t count, const Config& cfg, const SetGenerator& g) {
    if (static_cast<std::int64_t>(count) > cfg.max_points)
        throw BudgetExceeded(std::string("enumerate: point budget exceeded by generator (") +
                             kind_name(g.kind) + ")");
}

inline std::vector<double> enumerate_rows(const SetGenerator& g, double radius, const Config& cfg);

// integers in the open interval (-r, r)
inline void integer_range(double r, long long& kmin, long long& kmax) {
    kmin = static_cast<long long>(std::floor(-r)) + 1;
    kmax = static_cast<long long>(std::ceil(r)) - 1;
}

inline std::vector<double> enumerate_rows(const SetGenerator& g, double radius, const Config& cfg) {
    using Kind = SetGenerator::Kind;
    std::vector<double> rows;
    switch (g.kind) {
        case Kind::integers: {
            long long kmin, kmax;
            integer_range(radius, kmin, kmax);
            if (kmax >= kmin) check_budget(static_cast<std::size_t>(kmax - kmin + 1), cfg, g);
            for (long long k = kmin; k <= kmax; ++k) rows.push_back(static_cast<double>(k));
            break;
        }
        case Kind::powers_plus_index: {
            for (long long n = 0; n < 1024; ++n) {
                const double p = std::ldexp(1.0, static_cast<int>(n));
                if (!(p < radius)) break;
                rows.push_back(p);
                const double q = p + static_cast<double>(n);
                if (q < radius) rows.push_back(q);
            }
            break;
        }
        case Kind::reciprocals: {
            // Dense near zero: emit every member until consecutive gaps fall
            // below the dedup resolution, then skip ahead cell by cell.
            const double rho = cfg.rho_dedup;
            double v = 1.0;
            long long n = 1;
            while (v >= radius) { ++n; v = 1.0 / static_cast<double>(n); }
            while (true) {
                rows.push_back(v);
                check_budget(rows.size(), cfg, g);
                if (v <= 2.0 * rho) break;
                const double gap_next = v - 1.0 / static_cast<double>(n + 1);
                if (gap_next >= rho) {
                    ++n;
                } else {
                    // smallest n' whose value drops by at least one cell
                    const double target = v - 2.0 * rho;
                    if (target <= 0.0) break;
                    const long long skip = static_cast<long long>(std::ceil(1.0 / target));
                    n = std::max(n + 1, skip);
                }
                v = 1.0 / static_cast<double>(n);
            }
            break;
        }
        case Kind::explicit_list:
            rows = g.numbers;
            break;
        case Kind::arithmetic_progression: {
            const double start = g.numbers[0], step = g.numbers[1];
            if (step == 0.0) {
                rows.push_back(start);
                break;
            }
            const double lo = (-radius - start) / step;
            const double hi = (radius - start) / step;
            const double a = std::min(lo, hi), b = std::max(lo, hi);
            const long long k0 = static_cast<long long>(std::floor(a)) - 1;
            const long long k1 = static_cast<long long>(std::ceil(b)) + 1;
            check_budget(static_cast<std::size_t>(std::max<long long>(0, k1 - k0 + 1)), cfg, g);
            for (long long k = k0; k <= k1; ++k)
                rows.push_back(start + static_cast<double>(k) * step);
            break;
        }
        case Kind::cantor_like: {
            const double ratio = g.numbers[0];
            const long long depth = g.int_param;
            if (depth >= 62 || (static_cast<std::int64_t>(1) << depth) > cfg.max_points)
                throw BudgetExceeded("enumerate: point budget exceeded by generator (cantor), depth " +
                                     std::to_string(depth));
            const std::size_t count = static_cast<std::size_t>(1) << depth;
            rows.reserve(count);
            for (std::size_t bits = 0; bits < count; ++bits) {
                double x = 0.0, len = 1.0;
                for (long long i = 0; i < depth; ++i) {
                    if (bits & (static_cast<std::size_t>(1) << i)) x += (1.0 - ratio) * len;
                    len *= ratio;
                }
                rows.push_back(x);
            }
            break;
        }
        case Kind::union_set: {
            for (const auto& c : g.children) {
                auto sub = enumerate_rows(*c, radius, cfg);
                rows.insert(rows.end(), sub.begin(), sub.end());
                check_budget(rows.size() / static_cast<std::size_t>(g.ambient_dim), cfg, g);
            }
            break;
        }
        case Kind::scale: {
            const double f = g.numbers[0];
            rows = enumerate_rows(*g.children[0], radius / std::abs(f), cfg);
            for (double& v : rows) v *= f;
            break;
        }
        case Kind::translate: {
            const double off_norm = norm2(std::span<const double>(g.numbers));
            rows = enumerate_rows(*g.children[0], radius + off_norm, cfg);
            const int d = g.ambient_dim;
            for (std::size_t i = 0; i < rows.size(); ++i)
                rows[i] += g.numbers[i % static_cast<std::size_t>(d)];
            break;
        }
        case Kind::product:
        case Kind::power: {
            std::vector<const SetGenerator*> factors;
            if (g.kind == Kind::product) {
                for (const auto& c : g.children) factors.push_back(c.get());
            } else {
                for (long long i = 0; i < g.int_param; ++i) factors.push_back(g.children[0].get());
            }
            std::vector<std::vector<double>> parts;
            std::vector<int> dims;
            parts.reserve(factors.size());
            for (const SetGenerator* f : factors) {
                parts.push_back(enumerate_rows(*f, radius, cfg));
                dims.push_back(f->ambient_dim);
            }
            const int out_dim = g.ambient_dim;
            const double r2 = radius * radius;
            std::vector<double> tuple(static_cast<std::size_t>(out_dim));
            std::size_t emitted = 0;
            auto rec = [&](auto&& self, std::size_t level, int pos, double prefix_sq) -> void {
                if (level == parts.size()) {
                    rows.insert(rows.end(), tuple.begin(), tuple.end());
                    check_budget(++emitted, cfg, g);
                    return;
                }
                const auto& part = parts[level];
                const int d = dims[level];
                for (std::size_t i = 0; i + static_cast<std::size_t>(d) <= part.size();
                     i += static_cast<std::size_t>(d)) {
                    double s = prefix_sq;
                    for (int k = 0; k < d; ++k) {
                        const double c = part[i + static_cast<std::size_t>(k)];
                        tuple[static_cast<std::size_t>(pos + k)] = c;
                        s += c * c;
                    }
                    if (s < r2) self(self, level + 1, pos + d, s);
                }
            };
            rec(rec, 0, 0, 0.0);
            break;
        }
        case Kind::linear_image: {
            // source truncation convention: the child is enumerated at the
            // same radius as the requested image window
            auto sub = enumerate_rows(*g.children[0], radius, cfg);
            const int d = g.children[0]->ambient_dim;
            for (std::size_t i = 0; i + static_cast<std::size_t>(d) <= sub.size();
                 i += static_cast<std::size_t>(d)) {
                double v = 0.0;
                for (int k = 0; k < d; ++k)
                    v += g.numbers[static_cast<std::size_t>(k)] * sub[i + static_cast<std::size_t>(k)];
                if (std::abs(v) < radius) rows.push_back(v);
            }
            break;
        }
        case Kind::difference: {
            auto ra = enumerate_rows(*g.children[0], radius, cfg);
            auto rb = enumerate_rows(*g.children[1], radius, cfg);
            const int d = g.ambient_dim;
            const std::size_t na = ra.size() / static_cast<std::size_t>(d);
            const std::size_t nb = rb.size() / static_cast<std::size_t>(d);
            if (static_cast<std::int64_t>(na) * static_cast<std::int64_t>(nb) > cfg.max_pairs)
                throw BudgetExceeded("enumerate: pair budget exceeded by generator (difference)");
            const double r2 = radius * radius;
            std::size_t emitted = 0;
            for (std::size_t i = 0; i < na; ++i) {
                for (std::size_t j = 0; j < nb; ++j) {
                    double s = 0.0;
                    std::array<double, 8> diff{};
                    for (int k = 0; k < d; ++k) {
                        const double v = ra[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] -
                                         rb[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
                        diff[static_cast<std::size_t>(k)] = v;
                        s += v * v;
                    }
                    if (s < r2) {
                        rows.insert(rows.end(), diff.begin(), diff.begin() + d);
                        check_budget(++emitted, cfg, g);
                    }
                }
            }
            break;
        }
    }
    return rows;
}

}  // namespace detail

/// Enumerates the generator inside the open ball B(radius): deduplicated,
/// lex-sorted, every point of norm strictly below radius.
inline PointCloud enumerate(const SetGenerator& g, double radius, const Config& cfg = {}) {
    if (!(radius > 0.0)) throw InputError("enumerate: radius must be positive");
    auto rows = detail::enumerate_rows(g, radius, cfg);
    return PointCloud::from_rows(g.ambient_dim, radius, std::move(rows), cfg);
}

inline PointCloud enumerate(const GenPtr& g, double radius, const Config& cfg = {}) {
    return enumerate(*g, radius, cfg);
}

}  // namespace coarsedim
