#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "covering.hpp"

namespace coarsedim {

// ======================================================
// Quasi-isometry verification
// ======================================================

/// Constants of a (lambda, delta)-quasi-isometry. lambda below 1 is widened
/// to 1 (the inequalities only get weaker in that direction).
struct QiParams {
    double lambda = 1.0;
    double delta = 1.0;

    QiParams() = default;
    QiParams(double l, double d) : lambda(std::max(l, 1.0)), delta(d) {
        if (!(d > 0.0)) throw InputError("QiParams: delta must be positive");
    }
};

struct ViolatingPair {
    std::size_t i = 0, j = 0;
    double lhs = 0, mid = 0, rhs = 0;
    double excess = 0;
};

struct QiReport {
    bool holds = false;
    std::vector<ViolatingPair> violating_pairs;  // worst first, capped
    double surjectivity_gap = 0.0;
    bool exhaustive = true;
    long long pairs_checked = 0;

    nlohmann::json to_json() const {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& v : violating_pairs)
            pairs.push_back({{"i", v.i}, {"j", v.j}, {"lhs", v.lhs}, {"mid", v.mid},
                             {"rhs", v.rhs}, {"excess", v.excess}});
        return {{"schema", 1},
                {"holds", holds},
                {"violating_pairs", pairs},
                {"coarse_surjectivity_gap", surjectivity_gap},
                {"exhaustive", exhaustive},
                {"pairs_checked", pairs_checked}};
    }
};

using PointMap = std::function<std::vector<double>(std::span<const double>)>;

struct QiOptions {
    bool check_surjectivity = true;
    bool allow_sampling = false;
    std::uint64_t seed = 0;
    std::int64_t sample_pairs = 1'000'000;
    std::size_t max_reported = 100;
};

namespace detail {

struct ViolationCollector {
    std::size_t cap;
    std::vector<ViolatingPair> worst;  // kept sorted, worst first

    explicit ViolationCollector(std::size_t c) : cap(c) {}

    static bool ranks_before(const ViolatingPair& a, const ViolatingPair& b) {
        if (a.excess != b.excess) return a.excess > b.excess;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    }

    void add(const ViolatingPair& v) {
        auto it = std::lower_bound(worst.begin(), worst.end(), v, ranks_before);
        worst.insert(it, v);
        if (worst.size() > cap) worst.pop_back();
    }

    void merge(const ViolationCollector& o) {
        for (const auto& v : o.worst) add(v);
    }
};

}  // namespace detail

/// Checks the two-sided distance bound over pairs of X and coarse
/// surjectivity onto Y. Exhaustive when the pair count fits the budget;
/// otherwise seeded uniform sampling is used and the report says so.
inline QiReport verify_qi(const PointCloud& x, const PointCloud& y, const PointMap& f,
                          const QiParams& params, const QiOptions& opts = {}, const Config& cfg = {}) {
    const std::size_t n = x.size();
    QiReport rep;

    // evaluate f once per point
    std::vector<std::vector<double>> fx(n);
    for (std::size_t i = 0; i < n; ++i) {
        fx[i] = f(x[i]);
        if (!y.empty() && static_cast<int>(fx[i].size()) != y.dim())
            throw InputError("verify_qi: f(x) dimension does not match Y");
    }

    const double lambda = params.lambda;
    const double delta = params.delta;
    const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const bool sampled = total_pairs > cfg.max_pairs;
    if (sampled && !opts.allow_sampling)
        throw BudgetExceeded("verify_qi: pair count exceeds budget; enable sampling");

    detail::ViolationCollector collector(opts.max_reported);
    auto check_pair = [&](std::size_t i, std::size_t j, detail::ViolationCollector& coll) {
        const double d = std::sqrt(dist_sq(x[i], x[j]));
        const double mid = std::sqrt(dist_sq(std::span<const double>(fx[i]), std::span<const double>(fx[j])));
        const double lhs = d / lambda - delta;
        const double rhs = lambda * d + delta;
        const double excess = std::max(lhs - mid, mid - rhs);
        if (excess > 0.0) coll.add({i, j, lhs, mid, rhs, excess});
    };

    if (!sampled) {
        rep.pairs_checked = total_pairs;
        if (cfg.threads > 1 && n > 256) {
            std::vector<detail::ViolationCollector> parts;
            parts.reserve(static_cast<std::size_t>(cfg.threads));
            for (int t = 0; t < cfg.threads; ++t) parts.emplace_back(opts.max_reported);
            parallel_chunks(static_cast<std::int64_t>(n), cfg.threads,
                            [&](int t, std::int64_t lo, std::int64_t hi) {
                                for (std::int64_t i = lo; i < hi; ++i)
                                    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j)
                                        check_pair(static_cast<std::size_t>(i), j, parts[static_cast<std::size_t>(t)]);
                            });
            for (const auto& p : parts) collector.merge(p);
        } else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) check_pair(i, j, collector);
        }
    } else {
        rep.exhaustive = false;
        std::uint64_t state = opts.seed * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull;
        std::int64_t done = 0;
        while (done < opts.sample_pairs) {
            state = splitmix64(state);
            const std::size_t i = static_cast<std::size_t>(state % n);
            state = splitmix64(state);
            const std::size_t j = static_cast<std::size_t>(state % n);
            if (i == j) continue;
            check_pair(std::min(i, j), std::max(i, j), collector);
            ++done;
        }
        rep.pairs_checked = done;
    }
    rep.violating_pairs = std::move(collector.worst);

    // coarse surjectivity: largest distance from a target point to the image
    rep.surjectivity_gap = 0.0;
    if (opts.check_surjectivity && !y.empty()) {
        const std::int64_t surj_pairs = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(y.size());
        if (surj_pairs > cfg.max_pairs && !opts.allow_sampling)
            throw BudgetExceeded("verify_qi: surjectivity pair count exceeds budget; enable sampling");
        std::size_t ystep = 1;
        if (surj_pairs > cfg.max_pairs)
            ystep = static_cast<std::size_t>(surj_pairs / cfg.max_pairs) + 1;
        for (std::size_t t = 0; t < y.size(); t += ystep) {
            const auto py = y[t];
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                best = std::min(best, dist_sq(std::span<const double>(fx[i]), py));
            rep.surjectivity_gap = std::max(rep.surjectivity_gap, std::sqrt(best));
        }
        if (ystep > 1) rep.exhaustive = false;
    }

    rep.holds = rep.violating_pairs.empty() && rep.surjectivity_gap < delta;
    return rep;
}

// ======================================================
// Minimal multiplicative constant per additive budget
// ======================================================

/// For each delta, the smallest lambda in [1, 1e6] making both embedding
/// inequalities hold over all pairs (no surjectivity), to 1e-3. Empty optional
/// when even lambda = 1e6 fails.
inline std::vector<std::pair<double, std::optional<double>>> min_lambda_profile(
    const PointCloud& x, const PointMap& f, std::span<const double> delta_grid, const Config& cfg = {}) {
    const std::size_t n = x.size();
    const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    if (total_pairs > cfg.max_pairs) throw BudgetExceeded("min_lambda_profile: pair count exceeds budget");

    std::vector<std::vector<double>> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = f(x[i]);

    // cache pair geometry once
    std::vector<std::pair<double, double>> pairs;  // (d, mid)
    pairs.reserve(static_cast<std::size_t>(total_pairs));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            pairs.emplace_back(std::sqrt(dist_sq(x[i], x[j])),
                               std::sqrt(dist_sq(std::span<const double>(fx[i]), std::span<const double>(fx[j]))));

    std::vector<std::pair<double, std::optional<double>>> out;
    double prev = 0.0;
    for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
        const double delta = delta_grid[gi];
        if (!(delta > 0.0) || (gi > 0 && !(delta > prev)))
            throw InputError("min_lambda_profile: delta grid must be positive and increasing");
        prev = delta;
        auto feasible = [&](double lambda) {
            for (const auto& [d, mid] : pairs) {
                if (mid > lambda * d + delta) return false;
                if (d / lambda - delta > mid) return false;
            }
            return true;
        };
        if (!feasible(1e6)) {
            out.emplace_back(delta, std::nullopt);
            continue;
        }
        double lo = 1.0, hi = 1e6;
        if (feasible(lo)) {
            out.emplace_back(delta, lo);
            continue;
        }
        while (hi - lo > 1e-3) {
            const double m = 0.5 * (lo + hi);
            (feasible(m) ? hi : lo) = m;
        }
        out.emplace_back(delta, hi);
    }
    return out;
}

// ======================================================
// Dimension invariance under bounded perturbation
// ======================================================

struct PerturbationReport {
    double slope_base = 0.0;
    double slope_perturbed = 0.0;
    double difference = 0.0;
    double perturbation_bound = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// deterministic per-point displacement, sup-scaled so ||eta||_2 <= bound
inline std::vector<double> perturb_rows(const PointCloud& pc, double bound, std::uint64_t seed) {
    const int d = pc.dim();
    const double per_coord = bound / std::sqrt(static_cast<double>(d));
    std::vector<double> rows;
    rows.reserve(pc.raw().size());
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const auto p = pc[i];
        if (norm2_sq(p) == 0.0) {  // eta(0) = 0
            rows.insert(rows.end(), p.begin(), p.end());
            continue;
        }
        for (int k = 0; k < d; ++k) {
            std::uint64_t h = seed;
            std::uint64_t bits = 0;
            std::memcpy(&bits, &p[static_cast<std::size_t>(k)], sizeof(bits));
            h = splitmix64(h ^ bits);
            h = splitmix64(h + static_cast<std::uint64_t>(k) + 0x1234567u);
            const double u = to_unit_double(h) * 2.0 - 1.0;
            rows.push_back(p[static_cast<std::size_t>(k)] + u * per_coord);
        }
    }
    return rows;
}

}  // namespace detail

/// Applies a seeded map x -> x + eta(x) with ||eta|| <= perturbation_bound and
/// eta(0) = 0 (a (1, 2*bound)-quasi-isometry onto its image), re-estimates the
/// dimension, and reports the slope difference.
inline PerturbationReport qi_dimension_experiment(const GenPtr& gen, double perturbation_bound,
                                                  std::span<const double> radii, std::uint64_t seed,
                                                  const Config& cfg = {}) {
    if (!(perturbation_bound >= 0.0) || perturbation_bound >= 0.5)
        throw InputError("qi_dimension_experiment: perturbation bound must lie in [0, 1/2)");
    PerturbationReport rep;
    rep.perturbation_bound = perturbation_bound;
    rep.seed = seed;
    rep.slope_base = dimension_estimate(gen, radii, cfg).slope_ols;

    auto perturbed_at = [&](double r) {
        const PointCloud base = enumerate(gen, r, cfg);
        // perturbed points may exit B(r); keep them all, windowed generously
        std::vector<double> rows = detail::perturb_rows(base, perturbation_bound, seed);
        return PointCloud::from_rows(base.dim(), r + 1.0, std::move(rows), cfg);
    };
    rep.slope_perturbed = detail::estimate_with(perturbed_at, radii, cfg).slope_ols;
    rep.difference = std::abs(rep.slope_perturbed - rep.slope_base);
    return rep;
}

}  // namespace coarsedim
