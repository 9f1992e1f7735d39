#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace coarsedim {

// ======================================================
// Small geometry helpers
// ======================================================

inline double norm2_sq(std::span<const double> p) {
    double s = 0.0;
    for (double c : p) s += c * c;
    return s;
}

inline double norm2(std::span<const double> p) { return std::sqrt(norm2_sq(p)); }

inline double dist_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double sup_dist(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

// ======================================================
// Spatial-hash dedup grid
// ======================================================

namespace detail {

struct CellKey {
    std::array<std::int64_t, 8> idx{};
    int dim = 0;

    bool operator==(const CellKey& o) const {
        if (dim != o.dim) return false;
        for (int i = 0; i < dim; ++i)
            if (idx[static_cast<std::size_t>(i)] != o.idx[static_cast<std::size_t>(i)]) return false;
        return true;
    }
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (int i = 0; i < k.dim; ++i) {
            std::uint64_t v = 0;
            std::memcpy(&v, &k.idx[static_cast<std::size_t>(i)], sizeof(v));
            h ^= v;
            h *= 0x100000001b3ull;
        }
        return static_cast<std::size_t>(h);
    }
};

// cells are hash buckets only: identification always re-checks true
// distances, so saturating extreme quotients costs probe time, not
// correctness
inline std::int64_t cell_index(double x, double cell) {
    const double q = std::floor(x / cell);
    if (q >= 9.0e18) return 9'000'000'000'000'000'000LL;
    if (q <= -9.0e18) return -9'000'000'000'000'000'000LL;
    return static_cast<std::int64_t>(q);
}

inline CellKey cell_of(std::span<const double> p, double cell) {
    CellKey k;
    k.dim = static_cast<int>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) k.idx[i] = cell_index(p[i], cell);
    return k;
}

}  // namespace detail

// ======================================================
// PointCloud
// ======================================================

/// A finite point set: flat row-major storage, rows lex-sorted, deduplicated
/// at the dedup resolution, every row of Euclidean norm strictly below the
/// window radius. Immutable after construction.
class PointCloud {
public:
    PointCloud() = default;
    PointCloud(int dim, double window) : dim_(dim), window_(window) {
        if (dim <= 0) throw InputError("PointCloud: ambient dimension must be positive");
        if (!(window > 0.0)) throw InputError("PointCloud: window radius must be positive");
    }

    /// Canonicalizes raw rows: drops rows with norm >= window, normalizes
    /// -0.0, lex-sorts, and identifies points closer than rho in sup-norm
    /// (first survivor in lex order wins). Rows must be finite.
    static PointCloud from_rows(int dim, double window, std::vector<double> rows, const Config& cfg) {
        PointCloud pc(dim, window);
        if (dim > 8) throw InputError("PointCloud: ambient dimension above 8 unsupported");
        if (rows.size() % static_cast<std::size_t>(dim) != 0)
            throw InputError("PointCloud: row data not a multiple of dim");
        const std::size_t n = rows.size() / static_cast<std::size_t>(dim);
        if (static_cast<std::int64_t>(n) > cfg.max_points)
            throw BudgetExceeded("PointCloud: " + std::to_string(n) + " candidate points exceed max_points");

        for (double& v : rows) {
            if (!std::isfinite(v)) throw InputError("PointCloud: non-finite coordinate");
            if (v == 0.0) v = 0.0;  // collapse -0.0
        }

        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        const auto row = [&rows, dim](std::uint32_t i) {
            return std::span<const double>(rows.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
                                           static_cast<std::size_t>(dim));
        };
        bool presorted = true;
        for (std::size_t i = 1; i < n && presorted; ++i)
            presorted = !lex_less(row(static_cast<std::uint32_t>(i)), row(static_cast<std::uint32_t>(i - 1)));
        if (!presorted)
            std::sort(order.begin(), order.end(),
                      [&row](std::uint32_t a, std::uint32_t b) { return lex_less(row(a), row(b)); });

        const double w2 = window * window;
        const double cell = 2.0 * cfg.rho_dedup;

        if (dim == 1) {
            // sorted 1-d: the nearest kept point is always the previous one
            double last = 0.0;
            bool have_last = false;
            for (std::uint32_t oi : order) {
                const double v = rows[oi];
                if (!(v * v < w2)) continue;
                if (have_last && v - last < cfg.rho_dedup) continue;
                pc.data_.push_back(v);
                last = v;
                have_last = true;
            }
            return pc;
        }

        // neighbor offsets: at cell size 2*rho, any point within rho of p
        // lies in one of the 3^d cells around p's cell
        std::vector<std::array<std::int64_t, 8>> offsets;
        {
            std::array<std::int64_t, 8> cur{};
            std::int64_t total = 1;
            for (int i = 0; i < dim; ++i) total *= 3;
            offsets.reserve(static_cast<std::size_t>(total));
            for (std::int64_t code = 0; code < total; ++code) {
                std::int64_t c = code;
                for (int i = 0; i < dim; ++i) {
                    cur[static_cast<std::size_t>(i)] = (c % 3) - 1;
                    c /= 3;
                }
                offsets.push_back(cur);
            }
        }

        std::unordered_map<detail::CellKey, std::vector<std::uint32_t>, detail::CellKeyHash> grid;
        grid.reserve(n * 2);
        pc.data_.reserve(rows.size());
        for (std::uint32_t oi : order) {
            const auto p = row(oi);
            if (!(norm2_sq(p) < w2)) continue;  // open ball, strict
            const detail::CellKey base = detail::cell_of(p, cell);
            bool dup = false;
            for (const auto& off : offsets) {
                detail::CellKey k = base;
                for (int i = 0; i < dim; ++i) k.idx[static_cast<std::size_t>(i)] += off[static_cast<std::size_t>(i)];
                auto it = grid.find(k);
                if (it == grid.end()) continue;
                for (std::uint32_t ki : it->second) {
                    const std::span<const double> q(
                        pc.data_.data() + static_cast<std::size_t>(ki) * static_cast<std::size_t>(dim),
                        static_cast<std::size_t>(dim));
                    if (sup_dist(p, q) < cfg.rho_dedup) { dup = true; break; }
                }
                if (dup) break;
            }
            if (dup) continue;
            const auto new_index = static_cast<std::uint32_t>(pc.size());
            pc.data_.insert(pc.data_.end(), p.begin(), p.end());
            grid[base].push_back(new_index);
        }
        pc.data_.shrink_to_fit();
        return pc;
    }

    /// Trusted constructor for rows that are already lex-sorted, pairwise
    /// rho-separated in sup-norm, -0.0-free and inside the open window ball.
    /// Used where those facts hold structurally (powers and truncations of
    /// canonical clouds).
    static PointCloud from_canonical_rows(int dim, double window, std::vector<double> rows) {
        PointCloud pc(dim, window);
        pc.data_ = std::move(rows);
        return pc;
    }

    int dim() const { return dim_; }
    double window() const { return window_; }
    std::size_t size() const { return data_.size() / static_cast<std::size_t>(dim_ == 0 ? 1 : dim_); }
    bool empty() const { return data_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }

    /// Scalar accessor for 1-d clouds.
    double value(std::size_t i) const { return data_[i]; }

    const std::vector<double>& raw() const { return data_; }

    /// All rows of norm strictly below r, as a cloud with window r.
    PointCloud restrict_to(double r) const {
        std::vector<double> rows;
        const double r2 = r * r;
        for (std::size_t i = 0; i < size(); ++i) {
            const auto p = (*this)[i];
            if (norm2_sq(p) < r2) rows.insert(rows.end(), p.begin(), p.end());
        }
        return from_canonical_rows(dim_, r, std::move(rows));
    }

    double max_norm() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m = std::max(m, norm2_sq((*this)[i]));
        return std::sqrt(m);
    }

private:
    int dim_ = 1;
    double window_ = 1.0;
    std::vector<double> data_;
};

// ======================================================
// LinearMap
// ======================================================

/// T(x_1..x_n) = sum_i c_i x_i.
struct LinearMap {
    std::vector<double> coefficients;

    LinearMap() = default;
    explicit LinearMap(std::vector<double> c) : coefficients(std::move(c)) {}

    int arity() const { return static_cast<int>(coefficients.size()); }

    double apply(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * x[i];
        return s;
    }

    bool nonzero(double tol = 1e-12) const {
        for (double c : coefficients)
            if (std::abs(c) > tol) return true;
        return false;
    }

    /// Drops ~zero columns. The image over independent variables is unchanged
    /// since a zero column only ever contributes zero.
    LinearMap simplified(double tol = 1e-12) const {
        std::vector<double> out;
        for (double c : coefficients)
            if (std::abs(c) > tol) out.push_back(c);
        if (out.empty()) out.push_back(0.0);
        return LinearMap(std::move(out));
    }
};

// ======================================================
// Cloud operations
// ======================================================

/// All pairwise differences a-b with norm strictly below window.
inline PointCloud difference_cloud(const PointCloud& a, const PointCloud& b, double window,
                                   const Config& cfg = {}) {
    if (a.dim() != b.dim()) throw InputError("difference_cloud: ambient dimensions differ");
    if (!(window > 0.0)) throw InputError("difference_cloud: window must be positive");
    const std::int64_t pairs = static_cast<std::int64_t>(a.size()) * static_cast<std::int64_t>(b.size());
    if (pairs > cfg.max_pairs)
        throw BudgetExceeded("difference_cloud: " + std::to_string(pairs) +
                             " candidate pairs exceed max_pairs; raise rho_dedup or shrink the window");
    const int d = a.dim();
    const double w2 = window * window;
    std::vector<double> rows;
    std::vector<double> diff(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto pa = a[i];
        for (std::size_t j = 0; j < b.size(); ++j) {
            const auto pb = b[j];
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                diff[static_cast<std::size_t>(k)] = pa[static_cast<std::size_t>(k)] - pb[static_cast<std::size_t>(k)];
                s += diff[static_cast<std::size_t>(k)] * diff[static_cast<std::size_t>(k)];
            }
            if (s < w2) rows.insert(rows.end(), diff.begin(), diff.end());
            if (static_cast<std::int64_t>(rows.size() / static_cast<std::size_t>(d)) > cfg.max_points)
                throw BudgetExceeded("difference_cloud: output exceeds max_points");
        }
    }
    return PointCloud::from_rows(d, window, std::move(rows), cfg);
}

/// k-fold Cartesian power restricted to the open window ball.
inline PointCloud power_cloud(const PointCloud& a, int k, double window, const Config& cfg = {}) {
    if (k < 1) throw InputError("power_cloud: k must be >= 1");
    if (!(window > 0.0)) throw InputError("power_cloud: window must be positive");
    const int d = a.dim();
    const int out_dim = d * k;
    if (out_dim > 8) throw InputError("power_cloud: output dimension above 8 unsupported");
    const double w2 = window * window;
    std::vector<double> rows;
    std::vector<double> tuple(static_cast<std::size_t>(out_dim));
    std::int64_t emitted = 0;

    // depth-first with prefix-norm pruning
    auto rec = [&](auto&& self, int level, double prefix_sq) -> void {
        if (level == k) {
            rows.insert(rows.end(), tuple.begin(), tuple.end());
            if (++emitted > cfg.max_points)
                throw BudgetExceeded("power_cloud: output exceeds max_points");
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto p = a[i];
            const double s = prefix_sq + norm2_sq(p);
            if (!(s < w2)) continue;
            std::copy(p.begin(), p.end(), tuple.begin() + static_cast<std::size_t>(level * d));
            self(self, level + 1, s);
        }
    };
    rec(rec, 0, 0.0);
    // rows of a canonical cloud walked in lex order: the tuples are already
    // sorted, rho-separated in sup-norm and inside the window ball
    return PointCloud::from_canonical_rows(out_dim, window, std::move(rows));
}

/// Image values T(x) with |T(x)| < window, deduplicated and sorted.
inline PointCloud apply_linear(const LinearMap& t, const PointCloud& a, double window,
                               const Config& cfg = {}) {
    if (t.arity() != a.dim())
        throw InputError("apply_linear: map arity does not match cloud dimension");
    if (!(window > 0.0)) throw InputError("apply_linear: window must be positive");
    std::vector<double> rows;
    rows.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = t.apply(a[i]);
        if (std::abs(v) < window) rows.push_back(v);
    }
    return PointCloud::from_rows(1, window, std::move(rows), cfg);
}

/// Value set of sum_i c_i e_i over e_i drawn from a 1-d cloud, restricted to
/// |value| < window, without materializing the n-fold power. Columns are
/// folded in descending |coefficient| order (the value set over independent
/// copies is permutation-invariant), keeping an intermediate sum only while
/// it can still reach the final window; the feasible summand range per value
/// is located by binary search, so work tracks output size.
inline PointCloud linear_image_windowed(const PointCloud& e, const LinearMap& t, double window,
                                        const Config& cfg = {}) {
    if (e.dim() != 1) throw InputError("linear_image_windowed: source cloud must be 1-d");
    if (!(window > 0.0)) throw InputError("linear_image_windowed: window must be positive");
    const std::size_t n = static_cast<std::size_t>(t.arity());
    const double src = e.max_norm();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&t](std::size_t a, std::size_t b) {
        return std::abs(t.coefficients[a]) > std::abs(t.coefficients[b]);
    });

    // slack[i] = max |sum of the not-yet-folded columns|
    std::vector<double> slack(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        slack[i] = slack[i + 1] + std::abs(t.coefficients[order[i]]) * src;

    const std::int64_t stage_cap = std::min<std::int64_t>(cfg.max_pairs, 4 * cfg.max_points);
    std::vector<double> vals{0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double c = t.coefficients[order[i]];
        const double bound = window + slack[i + 1];
        std::vector<double> scaled;
        scaled.reserve(e.size());
        for (std::size_t j = 0; j < e.size(); ++j) scaled.push_back(c * e.value(j));
        std::sort(scaled.begin(), scaled.end());

        std::vector<double> next;
        next.reserve(vals.size());
        for (double v : vals) {
            // emit v + s for s in the open interval (-bound - v, bound - v)
            auto lo = std::upper_bound(scaled.begin(), scaled.end(), -bound - v);
            auto hi = std::lower_bound(lo, scaled.end(), bound - v);
            for (auto it = lo; it != hi; ++it) {
                const double s = v + *it;
                if (std::abs(s) < bound) next.push_back(s);
            }
            if (static_cast<std::int64_t>(next.size()) > stage_cap)
                throw BudgetExceeded("linear_image_windowed: fold stage exceeds budget");
        }
        PointCloud stage = PointCloud::from_rows(1, bound, std::move(next), cfg);
        vals.assign(stage.raw().begin(), stage.raw().end());
    }
    return PointCloud::from_rows(1, window, std::move(vals), cfg);
}

}  // namespace coarsedim
