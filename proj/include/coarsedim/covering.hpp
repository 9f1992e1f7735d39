#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cloud.hpp"
#include "generator.hpp"

namespace coarsedim {

// ======================================================
// Grid-cell count N(X)
// ======================================================

/// Number of distinct closed unit cells prod [k_i, k_i+1] meeting X. A point
/// with an integer coordinate lies on a cell boundary and is counted in every
/// adjacent cell.
inline long long grid_count(const PointCloud& x, double integer_tol = 1e-12) {
    const int d = x.dim();
    std::unordered_set<detail::CellKey, detail::CellKeyHash> cells;
    cells.reserve(x.size() * 2);

    std::array<std::array<std::int64_t, 2>, 8> choices{};
    std::array<int, 8> nchoices{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto p = x[i];
        for (int k = 0; k < d; ++k) {
            const double c = p[static_cast<std::size_t>(k)];
            if (!(std::abs(c) < 4.6e18))
                throw InputError("grid_count: coordinate beyond the cell index range");
            const double r = std::nearbyint(c);
            if (std::abs(c - r) <= integer_tol) {
                const auto m = static_cast<std::int64_t>(r);
                choices[static_cast<std::size_t>(k)] = {m - 1, m};
                nchoices[static_cast<std::size_t>(k)] = 2;
            } else {
                choices[static_cast<std::size_t>(k)] = {static_cast<std::int64_t>(std::floor(c)), 0};
                nchoices[static_cast<std::size_t>(k)] = 1;
            }
        }
        // cartesian walk over boundary-expanded indices (at most 2^d)
        int total = 1;
        for (int k = 0; k < d; ++k) total *= nchoices[static_cast<std::size_t>(k)];
        for (int code = 0; code < total; ++code) {
            detail::CellKey key;
            key.dim = d;
            int c = code;
            for (int k = 0; k < d; ++k) {
                const int pick = c % nchoices[static_cast<std::size_t>(k)];
                c /= nchoices[static_cast<std::size_t>(k)];
                key.idx[static_cast<std::size_t>(k)] =
                    choices[static_cast<std::size_t>(k)][static_cast<std::size_t>(pick)];
            }
            cells.insert(key);
        }
    }
    return static_cast<long long>(cells.size());
}

// ======================================================
// Covering number M(delta, X)
// ======================================================

/// Certified bracket around the covering number. In dimension one the sweep
/// is provably optimal and lower == upper. In higher dimensions `lower` comes
/// from a maximal 2*delta-separated subset (no open delta-ball holds two such
/// points) and `upper` from a greedy cover with centers in X.
struct CoverBracket {
    long long lower = 0;
    long long upper = 0;
    bool exact = false;

    long long value() const { return upper; }
};

namespace detail {

inline std::vector<std::array<std::int64_t, 8>> neighbor_offsets(int dim) {
    std::vector<std::array<std::int64_t, 8>> offsets;
    std::int64_t total = 1;
    for (int i = 0; i < dim; ++i) total *= 3;
    offsets.reserve(static_cast<std::size_t>(total));
    std::array<std::int64_t, 8> cur{};
    for (std::int64_t code = 0; code < total; ++code) {
        std::int64_t c = code;
        for (int i = 0; i < dim; ++i) {
            cur[static_cast<std::size_t>(i)] = (c % 3) - 1;
            c /= 3;
        }
        offsets.push_back(cur);
    }
    return offsets;
}

inline long long cover_exact_1d(const PointCloud& x, double delta) {
    // left-to-right sweep: one open delta-ball covers a value group of span
    // strictly below 2*delta; a point at exactly v+2*delta needs a new ball
    const auto& v = x.raw();
    long long count = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        ++count;
        const double reach = v[i] + 2.0 * delta;
        i = static_cast<std::size_t>(std::lower_bound(v.begin() + static_cast<std::ptrdiff_t>(i), v.end(), reach) -
                                     v.begin());
    }
    return count;
}

// greedy maximal 2*delta-separated subset, canonical order
inline long long separated_lower_bound(const PointCloud& x, double delta) {
    const int d = x.dim();
    const double sep = 2.0 * delta;
    const double sep2 = sep * sep;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> grid;
    std::vector<std::uint32_t> chosen;
    std::vector<std::array<std::int64_t, 8>> offsets = neighbor_offsets(d);
    long long count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto p = x[i];
        const CellKey base = cell_of(p, sep);
        bool blocked = false;
        for (const auto& off : offsets) {
            CellKey k = base;
            for (int t = 0; t < d; ++t) k.idx[static_cast<std::size_t>(t)] += off[static_cast<std::size_t>(t)];
            auto it = grid.find(k);
            if (it == grid.end()) continue;
            for (std::uint32_t ci : it->second) {
                if (dist_sq(p, x[ci]) < sep2) { blocked = true; break; }
            }
            if (blocked) break;
        }
        if (blocked) continue;
        grid[base].push_back(static_cast<std::uint32_t>(i));
        ++count;
    }
    return count;
}

// greedy cover, centers in X: farthest-point traversal for small clouds,
// first-uncovered sweep with a spatial hash for large ones
inline long long greedy_upper_bound(const PointCloud& x, double delta, const Config& cfg) {
    const int d = x.dim();
    const std::size_t n = x.size();
    if (n == 0) return 0;
    const double d2 = delta * delta;

    if (static_cast<std::int64_t>(n) <= cfg.farthest_point_cap) {
        std::vector<double> dist(n, std::numeric_limits<double>::infinity());
        long long count = 0;
        std::size_t next = 0;
        while (true) {
            ++count;
            const auto c = x[next];
            for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], dist_sq(x[i], c));
            std::size_t arg = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] > best) { best = dist[i]; arg = i; }
            }
            if (best < d2) break;
            next = arg;
        }
        return count;
    }

    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> centers;
    std::vector<std::array<std::int64_t, 8>> offsets = neighbor_offsets(d);
    long long count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = x[i];
        const CellKey base = cell_of(p, delta);
        bool covered = false;
        for (const auto& off : offsets) {
            CellKey k = base;
            for (int t = 0; t < d; ++t) k.idx[static_cast<std::size_t>(t)] += off[static_cast<std::size_t>(t)];
            auto it = centers.find(k);
            if (it == centers.end()) continue;
            for (std::uint32_t ci : it->second) {
                if (dist_sq(p, x[ci]) < d2) { covered = true; break; }
            }
            if (covered) break;
        }
        if (covered) continue;
        centers[base].push_back(static_cast<std::uint32_t>(i));
        ++count;
    }
    return count;
}

}  // namespace detail

/// Covering number of X by open delta-balls (centers unrestricted).
inline CoverBracket cover_count(const PointCloud& x, double delta, const Config& cfg = {}) {
    if (!(delta > 0.0)) throw InputError("cover_count: delta must be positive");
    if (x.empty()) return {0, 0, true};
    if (x.dim() == 1) {
        const long long m = detail::cover_exact_1d(x, delta);
        return {m, m, true};
    }
    CoverBracket b;
    b.lower = detail::separated_lower_bound(x, delta);
    b.upper = detail::greedy_upper_bound(x, delta, cfg);
    b.exact = (b.lower == b.upper);
    return b;
}

// ======================================================
// Constants ledger (derivations in CONSTANTS.md)
// ======================================================

/// K(d) = 3^d: a unit ball meets at most 3^d unit cells, and a ball of radius
/// R >= delta is covered by at most (3R/delta)^d open delta-balls.
inline double comparability_constant(int dim) { return std::pow(3.0, dim); }

/// L(n, m) = 6^(n+m), sufficient for both product-covering directions.
inline double product_constant(int n, int m) { return std::pow(6.0, n + m); }

// ======================================================
// Count tables and dimension estimates
// ======================================================

struct CountRow {
    double radius = 0.0;
    long long grid = 0;
    long long cover_lower = 0;
    long long cover_upper = 0;
    double delta = 1.0;
};

struct CountTable {
    std::vector<CountRow> rows;

    std::string to_csv() const {
        std::string out = "r,grid_count,cover_lower,cover_upper,delta\n";
        for (const auto& r : rows) {
            out += format_double(r.radius) + "," + std::to_string(r.grid) + "," +
                   std::to_string(r.cover_lower) + "," + std::to_string(r.cover_upper) + "," +
                   format_double(r.delta) + "\n";
        }
        return out;
    }
};

struct DimensionEstimate {
    double slope_ols = 0.0;
    double slope_tail = 0.0;
    CountTable counts;
    std::vector<double> radii;

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : counts.rows) {
            rows.push_back({{"r", r.radius},
                            {"grid_count", r.grid},
                            {"cover_lower", r.cover_lower},
                            {"cover_upper", r.cover_upper},
                            {"delta", r.delta}});
        }
        return {{"schema", 1},
                {"slope_ols", slope_ols},
                {"slope_tail", slope_tail},
                {"rows", rows}};
    }
};

namespace detail {

inline void validate_radii(std::span<const double> radii) {
    if (radii.size() < 2) throw InputError("radii schedule needs at least 2 entries");
    double prev = 1.0;
    for (double r : radii) {
        if (!(r > 1.0)) throw InputError("radii must all exceed 1");
        if (!(r > prev)) throw InputError("radii must be strictly increasing");
        prev = r;
    }
}

template <typename CloudAt>
DimensionEstimate estimate_with(CloudAt&& cloud_at, std::span<const double> radii, const Config& cfg) {
    validate_radii(radii);
    DimensionEstimate est;
    est.radii.assign(radii.begin(), radii.end());
    std::vector<std::pair<double, double>> fit;  // (log r, log N)
    for (double r : radii) {
        const PointCloud pc = cloud_at(r);
        CountRow row;
        row.radius = r;
        row.grid = grid_count(pc, cfg.integer_cell_tol);
        const CoverBracket cb = cover_count(pc, 1.0, cfg);
        row.cover_lower = cb.lower;
        row.cover_upper = cb.upper;
        row.delta = 1.0;
        est.counts.rows.push_back(row);
        if (row.grid > 0) fit.emplace_back(std::log(r), std::log(static_cast<double>(row.grid)));
    }
    if (fit.size() < 2) throw InsufficientData("dimension estimate: fewer than 2 rows with nonzero counts");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [lx, ly] : fit) {
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(fit.size());
    est.slope_ols = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const auto& [x1, y1] = fit[fit.size() - 2];
    const auto& [x2, y2] = fit[fit.size() - 1];
    est.slope_tail = (y2 - y1) / (x2 - x1);
    return est;
}

}  // namespace detail

/// Log-log slope of the grid count of B(r) ∩ gen over the radii schedule.
/// slope_ols is the least-squares fit; slope_tail uses only the last step.
inline DimensionEstimate dimension_estimate(const SetGenerator& gen, std::span<const double> radii,
                                            const Config& cfg = {}) {
    return detail::estimate_with([&](double r) { return enumerate(gen, r, cfg); }, radii, cfg);
}

inline DimensionEstimate dimension_estimate(const GenPtr& gen, std::span<const double> radii,
                                            const Config& cfg = {}) {
    return dimension_estimate(*gen, radii, cfg);
}

/// Same estimate over nested truncations of an already-enumerated cloud.
inline DimensionEstimate dimension_estimate_cloud(const PointCloud& pc, std::span<const double> radii,
                                                  const Config& cfg = {}) {
    return detail::estimate_with([&](double r) { return pc.restrict_to(r); }, radii, cfg);
}

/// Dyadic schedule 2^lo .. 2^hi.
inline std::vector<double> dyadic_radii(int lo, int hi) {
    if (lo > hi) throw InputError("dyadic radii: empty range");
    std::vector<double> r;
    for (int a = lo; a <= hi; ++a) r.push_back(std::ldexp(1.0, a));
    return r;
}

// ======================================================
// Fact checks
// ======================================================

enum class Verdict { pass, fail, inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace detail {

// A <= B under bracket uncertainty: certain only when the brackets separate.
inline Verdict bracket_le(double a_lo, double a_hi, double b_lo, double b_hi) {
    if (a_hi <= b_lo) return Verdict::pass;
    if (a_lo > b_hi) return Verdict::fail;
    return Verdict::inconclusive;
}

}  // namespace detail

struct InequalityCheck {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    double lhs_lo = 0, lhs_hi = 0, rhs_lo = 0, rhs_hi = 0;
};

/// Scale-comparison and product chains for covering numbers, evaluated with
/// certified brackets; bracket overlap yields `inconclusive`, never `fail`.
struct FactMetric0Report {
    std::vector<InequalityCheck> checks;
    double constant_k = 0.0;
    double constant_l = 0.0;

    bool any_hard_failure() const {
        for (const auto& c : checks)
            if (c.verdict == Verdict::fail) return true;
        return false;
    }
    int inconclusive_count() const {
        int n = 0;
        for (const auto& c : checks) n += (c.verdict == Verdict::inconclusive) ? 1 : 0;
        return n;
    }
};

inline FactMetric0Report check_fact_metric0(const PointCloud& x, const PointCloud& y, double delta,
                                            double delta_prime, const Config& cfg = {}) {
    if (!(0.0 < delta && delta < delta_prime))
        throw InputError("check_fact_metric0: need 0 < delta < delta_prime");

    FactMetric0Report rep;
    const int n = x.dim();
    rep.constant_k = comparability_constant(n);
    rep.constant_l = product_constant(x.dim(), y.dim());

    const CoverBracket mx_d = cover_count(x, delta, cfg);
    const CoverBracket mx_dp = cover_count(x, delta_prime, cfg);
    const CoverBracket my_d = cover_count(y, delta, cfg);

    auto add = [&rep](const std::string& name, double alo, double ahi, double blo, double bhi) {
        InequalityCheck c;
        c.name = name;
        c.lhs_lo = alo;
        c.lhs_hi = ahi;
        c.rhs_lo = blo;
        c.rhs_hi = bhi;
        c.verdict = detail::bracket_le(alo, ahi, blo, bhi);
        rep.checks.push_back(c);
    };

    // M(d', X) <= M(d, X) <= K (d'/d)^n M(d', X)
    add("anti-monotone", static_cast<double>(mx_dp.lower), static_cast<double>(mx_dp.upper),
        static_cast<double>(mx_d.lower), static_cast<double>(mx_d.upper));
    const double scale = rep.constant_k * std::pow(delta_prime / delta, n);
    add("scale-comparison", static_cast<double>(mx_d.lower), static_cast<double>(mx_d.upper),
        scale * static_cast<double>(mx_dp.lower), scale * static_cast<double>(mx_dp.upper));

    // L^-1 M(d,X) M(d,Y) <= M(d, XxY) <= L M(d,X) M(d,Y)
    std::vector<double> rows;
    const std::int64_t prod_pairs = static_cast<std::int64_t>(x.size()) * static_cast<std::int64_t>(y.size());
    if (prod_pairs > cfg.max_pairs) throw BudgetExceeded("check_fact_metric0: product cloud exceeds max_pairs");
    rows.reserve(static_cast<std::size_t>(prod_pairs) * static_cast<std::size_t>(x.dim() + y.dim()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto px = x[i];
        for (std::size_t j = 0; j < y.size(); ++j) {
            const auto py = y[j];
            rows.insert(rows.end(), px.begin(), px.end());
            rows.insert(rows.end(), py.begin(), py.end());
        }
    }
    const double pw = std::hypot(x.window(), y.window());
    const PointCloud xy = PointCloud::from_rows(x.dim() + y.dim(), pw, std::move(rows), cfg);
    const CoverBracket mxy = cover_count(xy, delta, cfg);

    const double plo = static_cast<double>(mx_d.lower) * static_cast<double>(my_d.lower);
    const double phi = static_cast<double>(mx_d.upper) * static_cast<double>(my_d.upper);
    add("product-lower", plo / rep.constant_l, phi / rep.constant_l, static_cast<double>(mxy.lower),
        static_cast<double>(mxy.upper));
    add("product-upper", static_cast<double>(mxy.lower), static_cast<double>(mxy.upper),
        rep.constant_l * plo, rep.constant_l * phi);
    return rep;
}

/// Compares the estimated dimension of gen^k against k times the estimate
/// for gen.
struct FactMetric1Report {
    double slope_base = 0.0;
    double slope_power = 0.0;
    int k = 1;
    double tolerance = 0.0;
    bool within = false;
};

inline FactMetric1Report check_fact_metric1(const GenPtr& gen, int k, std::span<const double> radii,
                                            const Config& cfg = {}) {
    if (k < 1) throw InputError("check_fact_metric1: k must be >= 1");
    FactMetric1Report rep;
    rep.k = k;
    rep.slope_base = dimension_estimate(gen, radii, cfg).slope_ols;
    rep.slope_power = dimension_estimate(SetGenerator::power_of(gen, k), radii, cfg).slope_ols;
    rep.tolerance = cfg.fit_tolerance * static_cast<double>(k);
    rep.within = std::abs(rep.slope_power - static_cast<double>(k) * rep.slope_base) <= rep.tolerance;
    return rep;
}

}  // namespace coarsedim
