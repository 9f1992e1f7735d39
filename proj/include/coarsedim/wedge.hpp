#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <json.hpp>

#include "qi.hpp"

namespace coarsedim {

// ======================================================
// Wedge geometry
// ======================================================

/// A truncated cone around a unit direction u: points tv with |t| > s and
/// ||v - u|| < eps (both signs of t for the double kind, t > s only for the
/// half-plane kind, which must lie inside the open upper half plane).
struct WedgeSpec {
    enum class Kind { double_wedge, half_plane };

    std::array<double, 2> direction{0.0, 1.0};
    double inner_radius = 1.0;
    double aperture = 0.5;
    Kind kind = Kind::double_wedge;

    void validate(double unit_tol = 1e-12) const {
        const double n = std::hypot(direction[0], direction[1]);
        if (std::abs(n - 1.0) > unit_tol) throw InputError("WedgeSpec: direction must be a unit vector");
        if (!(inner_radius > 0.0)) throw InputError("WedgeSpec: inner radius must be positive");
        if (!(aperture > 0.0)) throw InputError("WedgeSpec: aperture must be positive");
        if (kind == Kind::half_plane) {
            if (!(aperture < 2.0)) throw InputError("WedgeSpec: half-plane aperture must be below 2");
            const double beta = std::atan2(direction[1], direction[0]);
            const double theta = 2.0 * std::asin(aperture / 2.0);
            if (!(beta - theta > 0.0 && beta + theta < std::numbers::pi))
                throw InputError("WedgeSpec: half-plane wedge leaves the upper half plane");
        }
    }
};

/// Membership test. The origin is never inside a wedge (|t| > s > 0).
inline bool wedge_contains(const WedgeSpec& w, double zx, double zy) {
    const double nz = std::hypot(zx, zy);
    if (!(nz > w.inner_radius)) return false;
    const double vx = zx / nz, vy = zy / nz;
    const double dplus = std::hypot(vx - w.direction[0], vy - w.direction[1]);
    if (dplus < w.aperture) return true;
    if (w.kind == WedgeSpec::Kind::double_wedge) {
        const double dminus = std::hypot(vx + w.direction[0], vy + w.direction[1]);
        if (dminus < w.aperture) return true;
    }
    return false;
}

inline bool wedge_contains(const WedgeSpec& w, std::span<const double> z) {
    return wedge_contains(w, z[0], z[1]);
}

/// Orthogonal projection parallel to u, with the fixed orientation
/// u_perp = (u_2, -u_1): T_u(z) = <z, u_perp>. For u = (0,1) this is the
/// first coordinate. 1-Lipschitz, and T_u(tu) = 0.
inline double projection(const std::array<double, 2>& u, double zx, double zy) {
    return zx * u[1] - zy * u[0];
}

inline double projection(const std::array<double, 2>& u, std::span<const double> z) {
    return projection(u, z[0], z[1]);
}

/// Slope constant of the cone picture: around u = (0,1) the double wedge is
/// {(x,y) : |y| > lambda |x|, ||(x,y)|| > s} with lambda = cot(theta) for the
/// half-angle theta = 2*arcsin(eps/2). Defined for eps in (0, sqrt 2); at
/// sqrt 2 the cone reaches the perpendicular and no slope bound survives.
inline double cone_slope_of_aperture(double eps) {
    if (!(eps > 0.0)) throw InputError("cone_slope_of_aperture: aperture must be positive");
    if (!(eps < std::numbers::sqrt2))
        throw ApertureTooWide("cone_slope_of_aperture: aperture " + format_double(eps) +
                              " reaches the perpendicular (needs eps < sqrt 2)");
    const double theta = 2.0 * std::asin(eps / 2.0);
    return std::cos(theta) / std::sin(theta);
}

// ======================================================
// Certificates
// ======================================================

/// Witness that a difference cloud avoids a double wedge, together with the
/// projection bound constants it implies. Valid only for the cloud, window
/// and dedup resolution it was computed on.
struct WedgeCertificate {
    WedgeSpec wedge;
    long long checked_points = 0;
    double cone_slope = 0.0;
    double qi_multiplier = 0.0;  // 1 / (1 + cone_slope)
    double qi_additive = 0.0;    // the inner radius s
    double source_window = 0.0;
    double rho_dedup = 0.0;
    int direction_count = 0;
    int direction_index = 0;
    std::vector<double> s_grid;
    std::vector<double> eps_grid;

    nlohmann::json to_json() const {
        return {{"schema", 1},
                {"type", "wedge"},
                {"direction", {wedge.direction[0], wedge.direction[1]}},
                {"inner_radius", wedge.inner_radius},
                {"aperture", wedge.aperture},
                {"kind", wedge.kind == WedgeSpec::Kind::double_wedge ? "double" : "half_plane"},
                {"checked_points", checked_points},
                {"cone_slope", cone_slope},
                {"qi_multiplier", qi_multiplier},
                {"qi_additive", qi_additive},
                {"source_window", source_window},
                {"rho_dedup", rho_dedup},
                {"direction_count", direction_count},
                {"direction_index", direction_index},
                {"s_grid", s_grid},
                {"eps_grid", eps_grid}};
    }
};

/// Finite-scale density witness: the projected set meets every gap of the
/// target interval down to `max_gap`.
struct DensityCertificate {
    std::array<double, 2> direction{0.0, 1.0};
    double angle = 0.0;
    std::optional<LinearMap> map;  // arity-4 form, when derived from a difference set
    std::array<double, 2> target_interval{0.0, 1.0};
    double resolution = 0.0;  // delta_dense
    double max_gap = 0.0;
    long long witness_count = 0;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"schema", 1},
                            {"type", "density"},
                            {"direction", {direction[0], direction[1]}},
                            {"angle", angle},
                            {"interval", {target_interval[0], target_interval[1]}},
                            {"delta", resolution},
                            {"max_gap", max_gap},
                            {"witness_count", witness_count}};
        if (map) j["map"] = {{"coefficients", map->coefficients}};
        return j;
    }
};

// ======================================================
// Gap measurement
// ======================================================

/// Longest stretch of [a,b] containing no value. Values must be sorted.
inline double max_gap_over_interval(std::span<const double> sorted_values, double a, double b) {
    double best = 0.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (double v : sorted_values) {
        const double lo = std::max(prev, a);
        const double hi = std::min(v, b);
        if (hi > lo) best = std::max(best, hi - lo);
        prev = v;
        if (prev >= b) break;
    }
    const double lo = std::max(prev, a);
    if (b > lo) best = std::max(best, b - lo);
    return best;
}

// ======================================================
// Avoidance search
// ======================================================

struct WedgeAttempt {
    WedgeSpec wedge;
    long long intruders = 0;
};

namespace detail {

// line angle in [0, pi)
inline double line_angle(double x, double y) {
    double a = std::atan2(y, x);
    if (a < 0.0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a -= std::numbers::pi;
    return a;
}

// number of sorted angles in the open interval (lo, hi) on the circle R/pi
inline long long count_in_angle_window(const std::vector<double>& sorted, double lo, double hi) {
    const double pi = std::numbers::pi;
    auto count = [&sorted](double l, double h) {
        auto b = std::upper_bound(sorted.begin(), sorted.end(), l);
        auto e = std::lower_bound(sorted.begin(), sorted.end(), h);
        return static_cast<long long>(e > b ? e - b : 0);
    };
    if (hi - lo >= pi) return static_cast<long long>(sorted.size());
    if (lo < 0.0) return count(lo + pi, pi) + count(-1.0, hi);
    if (hi > pi) return count(lo, pi) + count(-1.0, hi - pi);
    return count(lo, hi);
}

}  // namespace detail

/// Scans double wedges over a direction grid on the upper semicircle times
/// s_grid times eps_grid, widest aperture first, and returns a certificate
/// for the first wedge containing no point of the difference cloud. The
/// fast angular filter is confirmed point-by-point before a certificate is
/// issued. `best` receives the least-intruded wedge seen when no wedge is
/// avoided.
inline std::optional<WedgeCertificate> avoidance_search(const PointCloud& diff, int direction_count,
                                                        std::span<const double> s_grid,
                                                        std::span<const double> eps_grid,
                                                        const Config& cfg = {},
                                                        WedgeAttempt* best = nullptr) {
    if (diff.dim() != 2) throw InputError("avoidance_search: difference cloud must be 2-d");
    if (direction_count < 1 || s_grid.empty() || eps_grid.empty())
        throw InputError("avoidance_search: empty direction or parameter grid");
    for (double e : eps_grid)
        if (!(e > 0.0 && e < std::numbers::sqrt2))
            throw InputError("avoidance_search: apertures must lie in (0, sqrt 2)");
    for (double s : s_grid)
        if (!(s > 0.0)) throw InputError("avoidance_search: inner radii must be positive");

    const std::size_t n = diff.size();
    std::vector<std::pair<double, double>> by_angle(n);  // (angle, norm^2), sorted once
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = diff[i];
        by_angle[i] = {detail::line_angle(p[0], p[1]), norm2_sq(p)};
    }
    std::sort(by_angle.begin(), by_angle.end());

    // sorted angles per inner radius, filtered from the shared order
    std::vector<std::vector<double>> per_s(s_grid.size());
    std::vector<bool> built(s_grid.size(), false);
    auto angles_for = [&](std::size_t si) -> const std::vector<double>& {
        if (!built[si]) {
            const double s2 = s_grid[si] * s_grid[si];
            auto& v = per_s[si];
            for (const auto& [a, n2] : by_angle)
                if (n2 > s2) v.push_back(a);
            built[si] = true;
        }
        return per_s[si];
    };

    std::vector<double> eps_sorted(eps_grid.begin(), eps_grid.end());
    std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());

    const double pi = std::numbers::pi;
    long long best_intruders = std::numeric_limits<long long>::max();
    for (double eps : eps_sorted) {
        const double theta = 2.0 * std::asin(eps / 2.0);
        for (std::size_t si = 0; si < s_grid.size(); ++si) {
            const auto& sorted = angles_for(si);
            for (int j = 0; j < direction_count; ++j) {
                const double beta = pi * static_cast<double>(j) / static_cast<double>(direction_count);
                const long long hits = detail::count_in_angle_window(sorted, beta - theta, beta + theta);
                WedgeSpec w;
                w.direction = {std::cos(beta), std::sin(beta)};
                w.inner_radius = s_grid[si];
                w.aperture = eps;
                w.kind = WedgeSpec::Kind::double_wedge;
                if (hits == 0) {
                    // confirm against the exact membership predicate
                    bool clean = true;
                    for (std::size_t i = 0; i < n && clean; ++i)
                        clean = !wedge_contains(w, diff[i][0], diff[i][1]);
                    if (clean) {
                        WedgeCertificate cert;
                        cert.wedge = w;
                        cert.checked_points = static_cast<long long>(n);
                        cert.cone_slope = cone_slope_of_aperture(eps);
                        cert.qi_multiplier = 1.0 / (1.0 + cert.cone_slope);
                        cert.qi_additive = s_grid[si];
                        cert.source_window = diff.window();
                        cert.rho_dedup = cfg.rho_dedup;
                        cert.direction_count = direction_count;
                        cert.direction_index = j;
                        cert.s_grid.assign(s_grid.begin(), s_grid.end());
                        cert.eps_grid.assign(eps_grid.begin(), eps_grid.end());
                        return cert;
                    }
                }
                if (best && hits < best_intruders) {
                    best_intruders = std::max<long long>(hits, 1);
                    best->wedge = w;
                    best->intruders = best_intruders;
                }
            }
        }
    }
    return std::nullopt;
}

// ======================================================
// Projection bound implied by an avoided wedge
// ======================================================

/// Verifies, over pairs of F, the bound
///   qi_multiplier * ||z - z'|| - s  <=  |T_u z - T_u z'|  <=  ||z - z'||
/// promised by a wedge avoidance certificate for F - F.
inline QiReport qi_from_wedge(const PointCloud& f, const WedgeCertificate& cert, const Config& cfg = {}) {
    if (f.dim() != 2) throw InputError("qi_from_wedge: cloud must be 2-d");
    cert.wedge.validate();
    // every pairwise difference must have been visible to the certificate
    const double diameter_bound = 2.0 * f.max_norm();
    const bool cheap_ok = diameter_bound <= cert.source_window + 1e-9;

    const std::size_t n = f.size();
    const auto& u = cert.wedge.direction;
    std::vector<double> proj(n);
    for (std::size_t i = 0; i < n; ++i) proj[i] = projection(u, f[i]);

    QiReport rep;
    const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const bool sampled = total_pairs > cfg.max_pairs;
    if (sampled && !cheap_ok)
        throw CertificateInvalid("qi_from_wedge: certificate window below cloud diameter bound");

    double max_dist = 0.0;
    detail::ViolationCollector collector(100);
    auto check_pair = [&](std::size_t i, std::size_t j) {
        const double d = std::sqrt(dist_sq(f[i], f[j]));
        max_dist = std::max(max_dist, d);
        const double mid = std::abs(proj[i] - proj[j]);
        const double slack = 1e-9 * (1.0 + d);
        const double lhs = cert.qi_multiplier * d - cert.qi_additive;
        const double excess = std::max(lhs - mid - slack, mid - d - slack);
        if (excess > 0.0) collector.add({i, j, lhs, mid, d, excess});
    };

    if (!sampled) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) check_pair(i, j);
        rep.pairs_checked = total_pairs;
        if (max_dist > cert.source_window + 1e-9)
            throw CertificateInvalid("qi_from_wedge: cloud diameter exceeds certificate window");
    } else {
        rep.exhaustive = false;
        std::uint64_t state = 0x6a09e667f3bcc909ull;
        for (std::int64_t t = 0; t < std::min<std::int64_t>(cfg.max_pairs, 1'000'000); ++t) {
            state = splitmix64(state);
            const std::size_t i = static_cast<std::size_t>(state % n);
            state = splitmix64(state);
            const std::size_t j = static_cast<std::size_t>(state % n);
            if (i == j) continue;
            check_pair(std::min(i, j), std::max(i, j));
            ++rep.pairs_checked;
        }
    }
    rep.violating_pairs = std::move(collector.worst);
    rep.surjectivity_gap = 0.0;  // embedding check only
    rep.holds = rep.violating_pairs.empty();
    return rep;
}

// ======================================================
// Direction scan
// ======================================================

struct ScanResult {
    bool found = false;
    int best_index = -1;
    std::array<double, 2> best_direction{0.0, 1.0};
    double best_gap = std::numeric_limits<double>::infinity();
    long long witness_count = 0;
    int directions_scanned = 0;
    std::optional<DensityCertificate> certificate;
};

/// Projects F along every grid direction on the upper semicircle and measures
/// the largest uncovered stretch of the target interval. Returns the best
/// direction; a certificate when its gap is within delta_dense. With
/// early_accept, the scan stops at the first direction meeting the target
/// (the scan order is fixed, so this is deterministic).
inline ScanResult direction_scan(const PointCloud& f, std::array<double, 2> interval, double delta_dense,
                                 int direction_count, const Config& cfg = {}, bool early_accept = false) {
    if (f.dim() != 2) throw InputError("direction_scan: cloud must be 2-d");
    if (f.empty()) throw InputError("direction_scan: empty cloud");
    if (!(delta_dense > 0.0)) throw InputError("direction_scan: delta must be positive");
    const double a = interval[0], b = interval[1];
    if (!(a < b)) throw InputError("direction_scan: interval must satisfy a < b");
    if (direction_count < 1) throw InputError("direction_scan: need at least one direction");

    const double pi = std::numbers::pi;
    const std::size_t n = f.size();
    const double* xs = f.raw().data();

    struct DirOutcome {
        double gap = std::numeric_limits<double>::infinity();
        long long witnesses = 0;
    };
    auto eval_dir = [&](int j) {
        const double beta = pi * static_cast<double>(j) / static_cast<double>(direction_count);
        const double c0 = std::sin(beta), c1 = -std::cos(beta);
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = xs[2 * i] * c0 + xs[2 * i + 1] * c1;
            if (v >= a - delta_dense && v <= b + delta_dense) vals.push_back(v);
        }
        std::sort(vals.begin(), vals.end());
        DirOutcome out;
        out.gap = max_gap_over_interval(vals, a, b);
        out.witnesses = static_cast<long long>(vals.size());
        return out;
    };

    ScanResult res;
    res.directions_scanned = direction_count;

    auto consider = [&res](int j, const DirOutcome& o) {
        if (o.gap < res.best_gap || (o.gap == res.best_gap && (res.best_index < 0 || j < res.best_index))) {
            res.best_gap = o.gap;
            res.best_index = j;
            res.witness_count = o.witnesses;
        }
    };

    if (cfg.threads > 1 && !early_accept) {
        std::vector<std::pair<int, DirOutcome>> bests(static_cast<std::size_t>(cfg.threads),
                                                      {-1, DirOutcome{}});
        parallel_chunks(direction_count, cfg.threads, [&](int t, std::int64_t lo, std::int64_t hi) {
            for (std::int64_t j = lo; j < hi; ++j) {
                const DirOutcome o = eval_dir(static_cast<int>(j));
                auto& [bj, bo] = bests[static_cast<std::size_t>(t)];
                if (o.gap < bo.gap || (o.gap == bo.gap && (bj < 0 || j < bj))) {
                    bj = static_cast<int>(j);
                    bo = o;
                }
            }
        });
        for (const auto& [j, o] : bests)
            if (j >= 0) consider(j, o);
    } else {
        for (int j = 0; j < direction_count; ++j) {
            const DirOutcome o = eval_dir(j);
            consider(j, o);
            if (early_accept && o.gap <= delta_dense) {
                res.directions_scanned = j + 1;
                break;
            }
        }
    }

    const double beta = pi * static_cast<double>(res.best_index) / static_cast<double>(direction_count);
    res.best_direction = {std::cos(beta), std::sin(beta)};
    res.found = res.best_gap <= delta_dense;
    if (res.found) {
        DensityCertificate cert;
        cert.direction = res.best_direction;
        cert.angle = beta;
        cert.target_interval = interval;
        cert.resolution = delta_dense;
        cert.max_gap = res.best_gap;
        cert.witness_count = res.witness_count;
        res.certificate = cert;
    }
    return res;
}

// ======================================================
// Dichotomy
// ======================================================

struct DichotomyParams {
    int direction_count = 4096;
    std::vector<double> s_grid{1.0, 4.0, 16.0, 64.0};
    std::vector<double> eps_grid{0.8, 0.4, 0.2, 0.1, 0.05};
    double delta_dense = 0.02;
    std::array<double, 2> interval{0.0, 1.0};
};

/// Outcome of the wedge/density dichotomy at a finite window. At finite
/// resolution both branches can fail; the inconclusive case carries the best
/// attempt from each side.
struct DichotomyResult {
    enum class Branch { wedge, density, inconclusive };

    Branch branch = Branch::inconclusive;
    std::optional<WedgeCertificate> wedge_certificate;
    std::optional<QiReport> qi_report;
    std::optional<DensityCertificate> density_certificate;
    std::optional<WedgeAttempt> best_wedge;      // inconclusive only
    double best_scan_gap = std::numeric_limits<double>::infinity();
    std::array<double, 2> best_scan_direction{0.0, 1.0};
    double window = 0.0;
    double effective_rho = 0.0;
    long long diff_points = 0;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"schema", 1},
                            {"window", window},
                            {"rho_dedup", effective_rho},
                            {"diff_points", diff_points}};
        switch (branch) {
            case Branch::wedge: j["branch"] = "wedge"; break;
            case Branch::density: j["branch"] = "density"; break;
            case Branch::inconclusive: j["branch"] = "inconclusive"; break;
        }
        if (wedge_certificate) j["wedge_certificate"] = wedge_certificate->to_json();
        if (qi_report) j["qi_report"] = qi_report->to_json();
        if (density_certificate) j["density_certificate"] = density_certificate->to_json();
        if (branch == Branch::inconclusive) {
            if (best_wedge)
                j["best_wedge"] = {{"direction", {best_wedge->wedge.direction[0], best_wedge->wedge.direction[1]}},
                                   {"inner_radius", best_wedge->wedge.inner_radius},
                                   {"aperture", best_wedge->wedge.aperture},
                                   {"intruders", best_wedge->intruders}};
            j["best_scan_gap"] = best_scan_gap;
            j["best_scan_direction"] = {best_scan_direction[0], best_scan_direction[1]};
        }
        return j;
    }
};

namespace detail {

inline PointCloud coarsen(const PointCloud& pc, double rho, const Config& cfg) {
    Config c = cfg;
    c.rho_dedup = rho;
    std::vector<double> rows(pc.raw());
    return PointCloud::from_rows(pc.dim(), pc.window(), std::move(rows), c);
}

}  // namespace detail

/// Dichotomy for a 1-d cloud E: either E^2 - E^2 avoids a double wedge
/// (projection bound certificate, validated against E^2) or some projected
/// direction is delta-dense on the target interval. E^2 - E^2 = (E - E)^2,
/// so only 1-d pair loops are ever formed. When budgets are exceeded the
/// working resolution is coarsened on a fixed 10x ladder; every surviving
/// point is a genuine member, so certificates stay sound.
inline DichotomyResult dichotomy_cloud(const PointCloud& e1, double window,
                                       const DichotomyParams& params = {}, const Config& cfg = {}) {
    if (e1.dim() != 1) throw InputError("dichotomy: generator must be 1-d");
    if (!(window > 0.0)) throw InputError("dichotomy: window must be positive");

    double rho = cfg.rho_dedup;
    for (int attempt = 0; attempt < 13; ++attempt, rho *= 10.0) {
        Config work = cfg;
        work.rho_dedup = rho;
        PointCloud e = attempt == 0 ? e1 : detail::coarsen(e1, rho, cfg);
        const std::int64_t sz = static_cast<std::int64_t>(e.size());
        if (sz * sz > cfg.max_pairs) continue;
        PointCloud ediff, diff2, f;
        try {
            ediff = difference_cloud(e, e, 2.0 * window, work);
            const std::int64_t m = static_cast<std::int64_t>(ediff.size());
            if (m * m > cfg.max_pairs) continue;
            diff2 = power_cloud(ediff, 2, 2.0 * window, work);
            f = power_cloud(e, 2, window, work);
        } catch (const BudgetExceeded&) {
            continue;
        }

        DichotomyResult res;
        res.window = window;
        res.effective_rho = rho;
        res.diff_points = static_cast<long long>(diff2.size());

        WedgeAttempt best{};
        auto cert = avoidance_search(diff2, params.direction_count, params.s_grid, params.eps_grid, work, &best);
        if (cert) {
            res.branch = DichotomyResult::Branch::wedge;
            res.wedge_certificate = cert;
            res.qi_report = qi_from_wedge(f, *cert, work);
            return res;
        }

        ScanResult scan =
            direction_scan(diff2, params.interval, params.delta_dense, params.direction_count, work, true);
        if (scan.found) {
            res.branch = DichotomyResult::Branch::density;
            DensityCertificate dc = *scan.certificate;
            // S(x, y, x', y') = T_u(x - x', y - y') over four copies of E
            const double c0 = std::sin(dc.angle), c1 = -std::cos(dc.angle);
            dc.map = LinearMap({c0, c1, -c0, -c1});
            res.density_certificate = dc;
            return res;
        }

        res.branch = DichotomyResult::Branch::inconclusive;
        res.best_wedge = best;
        res.best_scan_gap = scan.best_gap;
        res.best_scan_direction = scan.best_direction;
        return res;
    }
    throw BudgetExceeded("dichotomy: no working resolution fits the budgets");
}

inline DichotomyResult dichotomy(const GenPtr& gen, double window, const DichotomyParams& params = {},
                                 const Config& cfg = {}) {
    if (gen->ambient_dim != 1) throw InputError("dichotomy: generator must be 1-d");
    return dichotomy_cloud(enumerate(gen, window, cfg), window, params, cfg);
}

}  // namespace coarsedim
