#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sexpr.hpp"
#include "wedge.hpp"

namespace coarsedim {

// ======================================================
// Dimension amplification driver
// ======================================================

struct IterationRecord {
    int iteration = 0;
    std::string branch;  // "wedge" | "density" | "inconclusive"
    int arity_before = 0;
    int arity_after = 0;
    double slope_ols = 0.0;
    double slope_tail = 0.0;
    double scan_angle = 0.0;     // density branch
    double wedge_angle = 0.0;    // wedge branch
    double effective_rho = 0.0;
};

/// Working state of the driver: the current map T (the working set is
/// T(E^n)), its dimension history and the per-iteration certificates.
struct AmplificationState {
    LinearMap current_map{std::vector<double>{1.0}};
    int iterations_run = 0;
    std::vector<DimensionEstimate> dim_history;
    std::vector<IterationRecord> log;
    bool inconclusive = false;

    double max_slope() const {
        double m = 0.0;
        for (const auto& d : dim_history) m = std::max(m, d.slope_ols);
        return m;
    }
};

struct AmplifyParams {
    int direction_count = 4096;
    std::vector<double> s_grid{1.0, 4.0, 16.0, 64.0};
    std::vector<double> eps_grid{0.8, 0.4, 0.2, 0.1, 0.05};
    std::array<double, 2> interval{0.0, 1.0};
    int max_arity = 16;
};

struct AmplifyOutcome {
    bool certified = false;
    std::optional<DensityCertificate> certificate;  // with the composed map
    AmplificationState state;
    double window = 0.0;
    double delta_dense = 0.0;
    double effective_rho = 0.0;

    nlohmann::json to_json(const std::string& generator_expr) const {
        nlohmann::json prov = nlohmann::json::array();
        for (const auto& r : state.log) {
            prov.push_back({{"iteration", r.iteration},
                            {"branch", r.branch},
                            {"arity_before", r.arity_before},
                            {"arity_after", r.arity_after},
                            {"slope_ols", r.slope_ols},
                            {"slope_tail", r.slope_tail},
                            {"scan_angle", r.scan_angle},
                            {"wedge_angle", r.wedge_angle},
                            {"rho_dedup", r.effective_rho}});
        }
        nlohmann::json j = {{"schema", 1},
                            {"type", "density"},
                            {"certified", certified},
                            {"generator", generator_expr},
                            {"window", window},
                            {"delta", delta_dense},
                            {"rho_dedup", effective_rho},
                            {"iterations", state.iterations_run},
                            {"inconclusive", state.inconclusive},
                            {"provenance", prov}};
        if (certificate) {
            j["map"] = {{"coefficients", certificate->map ? certificate->map->coefficients
                                                          : std::vector<double>{}}};
            j["interval"] = {certificate->target_interval[0], certificate->target_interval[1]};
            j["max_gap"] = certificate->max_gap;
            j["witness_count"] = certificate->witness_count;
            j["angle"] = certificate->angle;
        }
        return j;
    }
};

namespace detail {

// compose the dichotomy's arity-4 form with the current map: the working set
// is T(E^n), so S(f, g, f', g') expands to coefficients over 4n copies of E
inline LinearMap compose_density(const LinearMap& t, double c0, double c1) {
    std::vector<double> out;
    out.reserve(t.coefficients.size() * 4);
    for (double s : {c0, c1, -c0, -c1})
        for (double c : t.coefficients) out.push_back(s * c);
    return LinearMap(std::move(out)).simplified();
}

inline LinearMap compose_projection(const LinearMap& t, double c0, double c1) {
    std::vector<double> out;
    out.reserve(t.coefficients.size() * 2);
    for (double s : {c0, c1})
        for (double c : t.coefficients) out.push_back(s * c);
    return LinearMap(std::move(out)).simplified();
}

inline std::vector<double> amplify_radii(double window) {
    const int hi = std::max(4, static_cast<int>(std::floor(std::log2(window))));
    return dyadic_radii(3, hi);
}

/// Image values of the map over the source cloud, windowed to the target
/// interval plus slack; used both when issuing and when replaying a density
/// certificate so the two paths agree bit for bit.
inline PointCloud replay_values(const PointCloud& e, const LinearMap& map,
                                std::array<double, 2> interval, double delta, const Config& cfg) {
    const double wimg = std::max(std::abs(interval[0]), std::abs(interval[1])) + delta + 1.0;
    return linear_image_windowed(e, map, wimg, cfg);
}

}  // namespace detail

/// Runs the amplification loop: form the working 1-d set F = T(E^n), apply
/// the dichotomy; a density branch composes the arity-4 form with T and
/// returns a replayed certificate, a wedge branch composes the projection
/// with T (doubling the arity) and iterates. Stops at max_iterations, on an
/// inconclusive dichotomy, or when composition would exceed the arity budget.
inline AmplifyOutcome amplify(const GenPtr& gen, double window, int max_iterations, double delta_dense,
                              const AmplifyParams& params = {}, const Config& cfg = {}) {
    if (gen->ambient_dim != 1) throw InputError("amplify: generator must be 1-d");
    if (max_iterations < 1) throw InputError("amplify: max_iterations must be >= 1");
    if (!(delta_dense > 0.0)) throw InputError("amplify: delta must be positive");

    // working resolution ladder: coarsen until enumeration and the fold
    // stages fit the budgets; survivors are genuine members, so certificates
    // computed downstream remain sound (the dichotomy coarsens its own
    // difference stage independently)
    double rho = cfg.rho_dedup;
    for (int attempt = 0; attempt < 13; ++attempt, rho *= 10.0) {
        Config work = cfg;
        work.rho_dedup = rho;
        PointCloud e;
        try {
            e = enumerate(gen, window, work);
        } catch (const BudgetExceeded&) {
            continue;
        }

        AmplifyOutcome out;
        out.window = window;
        out.delta_dense = delta_dense;
        out.effective_rho = rho;

        DichotomyParams dparams;
        dparams.direction_count = params.direction_count;
        dparams.s_grid = params.s_grid;
        dparams.eps_grid = params.eps_grid;
        dparams.delta_dense = delta_dense;
        dparams.interval = params.interval;

        const std::vector<double> radii = detail::amplify_radii(window);
        bool restart_ladder = false;

        for (int iter = 1; iter <= max_iterations; ++iter) {
            PointCloud f;
            try {
                const auto& t = out.state.current_map;
                const bool identity = t.arity() == 1 && t.coefficients[0] == 1.0;
                f = identity ? e : linear_image_windowed(e, t, window, work);
            } catch (const BudgetExceeded&) {
                restart_ladder = true;
                break;
            }

            IterationRecord rec;
            rec.iteration = iter;
            rec.arity_before = out.state.current_map.arity();
            rec.effective_rho = rho;

            DimensionEstimate dims = dimension_estimate_cloud(f, radii, work);
            rec.slope_ols = dims.slope_ols;
            rec.slope_tail = dims.slope_tail;
            out.state.dim_history.push_back(dims);

            DichotomyResult dich = dichotomy_cloud(f, window, dparams, work);
            out.state.iterations_run = iter;

            if (dich.branch == DichotomyResult::Branch::density) {
                const DensityCertificate& dc = *dich.density_certificate;
                const double c0 = std::sin(dc.angle), c1 = -std::cos(dc.angle);
                LinearMap final_map = detail::compose_density(out.state.current_map, c0, c1);
                if (final_map.arity() > params.max_arity)
                    throw BudgetExceeded("amplify: composed arity " + std::to_string(final_map.arity()) +
                                         " exceeds the arity budget");
                rec.branch = "density";
                rec.scan_angle = dc.angle;
                rec.arity_after = final_map.arity();
                out.state.log.push_back(rec);

                // replay on a fresh image of E before certifying
                const PointCloud vals = detail::replay_values(e, final_map, params.interval, delta_dense, work);
                DensityCertificate cert = dc;
                cert.map = final_map;
                cert.max_gap =
                    max_gap_over_interval(vals.raw(), params.interval[0], params.interval[1]);
                cert.witness_count = static_cast<long long>(vals.size());
                cert.target_interval = params.interval;
                cert.resolution = delta_dense;
                out.certificate = cert;
                out.certified = cert.max_gap <= delta_dense;
                out.state.inconclusive = !out.certified;
                return out;
            }

            if (dich.branch == DichotomyResult::Branch::wedge) {
                const auto& u = dich.wedge_certificate->wedge.direction;
                const double c0 = u[1], c1 = -u[0];  // u_perp
                LinearMap next = detail::compose_projection(out.state.current_map, c0, c1);
                if (next.arity() > params.max_arity)
                    throw BudgetExceeded("amplify: composed arity " + std::to_string(next.arity()) +
                                         " exceeds the arity budget");
                rec.branch = "wedge";
                rec.wedge_angle = std::atan2(u[1], u[0]);
                rec.arity_after = next.arity();
                out.state.log.push_back(rec);
                out.state.current_map = next;
                continue;
            }

            rec.branch = "inconclusive";
            rec.arity_after = rec.arity_before;
            out.state.log.push_back(rec);
            out.state.inconclusive = true;
            return out;
        }
        if (restart_ladder) continue;
        return out;  // every iteration took the wedge branch: exhausted
    }
    throw BudgetExceeded("amplify: no working resolution fits the budgets");
}

// ======================================================
// Certificate replay
// ======================================================

struct VerifyResult {
    bool pass = false;
    std::string reason;
    double recomputed_gap = std::numeric_limits<double>::infinity();
};

/// Replays a serialized certificate from scratch: re-enumerates the embedded
/// generator at the recorded window and resolution and recomputes the
/// quantity the certificate claims.
inline VerifyResult verify_certificate(const nlohmann::json& j, const Config& cfg = {}) {
    VerifyResult res;
    if (!j.contains("schema") || j["schema"] != 1) {
        res.reason = "unknown schema";
        return res;
    }
    if (!j.contains("generator") || !j.contains("window")) {
        res.reason = "certificate lacks generator or window";
        return res;
    }
    GenPtr gen = parse_generator(j["generator"].get<std::string>());
    const double window = j["window"].get<double>();
    Config work = cfg;
    if (j.contains("rho_dedup")) work.rho_dedup = j["rho_dedup"].get<double>();

    // density certificates carry a linear map over copies of E
    if (j.contains("map")) {
        const auto coeffs = j["map"]["coefficients"].get<std::vector<double>>();
        if (coeffs.empty()) {
            res.reason = "empty coefficient vector";
            return res;
        }
        LinearMap map(coeffs);
        if (!map.nonzero()) {
            res.reason = "zero map cannot witness density";
            return res;
        }
        const auto interval = j["interval"].get<std::vector<double>>();
        const double delta = j["delta"].get<double>();
        const PointCloud e = enumerate(gen, window, work);
        const PointCloud vals =
            detail::replay_values(e, map, {interval[0], interval[1]}, delta, work);
        res.recomputed_gap = max_gap_over_interval(vals.raw(), interval[0], interval[1]);
        if (res.recomputed_gap > delta) {
            res.reason = "recomputed max gap " + format_double(res.recomputed_gap) +
                         " exceeds delta " + format_double(delta);
            return res;
        }
        if (j.contains("max_gap")) {
            const double stored = j["max_gap"].get<double>();
            if (std::abs(stored - res.recomputed_gap) > 1e-9) {
                res.reason = "stored max gap does not match replay";
                return res;
            }
        }
        res.pass = true;
        res.reason = "density replay ok";
        return res;
    }

    // wedge-branch dichotomy output: re-check the avoidance claim
    if (j.contains("wedge_certificate")) {
        const auto& wc = j["wedge_certificate"];
        WedgeSpec w;
        w.direction = {wc["direction"][0].get<double>(), wc["direction"][1].get<double>()};
        w.inner_radius = wc["inner_radius"].get<double>();
        w.aperture = wc["aperture"].get<double>();
        w.kind = WedgeSpec::Kind::double_wedge;
        w.validate();
        const PointCloud e = enumerate(gen, window, work);
        const PointCloud ediff = difference_cloud(e, e, 2.0 * window, work);
        const PointCloud diff2 = power_cloud(ediff, 2, 2.0 * window, work);
        for (std::size_t i = 0; i < diff2.size(); ++i) {
            if (wedge_contains(w, diff2[i][0], diff2[i][1])) {
                res.reason = "difference point inside the certified wedge";
                return res;
            }
        }
        res.pass = true;
        res.recomputed_gap = 0.0;
        res.reason = "wedge replay ok";
        return res;
    }

    res.reason = "certificate carries neither a map nor a wedge";
    return res;
}

// ======================================================
// Coordinate-projection dimension bound
// ======================================================

/// Estimates dim of Z and of each coordinate projection and checks the
/// product-subadditivity bound dim(Z) <= sum_k dim(pi_k Z) + tol * n.
struct ProjectionBoundReport {
    double dim_z = 0.0;
    std::vector<double> dim_projections;
    double bound = 0.0;
    double tolerance_total = 0.0;
    bool satisfied = false;
};

inline ProjectionBoundReport coordinate_projection_bound(const GenPtr& gen, std::span<const double> radii,
                                                         const Config& cfg = {}) {
    const int d = gen->ambient_dim;
    if (d < 2) throw InputError("coordinate_projection_bound: ambient dimension must be >= 2");
    detail::validate_radii(radii);

    std::vector<std::vector<std::pair<double, double>>> fits(static_cast<std::size_t>(d) + 1);
    for (double r : radii) {
        const PointCloud z = enumerate(gen, r, cfg);
        const long long gz = grid_count(z, cfg.integer_cell_tol);
        if (gz > 0) fits[0].emplace_back(std::log(r), std::log(static_cast<double>(gz)));
        for (int k = 0; k < d; ++k) {
            std::vector<double> coords;
            coords.reserve(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) coords.push_back(z[i][static_cast<std::size_t>(k)]);
            const PointCloud pk = PointCloud::from_rows(1, r, std::move(coords), cfg);
            const long long g = grid_count(pk, cfg.integer_cell_tol);
            if (g > 0)
                fits[static_cast<std::size_t>(k) + 1].emplace_back(std::log(r),
                                                                   std::log(static_cast<double>(g)));
        }
    }

    auto ols = [](const std::vector<std::pair<double, double>>& pts) {
        if (pts.size() < 2) throw InsufficientData("projection bound: fewer than 2 usable rows");
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(pts.size());
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    ProjectionBoundReport rep;
    rep.dim_z = ols(fits[0]);
    double sum = 0.0;
    for (int k = 0; k < d; ++k) {
        rep.dim_projections.push_back(ols(fits[static_cast<std::size_t>(k) + 1]));
        sum += rep.dim_projections.back();
    }
    rep.tolerance_total = cfg.fit_tolerance * static_cast<double>(d);
    rep.bound = sum + rep.tolerance_total;
    rep.satisfied = rep.dim_z <= rep.bound;
    return rep;
}

}  // namespace coarsedim
