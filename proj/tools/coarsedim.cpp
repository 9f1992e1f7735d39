// coarsedim: coarse Minkowski dimension estimates, wedge-avoidance and
// density certificates for symbolically generated point sets.
//
// Exit codes: 0 success, 1 inconclusive / failed verification,
//             2 input error, 3 budget exceeded.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include <coarsedim/amplify.hpp>
#include <coarsedim/cli_config.hpp>
#include <coarsedim/cloud_io.hpp>

namespace {

using namespace coarsedim;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInconclusive = 1;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content << "\n";
    } else {
        atomic_write(out_path, content);
    }
}

json config_echo(const Config& cfg) {
    return {{"rho_dedup", cfg.rho_dedup},
            {"max_points", cfg.max_points},
            {"max_pairs", cfg.max_pairs},
            {"fit_tolerance", cfg.fit_tolerance},
            {"threads", cfg.threads}};
}

struct CommonArgs {
    std::string gen_expr;
    std::string out_path;
    std::string csv_path;
    double rho = 1e-9;
    int threads = 1;
    std::uint64_t seed = 0;
};

int run_dim(const CommonArgs& common, const std::string& radii_spec, const Config& base) {
    Config cfg = base;
    GenPtr gen = parse_generator(common.gen_expr);
    const std::vector<double> radii = parse_radii(radii_spec);
    DimensionEstimate est;
    try {
        est = dimension_estimate(gen, radii, cfg);
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    json j = est.to_json();
    j["generator"] = common.gen_expr;
    j["config"] = config_echo(cfg);
    j["radii"] = radii;
    emit(common.out_path, j.dump(2));
    if (!common.csv_path.empty()) atomic_write(common.csv_path, est.counts.to_csv());
    std::cerr << "slope_ols=" << format_double(est.slope_ols)
              << " slope_tail=" << format_double(est.slope_tail) << "\n";
    return kExitOk;
}

int run_wedge(const CommonArgs& common, double window, const DichotomyParams& params, const Config& base) {
    Config cfg = base;
    GenPtr gen = parse_generator(common.gen_expr);
    DichotomyResult res = dichotomy(gen, window, params, cfg);
    json j = res.to_json();
    j["generator"] = common.gen_expr;
    j["config"] = config_echo(cfg);
    j["direction_count"] = params.direction_count;
    j["delta"] = params.delta_dense;
    emit(common.out_path, j.dump(2));
    switch (res.branch) {
        case DichotomyResult::Branch::wedge:
            std::cerr << "wedge branch: aperture " << format_double(res.wedge_certificate->wedge.aperture)
                      << ", inner radius " << format_double(res.wedge_certificate->wedge.inner_radius) << "\n";
            return kExitOk;
        case DichotomyResult::Branch::density:
            std::cerr << "density branch: max gap "
                      << format_double(res.density_certificate->max_gap) << "\n";
            return kExitOk;
        case DichotomyResult::Branch::inconclusive:
            std::cerr << "inconclusive at this window\n";
            return kExitInconclusive;
    }
    return kExitOk;
}

int run_amplify(const CommonArgs& common, double window, int max_iterations, double delta,
                const AmplifyParams& params, const Config& base) {
    Config cfg = base;
    GenPtr gen = parse_generator(common.gen_expr);
    AmplifyOutcome out = amplify(gen, window, max_iterations, delta, params, cfg);
    json j = out.to_json(common.gen_expr);
    j["config"] = config_echo(cfg);
    emit(common.out_path, j.dump(2));
    if (out.certified) {
        std::cerr << "density certificate: arity " << out.certificate->map->arity() << ", max gap "
                  << format_double(out.certificate->max_gap) << "\n";
        return kExitOk;
    }
    std::cerr << "no density certificate after " << out.state.iterations_run << " iteration(s)\n";
    return kExitInconclusive;
}

int run_verify(const std::string& cert_path, const Config& base) {
    std::ifstream is(cert_path);
    if (!is) {
        std::cerr << "error: cannot open " << cert_path << "\n";
        return kExitInput;
    }
    json j = json::parse(is, nullptr, false);
    if (j.is_discarded()) {
        std::cerr << "error: " << cert_path << " is not valid JSON\n";
        return kExitInput;
    }
    VerifyResult res = verify_certificate(j, base);
    std::cout << (res.pass ? "PASS" : "FAIL") << ": " << res.reason << "\n";
    return res.pass ? kExitOk : kExitInconclusive;
}

int run_enum(const CommonArgs& common, double radius, const Config& base) {
    Config cfg = base;
    GenPtr gen = parse_generator(common.gen_expr);
    const PointCloud pc = enumerate(gen, radius, cfg);
    emit(common.out_path, cloud_to_string(pc));
    std::cerr << pc.size() << " points\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse Minkowski dimension and projection-certificate toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    Config base = coarsedim::config_from_env();

    auto add_common = [&](CLI::App* cmd, bool needs_gen = true) {
        if (needs_gen)
            cmd->add_option("--gen", common.gen_expr, "generator s-expression, e.g. \"(integers)\"")
                ->required();
        cmd->add_option("--out", common.out_path, "output path (stdout when omitted)");
        cmd->add_option("--rho", common.rho, "dedup resolution")->default_val(1e-9);
        cmd->add_option("--threads", common.threads, "worker threads for scans")->default_val(1);
        cmd->add_option("--seed", common.seed, "seed for sampled checks")->default_val(0);
    };

    // dim
    auto* dim = app.add_subcommand("dim", "estimate the coarse Minkowski dimension");
    std::string radii_spec = "dyadic:6..16";
    add_common(dim);
    dim->add_option("--radii", radii_spec, "schedule: dyadic:A..B or comma list");
    dim->add_option("--csv", common.csv_path, "also write the count table as CSV");

    // wedge
    auto* wedge = app.add_subcommand("wedge", "run the wedge/density dichotomy");
    double window = 500.0;
    DichotomyParams dparams;
    std::string s_grid_spec, eps_grid_spec, interval_spec;
    add_common(wedge);
    wedge->add_option("--window", window, "enumeration window")->default_val(500.0);
    wedge->add_option("--directions", dparams.direction_count, "direction grid size")->default_val(4096);
    wedge->add_option("--delta", dparams.delta_dense, "density resolution")->default_val(0.02);
    wedge->add_option("--s-grid", s_grid_spec, "inner radii, comma list");
    wedge->add_option("--eps-grid", eps_grid_spec, "apertures, comma list");
    wedge->add_option("--interval", interval_spec, "target interval a,b");

    // amplify
    auto* amp = app.add_subcommand("amplify", "run the dimension-amplification driver");
    int max_iterations = 3;
    double amp_delta = 0.02;
    AmplifyParams aparams;
    add_common(amp);
    amp->add_option("--window", window, "enumeration window")->default_val(500.0);
    amp->add_option("--max-iterations", max_iterations, "iteration budget")->default_val(3);
    amp->add_option("--delta", amp_delta, "density resolution")->default_val(0.02);
    amp->add_option("--directions", aparams.direction_count, "direction grid size")->default_val(4096);

    // verify
    auto* verify = app.add_subcommand("verify", "replay a certificate file");
    std::string cert_path;
    verify->add_option("certificate", cert_path, "certificate JSON file")->required();

    // enum
    auto* enumc = app.add_subcommand("enum", "enumerate a generator to a point-cloud file");
    double radius = 100.0;
    add_common(enumc);
    enumc->add_option("--radius", radius, "enumeration radius")->required();

    CLI11_PARSE(app, argc, argv);

    base.rho_dedup = common.rho;
    base.threads = common.threads;

    try {
        if (dim->parsed()) return run_dim(common, radii_spec, base);
        if (wedge->parsed()) {
            if (!s_grid_spec.empty()) dparams.s_grid = coarsedim::parse_double_list(s_grid_spec);
            if (!eps_grid_spec.empty()) dparams.eps_grid = coarsedim::parse_double_list(eps_grid_spec);
            if (!interval_spec.empty()) dparams.interval = coarsedim::parse_interval(interval_spec);
            return run_wedge(common, window, dparams, base);
        }
        if (amp->parsed()) return run_amplify(common, window, max_iterations, amp_delta, aparams, base);
        if (verify->parsed()) return run_verify(cert_path, base);
        if (enumc->parsed()) return run_enum(common, radius, base);
    } catch (const coarsedim::BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const coarsedim::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const coarsedim::InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const coarsedim::CertificateInvalid& e) {
        std::cerr << "certificate invalid: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const coarsedim::ApertureTooWide& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
