#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <coarsedim/qi.hpp>

using namespace coarsedim;

namespace {

PointMap scalar_map(double (*fn)(double)) {
    return [fn](std::span<const double> x) { return std::vector<double>{fn(x[0])}; };
}

const PointMap identity = [](std::span<const double> x) {
    return std::vector<double>(x.begin(), x.end());
};

}  // namespace

TEST_CASE("identity is a (1, delta) quasi-isometry") {
    auto z = enumerate(SetGenerator::integers(), 50.0);
    auto rep = verify_qi(z, z, identity, QiParams(1.0, 0.1));
    CHECK(rep.holds);
    CHECK(rep.violating_pairs.empty());
    CHECK(rep.surjectivity_gap == 0.0);
    CHECK(rep.exhaustive);
}

TEST_CASE("doubling onto the even integers") {
    auto x = enumerate(SetGenerator::integers(), 50.0);
    auto y = enumerate(SetGenerator::scaled(SetGenerator::integers(), 2.0), 100.0);
    auto rep = verify_qi(x, y, scalar_map([](double v) { return 2.0 * v; }), QiParams(2.0, 0.5));
    CHECK(rep.holds);

    // same map against all integers: the image misses the odd ones
    auto yz = enumerate(SetGenerator::integers(), 100.0);
    auto rep2 = verify_qi(x, yz, scalar_map([](double v) { return 2.0 * v; }), QiParams(2.0, 0.5));
    CHECK_FALSE(rep2.holds);
    CHECK(rep2.violating_pairs.empty());
    CHECK(rep2.surjectivity_gap == Catch::Approx(1.0));
}

TEST_CASE("squaring violates every linear bound") {
    auto x = enumerate(SetGenerator::integers(), 50.0);
    auto rep = verify_qi(x, x, scalar_map([](double v) { return v * v; }), QiParams(2.0, 1.0));
    CHECK_FALSE(rep.holds);
    REQUIRE_FALSE(rep.violating_pairs.empty());
    // spot check: the pair (0, 49) breaks the upper inequality
    const double d = 49.0, mid = 49.0 * 49.0;
    CHECK(mid > 2.0 * d + 1.0);
    // reported violations are sorted worst-first
    for (std::size_t i = 1; i < rep.violating_pairs.size(); ++i)
        CHECK(rep.violating_pairs[i - 1].excess >= rep.violating_pairs[i].excess);
}

TEST_CASE("verification is monotone in the constants") {
    auto x = enumerate(SetGenerator::integers(), 30.0);
    auto noisy = scalar_map([](double v) { return v + 0.3 * std::sin(3.0 * v); });
    QiOptions opts;
    opts.check_surjectivity = false;
    auto base = verify_qi(x, PointCloud(1, 1.0), noisy, QiParams(1.0, 0.7), opts);
    REQUIRE(base.holds);
    for (double lam : {1.0, 1.5, 3.0}) {
        for (double del : {0.7, 1.0, 5.0}) {
            auto rep = verify_qi(x, PointCloud(1, 1.0), noisy, QiParams(lam, del), opts);
            CHECK(rep.holds);
        }
    }
}

TEST_CASE("a bijective quasi-isometry inverts with scaled constants") {
    auto x = enumerate(SetGenerator::integers(), 50.0);
    auto y = enumerate(SetGenerator::scaled(SetGenerator::integers(), 2.0), 100.0);
    const QiParams fwd(2.0, 0.5);
    auto rep = verify_qi(x, y, scalar_map([](double v) { return 2.0 * v; }), fwd);
    REQUIRE(rep.holds);
    // inverse passes at (lambda, 2 * lambda * delta)
    auto inv = verify_qi(y, x, scalar_map([](double v) { return v / 2.0; }),
                         QiParams(fwd.lambda, 2.0 * fwd.lambda * fwd.delta));
    CHECK(inv.holds);
}

TEST_CASE("pair budget forces the sampling flag") {
    Config cfg;
    cfg.max_pairs = 1000;
    auto x = enumerate(SetGenerator::integers(), 100.0, cfg);
    CHECK_THROWS_AS(verify_qi(x, x, identity, QiParams(1.0, 0.5), QiOptions{}, cfg), BudgetExceeded);

    QiOptions opts;
    opts.allow_sampling = true;
    opts.sample_pairs = 5000;
    opts.check_surjectivity = false;
    auto rep = verify_qi(x, PointCloud(1, 1.0), identity, QiParams(1.0, 0.5), opts, cfg);
    CHECK(rep.holds);
    CHECK_FALSE(rep.exhaustive);
    CHECK(rep.pairs_checked <= 5000);
}

TEST_CASE("minimal lambda profile") {
    auto x = enumerate(SetGenerator::integers(), 50.0);
    std::vector<double> grid{0.01, 0.1, 1.0};

    auto prof_id = min_lambda_profile(x, identity, grid);
    for (const auto& [delta, lam] : prof_id) {
        REQUIRE(lam.has_value());
        CHECK(*lam == Catch::Approx(1.0).margin(1e-3));
    }

    auto prof_2x = min_lambda_profile(x, scalar_map([](double v) { return 2.0 * v; }), grid);
    REQUIRE(prof_2x[0].second.has_value());
    CHECK(*prof_2x[0].second == Catch::Approx(2.0).margin(0.01));

    // close points thrown far apart: no multiplicative constant can work
    auto tight = PointCloud::from_rows(1, 10.0, {0.0, 1e-6}, Config{});
    auto blowup = scalar_map([](double v) { return v > 0.0 ? 1e6 : 0.0; });
    auto prof_bad = min_lambda_profile(tight, blowup, std::vector<double>{0.01});
    CHECK_FALSE(prof_bad[0].second.has_value());
}

TEST_CASE("bounded perturbations leave the dimension estimate unchanged") {
    auto radii = dyadic_radii(6, 12);

    auto rep0 = qi_dimension_experiment(SetGenerator::integers(), 0.0, radii, 1);
    CHECK(rep0.difference == 0.0);

    auto rep = qi_dimension_experiment(SetGenerator::integers(), 0.4, radii, 1);
    CHECK(rep.difference <= 0.05);

    auto repd = qi_dimension_experiment(SetGenerator::powers_plus_index(), 0.4, dyadic_radii(10, 24), 1);
    CHECK(repd.slope_base <= 0.15);
    CHECK(repd.slope_perturbed <= 0.15);

    CHECK_THROWS_AS(qi_dimension_experiment(SetGenerator::integers(), 0.6, radii, 1), InputError);
}

TEST_CASE("reports serialize with capped, ordered violations") {
    auto x = enumerate(SetGenerator::integers(), 40.0);
    auto rep = verify_qi(x, x, scalar_map([](double v) { return v * v; }), QiParams(1.0, 1.0));
    CHECK(rep.violating_pairs.size() == 100);  // capped
    auto j = rep.to_json();
    CHECK(j["schema"] == 1);
    CHECK(j["holds"] == false);
    CHECK(j["violating_pairs"].size() == 100);
    CHECK(j["violating_pairs"][0]["excess"].get<double>() >=
          j["violating_pairs"][99]["excess"].get<double>());
    CHECK(j.contains("coarse_surjectivity_gap"));
    CHECK(j["exhaustive"] == true);
}

TEST_CASE("pair checking is thread-count invariant") {
    auto x = enumerate(SetGenerator::integers(), 60.0);
    auto wobble = scalar_map([](double v) { return v + 0.45 * std::sin(2.0 * v); });
    Config serial, parallel;
    parallel.threads = 4;
    QiOptions opts;
    opts.check_surjectivity = false;
    const QiParams tight(1.0, 0.5);  // violated by some pairs
    auto a = verify_qi(x, PointCloud(1, 1.0), wobble, tight, opts, serial);
    auto b = verify_qi(x, PointCloud(1, 1.0), wobble, tight, opts, parallel);
    CHECK(a.holds == b.holds);
    REQUIRE(a.violating_pairs.size() == b.violating_pairs.size());
    for (std::size_t i = 0; i < a.violating_pairs.size(); ++i) {
        CHECK(a.violating_pairs[i].i == b.violating_pairs[i].i);
        CHECK(a.violating_pairs[i].j == b.violating_pairs[i].j);
        CHECK(a.violating_pairs[i].excess == b.violating_pairs[i].excess);
    }
}

TEST_CASE("perturbation differences stay small across seeds") {
    auto radii = dyadic_radii(6, 11);
    for (std::uint64_t seed : {2ull, 3ull, 5ull, 8ull, 13ull}) {
        auto rep = qi_dimension_experiment(SetGenerator::integers(), 0.4, radii, seed);
        INFO("seed " << seed);
        CHECK(rep.difference <= 0.05);
    }
}
