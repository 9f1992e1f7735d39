#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include <coarsedim/generator.hpp>
#include <coarsedim/sexpr.hpp>

using namespace coarsedim;

namespace {

std::vector<double> values_of(const PointCloud& pc) {
    REQUIRE(pc.dim() == 1);
    return pc.raw();
}

// independent oracle for the powers-plus-index set
std::set<double> powers_plus_index_oracle(double radius) {
    std::set<double> out;
    for (int n = 0; n < 64; ++n) {
        const double p = std::ldexp(1.0, n);
        if (p < radius) out.insert(p);
        if (p + n < radius) out.insert(p + n);
        if (p >= radius) break;
    }
    return out;
}

}  // namespace

TEST_CASE("integers enumerate inside the open ball") {
    auto pc = enumerate(SetGenerator::integers(), 3.5);
    CHECK(values_of(pc) == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});

    // boundary points are excluded: |k| < 3 strictly
    auto pc3 = enumerate(SetGenerator::integers(), 3.0);
    CHECK(values_of(pc3) == std::vector<double>{-2, -1, 0, 1, 2});
}

TEST_CASE("powers-plus-index truncation") {
    auto pc = enumerate(SetGenerator::powers_plus_index(), 20.0);
    // 2^4 + 4 = 20 falls on the open boundary and is excluded
    CHECK(values_of(pc) == std::vector<double>{1, 2, 3, 4, 6, 8, 11, 16});

    for (double r : {5.0, 100.0, 4096.0}) {
        auto got = values_of(enumerate(SetGenerator::powers_plus_index(), r));
        const auto want = powers_plus_index_oracle(r);
        CHECK(std::set<double>(got.begin(), got.end()) == want);
    }
}

TEST_CASE("reciprocals enumerate down to the dedup resolution") {
    auto pc = enumerate(SetGenerator::reciprocals(), 2.0);
    const auto vals = values_of(pc);
    REQUIRE(vals.size() > 1000);
    CHECK(vals.back() == 1.0);
    CHECK(std::find(vals.begin(), vals.end(), 0.5) != vals.end());
    CHECK(std::find(vals.begin(), vals.end(), 1.0 / 3.0) != vals.end());
    CHECK(vals.front() > 0.0);
    // sorted and separated at the dedup resolution
    for (std::size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] - vals[i - 1] >= 1e-9);
}

TEST_CASE("explicit list, arithmetic progression, cantor endpoints") {
    auto ex = enumerate(SetGenerator::explicit_list(1, {3.0, 1.0, 2.0, 1.0}), 10.0);
    CHECK(values_of(ex) == std::vector<double>{1, 2, 3});

    auto ap = enumerate(SetGenerator::arithmetic_progression(0.5, 2.0), 6.0);
    CHECK(values_of(ap) == std::vector<double>{-5.5, -3.5, -1.5, 0.5, 2.5, 4.5});

    auto ap0 = enumerate(SetGenerator::arithmetic_progression(1.0, 0.0), 3.0);
    CHECK(values_of(ap0) == std::vector<double>{1.0});

    // classic thirds construction, two levels: left endpoints
    auto cantor = enumerate(SetGenerator::cantor_like(1.0 / 3.0, 2), 2.0);
    const auto vals = values_of(cantor);
    REQUIRE(vals.size() == 4);
    CHECK(vals[0] == Catch::Approx(0.0));
    CHECK(vals[1] == Catch::Approx(2.0 / 9.0));
    CHECK(vals[2] == Catch::Approx(2.0 / 3.0));
    CHECK(vals[3] == Catch::Approx(2.0 / 3.0 + 2.0 / 9.0));
}

TEST_CASE("cantor depth beyond the point budget is rejected") {
    Config cfg;
    cfg.max_points = 1000;
    try {
        enumerate(SetGenerator::cantor_like(1.0 / 3.0, 40), 2.0, cfg);
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded& e) {
        CHECK(std::string(e.what()).find("cantor") != std::string::npos);
    }
}

TEST_CASE("closure operations") {
    auto z = SetGenerator::integers();

    SECTION("scale") {
        auto sc = enumerate(SetGenerator::scaled(z, 0.5), 2.0);
        CHECK(values_of(sc) == std::vector<double>{-1.5, -1, -0.5, 0, 0.5, 1, 1.5});
    }
    SECTION("translate") {
        auto tr = enumerate(SetGenerator::translated(z, {0.25}), 2.0);
        CHECK(values_of(tr) == std::vector<double>{-1.75, -0.75, 0.25, 1.25});
    }
    SECTION("union dedups overlaps") {
        auto un = enumerate(SetGenerator::union_of({z, SetGenerator::explicit_list(1, {0.0, 0.5})}), 2.0);
        CHECK(values_of(un) == std::vector<double>{-1, 0, 0.5, 1});
    }
    SECTION("product and power agree") {
        auto pr = enumerate(SetGenerator::product_of({z, z}), 2.0);
        auto pw = enumerate(SetGenerator::power_of(z, 2), 2.0);
        CHECK(pr.raw() == pw.raw());
        REQUIRE(pr.dim() == 2);
        // (1,1) has norm sqrt(2) < 2; (1,-1),( -1,1),(-1,-1) likewise; no +-2
        CHECK(pr.size() == 9);
    }
    SECTION("difference") {
        auto df = enumerate(SetGenerator::difference_of(z, z), 4.0);
        CHECK(values_of(df) == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});
    }
    SECTION("linear image uses the image window as source radius") {
        auto li = enumerate(
            SetGenerator::linear_image_of(SetGenerator::power_of(z, 2), {1.0, 0.5}), 3.0);
        // brute force over the same source truncation
        auto src = enumerate(SetGenerator::power_of(z, 2), 3.0);
        std::set<double> want;
        for (std::size_t i = 0; i < src.size(); ++i) {
            const double v = src[i][0] + 0.5 * src[i][1];
            if (std::abs(v) < 3.0) want.insert(v);
        }
        const auto got = values_of(li);
        CHECK(std::set<double>(got.begin(), got.end()) == want);
    }
}

TEST_CASE("enumeration is monotone in the radius for every variant") {
    std::vector<GenPtr> battery = {
        SetGenerator::integers(),
        SetGenerator::powers_plus_index(),
        SetGenerator::reciprocals(),
        SetGenerator::explicit_list(1, {0.0, 1.5, -2.25, 7.0}),
        SetGenerator::arithmetic_progression(0.3, 0.7),
        SetGenerator::cantor_like(0.4, 5),
        SetGenerator::union_of({SetGenerator::integers(), SetGenerator::reciprocals()}),
        SetGenerator::scaled(SetGenerator::integers(), 1.0 / 3.0),
        SetGenerator::translated(SetGenerator::integers(), {0.125}),
        SetGenerator::power_of(SetGenerator::integers(), 2),
        SetGenerator::product_of({SetGenerator::integers(), SetGenerator::explicit_list(1, {0.0})}),
        SetGenerator::linear_image_of(SetGenerator::power_of(SetGenerator::integers(), 2),
                                      {1.0, std::sqrt(2.0)}),
        SetGenerator::difference_of(SetGenerator::integers(), SetGenerator::integers()),
    };
    const double radii[] = {2.0, 5.0, 11.5, 23.0};
    for (const auto& gen : battery) {
        std::vector<std::set<std::vector<double>>> enums;
        for (double r : radii) {
            auto pc = enumerate(gen, r);
            std::set<std::vector<double>> pts;
            for (std::size_t i = 0; i < pc.size(); ++i)
                pts.insert(std::vector<double>(pc[i].begin(), pc[i].end()));
            enums.push_back(std::move(pts));
        }
        for (std::size_t i = 1; i < enums.size(); ++i) {
            for (const auto& p : enums[i - 1]) {
                INFO("generator " << kind_name(gen->kind) << ", radius step " << i);
                CHECK(enums[i].count(p) == 1);
            }
        }
    }
}

TEST_CASE("near-duplicates collapse at the dedup resolution") {
    auto pc = enumerate(SetGenerator::explicit_list(1, {1.0, 1.0 + 1e-10, 2.0}), 10.0);
    CHECK(pc.size() == 2);

    // two points exactly rho apart stay distinct (strict identification)
    Config cfg;
    auto pc2 = enumerate(SetGenerator::explicit_list(1, {1.0, 1.0 + 2e-9, 2.0}), 10.0, cfg);
    CHECK(pc2.size() == 3);
}

TEST_CASE("every enumerated point lies strictly inside the ball") {
    auto gen = SetGenerator::union_of(
        {SetGenerator::integers(), SetGenerator::explicit_list(1, {4.0, -4.0, 3.999999})});
    auto pc = enumerate(gen, 4.0);
    for (std::size_t i = 0; i < pc.size(); ++i) CHECK(norm2(pc[i]) < 4.0);
    CHECK(values_of(pc).back() == 3.999999);
}
