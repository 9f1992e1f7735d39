#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <coarsedim/cli_config.hpp>
#include <coarsedim/cloud_io.hpp>
#include <coarsedim/wedge.hpp>

using namespace coarsedim;

TEST_CASE("generator expressions parse and round-trip") {
    const char* exprs[] = {
        "(integers)",
        "(powersplusindex)",
        "(reciprocals)",
        "(explicit 0 1 3.5)",
        "(explicit (0 0) (1 2))",
        "(ap 0.5 2)",
        "(cantor 0.25 6)",
        "(union (integers) (reciprocals))",
        "(scale (integers) 0.5)",
        "(translate (integers) 0.25)",
        "(product (integers) (explicit 0))",
        "(power (integers) 2)",
        "(linear-image (power (integers) 2) 1 1.4142135623730951)",
        "(difference (integers) (integers))",
    };
    for (const char* e : exprs) {
        auto gen = parse_generator(e);
        const std::string printed = to_sexpr(gen);
        auto reparsed = parse_generator(printed);
        INFO(e << " -> " << printed);
        CHECK(to_sexpr(reparsed) == printed);
        // both parse trees enumerate identically
        auto a = enumerate(gen, 5.0);
        auto b = enumerate(reparsed, 5.0);
        CHECK(a.raw() == b.raw());
        CHECK(a.dim() == b.dim());
    }
}

TEST_CASE("malformed expressions are rejected") {
    CHECK_THROWS_AS(parse_generator(""), InputError);
    CHECK_THROWS_AS(parse_generator("integers"), InputError);
    CHECK_THROWS_AS(parse_generator("(unknown-head)"), InputError);
    CHECK_THROWS_AS(parse_generator("(integers"), InputError);
    CHECK_THROWS_AS(parse_generator("(integers) trailing"), InputError);
    CHECK_THROWS_AS(parse_generator("(power (integers))"), InputError);
    CHECK_THROWS_AS(parse_generator("(power (integers) x)"), InputError);
    CHECK_THROWS_AS(parse_generator("(scale (integers) 0)"), InputError);
    CHECK_THROWS_AS(parse_generator("(explicit (0 0) (1))"), InputError);
    CHECK_THROWS_AS(parse_generator("(cantor 0.7 3)"), InputError);
    CHECK_THROWS_AS(parse_generator("(linear-image (integers) 1 2)"), InputError);
}

TEST_CASE("point cloud files round-trip") {
    auto pc = enumerate(parse_generator("(power (explicit 0 0.5 1) 2)"), 2.0);
    const std::string text = cloud_to_string(pc);
    CHECK(text.rfind("# dim=2 window=2\n", 0) == 0);

    std::istringstream is(text);
    auto back = read_cloud(is);
    CHECK(back.dim() == pc.dim());
    CHECK(back.window() == pc.window());
    CHECK(back.raw() == pc.raw());
}

TEST_CASE("cloud reader validates the header and rows") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_cloud(empty), InputError);
    std::istringstream bad_header("dim=1 window=2\n0\n");
    CHECK_THROWS_AS(read_cloud(bad_header), InputError);
    std::istringstream bad_row("# dim=2 window=2\n0.5\n");
    CHECK_THROWS_AS(read_cloud(bad_row), InputError);
}

TEST_CASE("radii schedules parse") {
    CHECK(parse_radii("dyadic:3..5") == std::vector<double>{8, 16, 32});
    CHECK(parse_radii("2,8,32") == std::vector<double>{2, 8, 32});
    CHECK_THROWS_AS(parse_radii("dyadic:bad"), std::exception);
    CHECK_THROWS_AS(parse_radii(""), std::exception);
}

TEST_CASE("grid and interval lists parse") {
    CHECK(parse_double_list("1,4,16") == std::vector<double>{1, 4, 16});
    auto iv = parse_interval("0,1");
    CHECK(iv[0] == 0.0);
    CHECK(iv[1] == 1.0);
    CHECK_THROWS_AS(parse_interval("1"), InputError);
}

TEST_CASE("atomic write replaces the file completely") {
    const std::string path = "test_atomic_out.txt";
    atomic_write(path, "first\n");
    atomic_write(path, "second\n");
    std::ifstream is(path);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(content == "second\n");
    std::remove(path.c_str());
    std::remove((path + ".tmp").c_str());
}

TEST_CASE("certificate JSON carries the full replay context") {
    auto res = dichotomy(parse_generator("(integers)"), 100.0);
    auto j = res.to_json();
    CHECK(j["schema"] == 1);
    CHECK(j.contains("window"));
    CHECK(j.contains("rho_dedup"));
    REQUIRE(j["branch"] == "density");
    CHECK(j["density_certificate"]["map"]["coefficients"].size() == 4);
    CHECK(j["density_certificate"].contains("max_gap"));
    CHECK(j["density_certificate"].contains("witness_count"));
}
