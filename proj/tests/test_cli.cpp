#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "quadcone/config.hpp"
#include "quadcone/experiments.hpp"
#include "quadcone/report.hpp"

using namespace qc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
};

std::string bin() {
    const char* b = std::getenv("QUADCONE_BIN");
    return b ? b : "./quadcone";
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("quadcone_cli_" + std::to_string(getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Result run(const std::string& args, bool merge_stderr = false) {
    const std::string cmd = bin() + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    Result r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(parse_config(json::parse(R"({"system": "parabola", "delta": [0.0625], "seed": 3})")));
    CHECK_THROWS_AS(parse_config(json::parse(R"({"delta": []})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"dleta": [0.1]})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"tolerances": {"Dilate": 3}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"ensemble": 0})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"method": "guess"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"r": [1, "x"]})")), ConfigError);
    try {
        parse_config(json::parse(R"({"K": []})"));
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("'K'") != std::string::npos);
    }
    try {
        parse_config_text("{\n  \"seed\": 1,\n  \"r\": [1,,2]\n}");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("config round trip") {
    auto c = parse_config(json::parse(R"({"system": "complex_parabola", "r": [4, 8], "ensemble": 5,
                                          "tolerances": {"E": 2}, "conical": true})"));
    auto again = parse_config(c.to_json());
    CHECK(again.to_json() == c.to_json());
}

TEST_CASE("csv and svg output") {
    Table t{"x", {"a", "b"}, {{1.0 / 3, 2}, {0.1, 1e-300}}};
    const auto csv = to_csv(t);
    CHECK(csv.substr(0, 4) == "a,b\n");
    CHECK(csv.find("0.33333333333333331") != std::string::npos);
    const auto svg = loglog_svg("t", "x", "y", {{"line", {1, 2, 4}, {1, 4, 16}}});
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("slope 2") != std::string::npos);
    CHECK(fit_loglog({1, 10}, {2, 20}).slope == doctest::Approx(1.0));
}

TEST_CASE("experiment registry") {
    const auto names = experiment_names();
    CHECK(names.size() == 14);
    CHECK_THROWS_AS(run_experiment("nope", ExperimentConfig{}), ConfigError);
}

TEST_CASE("certify subcommand") {
    const auto dir = scratch("certify");
    auto r = run("certify --system complex_parabola_rotated --resolution 2000 --out " + dir.string());
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["certificate"]["c_min"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
    const auto rep = json::parse(slurp(dir / "certify_report.json"));
    CHECK(rep["config"]["resolution"] == 2000);
    CHECK(rep["config"]["system"] == "complex_parabola_rotated");
    CHECK(fs::exists(dir / "certify.csv"));
}

TEST_CASE("config errors exit with code 2") {
    const auto dir = scratch("errors");
    write(dir / "empty.json", R"({"delta": []})");
    auto r = run("sqfn ratio --config " + (dir / "empty.json").string(), true);
    CHECK(r.code == 2);
    CHECK(r.out.find("empty") != std::string::npos);
    write(dir / "typo.json", R"({"ensemble": 2, "sedd": 4})");
    r = run("sqfn ratio --config " + (dir / "typo.json").string(), true);
    CHECK(r.code == 2);
    CHECK(r.out.find("sedd") != std::string::npos);
    write(dir / "broken.json", "{\n\"seed\": 1,\n\"delta\": [0.1,\n");
    r = run("sqfn ratio --config " + (dir / "broken.json").string(), true);
    CHECK(r.code == 2);
    CHECK(r.out.find("line") != std::string::npos);
}

TEST_CASE("identical runs give byte-identical outputs across thread counts") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    write(a / "cfg.json", R"({"system": "parabola", "delta": [0.0625, 0.015625], "ensemble": 6, "seed": 9})");
    auto ra = run("sqfn ratio --config " + (a / "cfg.json").string() + " --threads 1 --out " + a.string());
    auto rb = run("sqfn ratio --config " + (a / "cfg.json").string() + " --threads 3 --out " + b.string());
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(ra.out == rb.out);
    CHECK(slurp(a / "sqfn_ratio.csv") == slurp(b / "sqfn_ratio.csv"));
    CHECK(slurp(a / "sqfn_ratio.svg") == slurp(b / "sqfn_ratio.svg"));
    auto ja = json::parse(slurp(a / "sqfn_ratio_report.json"));
    auto jb = json::parse(slurp(b / "sqfn_ratio_report.json"));
    CHECK(ja["results"] == jb["results"]);
    CHECK(parse_config(ja["config"]).to_json() == ja["config"]);
}

TEST_CASE("smoothing subcommands") {
    const auto dir = scratch("smoothing");
    auto r = run("smoothing phase --xi 0.3,0.2,0.5 --out " + dir.string());
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["phase"]["forms"][0]["gradient_norm"].get<double>() < 1e-10);
    r = run("smoothing phase --xi 1,0,0.1 --out " + dir.string(), true);
    CHECK(r.code == 1);
    CHECK(r.out.find("rho") != std::string::npos);
    r = run("smoothing average --grid 8 --modes 3 --out " + dir.string());
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    CHECK(j["factorization_error"].get<double>() < 1e-10);
    CHECK(j["mean_ratio"].get<double>() == doctest::Approx(j["expected_mean_ratio"].get<double>()).epsilon(1e-10));
}

TEST_CASE("tubes and lorentz subcommands") {
    const auto dir = scratch("geom");
    auto r = run("sqfn tubes --K 1024 --s 0.0625,0.125,0.25 --out " + dir.string());
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["slopes"][0]["slope"].get<double>() < -0.8);
    CHECK(fs::exists(dir / "sqfn_tubes.svg"));
    r = run("lorentz --s 0.5 --r 32 --samples 200 --out " + dir.string());
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    CHECK(j["reports"][0]["on_cone_error"].get<double>() < 1e-12);
}
