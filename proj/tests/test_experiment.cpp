#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrs/cli.hpp"
#include "vrs/errors.hpp"
#include "vrs/experiment.hpp"

using namespace vrs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vrs_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vrs");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("experiment kinds round trip through their names") {
    for (auto k : {ExperimentKind::Simulate, ExperimentKind::PctCheck, ExperimentKind::Scatter, ExperimentKind::Wave,
                   ExperimentKind::Bench, ExperimentKind::FieldTest})
        CHECK(parse_experiment_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_experiment_kind("nope"), ConfigurationError);
}

TEST_CASE("defaults validate") {
    for (auto k : {ExperimentKind::Simulate, ExperimentKind::PctCheck, ExperimentKind::Scatter, ExperimentKind::Wave,
                   ExperimentKind::Bench, ExperimentKind::FieldTest}) {
        auto c = ExperimentConfig::defaults(k);
        CHECK(c.kind == k);
        CHECK_NOTHROW(c.validate());
        c.apply_quick();
        CHECK_NOTHROW(c.validate());
    }
    CHECK(ExperimentConfig::defaults(ExperimentKind::Simulate).n_particles == 20000);
    CHECK(ExperimentConfig::defaults(ExperimentKind::Scatter).s_min == doctest::Approx(1.0 / 64.0));
}

TEST_CASE("invalid settings are rejected") {
    auto c = ExperimentConfig::defaults(ExperimentKind::Scatter);
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigurationError);
    c = ExperimentConfig::defaults(ExperimentKind::Simulate);
    c.alpha = 1.6;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = ExperimentConfig::defaults(ExperimentKind::Simulate);
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("TOML configuration") {
    const auto dir = scratch_dir("toml");
    const auto base = ExperimentConfig::defaults(ExperimentKind::Scatter);
    SUBCASE("keys override the defaults") {
        const auto path = write_file(dir / "ok.toml", "[experiment]\nkind = \"scatter\"\nalpha = 0.8\nn_particles = 321\n"
                                                      "seed = 9\ndata_profile = \"ring\"\ns_min = 0.125\n"
                                                      "substep_policy = \"fixed\"\n");
        const auto c = ExperimentConfig::from_toml(path.string(), base);
        CHECK(c.alpha == 0.8);
        CHECK(c.n_particles == 321);
        CHECK(c.seed == 9);
        CHECK(c.profile == DataProfile::Ring);
        CHECK(c.s_min == 0.125);
        CHECK(c.solver.substep_policy == SubstepPolicy::Fixed);
        CHECK(c.epsilon == base.epsilon);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(ExperimentConfig::from_toml((dir / "absent.toml").string(), base), ConfigurationError);
    }
    SUBCASE("unknown key") {
        const auto path = write_file(dir / "bad.toml", "[experiment]\nalpah = 0.8\n");
        CHECK_THROWS_AS(ExperimentConfig::from_toml(path.string(), base), ConfigurationError);
    }
    SUBCASE("kind must match") {
        const auto path = write_file(dir / "kind.toml", "[experiment]\nkind = \"wave\"\n");
        CHECK_THROWS_AS(ExperimentConfig::from_toml(path.string(), base), ConfigurationError);
    }
    SUBCASE("syntax errors") {
        const auto path = write_file(dir / "syntax.toml", "[experiment\nalpha = \n");
        CHECK_THROWS_AS(ExperimentConfig::from_toml(path.string(), base), ConfigurationError);
    }
    SUBCASE("wrong types") {
        const auto path = write_file(dir / "type.toml", "[experiment]\nalpha = \"high\"\n");
        CHECK_THROWS_AS(ExperimentConfig::from_toml(path.string(), base), ConfigurationError);
    }
}

TEST_CASE("config hash ignores the output directory only") {
    auto a = ExperimentConfig::defaults(ExperimentKind::Wave);
    auto b = a;
    b.output_dir = "elsewhere";
    CHECK(a.hash() == b.hash());
    b.seed = 2;
    CHECK(a.hash() != b.hash());
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    CHECK(a.to_json()["alpha"] == a.alpha);
}

TEST_CASE("field test run and outputs") {
    auto cfg = ExperimentConfig::defaults(ExperimentKind::FieldTest);
    cfg.apply_quick();
    cfg.output_dir = scratch_dir("field").string();
    const auto r = run_experiment(cfg);
    CHECK(r.pass);
    CHECK(r.summary["coulomb_check"] == "pass");
    CHECK(r.summary["schema_version"] == 1);
    CHECK(r.summary["config_hash"] == hex64(cfg.hash()));
    CHECK(r.summary["version"] == version_string());
    const auto path = write_outputs(cfg, r);
    const auto first = slurp(path);
    CHECK(nlohmann::json::parse(first)["experiment"] == "field-test");

    // identical config and seed give identical bytes
    const auto again = run_experiment(cfg);
    write_outputs(cfg, again);
    CHECK(slurp(path) == first);
}

TEST_CASE("simulate run writes a trajectory") {
    auto cfg = ExperimentConfig::defaults(ExperimentKind::Simulate);
    cfg.n_particles = 300;
    cfg.solver.t_end = 1.1;
    cfg.solver.record_every = 20;
    cfg.output_dir = scratch_dir("simulate").string();
    const auto r = run_experiment(cfg);
    REQUIRE(r.trajectory.has_value());
    write_outputs(cfg, r);
    const auto csv = slurp(fs::path(cfg.output_dir) / "simulate_trajectory.csv");
    CHECK(csv.rfind("time,", 0) == 0);
}

TEST_CASE("command line") {
    const auto dir = scratch_dir("cli");
    CHECK(run_cli({"scatter", "--config", (dir / "missing.toml").string()}) == 1);
    CHECK(run_cli({"field-test", "--bogus"}) == 1);
    CHECK(run_cli({"field-test", "--lambda", "3"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"--version"}) == 0);
    CHECK(run_cli({"field-test", "--alpha", "1.0", "--quick", "--out", (dir / "ft").string()}) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "ft" / "field-test_summary.json"));
    CHECK(j["coulomb_check"] == "pass");
    CHECK(j["config"]["alpha"] == 1.0);
    // out of range alpha is a configuration error
    CHECK(run_cli({"field-test", "--alpha", "1.7", "--out", (dir / "bad").string()}) == 1);
}

}  // TEST_SUITE
