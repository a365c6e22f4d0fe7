#include "vrs/cli.hpp"

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vrs/errors.hpp"
#include "vrs/experiment.hpp"

namespace vrs {

namespace {

constexpr int kPass = 0;
constexpr int kUsage = 1;
constexpr int kFail = 2;

struct Overrides {
    std::string config;
    std::string out;
    std::optional<double> alpha;
    std::optional<int> lambda;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    bool quick = false;
};

void add_common(CLI::App& sub, Overrides& o) {
    sub.add_option("--config", o.config, "TOML file with an [experiment] table");
    sub.add_option("--out", o.out, "output directory");
    sub.add_option("--alpha", o.alpha, "Riesz exponent in (1/2, 3/2)");
    sub.add_option("--lambda", o.lambda, "sign of the interaction")->check(CLI::IsMember({-1, 1}));
    sub.add_option("--epsilon", o.epsilon, "data smallness");
    sub.add_option("--seed", o.seed, "random seed");
    sub.add_flag("--quick", o.quick, "reduced particle counts and levels");
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Vlasov-Riesz simulation and verification suite"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    Overrides o;
    const struct {
        ExperimentKind kind;
        const char* help;
    } commands[] = {
        {ExperimentKind::Simulate, "physical-frame evolution, CSV diagnostics"},
        {ExperimentKind::PctCheck, "pseudo-conformal inversion and frame equivalence"},
        {ExperimentKind::Scatter, "E0 extrapolation and the modified-scattering probe series"},
        {ExperimentKind::Wave, "wave operator from scattering data and the round trip"},
        {ExperimentKind::Bench, "field and KDE timings"},
        {ExperimentKind::FieldTest, "kernel oracles, gradient consistency, dyadic reconstruction"},
    };
    for (const auto& c : commands) add_common(*app.add_subcommand(to_string(c.kind), c.help), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    ExperimentKind kind{};
    for (const auto& c : commands)
        if (app.got_subcommand(to_string(c.kind))) kind = c.kind;

    ExperimentConfig cfg;
    try {
        cfg = ExperimentConfig::defaults(kind);
        if (!o.config.empty()) cfg = ExperimentConfig::from_toml(o.config, cfg);
        if (o.alpha) cfg.alpha = *o.alpha;
        if (o.lambda) cfg.lambda = *o.lambda;
        if (o.epsilon) cfg.epsilon = *o.epsilon;
        if (o.seed) cfg.seed = *o.seed;
        if (!o.out.empty()) cfg.output_dir = o.out;
        if (o.quick) cfg.apply_quick();
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        const ExperimentResult result = run_experiment(cfg);
        const std::string path = write_outputs(cfg, result);
        std::cout << to_string(kind) << ": " << (result.pass ? "pass" : "FAIL") << " (" << path << ")\n";
        return result.pass ? kPass : kFail;
    } catch (const std::exception& e) {
        std::cerr << to_string(kind) << ": error: " << e.what() << '\n';
        return kFail;
    }
}

}  // namespace vrs
