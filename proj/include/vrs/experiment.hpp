#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrs/estimates.hpp"
#include "vrs/sampling.hpp"
#include "vrs/scattering.hpp"
#include "vrs/transport.hpp"
#include "vrs/wave_operator.hpp"

namespace vrs {

enum class ExperimentKind { Simulate, PctCheck, Scatter, Wave, Bench, FieldTest };

const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Simulate;
    double alpha = 1.05;
    int lambda = 1;
    std::size_t n_particles = 20000;
    std::uint64_t seed = 1;
    DataProfile profile = DataProfile::Gaussian;
    double epsilon = 0.05;  // data smallness
    double softening = 0.0; // 0: default_softening of the sample
    SolveConfig solver;
    std::string output_dir = "out";
    bool quick = false;

    // scatter
    double s_min = 1.0 / 64.0;
    double delta = 0.0832;  // modified-scattering runs expect alpha in (1, 1 + delta]
    std::size_t probe_per_axis = 5;
    double probe_fraction = 0.95;

    // wave
    double c0 = 0.1;
    double wave_T = 0.5;
    std::size_t wave_knots = 32;
    double roundtrip_t = 32.0;

    static ExperimentConfig defaults(ExperimentKind kind);
    // Reads the flat [experiment] table; missing keys keep `base` values.
    static ExperimentConfig from_toml(const std::string& path, const ExperimentConfig& base);
    // Reduced particle counts and levels.
    void apply_quick();
    void validate() const;

    ModelParams model() const { return ModelParams(alpha, lambda, softening); }
    InitialData initial_data() const { return {profile, epsilon, n_particles, seed}; }

    nlohmann::json to_json() const;
    // FNV-1a 64 of the canonical JSON dump.
    std::uint64_t hash() const;
};

std::string version_string();
std::string hex64(std::uint64_t v);

// --- pipelines -------------------------------------------------------------

struct ScatterSettings {
    double alpha = 1.05;
    int lambda = 1;
    InitialData data;
    double softening = 0.0;  // 0: scatter_softening of the sample
    double s_min = 1.0 / 64.0;
    double dt_base = 1e-3;
    FieldMode field_mode = FieldMode::Direct;
    std::size_t spectral_cells = 32;
    std::size_t probe_per_axis = 5;
    double probe_fraction = 0.95;
    std::size_t e0_query = 64;
    NuMode nu_mode = NuMode::PullbackMeasure;
    // Extra recorded times for the moment series.
    std::vector<double> moment_times{0.75, 0.35, 0.1, 0.05};
};

struct MomentPoint {
    double s = 0.0;
    double moment = 0.0;  // sup <p> gamma proxy
    double ratio = 0.0;   // (moment / s^{2-2a}) / (same at s = 1)
};

struct ScatterOutcome {
    ModelParams params{1.05, 1};
    Trajectory gamma;
    EZeroResult e0;
    ProbeGrid probe;
    KdeBandwidth bandwidth;
    ConvergenceSeries corrected;
    ConvergenceSeries uncorrected;
    std::vector<MomentPoint> moments;
    double moment_ratio_max = 0.0;
    bool rate_ok = false;
    bool cauchy_verdict = false;
    bool moment_ok = false;  // moment_ratio_max <= 3 over s in [0.05, 1]
};

// Half the position spread of the data. Fixed query points see a smooth field only when the
// softening is comparable to the data scale; the point-particle field is dominated by close passes.
double scatter_softening(const ParticleEnsemble& ens);

// Physical data at t = 1, inverted, evolved in the pseudo-conformal frame down to s_min with
// snapshots on s_min 2^k; E0 extrapolated; nu probes with and without the Phi_alpha correction.
ScatterOutcome run_scatter(const ScatterSettings& settings);

struct FrameEquivalence {
    double t_end = 2.0;
    double discrepancy = 0.0;  // sup |rho_phys - rho_pct| / sup rho_phys on a common grid
    double tolerance = 0.02;
    bool pass = false;
};

// Physical evolution on [1, t_end] against pseudo-conformal evolution on [1/t_end, 1].
FrameEquivalence frame_equivalence(const ModelParams& params, const ParticleEnsemble& mu1, const SolveConfig& base,
                                   double t_end = 2.0);

struct WaveSettings {
    double alpha = 0.8;
    int lambda = 1;
    double c0 = 0.1;
    std::size_t n = 600;
    std::uint64_t seed = 1;
    double T_init = 0.5;
    WaveConfig wave;
    double roundtrip_t = 32.0;
    double dt = 1e-2;
    std::size_t probe_per_axis = 4;
};

struct WaveOutcome {
    ModelParams params{0.8, 1};
    DatumReport datum;
    WaveSolution solution;
    double bootstrap_max = 0.0;  // max over s of A, B, C
    double ratio_max = 0.0;
    double roundtrip_error = 0.0;  // sup |profile - datum profile| / sup datum profile
    double roundtrip_tolerance = 0.1;
    bool pass = false;
};

WaveOutcome run_wave(const WaveSettings& settings);

struct OracleCheck {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// riesz_constant(1) against 1/(4 pi) and the unit point-mass field at alpha = 1 against -x/(4 pi |x|^3).
std::vector<OracleCheck> coulomb_checks();
// field_at against central differences of potential_at on random clouds and query points.
OracleCheck gradient_check(std::size_t configurations, std::uint64_t seed);
// Relative error of dyadic_reconstruct on a 100-particle cloud.
OracleCheck dyadic_check(double alpha, std::size_t n_particles, std::uint64_t seed, std::size_t queries = 8);

// --- reporting -------------------------------------------------------------

nlohmann::json to_json(const RateFit& f);
nlohmann::json to_json(const ConvergenceSeries& c);
nlohmann::json to_json(const OracleCheck& c);
nlohmann::json to_json(const IterationReport& r);
nlohmann::json to_json(const DatumReport& r);

struct ExperimentResult {
    nlohmann::json summary;
    bool pass = false;
    std::optional<Trajectory> trajectory;  // written as CSV when present
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes summary.json (and trajectory.csv) into cfg.output_dir. Returns the summary path.
std::string write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace vrs
