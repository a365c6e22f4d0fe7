#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vrs/kde.hpp"
#include "vrs/pseudoconformal.hpp"
#include "vrs/transport.hpp"

namespace vrs {

// <z> / (1 + s <z>).
double theta_weight(double s, const Vec3& z);

// sigma0 and its first and second derivatives; index order w1..w3, z1..z3.
struct Sigma0Jet {
    double value = 0.0;
    std::array<double, 6> grad{};
    std::array<std::array<double, 6>, 6> hess{};
};
using Sigma0Evaluator = std::function<Sigma0Jet(const Vec3& w, const Vec3& z)>;

// Closed-form reference values of the datum norms, when known.
struct DatumNorms {
    double l2 = 0.0;
    double weighted_sup = 0.0;     // || <z>^5 sigma0 ||_inf
    double derivative_sum = 0.0;   // sum_{m+n<=2} || <z>^m grad_z^m grad_w^n sigma0 ||_inf
    double total() const { return l2 + weighted_sup + derivative_sum; }
};

struct ScatteringDatum {
    ParticleEnsemble sigma0;  // Wave frame at s = 0: positions w, velocities z, f = sigma0^2
    Sigma0Evaluator evaluator;
    std::optional<DatumNorms> analytic_norms;
    BackgroundField e0;
    double c0 = 0.0;
    // Kernel softening the datum's E0 was built with; wave-frame fields use the same value.
    double softening = 0.0;

    ModelParams kernel_params(const ModelParams& params) const { return params.with_softening(softening); }
};

// sigma0 = sqrt(M) (2 pi)^{-3/2} exp(-(|w|^2 + |z|^2)/4), M chosen so that the datum norms sum to
// `fill` * c0; E0 is the kernel-sum field of the sampled positions. Softening defaults to
// half the position spread of the sample.
ScatteringDatum gaussian_datum(const ModelParams& params, double c0, std::size_t n, std::uint64_t seed,
                               double fill = 0.9);
DatumNorms gaussian_datum_norms(double mass);
ScatteringDatum zero_datum(std::size_t n = 0);

struct NormCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct DatumReport {
    DatumNorms measured;
    std::vector<NormCheck> checks;  // sigma0 total vs c0, E0 sup vs c0^2
    bool pass = false;
};

// Norms of the evaluator maximised over the sample, the probe set and a pattern search; the
// L2 norm is sqrt of the sample mass. E0 checked on up to 512 sample positions.
DatumReport check_datum(const ScatteringDatum& datum);

enum class InitialIterate { Frozen, Perturbed };

struct WaveConfig {
    std::size_t knots = 32;       // knot intervals on [0, T]
    std::size_t substeps = 2;     // RK4 steps per knot interval
    double s_start = 1e-6;
    double tol = 1e-10;           // absolute sup residual
    std::size_t max_iters = 12;
    double contraction_limit = 0.6;
    std::size_t max_halvings = 6;
    InitialIterate initial = InitialIterate::Frozen;
    std::uint64_t perturb_seed = 1;
    double perturb_size = 1e-3;
};

// Wave-frame state at the knots s_k = k T / knots (snapshot 0 is the datum).
struct WaveIterate {
    std::vector<ParticleEnsemble> knots;
    double T = 0.0;
};

WaveIterate initial_iterate(const ScatteringDatum& datum, double T, const WaveConfig& cfg);

// Field of iterate n at time s: q-positions of the knots, linear in s between knots.
std::shared_ptr<const SpatialField> iterate_field(const ModelParams& params, const ScatteringDatum& datum,
                                                  const WaveIterate& prev, double s);

// Transport the datum along the characteristics of K_n built from `prev`.
WaveIterate picard_step(const ModelParams& params, const ScatteringDatum& datum, const WaveIterate& prev,
                        const WaveConfig& cfg);

struct ResidualPair {
    double sup = 0.0;  // max over knots and particles of |dw| + |dz|
    double l2 = 0.0;   // max over knots of sqrt(sum w_i (|dw|^2 + |dz|^2) / M)
};
ResidualPair iterate_residual(const WaveIterate& a, const WaveIterate& b);

struct BootstrapRecord {
    double s = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;
};

struct KBoundRecord {
    double s = 0.0;
    double grad_z = 0.0, grad_z_bound = 0.0;
    double hess_zz = 0.0, hess_zw = 0.0, hess_ww = 0.0;
    double hess_total = 0.0, hess_bound = 0.0;
    bool pass = false;
};

struct IterationReport {
    std::vector<double> residuals;
    std::vector<double> residuals_l2;
    std::vector<double> ratios;
    std::vector<BootstrapRecord> bootstrap;
    std::vector<KBoundRecord> k_bounds;
    double T_star = 0.0;
    std::size_t halvings = 0;
    bool converged = false;
    bool bootstrap_ok = false;
    bool k_bounds_ok = false;
    std::vector<std::string> warnings;
};

struct WaveSolution {
    WaveIterate sigma;
    IterationReport report;
};

// Picard iteration with T halving on non-contraction. Throws NoConvergence when halvings run out.
WaveSolution construct_wave(const ModelParams& params, const ScatteringDatum& datum, double T_init,
                            const WaveConfig& cfg = {});

// A, B, C proxies at each knot. With a datum evaluator the weighted sup in A is taken over the
// particles, transporting sigma0 values along the flow. Derivative terms come from the KDE: sup
// terms on a 4^6 grid over the 95% mass box, L2 terms as Monte Carlo averages over up to
// `eval_points` particles.
std::vector<BootstrapRecord> bootstrap_report(const ModelParams& params, const WaveIterate& sigma,
                                              const ScatteringDatum& datum, const KdeBandwidth& bandwidth,
                                              std::size_t eval_points = 256);

// First and second derivative scales of K at each knot s > 0, against the bounds with slack.
std::vector<KBoundRecord> k_bound_check(const ModelParams& params, const ScatteringDatum& datum,
                                        const WaveIterate& sigma, std::size_t eval_points = 128, double slack = 10.0);

// Knots with 0 < s <= s_match mapped through cov_forward and the inversion, ordered by increasing t.
Trajectory to_physical_solution(const ModelParams& params, const WaveIterate& sigma, const ScatteringDatum& datum,
                                double s_match);

}  // namespace vrs
