#pragma once

#include <span>
#include <utility>
#include <vector>

#include "vrs/kde.hpp"
#include "vrs/pseudoconformal.hpp"
#include "vrs/transport.hpp"

namespace vrs {

// Riesz field of the velocity marginal at v_query.
Vec3 e_infinity(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& v_query);

struct RateFit {
    double exponent_hat = 0.0;
    bool log_factor = false;
    double amplitude = 0.0;
    double residual_rms = 0.0;
    double s_lo = 0.0;
    double s_hi = 0.0;
};

// Least squares of log y = log A + theta log x [+ log <ln x>].
RateFit rate_fit(std::span<const double> xs, std::span<const double> ys, bool with_log);

// Expected E0 rate exponent: 2 alpha - 1 below alpha = 1, 2 - alpha above.
double expected_e0_rate(double alpha);

struct EZeroResult {
    std::vector<double> levels;        // dyadic s values used, decreasing
    std::vector<Vec3> e0_hat;          // one per query point
    std::vector<double> sup_diffs;     // max_q |E(s_k) - E(s_{k+1})|
    RateFit rate;                      // fit of sup_diffs against s_k
    double theta_expected = 0.0;
    bool rate_ok = false;              // rate.exponent_hat >= theta_expected - 0.15
    // Richardson combination (1 + c) F_K - c F_{K-1}, F_k the kernel-sum field of the sheared positions q - s_k p.
    BackgroundField background;
};

// Pseudo-conformal trajectory with snapshots on s_min 2^k. Throws InsufficientData with fewer than 4 levels.
EZeroResult e_zero_extrapolate(const ModelParams& params, const Trajectory& gamma_traj, std::span<const Vec3> q_query);

// (q, p) -> (q + s p + a s^{3-2a} E0(q), p + a s^{2-2a} E0(q)).
PhaseState phi_alpha(const BackgroundField& e0, const ModelParams& params, double s, const Vec3& q, const Vec3& p);
PhaseState phi_alpha_inverse(const BackgroundField& e0, const ModelParams& params, double s, const Vec3& q,
                             const Vec3& p);

// Physical point x + t v + a t^{2a-2} E_inf(v) on the modified trajectory, velocity v.
PhaseState modified_trajectory_point(const BackgroundField& e_inf, const ModelParams& params, double t, const Vec3& x,
                                     const Vec3& v);

struct ProbeGrid {
    std::vector<PhasePoint> points;
    Vec3 x_lo, x_hi, v_lo, v_hi;
    std::size_t per_axis = 0;
    double mass_fraction = 0.0;

    void validate() const;
    // per_axis^6 points on a box of per-axis central quantiles whose product covers `fraction` of the mass.
    static ProbeGrid mass_box(const ParticleEnsemble& ens, std::size_t per_axis = 5, double fraction = 0.95);
};

enum class NuMode {
    // KDE of the particles pulled back by the inverse of Phi_alpha, evaluated at the probes.
    PullbackMeasure,
    // KDE of the snapshot evaluated at Phi_alpha-shifted probes.
    ShiftedProbe,
};

std::vector<double> nu_probe(const ModelParams& params, const ParticleEnsemble& gamma_snapshot,
                             const BackgroundField& e0, const ProbeGrid& probe, const KdeBandwidth& bandwidth,
                             NuMode mode = NuMode::PullbackMeasure);

struct ConvergenceSeries {
    std::vector<double> times;
    std::vector<double> sup_diffs;
    std::vector<double> ratios;
    double tail_sum = 0.0;  // sum of the last three sup_diffs
    bool cauchy = false;
};

// sup_diffs[k] = max_j |nu_k[j] - nu_{k+1}[j]|; Cauchy when the last three ratios are <= 0.9.
// Differences below `floor` count as converged.
ConvergenceSeries cauchy_monitor(std::span<const double> times, std::span<const std::vector<double>> values,
                                 double floor = 1e-12);

}  // namespace vrs
