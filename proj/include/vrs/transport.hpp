#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vrs/kde.hpp"
#include "vrs/kernel_field.hpp"
#include "vrs/spectral.hpp"

namespace vrs {

enum class SubstepPolicy { Fixed, TimeWeighted };
enum class FieldMode { Direct, Spectral };
// What each recorded snapshot computes beyond time, mass and sup |E|.
enum class DiagnosticsLevel { Minimal, Energy, Moments, Full };

const char* to_string(SubstepPolicy p);
const char* to_string(FieldMode m);

struct SolveConfig {
    double dt_base = 1e-3;
    SubstepPolicy substep_policy = SubstepPolicy::Fixed;
    double t_start = 1.0;
    double t_end = 2.0;
    FieldMode field_mode = FieldMode::Direct;
    std::size_t record_every = 1;
    // Extra times that are hit exactly and recorded.
    std::vector<double> record_at;
    DiagnosticsLevel diagnostics = DiagnosticsLevel::Energy;
    // Spectral mode: fixed periodic box; default is a box around the initial data widened by the drift.
    std::optional<GridSpec> spectral_grid;
    std::size_t spectral_cells = 32;
    // Full diagnostics: grid for rho and j.
    std::optional<GridSpec> moment_grid;
    // Moment proxies: bandwidth (default Silverman on the initial ensemble) and evaluation-set size.
    std::optional<KdeBandwidth> bandwidth;
    std::size_t moment_eval_points = 512;

    void validate(Frame frame) const;
};

struct SnapshotDiagnostics {
    double time = 0.0;
    double mass = 0.0;
    double l2_proxy = 0.0;
    double mom_a1 = std::numeric_limits<double>::quiet_NaN();
    double mom_a2 = std::numeric_limits<double>::quiet_NaN();
    double mom_a4 = std::numeric_limits<double>::quiet_NaN();
    double e_sup = 0.0;
    double energy = std::numeric_limits<double>::quiet_NaN();
};

struct MomentFields {
    GridField rho;
    GridField j;
};

struct Trajectory {
    std::vector<ParticleEnsemble> snapshots;
    std::vector<SnapshotDiagnostics> diagnostics;
    std::vector<MomentFields> moments;  // filled at DiagnosticsLevel::Full
    std::optional<KdeBandwidth> bandwidth;
    double energy_drift = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> times() const;
    // Snapshot whose time is closest to t.
    const ParticleEnsemble& nearest(double t) const;
    void write_csv(std::ostream& out) const;
};

// Time weight of the force: 1 (physical) or s^{1 - 2 alpha} (pseudo-conformal).
double frame_weight(const ModelParams& params, Frame frame, double time);

// Field E at every particle position, self-interaction excluded.
using FieldEvaluator = std::function<std::vector<Vec3>(const ParticleEnsemble&)>;

FieldEvaluator direct_field_evaluator(const ModelParams& params);
FieldEvaluator spectral_field_evaluator(const ModelParams& params, const GridSpec& grid);

// lambda * w(frame_time) * E(x_i).
std::vector<Vec3> accel(const ModelParams& params, const ParticleEnsemble& ens, double frame_time);
std::vector<Vec3> accel(const ModelParams& params, const ParticleEnsemble& ens, double frame_time,
                        const FieldEvaluator& field);

// Kick-drift-kick from frame_time to frame_time + dt; both half kicks use the weight at the midpoint time.
ParticleEnsemble leapfrog_step(const ModelParams& params, const ParticleEnsemble& ens, double dt, double frame_time);
ParticleEnsemble leapfrog_step(const ModelParams& params, const ParticleEnsemble& ens, double dt, double frame_time,
                               const FieldEvaluator& field);

// Sum_i w_i |v_i|^2 / 2 - lambda w(t) sum_{i<j} w_i w_j V(x_i - x_j).
double total_energy(const ModelParams& params, const ParticleEnsemble& ens);

Trajectory solve(const ModelParams& params, const ParticleEnsemble& ens, const SolveConfig& cfg);
Trajectory solve(const ModelParams& params, const ParticleEnsemble& ens, const SolveConfig& cfg,
                 const FieldEvaluator& field);

struct PicardResult {
    Trajectory trajectory;
    std::vector<double> residuals;  // r_n = sup_t sup_grid |rho_{n+1} - rho_n|
    std::vector<double> ratios;
    double tolerance = 0.0;  // absolute residual tolerance used for stopping
    bool contracted = true;
    std::size_t iterations = 0;
};

// Local Picard scheme on [t0, t0 + T] (t0 = mu0.time): iterate n+1 transports mu0 along the
// frozen field of iterate n, starting from the zero field. Stops when r_n < rel_tol * sup rho.
PicardResult picard_local_solve(const ModelParams& params, const ParticleEnsemble& mu0, double T,
                                std::size_t n_iters, double dt = 1e-3, double rel_tol = 1e-11);

// Cloud-in-cell rho = sum w_i delta and j = sum w_i v_i delta on a bounded grid.
MomentFields deposit_moments(const ParticleEnsemble& ens, const GridSpec& grid);

// sup over an evaluation set of <v>^a sqrt(KDE f); a in {0,1,2,4,5}.
double weighted_sup_moment(const ParticleEnsemble& ens, int a, const KdeBandwidth& bandwidth,
                           std::size_t eval_points = 512);
double weighted_sup_moment(const ParticleEnsemble& ens, int a, double bandwidth);

// Bounding grid around several ensembles, n nodes per axis, with a relative margin.
GridSpec bounding_grid(std::span<const ParticleEnsemble* const> ensembles, std::size_t n, double margin = 0.1);

}  // namespace vrs
