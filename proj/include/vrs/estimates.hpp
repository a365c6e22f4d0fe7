#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrs/kde.hpp"
#include "vrs/transport.hpp"

namespace vrs {

// KDE-based norm proxies of gamma = sqrt(f) for one snapshot.
struct GammaNorms {
    double l2 = 0.0;        // sqrt(mass)
    double sup = 0.0;       // ||gamma||_inf
    double p2_sup = 0.0;    // |||p|^2 gamma||_inf
    double p4_sup = 0.0;    // |||p|^4 gamma||_inf
    double b2_sup = 0.0;    // ||<p>^2 gamma||_inf
    double grad_q_sup = 0.0;
};
GammaNorms gamma_norms(const ParticleEnsemble& ens, const KdeBandwidth& bw, std::size_t eval_points = 512);

struct FieldBoundRow {
    std::string inequality;  // "E_i", "E_i_B", "gradE_ii", "gradE_iii"
    std::vector<double> constants;  // per ensemble: LHS / min_A RHS(A)
    double max_constant = 0.0;
    double spread = 1.0;  // max / min over ensembles with nonzero data
    bool finite = true;
    bool stable = true;   // spread < 10
};

struct FieldBoundsReport {
    std::vector<FieldBoundRow> rows;
    bool pass = false;
};

// Field bounds in the free parameters A (and B), minimised over a log grid.
FieldBoundsReport verify_field_bounds(const ModelParams& params, std::span<const ParticleEnsemble> ensembles,
                                      std::size_t query_points = 128);

struct HolderFit {
    std::string quantity;  // "E", "gradE", "hessE"
    double kappa_expected = 0.0;
    double kappa_hat = 0.0;
    double constant = 0.0;  // max dX / (ds^kappa * norm)
    bool pass = false;      // kappa_hat >= kappa_expected - 0.2 (only asserted for E)
};

struct ContinuityReport {
    double weak_residual = 0.0;  // relative residual of d/ds <psi, rho> - <grad psi, j>
    double weak_tolerance = 0.0;
    double grid_residual = 0.0;  // observational: CIC central differences, relative
    std::vector<HolderFit> fits;
    bool pass = false;
};

// Continuity-equation residual in weak form over Gaussian test functions, then Hoelder exponents
// of s -> E(s), grad E(s), hess E(s) at query points. Needs >= 6 snapshots.
ContinuityReport verify_continuity(const ModelParams& params, const Trajectory& traj, std::size_t query_points = 64,
                                   double weak_tolerance = 1e-3);

struct ForceContinuityReport {
    double beta = 0.0;
    std::vector<double> pair_constants;
    double max_constant = 0.0;
    double median_constant = 0.0;
    bool pass = false;  // max <= 10 * median
    // alpha > 1: fitted F-term prefactors on s0 in [1/4, 1/2] and [1/16, 1/8]; observational.
    double prefactor_hi = 0.0;
    double prefactor_lo = 0.0;
    double prefactor_ratio_expected = 0.0;
};

ForceContinuityReport verify_force_continuity(const ModelParams& params, const Trajectory& traj,
                                              std::size_t query_points = 64);

struct InterpolationRow {
    std::string inequality;
    double constant_coarse = 0.0;
    double constant_fine = 0.0;
    double drift = 0.0;
    bool pass = false;  // finite and drift < 0.2
};

struct InterpolationReport {
    std::size_t functions = 0;
    std::size_t coarse = 64, fine = 128;
    std::vector<InterpolationRow> rows;
    bool pass = false;
};

// Gaussian-times-cosine family: the first min(count, 64) members sweep frequency k = 1..64
// along x1, the rest are random. Sup norms are grid maxima over a 3-D section (x1, x2, v1), refined locally.
InterpolationReport verify_interpolation(std::size_t count, std::uint64_t seed, std::size_t coarse = 64,
                                         std::size_t fine = 128);

// One member of the family with closed-form derivatives.
struct TestFunction {
    double amp = 1.0;
    Vec3 x_centre, v_centre;
    double x_width = 1.0, v_width = 1.0;
    Vec3 kx, kv;
    double phase = 0.0;

    struct Jet {
        double f;
        Vec3 gx, gv;
        Mat3 hxx, hvv;
    };
    Jet eval(const Vec3& x, const Vec3& v) const;
};

struct SectionNorms {
    double f = 0.0, gx = 0.0, gv = 0.0, hxx = 0.0, hvv = 0.0;
    double wf[4] = {0, 0, 0, 0};   // <x>^{2s} f for s = 1, 2, 2.5, 3
    double wgv[2] = {0, 0};        // <x>^s grad_v f for s = 1, 2
    double wgx[2] = {0, 0};        // <x>^s grad_x f for s = 2.5, 3
};
SectionNorms section_norms(const TestFunction& fn, std::size_t n, double half_width = 4.0);

}  // namespace vrs
