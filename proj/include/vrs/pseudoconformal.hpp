#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>

#include "vrs/fields.hpp"
#include "vrs/kernel_field.hpp"

namespace vrs {

// Limit field E0 = grad phi0 used by the wave-frame change of variables, with its bound constant c0.
struct BackgroundField {
    std::shared_ptr<const SpatialField> e0 = std::make_shared<ZeroField>();
    double c0 = 0.0;
    // Accuracy of the derivative evaluation: 0 for analytic fields, grid-dependent otherwise.
    double derivative_tolerance = 0.0;
    std::string derivative_method = "analytic";

    static BackgroundField zero();
    static BackgroundField kernel_sum(const ModelParams& params, const ParticleEnsemble& sources, double c0);
    static BackgroundField gridded(GridField e0, double c0);

    Vec3 field(const Vec3& w) const { return e0->field(w); }
    Mat3 gradient(const Vec3& w) const { return e0->gradient(w); }
    Tensor3 hessian(const Vec3& w) const { return e0->hessian(w); }

    // max(|E0|, |grad E0|, |grad^2 E0|) over the probes, Frobenius norms.
    double probe_sup(std::span<const Vec3> probes) const;
    bool within_bound(std::span<const Vec3> probes) const { return probe_sup(probes) <= c0 * c0; }
};

// (t, x, v) <-> (1/t, x/t, x - t v). The same formula maps both ways.
ParticleEnsemble invert_snapshot(const ParticleEnsemble& ens);

// sup_k |E[mu](t, t y_k) - t^{-(4-2a)} E[gamma](1/t, y_k)| / |E[mu](t, t y_k)|. The softening
// used on the pseudo-conformal side is scaled by 1/t so the identity is exact.
double field_scaling_check(const ModelParams& params, const ParticleEnsemble& ens_physical,
                           std::span<const Vec3> probe_points);

struct PhaseState {
    Vec3 position;
    Vec3 momentum;
};

// (w, z) -> (q, p):  q = w + s z + a s^{3-2a} E0(w),  p = z + a s^{2-2a} E0(w),  a = lambda / (2 - 2 alpha).
PhaseState cov_forward(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z);
// (q, p) -> (w, z):  w = q - p s,  z = p - a s^{2-2a} E0(w).
PhaseState cov_inverse(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& q, const Vec3& p);

// K(s, w, z) = -lambda s^{1-2a} [phi(s, q) - phi0(w)]; both fields must carry potentials.
double k_hamiltonian(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z,
                     const SpatialField& live);

struct KGradients {
    Vec3 grad_w;
    Vec3 grad_z;
    bool has_hessians = false;
    Mat3 hess_ww;
    Mat3 hess_wz;  // (j, k) = d_{w_j} d_{z_k} K
    Mat3 hess_zz;
};

KGradients k_gradients(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z,
                       const SpatialField& live, bool hessians = false);

// 6x6 Jacobian of cov_forward at (w, z) by central differences, row-major.
std::array<double, 36> cov_jacobian_fd(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w,
                                       const Vec3& z, double h = 1e-6);
double determinant6(std::array<double, 36> m);
// max |J^T Omega J - Omega|.
double symplectic_defect(const std::array<double, 36>& jac);

}  // namespace vrs
