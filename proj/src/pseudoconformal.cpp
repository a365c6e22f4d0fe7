#include "vrs/pseudoconformal.hpp"

#include <algorithm>
#include <cmath>

#include "vrs/errors.hpp"

namespace vrs {

BackgroundField BackgroundField::zero() { return {}; }

BackgroundField BackgroundField::kernel_sum(const ModelParams& params, const ParticleEnsemble& sources, double c0) {
    BackgroundField bg;
    bg.e0 = std::make_shared<KernelSumField>(params, sources);
    bg.c0 = c0;
    return bg;
}

BackgroundField BackgroundField::gridded(GridField e0, double c0) {
    BackgroundField bg;
    double h = 0.0;
    for (int a = 0; a < 3; ++a) h = std::max(h, e0.spec.spacing[a]);
    bg.e0 = std::make_shared<GridSampledField>(std::move(e0));
    bg.c0 = c0;
    // Fourth-order differences of a trilinearly interpolated field; the interpolation dominates.
    bg.derivative_tolerance = h * h;
    bg.derivative_method = "fd4";
    return bg;
}

double BackgroundField::probe_sup(std::span<const Vec3> probes) const {
    double m = 0.0;
    for (const auto& x : probes) {
        m = std::max(m, norm(e0->field(x)));
        m = std::max(m, frobenius(e0->gradient(x)));
        m = std::max(m, frobenius(e0->hessian(x)));
    }
    return m;
}

ParticleEnsemble invert_snapshot(const ParticleEnsemble& ens) {
    Frame target;
    switch (ens.frame) {
        case Frame::Physical: target = Frame::PseudoConformal; break;
        case Frame::PseudoConformal: target = Frame::Physical; break;
        default: throw DomainError("invert_snapshot: wave-frame ensembles cannot be inverted");
    }
    if (!(ens.time > 0.0)) throw DomainError("invert_snapshot: time must be positive");
    ens.validate();
    const double t = ens.time;
    ParticleEnsemble out;
    out.frame = target;
    out.time = 1.0 / t;
    out.weights = ens.weights;
    out.positions.resize(ens.size());
    out.velocities.resize(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Vec3& x = ens.positions[i];
        out.positions[i] = x / t;
        out.velocities[i] = x - t * ens.velocities[i];
    }
    return out;
}

double field_scaling_check(const ModelParams& params, const ParticleEnsemble& ens_physical,
                           std::span<const Vec3> probe_points) {
    if (ens_physical.frame != Frame::Physical) throw DomainError("field_scaling_check: physical ensemble required");
    const double t = ens_physical.time;
    if (!(t > 0.0)) throw DomainError("field_scaling_check: t must be positive");
    const ParticleEnsemble gamma = invert_snapshot(ens_physical);
    const ModelParams scaled = params.with_softening(params.softening() / t);
    const double factor = std::pow(t, -(4.0 - 2.0 * params.alpha()));
    double worst = 0.0;
    for (const auto& y : probe_points) {
        const Vec3 lhs = field_at(params, ens_physical, y * t);
        const Vec3 rhs = field_at(scaled, gamma, y) * factor;
        const double scale = std::max(norm(lhs), 1e-300);
        worst = std::max(worst, norm(lhs - rhs) / scale);
    }
    return worst;
}

namespace {

struct CovCoefficients {
    double q_corr;  // a s^{3-2alpha}
    double p_corr;  // a s^{2-2alpha}
};

CovCoefficients cov_coefficients(const ModelParams& params, double s) {
    if (!params.has_correction()) throw DomainError("change of variables undefined at alpha = 1");
    const double alpha = params.alpha();
    if (s < 0.0 || !std::isfinite(s)) throw DomainError("change of variables: s must be finite and >= 0");
    if (s == 0.0) {
        if (alpha > 1.0) throw DomainError("change of variables: s = 0 is singular for alpha > 1");
        return {0.0, 0.0};
    }
    const double a = params.correction_coefficient();
    return {a * std::pow(s, 3.0 - 2.0 * alpha), a * std::pow(s, 2.0 - 2.0 * alpha)};
}

}  // namespace

PhaseState cov_forward(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z) {
    const auto c = cov_coefficients(params, s);
    if (c.q_corr == 0.0 && c.p_corr == 0.0) return {w + z * s, z};
    const Vec3 e0 = bg.field(w);
    return {w + z * s + e0 * c.q_corr, z + e0 * c.p_corr};
}

PhaseState cov_inverse(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& q, const Vec3& p) {
    const auto c = cov_coefficients(params, s);
    const Vec3 w = q - p * s;
    if (c.p_corr == 0.0) return {w, p};
    return {w, p - bg.field(w) * c.p_corr};
}

double k_hamiltonian(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z,
                     const SpatialField& live) {
    if (!(s > 0.0)) throw DomainError("k_hamiltonian: s must be positive");
    const PhaseState qp = cov_forward(bg, params, s, w, z);
    const double lam = params.lambda();
    return -lam * std::pow(s, 1.0 - 2.0 * params.alpha()) * (live.potential(qp.position) - bg.e0->potential(w));
}

KGradients k_gradients(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w, const Vec3& z,
                       const SpatialField& live, bool hessians) {
    if (!(s > 0.0)) throw DomainError("k_gradients: s must be positive");
    const double alpha = params.alpha();
    const double lam = params.lambda();
    const double a = params.correction_coefficient();
    const PhaseState qp = cov_forward(bg, params, s, w, z);
    const Vec3 e = live.field(qp.position);
    const Vec3 e0 = bg.field(w);
    const Mat3 g = bg.gradient(w);

    const double s1 = std::pow(s, 1.0 - 2.0 * alpha);
    const double s2 = s1 * s;
    const double s4 = std::pow(s, 4.0 - 4.0 * alpha);

    KGradients out;
    // grad E0 is symmetric, so E . grad E0 = G E.
    out.grad_w = (e - e0) * (-lam * s1) - (g * e) * (lam * a * s4);
    out.grad_z = e * (-lam * s2);
    if (!hessians) return out;

    const Mat3 h = live.gradient(qp.position);
    const Tensor3 t = bg.hessian(w);
    Mat3 te;  // (k, j) = sum_m d_j d_k E0_m E_m
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int m = 0; m < 3; ++m) v += t[j](k, m) * e[m];
            te(k, j) = v;
        }
    const Mat3 hg = h * g;
    const Mat3 gh = g * h;
    const double s3 = s2 * s;
    const double s5 = s4 * s;
    const double s7 = s4 * s3;
    out.hess_ww = (h - g) * (-lam * s1) - (hg + gh + te) * (lam * a * s4) - (g * h * g) * (lam * a * a * s7);
    out.hess_wz = h * (-lam * s2) - gh * (lam * a * s5);
    out.hess_zz = h * (-lam * s3);
    out.has_hessians = true;
    return out;
}

std::array<double, 36> cov_jacobian_fd(const BackgroundField& bg, const ModelParams& params, double s, const Vec3& w,
                                       const Vec3& z, double h) {
    std::array<double, 36> jac{};
    for (int c = 0; c < 6; ++c) {
        Vec3 wp = w, wm = w, zp = z, zm = z;
        if (c < 3) {
            wp[c] += h;
            wm[c] -= h;
        } else {
            zp[c - 3] += h;
            zm[c - 3] -= h;
        }
        const PhaseState fp = cov_forward(bg, params, s, wp, zp);
        const PhaseState fm = cov_forward(bg, params, s, wm, zm);
        for (int r = 0; r < 3; ++r) {
            jac[6 * r + c] = (fp.position[r] - fm.position[r]) / (2.0 * h);
            jac[6 * (r + 3) + c] = (fp.momentum[r] - fm.momentum[r]) / (2.0 * h);
        }
    }
    return jac;
}

double determinant6(std::array<double, 36> m) {
    double det = 1.0;
    for (int c = 0; c < 6; ++c) {
        int piv = c;
        for (int r = c + 1; r < 6; ++r)
            if (std::fabs(m[6 * r + c]) > std::fabs(m[6 * piv + c])) piv = r;
        if (m[6 * piv + c] == 0.0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < 6; ++k) std::swap(m[6 * c + k], m[6 * piv + k]);
            det = -det;
        }
        det *= m[6 * c + c];
        for (int r = c + 1; r < 6; ++r) {
            const double f = m[6 * r + c] / m[6 * c + c];
            for (int k = c; k < 6; ++k) m[6 * r + k] -= f * m[6 * c + k];
        }
    }
    return det;
}

double symplectic_defect(const std::array<double, 36>& jac) {
    auto omega = [](int i, int j) {
        if (i < 3 && j == i + 3) return 1.0;
        if (i >= 3 && j == i - 3) return -1.0;
        return 0.0;
    };
    double worst = 0.0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            double v = 0.0;
            for (int k = 0; k < 6; ++k)
                for (int l = 0; l < 6; ++l) v += jac[6 * k + i] * omega(k, l) * jac[6 * l + j];
            worst = std::max(worst, std::fabs(v - omega(i, j)));
        }
    return worst;
}

}  // namespace vrs
