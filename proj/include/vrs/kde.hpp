#pragma once

#include <array>
#include <span>
#include <vector>

#include "vrs/kernel_field.hpp"

namespace vrs {

// Per-axis bandwidths (x1, x2, x3, v1, v2, v3) of a Gaussian product kernel.
struct KdeBandwidth {
    std::array<double, 6> h{1, 1, 1, 1, 1, 1};

    static KdeBandwidth uniform(double h);
    // 1.06 sigma_hat_a N^{-1/7} per axis.
    static KdeBandwidth silverman(const ParticleEnsemble& ens);
    KdeBandwidth scaled(double factor) const;
};

struct PhasePoint {
    Vec3 x;
    Vec3 v;
};

// f, grad f and Hessian of f at one phase-space point (axis order x1..x3, v1..v3).
struct KdeDerivatives {
    double f = 0.0;
    std::array<double, 6> grad{};
    std::array<std::array<double, 6>, 6> hess{};
};

// gamma = sqrt(f) derived from KdeDerivatives.
struct GammaDerivatives {
    double g = 0.0;
    std::array<double, 6> grad{};
    std::array<std::array<double, 6>, 6> hess{};
};
GammaDerivatives gamma_derivatives(const KdeDerivatives& d);

// Kernel density estimate of f = sum_i w_i delta_{(x_i, v_i)} with a Gaussian product kernel, truncated
// at `cutoff` standard deviations (radially) and shifted to vanish there.
class PhaseSpaceKde {
public:
    PhaseSpaceKde(const ParticleEnsemble& ens, const KdeBandwidth& bw, double cutoff = 8.0);

    double density(const Vec3& x, const Vec3& v) const;
    double gamma(const Vec3& x, const Vec3& v) const;
    KdeDerivatives derivatives(const Vec3& x, const Vec3& v) const;
    const KdeBandwidth& bandwidth() const { return bw_; }

    std::vector<double> gamma_at(std::span<const PhasePoint> pts) const;

private:
    template <class Visit>
    void for_neighbours(const Vec3& x, const Vec3& v, Visit&& visit) const;

    KdeBandwidth bw_;
    double cutoff_;
    double norm_;
    double floor_;  // kernel value at the cutoff radius
    // Sorted by first position coordinate for pruning.
    std::vector<std::array<double, 6>> pts_;
    std::vector<double> w_;
};

// Up to m particle locations, chosen by a fixed stride.
std::vector<PhasePoint> stride_subset(const ParticleEnsemble& ens, std::size_t m);

}  // namespace vrs
