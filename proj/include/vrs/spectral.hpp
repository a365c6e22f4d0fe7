#pragma once

#include <memory>
#include <span>
#include <vector>

#include "vrs/kernel_field.hpp"

namespace vrs {

// grad(V_alpha * rho) on a periodic grid through the multiplier i xi |xi|^{-2 alpha};
// the zero mode and the Nyquist derivative modes are set to zero.
GridField spectral_field(const ModelParams& params, const GridField& rho);

// Holds FFTW plans and buffers for repeated solves on one grid shape.
class SpectralSolver {
public:
    SpectralSolver(const ModelParams& params, const GridSpec& spec);
    ~SpectralSolver();
    SpectralSolver(const SpectralSolver&) = delete;
    SpectralSolver& operator=(const SpectralSolver&) = delete;

    const GridSpec& spec() const { return spec_; }
    // rho must live on spec().
    GridField solve(const GridField& rho);

private:
    struct Plans;
    ModelParams params_;
    GridSpec spec_;
    std::unique_ptr<Plans> plans_;
};

enum class Boundary { Bounded, Periodic };

// Cloud-in-cell deposition of sum_i w_i delta(x - x_i) as a density (mass / volume).
// Bounded: particles outside the node box throw CoverageError. Periodic: indices wrap.
GridField deposit_density(const ParticleEnsemble& ens, const GridSpec& spec, Boundary boundary);

// Trilinear (cloud-in-cell) interpolation of a scalar or vector grid field.
double interpolate_scalar(const GridField& f, const Vec3& x, Boundary boundary);
Vec3 interpolate_vector(const GridField& f, const Vec3& x, Boundary boundary);

// Particle-mesh field at arbitrary points: deposit, spectral solve, interpolate.
std::vector<Vec3> pm_field_at_points(SpectralSolver& solver, const ParticleEnsemble& sources,
                                     std::span<const Vec3> points);

// Cubic periodic box around the ensemble: side = padding * (extent + margin), n nodes per axis.
GridSpec pm_grid_for(const ParticleEnsemble& ens, std::size_t n, double padding = 2.0, double margin = 0.0);

}  // namespace vrs
