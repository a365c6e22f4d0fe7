#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vrs/vec3.hpp"

namespace vrs {

// c_alpha = Gamma((3-2a)/2) / (pi^{3/2} 2^{2a} Gamma(a)). Throws DomainError for a <= 0 or a >= 3/2.
double riesz_constant(double alpha);

class ModelParams {
public:
    // alpha in (1/2, 3/2); lambda in {-1, +1}; softening >= 0.
    ModelParams(double alpha, int lambda, double softening = 0.0);

    double alpha() const { return alpha_; }
    int lambda() const { return lambda_; }
    double c_alpha() const { return c_alpha_; }
    double softening() const { return softening_; }
    ModelParams with_softening(double eps) const { return ModelParams(alpha_, lambda_, eps); }
    ModelParams with_lambda(int lambda) const { return ModelParams(alpha_, lambda, softening_); }

    // alpha != 1; needed wherever 1/(2 - 2 alpha) appears.
    bool has_correction() const { return alpha_ != 1.0; }
    // lambda / (2 - 2 alpha).
    double correction_coefficient() const;

private:
    double alpha_;
    int lambda_;
    double c_alpha_;
    double softening_;
};

enum class Frame { Physical, PseudoConformal, Wave };

const char* to_string(Frame f);

struct ParticleEnsemble {
    Frame frame = Frame::Physical;
    double time = 0.0;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::vector<double> weights;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    double total_mass() const;
    // Throws ConfigurationError on length mismatch or negative weights.
    void validate() const;
    void push_back(const Vec3& x, const Vec3& v, double w);
};

// Positions and velocities exchanged; used for velocity-space fields.
ParticleEnsemble velocity_swapped(const ParticleEnsemble& ens);

// (sigma_x sigma_y sigma_z)^{1/3} N^{-1/3}, the typical neighbour distance.
double interparticle_scale(const ParticleEnsemble& ens);
// 1e-3 times the interparticle scale.
double default_softening(const ParticleEnsemble& ens);

enum class GridSpace { Position, Velocity };

struct GridSpec {
    Vec3 origin;
    Vec3 spacing{1.0, 1.0, 1.0};
    std::array<std::size_t, 3> dims{0, 0, 0};

    std::size_t node_count() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + dims[0] * (j + dims[1] * k); }
    Vec3 node(std::size_t i, std::size_t j, std::size_t k) const {
        return {origin[0] + spacing[0] * static_cast<double>(i), origin[1] + spacing[1] * static_cast<double>(j),
                origin[2] + spacing[2] * static_cast<double>(k)};
    }
    double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
    // Cubic grid of n^3 nodes centred at `centre` with side length `side`.
    static GridSpec cube(const Vec3& centre, double side, std::size_t n);
};

// Scalar (components = 1) or vector (components = 3, interleaved per node) grid data.
struct GridField {
    GridSpec spec;
    std::size_t components = 1;
    std::vector<double> values;
    GridSpace space = GridSpace::Position;

    static GridField scalar(const GridSpec& spec, GridSpace space = GridSpace::Position);
    static GridField vector(const GridSpec& spec, GridSpace space = GridSpace::Position);

    double& at(std::size_t node, std::size_t comp = 0) { return values[node * components + comp]; }
    double at(std::size_t node, std::size_t comp = 0) const { return values[node * components + comp]; }
    Vec3 vec(std::size_t node) const { return {values[3 * node], values[3 * node + 1], values[3 * node + 2]}; }
    void validate() const;
};

// Softened Riesz kernel  phi(d) = c (|d|^2 + eps^2)^beta,  beta = (2 alpha - 3)/2, and its derivatives.
class RieszKernel {
public:
    explicit RieszKernel(const ModelParams& params);
    RieszKernel(double c, double alpha, double softening);

    double potential(const Vec3& d) const;
    Vec3 gradient(const Vec3& d) const;
    Mat3 hessian(const Vec3& d) const;
    Tensor3 third(const Vec3& d) const;
    // Potential and gradient together.
    double potential_and_gradient(const Vec3& d, Vec3& grad) const;

    double softening() const { return std::sqrt(eps2_); }

private:
    double c_;
    double beta_;
    double eps2_;
};

double potential_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x);
Vec3 field_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x);
// Jacobian of the field (Hessian of the potential).
Mat3 field_gradient_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x);
Tensor3 field_hessian_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x);
// field_at over many points, parallel over points.
std::vector<Vec3> field_at_points(const ModelParams& params, const ParticleEnsemble& ens, std::span<const Vec3> xs);

// Same sums over raw position/weight arrays; `skip` excludes one source index (self-force).
Vec3 field_from_sources(const RieszKernel& kernel, std::span<const Vec3> positions, std::span<const double> weights,
                        const Vec3& x, std::size_t skip = static_cast<std::size_t>(-1));
double potential_from_sources(const RieszKernel& kernel, std::span<const Vec3> positions,
                              std::span<const double> weights, const Vec3& x,
                              std::size_t skip = static_cast<std::size_t>(-1));
// Field at every source from all others, visiting each pair once (serial, fixed order).
std::vector<Vec3> mutual_fields(const RieszKernel& kernel, std::span<const Vec3> positions,
                                std::span<const double> weights);

// --- dyadic decomposition -------------------------------------------------

// Smooth radial bump supported on [1/2, 2], normalised so that its 3-D integral is 1.
double bump(double r);
double bump_derivative(double r);

struct DyadicConfig {
    double r_min = 1e-3;
    double r_max = 1e3;
    int levels_per_octave = 24;
    // c with  int_0^inf R^{-(3-2a)} chi(r/R) dR/R = c r^{-(3-2a)}.
    double bump_normalization = 1.0;
    // c_v with  int_0^inf chi(u/V) dV/V = c_v.
    double velocity_normalization = 1.0;

    // Computes the normalisation constants for the given alpha by quadrature.
    static DyadicConfig make(double alpha, double r_min, double r_max, int levels_per_octave = 24);
    // Midpoint ladder in log R: R_k = r_min 2^{(k + 1/2)/L}.
    std::vector<double> ladder() const;
    double log_step() const;
    void validate() const;
};

double dyadic_normalization(double alpha);
double dyadic_velocity_normalization();

Vec3 dyadic_component(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg, double R,
                      const Vec3& x);
Vec3 dyadic_velocity_component(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg,
                               double R, double V, const Vec3& x);
// Throws CoverageError if the ladder does not cover [min offset / 2, 2 max offset].
Vec3 dyadic_reconstruct(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg,
                        const Vec3& x);

}  // namespace vrs
