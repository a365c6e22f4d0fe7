#include "vrs/kernel_field.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"

namespace vrs {

namespace {

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

template <class F>
double integrate(F&& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

double bump_unnormalized(double r) {
    const double t = (4.0 / 3.0) * (r - 0.5) - 1.0;
    if (std::fabs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

double bump_mass() {
    static const double z =
        4.0 * std::numbers::pi * integrate([](double r) { return bump_unnormalized(r) * r * r; }, 0.5, 2.0);
    return z;
}

}  // namespace

double riesz_constant(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.5)) {
        std::ostringstream msg;
        msg << "riesz_constant: alpha = " << alpha << " outside (0, 3/2)";
        throw DomainError(msg.str());
    }
    return std::tgamma((3.0 - 2.0 * alpha) / 2.0) /
           (std::pow(std::numbers::pi, 1.5) * std::pow(2.0, 2.0 * alpha) * std::tgamma(alpha));
}

ModelParams::ModelParams(double alpha, int lambda, double softening)
    : alpha_(alpha), lambda_(lambda), c_alpha_(0.0), softening_(softening) {
    if (!(alpha > 0.5) || !(alpha < 1.5)) {
        std::ostringstream msg;
        msg << "ModelParams: alpha = " << alpha << " outside (1/2, 3/2)";
        throw DomainError(msg.str());
    }
    if (lambda != 1 && lambda != -1) throw DomainError("ModelParams: lambda must be -1 or +1");
    if (!(softening >= 0.0) || !std::isfinite(softening)) throw DomainError("ModelParams: softening must be >= 0");
    c_alpha_ = riesz_constant(alpha);
}

double ModelParams::correction_coefficient() const {
    if (!has_correction()) throw DomainError("correction coefficient lambda/(2-2alpha) undefined at alpha = 1");
    return static_cast<double>(lambda_) / (2.0 - 2.0 * alpha_);
}

const char* to_string(Frame f) {
    switch (f) {
        case Frame::Physical: return "physical";
        case Frame::PseudoConformal: return "pseudo_conformal";
        case Frame::Wave: return "wave";
    }
    return "unknown";
}

double ParticleEnsemble::total_mass() const { return deterministic_sum(weights); }

void ParticleEnsemble::validate() const {
    if (velocities.size() != positions.size() || weights.size() != positions.size())
        throw ConfigurationError("ParticleEnsemble: positions, velocities and weights differ in length");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigurationError("ParticleEnsemble: negative or non-finite weight");
}

void ParticleEnsemble::push_back(const Vec3& x, const Vec3& v, double w) {
    positions.push_back(x);
    velocities.push_back(v);
    weights.push_back(w);
}

ParticleEnsemble velocity_swapped(const ParticleEnsemble& ens) {
    ParticleEnsemble out = ens;
    std::swap(out.positions, out.velocities);
    return out;
}

double interparticle_scale(const ParticleEnsemble& ens) {
    const std::size_t n = ens.size();
    if (n < 2) return 1.0;
    Vec3 mean;
    for (const auto& x : ens.positions) mean += x;
    mean = mean / static_cast<double>(n);
    Vec3 var;
    for (const auto& x : ens.positions) {
        const Vec3 d = x - mean;
        for (int a = 0; a < 3; ++a) var[a] += d[a] * d[a];
    }
    const double prod = std::sqrt(var[0] / n) * std::sqrt(var[1] / n) * std::sqrt(var[2] / n);
    const double sigma = std::cbrt(prod);
    if (!(sigma > 0.0)) return 1.0;
    return sigma / std::cbrt(static_cast<double>(n));
}

double default_softening(const ParticleEnsemble& ens) { return 1e-3 * interparticle_scale(ens); }

GridSpec GridSpec::cube(const Vec3& centre, double side, std::size_t n) {
    GridSpec g;
    const double h = side / static_cast<double>(n);
    g.spacing = {h, h, h};
    g.dims = {n, n, n};
    const double half = 0.5 * h * static_cast<double>(n);
    g.origin = centre - Vec3{half, half, half};
    return g;
}

GridField GridField::scalar(const GridSpec& spec, GridSpace space) {
    GridField f;
    f.spec = spec;
    f.components = 1;
    f.values.assign(spec.node_count(), 0.0);
    f.space = space;
    return f;
}

GridField GridField::vector(const GridSpec& spec, GridSpace space) {
    GridField f;
    f.spec = spec;
    f.components = 3;
    f.values.assign(3 * spec.node_count(), 0.0);
    f.space = space;
    return f;
}

void GridField::validate() const {
    for (int a = 0; a < 3; ++a)
        if (!(spec.spacing[a] > 0.0)) throw ConfigurationError("GridField: spacing must be strictly positive");
    if (components != 1 && components != 3) throw ConfigurationError("GridField: components must be 1 or 3");
    if (values.size() != components * spec.node_count())
        throw ConfigurationError("GridField: values length does not match dims");
}

// --- kernel ------------------------------------------------------------------

RieszKernel::RieszKernel(const ModelParams& params)
    : RieszKernel(params.c_alpha(), params.alpha(), params.softening()) {}

RieszKernel::RieszKernel(double c, double alpha, double softening)
    : c_(c), beta_((2.0 * alpha - 3.0) / 2.0), eps2_(softening * softening) {}

namespace {
inline double checked_u(const Vec3& d, double eps2) {
    const double u = norm2(d) + eps2;
    if (u == 0.0) throw SingularEvaluation("Riesz kernel evaluated at a particle location with zero softening");
    return u;
}
}  // namespace

double RieszKernel::potential(const Vec3& d) const {
    const double u = checked_u(d, eps2_);
    return c_ * std::pow(u, beta_);
}

Vec3 RieszKernel::gradient(const Vec3& d) const {
    const double u = checked_u(d, eps2_);
    return d * (2.0 * beta_ * c_ * std::pow(u, beta_ - 1.0));
}

double RieszKernel::potential_and_gradient(const Vec3& d, Vec3& grad) const {
    const double u = checked_u(d, eps2_);
    const double pm1 = std::pow(u, beta_ - 1.0);
    grad = d * (2.0 * beta_ * c_ * pm1);
    return c_ * u * pm1;
}

Mat3 RieszKernel::hessian(const Vec3& d) const {
    const double u = checked_u(d, eps2_);
    const double pm1 = std::pow(u, beta_ - 1.0);
    const double a = 2.0 * beta_ * c_ * pm1;
    const double b = 2.0 * beta_ * c_ * 2.0 * (beta_ - 1.0) * pm1 / u;
    Mat3 h = outer(d, d) * b;
    for (int i = 0; i < 3; ++i) h(i, i) += a;
    return h;
}

Tensor3 RieszKernel::third(const Vec3& d) const {
    const double u = checked_u(d, eps2_);
    const double pm2 = std::pow(u, beta_ - 2.0);
    const double a = 2.0 * beta_ * c_ * 2.0 * (beta_ - 1.0) * pm2;
    const double b = 2.0 * beta_ * c_ * 4.0 * (beta_ - 1.0) * (beta_ - 2.0) * pm2 / u;
    Tensor3 t{};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = b * d[i] * d[j] * d[k];
                if (i == j) v += a * d[k];
                if (j == k) v += a * d[i];
                if (i == k) v += a * d[j];
                t[k](i, j) = v;
            }
    return t;
}

Vec3 field_from_sources(const RieszKernel& kernel, std::span<const Vec3> positions, std::span<const double> weights,
                        const Vec3& x, std::size_t skip) {
    Vec3 e;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (i == skip || weights[i] == 0.0) continue;
        e += kernel.gradient(x - positions[i]) * weights[i];
    }
    return e;
}

double potential_from_sources(const RieszKernel& kernel, std::span<const Vec3> positions,
                              std::span<const double> weights, const Vec3& x, std::size_t skip) {
    double phi = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (i == skip || weights[i] == 0.0) continue;
        phi += weights[i] * kernel.potential(x - positions[i]);
    }
    return phi;
}

std::vector<Vec3> mutual_fields(const RieszKernel& kernel, std::span<const Vec3> positions,
                                std::span<const double> weights) {
    const std::size_t n = positions.size();
    std::vector<Vec3> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 xi = positions[i];
        Vec3 acc;
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 g = kernel.gradient(xi - positions[j]);
            acc += g * weights[j];
            e[j] -= g * weights[i];
        }
        e[i] += acc;
    }
    return e;
}

double potential_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x) {
    return potential_from_sources(RieszKernel(params), ens.positions, ens.weights, x, kNoSkip);
}

Vec3 field_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x) {
    return field_from_sources(RieszKernel(params), ens.positions, ens.weights, x, kNoSkip);
}

Mat3 field_gradient_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x) {
    const RieszKernel kernel(params);
    Mat3 g;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (ens.weights[i] == 0.0) continue;
        g += kernel.hessian(x - ens.positions[i]) * ens.weights[i];
    }
    return g;
}

Tensor3 field_hessian_at(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& x) {
    const RieszKernel kernel(params);
    Tensor3 t{};
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (ens.weights[i] == 0.0) continue;
        const Tensor3 ti = kernel.third(x - ens.positions[i]);
        for (int k = 0; k < 3; ++k) t[k] += ti[k] * ens.weights[i];
    }
    return t;
}

std::vector<Vec3> field_at_points(const ModelParams& params, const ParticleEnsemble& ens, std::span<const Vec3> xs) {
    std::vector<Vec3> out(xs.size());
    const RieszKernel kernel(params);
    parallel_for(xs.size(), [&](std::size_t k) {
        out[k] = field_from_sources(kernel, ens.positions, ens.weights, xs[k], kNoSkip);
    });
    return out;
}

// --- dyadic ------------------------------------------------------------------

double bump(double r) { return bump_unnormalized(r) / bump_mass(); }

double bump_derivative(double r) {
    const double t = (4.0 / 3.0) * (r - 0.5) - 1.0;
    if (std::fabs(t) >= 1.0) return 0.0;
    const double one = 1.0 - t * t;
    return bump(r) * (-2.0 * t / (one * one)) * (4.0 / 3.0);
}

double dyadic_normalization(double alpha) {
    return integrate([alpha](double u) { return std::pow(u, 2.0 - 2.0 * alpha) * bump(u); }, 0.5, 2.0);
}

double dyadic_velocity_normalization() {
    return integrate([](double u) { return bump(u) / u; }, 0.5, 2.0);
}

DyadicConfig DyadicConfig::make(double alpha, double r_min, double r_max, int levels_per_octave) {
    DyadicConfig cfg;
    cfg.r_min = r_min;
    cfg.r_max = r_max;
    cfg.levels_per_octave = levels_per_octave;
    cfg.bump_normalization = dyadic_normalization(alpha);
    cfg.velocity_normalization = dyadic_velocity_normalization();
    cfg.validate();
    return cfg;
}

void DyadicConfig::validate() const {
    if (!(r_min > 0.0) || !(r_max > r_min)) throw ConfigurationError("DyadicConfig: need 0 < R_min < R_max");
    if (levels_per_octave < 1) throw ConfigurationError("DyadicConfig: levels_per_octave must be >= 1");
}

double DyadicConfig::log_step() const { return std::numbers::ln2 / static_cast<double>(levels_per_octave); }

std::vector<double> DyadicConfig::ladder() const {
    validate();
    const auto k_max = static_cast<std::size_t>(std::ceil(std::log2(r_max / r_min) * levels_per_octave - 1e-12));
    std::vector<double> rs(k_max);
    for (std::size_t k = 0; k < k_max; ++k)
        rs[k] = r_min * std::exp2((static_cast<double>(k) + 0.5) / levels_per_octave);
    return rs;
}

namespace {

// (grad chi)(y) for the radial bump.
inline Vec3 bump_gradient(const Vec3& y) {
    const double r = norm(y);
    if (r <= 0.5 || r >= 2.0) return {};
    return y * (bump_derivative(r) / r);
}

}  // namespace

Vec3 dyadic_component(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg, double R,
                      const Vec3& x) {
    if (!(R > 0.0)) throw DomainError("dyadic_component: R must be positive");
    const double scale = params.c_alpha() / cfg.bump_normalization * std::pow(R, -(3.0 - 2.0 * params.alpha()));
    Vec3 e;
    for (std::size_t i = 0; i < ens.size(); ++i) e += bump_gradient((x - ens.positions[i]) / R) * ens.weights[i];
    return e * scale;
}

Vec3 dyadic_velocity_component(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg,
                               double R, double V, const Vec3& x) {
    if (!(R > 0.0) || !(V > 0.0)) throw DomainError("dyadic_velocity_component: R and V must be positive");
    const double scale = params.c_alpha() / cfg.bump_normalization * std::pow(R, -(3.0 - 2.0 * params.alpha()));
    Vec3 e;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double chi_v = bump(norm(ens.velocities[i]) / V);
        if (chi_v == 0.0) continue;
        e += bump_gradient((x - ens.positions[i]) / R) * (ens.weights[i] * chi_v);
    }
    return e * scale;
}

Vec3 dyadic_reconstruct(const ModelParams& params, const ParticleEnsemble& ens, const DyadicConfig& cfg,
                        const Vec3& x) {
    if (ens.empty()) return {};
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (ens.weights[i] == 0.0) continue;
        const double d = norm(x - ens.positions[i]);
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
    }
    if (d_max == 0.0 && d_min == std::numeric_limits<double>::infinity()) return {};
    if (cfg.r_min > 0.5 * d_min || cfg.r_max < 2.0 * d_max) {
        std::ostringstream msg;
        msg << "dyadic_reconstruct: ladder [" << cfg.r_min << ", " << cfg.r_max << "] does not cover offsets ["
            << d_min << ", " << d_max << "]";
        throw CoverageError(msg.str());
    }
    const double h = cfg.log_step();
    Vec3 e;
    for (double R : cfg.ladder()) e += dyadic_component(params, ens, cfg, R, x) * (h / R);
    return e;
}

}  // namespace vrs
