#include "vrs/sampling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "vrs/errors.hpp"

namespace vrs {

namespace {

constexpr double kBumpOffset = 1.5;  // DoubleBump centres at +-1.5 e1
constexpr double kRingRadius = 1.5;
constexpr double kRingWidth = 0.4;

double gauss3_peak(double sigma) { return std::pow(2.0 * std::numbers::pi * sigma * sigma, -1.5); }

}  // namespace

const char* to_string(DataProfile p) {
    switch (p) {
        case DataProfile::Gaussian: return "gaussian";
        case DataProfile::DoubleBump: return "double_bump";
        case DataProfile::Ring: return "ring";
    }
    return "unknown";
}

DataProfile parse_data_profile(const std::string& name) {
    if (name == "gaussian" || name == "Gaussian") return DataProfile::Gaussian;
    if (name == "double_bump" || name == "DoubleBump") return DataProfile::DoubleBump;
    if (name == "ring" || name == "Ring") return DataProfile::Ring;
    throw ConfigurationError("unknown data_profile '" + name + "'");
}

double profile_peak_density(DataProfile p) {
    const double velocity_peak = gauss3_peak(1.0);
    switch (p) {
        case DataProfile::Gaussian: return gauss3_peak(1.0) * velocity_peak;
        case DataProfile::DoubleBump: {
            // Maximum of the two-bump mixture along the axis through both centres.
            double best = 0.0;
            for (int k = 0; k <= 4000; ++k) {
                const double x = -3.0 + 6.0 * k / 4000.0;
                const double a = std::exp(-0.5 * (x - kBumpOffset) * (x - kBumpOffset));
                const double b = std::exp(-0.5 * (x + kBumpOffset) * (x + kBumpOffset));
                best = std::max(best, 0.5 * (a + b));
            }
            return best * gauss3_peak(1.0) * velocity_peak;
        }
        case DataProfile::Ring: {
            // Density at a ring point: average over the ring angle of a Gaussian tube.
            const double s2 = kRingWidth * kRingWidth;
            auto integrand = [&](double phi) {
                const double dx = kRingRadius - kRingRadius * std::cos(phi);
                const double dy = -kRingRadius * std::sin(phi);
                return std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
            };
            const double avg = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                   integrand, 0.0, 2.0 * std::numbers::pi, 15, 1e-12) /
                               (2.0 * std::numbers::pi);
            return avg * gauss3_peak(kRingWidth) * velocity_peak;
        }
    }
    return 0.0;
}

double profile_mass(DataProfile p, double epsilon) {
    if (!(epsilon >= 0.0)) throw DomainError("epsilon must be nonnegative");
    const double denom = 1.0 + std::sqrt(profile_peak_density(p));
    return (epsilon / denom) * (epsilon / denom);
}

ParticleEnsemble sample_initial_data(const InitialData& spec) {
    ParticleEnsemble ens;
    ens.frame = Frame::Physical;
    ens.time = 1.0;
    if (spec.n_particles == 0) return ens;
    const double w = profile_mass(spec.profile, spec.epsilon) / static_cast<double>(spec.n_particles);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    ens.positions.reserve(spec.n_particles);
    for (std::size_t i = 0; i < spec.n_particles; ++i) {
        Vec3 x;
        switch (spec.profile) {
            case DataProfile::Gaussian: x = {normal(rng), normal(rng), normal(rng)}; break;
            case DataProfile::DoubleBump: {
                const double side = uniform(rng) < 0.5 ? -kBumpOffset : kBumpOffset;
                x = {side + normal(rng), normal(rng), normal(rng)};
                break;
            }
            case DataProfile::Ring: {
                const double phi = 2.0 * std::numbers::pi * uniform(rng);
                x = {kRingRadius * std::cos(phi) + kRingWidth * normal(rng),
                     kRingRadius * std::sin(phi) + kRingWidth * normal(rng), kRingWidth * normal(rng)};
                break;
            }
        }
        const Vec3 v{normal(rng), normal(rng), normal(rng)};
        ens.push_back(x, v, w);
    }
    return ens;
}

}  // namespace vrs
