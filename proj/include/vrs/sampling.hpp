#pragma once

#include <cstdint>
#include <string>

#include "vrs/kernel_field.hpp"

namespace vrs {

enum class DataProfile { Gaussian, DoubleBump, Ring };

const char* to_string(DataProfile p);
DataProfile parse_data_profile(const std::string& name);

// Smallness of the initial data: ||mu||_{L^2} + ||mu||_{L^inf} = epsilon with f = mu^2.
// Positions and velocities are drawn from the unit-mass profile; weights are M/N.
struct InitialData {
    DataProfile profile = DataProfile::Gaussian;
    double epsilon = 0.05;
    std::size_t n_particles = 1000;
    std::uint64_t seed = 1;
};

// sup of the unit-mass phase-space density of the profile.
double profile_peak_density(DataProfile p);
// Total mass M achieving the requested epsilon.
double profile_mass(DataProfile p, double epsilon);

// Physical-frame ensemble at t = 1.
ParticleEnsemble sample_initial_data(const InitialData& spec);

}  // namespace vrs
