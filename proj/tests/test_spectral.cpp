#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vrs/errors.hpp"
#include "vrs/spectral.hpp"
#include "vrs/transport.hpp"

using namespace vrs;

namespace {

GridField gaussian_density(const GridSpec& spec, double sigma, double mass) {
    GridField rho = GridField::scalar(spec);
    const double norm = mass / std::pow(2.0 * std::numbers::pi * sigma * sigma, 1.5);
    for (std::size_t k = 0; k < spec.dims[2]; ++k)
        for (std::size_t j = 0; j < spec.dims[1]; ++j)
            for (std::size_t i = 0; i < spec.dims[0]; ++i)
                rho.at(spec.index(i, j, k)) = norm * std::exp(-0.5 * norm2(spec.node(i, j, k)) / (sigma * sigma));
    return rho;
}

// Newtonian field of a Gaussian ball, E = grad(V * rho) with V = 1 / (4 pi r).
Vec3 gaussian_ball_field(const Vec3& x, double sigma, double mass) {
    const double r = norm(x);
    const double u = r / (std::sqrt(2.0) * sigma);
    const double enclosed = mass * (std::erf(u) - 2.0 / std::sqrt(std::numbers::pi) * u * std::exp(-u * u));
    return x * (-enclosed / (4.0 * std::numbers::pi * r * r * r));
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("zero density gives zero field") {
    const GridSpec spec = GridSpec::cube({}, 4.0, 16);
    const GridField e = spectral_field(ModelParams(0.8, 1), GridField::scalar(spec));
    for (double v : e.values) CHECK(v == 0.0);
}

TEST_CASE("gaussian ball at alpha 1 against the closed form") {
    const double sigma = 0.5, mass = 1.0;
    const GridSpec spec = GridSpec::cube({}, 8.0, 64);
    const GridField e = spectral_field(ModelParams(1.0, 1), gaussian_density(spec, sigma, mass));
    double worst = 0.0, peak = 0.0;
    for (std::size_t k = 24; k <= 40; ++k)
        for (std::size_t j = 24; j <= 40; ++j)
            for (std::size_t i = 24; i <= 40; ++i) {
                const Vec3 x = spec.node(i, j, k);
                if (norm(x) < 1e-12) continue;
                const Vec3 ref = gaussian_ball_field(x, sigma, mass);
                worst = std::max(worst, norm(e.vec(spec.index(i, j, k)) - ref));
                peak = std::max(peak, norm(ref));
            }
    CHECK(worst <= 0.02 * peak);
}

TEST_CASE("even density gives an odd first component") {
    const GridSpec spec = GridSpec::cube({}, 6.0, 32);
    GridField rho = GridField::scalar(spec);
    for (std::size_t k = 0; k < 32; ++k)
        for (std::size_t j = 0; j < 32; ++j)
            for (std::size_t i = 0; i < 32; ++i) {
                const Vec3 x = spec.node(i, j, k);
                rho.at(spec.index(i, j, k)) = std::exp(-x[0] * x[0] - 2.0 * (x[1] - 0.3) * (x[1] - 0.3) - x[2] * x[2]) *
                                              (1.0 + 0.3 * std::cos(x[1] + x[2]));
            }
    const GridField e = spectral_field(ModelParams(1.2, 1), rho);
    double worst = 0.0;
    for (std::size_t k = 0; k < 32; ++k)
        for (std::size_t j = 0; j < 32; ++j)
            for (std::size_t i = 0; i < 32; ++i) {
                const std::size_t m = (32 - i) % 32;
                worst = std::max(worst, std::fabs(e.at(spec.index(i, j, k), 0) + e.at(spec.index(m, j, k), 0)));
            }
    CHECK(worst <= 1e-10);
}

TEST_CASE("spectral solver reuses plans") {
    const GridSpec spec = GridSpec::cube({}, 8.0, 32);
    SpectralSolver solver(ModelParams(0.9, 1), spec);
    const GridField rho = gaussian_density(spec, 0.7, 1.0);
    const GridField a = solver.solve(rho);
    const GridField b = solver.solve(rho);
    CHECK(a.values == b.values);
    GridSpec other = spec;
    other.dims = {16, 16, 16};
    CHECK_THROWS(solver.solve(GridField::scalar(other)));
}

TEST_CASE("cic deposition") {
    const GridSpec spec = GridSpec::cube({}, 4.0, 8);
    SUBCASE("a particle between nodes spreads over eight nodes") {
        ParticleEnsemble one;
        one.push_back(spec.node(3, 4, 2) + Vec3{0.1, 0.2, 0.3}, {}, 2.5);
        const GridField rho = deposit_density(one, spec, Boundary::Bounded);
        int nonzero = 0;
        double mass = 0.0;
        for (double v : rho.values) {
            nonzero += v != 0.0;
            mass += v * spec.cell_volume();
        }
        CHECK(nonzero == 8);
        CHECK(mass == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("bounded grids reject outside particles") {
        ParticleEnsemble far;
        far.push_back({10, 0, 0}, {}, 1.0);
        CHECK_THROWS_AS(deposit_density(far, spec, Boundary::Bounded), CoverageError);
        CHECK_NOTHROW(deposit_density(far, spec, Boundary::Periodic));
    }
}

TEST_CASE("current moments") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    ParticleEnsemble e;
    for (int i = 0; i < 200; ++i) e.push_back({g(rng), g(rng), g(rng)}, {g(rng), g(rng), g(rng)}, 0.01 * (1 + i % 3));
    const ParticleEnsemble* one[1] = {&e};
    const GridSpec spec = bounding_grid(std::span<const ParticleEnsemble* const>(one, 1), 16, 0.1);
    const MomentFields m = deposit_moments(e, spec);
    Vec3 total, direct;
    for (std::size_t n = 0; n < spec.node_count(); ++n) total += m.j.vec(n) * spec.cell_volume();
    for (std::size_t i = 0; i < e.size(); ++i) direct += e.velocities[i] * e.weights[i];
    CHECK(max_abs(total - direct) <= 1e-12);

    ParticleEnsemble flipped = e;
    for (auto& v : flipped.velocities) v = -v;
    const MomentFields f = deposit_moments(flipped, spec);
    for (std::size_t k = 0; k < f.j.values.size(); ++k) CHECK(f.j.values[k] == -m.j.values[k]);
    CHECK(f.rho.values == m.rho.values);
}

TEST_CASE("interpolation is exact at nodes") {
    const GridSpec spec = GridSpec::cube({1, 1, 1}, 2.0, 8);
    GridField f = GridField::scalar(spec);
    for (std::size_t n = 0; n < f.values.size(); ++n) f.values[n] = 0.5 * n;
    CHECK(interpolate_scalar(f, spec.node(2, 3, 4), Boundary::Bounded) == doctest::Approx(f.at(spec.index(2, 3, 4))));
}

TEST_CASE("particle mesh field converges to the smooth ball") {
    // lattice quadrature of a Gaussian ball: no sampling noise
    const double sigma = 0.5, h = 0.1;
    ParticleEnsemble e;
    double total = 0.0;
    for (int i = -25; i < 25; ++i)
        for (int j = -25; j < 25; ++j)
            for (int k = -25; k < 25; ++k) {
                const Vec3 x{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
                const double w = std::exp(-0.5 * norm2(x) / (sigma * sigma));
                e.push_back(x, {}, w);
                total += w;
            }
    for (auto& w : e.weights) w /= total;
    const ModelParams p(1.0, 1, h);
    const std::vector<Vec3> pts{{0.6, 0, 0}, {0, -0.7, 0.2}, {0.4, 0.4, 0.4}};
    double peak = 0.0;
    for (const auto& x : pts) peak = std::max(peak, norm(gaussian_ball_field(x, sigma, 1.0)));
    std::vector<double> err;
    for (std::size_t n : {32, 64, 128}) {
        SpectralSolver solver(p, pm_grid_for(e, n, 2.0));
        const auto pm = pm_field_at_points(solver, e, pts);
        double worst = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) worst = std::max(worst, norm(pm[k] - gaussian_ball_field(pts[k], sigma, 1.0)));
        err.push_back(worst / peak);
    }
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
    CHECK(err[2] <= 0.05);
}

}  // TEST_SUITE
