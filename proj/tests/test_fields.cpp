#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "vrs/errors.hpp"
#include "vrs/fields.hpp"
#include "vrs/grid_io.hpp"
#include "vrs/kde.hpp"
#include "vrs/sampling.hpp"

using namespace vrs;

namespace {

ParticleEnsemble gaussian_cloud(std::size_t n, std::uint64_t seed, double sx = 1.0, double sv = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    ParticleEnsemble e;
    e.time = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        e.push_back({sx * g(rng), sx * g(rng), sx * g(rng)}, {sv * g(rng), sv * g(rng), sv * g(rng)}, 1.0 / n);
    return e;
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("affine field derivatives") {
    Mat3 m;
    m(0, 0) = 1.0;
    m(0, 1) = m(1, 0) = 0.5;
    m(2, 2) = -2.0;
    const AffineField f({1, 2, 3}, m);
    const Vec3 x{0.5, -1.0, 2.0};
    CHECK(f.field(x) == Vec3{1.0 + 0.5 - 0.5, 2.0 + 0.25, 3.0 - 4.0});
    CHECK(f.gradient(x)(0, 1) == 0.5);
    CHECK(f.potential(x) == doctest::Approx(0.5 + -2.0 + 6.0 + 0.5 * (0.25 - 0.5 - 8.0)));
}

TEST_CASE("zero field has no content") {
    const ZeroField z;
    CHECK(z.field({1, 2, 3}) == Vec3{});
    CHECK(z.potential({1, 2, 3}) == 0.0);
}

TEST_CASE("kernel sum field matches the free functions") {
    const auto e = gaussian_cloud(20, 3);
    const ModelParams p(0.9, 1, 0.1);
    const KernelSumField f(p, e);
    const Vec3 x{0.2, 0.1, -0.3};
    CHECK(max_abs(f.field(x) - field_at(p, e, x)) < 1e-15);
    CHECK(f.potential(x) == doctest::Approx(potential_at(p, e, x)));
    const Mat3 g = field_gradient_at(p, e, x);
    CHECK(f.gradient(x)(1, 2) == doctest::Approx(g(1, 2)));
}

TEST_CASE("linear combination is linear") {
    const auto e = gaussian_cloud(10, 5);
    const ModelParams p(1.1, 1, 0.2);
    auto a = std::make_shared<KernelSumField>(p, e);
    auto b = std::make_shared<AffineField>(Vec3{1, 0, 0});
    const LinearCombinationField lc({{2.0, a}, {-1.0, b}});
    const Vec3 x{0.3, 0.3, 0.3};
    CHECK(max_abs(lc.field(x) - (2.0 * a->field(x) - b->field(x))) < 1e-14);
    CHECK(lc.has_potential());
    CHECK(lc.potential(x) == doctest::Approx(2.0 * a->potential(x) - b->potential(x)));
}

TEST_CASE("grid sampled field reproduces a smooth field") {
    const auto e = gaussian_cloud(15, 6);
    const ModelParams p(1.0, 1, 1.0);
    const KernelSumField exact(p, e);
    const GridSpec spec = GridSpec::cube({}, 4.0, 41);
    GridField values = GridField::vector(spec);
    for (std::size_t k = 0; k < spec.dims[2]; ++k)
        for (std::size_t j = 0; j < spec.dims[1]; ++j)
            for (std::size_t i = 0; i < spec.dims[0]; ++i) {
                const std::size_t n = spec.index(i, j, k);
                const Vec3 v = exact.field(spec.node(i, j, k));
                for (int c = 0; c < 3; ++c) values.at(n, c) = v[c];
            }
    const GridSampledField g(values);
    const Vec3 x = spec.node(20, 18, 22);
    CHECK(max_abs(g.field(x) - exact.field(x)) < 1e-12);
    const double scale = frobenius(exact.gradient(x));
    CHECK(frobenius(g.gradient(x) - exact.gradient(x)) < 1e-3 * scale);
    CHECK(g.field({10, 0, 0}) == Vec3{});
}

TEST_CASE("grid files round trip") {
    GridSpec spec;
    spec.origin = {-1.0, 0.5, 2.0};
    spec.spacing = {0.1, 0.2, 0.3};
    spec.dims = {3, 4, 5};
    GridField f = GridField::vector(spec, GridSpace::Velocity);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(0.1 * i);
    std::stringstream buf;
    write_grid(buf, f);
    CHECK(buf.str().size() == 8 + 24 + 24 + 24 + 8 + f.values.size() * 8);
    const GridField g = read_grid(buf);
    CHECK(g.values == f.values);
    CHECK(g.components == 3);
    CHECK(g.space == GridSpace::Velocity);
    CHECK(g.spec.dims == spec.dims);
    CHECK(g.spec.origin == spec.origin);

    std::stringstream bad("NOTAGRID and some bytes");
    CHECK_THROWS_AS(read_grid(bad), ConfigurationError);
    CHECK_THROWS_AS(load_grid("/nonexistent/grid.bin"), ConfigurationError);
}

TEST_CASE("kde of a gaussian sample") {
    const auto e = gaussian_cloud(20000, 7);
    const PhaseSpaceKde kde(e, KdeBandwidth::silverman(e));
    // N(0, 1 + h^2) per axis at the origin
    double expected = 1.0;
    for (double h : KdeBandwidth::silverman(e).h) expected /= std::sqrt(2.0 * 3.141592653589793 * (1.0 + h * h));
    CHECK(kde.density({}, {}) == doctest::Approx(expected).epsilon(0.1));
    CHECK(kde.gamma({}, {}) == doctest::Approx(std::sqrt(kde.density({}, {}))));
    CHECK(kde.density({30, 0, 0}, {}) == 0.0);
}

TEST_CASE("kde derivatives against differences") {
    const auto e = gaussian_cloud(300, 8);
    const PhaseSpaceKde kde(e, KdeBandwidth::uniform(0.5));
    const Vec3 x{0.2, -0.1, 0.3}, v{0.1, 0.4, -0.2};
    const KdeDerivatives d = kde.derivatives(x, v);
    CHECK(d.f == doctest::Approx(kde.density(x, v)));
    const double h = 1e-5;
    for (int a = 0; a < 6; ++a) {
        Vec3 xp = x, xm = x, vp = v, vm = v;
        if (a < 3) {
            xp[a] += h;
            xm[a] -= h;
        } else {
            vp[a - 3] += h;
            vm[a - 3] -= h;
        }
        const double fd = (kde.density(xp, vp) - kde.density(xm, vm)) / (2 * h);
        CHECK(d.grad[a] == doctest::Approx(fd).epsilon(1e-5));
        const KdeDerivatives dp = kde.derivatives(xp, vp), dm = kde.derivatives(xm, vm);
        for (int b = 0; b < 6; ++b)
            CHECK(d.hess[a][b] == doctest::Approx((dp.grad[b] - dm.grad[b]) / (2 * h)).epsilon(1e-4));
    }
    const GammaDerivatives g = gamma_derivatives(d);
    CHECK(g.g == doctest::Approx(std::sqrt(d.f)));
    CHECK(g.grad[0] == doctest::Approx(d.grad[0] / (2 * std::sqrt(d.f))));
}

TEST_CASE("kde is continuous across the cutoff") {
    ParticleEnsemble one;
    one.push_back({}, {}, 1.0);
    const PhaseSpaceKde kde(one, KdeBandwidth::uniform(1.0), 3.0);
    // jump bounded by gap * slope at the cutoff: 1e-3 * 3 exp(-4.5)
    CHECK(kde.density({2.999, 0, 0}, {}) < 4e-5 * kde.density({}, {}));
    CHECK(kde.density({3.001, 0, 0}, {}) == 0.0);
}

TEST_CASE("stride subset") {
    const auto e = gaussian_cloud(100, 9);
    CHECK(stride_subset(e, 10).size() == 10);
    CHECK(stride_subset(e, 1000).size() == 100);
    CHECK(stride_subset(e, 10)[0].x == e.positions[0]);
}

TEST_CASE("bandwidths") {
    const auto e = gaussian_cloud(5000, 10, 2.0, 0.5);
    const auto bw = KdeBandwidth::silverman(e);
    CHECK(bw.h[0] == doctest::Approx(1.06 * 2.0 * std::pow(5000.0, -1.0 / 7.0)).epsilon(0.05));
    CHECK(bw.h[4] == doctest::Approx(1.06 * 0.5 * std::pow(5000.0, -1.0 / 7.0)).epsilon(0.05));
    CHECK(bw.scaled(2.0).h[3] == doctest::Approx(2.0 * bw.h[3]));
}

TEST_CASE("initial data smallness") {
    for (auto prof : {DataProfile::Gaussian, DataProfile::DoubleBump, DataProfile::Ring}) {
        const double m = profile_mass(prof, 0.05);
        // ||mu||_2 + ||mu||_inf = sqrt(M) + sqrt(M peak)
        CHECK(std::sqrt(m) + std::sqrt(m * profile_peak_density(prof)) == doctest::Approx(0.05));
        const auto e = sample_initial_data({prof, 0.05, 500, 1});
        CHECK(e.size() == 500);
        CHECK(e.total_mass() == doctest::Approx(m));
        CHECK(e.time == 1.0);
        CHECK(e.frame == Frame::Physical);
    }
    CHECK(parse_data_profile("ring") == DataProfile::Ring);
    CHECK_THROWS_AS(parse_data_profile("cube"), ConfigurationError);
    const auto a = sample_initial_data({DataProfile::Gaussian, 0.05, 50, 3});
    const auto b = sample_initial_data({DataProfile::Gaussian, 0.05, 50, 3});
    CHECK(a.positions == b.positions);
}

}  // TEST_SUITE
