#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vrs/errors.hpp"
#include "vrs/experiment.hpp"
#include "vrs/kernel_field.hpp"
#include "vrs/sampling.hpp"

using namespace vrs;

namespace {

ParticleEnsemble cloud(std::size_t n, std::uint64_t seed, double spread = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    std::uniform_real_distribution<double> w(0.5, 1.5);
    ParticleEnsemble e;
    e.time = 1.0;
    for (std::size_t i = 0; i < n; ++i) e.push_back({g(rng), g(rng), g(rng)}, {g(rng), g(rng), g(rng)}, w(rng));
    return e;
}

ParticleEnsemble unit_at(const Vec3& x, const Vec3& v = {}) {
    ParticleEnsemble e;
    e.push_back(x, v, 1.0);
    return e;
}

}  // namespace

TEST_SUITE("kernel_field") {

TEST_CASE("riesz constant closed forms") {
    CHECK(riesz_constant(1.0) == doctest::Approx(1.0 / (4.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(riesz_constant(0.5) == doctest::Approx(1.0 / (2.0 * std::numbers::pi * std::numbers::pi)).epsilon(1e-14));
    CHECK_THROWS_AS(riesz_constant(1.5), DomainError);
    CHECK_THROWS_AS(riesz_constant(0.0), DomainError);
}

TEST_CASE("model parameters are validated") {
    CHECK_THROWS_AS(ModelParams(0.5, 1), DomainError);
    CHECK_THROWS_AS(ModelParams(1.5, 1), DomainError);
    CHECK_THROWS_AS(ModelParams(0.8, 0), DomainError);
    CHECK_THROWS_AS(ModelParams(0.8, 1, -1.0), DomainError);
    const ModelParams p(0.8, -1);
    CHECK(p.correction_coefficient() == doctest::Approx(-1.0 / 0.4));
    CHECK_THROWS_AS(ModelParams(1.0, 1).correction_coefficient(), DomainError);
}

TEST_CASE("potential examples") {
    const ModelParams p(1.0, 1);
    CHECK(potential_at(p, ParticleEnsemble{}, {1, 0, 0}) == 0.0);
    CHECK(potential_at(p, unit_at({}), {1, 0, 0}) == doctest::Approx(1.0 / (4.0 * std::numbers::pi)));
    for (double alpha : {0.7, 1.0, 1.3}) {
        const ModelParams q(alpha, 1);
        ParticleEnsemble pair = unit_at({1, 0, 0});
        pair.push_back({-1, 0, 0}, {}, 1.0);
        CHECK(potential_at(q, pair, {}) == doctest::Approx(2.0 * q.c_alpha()));
    }
}

TEST_CASE("field examples") {
    const ModelParams p(1.0, 1);
    ParticleEnsemble pair = unit_at({1, 0, 0});
    pair.push_back({-1, 0, 0}, {}, 1.0);
    const Vec3 zero = field_at(p, pair, {});
    CHECK(max_abs(zero) < 1e-15);

    const Vec3 e = field_at(p, unit_at({}), {1, 0, 0});
    CHECK(e[0] == doctest::Approx(-1.0 / (4.0 * std::numbers::pi)).epsilon(1e-12));
    CHECK(std::fabs(e[1]) < 1e-15);
    CHECK(std::fabs(e[2]) < 1e-15);
}

TEST_CASE("field is the gradient of the potential") {
    const OracleCheck c = gradient_check(200, 17);
    CHECK(c.pass);
    CHECK(c.measured <= 1e-6);

    // five particles, hand-rolled fourth-order differences
    const auto ens = cloud(5, 3);
    for (double alpha : {0.6, 0.9, 1.2, 1.4}) {
        const ModelParams p(alpha, 1, 0.0);
        const Vec3 x{2.1, -0.4, 0.7};
        const Vec3 e = field_at(p, ens, x);
        const double h = 1e-3;
        for (int a = 0; a < 3; ++a) {
            auto at = [&](double k) {
                Vec3 y = x;
                y[a] += k * h;
                return potential_at(p, ens, y);
            };
            const double fd = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
            CHECK(std::fabs(fd - e[a]) <= 1e-6 * norm(e));
        }
    }
}

TEST_CASE("field gradient and hessian match differences of the field") {
    const auto ens = cloud(6, 5);
    const ModelParams p(0.9, 1, 0.2);
    const Vec3 x{0.3, 0.2, -0.5};
    const Mat3 g = field_gradient_at(p, ens, x);
    const Tensor3 t = field_hessian_at(p, ens, x);
    const double h = 1e-4;
    for (int i = 0; i < 3; ++i) {
        Vec3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const Vec3 de = (field_at(p, ens, xp) - field_at(p, ens, xm)) / (2 * h);
        const Mat3 dg = (field_gradient_at(p, ens, xp) - field_gradient_at(p, ens, xm)) * (1.0 / (2 * h));
        for (int j = 0; j < 3; ++j) {
            CHECK(g(i, j) == doctest::Approx(de[j]).epsilon(1e-6));
            for (int k = 0; k < 3; ++k) CHECK(t[i](j, k) == doctest::Approx(dg(j, k)).epsilon(1e-5));
        }
    }
    CHECK(g(0, 1) == doctest::Approx(g(1, 0)));
}

TEST_CASE("zero softening at a source is singular") {
    const ModelParams p(0.8, 1, 0.0);
    CHECK_THROWS_AS(field_at(p, unit_at({1, 2, 3}), {1, 2, 3}), SingularEvaluation);
}

TEST_CASE("mutual fields skip the self term and agree with direct sums") {
    const auto ens = cloud(30, 9);
    const ModelParams p(1.1, 1, 0.05);
    const RieszKernel k(p);
    const auto mf = mutual_fields(k, ens.positions, ens.weights);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Vec3 d = field_from_sources(k, ens.positions, ens.weights, ens.positions[i], i);
        CHECK(max_abs(mf[i] - d) <= 1e-13 * (1.0 + norm(d)));
    }
    CHECK(max_abs(mutual_fields(k, std::span<const Vec3>(ens.positions.data(), 1),
                                std::span<const double>(ens.weights.data(), 1))[0]) == 0.0);
}

TEST_CASE("dyadic components vanish outside the bump annulus") {
    const ModelParams p(0.8, 1);
    const auto cfg = DyadicConfig::make(0.8, 1e-2, 1e2);
    const auto one = unit_at({});
    CHECK(max_abs(dyadic_component(p, one, cfg, 1.0, {0.3, 0, 0})) == 0.0);
    CHECK(max_abs(dyadic_component(p, one, cfg, 1.0, {2.5, 0, 0})) == 0.0);

    // offset 1.5 R by hand: c R^{-(3-2a)} / c_norm * chi'(1.5) * unit vector
    const double R = 0.7;
    const Vec3 x{1.5 * R, 0, 0};
    const Vec3 e = dyadic_component(p, one, cfg, R, x);
    const double expected = p.c_alpha() / cfg.bump_normalization * std::pow(R, -(3.0 - 1.6)) * bump_derivative(1.5);
    CHECK(e[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(e[1] == 0.0);
}

TEST_CASE("bump is a unit-mass radial profile") {
    CHECK(bump(0.5) == 0.0);
    CHECK(bump(2.0) == 0.0);
    CHECK(bump(1.0) > 0.0);
    const double h = 1e-5;
    for (double r : {0.7, 1.0, 1.6})
        CHECK(bump_derivative(r) == doctest::Approx((bump(r + h) - bump(r - h)) / (2 * h)).epsilon(1e-6));
    double mass = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double r = 0.5 + 1.5 * (i + 0.5) / n;
        mass += 4.0 * std::numbers::pi * r * r * bump(r) * 1.5 / n;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("velocity-localised components") {
    const ModelParams p(1.2, 1);
    const auto cfg = DyadicConfig::make(1.2, 1e-2, 1e2);
    SUBCASE("slow particles contribute nothing") {
        const auto slow = unit_at({}, {0.1, 0, 0});
        CHECK(max_abs(dyadic_velocity_component(p, slow, cfg, 1.0, 1.0, {1.5, 0, 0})) == 0.0);
    }
    SUBCASE("single particle is the product of bumps") {
        const double R = 0.8, V = 0.4;
        const auto one = unit_at({}, {0, 1.5 * V, 0});
        const Vec3 e = dyadic_velocity_component(p, one, cfg, R, V, {1.5 * R, 0, 0});
        const Vec3 er = dyadic_component(p, one, cfg, R, {1.5 * R, 0, 0});
        CHECK(e[0] == doctest::Approx(er[0] * bump(1.5)).epsilon(1e-12));
    }
    SUBCASE("the V ladder integrates back to E_R") {
        const auto ens = cloud(20, 4);
        const double R = 1.0;
        const Vec3 x{0.8, 0.2, -0.1};
        const auto vcfg = DyadicConfig::make(1.2, 1e-3, 1e3);
        Vec3 sum;
        for (double V : vcfg.ladder()) sum += dyadic_velocity_component(p, ens, cfg, R, V, x);
        sum = sum * (vcfg.log_step() / cfg.velocity_normalization);
        const Vec3 er = dyadic_component(p, ens, cfg, R, x);
        CHECK(norm(sum - er) <= 1e-3 * norm(er));
    }
}

TEST_CASE("dyadic reconstruction matches the field") {
    CHECK(max_abs(dyadic_reconstruct(ModelParams(0.8, 1), ParticleEnsemble{}, DyadicConfig::make(0.8, 1e-2, 1e2),
                                     {1, 0, 0})) == 0.0);
    for (double alpha : {0.8, 1.2}) {
        const OracleCheck c = dyadic_check(alpha, 100, 21, 4);
        CHECK_MESSAGE(c.pass, "alpha " << alpha << " error " << c.measured);
    }
}

TEST_CASE("dyadic ladder must cover the offsets") {
    const ModelParams p(0.8, 1);
    const auto cfg = DyadicConfig::make(0.8, 1.0, 2.0);
    CHECK_THROWS_AS(dyadic_reconstruct(p, cloud(10, 1), cfg, {0, 0, 0}), CoverageError);
}

TEST_CASE("ensemble validation and scales") {
    ParticleEnsemble e = cloud(10, 2);
    CHECK_NOTHROW(e.validate());
    e.weights.pop_back();
    CHECK_THROWS_AS(e.validate(), ConfigurationError);
    ParticleEnsemble neg = unit_at({});
    neg.weights[0] = -1.0;
    CHECK_THROWS_AS(neg.validate(), ConfigurationError);

    const auto big = cloud(8000, 3, 2.0);
    CHECK(interparticle_scale(big) == doctest::Approx(2.0 / 20.0).epsilon(0.05));
    CHECK(default_softening(big) == doctest::Approx(1e-3 * interparticle_scale(big)));
}

TEST_CASE("velocity swap exchanges the coordinates") {
    const auto e = cloud(4, 8);
    const auto s = velocity_swapped(e);
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(s.positions[i] == e.velocities[i]);
        CHECK(s.velocities[i] == e.positions[i]);
    }
}

}  // TEST_SUITE
