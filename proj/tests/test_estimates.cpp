#include <doctest.h>

#include <cmath>
#include <vector>

#include "vrs/errors.hpp"
#include "vrs/estimates.hpp"
#include "vrs/experiment.hpp"
#include "vrs/pseudoconformal.hpp"
#include "vrs/sampling.hpp"

using namespace vrs;

namespace {

Trajectory static_trajectory(std::size_t n, std::size_t levels) {
    auto e = invert_snapshot(sample_initial_data({DataProfile::Gaussian, 0.05, n, 5}));
    for (auto& v : e.velocities) v = Vec3{};
    Trajectory tr;
    for (std::size_t k = 0; k < levels; ++k) {
        e.time = 1.0 - 0.05 * static_cast<double>(k);
        tr.snapshots.push_back(e);
    }
    return tr;
}

}  // namespace

TEST_SUITE("estimates") {

TEST_CASE("gamma norms scale with the weights") {
    auto e = sample_initial_data({DataProfile::Gaussian, 0.05, 2000, 1});
    const auto bw = KdeBandwidth::silverman(e);
    const GammaNorms a = gamma_norms(e, bw);
    for (auto& w : e.weights) w *= 4.0;
    const GammaNorms b = gamma_norms(e, bw);
    CHECK(b.l2 == doctest::Approx(2.0 * a.l2));
    CHECK(b.sup == doctest::Approx(2.0 * a.sup));
    CHECK(b.p4_sup == doctest::Approx(2.0 * a.p4_sup));
    CHECK(a.b2_sup >= a.sup);
}

TEST_CASE("field bounds") {
    SUBCASE("zero data") {
        auto e = sample_initial_data({DataProfile::Gaussian, 0.05, 100, 1});
        for (auto& w : e.weights) w = 0.0;
        const std::vector<ParticleEnsemble> ens{e};
        const auto rep = verify_field_bounds(ModelParams(0.8, 1, 0.1), ens, 16);
        for (const auto& r : rep.rows)
            for (double c : r.constants) CHECK(c == 0.0);
    }
    for (double alpha : {0.8, 1.2}) {
        SUBCASE("gaussian profile, three seeds") {
            std::vector<ParticleEnsemble> ens;
            for (std::uint64_t seed : {1, 2, 3}) ens.push_back(sample_initial_data({DataProfile::Gaussian, 0.05, 1500, seed}));
            const ModelParams p(alpha, 1, scatter_softening(ens[0]));
            const auto rep = verify_field_bounds(p, ens, 32);
            CHECK(rep.pass);
            for (const auto& r : rep.rows) {
                CHECK(r.finite);
                CHECK_MESSAGE(r.spread <= 3.0, r.inequality << " spread " << r.spread);
            }
            CHECK((alpha > 7.0 / 8.0) == (rep.rows.size() == 4));
        }
    }
}

TEST_CASE("continuity checks on a static trajectory") {
    const auto tr = static_trajectory(200, 8);
    const ModelParams p(0.8, 1, 0.1);
    const auto rep = verify_continuity(p, tr, 16);
    CHECK(rep.weak_residual == 0.0);
    CHECK(rep.pass);
    const auto fc = verify_force_continuity(p, tr, 16);
    CHECK(fc.pass);
    CHECK_THROWS_AS(verify_continuity(p, static_trajectory(50, 5)), InsufficientData);
}

TEST_CASE("continuity on a short interacting run") {
    const auto mu = sample_initial_data({DataProfile::Gaussian, 0.05, 400, 7});
    const ModelParams p(0.8, 1, scatter_softening(mu));
    SolveConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 0.5;
    cfg.substep_policy = SubstepPolicy::TimeWeighted;
    cfg.diagnostics = DiagnosticsLevel::Full;
    cfg.record_every = 10;
    const auto tr = solve(p, invert_snapshot(mu), cfg);
    REQUIRE(tr.moments.size() == tr.snapshots.size());
    const auto rep = verify_continuity(p, tr, 32);
    CHECK(rep.weak_residual <= rep.weak_tolerance);
    REQUIRE(!rep.fits.empty());
    CHECK(rep.fits[0].quantity == "E");
    CHECK(rep.fits[0].kappa_hat >= 0.4);
    const auto fc = verify_force_continuity(p, tr, 32);
    CHECK(fc.pass);
}

TEST_CASE("interpolation section norms") {
    SUBCASE("zero function") {
        TestFunction f;
        f.amp = 0.0;
        const auto n = section_norms(f, 16);
        CHECK(n.f == 0.0);
        CHECK(n.gx == 0.0);
    }
    SUBCASE("gaussian against closed-form sup norms") {
        const TestFunction f;  // exp(-(|x|^2 + |v|^2) / 2)
        const auto n = section_norms(f, 64);
        CHECK(n.f == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n.gx == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
        CHECK(n.hxx == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
        // multiplicative ratio |Df| / sqrt(|f| |D^2 f|)
        const double exact = std::exp(-0.5) / std::sqrt(std::sqrt(3.0));
        CHECK(n.gx / std::sqrt(n.f * n.hxx) == doctest::Approx(exact).epsilon(0.05));
    }
    SUBCASE("jets match differences") {
        TestFunction f;
        f.kx = {1.5, -0.5, 0.2};
        f.kv = {0.3, 0.0, 1.0};
        f.phase = 0.4;
        f.x_width = 0.8;
        const Vec3 x{0.3, -0.2, 0.5}, v{0.1, 0.6, -0.4};
        const auto j = f.eval(x, v);
        const double h = 1e-5;
        for (int a = 0; a < 3; ++a) {
            Vec3 xp = x, xm = x, vp = v, vm = v;
            xp[a] += h;
            xm[a] -= h;
            vp[a] += h;
            vm[a] -= h;
            CHECK(j.gx[a] == doctest::Approx((f.eval(xp, v).f - f.eval(xm, v).f) / (2 * h)).epsilon(1e-6));
            CHECK(j.gv[a] == doctest::Approx((f.eval(x, vp).f - f.eval(x, vm).f) / (2 * h)).epsilon(1e-6));
            const Vec3 dgx = (f.eval(xp, v).gx - f.eval(xm, v).gx) / (2 * h);
            const Vec3 dgv = (f.eval(x, vp).gv - f.eval(x, vm).gv) / (2 * h);
            for (int b = 0; b < 3; ++b) {
                CHECK(j.hxx(a, b) == doctest::Approx(dgx[b]).epsilon(1e-5));
                CHECK(j.hvv(a, b) == doctest::Approx(dgv[b]).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("frequency sweep stays bounded") {
    std::vector<double> ratio;
    for (double k : {1.0, 8.0, 32.0, 64.0}) {
        TestFunction f;
        f.kx = {k, 0, 0};
        f.phase = -0.5 * 3.141592653589793;
        const auto n = section_norms(f, 48);
        ratio.push_back(n.gx / std::sqrt(n.f * n.hxx));
    }
    for (double r : ratio) {
        CHECK(std::isfinite(r));
        CHECK(r <= 2.0);
    }
}

TEST_CASE("interpolation report is grid stable") {
    // frequencies up to 8 are resolved by the small grids; the full sweep needs 64/128
    const auto rep = verify_interpolation(8, 3, 24, 48);
    CHECK(rep.rows.size() == 6);
    CHECK(rep.pass);
}

}  // TEST_SUITE
