#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "vrs/errors.hpp"
#include "vrs/sampling.hpp"
#include "vrs/scattering.hpp"

using namespace vrs;

namespace {

ParticleEnsemble pct_cloud(std::size_t n, std::uint64_t seed, double s = 1.0) {
    auto e = invert_snapshot(sample_initial_data({DataProfile::Gaussian, 0.05, n, seed}));
    e.time = s;
    return e;
}

}  // namespace

TEST_SUITE("scattering") {

TEST_CASE("asymptotic field of the velocity marginal") {
    const ModelParams p(0.9, 1, 0.0);
    SUBCASE("symmetric velocities cancel at the centre") {
        ParticleEnsemble e;
        const Vec3 v0{0.2, -0.1, 0.3};
        for (const Vec3& d : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) {
            e.push_back({}, v0 + d, 1.0);
            e.push_back({}, v0 - d, 1.0);
        }
        CHECK(max_abs(e_infinity(p, e, v0)) < 1e-15);
    }
    SUBCASE("single particle") {
        ParticleEnsemble e;
        e.push_back({5, 5, 5}, {1, 0, 0}, 2.0);
        const Vec3 ev = e_infinity(p, e, {3, 0, 0});
        // 2 c grad |d|^{-(3-2a)} at d = (2, 0, 0)
        const double expected = 2.0 * p.c_alpha() * -(3.0 - 1.8) * std::pow(2.0, -(3.0 - 1.8) - 1.0);
        CHECK(ev[0] == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("reuses the position field") {
        const auto e = pct_cloud(30, 2);
        const Vec3 v{0.1, 0.2, 0.3};
        CHECK(max_abs(e_infinity(p, e, v) - field_at(p, velocity_swapped(e), v)) == 0.0);
    }
}

TEST_CASE("rate fits on synthetic data") {
    std::vector<double> xs, ys;
    for (int k = 0; k <= 10; ++k) xs.push_back(std::pow(2.0, -k));
    for (double x : xs) ys.push_back(std::pow(x, 0.6));
    CHECK(rate_fit(xs, ys, false).exponent_hat == doctest::Approx(0.6).epsilon(1e-10));

    ys.clear();
    for (double x : xs) ys.push_back(x * std::sqrt(1.0 + std::log(x) * std::log(x)));
    const RateFit withlog = rate_fit(xs, ys, true);
    CHECK(withlog.exponent_hat == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(withlog.log_factor);

    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, 0.05);
    xs.clear();
    ys.clear();
    for (int k = 0; k <= 30; ++k) {
        const double x = std::pow(10.0, -3.0 * k / 30.0);
        xs.push_back(x);
        ys.push_back(std::pow(x, 0.3) * (1.0 + noise(rng)));
    }
    const RateFit noisy = rate_fit(xs, ys, false);
    CHECK(std::fabs(noisy.exponent_hat - 0.3) <= 0.05);
    CHECK(noisy.s_lo == doctest::Approx(1e-3));

    CHECK(expected_e0_rate(0.8) == doctest::Approx(0.6));
    CHECK(expected_e0_rate(1.05) == doctest::Approx(0.95));
}

TEST_CASE("limit field of a static trajectory") {
    const ModelParams p(0.8, 1, 0.1);
    Trajectory tr;
    auto base = pct_cloud(40, 3);
    for (auto& v : base.velocities) v = Vec3{};
    for (double s : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        base.time = s;
        tr.snapshots.push_back(base);
    }
    const std::vector<Vec3> q{{0.1, 0, 0}, {0, 0.5, -0.5}};
    const EZeroResult r = e_zero_extrapolate(p, tr, q);
    CHECK(r.levels.size() == 5);
    for (double d : r.sup_diffs) CHECK(d == 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
        const Vec3 e = field_at(p, base, q[j]);
        CHECK(max_abs(r.e0_hat[j] - e) <= 1e-14);
        CHECK(max_abs(r.background.field(q[j]) - e) <= 1e-14);
    }

    Trajectory short_tr;
    short_tr.snapshots.assign(tr.snapshots.begin(), tr.snapshots.begin() + 3);
    CHECK_THROWS_AS(e_zero_extrapolate(p, short_tr, q), InsufficientData);
}

TEST_CASE("modified-scattering map") {
    const Vec3 q{1, 2, 3}, pp{0.5, -0.5, 0.25};
    SUBCASE("no background: free shear") {
        const auto r = phi_alpha(BackgroundField::zero(), ModelParams(0.8, 1), 0.4, q, pp);
        CHECK(max_abs(r.position - (q + 0.4 * pp)) < 1e-15);
        CHECK(r.momentum == pp);
    }
    SUBCASE("constant background at s = 1") {
        const ModelParams p(1.2, 1);
        BackgroundField bg;
        const Vec3 e{0.1, 0.0, -0.2};
        bg.e0 = std::make_shared<AffineField>(e);
        const auto r = phi_alpha(bg, p, 1.0, q, pp);
        const double a = 1.0 / (2.0 - 2.4);
        CHECK(max_abs(r.position - (q + pp + a * e)) < 1e-15);
        CHECK(max_abs(r.momentum - (pp + a * e)) < 1e-15);
    }
    SUBCASE("corrections vanish as s -> 0 below alpha = 1") {
        const ModelParams p(0.7, 1);
        BackgroundField bg;
        bg.e0 = std::make_shared<AffineField>(Vec3{0.1, 0.05, 0.0});
        const auto r = phi_alpha(bg, p, 1e-6, q, pp);
        CHECK(max_abs(r.position - q) <= 1e-4);
        CHECK(max_abs(r.momentum - pp) <= 1e-4);
    }
    SUBCASE("inverse composes to the identity both ways") {
        for (double alpha : {0.8, 1.05}) {
            const ModelParams p(alpha, 1, 0.5);
            const auto bg = BackgroundField::kernel_sum(p, pct_cloud(20, 4), 0.1);
            for (double s : {0.01, 0.3, 1.0}) {
                const auto f = phi_alpha(bg, p, s, q, pp);
                const auto b = phi_alpha_inverse(bg, p, s, f.position, f.momentum);
                CHECK(max_abs(b.position - q) <= 1e-14 * norm(f.position));
                CHECK(max_abs(b.momentum - pp) <= 1e-14 * norm(f.momentum) + 1e-15);
                const auto g = phi_alpha_inverse(bg, p, s, q, pp);
                const auto h = phi_alpha(bg, p, s, g.position, g.momentum);
                CHECK(max_abs(h.position - q) <= 1e-14 * norm(q));
                CHECK(max_abs(h.momentum - pp) <= 1e-14 * norm(q));
            }
        }
    }
    CHECK_THROWS_AS(phi_alpha(BackgroundField::zero(), ModelParams(0.8, 1), 0.0, q, pp), DomainError);
}

TEST_CASE("modified trajectory point") {
    const ModelParams p(1.05, 1);
    BackgroundField bg;
    const Vec3 e{0.0, 0.3, 0.0};
    bg.e0 = std::make_shared<AffineField>(e);
    const Vec3 x{1, 0, 0}, v{0, 0, 1};
    const auto r = modified_trajectory_point(bg, p, 4.0, x, v);
    CHECK(max_abs(r.position - (x + 4.0 * v + p.correction_coefficient() * std::pow(4.0, 0.1) * e)) < 1e-14);
    CHECK(r.momentum == v);
}

TEST_CASE("probe boxes") {
    const auto e = pct_cloud(4000, 5);
    const ProbeGrid g = ProbeGrid::mass_box(e, 3, 0.9);
    CHECK(g.points.size() == 729);
    CHECK(g.mass_fraction == doctest::Approx(0.9));
    for (int a = 0; a < 3; ++a) {
        CHECK(g.x_lo[a] < 0.0);
        CHECK(g.x_hi[a] > 0.0);
    }
    ProbeGrid bad = g;
    bad.points.clear();
    CHECK_THROWS(bad.validate());
}

TEST_CASE("nu probes") {
    const ModelParams p(0.8, 1, 0.1);
    const auto snap = pct_cloud(3000, 6, 0.5);
    const KdeBandwidth bw = KdeBandwidth::silverman(snap);
    ProbeGrid probe = ProbeGrid::mass_box(snap, 2, 0.5);

    SUBCASE("pull-back with no background is the KDE of the sheared sample") {
        ParticleEnsemble sheared = snap;
        for (std::size_t i = 0; i < snap.size(); ++i) sheared.positions[i] -= snap.velocities[i] * snap.time;
        const auto direct = PhaseSpaceKde(sheared, bw).gamma_at(probe.points);
        const auto nu = nu_probe(p, snap, BackgroundField::zero(), probe, bw);
        for (std::size_t k = 0; k < nu.size(); ++k) CHECK(nu[k] == doctest::Approx(direct[k]).epsilon(1e-12));
    }
    SUBCASE("shifted probes with no background") {
        std::vector<PhasePoint> moved;
        for (const auto& pt : probe.points) moved.push_back({pt.x + pt.v * snap.time, pt.v});
        const auto direct = PhaseSpaceKde(snap, bw).gamma_at(moved);
        const auto nu = nu_probe(p, snap, BackgroundField::zero(), probe, bw, NuMode::ShiftedProbe);
        for (std::size_t k = 0; k < nu.size(); ++k) CHECK(nu[k] == doctest::Approx(direct[k]).epsilon(1e-12));
    }
    SUBCASE("far probes see nothing") {
        ProbeGrid far = probe;
        for (auto& pt : far.points) pt.x = pt.x + Vec3{50, 0, 0};
        for (double v : nu_probe(p, snap, BackgroundField::zero(), far, bw)) CHECK(v == 0.0);
    }
    SUBCASE("bandwidths within a factor 2 agree in the bulk") {
        const auto a = nu_probe(p, snap, BackgroundField::zero(), probe, bw);
        const auto b = nu_probe(p, snap, BackgroundField::zero(), probe, bw.scaled(1.4));
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(a[k]).epsilon(0.3));
    }
    ParticleEnsemble physical = snap;
    physical.frame = Frame::Physical;
    CHECK_THROWS_AS(nu_probe(p, physical, BackgroundField::zero(), probe, bw), DomainError);
}

TEST_CASE("Cauchy monitor") {
    const std::vector<double> times{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
    auto series = [&](auto diff) {
        std::vector<std::vector<double>> v;
        double acc = 1.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            v.push_back({acc, -acc});
            acc += diff(k);
        }
        return v;
    };
    const auto geometric = series([](std::size_t k) { return std::pow(0.5, k); });
    const auto c = cauchy_monitor(times, geometric);
    CHECK(c.cauchy);
    CHECK(c.sup_diffs.size() == 5);
    CHECK(c.ratios.back() == doctest::Approx(0.5));
    CHECK(c.tail_sum == doctest::Approx(0.25 + 0.125 + 0.0625));

    const auto flat = series([](std::size_t) { return 1.0; });
    CHECK_FALSE(cauchy_monitor(times, flat).cauchy);

    const auto frozen = series([](std::size_t) { return 0.0; });
    const auto z = cauchy_monitor(times, frozen);
    CHECK(z.cauchy);
    CHECK(z.tail_sum == 0.0);

    CHECK_THROWS_AS(cauchy_monitor(std::span(times).first(3), std::span(geometric).first(3)), InsufficientData);
}

TEST_CASE("free streaming gives a constant pull-back") {
    // No interaction: the pulled-back sample is the same at every level.
    const ModelParams p(0.8, 1, 0.1);
    auto snap = pct_cloud(1500, 7);
    const KdeBandwidth bw = KdeBandwidth::silverman(snap);
    const ProbeGrid probe = ProbeGrid::mass_box(snap, 3, 0.9);
    std::vector<double> times;
    std::vector<std::vector<double>> vals;
    const ParticleEnsemble start = snap;
    for (double s : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        for (std::size_t i = 0; i < snap.size(); ++i)
            snap.positions[i] = start.positions[i] + (s - 1.0) * start.velocities[i];
        snap.time = s;
        times.push_back(s);
        vals.push_back(nu_probe(p, snap, BackgroundField::zero(), probe, bw));
    }
    const auto c = cauchy_monitor(times, vals, 1e-10);
    for (double d : c.sup_diffs) CHECK(d <= 1e-12);
}

}  // TEST_SUITE
