#include "vrs/wave_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"
#include "vrs/scattering.hpp"

namespace vrs {

double theta_weight(double s, const Vec3& z) {
    if (s < 0.0) throw DomainError("theta_weight: s must be >= 0");
    const double bz = bracket(z);
    return bz / (1.0 + s * bz);
}

namespace {

constexpr std::size_t kBootstrapPerAxis = 4;

// max over r in [0, 30] of f(r) by a dense scan refined by golden section.
template <class F>
double radial_max(F&& f) {
    double best_r = 0.0, best = f(0.0);
    for (int i = 1; i <= 30000; ++i) {
        const double r = 1e-3 * i;
        const double v = f(r);
        if (v > best) {
            best = v;
            best_r = r;
        }
    }
    double lo = std::max(0.0, best_r - 1e-3), hi = best_r + 1e-3;
    for (int it = 0; it < 60; ++it) {
        const double m1 = lo + (hi - lo) * 0.382, m2 = lo + (hi - lo) * 0.618;
        if (f(m1) < f(m2)) lo = m1;
        else hi = m2;
    }
    return std::max(best, f(0.5 * (lo + hi)));
}

// Radial profiles of g(x) = exp(-|x|^2 / 4) and its derivative norms.
double g0(double r) { return std::exp(-r * r / 4.0); }
double g1(double r) { return 0.5 * r * g0(r); }
double g2(double r) {
    const double a = r * r / 4.0 - 0.5;
    return std::sqrt(a * a + 0.5) * g0(r);
}
double br(double r) { return std::sqrt(1.0 + r * r); }

Sigma0Jet gaussian_jet(double amp, const Vec3& w, const Vec3& z) {
    Sigma0Jet j;
    const double v = amp * std::exp(-(norm2(w) + norm2(z)) / 4.0);
    j.value = v;
    std::array<double, 6> x{w[0], w[1], w[2], z[0], z[1], z[2]};
    for (int a = 0; a < 6; ++a) j.grad[a] = -0.5 * x[a] * v;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) j.hess[a][b] = (0.25 * x[a] * x[b] - (a == b ? 0.5 : 0.0)) * v;
    return j;
}

// The six derivative terms of the datum norm at one point.
std::array<double, 6> derivative_terms(const Sigma0Jet& j, const Vec3& z) {
    const double bz = bracket(z);
    double gw = 0.0, gz = 0.0, hww = 0.0, hwz = 0.0, hzz = 0.0;
    for (int a = 0; a < 3; ++a) {
        gw += j.grad[a] * j.grad[a];
        gz += j.grad[a + 3] * j.grad[a + 3];
        for (int b = 0; b < 3; ++b) {
            hww += j.hess[a][b] * j.hess[a][b];
            hwz += j.hess[a][b + 3] * j.hess[a][b + 3];
            hzz += j.hess[a + 3][b + 3] * j.hess[a + 3][b + 3];
        }
    }
    return {std::fabs(j.value), std::sqrt(gw), bz * std::sqrt(gz), std::sqrt(hww), bz * std::sqrt(hwz),
            bz * bz * std::sqrt(hzz)};
}

using Point6 = std::array<double, 6>;

template <class F>
double pattern_search_max(Point6 x, F&& f) {
    double best = f(x);
    for (double step = 0.5; step > 1e-4; step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int a = 0; a < 6; ++a)
                for (double sgn : {1.0, -1.0}) {
                    Point6 y = x;
                    y[a] += sgn * step;
                    const double v = f(y);
                    if (v > best) {
                        best = v;
                        x = y;
                        improved = true;
                    }
                }
        }
    }
    return best;
}

ModelParams wave_params(const ModelParams& params, const ScatteringDatum& datum) {
    if (!params.has_correction()) throw DomainError("wave operator undefined at alpha = 1");
    return datum.kernel_params(params);
}

std::vector<Vec3> knot_q_positions(const ModelParams& params, const ScatteringDatum& datum,
                                   const ParticleEnsemble& knot) {
    std::vector<Vec3> q(knot.size());
    if (knot.time == 0.0) return knot.positions;
    parallel_for(knot.size(), [&](std::size_t i) {
        q[i] = cov_forward(datum.e0, params, knot.time, knot.positions[i], knot.velocities[i]).position;
    });
    return q;
}

std::vector<std::shared_ptr<const KernelSumField>> knot_fields(const ModelParams& kp, const ScatteringDatum& datum,
                                                               const WaveIterate& it) {
    std::vector<std::shared_ptr<const KernelSumField>> out;
    out.reserve(it.knots.size());
    for (const auto& k : it.knots)
        out.push_back(std::make_shared<KernelSumField>(kp, knot_q_positions(kp, datum, k), k.weights));
    return out;
}

std::shared_ptr<const SpatialField> blend(const std::vector<std::shared_ptr<const KernelSumField>>& fields, double T,
                                          double s) {
    const std::size_t n = fields.size() - 1;
    const double ds = T / static_cast<double>(n);
    std::size_t k = static_cast<std::size_t>(std::floor(s / ds));
    if (k >= n) k = n - 1;
    const double tau = std::clamp((s - ds * static_cast<double>(k)) / ds, 0.0, 1.0);
    using Term = LinearCombinationField::Term;
    return std::make_shared<LinearCombinationField>(
        std::vector<Term>{{1.0 - tau, fields[k]}, {tau, fields[k + 1]}});
}

}  // namespace

DatumNorms gaussian_datum_norms(double mass) {
    const double amp = std::sqrt(mass) * std::pow(2.0 * std::numbers::pi, -1.5);
    DatumNorms n;
    n.l2 = std::sqrt(mass);
    n.weighted_sup = amp * radial_max([](double r) { return std::pow(br(r), 5) * g0(r); });
    const double m_g1 = radial_max(g1), m_g2 = radial_max(g2);
    const double m_bg1 = radial_max([](double r) { return br(r) * g1(r); });
    const double m_bbg2 = radial_max([](double r) { return br(r) * br(r) * g2(r); });
    // (0,0) (0,1) (1,0) (0,2) (1,1) (2,0); the factors are separable in w and z.
    n.derivative_sum = amp * (1.0 + m_g1 + m_bg1 + m_g2 + m_bg1 * m_g1 + m_bbg2);
    return n;
}

ScatteringDatum gaussian_datum(const ModelParams& params, double c0, std::size_t n, std::uint64_t seed, double fill) {
    if (!(c0 > 0.0)) throw ConfigurationError("gaussian_datum: c0 must be positive");
    if (n == 0) throw ConfigurationError("gaussian_datum: need at least one particle");
    const double unit_total = gaussian_datum_norms(1.0).total();
    const double mass = std::pow(fill * c0 / unit_total, 2);

    ScatteringDatum d;
    d.c0 = c0;
    d.analytic_norms = gaussian_datum_norms(mass);
    const double amp = std::sqrt(mass) * std::pow(2.0 * std::numbers::pi, -1.5);
    d.evaluator = [amp](const Vec3& w, const Vec3& z) { return gaussian_jet(amp, w, z); };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    d.sigma0.frame = Frame::Wave;
    d.sigma0.time = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 w, z;
        for (int a = 0; a < 3; ++a) w[a] = normal(rng);
        for (int a = 0; a < 3; ++a) z[a] = normal(rng);
        d.sigma0.push_back(w, z, mass / static_cast<double>(n));
    }
    // Half the position spread: E0 of the point sample stays smooth enough for its W^{3,inf} bound.
    d.softening = params.softening() > 0.0
                      ? params.softening()
                      : 0.5 * interparticle_scale(d.sigma0) * std::cbrt(static_cast<double>(d.sigma0.size()));
    d.e0 = BackgroundField::kernel_sum(params.with_softening(d.softening), d.sigma0, c0);
    return d;
}

ScatteringDatum zero_datum(std::size_t n) {
    ScatteringDatum d;
    d.sigma0.frame = Frame::Wave;
    d.sigma0.time = 0.0;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 w, z;
        for (int a = 0; a < 3; ++a) w[a] = normal(rng);
        for (int a = 0; a < 3; ++a) z[a] = normal(rng);
        d.sigma0.push_back(w, z, 0.0);
    }
    d.evaluator = [](const Vec3&, const Vec3&) { return Sigma0Jet{}; };
    d.analytic_norms = DatumNorms{};
    d.c0 = 1.0;
    d.softening = 1e-2;
    return d;
}

DatumReport check_datum(const ScatteringDatum& datum) {
    DatumReport rep;
    const auto& ens = datum.sigma0;
    rep.measured.l2 = std::sqrt(std::max(0.0, ens.total_mass()));

    std::vector<Point6> candidates;
    candidates.push_back({});
    for (const auto& p : stride_subset(ens, 2048))
        candidates.push_back({p.x[0], p.x[1], p.x[2], p.v[0], p.v[1], p.v[2]});

    auto eval_terms = [&](const Point6& x) {
        const Vec3 w{x[0], x[1], x[2]}, z{x[3], x[4], x[5]};
        const Sigma0Jet j = datum.evaluator(w, z);
        std::array<double, 7> t{};
        const auto d = derivative_terms(j, z);
        std::copy(d.begin(), d.end(), t.begin());
        t[6] = std::pow(bracket(z), 5) * std::fabs(j.value);
        return t;
    };

    // Per term: best candidates, then a local pattern search from the top few.
    std::array<double, 7> sup{};
    std::vector<std::array<double, 7>> vals(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) vals[i] = eval_terms(candidates[i]);
    for (int t = 0; t < 7; ++t) {
        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const std::size_t top = std::min<std::size_t>(4, order.size());
        std::partial_sort(order.begin(), order.begin() + top, order.end(),
                          [&](std::size_t a, std::size_t b) { return vals[a][t] > vals[b][t]; });
        for (std::size_t r = 0; r < top; ++r)
            sup[t] = std::max(sup[t], pattern_search_max(candidates[order[r]],
                                                         [&](const Point6& x) { return eval_terms(x)[t]; }));
    }
    rep.measured.weighted_sup = sup[6];
    rep.measured.derivative_sum = sup[0] + sup[1] + sup[2] + sup[3] + sup[4] + sup[5];

    const double total = rep.measured.total();
    rep.checks.push_back({"sigma0_norms", total, datum.c0, total <= datum.c0});

    // E0 in W^{3,inf}: orders 0..2 analytic, order 3 by central differences of the order-2 tensor.
    double e_sup[4] = {0, 0, 0, 0};
    const double h = 1e-4;
    for (const auto& p : stride_subset(ens, 512)) {
        const Vec3& x = p.x;
        e_sup[0] = std::max(e_sup[0], norm(datum.e0.field(x)));
        e_sup[1] = std::max(e_sup[1], frobenius(datum.e0.gradient(x)));
        e_sup[2] = std::max(e_sup[2], frobenius(datum.e0.hessian(x)));
        double third = 0.0;
        for (int a = 0; a < 3; ++a) {
            Vec3 xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            const Tensor3 tp = datum.e0.hessian(xp), tm = datum.e0.hessian(xm);
            for (int k = 0; k < 3; ++k) {
                const double f = frobenius((tp[k] - tm[k]) * (1.0 / (2.0 * h)));
                third += f * f;
            }
        }
        e_sup[3] = std::max(e_sup[3], std::sqrt(third));
    }
    const double e_total = e_sup[0] + e_sup[1] + e_sup[2] + e_sup[3];
    rep.checks.push_back({"e0_w3inf", e_total, datum.c0 * datum.c0, e_total <= datum.c0 * datum.c0});
    rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const NormCheck& c) { return c.pass; });
    return rep;
}

WaveIterate initial_iterate(const ScatteringDatum& datum, double T, const WaveConfig& cfg) {
    if (!(T > 0.0)) throw ConfigurationError("initial_iterate: T must be positive");
    if (cfg.knots < 1) throw ConfigurationError("initial_iterate: need at least one knot interval");
    WaveIterate it;
    it.T = T;
    ParticleEnsemble base = datum.sigma0;
    if (cfg.initial == InitialIterate::Perturbed) {
        std::mt19937_64 rng(cfg.perturb_seed);
        std::normal_distribution<double> normal(0.0, cfg.perturb_size);
        for (auto& z : base.velocities)
            for (int a = 0; a < 3; ++a) z[a] += normal(rng);
    }
    for (std::size_t k = 0; k <= cfg.knots; ++k) {
        ParticleEnsemble snap = k == 0 ? datum.sigma0 : base;
        snap.frame = Frame::Wave;
        snap.time = T * static_cast<double>(k) / static_cast<double>(cfg.knots);
        it.knots.push_back(std::move(snap));
    }
    return it;
}

std::shared_ptr<const SpatialField> iterate_field(const ModelParams& params, const ScatteringDatum& datum,
                                                  const WaveIterate& prev, double s) {
    const ModelParams kp = wave_params(params, datum);
    return blend(knot_fields(kp, datum, prev), prev.T, s);
}

WaveIterate picard_step(const ModelParams& params, const ScatteringDatum& datum, const WaveIterate& prev,
                        const WaveConfig& cfg) {
    if (prev.knots.size() < 2) throw ConfigurationError("picard_step: previous iterate has no knots");
    if (prev.T > 1.0) throw DomainError("picard_step: T must be <= 1");
    const ModelParams kp = wave_params(params, datum);
    const auto fields = knot_fields(kp, datum, prev);
    const std::size_t n = prev.knots.size() - 1;
    const double T = prev.T;
    const double ds = T / static_cast<double>(n);
    const std::size_t np = datum.sigma0.size();

    // Blended fields at every RK4 stage time, shared by all particles.
    struct Stage {
        double s;
        std::shared_ptr<const SpatialField> field;
    };
    std::vector<std::vector<std::array<Stage, 3>>> stages(n);  // per interval, per substep: s, s + h/2, s + h
    std::vector<std::vector<double>> starts(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = std::max(ds * static_cast<double>(k), k == 0 ? cfg.s_start : 0.0);
        const double b = ds * static_cast<double>(k + 1);
        const double h = (b - a) / static_cast<double>(cfg.substeps);
        for (std::size_t m = 0; m < cfg.substeps; ++m) {
            const double s0 = a + h * static_cast<double>(m);
            starts[k].push_back(s0);
            stages[k].push_back({Stage{s0, blend(fields, T, s0)}, Stage{s0 + 0.5 * h, blend(fields, T, s0 + 0.5 * h)},
                                 Stage{s0 + h, blend(fields, T, s0 + h)}});
        }
    }

    WaveIterate next;
    next.T = T;
    next.knots.resize(n + 1);
    next.knots[0] = datum.sigma0;
    next.knots[0].frame = Frame::Wave;
    next.knots[0].time = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        next.knots[k] = datum.sigma0;
        next.knots[k].frame = Frame::Wave;
        next.knots[k].time = ds * static_cast<double>(k);
    }

    std::vector<double> failed_at(np, 0.0);
    parallel_for(np, [&](std::size_t i) {
        Vec3 w = datum.sigma0.positions[i], z = datum.sigma0.velocities[i];
        auto rhs = [&](const Stage& st, const Vec3& wi, const Vec3& zi, Vec3& dw, Vec3& dz) {
            const KGradients g = k_gradients(datum.e0, kp, st.s, wi, zi, *st.field);
            dw = g.grad_z;
            dz = -g.grad_w;
        };
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t m = 0; m < cfg.substeps; ++m) {
                const auto& st = stages[k][m];
                const double h = st[2].s - st[0].s;
                Vec3 k1w, k1z, k2w, k2z, k3w, k3z, k4w, k4z;
                rhs(st[0], w, z, k1w, k1z);
                rhs(st[1], w + k1w * (0.5 * h), z + k1z * (0.5 * h), k2w, k2z);
                rhs(st[1], w + k2w * (0.5 * h), z + k2z * (0.5 * h), k3w, k3z);
                rhs(st[2], w + k3w * h, z + k3z * h, k4w, k4z);
                w += (k1w + 2.0 * k2w + 2.0 * k3w + k4w) * (h / 6.0);
                z += (k1z + 2.0 * k2z + 2.0 * k3z + k4z) * (h / 6.0);
                if (!std::isfinite(norm2(w) + norm2(z))) {
                    failed_at[i] = st[2].s;
                    return;
                }
            }
            next.knots[k + 1].positions[i] = w;
            next.knots[k + 1].velocities[i] = z;
        }
    });
    for (double s : failed_at)
        if (s > 0.0) throw StiffnessError("picard_step: characteristic blew up", s);
    return next;
}

ResidualPair iterate_residual(const WaveIterate& a, const WaveIterate& b) {
    if (a.knots.size() != b.knots.size()) throw ConfigurationError("iterate_residual: knot count mismatch");
    ResidualPair r;
    for (std::size_t k = 0; k < a.knots.size(); ++k) {
        const auto& x = a.knots[k];
        const auto& y = b.knots[k];
        if (x.size() != y.size()) throw ConfigurationError("iterate_residual: particle count mismatch");
        double l2 = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dw = norm(x.positions[i] - y.positions[i]);
            const double dz = norm(x.velocities[i] - y.velocities[i]);
            r.sup = std::max(r.sup, dw + dz);
            l2 += x.weights[i] * (dw * dw + dz * dz);
            mass += x.weights[i];
        }
        if (mass > 0.0) r.l2 = std::max(r.l2, std::sqrt(l2 / mass));
    }
    return r;
}

std::vector<BootstrapRecord> bootstrap_report(const ModelParams&, const WaveIterate& sigma,
                                              const ScatteringDatum& datum, const KdeBandwidth& bandwidth,
                                              std::size_t eval_points) {
    std::vector<BootstrapRecord> out;
    for (const auto& knot : sigma.knots) {
        BootstrapRecord rec;
        rec.s = knot.time;
        const double mass = knot.total_mass();
        if (mass <= 0.0) {
            out.push_back(rec);
            continue;
        }
        const PhaseSpaceKde kde(knot, bandwidth);
        // Sup terms on a grid over the 95% mass box: at isolated tail particles the estimate is
        // the particle's own kernel, which the <z>^5 weight would amplify. The L2 terms are Monte
        // Carlo averages over the particles.
        const ProbeGrid box = ProbeGrid::mass_box(knot, kBootstrapPerAxis, 0.95);
        const auto samples = stride_subset(knot, eval_points);
        std::vector<PhasePoint> pts = box.points;
        pts.insert(pts.end(), samples.begin(), samples.end());
        std::vector<GammaDerivatives> gd(pts.size());
        std::vector<double> fval(pts.size());
        parallel_for(pts.size(), [&](std::size_t k) {
            const KdeDerivatives d = kde.derivatives(pts[k].x, pts[k].v);
            fval[k] = d.f;
            gd[k] = gamma_derivatives(d);
        });
        double sup_a = 0.0, gw_sup = 0.0, gz_sup = 0.0, gw_l2 = 0.0, gz_l2 = 0.0;
        double hww = 0.0, hwz = 0.0, hzz = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto& g = gd[k];
            const Vec3& z = pts[k].v;
            const double th = theta_weight(rec.s, z);
            double gw = 0.0, gz = 0.0, ww = 0.0, wz = 0.0, zz = 0.0;
            for (int a = 0; a < 3; ++a) {
                gw += g.grad[a] * g.grad[a];
                gz += g.grad[a + 3] * g.grad[a + 3];
                for (int b = 0; b < 3; ++b) {
                    ww += g.hess[a][b] * g.hess[a][b];
                    wz += g.hess[a][b + 3] * g.hess[a][b + 3];
                    zz += g.hess[a + 3][b + 3] * g.hess[a + 3][b + 3];
                }
            }
            if (k >= box.points.size()) {
                // Monte Carlo over f: integral |grad sigma|^2 = E_f[|grad sigma|^2 / f].
                if (fval[k] > 0.0) {
                    gw_l2 += gw / fval[k];
                    gz_l2 += th * th * gz / fval[k];
                }
                continue;
            }
            sup_a = std::max(sup_a, std::pow(bracket(z), 5) * g.g);
            gw_sup = std::max(gw_sup, std::sqrt(gw));
            gz_sup = std::max(gz_sup, th * std::sqrt(gz));
            hww = std::max(hww, std::sqrt(ww));
            hwz = std::max(hwz, th * std::sqrt(wz));
            hzz = std::max(hzz, th * th * std::sqrt(zz));
        }
        // The flow preserves phase-space volume, so sigma(s) at particle i equals sigma0 at its
        // starting point: the weighted sup is exact on the sample when sigma0 can be evaluated.
        const auto& start = sigma.knots.front();
        if (datum.evaluator && start.size() == knot.size()) {
            sup_a = 0.0;
            for (std::size_t i = 0; i < knot.size(); ++i)
                sup_a = std::max(sup_a, std::pow(bracket(knot.velocities[i]), 5) *
                                            datum.evaluator(start.positions[i], start.velocities[i]).value);
        }
        const double scale = mass / static_cast<double>(samples.size());
        rec.a = std::sqrt(mass) + sup_a;
        rec.b = std::sqrt(gw_l2 * scale) + gw_sup + std::sqrt(gz_l2 * scale) + gz_sup;
        rec.c = hww + hwz + hzz;
        out.push_back(rec);
    }
    return out;
}

std::vector<KBoundRecord> k_bound_check(const ModelParams& params, const ScatteringDatum& datum,
                                        const WaveIterate& sigma, std::size_t eval_points, double slack) {
    const ModelParams kp = wave_params(params, datum);
    const double alpha = params.alpha();
    const double c02 = datum.c0 * datum.c0;
    std::vector<KBoundRecord> out;
    for (const auto& knot : sigma.knots) {
        if (knot.time <= 0.0) continue;
        const double s = knot.time;
        const KernelSumField live(kp, knot_q_positions(kp, datum, knot), knot.weights);
        const auto pts = stride_subset(knot, eval_points);
        std::vector<std::array<double, 4>> vals(pts.size());
        parallel_for(pts.size(), [&](std::size_t k) {
            const KGradients g = k_gradients(datum.e0, kp, s, pts[k].x, pts[k].v, live, true);
            const double th = theta_weight(s, pts[k].v);
            vals[k] = {norm(g.grad_z), th * frobenius(g.hess_zz), frobenius(g.hess_wz), frobenius(g.hess_ww) / th};
        });
        KBoundRecord rec;
        rec.s = s;
        for (const auto& v : vals) {
            rec.grad_z = std::max(rec.grad_z, v[0]);
            rec.hess_zz = std::max(rec.hess_zz, v[1]);
            rec.hess_zw = std::max(rec.hess_zw, v[2]);
            rec.hess_ww = std::max(rec.hess_ww, v[3]);
        }
        rec.hess_total = rec.hess_zz + rec.hess_zw + rec.hess_ww;
        if (alpha > 1.0) {
            rec.grad_z_bound = 2.0 * c02 * std::pow(s, 2.0 - 2.0 * alpha);
            rec.hess_bound = c02 * std::pow(s, 20.0 / 3.0 * (1.0 - alpha));
        } else {
            rec.grad_z_bound = 2.0 * c02;
            rec.hess_bound = c02;
        }
        rec.pass = rec.grad_z <= slack * rec.grad_z_bound && rec.hess_total <= slack * rec.hess_bound;
        out.push_back(rec);
    }
    return out;
}

WaveSolution construct_wave(const ModelParams& params, const ScatteringDatum& datum, double T_init,
                            const WaveConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw ConfigurationError("construct_wave: tol must be positive");
    if (!(T_init > 0.0) || T_init > 1.0) throw ConfigurationError("construct_wave: T_init must lie in (0, 1]");
    const double alpha = params.alpha();
    std::vector<std::string> warnings;
    if (!(alpha > 0.5 && alpha < 14.0 / 13.0))
        warnings.emplace_back("alpha outside (1/2, 14/13): the construction is not covered by the theory");

    double T = T_init;
    for (std::size_t halving = 0; halving <= cfg.max_halvings; ++halving, T *= 0.5) {
        IterationReport rep;
        rep.warnings = warnings;
        WaveIterate prev = initial_iterate(datum, T, cfg);
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            WaveIterate next = picard_step(params, datum, prev, cfg);
            const ResidualPair r = iterate_residual(next, prev);
            if (!rep.residuals.empty() && rep.residuals.back() > 0.0)
                rep.ratios.push_back(r.sup / rep.residuals.back());
            rep.residuals.push_back(r.sup);
            rep.residuals_l2.push_back(r.l2);
            prev = std::move(next);
            if (r.sup < cfg.tol) {
                rep.converged = true;
                break;
            }
            // Ratios from the second one on (r_3 / r_2, ...).
            if (rep.ratios.size() >= 2 && rep.ratios.back() > cfg.contraction_limit) {
                break;
            }
        }
        if (!rep.converged) continue;
        rep.T_star = T;
        rep.halvings = halving;
        const KdeBandwidth bw = datum.sigma0.total_mass() > 0.0 ? KdeBandwidth::silverman(datum.sigma0)
                                                                 : KdeBandwidth::uniform(1.0);
        rep.bootstrap = bootstrap_report(params, prev, datum, bw);
        rep.bootstrap_ok = std::all_of(rep.bootstrap.begin(), rep.bootstrap.end(), [&](const BootstrapRecord& b) {
            return b.a <= 4.0 * datum.c0 && b.b <= 4.0 * datum.c0 && b.c <= 4.0 * datum.c0;
        });
        rep.k_bounds = k_bound_check(params, datum, prev);
        rep.k_bounds_ok =
            std::all_of(rep.k_bounds.begin(), rep.k_bounds.end(), [](const KBoundRecord& k) { return k.pass; });
        return {std::move(prev), std::move(rep)};
    }
    throw NoConvergence("construct_wave: Picard iteration did not converge after " +
                        std::to_string(cfg.max_halvings) + " halvings of T");
}

Trajectory to_physical_solution(const ModelParams& params, const WaveIterate& sigma, const ScatteringDatum& datum,
                                double s_match) {
    if (!(s_match > 0.0) || s_match > sigma.T * (1.0 + 1e-12))
        throw DomainError("to_physical_solution: s_match must lie in (0, T*]");
    const ModelParams kp = wave_params(params, datum);
    Trajectory traj;
    bool hit = false;
    for (auto it = sigma.knots.rbegin(); it != sigma.knots.rend(); ++it) {
        const double s = it->time;
        if (s <= 0.0 || s > s_match * (1.0 + 1e-12)) continue;
        if (std::fabs(s - s_match) <= 1e-12 * s_match) hit = true;
        ParticleEnsemble gamma = *it;
        gamma.frame = Frame::PseudoConformal;
        parallel_for(gamma.size(), [&](std::size_t i) {
            const PhaseState qp = cov_forward(datum.e0, kp, s, it->positions[i], it->velocities[i]);
            gamma.positions[i] = qp.position;
            gamma.velocities[i] = qp.momentum;
        });
        ParticleEnsemble mu = invert_snapshot(gamma);
        SnapshotDiagnostics d;
        d.time = mu.time;
        d.mass = mu.total_mass();
        d.l2_proxy = std::sqrt(std::max(0.0, d.mass));
        traj.diagnostics.push_back(d);
        traj.snapshots.push_back(std::move(mu));
    }
    if (!hit) throw DomainError("to_physical_solution: s_match is not a knot of the wave trajectory");
    return traj;
}

}  // namespace vrs
