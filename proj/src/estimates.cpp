#include "vrs/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"
#include "vrs/scattering.hpp"
#include "vrs/spectral.hpp"

namespace vrs {

GammaNorms gamma_norms(const ParticleEnsemble& ens, const KdeBandwidth& bw, std::size_t eval_points) {
    GammaNorms n;
    const double mass = ens.total_mass();
    n.l2 = std::sqrt(std::max(0.0, mass));
    if (ens.empty() || mass <= 0.0) return n;
    const PhaseSpaceKde kde(ens, bw);
    const auto pts = stride_subset(ens, eval_points);
    std::vector<GammaDerivatives> gd(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) { gd[k] = gamma_derivatives(kde.derivatives(pts[k].x, pts[k].v)); });
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double g = gd[k].g;
        const double p2 = norm2(pts[k].v);
        n.sup = std::max(n.sup, g);
        n.p2_sup = std::max(n.p2_sup, p2 * g);
        n.p4_sup = std::max(n.p4_sup, p2 * p2 * g);
        n.b2_sup = std::max(n.b2_sup, (1.0 + p2) * g);
        const double gq = std::sqrt(gd[k].grad[0] * gd[k].grad[0] + gd[k].grad[1] * gd[k].grad[1] +
                                    gd[k].grad[2] * gd[k].grad[2]);
        n.grad_q_sup = std::max(n.grad_q_sup, gq);
    }
    return n;
}

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1.0));
    return g;
}

double ratio_or_zero(double lhs, double rhs) {
    if (lhs == 0.0) return 0.0;
    if (rhs == 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

std::vector<Vec3> query_positions(const ParticleEnsemble& ens, std::size_t m) {
    std::vector<Vec3> q;
    for (const auto& p : stride_subset(ens, m)) q.push_back(p.x);
    return q;
}

// Per-row spread and flags.
void finish_row(FieldBoundRow& row) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double c : row.constants) {
        if (!std::isfinite(c)) row.finite = false;
        if (c > 0.0 && std::isfinite(c)) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        row.max_constant = std::max(row.max_constant, c);
    }
    row.spread = hi > 0.0 ? hi / lo : 1.0;
    row.stable = row.finite && row.spread < 10.0;
}

double expected_kappa(double alpha, int order) {
    if (alpha < 1.0) return 2.0 * alpha - 1.0;
    switch (order) {
        case 0: return 2.0 - alpha;
        case 1: return (5.0 - 2.0 * alpha) / 3.0;
        default: return (3.0 - alpha) / 2.0;
    }
}

struct FieldSamples {
    std::vector<std::vector<Vec3>> e;
    std::vector<std::vector<Mat3>> grad;
    std::vector<std::vector<Tensor3>> hess;
};

FieldSamples sample_fields(const ModelParams& params, const Trajectory& traj, std::span<const Vec3> q, bool derivs) {
    FieldSamples out;
    for (const auto& snap : traj.snapshots) {
        out.e.push_back(field_at_points(params, snap, q));
        if (!derivs) continue;
        std::vector<Mat3> g(q.size());
        std::vector<Tensor3> h(q.size());
        parallel_for(q.size(), [&](std::size_t k) {
            g[k] = field_gradient_at(params, snap, q[k]);
            h[k] = field_hessian_at(params, snap, q[k]);
        });
        out.grad.push_back(std::move(g));
        out.hess.push_back(std::move(h));
    }
    return out;
}

double sup_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, norm(a[k] - b[k]));
    return m;
}
double sup_diff(const std::vector<Mat3>& a, const std::vector<Mat3>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, frobenius(a[k] - b[k]));
    return m;
}
double sup_diff(const std::vector<Tensor3>& a, const std::vector<Tensor3>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        Tensor3 d;
        for (int i = 0; i < 3; ++i) d[i] = a[k][i] - b[k][i];
        m = std::max(m, frobenius(d));
    }
    return m;
}

}  // namespace

FieldBoundsReport verify_field_bounds(const ModelParams& params, std::span<const ParticleEnsemble> ensembles,
                                      std::size_t query_points) {
    const double alpha = params.alpha();
    const auto grid = log_grid(1e-4, 1e4, 161);
    const double theta_ii = 0.5 * ((1.0 - 2.0 * alpha) + (2.0 * alpha - 1.0) / 3.0);
    const bool has_iii = alpha > 7.0 / 8.0;
    const double theta_iii = 0.5 * ((2.0 - 2.0 * alpha) + (2.0 * alpha - 1.0) / 3.0);

    FieldBoundsReport rep;
    rep.rows = {{"E_i", {}}, {"E_i_B", {}}, {"gradE_ii", {}}};
    if (has_iii) rep.rows.push_back({"gradE_iii", {}});

    for (const auto& ens : ensembles) {
        const auto q = query_positions(ens, query_points);
        double lhs_e = 0.0, lhs_g = 0.0;
        if (ens.total_mass() > 0.0) {
            for (const auto& e : field_at_points(params, ens, q)) lhs_e = std::max(lhs_e, norm(e));
            for (const auto& x : q) lhs_g = std::max(lhs_g, frobenius(field_gradient_at(params, ens, x)));
        }
        const KdeBandwidth bw = ens.total_mass() > 0.0 ? KdeBandwidth::silverman(ens) : KdeBandwidth::uniform(1.0);
        const GammaNorms n = gamma_norms(ens, bw);

        double r_i = std::numeric_limits<double>::infinity(), r_ib = r_i, r_ii = r_i, r_iii = r_i;
        for (double a : grid) {
            r_i = std::min(r_i, std::pow(a, 4 - 2 * alpha) * (n.l2 * n.l2 + n.sup * n.sup) +
                                    std::pow(a, -2 * alpha) * n.p2_sup * n.p2_sup);
            for (double b : grid)
                r_ib = std::min(r_ib, std::pow(a, 4 - 2 * alpha) * n.l2 * n.l2 +
                                          std::pow(a, 2 * alpha - 1) * b * b * b * n.sup * n.sup +
                                          std::pow(a, 2 * alpha) / b * n.p2_sup * n.grad_q_sup);
            r_ii = std::min(r_ii, std::pow(a, 5 - 2 * alpha) * n.l2 * n.l2 +
                                      std::pow(a, 2 * alpha - 1 - 3 * theta_ii) * n.sup * n.grad_q_sup +
                                      std::pow(a, 2 * alpha - 1 - theta_ii) * n.p4_sup * n.grad_q_sup);
            if (has_iii)
                r_iii = std::min(r_iii, std::pow(a, 5 - 2 * alpha) * n.l2 * n.l2 +
                                            std::pow(a, 1 - 2 * alpha + 3 * theta_iii) * n.sup * n.grad_q_sup +
                                            std::pow(a, 2 * alpha - 2 + theta_iii) * n.p2_sup * n.p2_sup);
        }
        rep.rows[0].constants.push_back(ratio_or_zero(lhs_e, r_i));
        rep.rows[1].constants.push_back(ratio_or_zero(lhs_e, r_ib));
        rep.rows[2].constants.push_back(ratio_or_zero(lhs_g, r_ii));
        if (has_iii) rep.rows[3].constants.push_back(ratio_or_zero(lhs_g, r_iii));
    }
    for (auto& row : rep.rows) finish_row(row);
    rep.pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const FieldBoundRow& r) { return r.stable; });
    return rep;
}

ContinuityReport verify_continuity(const ModelParams& params, const Trajectory& traj, std::size_t query_points,
                                   double weak_tolerance) {
    const auto& snaps = traj.snapshots;
    if (snaps.size() < 6) throw InsufficientData("verify_continuity: at least 6 snapshots required");
    ContinuityReport rep;
    rep.weak_tolerance = weak_tolerance;

    // Weak form with Gaussian test functions psi_c(q) = exp(-|q - c|^2 / (2 l^2)).
    const auto centres = query_positions(snaps.front(), 16);
    double spread = 0.0;
    {
        const auto& x = snaps.front().positions;
        Vec3 mean;
        for (const auto& p : x) mean += p;
        if (!x.empty()) mean = mean / static_cast<double>(x.size());
        for (const auto& p : x) spread += norm2(p - mean);
        spread = x.empty() ? 1.0 : std::sqrt(spread / (3.0 * x.size()));
    }
    const double ell = std::max(0.5 * spread, 1e-6);
    auto moments = [&](const ParticleEnsemble& e, std::vector<double>& iv, std::vector<double>& jv) {
        iv.assign(centres.size(), 0.0);
        jv.assign(centres.size(), 0.0);
        for (std::size_t c = 0; c < centres.size(); ++c) {
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < e.size(); ++i) {
                const Vec3 d = e.positions[i] - centres[c];
                const double psi = std::exp(-norm2(d) / (2.0 * ell * ell));
                a += e.weights[i] * psi;
                b += e.weights[i] * psi * dot(e.velocities[i], d) * (-1.0 / (ell * ell));
            }
            iv[c] = a;
            jv[c] = b;
        }
    };
    std::vector<double> i0, j0, i1, j1;
    moments(snaps[0], i0, j0);
    double res = 0.0, scale = 0.0;
    for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
        moments(snaps[k + 1], i1, j1);
        const double ds = snaps[k + 1].time - snaps[k].time;
        if (ds != 0.0)
            for (std::size_t c = 0; c < centres.size(); ++c) {
                res = std::max(res, std::fabs((i1[c] - i0[c]) / ds - 0.5 * (j0[c] + j1[c])));
                scale = std::max(scale, std::fabs(j0[c]));
            }
        i0.swap(i1);
        j0.swap(j1);
    }
    rep.weak_residual = scale > 0.0 ? res / scale : res;

    // Grid version, observational.
    if (traj.moments.size() == snaps.size()) {
        double gres = 0.0, gscale = 0.0;
        for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
            const auto& spec = traj.moments[k].rho.spec;
            const double dt = snaps[k + 1].time - snaps[k - 1].time;
            if (dt == 0.0) continue;
            for (std::size_t z = 1; z + 1 < spec.dims[2]; ++z)
                for (std::size_t y = 1; y + 1 < spec.dims[1]; ++y)
                    for (std::size_t x = 1; x + 1 < spec.dims[0]; ++x) {
                        const std::size_t n = spec.index(x, y, z);
                        const double drho = (traj.moments[k + 1].rho.at(n) - traj.moments[k - 1].rho.at(n)) / dt;
                        const auto& j = traj.moments[k].j;
                        const double div =
                            (j.at(spec.index(x + 1, y, z), 0) - j.at(spec.index(x - 1, y, z), 0)) / (2 * spec.spacing[0]) +
                            (j.at(spec.index(x, y + 1, z), 1) - j.at(spec.index(x, y - 1, z), 1)) / (2 * spec.spacing[1]) +
                            (j.at(spec.index(x, y, z + 1), 2) - j.at(spec.index(x, y, z - 1), 2)) / (2 * spec.spacing[2]);
                        gres = std::max(gres, std::fabs(drho + div));
                        gscale = std::max(gscale, std::fabs(drho));
                    }
        }
        rep.grid_residual = gscale > 0.0 ? gres / gscale : gres;
    }

    const auto q = query_positions(snaps.front(), query_points);
    const FieldSamples fs = sample_fields(params, traj, q, true);
    const char* names[3] = {"E", "gradE", "hessE"};
    for (int order = 0; order < 3; ++order) {
        HolderFit fit;
        fit.quantity = names[order];
        fit.kappa_expected = expected_kappa(params.alpha(), order);
        std::vector<double> xs, ys;
        for (std::size_t a = 0; a < snaps.size(); ++a)
            for (std::size_t b = a + 1; b < snaps.size(); ++b) {
                const double ds = std::fabs(snaps[b].time - snaps[a].time);
                const double d = order == 0   ? sup_diff(fs.e[a], fs.e[b])
                                 : order == 1 ? sup_diff(fs.grad[a], fs.grad[b])
                                              : sup_diff(fs.hess[a], fs.hess[b]);
                if (ds > 0.0 && d > 0.0) {
                    xs.push_back(ds);
                    ys.push_back(d);
                    fit.constant = std::max(fit.constant, d / std::pow(ds, fit.kappa_expected));
                }
            }
        if (xs.size() >= 3) {
            fit.kappa_hat = rate_fit(xs, ys, false).exponent_hat;
            fit.pass = fit.kappa_hat >= fit.kappa_expected - 0.2;
        } else {
            fit.kappa_hat = std::numeric_limits<double>::quiet_NaN();
            fit.pass = true;  // field constant in s
        }
        rep.fits.push_back(fit);
    }
    rep.pass = rep.weak_residual <= weak_tolerance && rep.fits.front().pass;
    return rep;
}

ForceContinuityReport verify_force_continuity(const ModelParams& params, const Trajectory& traj,
                                              std::size_t query_points) {
    const auto& snaps = traj.snapshots;
    if (snaps.size() < 6) throw InsufficientData("verify_force_continuity: at least 6 snapshots required");
    for (const auto& s : snaps)
        if (s.frame != Frame::PseudoConformal)
            throw DomainError("verify_force_continuity: pseudo-conformal trajectory required");
    const double alpha = params.alpha();
    ForceContinuityReport rep;
    rep.beta = std::max(10.0 * alpha - 10.0, 2.0 * alpha - 1.0) + 0.05;
    const double kappa = expected_kappa(alpha, 0);

    const KdeBandwidth bw = traj.bandwidth ? *traj.bandwidth : KdeBandwidth::silverman(snaps.front());
    GammaNorms sup;
    double f_sup = 0.0;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const GammaNorms n = gamma_norms(snaps[k], bw, 256);
        sup.l2 = std::max(sup.l2, n.l2);
        sup.sup = std::max(sup.sup, n.sup);
        sup.p2_sup = std::max(sup.p2_sup, n.p2_sup);
        sup.b2_sup = std::max(sup.b2_sup, n.b2_sup);
        // s^{2a-1} |F| = |E|.
        if (k < traj.diagnostics.size()) f_sup = std::max(f_sup, traj.diagnostics[k].e_sup);
    }

    const auto q = query_positions(snaps.front(), query_points);
    const FieldSamples fs = sample_fields(params, traj, q, false);
    struct Pair {
        double s0, c;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < snaps.size(); ++a)
        for (std::size_t b = a + 1; b < snaps.size(); ++b) {
            const double s0 = std::min(snaps[a].time, snaps[b].time);
            const double ds = std::fabs(snaps[b].time - snaps[a].time);
            if (ds <= 0.0) continue;
            const double d = sup_diff(fs.e[a], fs.e[b]);
            const double lnb = std::sqrt(1.0 + std::log(ds) * std::log(ds));
            const double pref = alpha > 1.0 ? std::pow(s0, 2.0 - 2.0 * alpha) : 1.0;
            const double rhs = std::pow(ds, kappa) * lnb * sup.p2_sup * sup.p2_sup +
                               std::pow(ds, rep.beta) * sup.b2_sup * sup.b2_sup +
                               std::pow(ds, kappa) * (sup.sup * sup.sup + sup.l2 * sup.l2) +
                               pref * std::pow(ds, rep.beta) * sup.b2_sup * sup.b2_sup * f_sup;
            const double c = ratio_or_zero(d, rhs);
            rep.pair_constants.push_back(c);
            pairs.push_back({s0, c});
        }
    if (rep.pair_constants.empty()) throw InsufficientData("verify_force_continuity: no snapshot pairs");
    std::vector<double> sorted = rep.pair_constants;
    std::sort(sorted.begin(), sorted.end());
    rep.max_constant = sorted.back();
    rep.median_constant = sorted[sorted.size() / 2];
    rep.pass = std::isfinite(rep.max_constant) && rep.max_constant <= 10.0 * rep.median_constant;
    if (rep.max_constant == 0.0) rep.pass = true;

    if (alpha > 1.0) {
        auto group_median = [&](double lo, double hi) {
            std::vector<double> v;
            for (const auto& p : pairs)
                if (p.s0 >= lo && p.s0 <= hi) v.push_back(p.c);
            if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        rep.prefactor_hi = group_median(0.25, 0.5);
        rep.prefactor_lo = group_median(1.0 / 16.0, 1.0 / 8.0);
        rep.prefactor_ratio_expected = std::pow(4.0, 2.0 * alpha - 2.0) * 3.0;
    }
    return rep;
}

TestFunction::Jet TestFunction::eval(const Vec3& x, const Vec3& v) const {
    const Vec3 dx = x - x_centre, dv = v - v_centre;
    const double ix = 1.0 / (x_width * x_width), iv = 1.0 / (v_width * v_width);
    const double env = amp * std::exp(-0.5 * (norm2(dx) * ix + norm2(dv) * iv));
    const double arg = dot(kx, x) + dot(kv, v) + phase;
    const double c = std::cos(arg), s = std::sin(arg);
    // f = env cos; grad env = -env d / w^2.
    Jet j;
    j.f = env * c;
    const Vec3 ex = dx * (-ix), ev = dv * (-iv);  // grad log env
    j.gx = (ex * c - kx * s) * env;
    j.gv = (ev * c - kv * s) * env;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double dxx = (a == b ? -ix : 0.0);
            const double dvv = (a == b ? -iv : 0.0);
            j.hxx(a, b) = env * ((ex[a] * ex[b] + dxx - kx[a] * kx[b]) * c - (ex[a] * kx[b] + kx[a] * ex[b]) * s);
            j.hvv(a, b) = env * ((ev[a] * ev[b] + dvv - kv[a] * kv[b]) * c - (ev[a] * kv[b] + kv[a] * ev[b]) * s);
        }
    return j;
}

SectionNorms section_norms(const TestFunction& fn, std::size_t n, double half_width) {
    constexpr std::size_t kQ = 13;
    using Values = std::array<double, kQ>;
    // Section coordinates (x1, x2, v1); the remaining coordinates sit at the centres.
    auto values = [&](const Vec3& u) {
        const Vec3 x{u[0], u[1], fn.x_centre[2]};
        const Vec3 v{u[2], fn.v_centre[1], fn.v_centre[2]};
        const auto jet = fn.eval(x, v);
        const double b2 = 1.0 + norm2(x), b = std::sqrt(b2);
        const double af = std::fabs(jet.f), gx = norm(jet.gx), gv = norm(jet.gv);
        return Values{af,
                      gx,
                      gv,
                      frobenius(jet.hxx),
                      frobenius(jet.hvv),
                      b2 * af,
                      b2 * b2 * af,
                      std::pow(b2, 2.5) * af,
                      b2 * b2 * b2 * af,
                      b * gv,
                      b2 * gv,
                      std::pow(b, 2.5) * gx,
                      b2 * b * gx};
    };
    const double h = 2.0 * half_width / (n - 1.0);
    struct Best {
        Values value{};
        std::array<Vec3, kQ> at{};
    };
    std::vector<Best> rows(n);
    parallel_for(n, [&](std::size_t i) {
        Best& r = rows[i];
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const Vec3 u{-half_width + h * i, -half_width + h * j, -half_width + h * k};
                const Values val = values(u);
                for (std::size_t q = 0; q < kQ; ++q)
                    if (val[q] > r.value[q]) {
                        r.value[q] = val[q];
                        r.at[q] = u;
                    }
            }
    });
    Best best;
    for (const auto& r : rows)
        for (std::size_t q = 0; q < kQ; ++q)
            if (r.value[q] > best.value[q]) {
                best.value[q] = r.value[q];
                best.at[q] = r.at[q];
            }
    // Grid maxima alias once the modulation period drops below the spacing; climb locally from
    // the best node with shrinking 5^3 stencils.
    parallel_for(kQ, [&](std::size_t q) {
        double radius = h;
        for (int pass = 0; pass < 6; ++pass) {
            const Vec3 c = best.at[q];
            for (int i = -2; i <= 2; ++i)
                for (int j = -2; j <= 2; ++j)
                    for (int k = -2; k <= 2; ++k) {
                        const Vec3 u = c + Vec3{i * 0.5 * radius, j * 0.5 * radius, k * 0.5 * radius};
                        if (std::fabs(u[0]) > half_width || std::fabs(u[1]) > half_width ||
                            std::fabs(u[2]) > half_width)
                            continue;
                        const double val = values(u)[q];
                        if (val > best.value[q]) {
                            best.value[q] = val;
                            best.at[q] = u;
                        }
                    }
            radius *= 0.5;
        }
    });
    const Values& m = best.value;
    SectionNorms out;
    out.f = m[0];
    out.gx = m[1];
    out.gv = m[2];
    out.hxx = m[3];
    out.hvv = m[4];
    for (int a = 0; a < 4; ++a) out.wf[a] = m[5 + a];
    out.wgv[0] = m[9];
    out.wgv[1] = m[10];
    out.wgx[0] = m[11];
    out.wgx[1] = m[12];
    return out;
}

InterpolationReport verify_interpolation(std::size_t count, std::uint64_t seed, std::size_t coarse,
                                         std::size_t fine) {
    InterpolationReport rep;
    rep.functions = count;
    rep.coarse = coarse;
    rep.fine = fine;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), width(0.6, 1.4), freq(0.0, 4.0), angle(0.0, 6.283185307179586);

    const char* names[6] = {"multiplicative_x", "multiplicative_v", "interp1_s1", "interp1_s2", "interp2_s2.5",
                            "interp2_s3"};
    std::array<double, 6> cmax_coarse{}, cmax_fine{};
    auto ratios = [](const SectionNorms& n) {
        std::array<double, 6> r{};
        auto safe = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
        r[0] = safe(n.gx, std::sqrt(n.f * n.hxx));
        r[1] = safe(n.gv, std::sqrt(n.f * n.hvv));
        r[2] = safe(n.wgv[0], n.wf[0] + n.hvv);
        r[3] = safe(n.wgv[1], n.wf[1] + n.hvv);
        r[4] = safe(n.wgx[0], n.wf[2] + n.hxx);
        r[5] = safe(n.wgx[1], n.wf[3] + n.hxx);
        return r;
    };
    for (std::size_t m = 0; m < count; ++m) {
        TestFunction fn;
        if (m < 64) {
            // Frequency sweep: sin(k x1) times a unit bump.
            fn.kx = {static_cast<double>(m + 1), 0.0, 0.0};
            fn.phase = -0.5 * 3.141592653589793;
        } else {
            fn.amp = 0.5 + 0.5 * (unit(rng) + 1.0);
            fn.x_centre = {unit(rng), unit(rng), unit(rng)};
            fn.v_centre = {unit(rng), unit(rng), unit(rng)};
            fn.x_width = width(rng);
            fn.v_width = width(rng);
            fn.kx = {freq(rng) * unit(rng), freq(rng) * unit(rng), freq(rng) * unit(rng)};
            fn.kv = {freq(rng) * unit(rng), freq(rng) * unit(rng), freq(rng) * unit(rng)};
            fn.phase = angle(rng);
        }
        const auto rc = ratios(section_norms(fn, coarse));
        const auto rf = ratios(section_norms(fn, fine));
        for (int a = 0; a < 6; ++a) {
            cmax_coarse[a] = std::max(cmax_coarse[a], rc[a]);
            cmax_fine[a] = std::max(cmax_fine[a], rf[a]);
        }
    }
    rep.pass = true;
    for (int a = 0; a < 6; ++a) {
        InterpolationRow row;
        row.inequality = names[a];
        row.constant_coarse = cmax_coarse[a];
        row.constant_fine = cmax_fine[a];
        row.drift = cmax_fine[a] > 0.0 ? std::fabs(cmax_coarse[a] - cmax_fine[a]) / cmax_fine[a] : 0.0;
        row.pass = std::isfinite(cmax_coarse[a]) && std::isfinite(cmax_fine[a]) && row.drift < 0.2;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace vrs
