#include "vrs/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"

namespace vrs {

Vec3 e_infinity(const ModelParams& params, const ParticleEnsemble& ens, const Vec3& v_query) {
    return field_from_sources(RieszKernel(params), ens.velocities, ens.weights, v_query);
}

RateFit rate_fit(std::span<const double> xs, std::span<const double> ys, bool with_log) {
    if (xs.size() != ys.size()) throw ConfigurationError("rate_fit: length mismatch");
    if (xs.size() < 3) throw InsufficientData("rate_fit: at least 3 points required");
    const std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0)) throw DomainError("rate_fit: abscissae must be positive");
        if (!(ys[i] > 0.0)) throw DomainError("rate_fit: values must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        if (with_log) ly[i] -= 0.5 * std::log1p(lx[i] * lx[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw DomainError("rate_fit: abscissae must not all coincide");
    RateFit fit;
    fit.exponent_hat = sxy / sxx;
    fit.log_factor = with_log;
    const double log_a = my - fit.exponent_hat * mx;
    fit.amplitude = std::exp(log_a);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - log_a - fit.exponent_hat * lx[i];
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    fit.s_lo = *std::min_element(xs.begin(), xs.end());
    fit.s_hi = *std::max_element(xs.begin(), xs.end());
    return fit;
}

double expected_e0_rate(double alpha) { return alpha < 1.0 ? 2.0 * alpha - 1.0 : 2.0 - alpha; }

EZeroResult e_zero_extrapolate(const ModelParams& params, const Trajectory& gamma_traj, std::span<const Vec3> q_query) {
    if (gamma_traj.snapshots.empty()) throw InsufficientData("e_zero_extrapolate: empty trajectory");
    for (const auto& snap : gamma_traj.snapshots)
        if (snap.frame != Frame::PseudoConformal)
            throw DomainError("e_zero_extrapolate: pseudo-conformal trajectory required");

    double s_min = gamma_traj.snapshots.front().time, s_max = s_min;
    for (const auto& snap : gamma_traj.snapshots) {
        s_min = std::min(s_min, snap.time);
        s_max = std::max(s_max, snap.time);
    }
    // Dyadic levels from the top down: s_max 2^{-k}, matched to snapshots within 1e-9 relative.
    std::vector<const ParticleEnsemble*> chosen;
    EZeroResult out;
    for (double s = s_max; s >= s_min * (1.0 - 1e-9); s *= 0.5) {
        const ParticleEnsemble& snap = gamma_traj.nearest(s);
        if (std::fabs(snap.time - s) > 1e-9 * s) break;
        chosen.push_back(&snap);
        out.levels.push_back(snap.time);
    }
    if (chosen.size() < 4) throw InsufficientData("e_zero_extrapolate: fewer than 4 dyadic levels");

    const std::size_t nl = chosen.size();
    std::vector<std::vector<Vec3>> e(nl);
    for (std::size_t k = 0; k < nl; ++k) e[k] = field_at_points(params, *chosen[k], q_query);

    for (std::size_t k = 0; k + 1 < nl; ++k) {
        double m = 0.0;
        for (std::size_t j = 0; j < q_query.size(); ++j) m = std::max(m, norm(e[k][j] - e[k + 1][j]));
        out.sup_diffs.push_back(m);
    }

    out.theta_expected = expected_e0_rate(params.alpha());
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k + 1 < nl; ++k)
        if (out.sup_diffs[k] > 0.0) {
            xs.push_back(out.levels[k]);
            ys.push_back(out.sup_diffs[k]);
        }
    double theta_used = out.theta_expected;
    if (xs.size() >= 3) {
        out.rate = rate_fit(xs, ys, false);
        out.rate_ok = out.rate.exponent_hat >= out.theta_expected - 0.15;
        theta_used = std::clamp(out.rate.exponent_hat, 0.1, 4.0);
    } else {
        // Field constant in s: nothing to fit.
        out.rate.s_lo = out.levels.back();
        out.rate.s_hi = out.levels.front();
        out.rate_ok = true;
    }

    const double c = 1.0 / (std::pow(2.0, theta_used) - 1.0);
    out.e0_hat.resize(q_query.size());
    for (std::size_t j = 0; j < q_query.size(); ++j) out.e0_hat[j] = e[nl - 1][j] * (1.0 + c) - e[nl - 2][j] * c;

    // The background is built from the sheared positions q - s p, which share the s -> 0 limit of q
    // but keep each particle close to its own pulled-back location, so self-terms vanish as s -> 0.
    auto sheared = [&params](const ParticleEnsemble& snap) {
        std::vector<Vec3> pos(snap.size());
        for (std::size_t i = 0; i < snap.size(); ++i) pos[i] = snap.positions[i] - snap.velocities[i] * snap.time;
        return std::make_shared<KernelSumField>(params, std::move(pos), snap.weights);
    };
    using Term = LinearCombinationField::Term;
    auto last = sheared(*chosen[nl - 1]);
    auto prev = sheared(*chosen[nl - 2]);
    out.background.e0 = std::make_shared<LinearCombinationField>(std::vector<Term>{{1.0 + c, last}, {-c, prev}});
    out.background.derivative_method = "analytic (richardson kernel sum)";
    return out;
}

namespace {
struct PhiCoefficients {
    double q_corr, p_corr;
};

PhiCoefficients phi_coefficients(const ModelParams& params, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("phi_alpha: s must be positive");
    const double a = params.correction_coefficient();
    const double alpha = params.alpha();
    return {a * std::pow(s, 3.0 - 2.0 * alpha), a * std::pow(s, 2.0 - 2.0 * alpha)};
}
}  // namespace

PhaseState phi_alpha(const BackgroundField& e0, const ModelParams& params, double s, const Vec3& q, const Vec3& p) {
    const auto c = phi_coefficients(params, s);
    const Vec3 e = e0.field(q);
    return {q + p * s + e * c.q_corr, p + e * c.p_corr};
}

PhaseState phi_alpha_inverse(const BackgroundField& e0, const ModelParams& params, double s, const Vec3& q,
                             const Vec3& p) {
    const auto c = phi_coefficients(params, s);
    const Vec3 q0 = q - p * s;
    return {q0, p - e0.field(q0) * c.p_corr};
}

PhaseState modified_trajectory_point(const BackgroundField& e_inf, const ModelParams& params, double t, const Vec3& x,
                                     const Vec3& v) {
    if (!(t > 0.0)) throw DomainError("modified_trajectory_point: t must be positive");
    const double a = params.correction_coefficient();
    return {x + v * t + e_inf.field(v) * (a * std::pow(t, 2.0 * params.alpha() - 2.0)), v};
}

void ProbeGrid::validate() const {
    if (points.empty()) throw ConfigurationError("ProbeGrid: no points");
    for (const auto& p : points)
        for (int a = 0; a < 3; ++a)
            if (!std::isfinite(p.x[a]) || !std::isfinite(p.v[a]))
                throw ConfigurationError("ProbeGrid: non-finite coordinate");
}

namespace {
std::pair<double, double> central_quantiles(std::vector<std::pair<double, double>> vw, double q) {
    std::sort(vw.begin(), vw.end());
    double total = 0.0;
    for (const auto& p : vw) total += p.second;
    const double lo_mass = 0.5 * (1.0 - q) * total, hi_mass = (1.0 - 0.5 * (1.0 - q)) * total;
    double acc = 0.0, lo = vw.front().first, hi = vw.back().first;
    bool lo_set = false;
    for (const auto& [value, w] : vw) {
        acc += w;
        if (!lo_set && acc >= lo_mass) {
            lo = value;
            lo_set = true;
        }
        if (acc >= hi_mass) {
            hi = value;
            break;
        }
    }
    return {lo, hi};
}
}  // namespace

ProbeGrid ProbeGrid::mass_box(const ParticleEnsemble& ens, std::size_t per_axis, double fraction) {
    if (ens.empty()) throw InsufficientData("ProbeGrid::mass_box: empty ensemble");
    if (per_axis < 1) throw ConfigurationError("ProbeGrid::mass_box: per_axis must be >= 1");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigurationError("ProbeGrid::mass_box: fraction in (0, 1)");
    const double q = std::pow(fraction, 1.0 / 6.0);
    ProbeGrid g;
    g.per_axis = per_axis;
    g.mass_fraction = fraction;
    std::array<std::vector<double>, 6> axes;
    for (int a = 0; a < 6; ++a) {
        std::vector<std::pair<double, double>> vw(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i)
            vw[i] = {a < 3 ? ens.positions[i][a] : ens.velocities[i][a - 3], ens.weights[i]};
        const auto [lo, hi] = central_quantiles(std::move(vw), q);
        if (a < 3) {
            g.x_lo[a] = lo;
            g.x_hi[a] = hi;
        } else {
            g.v_lo[a - 3] = lo;
            g.v_hi[a - 3] = hi;
        }
        for (std::size_t k = 0; k < per_axis; ++k)
            axes[a].push_back(per_axis == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (per_axis - 1.0));
    }
    std::array<std::size_t, 6> idx{};
    const std::size_t total = static_cast<std::size_t>(std::pow(per_axis, 6));
    g.points.reserve(total);
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t r = n;
        for (int a = 0; a < 6; ++a) {
            idx[a] = r % per_axis;
            r /= per_axis;
        }
        g.points.push_back({{axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]]},
                            {axes[3][idx[3]], axes[4][idx[4]], axes[5][idx[5]]}});
    }
    return g;
}

std::vector<double> nu_probe(const ModelParams& params, const ParticleEnsemble& gamma_snapshot,
                             const BackgroundField& e0, const ProbeGrid& probe, const KdeBandwidth& bandwidth,
                             NuMode mode) {
    if (gamma_snapshot.frame != Frame::PseudoConformal) throw DomainError("nu_probe: pseudo-conformal snapshot required");
    probe.validate();
    const double s = gamma_snapshot.time;
    if (mode == NuMode::PullbackMeasure) {
        ParticleEnsemble pulled = gamma_snapshot;
        parallel_for(pulled.size(), [&](std::size_t i) {
            const PhaseState st =
                phi_alpha_inverse(e0, params, s, gamma_snapshot.positions[i], gamma_snapshot.velocities[i]);
            pulled.positions[i] = st.position;
            pulled.velocities[i] = st.momentum;
        });
        return PhaseSpaceKde(pulled, bandwidth).gamma_at(probe.points);
    }
    std::vector<PhasePoint> shifted(probe.points.size());
    parallel_for(shifted.size(), [&](std::size_t k) {
        const PhaseState st = phi_alpha(e0, params, s, probe.points[k].x, probe.points[k].v);
        shifted[k] = {st.position, st.momentum};
    });
    return PhaseSpaceKde(gamma_snapshot, bandwidth).gamma_at(shifted);
}

ConvergenceSeries cauchy_monitor(std::span<const double> times, std::span<const std::vector<double>> values,
                                 double floor) {
    if (times.size() != values.size()) throw ConfigurationError("cauchy_monitor: length mismatch");
    if (values.size() < 4) throw InsufficientData("cauchy_monitor: at least 4 levels required");
    ConvergenceSeries out;
    out.times.assign(times.begin(), times.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        if (values[k].size() != values[k + 1].size()) throw ConfigurationError("cauchy_monitor: probe count mismatch");
        double m = 0.0;
        for (std::size_t j = 0; j < values[k].size(); ++j) m = std::max(m, std::fabs(values[k][j] - values[k + 1][j]));
        out.sup_diffs.push_back(m);
    }
    for (std::size_t k = 1; k < out.sup_diffs.size(); ++k) {
        const double prev = out.sup_diffs[k - 1], cur = out.sup_diffs[k];
        if (cur <= floor) out.ratios.push_back(0.0);
        else if (prev <= floor) out.ratios.push_back(std::numeric_limits<double>::infinity());
        else out.ratios.push_back(cur / prev);
    }
    const std::size_t nd = out.sup_diffs.size();
    for (std::size_t k = nd >= 3 ? nd - 3 : 0; k < nd; ++k) out.tail_sum += out.sup_diffs[k];
    out.cauchy = true;
    const std::size_t nr = out.ratios.size();
    for (std::size_t k = nr >= 3 ? nr - 3 : 0; k < nr; ++k)
        if (!(out.ratios[k] <= 0.9)) out.cauchy = false;
    return out;
}

}  // namespace vrs
