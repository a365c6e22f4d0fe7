#include "vrs/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"

namespace vrs {

const char* to_string(SubstepPolicy p) { return p == SubstepPolicy::Fixed ? "fixed" : "time_weighted"; }
const char* to_string(FieldMode m) { return m == FieldMode::Direct ? "direct" : "spectral"; }

void SolveConfig::validate(Frame frame) const {
    if (!(dt_base > 0.0)) throw ConfigurationError("SolveConfig: dt_base must be positive");
    if (t_start == t_end) throw ConfigurationError("SolveConfig: t_start must differ from t_end");
    if (record_every < 1) throw ConfigurationError("SolveConfig: record_every must be >= 1");
    if (frame == Frame::Wave) throw ConfigurationError("SolveConfig: the wave frame is integrated by wave_operator");
    if (frame == Frame::PseudoConformal && (!(t_start > 0.0) || !(t_end > 0.0)))
        throw DomainError("SolveConfig: pseudo-conformal time must stay positive");
}

std::vector<double> Trajectory::times() const {
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots) t.push_back(s.time);
    return t;
}

const ParticleEnsemble& Trajectory::nearest(double t) const {
    if (snapshots.empty()) throw InsufficientData("Trajectory::nearest: empty trajectory");
    std::size_t best = 0;
    for (std::size_t k = 1; k < snapshots.size(); ++k)
        if (std::fabs(snapshots[k].time - t) < std::fabs(snapshots[best].time - t)) best = k;
    return snapshots[best];
}

void Trajectory::write_csv(std::ostream& out) const {
    out << "time,mass,l2_proxy,mom_a1,mom_a2,mom_a4,e_sup,energy\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (const auto& d : diagnostics) {
        row.str("");
        row << d.time << ',' << d.mass << ',' << d.l2_proxy << ',' << d.mom_a1 << ',' << d.mom_a2 << ',' << d.mom_a4
            << ',' << d.e_sup << ',' << d.energy << '\n';
        out << row.str();
    }
}

double frame_weight(const ModelParams& params, Frame frame, double time) {
    switch (frame) {
        case Frame::Physical: return 1.0;
        case Frame::PseudoConformal:
            if (!(time > 0.0)) throw DomainError("pseudo-conformal force weight needs s > 0");
            return std::pow(time, 1.0 - 2.0 * params.alpha());
        case Frame::Wave: break;
    }
    throw DomainError("force weight undefined in the wave frame");
}

FieldEvaluator direct_field_evaluator(const ModelParams& params) {
    return [params](const ParticleEnsemble& ens) { return mutual_fields(RieszKernel(params), ens.positions, ens.weights); };
}

FieldEvaluator spectral_field_evaluator(const ModelParams& params, const GridSpec& grid) {
    auto solver = std::make_shared<SpectralSolver>(params, grid);
    return [solver](const ParticleEnsemble& ens) { return pm_field_at_points(*solver, ens, ens.positions); };
}

std::vector<Vec3> accel(const ModelParams& params, const ParticleEnsemble& ens, double frame_time,
                        const FieldEvaluator& field) {
    const double w = params.lambda() * frame_weight(params, ens.frame, frame_time);
    std::vector<Vec3> a = field(ens);
    for (auto& v : a) v *= w;
    return a;
}

std::vector<Vec3> accel(const ModelParams& params, const ParticleEnsemble& ens, double frame_time) {
    return accel(params, ens, frame_time, direct_field_evaluator(params));
}

namespace {

// One KDK step given the field at the current positions; returns the field at the new positions.
std::vector<Vec3> kdk(const ModelParams& params, ParticleEnsemble& state, double dt, const std::vector<Vec3>& e_now,
                      const FieldEvaluator& field) {
    if (dt == 0.0) throw DomainError("leapfrog_step: dt must be nonzero");
    const double t_mid = state.time + 0.5 * dt;
    const double kick = 0.5 * dt * params.lambda() * frame_weight(params, state.frame, t_mid);
    const std::size_t n = state.size();
    for (std::size_t i = 0; i < n; ++i) {
        state.velocities[i] += e_now[i] * kick;
        state.positions[i] += state.velocities[i] * dt;
    }
    state.time += dt;
    std::vector<Vec3> e_next = field(state);
    for (std::size_t i = 0; i < n; ++i) state.velocities[i] += e_next[i] * kick;
    return e_next;
}

}  // namespace

ParticleEnsemble leapfrog_step(const ModelParams& params, const ParticleEnsemble& ens, double dt, double frame_time,
                               const FieldEvaluator& field) {
    if (ens.frame == Frame::Wave) throw DomainError("leapfrog_step: wave-frame ensembles are not supported");
    ParticleEnsemble state = ens;
    state.time = frame_time;
    kdk(params, state, dt, field(state), field);
    return state;
}

ParticleEnsemble leapfrog_step(const ModelParams& params, const ParticleEnsemble& ens, double dt, double frame_time) {
    return leapfrog_step(params, ens, dt, frame_time, direct_field_evaluator(params));
}

double total_energy(const ModelParams& params, const ParticleEnsemble& ens) {
    const RieszKernel kernel(params);
    const std::size_t n = ens.size();
    std::vector<double> kinetic(n), pair(n);
    parallel_for(n, [&](std::size_t i) {
        kinetic[i] = 0.5 * ens.weights[i] * norm2(ens.velocities[i]);
        double p = 0.0;
        for (std::size_t j = i + 1; j < n; ++j)
            p += ens.weights[j] * kernel.potential(ens.positions[i] - ens.positions[j]);
        pair[i] = ens.weights[i] * p;
    });
    const double w = ens.frame == Frame::Physical ? 1.0 : frame_weight(params, ens.frame, ens.time);
    return deterministic_sum(kinetic) - params.lambda() * w * deterministic_sum(pair);
}

GridSpec bounding_grid(std::span<const ParticleEnsemble* const> ensembles, std::size_t n, double margin) {
    if (n < 2) throw ConfigurationError("bounding_grid: need at least 2 nodes per axis");
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    bool any = false;
    for (const auto* e : ensembles)
        for (const auto& x : e->positions) {
            any = true;
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], x[a]);
                hi[a] = std::max(hi[a], x[a]);
            }
        }
    if (!any) lo = hi = Vec3{};
    GridSpec g;
    g.dims = {n, n, n};
    for (int a = 0; a < 3; ++a) {
        const double ext = std::max(hi[a] - lo[a], 1e-6);
        g.origin[a] = lo[a] - margin * ext;
        g.spacing[a] = ext * (1.0 + 2.0 * margin) / static_cast<double>(n - 1);
    }
    return g;
}

namespace {

// Box around the initial data widened by the largest displacement over the run.
GridSpec drift_box(const ParticleEnsemble& ens, double duration, std::size_t n, bool periodic) {
    double vmax = 0.0;
    for (const auto& v : ens.velocities) vmax = std::max(vmax, max_abs(v));
    const double margin = vmax * std::fabs(duration);
    if (periodic) return pm_grid_for(ens, n, 2.0, margin);
    ParticleEnsemble widened = ens;
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (const auto& x : ens.positions)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], x[a] - margin);
            hi[a] = std::max(hi[a], x[a] + margin);
        }
    widened.positions = {lo, hi};
    widened.velocities = {Vec3{}, Vec3{}};
    widened.weights = {0.0, 0.0};
    const ParticleEnsemble* ptr = &widened;
    return bounding_grid(std::span<const ParticleEnsemble* const>(&ptr, 1), n, 0.05);
}

SnapshotDiagnostics diagnose(const ModelParams& params, const ParticleEnsemble& ens, const std::vector<Vec3>& e,
                             const SolveConfig& cfg, const KdeBandwidth& bw) {
    SnapshotDiagnostics d;
    d.time = ens.time;
    d.mass = ens.total_mass();
    d.l2_proxy = std::sqrt(d.mass);
    for (const auto& v : e) d.e_sup = std::max(d.e_sup, norm(v));
    if (cfg.diagnostics >= DiagnosticsLevel::Energy) d.energy = total_energy(params, ens);
    if (cfg.diagnostics >= DiagnosticsLevel::Moments && !ens.empty()) {
        const PhaseSpaceKde kde(ens, bw);
        const auto pts = stride_subset(ens, cfg.moment_eval_points);
        const auto g = kde.gamma_at(pts);
        double m1 = 0.0, m2 = 0.0, m4 = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double b = bracket(pts[k].v);
            m1 = std::max(m1, b * g[k]);
            m2 = std::max(m2, b * b * g[k]);
            m4 = std::max(m4, b * b * b * b * g[k]);
        }
        d.mom_a1 = m1;
        d.mom_a2 = m2;
        d.mom_a4 = m4;
    }
    return d;
}

}  // namespace

Trajectory solve(const ModelParams& params, const ParticleEnsemble& ens, const SolveConfig& cfg,
                 const FieldEvaluator& field) {
    ens.validate();
    cfg.validate(ens.frame);
    if (ens.frame == Frame::PseudoConformal && params.alpha() > 1.0 && (cfg.t_start > 1.0 || cfg.t_end > 1.0))
        throw DomainError("solve: pseudo-conformal time must stay within (0, 1] when alpha > 1");
    if (std::fabs(ens.time - cfg.t_start) > 1e-12 * std::max(1.0, std::fabs(cfg.t_start)))
        throw ConfigurationError("solve: ensemble time does not match t_start");

    const double dir = cfg.t_end > cfg.t_start ? 1.0 : -1.0;
    std::vector<double> stops;
    for (double t : cfg.record_at)
        if ((t - cfg.t_start) * dir > 0.0 && (cfg.t_end - t) * dir > 0.0) stops.push_back(t);
    stops.push_back(cfg.t_end);
    std::sort(stops.begin(), stops.end(), [dir](double a, double b) { return a * dir < b * dir; });
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    Trajectory traj;
    traj.bandwidth = cfg.bandwidth ? *cfg.bandwidth : KdeBandwidth::silverman(ens);
    std::optional<GridSpec> moment_grid = cfg.moment_grid;
    if (cfg.diagnostics == DiagnosticsLevel::Full && !moment_grid)
        moment_grid = drift_box(ens, cfg.t_end - cfg.t_start, 24, false);

    ParticleEnsemble state = ens;
    state.time = cfg.t_start;
    std::vector<Vec3> e = field(state);

    auto record = [&]() {
        traj.snapshots.push_back(state);
        traj.diagnostics.push_back(diagnose(params, state, e, cfg, *traj.bandwidth));
        if (cfg.diagnostics == DiagnosticsLevel::Full) traj.moments.push_back(deposit_moments(state, *moment_grid));
    };
    record();

    const double tiny = 1e-12;
    std::size_t next = 0;
    std::size_t steps = 0;
    while (next < stops.size()) {
        double h = cfg.dt_base;
        if (cfg.substep_policy == SubstepPolicy::TimeWeighted && state.frame == Frame::PseudoConformal) {
            const double ex = 2.0 * params.alpha() - 1.0;
            const double s = state.time;
            h = cfg.dt_base * std::min(1.0, std::pow(s, ex));
            const double s_end = s + dir * h;
            if (s_end > 0.0) h = cfg.dt_base * std::min(1.0, std::pow(std::min(s, s_end), ex));
        }
        if (h < tiny) {
            std::ostringstream msg;
            msg << "solve: step size " << h << " below 1e-12 at time " << state.time
                << "; use the TimeWeighted substep policy or stop further from s = 0";
            throw StiffnessError(msg.str(), state.time);
        }
        double dt = dir * h;
        const double target = stops[next];
        bool hit = false;
        if ((state.time + dt - target) * dir >= -tiny * std::max(1.0, std::fabs(target))) {
            dt = target - state.time;
            hit = true;
        }
        if (state.frame == Frame::PseudoConformal && !(state.time + dt > 0.0))
            throw DomainError("solve: pseudo-conformal step crosses s = 0");
        e = kdk(params, state, dt, e, field);
        ++steps;
        if (hit) {
            state.time = target;
            ++next;
            record();
        } else if (steps % cfg.record_every == 0) {
            record();
        }
    }

    if (cfg.diagnostics >= DiagnosticsLevel::Energy && !traj.diagnostics.empty()) {
        const double e0 = traj.diagnostics.front().energy;
        double drift = 0.0;
        for (const auto& d : traj.diagnostics) drift = std::max(drift, std::fabs(d.energy - e0));
        traj.energy_drift = e0 != 0.0 ? drift / std::fabs(e0) : drift;
    }
    return traj;
}

Trajectory solve(const ModelParams& params, const ParticleEnsemble& ens, const SolveConfig& cfg) {
    if (cfg.field_mode == FieldMode::Direct) return solve(params, ens, cfg, direct_field_evaluator(params));
    const GridSpec grid =
        cfg.spectral_grid ? *cfg.spectral_grid : drift_box(ens, cfg.t_end - cfg.t_start, cfg.spectral_cells, true);
    return solve(params, ens, cfg, spectral_field_evaluator(params, grid));
}

// --- Picard ------------------------------------------------------------------------

PicardResult picard_local_solve(const ModelParams& params, const ParticleEnsemble& mu0, double T,
                                std::size_t n_iters, double dt, double rel_tol) {
    mu0.validate();
    if (mu0.frame != Frame::Physical) throw DomainError("picard_local_solve: expects physical-frame data");
    if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("picard_local_solve: T and dt must be positive");
    if (n_iters < 1) throw DomainError("picard_local_solve: need at least one iteration");

    const auto n_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double h = T / static_cast<double>(n_steps);
    const double t0 = mu0.time;
    const RieszKernel kernel(params);
    const std::size_t n = mu0.size();

    using Knots = std::vector<ParticleEnsemble>;
    // Transport mu0 along the frozen field of `prev` (zero field when prev is empty).
    auto transport = [&](const Knots* prev) {
        Knots out;
        out.reserve(n_steps + 1);
        ParticleEnsemble state = mu0;
        auto frozen = [&](std::size_t k) {
            std::vector<Vec3> e(n);
            if (prev == nullptr) return e;
            const auto& src = (*prev)[k];
            parallel_for(n, [&](std::size_t i) {
                e[i] = field_from_sources(kernel, src.positions, src.weights, state.positions[i], i);
            });
            return e;
        };
        out.push_back(state);
        std::vector<Vec3> e = frozen(0);
        const double kick = 0.5 * h * params.lambda();
        for (std::size_t k = 0; k < n_steps; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                state.velocities[i] += e[i] * kick;
                state.positions[i] += state.velocities[i] * h;
            }
            state.time = t0 + h * static_cast<double>(k + 1);
            e = frozen(k + 1);
            for (std::size_t i = 0; i < n; ++i) state.velocities[i] += e[i] * kick;
            out.push_back(state);
        }
        return out;
    };

    PicardResult result;
    Knots current = transport(nullptr);

    std::vector<const ParticleEnsemble*> ptrs;
    for (const auto& s : current) ptrs.push_back(&s);
    const GridSpec grid = bounding_grid(ptrs, 24, 0.25);
    auto deposit = [&](const ParticleEnsemble& e) { return deposit_density(e, grid, Boundary::Bounded); };

    double rho_sup = 0.0;
    for (const auto& s : current) {
        const auto r = deposit(s);
        for (double v : r.values) rho_sup = std::max(rho_sup, std::fabs(v));
    }
    result.tolerance = rel_tol * rho_sup;
    result.iterations = 1;

    for (std::size_t it = 1; it < n_iters; ++it) {
        Knots next = transport(&current);
        ++result.iterations;
        double r = 0.0;
        for (std::size_t k = 0; k <= n_steps; ++k) {
            const auto a = deposit(next[k]);
            const auto b = deposit(current[k]);
            for (std::size_t m = 0; m < a.values.size(); ++m) r = std::max(r, std::fabs(a.values[m] - b.values[m]));
        }
        result.residuals.push_back(r);
        if (result.residuals.size() >= 2) {
            const double prev = result.residuals[result.residuals.size() - 2];
            result.ratios.push_back(prev > 0.0 ? r / prev : 0.0);
        }
        current = std::move(next);
        if (r < result.tolerance || r == 0.0) break;
        if (result.residuals.size() >= 3 && r >= result.residuals[result.residuals.size() - 2]) {
            result.contracted = false;
            break;
        }
    }

    Trajectory traj;
    for (auto& s : current) {
        SnapshotDiagnostics d;
        d.time = s.time;
        d.mass = s.total_mass();
        d.l2_proxy = std::sqrt(d.mass);
        traj.diagnostics.push_back(d);
        traj.snapshots.push_back(std::move(s));
    }
    result.trajectory = std::move(traj);
    return result;
}

MomentFields deposit_moments(const ParticleEnsemble& ens, const GridSpec& grid) {
    MomentFields m;
    m.rho = deposit_density(ens, grid, Boundary::Bounded);
    m.j = GridField::vector(grid);
    ParticleEnsemble weighted = ens;
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < ens.size(); ++i) weighted.weights[i] = ens.weights[i] * ens.velocities[i][a];
        // Deposition is linear in the weights, so signed weights give the current component.
        const GridField comp = deposit_density(weighted, grid, Boundary::Bounded);
        for (std::size_t k = 0; k < grid.node_count(); ++k) m.j.values[3 * k + a] = comp.values[k];
    }
    return m;
}

double weighted_sup_moment(const ParticleEnsemble& ens, int a, const KdeBandwidth& bandwidth,
                           std::size_t eval_points) {
    if (a != 0 && a != 1 && a != 2 && a != 4 && a != 5)
        throw DomainError("weighted_sup_moment: a must be one of 0, 1, 2, 4, 5");
    if (ens.empty()) return 0.0;
    const PhaseSpaceKde kde(ens, bandwidth);
    const auto pts = stride_subset(ens, eval_points);
    const auto g = kde.gamma_at(pts);
    double best = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) best = std::max(best, std::pow(bracket(pts[k].v), a) * g[k]);
    return best;
}

double weighted_sup_moment(const ParticleEnsemble& ens, int a, double bandwidth) {
    return weighted_sup_moment(ens, a, KdeBandwidth::uniform(bandwidth));
}

}  // namespace vrs
