#include "vrs/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"

namespace vrs {

KdeBandwidth KdeBandwidth::uniform(double h) {
    if (!(h > 0.0)) throw DomainError("KdeBandwidth: bandwidth must be positive");
    KdeBandwidth b;
    b.h.fill(h);
    return b;
}

KdeBandwidth KdeBandwidth::silverman(const ParticleEnsemble& ens) {
    KdeBandwidth b;
    const double mass = ens.total_mass();
    if (ens.empty() || !(mass > 0.0)) return b;
    const double factor = 1.06 * std::pow(static_cast<double>(ens.size()), -1.0 / 7.0);
    for (int axis = 0; axis < 6; ++axis) {
        const auto& src = axis < 3 ? ens.positions : ens.velocities;
        const int a = axis % 3;
        double mean = 0.0;
        for (std::size_t i = 0; i < ens.size(); ++i) mean += ens.weights[i] * src[i][a];
        mean /= mass;
        double var = 0.0;
        for (std::size_t i = 0; i < ens.size(); ++i) var += ens.weights[i] * (src[i][a] - mean) * (src[i][a] - mean);
        var /= mass;
        const double sigma = std::sqrt(var);
        b.h[axis] = sigma > 0.0 ? factor * sigma : 1.0;
    }
    return b;
}

KdeBandwidth KdeBandwidth::scaled(double factor) const {
    KdeBandwidth b = *this;
    for (auto& v : b.h) v *= factor;
    return b;
}

GammaDerivatives gamma_derivatives(const KdeDerivatives& d) {
    GammaDerivatives g;
    if (!(d.f > 0.0)) return g;
    g.g = std::sqrt(d.f);
    const double inv = 1.0 / (2.0 * g.g);
    const double inv3 = 1.0 / (4.0 * d.f * g.g);
    for (int a = 0; a < 6; ++a) g.grad[a] = d.grad[a] * inv;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) g.hess[a][b] = d.hess[a][b] * inv - d.grad[a] * d.grad[b] * inv3;
    return g;
}

PhaseSpaceKde::PhaseSpaceKde(const ParticleEnsemble& ens, const KdeBandwidth& bw, double cutoff)
    : bw_(bw), cutoff_(cutoff), norm_(1.0), floor_(std::exp(-0.5 * cutoff * cutoff)) {
    for (double h : bw.h)
        if (!(h > 0.0)) throw DomainError("PhaseSpaceKde: bandwidth must be positive");
    for (double h : bw.h) norm_ /= std::sqrt(2.0 * std::numbers::pi) * h;
    std::vector<std::size_t> order(ens.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ens.positions[a][0] < ens.positions[b][0]; });
    pts_.reserve(ens.size());
    w_.reserve(ens.size());
    for (std::size_t i : order) {
        if (ens.weights[i] == 0.0) continue;
        const auto& x = ens.positions[i];
        const auto& v = ens.velocities[i];
        pts_.push_back({x[0], x[1], x[2], v[0], v[1], v[2]});
        w_.push_back(ens.weights[i]);
    }
}

template <class Visit>
void PhaseSpaceKde::for_neighbours(const Vec3& x, const Vec3& v, Visit&& visit) const {
    const double z[6] = {x[0], x[1], x[2], v[0], v[1], v[2]};
    const double reach = cutoff_ * bw_.h[0];
    auto lo = std::lower_bound(pts_.begin(), pts_.end(), z[0] - reach,
                               [](const std::array<double, 6>& p, double val) { return p[0] < val; });
    const double cut2 = cutoff_ * cutoff_;
    for (auto it = lo; it != pts_.end() && (*it)[0] <= z[0] + reach; ++it) {
        double y[6];
        double q = 0.0;
        bool inside = true;
        for (int a = 0; a < 6; ++a) {
            y[a] = (z[a] - (*it)[a]) / bw_.h[a];
            if (std::fabs(y[a]) > cutoff_) {
                inside = false;
                break;
            }
            q += y[a] * y[a];
        }
        if (!inside || q > cut2) continue;
        // Shifted so the truncated kernel is continuous: particles crossing the cutoff cause no jumps.
        visit(static_cast<std::size_t>(it - pts_.begin()), y, std::exp(-0.5 * q) - floor_);
    }
}

double PhaseSpaceKde::density(const Vec3& x, const Vec3& v) const {
    double f = 0.0;
    for_neighbours(x, v, [&](std::size_t i, const double*, double k) { f += w_[i] * k; });
    return f * norm_;
}

double PhaseSpaceKde::gamma(const Vec3& x, const Vec3& v) const { return std::sqrt(density(x, v)); }

KdeDerivatives PhaseSpaceKde::derivatives(const Vec3& x, const Vec3& v) const {
    KdeDerivatives d;
    for_neighbours(x, v, [&](std::size_t i, const double* y, double k) {
        const double wk = w_[i] * k;
        d.f += wk;
        double g[6];
        for (int a = 0; a < 6; ++a) {
            g[a] = -y[a] / bw_.h[a];
            d.grad[a] += wk * g[a];
        }
        for (int a = 0; a < 6; ++a)
            for (int b = a; b < 6; ++b) {
                double v2 = g[a] * g[b];
                if (a == b) v2 -= 1.0 / (bw_.h[a] * bw_.h[a]);
                d.hess[a][b] += wk * v2;
            }
    });
    d.f *= norm_;
    for (auto& g : d.grad) g *= norm_;
    for (int a = 0; a < 6; ++a)
        for (int b = a; b < 6; ++b) {
            d.hess[a][b] *= norm_;
            d.hess[b][a] = d.hess[a][b];
        }
    return d;
}

std::vector<double> PhaseSpaceKde::gamma_at(std::span<const PhasePoint> pts) const {
    std::vector<double> out(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) { out[k] = gamma(pts[k].x, pts[k].v); });
    return out;
}

std::vector<PhasePoint> stride_subset(const ParticleEnsemble& ens, std::size_t m) {
    std::vector<PhasePoint> out;
    if (ens.empty() || m == 0) return out;
    const std::size_t stride = std::max<std::size_t>(1, ens.size() / m);
    for (std::size_t i = 0; i < ens.size() && out.size() < m; i += stride)
        out.push_back({ens.positions[i], ens.velocities[i]});
    return out;
}

}  // namespace vrs
