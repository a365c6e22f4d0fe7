#include "vrs/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "vrs/errors.hpp"
#include "vrs/parallel.hpp"

namespace vrs {

namespace {

void require_spectral_grid(const GridSpec& spec) {
    for (int a = 0; a < 3; ++a) {
        if (spec.dims[a] < 4) throw ConfigurationError("spectral_field: every grid dimension must be >= 4");
        if (!(spec.spacing[a] > 0.0)) throw ConfigurationError("spectral_field: spacing must be positive");
    }
}

// Signed FFT wavenumber index.
inline long signed_mode(std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

struct CicStencil {
    std::array<std::size_t, 2> ix, iy, iz;
    std::array<double, 2> wx, wy, wz;
};

bool make_stencil(const GridSpec& spec, const Vec3& x, Boundary boundary, CicStencil& st) {
    std::array<std::array<std::size_t, 2>*, 3> idx{&st.ix, &st.iy, &st.iz};
    std::array<std::array<double, 2>*, 3> wts{&st.wx, &st.wy, &st.wz};
    for (int a = 0; a < 3; ++a) {
        const auto n = static_cast<long>(spec.dims[a]);
        const double u = (x[a] - spec.origin[a]) / spec.spacing[a];
        if (!std::isfinite(u)) return false;
        long i0 = static_cast<long>(std::floor(u));
        double f = u - static_cast<double>(i0);
        if (boundary == Boundary::Bounded) {
            if (u < 0.0 || u > static_cast<double>(n - 1)) return false;
            if (i0 >= n - 1) {
                i0 = n - 2;
                f = 1.0;
            }
            (*idx[a])[0] = static_cast<std::size_t>(i0);
            (*idx[a])[1] = static_cast<std::size_t>(i0 + 1);
        } else {
            const long m0 = ((i0 % n) + n) % n;
            (*idx[a])[0] = static_cast<std::size_t>(m0);
            (*idx[a])[1] = static_cast<std::size_t>((m0 + 1) % n);
        }
        (*wts[a])[0] = 1.0 - f;
        (*wts[a])[1] = f;
    }
    return true;
}

}  // namespace

struct SpectralSolver::Plans {
    std::size_t n0, n1, n2, nc;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_complex* work = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<double> mult[3];

    ~Plans() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        fftw_free(real);
        fftw_free(spec);
        fftw_free(work);
    }
};

SpectralSolver::SpectralSolver(const ModelParams& params, const GridSpec& spec)
    : params_(params), spec_(spec), plans_(std::make_unique<Plans>()) {
    require_spectral_grid(spec);
    auto& p = *plans_;
    p.n0 = spec.dims[0];
    p.n1 = spec.dims[1];
    p.n2 = spec.dims[2];
    p.nc = p.n0 / 2 + 1;
    const std::size_t n_real = p.n0 * p.n1 * p.n2;
    const std::size_t n_cplx = p.nc * p.n1 * p.n2;
    p.real = fftw_alloc_real(n_real);
    p.spec = fftw_alloc_complex(n_cplx);
    p.work = fftw_alloc_complex(n_cplx);
    // FFTW is row-major with the last index fastest; our x-fastest layout is (z, y, x).
    const int n[3] = {static_cast<int>(p.n2), static_cast<int>(p.n1), static_cast<int>(p.n0)};
    p.forward = fftw_plan_dft_r2c(3, n, p.real, p.spec, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r(3, n, p.work, p.real, FFTW_ESTIMATE);

    const double two_pi = 2.0 * std::numbers::pi;
    const double len[3] = {spec.spacing[0] * p.n0, spec.spacing[1] * p.n1, spec.spacing[2] * p.n2};
    for (auto& m : p.mult) m.assign(n_cplx, 0.0);
    const double alpha = params.alpha();
    for (std::size_t k2 = 0; k2 < p.n2; ++k2)
        for (std::size_t k1 = 0; k1 < p.n1; ++k1)
            for (std::size_t k0 = 0; k0 < p.nc; ++k0) {
                const long m0 = signed_mode(k0, p.n0), m1 = signed_mode(k1, p.n1), m2 = signed_mode(k2, p.n2);
                const double xi[3] = {two_pi * m0 / len[0], two_pi * m1 / len[1], two_pi * m2 / len[2]};
                const double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                const std::size_t idx = k0 + p.nc * (k1 + p.n1 * k2);
                if (xi2 == 0.0) continue;
                const double radial = std::pow(xi2, -alpha);
                const bool nyq[3] = {p.n0 % 2 == 0 && k0 == p.n0 / 2, p.n1 % 2 == 0 && k1 == p.n1 / 2,
                                     p.n2 % 2 == 0 && k2 == p.n2 / 2};
                for (int a = 0; a < 3; ++a) p.mult[a][idx] = nyq[a] ? 0.0 : xi[a] * radial;
            }
}

SpectralSolver::~SpectralSolver() = default;

GridField SpectralSolver::solve(const GridField& rho) {
    if (rho.components != 1) throw ConfigurationError("spectral_field: density must be scalar");
    if (rho.spec.dims != spec_.dims) throw ConfigurationError("spectral_field: grid shape mismatch");
    auto& p = *plans_;
    const std::size_t n_real = p.n0 * p.n1 * p.n2;
    const std::size_t n_cplx = p.nc * p.n1 * p.n2;
    std::copy(rho.values.begin(), rho.values.end(), p.real);
    fftw_execute(p.forward);

    GridField out = GridField::vector(rho.spec, rho.space);
    const double inv_n = 1.0 / static_cast<double>(n_real);
    for (int a = 0; a < 3; ++a) {
        const auto& m = p.mult[a];
        // i * m * rho_hat
        for (std::size_t k = 0; k < n_cplx; ++k) {
            p.work[k][0] = -m[k] * p.spec[k][1];
            p.work[k][1] = m[k] * p.spec[k][0];
        }
        fftw_execute(p.backward);
        for (std::size_t k = 0; k < n_real; ++k) out.values[3 * k + a] = p.real[k] * inv_n;
    }
    return out;
}

GridField spectral_field(const ModelParams& params, const GridField& rho) {
    rho.validate();
    require_spectral_grid(rho.spec);
    SpectralSolver solver(params, rho.spec);
    return solver.solve(rho);
}

GridField deposit_density(const ParticleEnsemble& ens, const GridSpec& spec, Boundary boundary) {
    GridField rho = GridField::scalar(spec);
    const double inv_vol = 1.0 / spec.cell_volume();
    std::size_t outside = 0;
    CicStencil st;
    for (std::size_t p = 0; p < ens.size(); ++p) {
        if (!make_stencil(spec, ens.positions[p], boundary, st)) {
            ++outside;
            continue;
        }
        const double w = ens.weights[p] * inv_vol;
        for (int c = 0; c < 2; ++c)
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a)
                    rho.values[spec.index(st.ix[a], st.iy[b], st.iz[c])] += w * st.wx[a] * st.wy[b] * st.wz[c];
    }
    if (outside > 0) {
        std::ostringstream msg;
        msg << "deposit: " << outside << " particle(s) outside the grid";
        throw CoverageError(msg.str());
    }
    return rho;
}

double interpolate_scalar(const GridField& f, const Vec3& x, Boundary boundary) {
    CicStencil st;
    if (!make_stencil(f.spec, x, boundary, st)) throw CoverageError("interpolate: point outside the grid");
    double v = 0.0;
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a)
                v += st.wx[a] * st.wy[b] * st.wz[c] * f.at(f.spec.index(st.ix[a], st.iy[b], st.iz[c]), 0);
    return v;
}

Vec3 interpolate_vector(const GridField& f, const Vec3& x, Boundary boundary) {
    CicStencil st;
    if (!make_stencil(f.spec, x, boundary, st)) throw CoverageError("interpolate: point outside the grid");
    Vec3 v;
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const double w = st.wx[a] * st.wy[b] * st.wz[c];
                const std::size_t node = f.spec.index(st.ix[a], st.iy[b], st.iz[c]);
                v += f.vec(node) * w;
            }
    return v;
}

std::vector<Vec3> pm_field_at_points(SpectralSolver& solver, const ParticleEnsemble& sources,
                                     std::span<const Vec3> points) {
    const GridField rho = deposit_density(sources, solver.spec(), Boundary::Periodic);
    const GridField e = solver.solve(rho);
    std::vector<Vec3> out(points.size());
    parallel_for(points.size(), [&](std::size_t k) { out[k] = interpolate_vector(e, points[k], Boundary::Periodic); });
    return out;
}

GridSpec pm_grid_for(const ParticleEnsemble& ens, std::size_t n, double padding, double margin) {
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (const auto& x : ens.positions)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], x[a]);
            hi[a] = std::max(hi[a], x[a]);
        }
    if (ens.empty()) lo = hi = Vec3{};
    const Vec3 centre = (lo + hi) * 0.5;
    double extent = 0.0;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo[a]);
    extent = std::max(extent + 2.0 * margin, 1e-6);
    return GridSpec::cube(centre, padding * extent, n);
}

}  // namespace vrs
