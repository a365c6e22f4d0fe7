#include "vrs/fields.hpp"

#include <cmath>

#include "vrs/errors.hpp"
#include "vrs/spectral.hpp"

namespace vrs {

double SpatialField::potential(const Vec3&) const {
    throw DomainError("this field carries no potential");
}

AffineField::AffineField(const Vec3& e, const Mat3& m) : e_(e), m_(m) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < i; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * (1.0 + frobenius(m)))
                throw ConfigurationError("AffineField: matrix must be symmetric");
}

KernelSumField::KernelSumField(const ModelParams& params, std::vector<Vec3> positions, std::vector<double> weights)
    : kernel_(params), positions_(std::move(positions)), weights_(std::move(weights)) {
    if (positions_.size() != weights_.size()) throw ConfigurationError("KernelSumField: size mismatch");
}

KernelSumField::KernelSumField(const ModelParams& params, const ParticleEnsemble& ens)
    : KernelSumField(params, ens.positions, ens.weights) {}

Vec3 KernelSumField::field(const Vec3& x) const { return field_from_sources(kernel_, positions_, weights_, x); }

double KernelSumField::potential(const Vec3& x) const {
    return potential_from_sources(kernel_, positions_, weights_, x);
}

Mat3 KernelSumField::gradient(const Vec3& x) const {
    Mat3 g;
    for (std::size_t i = 0; i < positions_.size(); ++i)
        if (weights_[i] != 0.0) g += kernel_.hessian(x - positions_[i]) * weights_[i];
    return g;
}

Tensor3 KernelSumField::hessian(const Vec3& x) const {
    Tensor3 t{};
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (weights_[i] == 0.0) continue;
        const Tensor3 ti = kernel_.third(x - positions_[i]);
        for (int k = 0; k < 3; ++k) t[k] += ti[k] * weights_[i];
    }
    return t;
}

LinearCombinationField::LinearCombinationField(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
        if (!t.field) throw ConfigurationError("LinearCombinationField: null term");
}

Vec3 LinearCombinationField::field(const Vec3& x) const {
    Vec3 e;
    for (const auto& t : terms_)
        if (t.coefficient != 0.0) e += t.field->field(x) * t.coefficient;
    return e;
}

Mat3 LinearCombinationField::gradient(const Vec3& x) const {
    Mat3 g;
    for (const auto& t : terms_)
        if (t.coefficient != 0.0) g += t.field->gradient(x) * t.coefficient;
    return g;
}

Tensor3 LinearCombinationField::hessian(const Vec3& x) const {
    Tensor3 h{};
    for (const auto& t : terms_) {
        if (t.coefficient == 0.0) continue;
        const Tensor3 ht = t.field->hessian(x);
        for (int k = 0; k < 3; ++k) h[k] += ht[k] * t.coefficient;
    }
    return h;
}

bool LinearCombinationField::has_potential() const {
    for (const auto& t : terms_)
        if (t.coefficient != 0.0 && !t.field->has_potential()) return false;
    return true;
}

double LinearCombinationField::potential(const Vec3& x) const {
    double phi = 0.0;
    for (const auto& t : terms_)
        if (t.coefficient != 0.0) phi += t.coefficient * t.field->potential(x);
    return phi;
}

GridField grid_derivative(const GridField& f, int axis) {
    const auto& spec = f.spec;
    const std::size_t n = spec.dims[axis];
    if (n < 3) throw ConfigurationError("grid_derivative: need at least 3 nodes along the axis");
    GridField out = f;
    const double h = spec.spacing[axis];
    const std::size_t nc = f.components;
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? spec.dims[0] : spec.dims[0] * spec.dims[1];
    for (std::size_t k = 0; k < spec.dims[2]; ++k)
        for (std::size_t j = 0; j < spec.dims[1]; ++j)
            for (std::size_t i = 0; i < spec.dims[0]; ++i) {
                const std::size_t node = spec.index(i, j, k);
                const std::size_t pos = axis == 0 ? i : axis == 1 ? j : k;
                for (std::size_t c = 0; c < nc; ++c) {
                    auto val = [&](long off) { return f.values[static_cast<std::size_t>(static_cast<long>(node) + off * static_cast<long>(stride)) * nc + c]; };
                    double d;
                    if (pos >= 2 && pos + 2 < n)
                        d = (-val(2) + 8.0 * val(1) - 8.0 * val(-1) + val(-2)) / (12.0 * h);
                    else if (pos >= 1 && pos + 1 < n)
                        d = (val(1) - val(-1)) / (2.0 * h);
                    else if (pos == 0)
                        d = (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
                    else
                        d = (3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2.0 * h);
                    out.values[node * nc + c] = d;
                }
            }
    return out;
}

namespace {
inline int pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    // (0,0)(0,1)(0,2)(1,1)(1,2)(2,2)
    static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return table[a][b];
}
}  // namespace

GridSampledField::GridSampledField(GridField values) : values_(std::move(values)) {
    values_.validate();
    if (values_.components != 3) throw ConfigurationError("GridSampledField: vector grid required");
    for (int a = 0; a < 3; ++a) d_[a] = grid_derivative(values_, a);
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) dd_[pair_index(a, b)] = grid_derivative(d_[b], a);
}

bool GridSampledField::inside(const Vec3& x) const {
    const auto& s = values_.spec;
    for (int a = 0; a < 3; ++a) {
        const double u = (x[a] - s.origin[a]) / s.spacing[a];
        if (!(u >= 0.0 && u <= static_cast<double>(s.dims[a] - 1))) return false;
    }
    return true;
}

Vec3 GridSampledField::field(const Vec3& x) const {
    if (!inside(x)) return {};
    return interpolate_vector(values_, x, Boundary::Bounded);
}

Mat3 GridSampledField::gradient(const Vec3& x) const {
    Mat3 g;
    if (!inside(x)) return g;
    for (int i = 0; i < 3; ++i) {
        const Vec3 row = interpolate_vector(d_[i], x, Boundary::Bounded);
        for (int j = 0; j < 3; ++j) g(i, j) = row[j];
    }
    return g;
}

Tensor3 GridSampledField::hessian(const Vec3& x) const {
    Tensor3 t{};
    if (!inside(x)) return t;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i) {
            const Vec3 row = interpolate_vector(dd_[pair_index(k, i)], x, Boundary::Bounded);
            for (int j = 0; j < 3; ++j) t[k](i, j) = row[j];
        }
    return t;
}

}  // namespace vrs
