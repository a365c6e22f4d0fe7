#pragma once

#include <memory>
#include <span>
#include <vector>

#include "vrs/kernel_field.hpp"

namespace vrs {

// A static vector field E = grad(phi) on R^3 with derivative access.
class SpatialField {
public:
    virtual ~SpatialField() = default;
    virtual Vec3 field(const Vec3& x) const = 0;
    // J(i, j) = d_i E_j (symmetric for gradient fields).
    virtual Mat3 gradient(const Vec3& x) const = 0;
    // T[k](i, j) = d_k d_i E_j.
    virtual Tensor3 hessian(const Vec3& x) const = 0;
    virtual bool has_potential() const { return false; }
    // Throws DomainError when no potential is available.
    virtual double potential(const Vec3& x) const;
};

class ZeroField final : public SpatialField {
public:
    Vec3 field(const Vec3&) const override { return {}; }
    Mat3 gradient(const Vec3&) const override { return {}; }
    Tensor3 hessian(const Vec3&) const override { return {}; }
    bool has_potential() const override { return true; }
    double potential(const Vec3&) const override { return 0.0; }
};

// E(x) = e + M x with M symmetric; phi = e.x + x.Mx/2.
class AffineField final : public SpatialField {
public:
    AffineField(const Vec3& e, const Mat3& m = Mat3{});
    Vec3 field(const Vec3& x) const override { return e_ + m_ * x; }
    Mat3 gradient(const Vec3&) const override { return m_; }
    Tensor3 hessian(const Vec3&) const override { return {}; }
    bool has_potential() const override { return true; }
    double potential(const Vec3& x) const override { return dot(e_, x) + 0.5 * dot(x, m_ * x); }

private:
    Vec3 e_;
    Mat3 m_;
};

// Riesz field of a weighted point set, derivatives analytic.
class KernelSumField final : public SpatialField {
public:
    KernelSumField(const ModelParams& params, std::vector<Vec3> positions, std::vector<double> weights);
    KernelSumField(const ModelParams& params, const ParticleEnsemble& ens);

    Vec3 field(const Vec3& x) const override;
    Mat3 gradient(const Vec3& x) const override;
    Tensor3 hessian(const Vec3& x) const override;
    bool has_potential() const override { return true; }
    double potential(const Vec3& x) const override;

    std::span<const Vec3> positions() const { return positions_; }
    std::span<const double> weights() const { return weights_; }

private:
    RieszKernel kernel_;
    std::vector<Vec3> positions_;
    std::vector<double> weights_;
};

// sum_k c_k F_k.
class LinearCombinationField final : public SpatialField {
public:
    struct Term {
        double coefficient;
        std::shared_ptr<const SpatialField> field;
    };
    explicit LinearCombinationField(std::vector<Term> terms);

    Vec3 field(const Vec3& x) const override;
    Mat3 gradient(const Vec3& x) const override;
    Tensor3 hessian(const Vec3& x) const override;
    bool has_potential() const override;
    double potential(const Vec3& x) const override;

private:
    std::vector<Term> terms_;
};

// Field sampled on a grid: trilinear values, derivatives from fourth-order central
// differences of the grid (second order at the two outermost layers). Zero outside the grid.
class GridSampledField final : public SpatialField {
public:
    explicit GridSampledField(GridField values);

    Vec3 field(const Vec3& x) const override;
    Mat3 gradient(const Vec3& x) const override;
    Tensor3 hessian(const Vec3& x) const override;
    const GridField& grid() const { return values_; }

private:
    bool inside(const Vec3& x) const;
    GridField values_;
    std::array<GridField, 3> d_;   // d_a E
    std::array<GridField, 6> dd_;  // d_a d_b E, a <= b
};

// Fourth-order central difference of a grid field along axis a (component-wise).
GridField grid_derivative(const GridField& f, int axis);

}  // namespace vrs
