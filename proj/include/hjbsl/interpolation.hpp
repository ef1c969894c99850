#pragma once

#include "hjbsl/geometry.hpp"

#include <iosfwd>
#include <memory>

namespace hjbsl {

/// Nodal values on a mesh at one time level.
template <int Dim>
struct ValueField {
    std::shared_ptr<const Mesh<Dim>> mesh;
    Eigen::VectorXd values;
    double time = 0.0;
};

/// P1 interpolation stencil: vertex indices and nonnegative weights summing
/// to one.
template <int Dim>
struct Stencil {
    std::array<int, Dim + 1> nodes;
    Eigen::Matrix<double, Dim + 1, 1> weights;

    double apply(const Eigen::VectorXd& values) const
    {
        double acc = 0.0;
        for (int a = 0; a <= Dim; ++a) acc += weights[a] * values[nodes[a]];
        return acc;
    }
};

/// Stencil of I[.] at x, composed with the hull projection.
template <int Dim>
Stencil<Dim> p1_stencil(const Mesh<Dim>& mesh, const Point<Dim>& x);

template <int Dim>
double interpolate(const ValueField<Dim>& field, const Point<Dim>& x)
{
    return p1_stencil(*field.mesh, x).apply(field.values);
}

/// Writes "x1,...,xd,value" per vertex with 17 significant digits.
template <int Dim>
void write_field_csv(std::ostream& out, const ValueField<Dim>& field);

}  // namespace hjbsl
