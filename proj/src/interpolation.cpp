#include "hjbsl/interpolation.hpp"

#include <ostream>

namespace hjbsl {

template <int Dim>
Stencil<Dim> p1_stencil(const Mesh<Dim>& mesh, const Point<Dim>& x)
{
    const auto hit = mesh.locate(x);
    Stencil<Dim> st;
    st.nodes = mesh.elements()[hit.element];
    // Location round-off leaves weights slightly negative or spuriously
    // nonzero at vertices; clamping keeps a convex combination and makes
    // vertex values exact.
    st.weights = hit.barycentric.unaryExpr([](double w) { return w < 1e-14 ? 0.0 : w; });
    st.weights /= st.weights.sum();
    return st;
}

template <int Dim>
void write_field_csv(std::ostream& out, const ValueField<Dim>& field)
{
    const auto old_precision = out.precision(17);
    for (int d = 1; d <= Dim; ++d) out << 'x' << d << ',';
    out << "value\n";
    const auto& mesh = *field.mesh;
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        for (int d = 0; d < Dim; ++d) out << mesh.vertex(i)[d] << ',';
        out << field.values[i] << '\n';
    }
    out.precision(old_precision);
}

template Stencil<1> p1_stencil<1>(const Mesh<1>&, const Point<1>&);
template Stencil<2> p1_stencil<2>(const Mesh<2>&, const Point<2>&);
template void write_field_csv<1>(std::ostream&, const ValueField<1>&);
template void write_field_csv<2>(std::ostream&, const ValueField<2>&);

}  // namespace hjbsl
