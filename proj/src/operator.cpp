#include "hjbsl/operator.hpp"
#include "hjbsl/parallel.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hjbsl {

std::string ControlDescriptor::describe() const
{
    std::ostringstream out;
    switch (kind) {
    case Kind::box:
        out << "box[";
        for (Eigen::Index d = 0; d < lo.size(); ++d)
            out << (d ? "x" : "") << "(" << lo[d] << "," << hi[d] << ")";
        out << "] counts=";
        for (std::size_t d = 0; d < counts.size(); ++d) out << (d ? "x" : "") << counts[d];
        break;
    case Kind::disk:
        out << "disk(r=" << radius << ") rings=" << rings << " angles=" << angles;
        break;
    case Kind::list:
        out << "list";
        break;
    }
    return out.str();
}

namespace {

template <int Dim>
void push_branch(CompiledFoot<Dim>& out, const Mesh<Dim>& mesh, double weight, double lambda, double dt,
                 const Point<Dim>& y)
{
    if (lambda < 1.0) {
        out.boundary.push_back({weight, lambda * dt, y});
        return;
    }
    const auto st = p1_stencil(mesh, y);
    InteriorTerm<Dim> term;
    term.nodes = st.nodes;
    for (int a = 0; a <= Dim; ++a) term.weights[a] = weight * st.weights[a];
    out.interior.push_back(term);
}

}  // namespace

template <int Dim>
void compile_foot(const Problem<Dim>& problem, const Mesh<Dim>& mesh, double t_k, double dt,
                  const Point<Dim>& x, const Control& a, const SchemeOptions& options,
                  FootWorkspace<Dim>& ws)
{
    const int p = problem.brownian_dim;
    ws.sigma.resize(p);
    for (int l = 0; l < p; ++l) ws.sigma[l] = problem.diffusion(t_k, x, a, l);
    const Point<Dim> b = problem.drift(t_k, x, a);
    truncated_foot<Dim>(problem.domain, x, t_k, dt, b, ws.sigma, ws.foot);

    auto& out = ws.compiled;
    out.interior.clear();
    out.boundary.clear();
    out.tau = ws.foot.tau;
    out.any_exit = ws.foot.any_exit();
    for (int l = 0; l < p; ++l) {
        const auto& col = ws.foot.columns[l];
        const double wp = ws.foot.pi[l] * col.gamma_plus;
        const double wm = (options.flip_minus_weight ? -1.0 : 1.0) * ws.foot.pi[l] * col.gamma_minus;
        if (col.lambda_plus == col.lambda_minus && col.foot_plus == col.foot_minus) {
            push_branch(out, mesh, wp + wm, col.lambda_plus, dt, col.foot_plus);
        } else {
            push_branch(out, mesh, wp, col.lambda_plus, dt, col.foot_plus);
            push_branch(out, mesh, wm, col.lambda_minus, dt, col.foot_minus);
        }
    }
}

template <int Dim>
TruncatedFoot<Dim> truncated_foot(const Problem<Dim>& problem, double t_k, double dt, const Point<Dim>& x,
                                  const Control& a)
{
    std::vector<Point<Dim>> sigma(problem.brownian_dim);
    for (int l = 0; l < problem.brownian_dim; ++l) sigma[l] = problem.diffusion(t_k, x, a, l);
    TruncatedFoot<Dim> out;
    truncated_foot<Dim>(problem.domain, x, t_k, dt, problem.drift(t_k, x, a), sigma, out);
    return out;
}

template <int Dim>
double evaluate_terms(const std::vector<InteriorTerm<Dim>>& interior,
                      const std::vector<BoundaryTerm<Dim>>& boundary, const Problem<Dim>& problem,
                      const Eigen::VectorXd& next, double t_k)
{
    double acc = 0.0;
    for (const auto& term : interior)
        for (int a = 0; a <= Dim; ++a) acc += term.weights[a] * next[term.nodes[a]];
    for (const auto& term : boundary) acc += term.weight * problem.boundary(t_k + term.offset, term.point);
    return acc;
}

template <int Dim>
double apply_scheme_at(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k, double dt,
                       const Point<Dim>& x, const Control& a, const SchemeOptions& options,
                       FootWorkspace<Dim>& ws, double* tau_out)
{
    compile_foot(problem, *next.mesh, t_k, dt, x, a, options, ws);
    if (tau_out) *tau_out = ws.compiled.tau;
    return evaluate_terms(ws.compiled.interior, ws.compiled.boundary, problem, next.values, t_k) +
           ws.compiled.tau * problem.running_cost(t_k, x, a);
}

template <int Dim>
double apply_scheme(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k, double dt, int node,
                    const Control& a, const SchemeOptions& options)
{
    if (next.mesh->is_boundary(node)) throw std::invalid_argument("apply_scheme: node is on the boundary");
    FootWorkspace<Dim> ws;
    return apply_scheme_at(problem, next, t_k, dt, next.mesh->vertex(node), a, options, ws);
}

std::vector<Control> refinement_lattice(const ControlDescriptor& box, const Control& center)
{
    if (box.kind != ControlDescriptor::Kind::box) return {};
    const int m = static_cast<int>(center.size());
    Eigen::VectorXd step(m);
    for (int d = 0; d < m; ++d)
        step[d] = box.counts[d] > 1 ? (box.hi[d] - box.lo[d]) / (box.counts[d] - 1) / 3.0 : 0.0;

    std::vector<Control> out;
    std::vector<int> offs(m, -3);
    while (true) {
        bool all_zero = true;
        Control c = center;
        bool inside = true;
        for (int d = 0; d < m; ++d) {
            all_zero = all_zero && offs[d] == 0;
            c[d] = center[d] + offs[d] * step[d];
            const double tol = 1e-12 * std::max(1.0, box.hi[d] - box.lo[d]);
            if (c[d] < box.lo[d] - tol || c[d] > box.hi[d] + tol) inside = false;
        }
        if (inside && !all_zero) out.push_back(c);
        int d = m - 1;
        for (; d >= 0; --d) {
            if (++offs[d] <= 3 && step[d] > 0.0) break;
            offs[d] = -3;
        }
        if (d < 0) break;
    }
    return out;
}

template <int Dim>
ControlChoice minimize_over_controls(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k,
                                     double dt, int node, const MinimizeOptions& options)
{
    if (next.mesh->is_boundary(node))
        throw std::invalid_argument("minimize_over_controls: node is on the boundary");
    const Point<Dim> x = next.mesh->vertex(node);
    FootWorkspace<Dim> ws;
    ControlChoice best;
    best.value = std::numeric_limits<double>::infinity();
    for (int c = 0; c < problem.controls.size(); ++c) {
        const double v = apply_scheme_at(problem, next, t_k, dt, x, problem.controls.points[c], options.scheme, ws);
        if (v < best.value) {
            best.value = v;
            best.index = c;
        }
    }
    if (best.index < 0) throw std::invalid_argument("minimize_over_controls: empty control set");
    best.control = problem.controls.points[best.index];
    if (options.refine) {
        for (const auto& a : refinement_lattice(problem.controls.descriptor, best.control)) {
            const double v = apply_scheme_at(problem, next, t_k, dt, x, a, options.scheme, ws);
            if (v < best.value) {
                best.value = v;
                best.index = -1;
                best.control = a;
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// FootTable

template <int Dim>
std::size_t FootTable<Dim>::Block::bytes() const
{
    return interior_start.capacity() * sizeof(std::uint32_t) + boundary_start.capacity() * sizeof(std::uint32_t) +
           interior_count.capacity() + boundary_count.capacity() + tau_or_cost.capacity() * sizeof(double) +
           interior.capacity() * sizeof(InteriorTerm<Dim>) + boundary.capacity() * sizeof(BoundaryTerm<Dim>);
}

template <int Dim>
std::size_t FootTable<Dim>::bytes() const
{
    std::size_t total = 0;
    for (const auto& b : blocks_) total += b.bytes();
    return total;
}

template <int Dim>
bool FootTable<Dim>::build(const Problem<Dim>& problem, const Mesh<Dim>& mesh, double dt,
                           const SchemeOptions& options, std::size_t budget_bytes, int workers)
{
    blocks_.clear();
    holds_cost_ = problem.stationary_cost;
    if (!problem.autonomous) return false;

    const auto& nodes = mesh.interior_nodes();
    const int slots = static_cast<int>(nodes.size());
    const int nblocks = (slots + kBlockNodes - 1) / kBlockNodes;
    const int nc = problem.controls.size();
    std::vector<Block> blocks(nblocks);
    std::atomic<std::size_t> used{0};
    std::atomic<bool> over{false};

    parallel_for(nblocks, workers, [&](int begin, int end) {
        FootWorkspace<Dim> ws;
        for (int bi = begin; bi < end && !over.load(std::memory_order_relaxed); ++bi) {
            Block& blk = blocks[bi];
            blk.first_slot = bi * kBlockNodes;
            blk.num_slots = std::min(kBlockNodes, slots - blk.first_slot);
            blk.interior_start.reserve(blk.num_slots);
            blk.boundary_start.reserve(blk.num_slots);
            blk.interior_count.reserve(std::size_t(blk.num_slots) * nc);
            blk.boundary_count.reserve(std::size_t(blk.num_slots) * nc);
            blk.tau_or_cost.reserve(std::size_t(blk.num_slots) * nc);
            for (int s = 0; s < blk.num_slots; ++s) {
                const Point<Dim>& x = mesh.vertex(nodes[blk.first_slot + s]);
                blk.interior_start.push_back(static_cast<std::uint32_t>(blk.interior.size()));
                blk.boundary_start.push_back(static_cast<std::uint32_t>(blk.boundary.size()));
                for (int c = 0; c < nc; ++c) {
                    const auto& a = problem.controls.points[c];
                    compile_foot(problem, mesh, 0.0, dt, x, a, options, ws);
                    const auto& cf = ws.compiled;
                    if (cf.interior.size() > 255 || cf.boundary.size() > 255)
                        throw std::length_error("FootTable: too many terms per control");
                    blk.interior_count.push_back(static_cast<std::uint8_t>(cf.interior.size()));
                    blk.boundary_count.push_back(static_cast<std::uint8_t>(cf.boundary.size()));
                    blk.interior.insert(blk.interior.end(), cf.interior.begin(), cf.interior.end());
                    blk.boundary.insert(blk.boundary.end(), cf.boundary.begin(), cf.boundary.end());
                    blk.tau_or_cost.push_back(holds_cost_ ? cf.tau * problem.running_cost(0.0, x, a) : cf.tau);
                }
            }
            blk.interior.shrink_to_fit();
            blk.boundary.shrink_to_fit();
            if (used.fetch_add(blk.bytes()) + blk.bytes() > budget_bytes) over = true;
        }
    });
    if (over) return false;
    blocks_ = std::move(blocks);
    return true;
}

// ---------------------------------------------------------------------------

#define HJBSL_INSTANTIATE(D)                                                                                       \
    template void compile_foot<D>(const Problem<D>&, const Mesh<D>&, double, double, const Point<D>&,              \
                                  const Control&, const SchemeOptions&, FootWorkspace<D>&);                        \
    template TruncatedFoot<D> truncated_foot<D>(const Problem<D>&, double, double, const Point<D>&,                \
                                                const Control&);                                                   \
    template double evaluate_terms<D>(const std::vector<InteriorTerm<D>>&, const std::vector<BoundaryTerm<D>>&,    \
                                      const Problem<D>&, const Eigen::VectorXd&, double);                          \
    template double apply_scheme_at<D>(const Problem<D>&, const ValueField<D>&, double, double, const Point<D>&,   \
                                       const Control&, const SchemeOptions&, FootWorkspace<D>&, double*);          \
    template double apply_scheme<D>(const Problem<D>&, const ValueField<D>&, double, double, int, const Control&,  \
                                    const SchemeOptions&);                                                         \
    template ControlChoice minimize_over_controls<D>(const Problem<D>&, const ValueField<D>&, double, double, int, \
                                                     const MinimizeOptions&);                                      \
    template class FootTable<D>;

HJBSL_INSTANTIATE(1)
HJBSL_INSTANTIATE(2)

#undef HJBSL_INSTANTIATE

}  // namespace hjbsl
