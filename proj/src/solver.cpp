#include "hjbsl/solver.hpp"
#include "hjbsl/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace hjbsl {

template <int Dim>
const ValueField<Dim>& Solution<Dim>::level(int k) const
{
    auto it = levels.find(k);
    if (it == levels.end()) throw std::out_of_range("time level " + std::to_string(k) + " was not retained");
    return it->second;
}

template <int Dim>
int Solution<Dim>::level_index(double t) const
{
    const double tol = 1e-12 * std::max(1.0, horizon);
    if (!(t >= -tol && t <= horizon + tol))
        throw std::out_of_range("time " + std::to_string(t) + " outside [0, T]");
    // t_k = k*dt may round to just below k*dt; the slack keeps it on level k.
    const int k = static_cast<int>(std::floor(t / dt + 1e-9));
    return std::clamp(k, 0, steps);
}

namespace {

template <int Dim>
struct LevelSweep {
    const Problem<Dim>& problem;
    const Mesh<Dim>& mesh;
    const FootTable<Dim>* table;
    const MinimizeOptions& minimize;
    double dt;

    // Minimum over controls at interior slot `slot`; returns value and
    // writes the winning control.
    double node_value(int slot, double t_k, const Eigen::VectorXd& next, FootWorkspace<Dim>& ws,
                      Control& argmin) const
    {
        const int node = mesh.interior_nodes()[slot];
        const Point<Dim>& x = mesh.vertex(node);
        const auto& controls = problem.controls.points;
        const int nc = static_cast<int>(controls.size());
        double best = std::numeric_limits<double>::infinity();
        int best_c = -1;
        // A NaN never compares below the running minimum; report it instead.
        auto fail = [&](int c) {
            argmin = controls[c];
            return std::numeric_limits<double>::quiet_NaN();
        };

        if (table) {
            const auto& blk = table->blocks()[slot / FootTable<Dim>::kBlockNodes];
            const int s = slot - blk.first_slot;
            const InteriorTerm<Dim>* it = blk.interior.data() + blk.interior_start[s];
            const BoundaryTerm<Dim>* bt = blk.boundary.data() + blk.boundary_start[s];
            const std::size_t pair = std::size_t(s) * nc;
            const bool holds_cost = table->holds_cost();
            for (int c = 0; c < nc; ++c) {
                double v = 0.0;
                for (int n = blk.interior_count[pair + c]; n > 0; --n, ++it)
                    for (int a = 0; a <= Dim; ++a) v += it->weights[a] * next[it->nodes[a]];
                for (int n = blk.boundary_count[pair + c]; n > 0; --n, ++bt)
                    v += bt->weight * problem.boundary(t_k + bt->offset, bt->point);
                const double tc = blk.tau_or_cost[pair + c];
                v += holds_cost ? tc : tc * problem.running_cost(t_k, x, controls[c]);
                if (std::isnan(v)) return fail(c);
                if (v < best) {
                    best = v;
                    best_c = c;
                }
            }
        } else {
            for (int c = 0; c < nc; ++c) {
                compile_foot(problem, mesh, t_k, dt, x, controls[c], minimize.scheme, ws);
                const double v = evaluate_terms(ws.compiled.interior, ws.compiled.boundary, problem, next, t_k) +
                                 ws.compiled.tau * problem.running_cost(t_k, x, controls[c]);
                if (std::isnan(v)) return fail(c);
                if (v < best) {
                    best = v;
                    best_c = c;
                }
            }
        }
        argmin = controls[best_c];

        if (minimize.refine) {
            for (const auto& a : refinement_lattice(problem.controls.descriptor, argmin)) {
                compile_foot(problem, mesh, t_k, dt, x, a, minimize.scheme, ws);
                const double v = evaluate_terms(ws.compiled.interior, ws.compiled.boundary, problem, next, t_k) +
                                 ws.compiled.tau * problem.running_cost(t_k, x, a);
                if (v < best) {
                    best = v;
                    argmin = a;
                }
            }
        }
        return best;
    }
};

}  // namespace

template <int Dim>
Solution<Dim> solve(const Problem<Dim>& problem, std::shared_ptr<const Mesh<Dim>> mesh, double dt,
                    const SolveOptions& options)
{
    if (!(dt > 0.0)) throw std::invalid_argument("solve: time step must be positive");
    if (problem.controls.size() == 0) throw std::invalid_argument("solve: empty control set");
    const auto start = std::chrono::steady_clock::now();

    Solution<Dim> sol;
    sol.mesh = mesh;
    sol.horizon = problem.horizon;
    sol.requested_dt = dt;
    const double ratio = problem.horizon / dt;
    sol.steps = std::max(1, static_cast<int>(std::llround(ratio)));
    sol.dt = problem.horizon / sol.steps;
    sol.dt_adjusted = std::abs(ratio - sol.steps) > 4.0 * std::numeric_limits<double>::epsilon() * ratio;
    sol.workers = resolve_workers(options.workers);
    const int N = sol.steps;

    std::set<int> keep{0};
    for (double t : options.report_times) keep.insert(sol.level_index(t));

    const int nv = mesh->num_vertices();
    const int m = problem.controls.dimension();
    auto retain = [&](int k, const Eigen::VectorXd& values, const Eigen::MatrixXd* ctrl) {
        if (!options.keep_all_levels && !keep.count(k)) return;
        sol.levels[k] = ValueField<Dim>{mesh, values, sol.time(k)};
        if (ctrl) sol.controls[k] = *ctrl;
    };

    Eigen::VectorXd next(nv);
    for (int i = 0; i < nv; ++i) next[i] = problem.terminal(mesh->vertex(i));
    sol.max_abs = next.cwiseAbs().maxCoeff();
    retain(N, next, nullptr);

    FootTable<Dim> table;
    if (options.use_table && problem.autonomous)
        sol.used_table = table.build(problem, *mesh, sol.dt, options.minimize.scheme, options.table_budget_bytes,
                                     sol.workers);
    const LevelSweep<Dim> sweep{problem, *mesh, sol.used_table ? &table : nullptr, options.minimize, sol.dt};

    const auto& interior = mesh->interior_nodes();
    const int slots = static_cast<int>(interior.size());
    Eigen::VectorXd cur(nv);
    Eigen::MatrixXd ctrl;
    for (int k = N - 1; k >= 0; --k) {
        const double t_k = sol.time(k);
        const bool want_controls = options.store_controls && (options.keep_all_levels || keep.count(k));
        if (want_controls) ctrl.setConstant(m, nv, std::numeric_limits<double>::quiet_NaN());

        for (int i = 0; i < nv; ++i)
            if (mesh->is_boundary(i)) cur[i] = problem.boundary(t_k, mesh->vertex(i));

        // Whole table blocks per worker so each walks its own memory.
        const int chunk = FootTable<Dim>::kBlockNodes;
        const int nchunks = (slots + chunk - 1) / chunk;
        parallel_for(nchunks, sol.workers, [&](int begin, int end) {
            FootWorkspace<Dim> ws;
            Control argmin;
            for (int s = begin * chunk; s < std::min(slots, end * chunk); ++s) {
                const int node = interior[s];
                const double v = sweep.node_value(s, t_k, next, ws, argmin);
                if (!std::isfinite(v))
                    throw SolverError(k, node,
                                      "non-finite value at level " + std::to_string(k) + ", node " +
                                          std::to_string(node));
                cur[node] = v;
                if (want_controls) ctrl.col(node) = argmin;
            }
        });
        for (int i = 0; i < nv; ++i)
            if (!std::isfinite(cur[i]))
                throw SolverError(k, i, "non-finite boundary value at level " + std::to_string(k) + ", node " +
                                            std::to_string(i));
        sol.max_abs = std::max(sol.max_abs, cur.cwiseAbs().maxCoeff());
        retain(k, cur, want_controls ? &ctrl : nullptr);
        next.swap(cur);
    }

    sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

template <int Dim>
double evaluate(const Solution<Dim>& solution, double t, const Point<Dim>& x)
{
    return interpolate(solution.level(solution.level_index(t)), x);
}

template <int Dim>
Point<Dim> gradient(const Solution<Dim>& solution, double t, const Point<Dim>& x, double h)
{
    if (h <= 0.0) h = solution.mesh->mesh_size();
    const auto& domain = solution.mesh->domain();
    const double tol = domain.boundary_tolerance();
    const auto& field = solution.level(solution.level_index(t));
    Point<Dim> g;
    for (int d = 0; d < Dim; ++d) {
        Point<Dim> xp = x;
        Point<Dim> xm = x;
        xp[d] += h;
        xm[d] -= h;
        if (domain.signed_distance(xp) > tol || domain.signed_distance(xm) > tol)
            throw std::domain_error("gradient: difference stencil leaves the domain");
        g[d] = (interpolate(field, xp) - interpolate(field, xm)) / (2.0 * h);
    }
    return g;
}

template struct Solution<1>;
template struct Solution<2>;
template Solution<1> solve<1>(const Problem<1>&, std::shared_ptr<const Mesh<1>>, double, const SolveOptions&);
template Solution<2> solve<2>(const Problem<2>&, std::shared_ptr<const Mesh<2>>, double, const SolveOptions&);
template double evaluate<1>(const Solution<1>&, double, const Point<1>&);
template double evaluate<2>(const Solution<2>&, double, const Point<2>&);
template Point<1> gradient<1>(const Solution<1>&, double, const Point<1>&, double);
template Point<2> gradient<2>(const Solution<2>&, double, const Point<2>&, double);

}  // namespace hjbsl
