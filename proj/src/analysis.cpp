#include "hjbsl/analysis.hpp"
#include "hjbsl/parallel.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hjbsl {

template <int Dim>
double linf_error_t0(const Solution<Dim>& solution, const std::function<double(const Point<Dim>&)>& exact)
{
    const auto& field = solution.level(0);
    double err = 0.0;
    for (int i = 0; i < field.mesh->num_vertices(); ++i)
        err = std::max(err, std::abs(field.values[i] - exact(field.mesh->vertex(i))));
    return err;
}

double order(double e_coarse, double e_fine)
{
    if (!(e_coarse > 0.0) || !(e_fine > 0.0))
        throw std::invalid_argument("order: errors must be positive");
    return std::log2(e_coarse / e_fine);
}

void ConvergenceReport::write_csv(std::ostream& out) const
{
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << "dx,dt,nodes,err_linf,order,seconds\n";
    for (const auto& r : rows) {
        buf << r.dx << ',' << r.dt << ',' << r.nodes << ',' << r.err_linf << ',';
        if (r.order) buf << *r.order;
        buf << ',' << r.seconds << '\n';
    }
    out << buf.str();
}

nlohmann::json ConvergenceReport::to_json() const
{
    nlohmann::json j;
    j["problem"] = problem;
    j["params"] = params;
    j["cfl"] = cfl;
    j["controls"] = controls;
    j["mesh_convention"] = mesh_convention;
    auto& out = j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row{{"dx", r.dx},           {"dt", r.dt},         {"nodes", r.nodes},
                           {"err_linf", r.err_linf}, {"seconds", r.seconds}, {"steps", r.steps},
                           {"mesh_size", r.mesh_size}, {"dt_adjusted", r.dt_adjusted}};
        row["order"] = r.order ? nlohmann::json(*r.order) : nlohmann::json(nullptr);
        out.push_back(row);
    }
    return j;
}

template <int Dim>
ConvergenceReport refine_study(const ProblemSpec<Dim>& spec, double dx0, int levels, double cfl,
                               const SolveOptions& options)
{
    if (levels < 1) throw std::invalid_argument("refine_study: need at least one level");
    if (!(dx0 > 0.0) || !(cfl > 0.0)) throw std::invalid_argument("refine_study: dx0 and cfl must be positive");
    if (!spec.exact_t0) throw std::invalid_argument("refine_study: " + spec.name + " has no exact solution");

    ConvergenceReport report;
    report.problem = spec.name;
    report.params = spec.params;
    report.cfl = cfl;
    report.controls = spec.problem.controls.descriptor.describe();
    report.mesh_convention = spec.mesh_convention;
    double dx = dx0;
    for (int level = 0; level < levels; ++level, dx /= 2.0) {
        auto mesh = spec.mesh_for(dx);
        const auto sol = solve(spec.problem, mesh, cfl * dx, options);
        ConvergenceRow row;
        row.dx = dx;
        row.dt = sol.dt;
        row.nodes = mesh->num_vertices();
        row.err_linf = linf_error_t0(sol, spec.exact_t0);
        row.seconds = sol.wall_seconds;
        row.steps = sol.steps;
        row.mesh_size = mesh->mesh_size();
        row.dt_adjusted = sol.dt_adjusted;
        if (!report.rows.empty()) {
            const double coarse = report.rows.back().err_linf;
            if (coarse > 0.0 && row.err_linf > 0.0) row.order = order(coarse, row.err_linf);
        }
        report.rows.push_back(row);
    }
    return report;
}

template <int Dim>
double consistency_residual(const Problem<Dim>& problem, const SmoothReference<Dim>& phi,
                            std::shared_ptr<const Mesh<Dim>> mesh, double dt, int workers)
{
    if (!phi.value || !phi.time_derivative || !phi.gradient || !phi.hessian)
        throw std::invalid_argument("consistency_residual: test function needs value and derivatives");
    if (!(dt > 0.0)) throw std::invalid_argument("consistency_residual: time step must be positive");
    const int steps = std::max(1, static_cast<int>(std::llround(problem.horizon / dt)));
    dt = problem.horizon / steps;
    workers = resolve_workers(workers);

    const auto& interior = mesh->interior_nodes();
    const int slots = static_cast<int>(interior.size());
    const int p = problem.brownian_dim;
    ValueField<Dim> next{mesh, Eigen::VectorXd(mesh->num_vertices()), 0.0};
    double worst = 0.0;
    std::mutex worst_mutex;

    for (int k = 0; k < steps; ++k) {
        const double t_k = k * dt;
        next.time = t_k + dt;
        for (int i = 0; i < mesh->num_vertices(); ++i) next.values[i] = phi.value(next.time, mesh->vertex(i));

        parallel_for(slots, workers, [&](int begin, int end) {
            FootWorkspace<Dim> ws;
            double local = 0.0;
            for (int s = begin; s < end; ++s) {
                const Point<Dim>& x = mesh->vertex(interior[s]);
                const double value = phi.value(t_k, x);
                const double dtphi = phi.time_derivative(t_k, x);
                const Point<Dim> q = phi.gradient(t_k, x);
                const Eigen::Matrix<double, Dim, Dim> P = phi.hessian(t_k, x);
                for (const auto& a : problem.controls.points) {
                    double tau = 0.0;
                    const double s_fd = apply_scheme_at(problem, next, t_k, dt, x, a, {}, ws, &tau);
                    double trace = 0.0;
                    for (int l = 0; l < p; ++l) {
                        const Point<Dim> col = problem.diffusion(t_k, x, a, l);
                        trace += col.dot(P * col);
                    }
                    const double L = -0.5 * trace - problem.drift(t_k, x, a).dot(q) - problem.running_cost(t_k, x, a);
                    local = std::max(local, std::abs((value - s_fd) / tau - (-dtphi + L)));
                }
            }
            std::lock_guard lock(worst_mutex);
            worst = std::max(worst, local);
        });
    }
    return worst;
}

template double linf_error_t0<1>(const Solution<1>&, const std::function<double(const Point<1>&)>&);
template double linf_error_t0<2>(const Solution<2>&, const std::function<double(const Point<2>&)>&);
template ConvergenceReport refine_study<1>(const ProblemSpec<1>&, double, int, double, const SolveOptions&);
template ConvergenceReport refine_study<2>(const ProblemSpec<2>&, double, int, double, const SolveOptions&);
template double consistency_residual<1>(const Problem<1>&, const SmoothReference<1>&,
                                        std::shared_ptr<const Mesh<1>>, double, int);
template double consistency_residual<2>(const Problem<2>&, const SmoothReference<2>&,
                                        std::shared_ptr<const Mesh<2>>, double, int);

}  // namespace hjbsl
