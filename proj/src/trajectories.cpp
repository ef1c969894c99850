#include "hjbsl/trajectories.hpp"
#include "hjbsl/parallel.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hjbsl {

Eigen::VectorXd project_unit_ball(const Eigen::VectorXd& z)
{
    const double n = z.norm();
    return n <= 1.0 ? z : Eigen::VectorXd(z / n);
}

double NormalGenerator::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NormalGenerator::operator()()
{
    ++draws_;
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

namespace {

// Central differences where the stencil fits in the closure, one-sided
// differences next to the boundary, and a shrinking step as a last resort.
template <int Dim>
Point<Dim> feedback_gradient(const Solution<Dim>& solution, const ValueField<Dim>& field, const Point<Dim>& y,
                             double h)
{
    const auto& domain = solution.mesh->domain();
    const double tol = domain.boundary_tolerance();
    auto fits = [&](const Point<Dim>& z) { return domain.signed_distance(z) <= tol; };
    const double center = interpolate(field, y);
    Point<Dim> g;
    for (int d = 0; d < Dim; ++d) {
        double step = h;
        for (int attempt = 0;; ++attempt) {
            Point<Dim> xp = y, xm = y;
            xp[d] += step;
            xm[d] -= step;
            const bool up = fits(xp), down = fits(xm);
            if (up && down) {
                g[d] = (interpolate(field, xp) - interpolate(field, xm)) / (2.0 * step);
                break;
            }
            if (up) {
                g[d] = (interpolate(field, xp) - center) / step;
                break;
            }
            if (down) {
                g[d] = (center - interpolate(field, xm)) / step;
                break;
            }
            if (attempt == 40) throw std::domain_error("simulate: no difference stencil fits in the domain");
            step *= 0.5;
        }
    }
    return g;
}

template <int Dim>
Control argmin_feedback(const Solution<Dim>& solution, const Problem<Dim>& problem, int k, const Point<Dim>& y,
                        FootWorkspace<Dim>& ws)
{
    const auto& next = solution.level(std::min(k + 1, solution.steps));
    double best = std::numeric_limits<double>::infinity();
    const Control* arg = &problem.controls.points.front();
    for (const auto& a : problem.controls.points) {
        const double v = apply_scheme_at(problem, next, solution.time(k), solution.dt, y, a, {}, ws);
        if (v < best) {
            best = v;
            arg = &a;
        }
    }
    return *arg;
}

}  // namespace

template <int Dim>
TrajectoryRecord<Dim> simulate(const Solution<Dim>& solution, const ProblemSpec<Dim>& spec, const Point<Dim>& x0,
                               std::uint64_t seed, const TrajectoryOptions& options)
{
    const auto& problem = spec.problem;
    const auto& domain = problem.domain;
    if (!domain.inside(x0)) throw std::invalid_argument("simulate: starting point is not inside the domain");
    const double h = options.substep > 0.0 ? options.substep : 0.5 * solution.dt;
    const double fd_step = options.gradient_step > 0.0 ? options.gradient_step : solution.mesh->mesh_size();
    const int nsteps = std::max(1, static_cast<int>(std::llround(problem.horizon / h)));

    TrajectoryRecord<Dim> rec;
    rec.start = x0;
    rec.seed = seed;
    rec.step = h;
    rec.times.push_back(0.0);
    rec.positions.push_back(x0);

    NormalGenerator normal(seed);
    FootWorkspace<Dim> ws;
    Point<Dim> y = x0;
    for (int n = 0; n < nsteps; ++n) {
        const double t = n * h;
        const int k = solution.level_index(t);
        Control a;
        if (options.feedback == Feedback::gradient)
            a = project_unit_ball(-feedback_gradient(solution, solution.level(k), y, fd_step));
        else
            a = argmin_feedback(solution, problem, k, y, ws);

        Point<Dim> incr = h * problem.drift(t, y, a);
        for (int l = 0; l < problem.brownian_dim; ++l) {
            const Point<Dim> col = problem.diffusion(t, y, a, l);
            if (col.isZero(0.0)) continue;
            incr += std::sqrt(h) * normal() * col;
        }
        const Point<Dim> moved = y + incr;
        if (domain.inside(moved)) {
            rec.running_cost += h * problem.running_cost(t, y, a);
            y = moved;
            rec.times.push_back((n + 1) * h);
            rec.positions.push_back(y);
            continue;
        }

        // Segment y -> moved crosses the boundary at fraction s.
        const auto hit = first_exit(domain, y, Point<Dim>::Zero().eval(), incr);
        const double s = hit ? hit->s : 1.0;
        const Point<Dim> exit = hit ? hit->point : domain.project_boundary(moved);
        rec.running_cost += s * h * problem.running_cost(t, y, a);
        rec.status = TrajectoryStatus::exited;
        rec.exit_time = t + s * h;
        rec.exit_point = exit;
        rec.exit_label = spec.boundary_label ? spec.boundary_label(exit) : std::string("boundary");
        rec.terminal_cost = problem.psi(rec.exit_time, exit);
        rec.times.push_back(rec.exit_time);
        rec.positions.push_back(exit);
        rec.normal_draws = normal.draws();
        return rec;
    }
    rec.status = TrajectoryStatus::horizon;
    rec.exit_time = problem.horizon;
    rec.exit_point = y;
    rec.terminal_cost = problem.terminal(y);
    rec.normal_draws = normal.draws();
    return rec;
}

template <int Dim>
std::vector<TrajectoryRecord<Dim>> simulate_batch(const Solution<Dim>& solution, const ProblemSpec<Dim>& spec,
                                                  const std::vector<Point<Dim>>& starts,
                                                  const std::vector<std::uint64_t>& seeds,
                                                  const TrajectoryOptions& options, int workers)
{
    const int count = static_cast<int>(starts.size() * seeds.size());
    std::vector<TrajectoryRecord<Dim>> out(count);
    parallel_for(count, resolve_workers(workers), [&](int begin, int end) {
        for (int i = begin; i < end; ++i)
            out[i] = simulate(solution, spec, starts[i / seeds.size()], seeds[i % seeds.size()], options);
    });
    return out;
}

template <int Dim>
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<Dim>& record)
{
    std::ostringstream buf;
    buf << std::setprecision(17) << 't';
    for (int d = 0; d < Dim; ++d) buf << ",x" << d + 1;
    buf << '\n';
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        buf << record.times[i];
        for (int d = 0; d < Dim; ++d) buf << ',' << record.positions[i][d];
        buf << '\n';
    }
    buf << "# status=" << (record.status == TrajectoryStatus::exited ? "exited" : "horizon")
        << " time=" << record.exit_time;
    if (record.status == TrajectoryStatus::exited) buf << " label=" << record.exit_label;
    buf << " running_cost=" << record.running_cost << " terminal_cost=" << record.terminal_cost << '\n';
    out << buf.str();
}

template <int Dim>
nlohmann::json batch_summary(const std::vector<TrajectoryRecord<Dim>>& records)
{
    auto to_vec = [](const Point<Dim>& p) { return std::vector<double>(p.data(), p.data() + Dim); };
    nlohmann::json j;
    auto& list = j["trajectories"] = nlohmann::json::array();
    std::map<std::string, int> exits;
    int horizon = 0;
    for (const auto& r : records) {
        const bool exited = r.status == TrajectoryStatus::exited;
        list.push_back({{"start", to_vec(r.start)},
                        {"seed", r.seed},
                        {"step", r.step},
                        {"status", exited ? "exited" : "horizon"},
                        {"time", r.exit_time},
                        {"point", to_vec(r.exit_point)},
                        {"label", exited ? nlohmann::json(r.exit_label) : nlohmann::json(nullptr)},
                        {"running_cost", r.running_cost},
                        {"terminal_cost", r.terminal_cost},
                        {"samples", r.times.size()}});
        if (exited)
            ++exits[r.exit_label];
        else
            ++horizon;
    }
    j["exits"] = exits;
    j["reached_horizon"] = horizon;
    j["count"] = records.size();
    return j;
}

#define HJBSL_INSTANTIATE(D)                                                                                      \
    template TrajectoryRecord<D> simulate<D>(const Solution<D>&, const ProblemSpec<D>&, const Point<D>&,          \
                                             std::uint64_t, const TrajectoryOptions&);                            \
    template std::vector<TrajectoryRecord<D>> simulate_batch<D>(const Solution<D>&, const ProblemSpec<D>&,        \
                                                                const std::vector<Point<D>>&,                     \
                                                                const std::vector<std::uint64_t>&,                \
                                                                const TrajectoryOptions&, int);                   \
    template void write_trajectory_csv<D>(std::ostream&, const TrajectoryRecord<D>&);                             \
    template nlohmann::json batch_summary<D>(const std::vector<TrajectoryRecord<D>>&);

HJBSL_INSTANTIATE(1)
HJBSL_INSTANTIATE(2)

}  // namespace hjbsl
