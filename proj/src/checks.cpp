#include "hjbsl/checks.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace hjbsl {

namespace {

// Platform-independent uniforms on top of the standard engine.
struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int index(int n) { return static_cast<int>(engine() % static_cast<std::uint64_t>(n)); }
};

template <int Dim>
Point<Dim> random_point(const Domain<Dim>& domain, Rng& rng)
{
    const auto [lo, hi] = domain.bounds();
    while (true) {
        Point<Dim> x;
        for (int d = 0; d < Dim; ++d) x[d] = rng.uniform(lo[d], hi[d]);
        if (domain.signed_distance(x) < -domain.boundary_tolerance()) return x;
    }
}

std::string sci(double v)
{
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << v;
    return out.str();
}

template <int Dim>
double check_dx(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    return options.dx > 0.0 ? options.dx : default_check_dx(spec.name);
}

template <int Dim>
int steps_for(const ProblemSpec<Dim>& spec, double dt)
{
    return std::max(1, static_cast<int>(std::llround(spec.problem.horizon / dt)));
}

}  // namespace

double default_check_dx(const std::string& problem)
{
    if (problem == "test1") return 0.02;
    if (problem == "test2") return 0.125;
    if (problem == "test3") return 0.04;
    if (problem == "test4") return std::numbers::sqrt2 / 25.0;
    return 0.1;
}

ControlSet coarse_controls(const ControlSet& controls)
{
    const auto& d = controls.descriptor;
    switch (d.kind) {
    case ControlDescriptor::Kind::box:
        return control_grid(box_controls(d.lo, d.hi, std::vector<int>(d.counts.size(), 3)));
    case ControlDescriptor::Kind::disk:
        return control_grid(disk_controls(d.radius, 1, 8));
    case ControlDescriptor::Kind::list:
        break;
    }
    ControlSet out = controls;
    if (out.points.size() > 9) out.points.resize(9);
    return out;
}

template <int Dim>
PropertyResult check_weight_identities(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    PropertyResult res{"weight identities", true, "", {}};
    Rng rng(options.seed);
    int failures = 0;
    std::string first;
    auto fail = [&](const std::string& what) {
        if (failures++ == 0) first = what;
    };

    // Column weights for random exit fractions.
    for (int n = 0; n < options.weight_samples; ++n) {
        ColumnFoot<Dim> foot;
        foot.lambda_plus = rng.uniform() < 0.25 ? 1.0 : 1.0 - rng.uniform();
        foot.lambda_minus = rng.uniform() < 0.25 ? 1.0 : 1.0 - rng.uniform();
        const double dt = std::pow(10.0, rng.uniform(-3.0, 0.0));
        set_column_weights(foot, dt);
        const double rp = std::sqrt(foot.lambda_plus), rm = std::sqrt(foot.lambda_minus);
        if (std::abs(foot.gamma_plus + foot.gamma_minus - 1.0) > 1e-14) fail("gamma+ + gamma- != 1");
        if (std::abs(foot.gamma_plus - rm / (rp + rm)) > 1e-14) fail("gamma+ formula");
        if (std::abs(foot.tau - dt * std::sqrt(foot.lambda_plus * foot.lambda_minus)) > 1e-14 * dt)
            fail("tau_l formula");
        if (!(foot.tau > 0.0 && foot.tau <= dt)) fail("tau_l outside (0, dt]");
    }

    // Column combination against the product form.
    for (int n = 0; n < options.weight_samples; ++n) {
        const int p = 1 + rng.index(4);
        const double dt = 1.0;
        std::vector<double> taus(p);
        for (auto& t : taus) t = dt * std::pow(10.0, -6.0 * rng.uniform());
        const auto comb = combine_columns(taus);
        double sum = 0.0;
        for (int l = 0; l < p; ++l) {
            sum += comb.pi[l];
            if (comb.pi[l] < 0.0) fail("negative pi");
            if (std::abs(comb.pi[l] * taus[l] - comb.tau / p) > 1e-13 * comb.tau / p) fail("pi_l tau_l != tau/p");
        }
        if (std::abs(sum - 1.0) > 1e-14) fail("sum pi != 1");
        if (!(comb.tau > 0.0 && comb.tau <= dt * (1.0 + 1e-15))) fail("tau outside (0, dt]");
        if (p >= 2) {
            std::vector<double> prod_except(p, 1.0);
            double prod_all = 1.0;
            for (int l = 0; l < p; ++l) {
                prod_all *= taus[l];
                for (int j = 0; j < p; ++j)
                    if (j != l) prod_except[l] *= taus[j];
            }
            double denom = 0.0;
            for (double v : prod_except) denom += v;
            if (std::abs(p * prod_all / denom - comb.tau) > 1e-12 * comb.tau) fail("tau differs from product form");
            for (int l = 0; l < p; ++l)
                if (std::abs(prod_except[l] / denom - comb.pi[l]) > 1e-12 * comb.pi[l])
                    fail("pi differs from product form");
        }
    }

    // Feet of the problem itself at random points and controls.
    const auto& pb = spec.problem;
    const double dt = options.cfl * check_dx(spec, options);
    const double tol = pb.domain.boundary_tolerance();
    const int feet = std::max(1, options.weight_samples / 10);
    int exits = 0;
    for (int n = 0; n < feet; ++n) {
        const Point<Dim> x = random_point(pb.domain, rng);
        const Control& a = pb.controls.points[rng.index(pb.controls.size())];
        const double t = rng.uniform(0.0, pb.horizon - dt);
        const auto foot = truncated_foot(pb, t, dt, x, a);
        double sum = 0.0;
        for (int l = 0; l < pb.brownian_dim; ++l) {
            const auto& c = foot.columns[l];
            sum += foot.pi[l];
            if (!(c.lambda_plus > 0.0 && c.lambda_plus <= 1.0 && c.lambda_minus > 0.0 && c.lambda_minus <= 1.0))
                fail("lambda outside (0, 1]");
            if (std::abs(c.gamma_plus + c.gamma_minus - 1.0) > 1e-14) fail("foot gamma sum");
            if (!(c.tau > 0.0 && c.tau <= dt)) fail("foot tau_l outside (0, dt]");
            if (std::abs(foot.pi[l] * c.tau - foot.tau / pb.brownian_dim) > 1e-13 * foot.tau)
                fail("foot pi_l tau_l != tau/p");
            const Point<Dim> drift_step = dt * pb.drift(t, x, a);
            const Point<Dim> diff = std::sqrt(pb.brownian_dim * dt) * pb.diffusion(t, x, a, l);
            auto check_branch = [&](double lambda, const Point<Dim>& y, const Point<Dim>& free) {
                if (lambda < 1.0) {
                    ++exits;
                    if (std::abs(pb.domain.signed_distance(y)) > tol) fail("truncated foot off the boundary");
                } else if (y != free) {
                    fail("untruncated foot differs from x + dt b +- sqrt(p dt) sigma");
                }
            };
            check_branch(c.lambda_plus, c.foot_plus, (x + drift_step + diff).eval());
            check_branch(c.lambda_minus, c.foot_minus, (x + drift_step + (-diff)).eval());
        }
        if (std::abs(sum - 1.0) > 1e-14) fail("foot sum pi != 1");
        if (!(foot.tau > 0.0 && foot.tau <= dt * (1.0 + 1e-15))) fail("foot tau outside (0, dt]");
    }

    res.passed = failures == 0;
    res.detail = std::to_string(2 * options.weight_samples + feet) + " configurations, " + std::to_string(exits) +
                 " truncated branches" + (failures ? ", " + std::to_string(failures) + " violations (" + first + ")" : "");
    return res;
}

template <int Dim>
PropertyResult check_monotonicity(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    PropertyResult res{"monotonicity", true, "", {}};
    const auto& pb = spec.problem;
    const double dx = check_dx(spec, options);
    const auto mesh = spec.mesh_for(dx);
    const double dt = options.cfl * dx;
    const int steps = steps_for(spec, dt);
    const double dt_used = pb.horizon / steps;
    const auto& interior = mesh->interior_nodes();
    Rng rng(options.seed + 1);

    ValueField<Dim> lo{mesh, Eigen::VectorXd(mesh->num_vertices()), 0.0};
    ValueField<Dim> hi = lo;
    int violations = 0;
    double worst = 0.0;
    for (int n = 0; n < options.samples; ++n) {
        for (int i = 0; i < mesh->num_vertices(); ++i) {
            lo.values[i] = rng.uniform(-1.0, 1.0);
            // Raise about half of the nodes.
            hi.values[i] = lo.values[i] + (rng.uniform() < 0.5 ? rng.uniform() : 0.0);
        }
        const int node = interior[rng.index(static_cast<int>(interior.size()))];
        const Control& a = pb.controls.points[rng.index(pb.controls.size())];
        const double t_k = rng.index(steps) * dt_used;
        const double s_lo = apply_scheme(pb, lo, t_k, dt_used, node, a, options.scheme);
        const double s_hi = apply_scheme(pb, hi, t_k, dt_used, node, a, options.scheme);
        const double gap = s_lo - s_hi;
        if (gap > 1e-13 * (1.0 + std::abs(s_lo))) {
            ++violations;
            worst = std::max(worst, gap);
        }
    }
    res.passed = violations == 0;
    res.detail = std::to_string(options.samples) + " field pairs";
    if (violations) res.detail += ", " + std::to_string(violations) + " violations, worst " + sci(worst);
    return res;
}

template <int Dim>
PropertyResult check_constant_addition(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    PropertyResult res{"constant addition", true, "", {}};
    const auto& pb = spec.problem;
    const double dx = check_dx(spec, options);
    const auto mesh = spec.mesh_for(dx);
    const double dt = options.cfl * dx;
    const int steps = steps_for(spec, dt);
    const double dt_used = pb.horizon / steps;
    const auto& interior = mesh->interior_nodes();
    Rng rng(options.seed + 2);

    ValueField<Dim> phi{mesh, Eigen::VectorXd(mesh->num_vertices()), 0.0};
    int free_count = 0, exit_count = 0, violations = 0;
    double worst = 0.0;
    FootWorkspace<Dim> ws;
    for (int n = 0; n < options.samples; ++n) {
        for (int i = 0; i < mesh->num_vertices(); ++i) phi.values[i] = rng.uniform(-1.0, 1.0);
        const int node = interior[rng.index(static_cast<int>(interior.size()))];
        const Control& a = pb.controls.points[rng.index(pb.controls.size())];
        const double t_k = rng.index(steps) * dt_used;
        const double c = rng.uniform(-1.0, 1.0);
        ValueField<Dim> shifted = phi;
        shifted.values.array() += c;
        const Point<Dim>& x = mesh->vertex(node);
        const double base = apply_scheme_at(pb, phi, t_k, dt_used, x, a, options.scheme, ws);
        const bool exits = ws.compiled.any_exit;
        const double moved = apply_scheme_at(pb, shifted, t_k, dt_used, x, a, options.scheme, ws);
        const double excess = moved - (base + c);
        double bad = 0.0;
        if (!exits) {
            ++free_count;
            bad = std::abs(excess) > 1e-12 ? std::abs(excess) : 0.0;
        } else {
            ++exit_count;
            const double slack = 1e-13 * (1.0 + std::abs(base) + std::abs(c));
            if (c >= 0.0 && excess > slack) bad = excess;
            if (c < 0.0 && excess < -slack) bad = -excess;
        }
        if (bad > 0.0) {
            ++violations;
            worst = std::max(worst, bad);
        }
    }
    res.passed = violations == 0;
    res.detail = std::to_string(free_count) + " untruncated (equality), " + std::to_string(exit_count) +
                 " truncated (inequality)";
    if (violations) res.detail += ", " + std::to_string(violations) + " violations, worst " + sci(worst);
    return res;
}

template <int Dim>
PropertyResult check_stability(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    PropertyResult res{"stability", true, "", {}};
    const double bound = spec.psi_sup + spec.problem.horizon * spec.f_sup;
    std::ostringstream detail;
    detail << "bound " << bound;
    const double dx0 = check_dx(spec, options);
    for (double dx : {dx0, dx0 / 2.0}) {
        const auto mesh = spec.mesh_for(dx);
        SolveOptions so;
        so.workers = options.workers;
        so.keep_all_levels = true;
        so.minimize.scheme = options.scheme;
        const auto sol = solve(spec.problem, mesh, options.cfl * dx, so);
        bool boundary_ok = true;
        for (const auto& [k, field] : sol.levels) {
            for (int i = 0; i < mesh->num_vertices(); ++i) {
                const Point<Dim>& x = mesh->vertex(i);
                if (k == sol.steps && field.values[i] != spec.problem.terminal(x)) boundary_ok = false;
                if (k < sol.steps && mesh->is_boundary(i) && field.values[i] != spec.problem.boundary(sol.time(k), x))
                    boundary_ok = false;
            }
        }
        const bool ok = sol.max_abs <= bound * (1.0 + 1e-12) && boundary_ok;
        res.passed = res.passed && ok;
        res.series.push_back(sol.max_abs);
        detail << "; dx=" << dx << " max|V_k|=" << sol.max_abs << (boundary_ok ? "" : " boundary data not exact");
    }
    res.detail = detail.str();
    return res;
}

template <int Dim>
PropertyResult check_unconstrained_reduction(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    PropertyResult res{"unconstrained reduction", true, "", {}};
    const double dx = check_dx(spec, options);
    const double dt = options.cfl * dx;
    Problem<Dim> pb = spec.problem;
    const auto [lo, hi] = pb.domain.bounds();
    const double margin = 2.0 * pb.domain.diameter() + 1.0;
    const Point<Dim> big_lo = lo.array() - margin;
    const Point<Dim> big_hi = hi.array() + margin;
    pb.domain = Domain<Dim>::box(big_lo, big_hi);
    std::shared_ptr<const Mesh<Dim>> mesh;
    if constexpr (Dim == 1) {
        const int n = static_cast<int>(std::ceil((big_hi[0] - big_lo[0]) / dx));
        mesh = std::make_shared<const Mesh<1>>(build_interval_mesh(big_lo[0], big_hi[0], n));
    } else {
        const int nx = static_cast<int>(std::ceil((big_hi[0] - big_lo[0]) / dx));
        const int ny = static_cast<int>(std::ceil((big_hi[1] - big_lo[1]) / dx));
        mesh = std::make_shared<const Mesh<2>>(build_rect_grid(big_lo, big_hi, nx, ny));
    }

    Rng rng(options.seed + 3);
    ValueField<Dim> phi{mesh, Eigen::VectorXd(mesh->num_vertices()), 0.0};
    for (int i = 0; i < mesh->num_vertices(); ++i) phi.values[i] = rng.uniform(-1.0, 1.0);
    FootWorkspace<Dim> ws;
    double worst = 0.0;
    int truncated = 0;
    const int p = pb.brownian_dim;
    for (int n = 0; n < options.samples; ++n) {
        const Point<Dim> x = random_point(spec.problem.domain, rng);
        const Control& a = pb.controls.points[rng.index(pb.controls.size())];
        const double t = rng.uniform(0.0, pb.horizon - dt);
        const double s_fd = apply_scheme_at(pb, phi, t, dt, x, a, options.scheme, ws);
        if (ws.compiled.any_exit) ++truncated;
        const Point<Dim> drift_step = dt * pb.drift(t, x, a);
        double classical = 0.0;
        for (int l = 0; l < p; ++l) {
            const Point<Dim> diff = std::sqrt(p * dt) * pb.diffusion(t, x, a, l);
            classical += interpolate(phi, (x + drift_step + diff).eval()) + interpolate(phi, (x + drift_step - diff).eval());
        }
        classical = classical / (2.0 * p) + dt * pb.running_cost(t, x, a);
        worst = std::max(worst, std::abs(s_fd - classical));
    }
    res.passed = worst <= 1e-13 && truncated == 0;
    res.detail = std::to_string(options.samples) + " samples, max |S - S_classical| = " + sci(worst);
    if (truncated) res.detail += ", " + std::to_string(truncated) + " unexpected exits";
    return res;
}

template <int Dim>
std::vector<PropertyResult> check_consistency(const ProblemSpec<Dim>& spec, const CheckOptions& options)
{
    std::vector<PropertyResult> out;
    if (!spec.probe) return out;
    Problem<Dim> pb = spec.problem;
    pb.controls = coarse_controls(pb.controls);
    const double dx0 = options.consistency_dx0 > 0.0 ? options.consistency_dx0
                       : spec.name == "test1"     ? 0.025
                                                  : 0.25;
    const int levels = std::max(2, options.consistency_levels);

    PropertyResult decay{"consistency decay (dt = dx)", true, "", {}};
    double dx = dx0;
    for (int l = 0; l < levels; ++l, dx /= 2.0)
        decay.series.push_back(consistency_residual(pb, *spec.probe, spec.mesh_for(dx), dx, options.workers));
    std::ostringstream d1;
    for (std::size_t i = 0; i < decay.series.size(); ++i) {
        d1 << (i ? " > " : "residuals ") << sci(decay.series[i]);
        if (i && !(decay.series[i] < decay.series[i - 1])) decay.passed = false;
    }
    decay.detail = d1.str();
    out.push_back(decay);

    // Fixed dx, dt shrinking by 4 per step: the dx^2/dt interpolation term
    // takes over and the last two refinements must not decrease.
    PropertyResult negative{"consistency negative control (dx fixed, dt -> 0)", true, "", {}};
    const auto mesh = spec.mesh_for(dx0);
    double dt = dx0;
    for (int l = 0; l <= levels; ++l, dt /= 4.0)
        negative.series.push_back(consistency_residual(pb, *spec.probe, mesh, dt, options.workers));
    std::ostringstream d2;
    for (std::size_t i = 0; i < negative.series.size(); ++i) d2 << (i ? ", " : "residuals ") << sci(negative.series[i]);
    const auto& s = negative.series;
    for (std::size_t i = s.size() - 2; i < s.size(); ++i)
        if (s[i] < s[i - 1]) negative.passed = false;
    negative.detail = d2.str();
    out.push_back(negative);
    return out;
}

std::vector<PropertyResult> run_property_suite(const AnyProblemSpec& any, const CheckOptions& options)
{
    return std::visit(
        [&](const auto& spec) {
            std::vector<PropertyResult> out;
            out.push_back(check_weight_identities(spec, options));
            out.push_back(check_monotonicity(spec, options));
            out.push_back(check_constant_addition(spec, options));
            out.push_back(check_stability(spec, options));
            out.push_back(check_unconstrained_reduction(spec, options));
            for (auto& r : check_consistency(spec, options)) out.push_back(std::move(r));
            return out;
        },
        any);
}

#define HJBSL_INSTANTIATE(D)                                                                                \
    template PropertyResult check_weight_identities<D>(const ProblemSpec<D>&, const CheckOptions&);         \
    template PropertyResult check_monotonicity<D>(const ProblemSpec<D>&, const CheckOptions&);              \
    template PropertyResult check_constant_addition<D>(const ProblemSpec<D>&, const CheckOptions&);         \
    template PropertyResult check_stability<D>(const ProblemSpec<D>&, const CheckOptions&);                 \
    template PropertyResult check_unconstrained_reduction<D>(const ProblemSpec<D>&, const CheckOptions&);   \
    template std::vector<PropertyResult> check_consistency<D>(const ProblemSpec<D>&, const CheckOptions&);

HJBSL_INSTANTIATE(1)
HJBSL_INSTANTIATE(2)

}  // namespace hjbsl
