#include "hjbsl/problems.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace hjbsl {

namespace {

using Params = std::map<std::string, double>;

double param(const Params& params, const std::string& key, double fallback)
{
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void check_keys(const std::string& name, const Params& params, std::set<std::string> allowed)
{
    for (const auto& [key, value] : params) {
        if (!allowed.count(key)) throw std::invalid_argument(name + ": unknown parameter '" + key + "'");
        if (!std::isfinite(value)) throw std::invalid_argument(name + ": parameter '" + key + "' is not finite");
    }
}

int count_param(const std::string& name, const Params& params, const std::string& key, int fallback)
{
    const double v = param(params, key, fallback);
    if (v < 1.0 || v != std::floor(v))
        throw std::invalid_argument(name + ": parameter '" + key + "' must be a positive integer");
    return static_cast<int>(v);
}

Point<2> zero2() { return Point<2>::Zero(); }

}  // namespace

ControlDescriptor box_controls(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::vector<int> counts)
{
    ControlDescriptor d;
    d.kind = ControlDescriptor::Kind::box;
    d.lo = lo;
    d.hi = hi;
    d.counts = std::move(counts);
    return d;
}

ControlDescriptor disk_controls(double radius, int rings, int angles)
{
    ControlDescriptor d;
    d.kind = ControlDescriptor::Kind::disk;
    d.radius = radius;
    d.rings = rings;
    d.angles = angles;
    return d;
}

ControlSet control_grid(const ControlDescriptor& descriptor)
{
    ControlSet set;
    set.descriptor = descriptor;
    switch (descriptor.kind) {
    case ControlDescriptor::Kind::box: {
        const auto m = static_cast<int>(descriptor.lo.size());
        if (m == 0 || descriptor.hi.size() != m || static_cast<int>(descriptor.counts.size()) != m)
            throw std::invalid_argument("control_grid: inconsistent box descriptor");
        for (int d = 0; d < m; ++d) {
            if (descriptor.counts[d] < 1) throw std::invalid_argument("control_grid: counts must be positive");
            if (!(descriptor.hi[d] >= descriptor.lo[d])) throw std::invalid_argument("control_grid: empty box");
        }
        std::vector<int> idx(m, 0);
        while (true) {
            Control a(m);
            for (int d = 0; d < m; ++d) {
                const int n = descriptor.counts[d];
                a[d] = n == 1 ? 0.5 * (descriptor.lo[d] + descriptor.hi[d])
                              : descriptor.lo[d] + (descriptor.hi[d] - descriptor.lo[d]) * idx[d] / (n - 1);
            }
            set.points.push_back(a);
            int d = 0;
            for (; d < m; ++d) {
                if (++idx[d] < descriptor.counts[d]) break;
                idx[d] = 0;
            }
            if (d == m) break;
        }
        break;
    }
    case ControlDescriptor::Kind::disk: {
        if (descriptor.rings < 1 || descriptor.angles < 1)
            throw std::invalid_argument("control_grid: counts must be positive");
        if (!(descriptor.radius > 0.0)) throw std::invalid_argument("control_grid: radius must be positive");
        set.points.push_back(Control::Zero(2));
        for (int j = 1; j <= descriptor.rings; ++j) {
            const double r = descriptor.radius * j / descriptor.rings;
            for (int k = 0; k < descriptor.angles; ++k) {
                const double theta = 2.0 * std::numbers::pi * k / descriptor.angles;
                Control a(2);
                a << r * std::cos(theta), r * std::sin(theta);
                // Snap round-off at multiples of pi/2.
                for (int d = 0; d < 2; ++d)
                    if (std::abs(a[d]) < 1e-15 * r) a[d] = 0.0;
                set.points.push_back(a);
            }
        }
        break;
    }
    case ControlDescriptor::Kind::list:
        throw std::invalid_argument("control_grid: list descriptors carry their own points");
    }
    return set;
}

double square_distance_profile(const Point<2>& x)
{
    return std::min({x[0], 1.0 - x[0], 2.0 * x[1], 2.0 * (1.0 - x[1])});
}

double disk_problem_cost(double t, const Point<2>& x)
{
    const double s1 = std::sin(x[0]), c1 = std::cos(x[0]);
    const double s2 = std::sin(x[1]), c2 = std::cos(x[1]);
    const double sp = std::sin(x[0] + x[1]), cp = std::cos(x[0] + x[1]);
    return (t - 0.5) * s1 * s2 +
           (t + 0.5) * (std::sqrt(c1 * c1 * s2 * s2 + s1 * s1 * c2 * c2) - 2.0 * sp * cp * c1 * c2);
}

std::vector<Point<2>> room_exit_starts()
{
    return {Point<2>(-0.1, -0.3), Point<2>(-0.1, 0.1), Point<2>(-0.1, 0.3),
            Point<2>(0.2, -0.3),  Point<2>(0.3, 0.2),  Point<2>(0.2, 0.3)};
}

ProblemSpec<1> builtin_test1(const Params& params)
{
    check_keys("test1", params, {"nu", "controls"});
    const double nu = param(params, "nu", 0.0);
    if (nu < 0.0) throw std::invalid_argument("test1: nu must be nonnegative");
    const int n = count_param("test1", params, "controls", 21);

    ProblemSpec<1> spec;
    spec.name = "test1";
    spec.params = {{"nu", nu}, {"controls", n}};
    auto& pb = spec.problem;
    pb.domain = Domain<1>::box(Point<1>(0.0), Point<1>(1.0));
    pb.horizon = 1.0;
    pb.brownian_dim = 1;
    pb.controls = control_grid(box_controls(Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0), {n}));
    const double sigma = std::sqrt(2.0 * nu);
    pb.drift = [](double, const Point<1>&, const Control& a) { return Point<1>(a[0]); };
    pb.diffusion = [sigma](double, const Point<1>&, const Control&, int) { return Point<1>(sigma); };
    pb.running_cost = [](double, const Point<1>&, const Control&) { return 0.0; };
    pb.boundary = [](double t, const Point<1>& x) { return x[0] < 0.5 ? 1.0 - t : 0.0; };
    pb.terminal = [](const Point<1>&) { return 0.0; };
    pb.autonomous = true;
    pb.stationary_cost = true;

    SmoothReference<1> probe;
    probe.value = [](double t, const Point<1>& x) { return (1.0 - t) * (1.0 - x[0] * x[0]); };
    probe.time_derivative = [](double, const Point<1>& x) { return x[0] * x[0] - 1.0; };
    probe.gradient = [](double t, const Point<1>& x) { return Point<1>(-2.0 * (1.0 - t) * x[0]); };
    probe.hessian = [](double t, const Point<1>&) { return Eigen::Matrix<double, 1, 1>(-2.0 * (1.0 - t)); };
    spec.probe = probe;

    if (nu == 0.0) spec.exact_t0 = [](const Point<1>& x) { return x[0] <= 0.0 ? 1.0 : 0.0; };
    spec.psi_sup = 1.0;
    spec.f_sup = 0.0;
    spec.mesh_for = [](double dx) {
        return std::make_shared<const Mesh<1>>(build_interval_mesh(0.0, 1.0, static_cast<int>(std::lround(1.0 / dx))));
    };
    spec.mesh_convention = "uniform interval, spacing dx";
    spec.boundary_label = [](const Point<1>& x) { return std::string(x[0] < 0.5 ? "left" : "right"); };
    return spec;
}

ProblemSpec<2> builtin_test2(const Params& params)
{
    check_keys("test2", params, {"rings", "angles"});
    const int rings = count_param("test2", params, "rings", 8);
    const int angles = count_param("test2", params, "angles", 24);

    ProblemSpec<2> spec;
    spec.name = "test2";
    spec.params = {{"rings", rings}, {"angles", angles}};
    auto& pb = spec.problem;
    pb.domain = Domain<2>::disk(Point<2>::Zero(), 1.0);
    pb.horizon = 1.0;
    pb.brownian_dim = 2;
    pb.controls = control_grid(disk_controls(1.0, rings, angles));
    pb.drift = [](double, const Point<2>&, const Control& a) { return Point<2>(a[0], a[1]); };
    pb.diffusion = [](double, const Point<2>& x, const Control&, int l) {
        if (l != 0) return zero2();
        return Point<2>(std::numbers::sqrt2 * std::sin(x[0] + x[1]), std::numbers::sqrt2 * std::cos(x[0] + x[1]));
    };
    pb.running_cost = [](double t, const Point<2>& x, const Control&) { return disk_problem_cost(t, x); };
    auto value = [](double t, const Point<2>& x) { return (t + 0.5) * std::sin(x[0]) * std::sin(x[1]); };
    pb.boundary = value;
    pb.terminal = [value](const Point<2>& x) { return value(1.0, x); };
    pb.autonomous = true;
    pb.stationary_cost = false;

    spec.exact_t0 = [value](const Point<2>& x) { return value(0.0, x); };
    SmoothReference<2> ref;
    ref.value = value;
    ref.time_derivative = [](double, const Point<2>& x) { return std::sin(x[0]) * std::sin(x[1]); };
    ref.gradient = [](double t, const Point<2>& x) {
        return Point<2>((t + 0.5) * std::cos(x[0]) * std::sin(x[1]), (t + 0.5) * std::sin(x[0]) * std::cos(x[1]));
    };
    ref.hessian = [](double t, const Point<2>& x) {
        const double s = std::sin(x[0]) * std::sin(x[1]);
        const double c = std::cos(x[0]) * std::cos(x[1]);
        Eigen::Matrix2d h;
        h << -s, c, c, -s;
        return Eigen::Matrix2d((t + 0.5) * h);
    };
    spec.probe = ref;

    // sin(x1) sin(x2) on the unit disk peaks at x1 = x2 = 1/sqrt(2).
    const double peak = std::sin(std::numbers::sqrt2 / 2.0);
    spec.psi_sup = 1.5 * peak * peak;
    // f is affine in t: its extremes sit at t = 0 or t = 1.
    double fmax = 0.0;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const Point<2> x(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n);
            if (x.squaredNorm() > 1.0) continue;
            fmax = std::max({fmax, std::abs(disk_problem_cost(0.0, x)), std::abs(disk_problem_cost(1.0, x))});
        }
    }
    spec.f_sup = fmax * (1.0 + 1e-3);
    spec.mesh_for = [](double dx) { return std::make_shared<const Mesh<2>>(build_disk_mesh(1.0, dx)); };
    spec.mesh_convention = "polar disk mesh, maximum element diameter dx";
    return spec;
}

ProblemSpec<2> builtin_test3(const Params& params)
{
    check_keys("test3", params, {"controls"});
    const int n = count_param("test3", params, "controls", 21);

    ProblemSpec<2> spec;
    spec.name = "test3";
    spec.params = {{"controls", n}};
    auto& pb = spec.problem;
    pb.domain = Domain<2>::box(Point<2>(0.0, 0.0), Point<2>(1.0, 1.0));
    pb.horizon = 1.5;
    pb.brownian_dim = 1;
    pb.controls =
        control_grid(box_controls(Eigen::VectorXd::Constant(2, -2.0), Eigen::VectorXd::Constant(2, 2.0), {n, n}));
    pb.drift = [](double, const Point<2>&, const Control& a) { return Point<2>(a[0], a[1]); };
    pb.diffusion = [](double, const Point<2>&, const Control&, int) { return zero2(); };
    pb.running_cost = [](double, const Point<2>&, const Control& a) {
        return 1.0 + 0.25 * a[0] * a[0] + a[1] * a[1];
    };
    pb.boundary = [](double, const Point<2>&) { return 0.0; };
    pb.terminal = [](const Point<2>& x) { return -2.0 * square_distance_profile(x); };
    pb.autonomous = true;
    pb.stationary_cost = true;

    spec.exact_t0 = [](const Point<2>& x) { return square_distance_profile(x); };
    spec.psi_sup = 1.0;
    spec.f_sup = 6.0;
    spec.mesh_for = [](double dx) {
        const int n = static_cast<int>(std::lround(1.0 / dx));
        return std::make_shared<const Mesh<2>>(build_rect_grid(Point<2>(0, 0), Point<2>(1, 1), n, n));
    };
    spec.mesh_convention = "uniform grid on the unit square, spacing dx";
    return spec;
}

ProblemSpec<2> builtin_test4(const Params& params)
{
    check_keys("test4", params, {"rings", "angles", "sigma"});
    const int rings = count_param("test4", params, "rings", 8);
    const int angles = count_param("test4", params, "angles", 24);
    const double scale = param(params, "sigma", 1.0);
    if (scale < 0.0) throw std::invalid_argument("test4: sigma scale must be nonnegative");

    ProblemSpec<2> spec;
    spec.name = "test4";
    spec.params = {{"rings", rings}, {"angles", angles}, {"sigma", scale}};
    auto& pb = spec.problem;
    pb.domain = Domain<2>::box(Point<2>(-1.0, -0.5), Point<2>(1.0, 0.5));
    pb.horizon = 5.0;
    pb.brownian_dim = 2;
    pb.controls = control_grid(disk_controls(1.0, rings, angles));
    pb.drift = [](double, const Point<2>&, const Control& a) { return Point<2>(a[0], a[1]); };
    pb.diffusion = [scale](double, const Point<2>& x, const Control&, int l) {
        if (l != 0) return zero2();
        const double s = 10.0 * std::max(0.16 - x.squaredNorm(), 0.0);
        return Point<2>(scale * s, 0.0);
    };
    pb.running_cost = [](double, const Point<2>&, const Control& a) { return 0.5 * a.squaredNorm() + 40.0; };

    const double tol = 1e-9;
    auto label = [tol](const Point<2>& x) -> std::string {
        if (std::abs(x[1]) <= 0.2 + tol) {
            if (std::abs(x[0] + 1.0) <= tol) return "gamma1";
            if (std::abs(x[0] - 1.0) <= tol) return "gamma2";
        }
        return "wall";
    };
    pb.boundary = [label](double, const Point<2>& x) {
        const auto l = label(x);
        return l == "gamma1" ? 0.0 : l == "gamma2" ? 0.2 : 100.0;
    };
    pb.terminal = [](const Point<2>&) { return 0.0; };
    pb.autonomous = true;
    pb.stationary_cost = true;

    spec.psi_sup = 100.0;
    spec.f_sup = 40.5;
    spec.theory_covered = false;
    spec.mesh_for = [](double dx) {
        // dx is the cell diagonal: sqrt(2)/50 gives 100 x 50 square cells.
        const double spacing = dx / std::numbers::sqrt2;
        const int nx = static_cast<int>(std::lround(2.0 / spacing));
        const int ny = static_cast<int>(std::lround(1.0 / spacing));
        return std::make_shared<const Mesh<2>>(build_rect_grid(Point<2>(-1.0, -0.5), Point<2>(1.0, 0.5), nx, ny));
    };
    spec.mesh_convention = "uniform grid on the room, cell diagonal dx";
    spec.boundary_label = label;
    return spec;
}

AnyProblemSpec builtin(const std::string& name, const Params& params)
{
    if (name == "test1") return builtin_test1(params);
    if (name == "test2") return builtin_test2(params);
    if (name == "test3") return builtin_test3(params);
    if (name == "test4") return builtin_test4(params);
    throw std::invalid_argument("unknown problem '" + name + "' (expected test1, test2, test3 or test4)");
}

}  // namespace hjbsl
