#pragma once

#include "hjbsl/operator.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace hjbsl {

/// Smooth space-time function with analytic derivatives, used as a
/// consistency test function.
template <int Dim>
struct SmoothReference {
    std::function<double(double, const Point<Dim>&)> value;
    std::function<double(double, const Point<Dim>&)> time_derivative;
    std::function<Point<Dim>(double, const Point<Dim>&)> gradient;
    std::function<Eigen::Matrix<double, Dim, Dim>(double, const Point<Dim>&)> hessian;
};

template <int Dim>
struct ProblemSpec {
    std::string name;
    std::map<std::string, double> params;
    Problem<Dim> problem;
    /// Exact (or reference) value function at t = 0; empty when unknown.
    std::function<double(const Point<Dim>&)> exact_t0;
    /// Smooth function equal to Psi on the parabolic boundary, with
    /// derivatives; the exact solution when that is smooth.
    std::optional<SmoothReference<Dim>> probe;
    /// Bounds on |Psi| over the parabolic boundary and |f| over Q_T x A.
    double psi_sup = 0.0;
    double f_sup = 0.0;
    /// False when the data violate the convergence theory (discontinuous Psi).
    bool theory_covered = true;
    /// Mesh for a nominal resolution dx; `mesh_convention` says what dx means.
    std::function<std::shared_ptr<const Mesh<Dim>>(double)> mesh_for;
    std::string mesh_convention;
    /// Name of the boundary piece containing a boundary point (empty if the
    /// problem has no named pieces).
    std::function<std::string(const Point<Dim>&)> boundary_label;
};

using AnyProblemSpec = std::variant<ProblemSpec<1>, ProblemSpec<2>>;

/// Recognised parameters:
///   test1: nu (>= 0), controls
///   test2: rings, angles
///   test3: controls
///   test4: rings, angles, sigma (diffusion scale, 0 switches noise off)
/// `controls` is the per-dimension lattice count of a box control set;
/// `rings` and `angles` discretise a disk control set.
AnyProblemSpec builtin(const std::string& name, const std::map<std::string, double>& params = {});

ProblemSpec<1> builtin_test1(const std::map<std::string, double>& params = {});
ProblemSpec<2> builtin_test2(const std::map<std::string, double>& params = {});
ProblemSpec<2> builtin_test3(const std::map<std::string, double>& params = {});
ProblemSpec<2> builtin_test4(const std::map<std::string, double>& params = {});

/// Tensor lattice on a box (counts per dimension) or centre plus rings on a
/// disk.
ControlSet control_grid(const ControlDescriptor& descriptor);
ControlDescriptor box_controls(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::vector<int> counts);
ControlDescriptor disk_controls(double radius, int rings, int angles);

/// Starting points of the exit-problem trajectories.
std::vector<Point<2>> room_exit_starts();

/// psi(x) = min(x1, 1 - x1, 2 x2, 2 (1 - x2)).
double square_distance_profile(const Point<2>& x);

/// Running cost of the smooth disk problem.
double disk_problem_cost(double t, const Point<2>& x);

}  // namespace hjbsl
