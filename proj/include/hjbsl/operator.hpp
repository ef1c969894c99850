#pragma once

#include "hjbsl/characteristics.hpp"
#include "hjbsl/interpolation.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hjbsl {

using Control = Eigen::VectorXd;

/// How a ControlSet was generated; box descriptors also drive the optional
/// local refinement of the minimisation.
struct ControlDescriptor {
    enum class Kind { box, disk, list };
    Kind kind = Kind::list;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::vector<int> counts;
    double radius = 0.0;
    int rings = 0;
    int angles = 0;

    std::string describe() const;
};

/// Finite sample of the compact control set A.
struct ControlSet {
    std::vector<Control> points;
    ControlDescriptor descriptor;

    int size() const { return static_cast<int>(points.size()); }
    int dimension() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
};

/// Controlled diffusion with Dirichlet data on the parabolic boundary.
///   drift       b(t, x, a)
///   diffusion   sigma^l(t, x, a), l = 0 .. brownian_dim-1
///   running     f(t, x, a)
///   boundary    Psi(t, x) for t < T, x on the boundary
///   terminal    Psi(T, x) on the closure
template <int Dim>
struct Problem {
    using PointT = Point<Dim>;

    Domain<Dim> domain;
    double horizon = 1.0;
    int brownian_dim = 1;
    ControlSet controls;

    std::function<PointT(double, const PointT&, const Control&)> drift;
    std::function<PointT(double, const PointT&, const Control&, int)> diffusion;
    std::function<double(double, const PointT&, const Control&)> running_cost;
    std::function<double(double, const PointT&)> boundary;
    std::function<double(const PointT&)> terminal;

    /// b and sigma do not depend on t; enables precomputed foot tables.
    bool autonomous = false;
    /// f does not depend on t; lets the tables hold tau * f directly.
    bool stationary_cost = false;

    /// Psi on the parabolic boundary.
    double psi(double t, const PointT& x) const { return t >= horizon ? terminal(x) : boundary(t, x); }
};

struct SchemeOptions {
    /// Negates the minus-branch weights. Only used to check that the
    /// property checker notices a broken scheme.
    bool flip_minus_weight = false;
};

/// One interpolation contribution, weights already multiplied by pi*gamma.
template <int Dim>
struct InteriorTerm {
    std::array<int, Dim + 1> nodes;
    std::array<double, Dim + 1> weights;
};

/// One boundary substitution: weight * Psi(t_k + offset, point).
template <int Dim>
struct BoundaryTerm {
    double weight;
    double offset;
    Point<Dim> point;
};

/// S^fd(., a) at one node as a linear functional of the next level plus
/// boundary data and running cost.
template <int Dim>
struct CompiledFoot {
    std::vector<InteriorTerm<Dim>> interior;
    std::vector<BoundaryTerm<Dim>> boundary;
    double tau = 0.0;
    bool any_exit = false;
};

/// Scratch storage reused across compile_foot calls.
template <int Dim>
struct FootWorkspace {
    TruncatedFoot<Dim> foot;
    std::vector<Point<Dim>> sigma;
    CompiledFoot<Dim> compiled;
};

template <int Dim>
void compile_foot(const Problem<Dim>& problem, const Mesh<Dim>& mesh, double t_k, double dt,
                  const Point<Dim>& x, const Control& a, const SchemeOptions& options,
                  FootWorkspace<Dim>& ws);

/// Truncated foot of (t_k, x, a) for inspection and tests.
template <int Dim>
TruncatedFoot<Dim> truncated_foot(const Problem<Dim>& problem, double t_k, double dt, const Point<Dim>& x,
                                  const Control& a);

template <int Dim>
double evaluate_terms(const std::vector<InteriorTerm<Dim>>& interior,
                      const std::vector<BoundaryTerm<Dim>>& boundary, const Problem<Dim>& problem,
                      const Eigen::VectorXd& next, double t_k);

/// S^fd_{k,i}(next, a).
template <int Dim>
double apply_scheme(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k, double dt, int node,
                    const Control& a, const SchemeOptions& options = {});

/// Same, evaluated at an arbitrary interior point (used by consistency checks
/// and by tests that do not care about node indices).
template <int Dim>
double apply_scheme_at(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k, double dt,
                       const Point<Dim>& x, const Control& a, const SchemeOptions& options,
                       FootWorkspace<Dim>& ws, double* tau_out = nullptr);

struct ControlChoice {
    double value = 0.0;
    /// Index into the control list, or -1 when the refinement stage won.
    int index = -1;
    Control control;
};

struct MinimizeOptions {
    SchemeOptions scheme;
    /// Second pass on a 3x finer local lattice around the coarse argmin
    /// (box control sets only).
    bool refine = false;
};

/// inf over the control list of S^fd; ties go to the first control in list
/// order.
template <int Dim>
ControlChoice minimize_over_controls(const Problem<Dim>& problem, const ValueField<Dim>& next, double t_k,
                                     double dt, int node, const MinimizeOptions& options = {});

/// Controls of the local refinement lattice around `center`.
std::vector<Control> refinement_lattice(const ControlDescriptor& box, const Control& center);

/// Precomputed S^fd functionals for every (interior node, control) pair of an
/// autonomous problem. Stored in blocks of consecutive interior nodes.
template <int Dim>
class FootTable {
public:
    static constexpr int kBlockNodes = 256;

    struct Block {
        int first_slot = 0;
        int num_slots = 0;
        std::vector<std::uint32_t> interior_start;  // per slot
        std::vector<std::uint32_t> boundary_start;  // per slot
        std::vector<std::uint8_t> interior_count;   // per (slot, control)
        std::vector<std::uint8_t> boundary_count;   // per (slot, control)
        std::vector<double> tau_or_cost;            // per (slot, control)
        std::vector<InteriorTerm<Dim>> interior;
        std::vector<BoundaryTerm<Dim>> boundary;

        std::size_t bytes() const;
    };

    /// Builds the table, or returns false (leaving it empty) when the
    /// table would exceed `budget_bytes`.
    bool build(const Problem<Dim>& problem, const Mesh<Dim>& mesh, double dt, const SchemeOptions& options,
               std::size_t budget_bytes, int workers);

    bool empty() const { return blocks_.empty(); }
    std::size_t bytes() const;
    const std::vector<Block>& blocks() const { return blocks_; }
    /// Whether tau_or_cost already holds tau * f.
    bool holds_cost() const { return holds_cost_; }

private:
    std::vector<Block> blocks_;
    bool holds_cost_ = false;
};

}  // namespace hjbsl
