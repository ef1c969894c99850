#pragma once

#include "hjbsl/operator.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hjbsl {

/// Non-finite value produced during the backward sweep.
class SolverError : public std::runtime_error {
public:
    SolverError(int level, int node, const std::string& what)
        : std::runtime_error(what), level_(level), node_(node)
    {
    }
    int level() const { return level_; }
    int node() const { return node_; }

private:
    int level_;
    int node_;
};

struct SolveOptions {
    /// 0 selects HJB_SL_WORKERS or the hardware concurrency.
    int workers = 0;
    /// Retain every time level (needed by trajectory simulation).
    bool keep_all_levels = false;
    /// Levels floor(t/dt) of these times are retained in addition to t = 0.
    std::vector<double> report_times;
    /// Store the minimising control at retained levels.
    bool store_controls = false;
    /// Precompute foot tables for autonomous problems when they fit.
    bool use_table = true;
    std::size_t table_budget_bytes = std::size_t(1536) << 20;
    MinimizeOptions minimize;
};

template <int Dim>
struct Solution {
    std::shared_ptr<const Mesh<Dim>> mesh;
    double horizon = 0.0;
    double dt = 0.0;
    int steps = 0;
    double requested_dt = 0.0;
    bool dt_adjusted = false;
    std::map<int, ValueField<Dim>> levels;
    /// Minimising controls (one column per vertex, NaN on boundary nodes).
    std::map<int, Eigen::MatrixXd> controls;
    /// max_k ||V_k||_inf over every level, retained or not.
    double max_abs = 0.0;
    double wall_seconds = 0.0;
    bool used_table = false;
    int workers = 1;

    double time(int k) const { return k * dt; }
    bool has_level(int k) const { return levels.count(k) != 0; }
    const ValueField<Dim>& level(int k) const;
    /// Floor index [t/dt] used for space-time evaluation.
    int level_index(double t) const;
};

/// Backward recursion V_N = Psi(T,.), V_k = min_a S^fd(V_{k+1}, a) at
/// interior nodes, V_k = Psi(t_k,.) at boundary nodes. dt is adjusted to
/// T / round(T / dt) when it does not divide the horizon.
template <int Dim>
Solution<Dim> solve(const Problem<Dim>& problem, std::shared_ptr<const Mesh<Dim>> mesh, double dt,
                    const SolveOptions& options = {});

/// I[V_[t/dt]](x).
template <int Dim>
double evaluate(const Solution<Dim>& solution, double t, const Point<Dim>& x);

/// Central differences of evaluate() with step h (defaults to the mesh
/// size when h <= 0).
template <int Dim>
Point<Dim> gradient(const Solution<Dim>& solution, double t, const Point<Dim>& x, double h = 0.0);

}  // namespace hjbsl
