#pragma once

#include "hjbsl/problems.hpp"
#include "hjbsl/solver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hjbsl {

/// max_i |V_{0,i} - exact(x_i)| over every node, boundary included.
template <int Dim>
double linf_error_t0(const Solution<Dim>& solution, const std::function<double(const Point<Dim>&)>& exact);

/// log2(e_coarse / e_fine).
double order(double e_coarse, double e_fine);

struct ConvergenceRow {
    double dx = 0.0;
    double dt = 0.0;
    int nodes = 0;
    double err_linf = 0.0;
    std::optional<double> order;
    double seconds = 0.0;
    int steps = 0;
    double mesh_size = 0.0;
    bool dt_adjusted = false;
};

struct ConvergenceReport {
    std::string problem;
    std::map<std::string, double> params;
    double cfl = 1.0;
    std::string controls;
    std::string mesh_convention;
    std::vector<ConvergenceRow> rows;

    /// Header "dx,dt,nodes,err_linf,order,seconds"; the first row leaves
    /// the order empty.
    void write_csv(std::ostream& out) const;
    nlohmann::json to_json() const;
};

/// Solves on meshes dx0, dx0/2, ... with dt = cfl * dx and compares V_0
/// against the exact solution at t = 0.
template <int Dim>
ConvergenceReport refine_study(const ProblemSpec<Dim>& spec, double dx0, int levels, double cfl,
                               const SolveOptions& options = {});

/// sup over k < N, interior nodes and controls of
///   |(phi(t_k,x_i) - S(phi_{k+1}, a)) / tau - (-d_t phi + L^a(t_k, x_i, D phi, D^2 phi))|
/// with L^a(t,x,q,P) = -1/2 tr(sigma sigma^T P) - b^T q - f.
template <int Dim>
double consistency_residual(const Problem<Dim>& problem, const SmoothReference<Dim>& phi,
                            std::shared_ptr<const Mesh<Dim>> mesh, double dt, int workers = 0);

}  // namespace hjbsl
