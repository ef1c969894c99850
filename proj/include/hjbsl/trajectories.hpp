#pragma once

#include "hjbsl/problems.hpp"
#include "hjbsl/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace hjbsl {

/// z if |z| <= 1, else z / |z|.
Eigen::VectorXd project_unit_ball(const Eigen::VectorXd& z);

/// Standard normal draws: 64-bit Mersenne Twister (std::mt19937_64) seeded
/// with `seed`, uniforms u = (bits >> 11) * 2^-53, Marsaglia polar method.
/// Both values of each accepted polar pair are used, first u1-based then
/// u2-based.
class NormalGenerator {
public:
    explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}
    double operator()();
    std::uint64_t draws() const { return draws_; }

private:
    double uniform();

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t draws_ = 0;
};

enum class Feedback {
    /// a = Proj_A(-D_x v(s, Y)) with D_x v by central differences.
    gradient,
    /// a = argmin of the scheme at Y against the next time level.
    argmin,
};

struct TrajectoryOptions {
    /// Euler substep; 0 selects half the solver time step.
    double substep = 0.0;
    Feedback feedback = Feedback::gradient;
    /// Difference step for the gradient; 0 selects the mesh size.
    double gradient_step = 0.0;
};

enum class TrajectoryStatus { exited, horizon };

template <int Dim>
struct TrajectoryRecord {
    Point<Dim> start;
    std::uint64_t seed = 0;
    double step = 0.0;
    std::vector<double> times;
    std::vector<Point<Dim>> positions;
    TrajectoryStatus status = TrajectoryStatus::horizon;
    double exit_time = 0.0;
    Point<Dim> exit_point;
    std::string exit_label;
    double running_cost = 0.0;
    double terminal_cost = 0.0;
    std::uint64_t normal_draws = 0;

    double total_cost() const { return running_cost + terminal_cost; }
};

/// Euler-Maruyama with feedback control:
///   Y <- Y + h b(s,Y,a) + sqrt(h) sum_l sigma^l(s,Y,a) xi_l.
/// A step that leaves the domain ends the path at its intersection with the
/// boundary. Columns that vanish at the current state consume no draws.
/// The solution must retain every time level.
template <int Dim>
TrajectoryRecord<Dim> simulate(const Solution<Dim>& solution, const ProblemSpec<Dim>& spec, const Point<Dim>& x0,
                               std::uint64_t seed, const TrajectoryOptions& options = {});

/// All (start, seed) pairs, start-major; runs concurrently.
template <int Dim>
std::vector<TrajectoryRecord<Dim>> simulate_batch(const Solution<Dim>& solution, const ProblemSpec<Dim>& spec,
                                                  const std::vector<Point<Dim>>& starts,
                                                  const std::vector<std::uint64_t>& seeds,
                                                  const TrajectoryOptions& options = {}, int workers = 0);

/// Rows "t,x1,...,xd" followed by a "# status ..." line.
template <int Dim>
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<Dim>& record);

/// Per-trajectory records plus exit counts per boundary label.
template <int Dim>
nlohmann::json batch_summary(const std::vector<TrajectoryRecord<Dim>>& records);

}  // namespace hjbsl
