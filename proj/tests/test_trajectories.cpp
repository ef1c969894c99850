#include "doctest.h"

#include "hjbsl/trajectories.hpp"

#include <cmath>
#include <sstream>

using namespace hjbsl;

namespace {

// Every level holds the affine field 3 x1.
Solution<2> affine_solution(const ProblemSpec<2>& spec)
{
    Solution<2> sol;
    sol.mesh = spec.mesh_for(0.2);
    sol.horizon = spec.problem.horizon;
    sol.steps = 10;
    sol.dt = sol.horizon / sol.steps;
    Eigen::VectorXd v(sol.mesh->num_vertices());
    for (int i = 0; i < v.size(); ++i) v[i] = 3.0 * sol.mesh->vertex(i)[0];
    for (int k = 0; k <= sol.steps; ++k) sol.levels[k] = ValueField<2>{sol.mesh, v, sol.time(k)};
    return sol;
}

}  // namespace

TEST_CASE("projection onto the unit ball")
{
    CHECK(project_unit_ball(Eigen::Vector2d(0.3, 0.4)) == Eigen::VectorXd(Eigen::Vector2d(0.3, 0.4)));
    CHECK(project_unit_ball(Eigen::Vector2d(3.0, 4.0)).isApprox(Eigen::Vector2d(0.6, 0.8), 1e-15));
    CHECK(project_unit_ball(Eigen::Vector2d(0.0, 0.0)).norm() == 0.0);
    CHECK(project_unit_ball(Eigen::Vector2d(0.0, -1.0)) == Eigen::VectorXd(Eigen::Vector2d(0.0, -1.0)));
}

TEST_CASE("normal generator")
{
    NormalGenerator a(11), b(11), c(12);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    bool differs = false;
    for (int i = 0; i < n; ++i) {
        const double z = a();
        CHECK(z == b());
        differs |= z != c();
        sum += z;
        sq += z * z;
    }
    CHECK(a.draws() == std::uint64_t(n));
    const double mean = sum / n, var = sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / n));
    CHECK(differs);
}

TEST_CASE("deterministic straight-line exit")
{
    const auto spec = builtin_test4({{"sigma", 0.0}});
    const auto sol = affine_solution(spec);
    const auto r = simulate(sol, spec, Point<2>(0.3, 0.0), 1);
    REQUIRE(r.status == TrajectoryStatus::exited);
    CHECK(r.step == 0.25);
    for (std::size_t i = 1; i + 1 < r.positions.size(); ++i)
        CHECK((r.positions[i] - r.positions[i - 1]).norm() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(r.exit_label == "gamma1");
    CHECK(r.exit_point.isApprox(Point<2>(-1.0, 0.0), 1e-12));
    CHECK(r.exit_time == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(r.running_cost == doctest::Approx(40.5 * 1.3).epsilon(1e-12));
    CHECK(r.terminal_cost == 0.0);
    CHECK(r.normal_draws == 0u);
    CHECK_THROWS_AS(simulate(sol, spec, Point<2>(1.5, 0.0), 1), std::invalid_argument);
}

TEST_CASE("room trajectories")
{
    const auto spec = builtin_test4({{"rings", 2}, {"angles", 8}});
    SolveOptions opts;
    opts.keep_all_levels = true;
    const auto sol = solve(spec.problem, spec.mesh_for(0.1), 0.1, opts);

    const auto a = simulate(sol, spec, Point<2>(0.0, 0.0), 5);
    const auto b = simulate(sol, spec, Point<2>(0.0, 0.0), 5);
    const auto c = simulate(sol, spec, Point<2>(0.0, 0.0), 6);
    CHECK(a.positions == b.positions);
    CHECK(a.total_cost() == b.total_cost());
    CHECK(a.positions != c.positions);
    CHECK(a.normal_draws > 0u);
    if (a.status == TrajectoryStatus::exited)
        CHECK(std::abs(spec.problem.domain.signed_distance(a.exit_point)) <= 1e-10);

    const auto quiet = builtin_test4({{"rings", 2}, {"angles", 8}, {"sigma", 0.0}});
    const auto qsol = solve(quiet.problem, quiet.mesh_for(0.1), 0.1, opts);
    const auto q1 = simulate(qsol, quiet, Point<2>(0.0, 0.0), 1);
    const auto q2 = simulate(qsol, quiet, Point<2>(0.0, 0.0), 99);
    CHECK(q1.positions == q2.positions);
    CHECK(q1.normal_draws == 0u);

    const auto batch = simulate_batch(sol, spec, room_exit_starts(), {1, 2}, {}, 2);
    REQUIRE(batch.size() == 12u);
    CHECK(batch[1].start == room_exit_starts()[0]);
    CHECK(batch[1].seed == 2u);
    CHECK(batch[0].positions == simulate(sol, spec, room_exit_starts()[0], 1).positions);
    for (const auto& r : batch)
        if (r.status == TrajectoryStatus::exited)
            CHECK(std::abs(spec.problem.domain.signed_distance(r.exit_point)) <= 1e-10);

    const auto summary = batch_summary(batch);
    CHECK(summary["count"] == 12);
    int exits = 0;
    for (const auto& [label, n] : summary["exits"].items()) exits += n.get<int>();
    CHECK(exits + summary["reached_horizon"].get<int>() == 12);

    const auto arg = simulate(sol, spec, Point<2>(-0.1, 0.1), 1, {0.0, Feedback::argmin, 0.0});
    CHECK(arg.times.size() >= 2u);
}

TEST_CASE("trajectory csv")
{
    const auto spec = builtin_test4({{"sigma", 0.0}});
    const auto r = simulate(affine_solution(spec), spec, Point<2>(0.3, 0.0), 1);
    std::ostringstream out;
    write_trajectory_csv(out, r);
    const std::string s = out.str();
    CHECK(s.rfind("t,x1,x2\n0,0.29999999999999999,0\n", 0) == 0);
    CHECK(s.find("# status=exited") != std::string::npos);
    CHECK(s.find("label=gamma1") != std::string::npos);
    CHECK(s.back() == '\n');
}
