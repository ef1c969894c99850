#include "doctest.h"

#include "hjbsl/problems.hpp"

#include <cmath>
#include <random>

using namespace hjbsl;

namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

TEST_CASE("control lattices")
{
    SUBCASE("interval")
    {
        const auto set = control_grid(box_controls(Eigen::VectorXd::Constant(1, -1), Eigen::VectorXd::Constant(1, 1), {3}));
        REQUIRE(set.size() == 3u);
        CHECK(set.points[0][0] == -1.0);
        CHECK(set.points[1][0] == 0.0);
        CHECK(set.points[2][0] == 1.0);
    }
    SUBCASE("disk")
    {
        const auto set = control_grid(disk_controls(1.0, 1, 4));
        REQUIRE(set.size() == 5u);
        const double expected[5][2] = {{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        for (int i = 0; i < 5; ++i) {
            CHECK(set.points[i][0] == expected[i][0]);
            CHECK(set.points[i][1] == expected[i][1]);
        }
        CHECK(control_grid(disk_controls(1.0, 8, 24)).size() == 193u);
    }
    SUBCASE("square")
    {
        const auto set = control_grid(box_controls(Eigen::VectorXd::Constant(2, -2), Eigen::VectorXd::Constant(2, 2), {21, 21}));
        REQUIRE(set.size() == 441u);
        CHECK(set.points[1][0] - set.points[0][0] == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(set.points[21][1] - set.points[0][1] == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(set.points[220].norm() <= 1e-15);
    }
    SUBCASE("invalid")
    {
        CHECK_THROWS_AS(control_grid(disk_controls(1.0, 0, 4)), std::invalid_argument);
        CHECK_THROWS_AS(control_grid(disk_controls(-1.0, 2, 4)), std::invalid_argument);
        CHECK_THROWS_AS(control_grid(box_controls(Eigen::VectorXd::Constant(1, 1), Eigen::VectorXd::Constant(1, -1), {3})),
                        std::invalid_argument);
    }
}

TEST_CASE("transport problem")
{
    const auto spec = builtin_test1({{"nu", 0.0}});
    CHECK(spec.problem.controls.size() == 21u);
    REQUIRE(spec.exact_t0);
    CHECK(spec.exact_t0(Point<1>(0.0)) == 1.0);
    CHECK(spec.exact_t0(Point<1>(0.3)) == 0.0);
    CHECK(spec.problem.boundary(0.25, Point<1>(0.0)) == 0.75);
    CHECK(spec.problem.boundary(0.25, Point<1>(1.0)) == 0.0);
    CHECK(spec.boundary_label(Point<1>(0.0)) == "left");
    CHECK_FALSE(builtin_test1({{"nu", 0.1}}).exact_t0);
    CHECK(builtin_test1({{"nu", 0.1}}).problem.diffusion(0, Point<1>(0.5), Control::Zero(1), 0)[0] ==
          doctest::Approx(std::sqrt(0.2)));
    CHECK(spec.mesh_for(0.01)->num_vertices() == 101);

    // Probe matches the data on the parabolic boundary at the left end and at T.
    const auto& probe = *spec.probe;
    CHECK(probe.value(0.3, Point<1>(0.0)) == doctest::Approx(0.7));
    CHECK(probe.value(1.0, Point<1>(0.4)) == 0.0);
}

TEST_CASE("disk problem data solve the equation")
{
    const auto spec = builtin_test2();
    const auto& pb = spec.problem;
    const auto& v = *spec.probe;
    CHECK(pb.controls.size() == 193u);
    CHECK(spec.exact_t0(Point<2>(0, 0)) == 0.0);
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const double r = std::sqrt(uniform(rng)), th = 2 * M_PI * uniform(rng);
        const Point<2> x(r * std::cos(th), r * std::sin(th));
        const double t = uniform(rng);
        const Point<2> s = pb.diffusion(t, x, Control::Zero(2), 0);
        CHECK(pb.diffusion(t, x, Control::Zero(2), 1).norm() == 0.0);
        // sup over the unit disk of -a.Dv is |Dv|.
        const double residual = -v.time_derivative(t, x) - 0.5 * s.dot(v.hessian(t, x) * s) +
                                v.gradient(t, x).norm() - pb.running_cost(t, x, Control::Zero(2));
        worst = std::max(worst, std::abs(residual));
        CHECK(std::abs(pb.running_cost(t, x, Control::Zero(2))) <= spec.f_sup);
    }
    CHECK(worst <= 1e-8);
    CHECK(pb.boundary(0.5, Point<2>(1, 0)) == 0.0);
    CHECK(pb.terminal(Point<2>(0.6, 0.8)) == doctest::Approx(1.5 * std::sin(0.6) * std::sin(0.8)).epsilon(1e-15));
}

TEST_CASE("square problem")
{
    const auto spec = builtin_test3();
    CHECK(spec.problem.controls.size() == 441u);
    CHECK(square_distance_profile(Point<2>(0.5, 0.25)) == 0.5);
    CHECK(spec.exact_t0(Point<2>(0.5, 0.5)) == 0.5);
    CHECK(spec.exact_t0(Point<2>(0.1, 0.5)) == doctest::Approx(0.1));
    CHECK(spec.exact_t0(Point<2>(0.5, 0.1)) == doctest::Approx(0.2));
    CHECK(spec.problem.terminal(Point<2>(0.5, 0.5)) == -1.0);
    CHECK(spec.problem.running_cost(0, Point<2>(0.5, 0.5), Eigen::Vector2d(2, 1)) == 3.0);
    CHECK(spec.problem.diffusion(0, Point<2>(0.5, 0.5), Eigen::Vector2d(2, 1), 0).norm() == 0.0);
    CHECK(spec.mesh_for(0.04)->num_vertices() == 26 * 26);
}

TEST_CASE("room problem")
{
    const auto spec = builtin_test4();
    const auto& pb = spec.problem;
    CHECK_FALSE(spec.theory_covered);
    CHECK(spec.boundary_label(Point<2>(-1.0, 0.1)) == "gamma1");
    CHECK(spec.boundary_label(Point<2>(1.0, -0.2)) == "gamma2");
    CHECK(spec.boundary_label(Point<2>(1.0, 0.3)) == "wall");
    CHECK(spec.boundary_label(Point<2>(0.0, 0.5)) == "wall");
    CHECK(pb.boundary(1.0, Point<2>(-1.0, 0.0)) == 0.0);
    CHECK(pb.boundary(1.0, Point<2>(1.0, 0.0)) == 0.2);
    CHECK(pb.boundary(1.0, Point<2>(0.0, -0.5)) == 100.0);
    CHECK(pb.diffusion(0, Point<2>(0, 0), Control::Zero(2), 0)[0] == doctest::Approx(1.6));
    CHECK(pb.diffusion(0, Point<2>(0.5, 0), Control::Zero(2), 0).norm() == 0.0);
    CHECK(builtin_test4({{"sigma", 0.0}}).problem.diffusion(0, Point<2>(0, 0), Control::Zero(2), 0).norm() == 0.0);
    CHECK(pb.running_cost(0, Point<2>(0, 0), Eigen::Vector2d(0.6, 0.8)) == 40.5);
    const auto mesh = spec.mesh_for(std::sqrt(2.0) / 50);
    CHECK(mesh->num_vertices() == 101 * 51);
    CHECK(room_exit_starts().size() == 6u);
    for (const auto& x : room_exit_starts()) CHECK(pb.domain.inside(x));
}

TEST_CASE("problem lookup and parameter validation")
{
    CHECK(std::holds_alternative<ProblemSpec<1>>(builtin("test1")));
    CHECK(std::holds_alternative<ProblemSpec<2>>(builtin("test4")));
    CHECK_THROWS_AS(builtin("test5"), std::invalid_argument);
    CHECK_THROWS_AS(builtin("test1", {{"nu", -0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(builtin("test2", {{"nu", 0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(builtin("test3", {{"controls", 2.5}}), std::invalid_argument);
    CHECK_THROWS_AS(builtin("test3", {{"controls", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(builtin("test4", {{"sigma", -1}}), std::invalid_argument);
    CHECK(builtin_test3({{"controls", 5}}).problem.controls.size() == 25u);
}
