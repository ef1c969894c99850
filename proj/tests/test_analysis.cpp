#include "doctest.h"

#include "hjbsl/analysis.hpp"

#include <cmath>
#include <sstream>

using namespace hjbsl;

TEST_CASE("observed order")
{
    CHECK(order(1.26e-1, 5.02e-2) == doctest::Approx(1.327).epsilon(0.004));
    CHECK(order(3e-3, 3e-3) == 0.0);
    CHECK(order(4e-2, 1e-2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(order(1e-2, 4e-2) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK_THROWS_AS(order(0.0, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(order(1e-2, -1.0), std::invalid_argument);
}

TEST_CASE("error at the initial time")
{
    const auto spec = builtin_test1({{"nu", 0.1}});
    const auto sol = solve(spec.problem, spec.mesh_for(0.05), 0.05);
    const auto& v0 = sol.level(0);
    CHECK(linf_error_t0<1>(sol, [&](const Point<1>& x) { return interpolate(v0, x); }) == 0.0);
    CHECK(linf_error_t0<1>(sol, [&](const Point<1>& x) { return interpolate(v0, x) + 0.125; }) ==
          doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("refinement report")
{
    const auto spec = builtin_test2({{"rings", 2}, {"angles", 8}});
    const auto one = refine_study(spec, 0.5, 1, 1.0);
    REQUIRE(one.rows.size() == 1u);
    CHECK_FALSE(one.rows[0].order);
    CHECK(one.rows[0].err_linf > 0.0);
    CHECK(one.controls == "disk(r=1) rings=2 angles=8");

    const auto two = refine_study(spec, 0.5, 2, 0.5);
    REQUIRE(two.rows.size() == 2u);
    CHECK(two.rows[1].dx == 0.25);
    CHECK(two.rows[1].dt == 0.125);
    REQUIRE(two.rows[1].order);
    CHECK(*two.rows[1].order == doctest::Approx(order(two.rows[0].err_linf, two.rows[1].err_linf)));

    std::ostringstream csv;
    two.write_csv(csv);
    std::istringstream lines(csv.str());
    std::string header, first, second, extra;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(header == "dx,dt,nodes,err_linf,order,seconds");
    CHECK(first.rfind("0.5,0.25," + std::to_string(two.rows[0].nodes) + ",", 0) == 0);
    CHECK(first.find(",,") != std::string::npos);
    CHECK(second.find(",,") == std::string::npos);
    CHECK_FALSE(std::getline(lines, extra));

    const auto j = two.to_json();
    CHECK(j["problem"] == "test2");
    CHECK(j["rows"].size() == 2u);
    CHECK(j["rows"][0]["order"].is_null());
}

TEST_CASE("affine functions have zero consistency residual")
{
    Problem<1> pb;
    pb.domain = Domain<1>::box(Point<1>(0.0), Point<1>(1.0));
    pb.horizon = 1.0;
    pb.brownian_dim = 1;
    pb.controls.points = {Control::Constant(1, -1.0), Control::Constant(1, 0.5)};
    pb.drift = [](double, const Point<1>&, const Control& a) { return Point<1>(a[0]); };
    pb.diffusion = [](double, const Point<1>&, const Control&, int) { return Point<1>(0.8); };
    pb.running_cost = [](double, const Point<1>& x, const Control&) { return 1.0 + x[0]; };
    pb.boundary = [](double, const Point<1>& x) { return 2.0 * x[0] + 1.0; };
    pb.terminal = [](const Point<1>& x) { return 2.0 * x[0] + 1.0; };

    SmoothReference<1> phi;
    phi.value = [](double, const Point<1>& x) { return 2.0 * x[0] + 1.0; };
    phi.time_derivative = [](double, const Point<1>&) { return 0.0; };
    phi.gradient = [](double, const Point<1>&) { return Point<1>(2.0); };
    phi.hessian = [](double, const Point<1>&) { return Eigen::Matrix<double, 1, 1>::Zero().eval(); };

    auto mesh = std::make_shared<const Mesh<1>>(build_interval_mesh(0.0, 1.0, 10));
    CHECK(consistency_residual(pb, phi, mesh, 0.04) <= 1e-10);
}

TEST_CASE("residual of the exact disk solution shrinks")
{
    const auto spec = builtin_test2({{"rings", 2}, {"angles", 8}});
    const double coarse = consistency_residual(spec.problem, *spec.probe, spec.mesh_for(0.5), 0.5);
    const double fine = consistency_residual(spec.problem, *spec.probe, spec.mesh_for(0.25), 0.25);
    CHECK(fine < coarse);
}
