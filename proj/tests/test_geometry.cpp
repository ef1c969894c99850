#include "doctest.h"

#include "hjbsl/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace hjbsl;

namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Point<2> random_in(const Domain<2>& d, std::mt19937_64& rng)
{
    const auto [lo, hi] = d.bounds();
    while (true) {
        Point<2> x(lo[0] + (hi[0] - lo[0]) * uniform(rng), lo[1] + (hi[1] - lo[1]) * uniform(rng));
        if (d.inside(x)) return x;
    }
}

}  // namespace

TEST_CASE("domain membership and projection")
{
    const auto box = Domain<2>::box(Point<2>(0, 0), Point<2>(2, 1));
    CHECK(box.inside(Point<2>(1, 0.5)));
    CHECK_FALSE(box.inside(Point<2>(0, 0.5)));
    CHECK_FALSE(box.inside(Point<2>(2.5, 0.5)));
    CHECK(box.signed_distance(Point<2>(1, 0.25)) == doctest::Approx(-0.25));
    CHECK(box.diameter() == doctest::Approx(std::sqrt(5.0)));

    const auto disk = Domain<2>::disk(Point<2>(0, 0), 1.0);
    std::mt19937_64 rng(3);
    for (int n = 0; n < 200; ++n) {
        const Point<2> x(4 * uniform(rng) - 2, 4 * uniform(rng) - 2);
        for (const auto* d : {&box, &disk}) {
            const Point<2> q = d->project_boundary(x);
            CHECK(std::abs(d->signed_distance(q)) <= 1e-12 * d->diameter());
        }
    }

    const auto tri = Domain<2>::convex_polygon({Point<2>(0, 0), Point<2>(1, 0), Point<2>(0, 1)});
    CHECK(tri.inside(Point<2>(0.2, 0.2)));
    CHECK_FALSE(tri.inside(Point<2>(0.6, 0.6)));
    CHECK(tri.signed_distance(Point<2>(0.5, 0.5)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("rectangular grids")
{
    SUBCASE("single cell")
    {
        const auto m = build_rect_grid(Point<2>(0, 0), Point<2>(1, 1), 1, 1);
        CHECK(m.num_vertices() == 4);
        CHECK(m.num_elements() == 2);
        for (int i = 0; i < 4; ++i) CHECK(m.is_boundary(i));
        CHECK(m.interior_nodes().empty());
    }
    SUBCASE("interior count")
    {
        const auto m = build_rect_grid(Point<2>(0, 0), Point<2>(1, 1), 200, 200);
        CHECK(m.num_vertices() == 201 * 201);
        CHECK(m.interior_nodes().size() == 199u * 199u);
        CHECK(m.mesh_size() == doctest::Approx(std::numbers::sqrt2 / 200));
        CHECK(m.regularity() > 0.0);
        CHECK(m.regularity() < 1.0);
    }
    SUBCASE("interval")
    {
        const auto m = build_interval_mesh(0.0, 1.0, 100);
        CHECK(m.num_vertices() == 101);
        CHECK(m.is_boundary(0));
        CHECK(m.is_boundary(100));
        for (int i = 1; i < 100; ++i) CHECK_FALSE(m.is_boundary(i));
    }
    SUBCASE("degenerate bounds")
    {
        CHECK_THROWS_AS(build_rect_grid(Point<2>(0, 0), Point<2>(0, 1), 4, 4), std::invalid_argument);
        CHECK_THROWS_AS(build_interval_mesh(1.0, 1.0, 4), std::invalid_argument);
    }
}

TEST_CASE("disk meshes")
{
    const auto coarse = build_disk_mesh(1.0, 0.5);
    for (int i = 0; i < coarse.num_vertices(); ++i) {
        if (coarse.is_boundary(i)) CHECK(std::abs(coarse.vertex(i).squaredNorm() - 1.0) <= 1e-12);
        else CHECK(coarse.vertex(i).norm() < 1.0);
    }
    CHECK(coarse.mesh_size() <= 0.5 * (1 + 1e-12));

    // Sagitta of the boundary chords: 1 - cos(theta/2) <= c h^2, c <= 0.5.
    for (const auto& e : coarse.elements()) {
        for (int a = 0; a < 3; ++a) {
            const int u = e[a], v = e[(a + 1) % 3];
            if (!coarse.is_boundary(u) || !coarse.is_boundary(v)) continue;
            const Point<2> mid = 0.5 * (coarse.vertex(u) + coarse.vertex(v));
            CHECK(1.0 - mid.norm() <= 0.5 * 0.25);
        }
    }

    // Vertex count near the 694 of the reference unstructured mesh.
    const auto fine = build_disk_mesh(1.0, 0.125);
    CHECK(fine.num_vertices() >= 0.7 * 694);
    CHECK(fine.num_vertices() <= 1.3 * 694);
    CHECK(fine.mesh_size() <= 0.125 * (1 + 1e-12));

    CHECK_THROWS_AS(build_disk_mesh(1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(build_disk_mesh(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("locate")
{
    const auto grid = build_rect_grid(Point<2>(0, 0), Point<2>(1, 1), 7, 5);
    const auto disk = build_disk_mesh(1.0, 0.25);
    for (const auto* m : {&grid, &disk}) {
        for (int i = 0; i < m->num_vertices(); ++i) {
            const auto hit = m->locate(m->vertex(i));
            const auto& el = m->elements()[hit.element];
            for (int a = 0; a < 3; ++a) {
                if (el[a] == i) CHECK(std::abs(hit.barycentric[a] - 1.0) <= 1e-12);
                else CHECK(std::abs(hit.barycentric[a]) <= 1e-12);
            }
        }
        for (int e = 0; e < m->num_elements(); e += 7) {
            const auto& el = m->elements()[e];
            const Point<2> c = (m->vertex(el[0]) + m->vertex(el[1]) + m->vertex(el[2])) / 3.0;
            const auto hit = m->locate(c);
            CHECK(hit.element == e);
            for (int a = 0; a < 3; ++a) CHECK(hit.barycentric[a] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        }
        std::mt19937_64 rng(11);
        for (int n = 0; n < 1000; ++n) {
            const auto hit = m->locate(random_in(m->domain(), rng));
            CHECK(hit.barycentric.minCoeff() >= -1e-12);
            CHECK(std::abs(hit.barycentric.sum() - 1.0) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(grid.locate(Point<2>(3.0, 0.5)), OutOfDomain);
}

TEST_CASE("disk projection onto the mesh hull is second order")
{
    const auto m = build_disk_mesh(1.0, 0.125);
    const double h = m.mesh_size();
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const double th = 2 * std::numbers::pi * uniform(rng);
        const Point<2> x(std::cos(th), std::sin(th));
        worst = std::max(worst, (m.locate(x).projected - x).norm());
    }
    CHECK(worst <= 0.5 * h * h);
    CHECK(worst > 0.0);
}

TEST_CASE("mesh text format")
{
    const auto tri_domain = Domain<2>::convex_polygon({Point<2>(0, 0), Point<2>(1, 0), Point<2>(0, 1)});
    SUBCASE("single triangle")
    {
        std::istringstream in("# one triangle\nDIM 2\nVERTICES 3\n0 0 1\n1 0 1\n0 1 1\nELEMENTS 1\n0 1 2\n");
        const auto m = load_mesh<2>(in, tri_domain);
        CHECK(m.num_elements() == 1);
        CHECK(m.num_vertices() == 3);
    }
    SUBCASE("repeated vertex")
    {
        std::istringstream in("DIM 2\nVERTICES 3\n0 0 1\n1 0 1\n0 1 1\nELEMENTS 1\n0 1 1\n");
        try {
            load_mesh<2>(in, tri_domain);
            FAIL("expected a mesh error");
        } catch (const MeshError& e) {
            CHECK(std::string(e.what()).find("degenerate") != std::string::npos);
        }
    }
    SUBCASE("parse errors carry the line number")
    {
        std::istringstream in("DIM 2\nVERTICES 3\n0 0 1\n1 zero 1\n0 1 1\nELEMENTS 1\n0 1 2\n");
        try {
            load_mesh<2>(in, tri_domain);
            FAIL("expected a mesh error");
        } catch (const MeshError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
    SUBCASE("misflagged vertex")
    {
        std::istringstream in("DIM 2\nVERTICES 3\n0 0 1\n1 0 0\n0 1 1\nELEMENTS 1\n0 1 2\n");
        CHECK_THROWS_AS(load_mesh<2>(in, tri_domain), MeshError);
    }
    SUBCASE("round trip")
    {
        const auto m = build_rect_grid(Point<2>(-1, -0.5), Point<2>(1, 0.5), 6, 3);
        std::stringstream buf;
        save_mesh(buf, m);
        CHECK(peek_mesh_dimension(buf) == 2);
        buf.seekg(0);
        const auto back = load_mesh<2>(buf, m.domain());
        REQUIRE(back.num_vertices() == m.num_vertices());
        for (int i = 0; i < m.num_vertices(); ++i) {
            CHECK(back.vertex(i) == m.vertex(i));
            CHECK(back.is_boundary(i) == m.is_boundary(i));
        }
        CHECK(back.elements() == m.elements());
    }
}

TEST_CASE("first exit on an interval")
{
    const auto unit = Domain<1>::box(Point<1>(0.0), Point<1>(1.0));
    const double dt = 0.04;
    const Point<1> diff(std::sqrt(dt));

    CHECK_FALSE(first_exit(unit, Point<1>(0.5), Point<1>(0.0), diff).has_value());
    CHECK_FALSE(first_exit(unit, Point<1>(0.5), Point<1>(0.0), Point<1>(-diff)).has_value());

    const auto lin = first_exit(unit, Point<1>(0.1), Point<1>(0.0), Point<1>(-diff));
    REQUIRE(lin.has_value());
    CHECK(lin->s == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lin->point[0] == 0.0);

    // 0.1 - 0.04 s^2 - 0.2 s = 0.
    const auto quad = first_exit(unit, Point<1>(0.1), Point<1>(-dt), Point<1>(-diff));
    REQUIRE(quad.has_value());
    const double s = quad->s;
    CHECK(s == doctest::Approx(0.4580).epsilon(1e-4));
    CHECK(std::abs(0.1 - 0.04 * s * s - 0.2 * s) < 1e-12);
}

TEST_CASE("sampled exit search agrees with the analytic box path")
{
    const auto box = Domain<2>::box(Point<2>(0, 0), Point<2>(1, 1));
    std::mt19937_64 rng(9);
    for (int n = 0; n < 500; ++n) {
        const Point<2> x = random_in(box, rng);
        const Point<2> drift(0.6 * (uniform(rng) - 0.5), 0.6 * (uniform(rng) - 0.5));
        const Point<2> diff(0.6 * (uniform(rng) - 0.5), 0.6 * (uniform(rng) - 0.5));
        const auto a = first_exit(box, x, drift, diff);
        const auto b = first_exit_sampled(box, x, drift, diff);
        REQUIRE(a.has_value() == b.has_value());
        if (!a) continue;
        CHECK(a->s == doctest::Approx(b->s).epsilon(1e-9));
        CHECK((a->point - b->point).norm() < 1e-9);
        CHECK(std::abs(box.signed_distance(a->point)) <= box.boundary_tolerance());
        // Every earlier sample stays inside.
        for (int k = 1; k < 50; ++k) {
            const double sp = a->s * k / 50.0 - 1e-9;
            if (sp <= 0.0) continue;
            CHECK(box.signed_distance((x + sp * sp * drift + sp * diff).eval()) <= 0.0);
        }
    }
}

TEST_CASE("exit from a disk")
{
    const auto disk = Domain<2>::disk(Point<2>(0, 0), 1.0);
    const auto hit = first_exit(disk, Point<2>(0.5, 0.0), Point<2>(0, 0), Point<2>(1.0, 0.0));
    REQUIRE(hit.has_value());
    CHECK(hit->s == doctest::Approx(0.5).epsilon(1e-11));
    CHECK(hit->point[0] == doctest::Approx(1.0).epsilon(1e-12));

    // Exits and re-enters: the first crossing must be found.
    const auto graze = first_exit(disk, Point<2>(0.0, 0.95), Point<2>(0, 0), Point<2>(1.0, 0.0));
    CHECK(graze.has_value());
}
