#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lsmech/error.hpp"
#include "lsmech/mesh.hpp"

using namespace lsmech;

TEST_CASE("structured mesh counts and area") {
  const Mesh m = build_structured_mesh(test::unit_domain(2, 2));
  CHECK(m.num_nodes() == 9);
  CHECK(m.num_elements() == 8);
  double area = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) area += m.geometry(e).area;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.design_area() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("every triangle has positive area and row-major nodes") {
  RectDomain d = test::unit_domain(7, 5);
  d.length = 2.0;
  d.height_frac = 0.5;
  const Mesh m = build_structured_mesh(d);
  for (std::size_t e = 0; e < m.num_elements(); ++e) CHECK(m.geometry(e).area > 0.0);
  CHECK(m.node(1).x > m.node(0).x);
  CHECK(m.node(8).y > m.node(0).y);
  CHECK(m.node(m.num_nodes() - 1).x == doctest::Approx(2.0));
  CHECK(m.node(m.num_nodes() - 1).y == doctest::Approx(1.0));
}

TEST_CASE("void box removes design area") {
  RectDomain d = test::unit_domain(50, 50);
  d.void_boxes = {{0.4, 0.4, 1.0, 1.0}};
  const Mesh m = build_structured_mesh(d);
  CHECK(m.design_area() == doctest::Approx(0.64).epsilon(1e-12));
  std::size_t inactive = 0;
  for (std::size_t n = 0; n < m.num_nodes(); ++n) inactive += !m.is_active(n);
  // Nodes with x, y > 0.4 touch only void elements, boundary included.
  CHECK(inactive == 30u * 30u);
}

TEST_CASE("solid box pins nodes") {
  RectDomain d = test::unit_domain(10, 10);
  d.solid_boxes = {{0.0, 0.0, 0.2, 0.2}};
  const Mesh m = build_structured_mesh(d);
  std::size_t solid = 0, pinned = 0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) solid += m.is_solid(e);
  for (std::size_t n = 0; n < m.num_nodes(); ++n) pinned += m.is_pinned(n);
  CHECK(solid == 8);
  CHECK(pinned == 9);
  CHECK(m.design_area() == doctest::Approx(1.0));
}

TEST_CASE("invalid domains are rejected") {
  CHECK_THROWS_AS(build_structured_mesh(test::unit_domain(0, 4)), Error);
  CHECK_THROWS_AS(build_structured_mesh(test::unit_domain(4, 1)), Error);
  RectDomain d = test::unit_domain(4, 4);
  d.void_boxes = {{0.5, 0.5, 1.2, 1.0}};
  CHECK_THROWS_AS(build_structured_mesh(d), Error);
}

TEST_CASE("boundary tagging by edge midpoint") {
  const std::vector<Port> ports = {{Side::Left, 0.98, 1.0, BoundaryTag::Fixed},
                                   {Side::Left, 0.0, 0.05, BoundaryTag::Input},
                                   {Side::Right, 0.0, 0.05, BoundaryTag::Output},
                                   {Side::Bottom, 0.0, 1.0, BoundaryTag::Symmetry}};
  SUBCASE("40x40: the 0.02 fixed port snaps to one 0.025 edge") {
    const Mesh m = tag_boundaries(build_structured_mesh(test::unit_domain(40, 40)), ports);
    CHECK(m.tagged_length(BoundaryTag::Fixed) == doctest::Approx(0.025));
    CHECK(m.tagged_length(BoundaryTag::Input) == doctest::Approx(0.05));
    CHECK(m.tagged_length(BoundaryTag::Output) == doctest::Approx(0.05));
    CHECK(m.tagged_length(BoundaryTag::Symmetry) == doctest::Approx(1.0));
  }
  SUBCASE("100x100: port widths are exact") {
    const Mesh m = tag_boundaries(build_structured_mesh(test::unit_domain(100, 100)), ports);
    CHECK(m.tagged_length(BoundaryTag::Fixed) == doctest::Approx(0.02));
    CHECK(m.tagged_length(BoundaryTag::Input) == doctest::Approx(0.05));
    CHECK(m.tagged_length(BoundaryTag::Output) == doctest::Approx(0.05));
    CHECK(m.tagged_length(BoundaryTag::Symmetry) == doctest::Approx(1.0));
  }
}

TEST_CASE("no ports leaves every edge free") {
  const Mesh m = tag_boundaries(build_structured_mesh(test::unit_domain(6, 6)), {});
  for (const auto& e : m.boundary_edges()) CHECK(e.tag == BoundaryTag::Free);
  CHECK(m.boundary_edges().size() == 24);
}

TEST_CASE("overlapping ports with different tags are rejected") {
  const std::vector<Port> ports = {{Side::Left, 0.0, 0.5, BoundaryTag::Fixed},
                                   {Side::Left, 0.4, 0.6, BoundaryTag::Input}};
  CHECK_THROWS_AS(tag_boundaries(build_structured_mesh(test::unit_domain(10, 10)), ports), Error);
}

TEST_CASE("side and tag names round-trip") {
  for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) CHECK(parse_side(to_string(s)) == s);
  for (BoundaryTag t : {BoundaryTag::Free, BoundaryTag::Fixed, BoundaryTag::Input, BoundaryTag::Output,
                        BoundaryTag::Symmetry}) {
    CHECK(parse_tag(to_string(t)) == t);
  }
  CHECK_THROWS_AS(parse_side("middle"), Error);
}

TEST_CASE("triangle geometry") {
  const double h = 0.3;
  const ElementGeometry g = triangle_geometry({0, 0}, {h, 0}, {0, h});
  CHECK(g.area == doctest::Approx(h * h / 2));
  // Unit right triangle: the right-angle node has gradient (-1, -1).
  const ElementGeometry u = triangle_geometry({0, 0}, {1, 0}, {0, 1});
  CHECK(u.grad[0].x == doctest::Approx(-1.0));
  CHECK(u.grad[0].y == doctest::Approx(-1.0));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec2 a{dist(rng), dist(rng)}, b{dist(rng), dist(rng)}, c{dist(rng), dist(rng)};
    const ElementGeometry r = triangle_geometry(a, b, c);
    if (std::abs(r.area) < 1e-3) continue;
    CHECK(std::abs(r.grad[0].x + r.grad[1].x + r.grad[2].x) < 1e-12 * (1 + std::abs(r.grad[0].x)));
    CHECK(std::abs(r.grad[0].y + r.grad[1].y + r.grad[2].y) < 1e-12 * (1 + std::abs(r.grad[0].y)));
  }
}
