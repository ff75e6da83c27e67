#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lsmech/error.hpp"
#include "lsmech/objective.hpp"

using namespace lsmech;

TEST_CASE("port integrals and normalization") {
  const Mesh m = test::mechanism_mesh(10, 5);
  const LoadSpec loads;
  FieldVector u = FieldVector::Zero(static_cast<Eigen::Index>(2 * m.num_nodes()));
  for (std::size_t i = 0; i < m.num_nodes(); ++i) u[2 * i] = 3.0e-6;
  const double out_len = m.tagged_length(BoundaryTag::Output);
  const double in_len = m.tagged_length(BoundaryTag::Input);
  CHECK(port_integral(m, BoundaryTag::Output, loads.output_direction, u) == doctest::Approx(-3.0e-6 * out_len));
  const Normalization n = init_normalization(u, m, loads);
  CHECK(n.W_bar == doctest::Approx(3.0e-6 * out_len));
  CHECK(n.E_bar == doctest::Approx(1.0e7 * 3.0e-6 * in_len));

  // E_bar is linear in the traction magnitude.
  LoadSpec doubled = loads;
  doubled.traction = {2.0e7, 0.0};
  CHECK(init_normalization(u, m, doubled).E_bar == doctest::Approx(2.0 * n.E_bar));

  CHECK(compute_W(u, m, loads, n) == doctest::Approx(-1.0));
  CHECK(compute_E(u, m, loads, n) == doctest::Approx(1.0));
  CHECK(compute_W(2.5 * u, m, loads, n) == doctest::Approx(-2.5));
  CHECK(compute_E(-u, m, loads, n) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(init_normalization(FieldVector::Zero(u.size()), m, loads), Error);

  const PortDisplacements pd = evaluation_displacements(u, m, loads);
  CHECK(pd.U_o == doctest::Approx(-3.0e-6));
  CHECK(pd.U_i == doctest::Approx(3.0e-6));
  const PortDisplacements integral = evaluation_displacements(u, m, loads, PortMeasure::Integral, 2.0);
  CHECK(integral.U_o == doctest::Approx(-6.0e-6 * out_len));
}

TEST_CASE("effective energy ratio") {
  ObjectiveParams p;
  p.alpha = 1.0;
  p.beta = 0.0;
  CHECK(compute_J(-1.0, 1.0, p) == doctest::Approx(0.0));
  CHECK(compute_J(1.0, 2.0, p) == doctest::Approx(1.0));
  p.alpha = 0.0;
  p.beta = 1.0;
  CHECK(compute_J(3.0, 0.5, p) == doctest::Approx(2.0));
  CHECK_THROWS_AS(compute_J(1.0, -1.0, p), Error);
  ObjectiveParams bad;
  bad.alpha = 0.0;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.alpha = -1.0;
  bad.beta = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("volume fraction") {
  const Mesh m = test::mechanism_mesh(8, 4);
  const HeavisideParams h;
  CHECK(volume_fraction(m, LevelSetField::initial(m, 1.0), h) == doctest::Approx(1.0));
  CHECK(volume_fraction(m, LevelSetField::initial(m, -1.0), h) == doctest::Approx(h.d));
  std::vector<double> density(m.num_elements(), 0.0);
  for (std::size_t e = 0; e < density.size(); e += 2) density[e] = 1.0;
  CHECK(volume_fraction(m, density) == doctest::Approx(0.5));
}

TEST_CASE("mean compliance") {
  const Mesh m = test::mechanism_mesh(12, 6);
  const LoadSpec loads;
  const ElasticSystem sys = assemble_system(m, test::random_phi(m, 3), Material{}, HeavisideParams{});
  const FieldVector u = solve_state(sys, loads);
  const double c = mean_compliance(u, m, loads);
  CHECK(c > 0.0);
  CHECK(c == doctest::Approx(sys.energy(u)).epsilon(1e-9));

  Material soft;
  soft.youngs_modulus *= 0.5;
  const ElasticSystem soft_sys = assemble_system(m, test::random_phi(m, 3), soft, HeavisideParams{});
  CHECK(mean_compliance(solve_state(soft_sys, loads), m, loads) == doctest::Approx(2.0 * c).epsilon(1e-9));
}

TEST_CASE("connectivity between input and support") {
  const Mesh m = test::mechanism_mesh(10, 5);
  std::vector<double> density(m.num_elements(), 1.0);
  CHECK(input_connected_to_support(m, density, 0.5));
  // Cut a full-height void column.
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    double cx = 0.0;
    for (int n : m.triangle(e)) cx += m.node(n).x / 3.0;
    if (cx > 0.4 && cx < 0.6) density[e] = 0.01;
  }
  CHECK(input_connected_to_support(m, density, 0.5));  // input and support share the left edge
  std::fill(density.begin(), density.end(), 1.0);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    double cx = 0.0, cy = 0.0;
    for (int n : m.triangle(e)) {
      cx += m.node(n).x / 3.0;
      cy += m.node(n).y / 3.0;
    }
    // Horizontal void band separating the input (y < 0.1) from the support (y > 0.4).
    if (cy > 0.2 && cy < 0.3) density[e] = 0.01;
  }
  CHECK_FALSE(input_connected_to_support(m, density, 0.5));
  CHECK(input_connected_to_support(m, density, 0.005));
}
