#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lsmech/error.hpp"
#include "lsmech/fem.hpp"
#include "lsmech/objective.hpp"
#include "lsmech/optimizer.hpp"

using namespace lsmech;

namespace {

std::vector<double> full_density(const Mesh& m) { return std::vector<double>(m.num_elements(), 1.0); }

}  // namespace

TEST_CASE("material validation") {
  Material m;
  m.poisson_ratio = 0.6;
  CHECK_THROWS_AS(m.validate(), Error);
  m.poisson_ratio = 0.3;
  m.youngs_modulus = -1.0;
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("uniaxial patch test is exact") {
  const Material mat;
  const double sigma0 = 1.0e7;
  for (int n : {3, 8, 21}) {
    const Mesh m = test::tension_mesh(n, n + 2, 2.0, 1.0);
    const ElasticSystem sys = assemble_system(m, full_density(m), mat);
    LoadSpec loads;
    loads.traction = {sigma0, 0.0};
    const FieldVector u = solve_state(sys, loads);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      const Vec2& p = m.node(i);
      const double ux = sigma0 * p.x / mat.youngs_modulus;
      const double uy = -mat.poisson_ratio * sigma0 * p.y / mat.youngs_modulus;
      CHECK(std::abs(u[2 * i] - ux) <= 1e-10 * sigma0 * 2.0 / mat.youngs_modulus);
      CHECK(std::abs(u[2 * i + 1] - uy) <= 1e-10 * sigma0 * 2.0 / mat.youngs_modulus);
    }
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      const ElementStress s = element_stress(sys, u, e);
      CHECK(s.sigma[0] == doctest::Approx(sigma0).epsilon(1e-10));
      CHECK(std::abs(s.sigma[1]) < 1e-10 * sigma0);
      CHECK(std::abs(s.sigma[2]) < 1e-10 * sigma0);
    }
  }
}

TEST_CASE("zero traction gives zero displacement") {
  const Mesh m = test::tension_mesh(5, 5);
  const ElasticSystem sys = assemble_system(m, full_density(m), Material{});
  LoadSpec loads;
  loads.traction = {0.0, 0.0};
  CHECK(solve_state(sys, loads).norm() == 0.0);
}

TEST_CASE("pure shear stress") {
  const Mesh m = test::tension_mesh(4, 4);
  const Material mat;
  const ElasticSystem sys = assemble_system(m, full_density(m), mat);
  const double gamma = 1e-4;
  FieldVector u = FieldVector::Zero(static_cast<Eigen::Index>(sys.num_dofs()));
  for (std::size_t i = 0; i < m.num_nodes(); ++i) u[2 * i] = gamma * m.node(i).y;
  const double G = mat.youngs_modulus / (2.0 * (1.0 + mat.poisson_ratio));
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const ElementStress s = element_stress(sys, u, e);
    CHECK(s.sigma[2] == doctest::Approx(G * gamma).epsilon(1e-12));
    CHECK(std::abs(s.sigma[0]) < 1e-6);
  }
  CHECK(element_stress(sys, FieldVector::Zero(u.size()), 0).von_mises == doctest::Approx(0.0));
}

TEST_CASE("ersatz stiffness scales with density") {
  const Mesh m = test::mechanism_mesh(6, 6);
  const HeavisideParams h;
  const ElasticSystem full = assemble_system(m, LevelSetField::initial(m, 1.0), Material{}, h);
  const ElasticSystem empty = assemble_system(m, LevelSetField::initial(m, -1.0), Material{}, h);
  const FieldVector x = test::random_vector(full.num_dofs(), 2);
  const FieldVector a = full.apply(x), b = empty.apply(x);
  CHECK((b - h.d * a).norm() <= 1e-12 * a.norm());
}

TEST_CASE("floating structures are rejected") {
  const Mesh free_mesh = tag_boundaries(build_structured_mesh(test::unit_domain(4, 4)),
                                        std::vector<Port>{{Side::Right, 0.0, 1.0, BoundaryTag::Input}});
  CHECK_THROWS_AS(assemble_system(free_mesh, full_density(free_mesh), Material{}), Error);
  // A single symmetry side leaves one rigid mode.
  const Mesh roller = tag_boundaries(build_structured_mesh(test::unit_domain(4, 4)),
                                     std::vector<Port>{{Side::Left, 0.0, 1.0, BoundaryTag::Symmetry}});
  CHECK_THROWS_AS(assemble_system(roller, full_density(roller), Material{}), Error);
}

TEST_CASE("adjoint solves") {
  const Mesh m = test::mechanism_mesh(10, 5);
  const ElasticSystem sys = assemble_system(m, test::random_phi(m, 7), Material{}, HeavisideParams{});
  const LoadSpec loads;
  const FieldVector u = solve_state(sys, loads);
  const FieldVector v = solve_adjoint(sys, port_load(m, BoundaryTag::Input, loads.traction));
  CHECK((u - v).norm() <= 1e-14 * u.norm());
  CHECK(solve_adjoint(sys, FieldVector::Zero(u.size())).norm() == 0.0);
  for (unsigned seed = 0; seed < 5; ++seed) {
    FieldVector r = test::random_vector(sys.num_dofs(), 100 + seed);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (sys.is_constrained(static_cast<std::size_t>(i))) r[i] = 0.0;
    }
    CHECK(r.dot(solve_adjoint(sys, r)) > 0.0);
  }
  // Symmetry of K^-1.
  const FieldVector r1 = test::random_vector(sys.num_dofs(), 41), r2 = test::random_vector(sys.num_dofs(), 42);
  const double a = r1.dot(solve_adjoint(sys, r2)), b = r2.dot(solve_adjoint(sys, r1));
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("iterative path matches the direct solver") {
  const Mesh m = test::mechanism_mesh(16, 8);
  const LevelSetField phi = test::random_phi(m, 8);
  SolverOptions iterative;
  iterative.direct_dof_limit = 0;
  const ElasticSystem a = assemble_system(m, phi, Material{}, HeavisideParams{});
  const ElasticSystem b = assemble_system(m, phi, Material{}, HeavisideParams{}, iterative);
  const FieldVector ua = solve_state(a, LoadSpec{}), ub = solve_state(b, LoadSpec{});
  CHECK((ua - ub).norm() <= 1e-8 * ua.norm());
}

TEST_CASE("initial inverter moves the output port against e") {
  const ProblemSpec spec = inverter_problem(80);
  const Mesh m = build_problem_mesh(spec);
  const ElasticSystem sys = assemble_system(m, LevelSetField::initial(m), spec.material, spec.heaviside);
  const FieldVector u0 = solve_state(sys, spec.loads);
  for (const auto& edge : m.boundary_edges()) {
    if (edge.tag != BoundaryTag::Output) continue;
    for (int n : edge.nodes) {
      CHECK(spec.loads.output_direction.x * u0[2 * n] + spec.loads.output_direction.y * u0[2 * n + 1] < 0.0);
    }
  }
  const Normalization norm = init_normalization(u0, m, spec.loads);
  CHECK(compute_W(u0, m, spec.loads, norm) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(compute_E(u0, m, spec.loads, norm) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("half model matches the full inverter domain") {
  const ProblemSpec half = inverter_problem(80);
  ProblemSpec full = half;
  full.domain.height_frac = 1.0;
  full.domain.divisions_y = 80;
  full.ports = {{Side::Left, 0.0, 0.02, BoundaryTag::Fixed},
                {Side::Left, 0.98, 1.0, BoundaryTag::Fixed},
                {Side::Left, 0.45, 0.55, BoundaryTag::Input},
                {Side::Right, 0.45, 0.55, BoundaryTag::Output}};
  auto ports = [](const ProblemSpec& spec) {
    const Mesh m = build_problem_mesh(spec);
    const ElasticSystem sys = assemble_system(m, LevelSetField::initial(m), spec.material, spec.heaviside);
    return evaluation_displacements(solve_state(sys, spec.loads), m, spec.loads);
  };
  const PortDisplacements a = ports(half), b = ports(full);
  // The single diagonal direction breaks mirror symmetry at the element level only.
  CHECK(a.U_o == doctest::Approx(b.U_o).epsilon(0.02));
  CHECK(a.U_i == doctest::Approx(b.U_i).epsilon(0.02));
}
