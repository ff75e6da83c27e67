#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "helpers.hpp"
#include "lsmech/error.hpp"
#include "lsmech/sensitivity.hpp"

using namespace lsmech;

namespace {

struct Fixture {
  Mesh mesh = test::mechanism_mesh(12, 6);
  LoadSpec loads;
  ElasticSystem sys = assemble_system(mesh, test::random_phi(mesh, 11), Material{}, HeavisideParams{});
  FieldVector u = solve_state(sys, loads);
  Normalization norm = init_normalization(u, mesh, loads);
};

}  // namespace

TEST_CASE("effective-energy adjoint load matches finite differences") {
  Fixture f;
  StressParams stress;
  ObjectiveParams objective;
  objective.negative_numerator = NegativeNumerator::Ratio;
  for (double mu : {0.0, 0.3}) {
    for (double p : {2.0, 8.0}) {
      stress.p = p;
      const FieldVector rhs = test::effective_energy_rhs(f.sys, f.u, f.loads, f.norm, objective, stress, mu);
      auto F = [&](const FieldVector& x) {
        return test::effective_energy_functional(f.sys, x, f.loads, f.norm, objective, stress, mu);
      };
      for (unsigned seed = 0; seed < 5; ++seed) {
        const auto c = test::directional_check(F, f.u, rhs, test::random_vector(f.u.size(), seed));
        CHECK(c.rel_error() < 1e-6);
      }
    }
  }
}

TEST_CASE("product surrogate ascends (W + alpha)(E + beta) when J < 0") {
  Fixture f;
  ObjectiveParams objective;
  objective.alpha = 0.0;
  objective.beta = 1.0;
  const StressParams stress;
  const double W0 = compute_W(f.u, f.mesh, f.loads, f.norm);
  const double E0 = compute_E(f.u, f.mesh, f.loads, f.norm);
  REQUIRE(compute_J(W0, E0, objective) < 0.0);
  const FieldVector rhs = test::effective_energy_rhs(f.sys, f.u, f.loads, f.norm, objective, stress, 0.0);
  const double scale = (E0 + objective.beta) * (E0 + objective.beta);
  auto G = [&](const FieldVector& x) {
    const double W = compute_W(x, f.mesh, f.loads, f.norm), E = compute_E(x, f.mesh, f.loads, f.norm);
    return (W + objective.alpha) * (E + objective.beta) / scale;
  };
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto c = test::directional_check(G, f.u, rhs, test::random_vector(f.u.size(), 50 + seed));
    CHECK(c.rel_error() < 1e-6);
  }
  // Ratio mode instead differentiates J itself.
  objective.negative_numerator = NegativeNumerator::Ratio;
  const FieldVector ratio_rhs = test::effective_energy_rhs(f.sys, f.u, f.loads, f.norm, objective, stress, 0.0);
  CHECK((ratio_rhs - rhs).norm() > 0.0);
}

TEST_CASE("effective-energy adjoint term isolation") {
  Fixture f;
  const FieldVector zero = FieldVector::Zero(f.u.size());
  const FieldVector rhs = assemble_adjoint_rhs(f.sys, f.loads, 1.0, 0.0, 0.0, zero);
  CHECK((rhs - port_load(f.mesh, BoundaryTag::Output, f.loads.output_direction)).norm() == 0.0);
  ObjectiveParams objective;
  objective.alpha = 0.0;
  objective.beta = 1.0;
  CHECK_THROWS_AS(build_adjoint_rhs_effective_energy(f.sys, f.u, 1.0, 0.0, -1.0, f.norm, f.loads,
                                                     compute_stress_field(f.sys, f.u, StressParams{}),
                                                     StressParams{}, objective, 0.0),
                  Error);
}

TEST_CASE("p-norm adjoint load matches finite differences") {
  Fixture f;
  StressParams stress;
  // p = 1 is omitted: sigma_vm is not smooth near stress-free elements.
  for (double p : {2.0, 6.0, 16.0}) {
    stress.p = p;
    const FieldVector rhs = build_adjoint_rhs_pnorm(f.sys, f.u, compute_stress_field(f.sys, f.u, stress), stress);
    auto F = [&](const FieldVector& x) { return -test::pnorm_of(f.sys, x, stress); };
    for (unsigned seed = 0; seed < 5; ++seed) {
      const auto c = test::directional_check(F, f.u, rhs, test::random_vector(f.u.size(), 90 + seed));
      CHECK(c.rel_error() < 1e-6);
    }
  }
  SUBCASE("gradient is invariant under scaling of u") {
    const FieldVector g1 = pnorm_gradient(f.sys, f.u, compute_stress_field(f.sys, f.u, stress), stress);
    const FieldVector u3 = 3.0 * f.u;
    const FieldVector g3 = pnorm_gradient(f.sys, u3, compute_stress_field(f.sys, u3, stress), stress);
    CHECK((g1 - g3).norm() <= 1e-10 * g1.norm());
  }
  SUBCASE("zero displacement gives zero load") {
    const FieldVector z = FieldVector::Zero(f.u.size());
    CHECK(build_adjoint_rhs_pnorm(f.sys, z, compute_stress_field(f.sys, z, stress), stress).norm() == 0.0);
  }
}

TEST_CASE("compliance adjoint is the negated state") {
  Fixture f;
  const FieldVector v = solve_adjoint(f.sys, build_adjoint_rhs_compliance(f.sys, f.loads));
  CHECK((v + f.u).norm() <= 1e-12 * f.u.norm());
}

TEST_CASE("tensor A") {
  const Material m;
  const TensorA A = tensor_A(m);
  CHECK(A.prefactor == doctest::Approx(2.1 / 14.3).epsilon(1e-14));
  CHECK(A.iso == doctest::Approx(11.5625 * m.youngs_modulus).epsilon(1e-14));
  CHECK(A.shear == doctest::Approx(5.0 * m.youngs_modulus));
  Material incompressible;
  incompressible.poisson_ratio = 0.5;
  CHECK_THROWS_AS(tensor_A(incompressible), Error);

  const Eigen::Matrix3d V = A.voigt();
  CHECK((V - V.transpose()).norm() == 0.0);
  for (unsigned seed = 0; seed < 100; ++seed) {
    const FieldVector r = test::random_vector(6, seed);
    const Eigen::Vector3d a = r.head<3>(), b = r.tail<3>();
    const double ab = topological_density(a, b, A, 1.0), ba = topological_density(b, a, A, 1.0);
    CHECK(std::abs(ab - ba) <= 1e-12 * std::abs(ab));
    // Tensor contraction with engineering shear converted to tensor shear.
    const double ea[2][2] = {{a[0], 0.5 * a[2]}, {0.5 * a[2], a[1]}};
    const double eb[2][2] = {{b[0], 0.5 * b[2]}, {0.5 * b[2], b[1]}};
    double full = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) full += ea[i][j] * A.component(i, j, k, l) * eb[k][l];
    CHECK(full == doctest::Approx(ab).epsilon(1e-12));
  }
}

TEST_CASE("topological derivative") {
  const Mesh m = test::tension_mesh(6, 6);
  const ElasticSystem sys = assemble_system(m, LevelSetField::initial(m, 1.0), Material{}, HeavisideParams{});
  const LoadSpec loads;
  const FieldVector u = solve_state(sys, loads);
  const TensorA A = tensor_A(sys.material());
  const std::vector<double> none(m.num_elements(), 0.0);

  SUBCASE("zero adjoint leaves lambda") {
    const auto d = topological_derivative(sys, u, FieldVector::Zero(u.size()), 0.25, 0.0, none, A);
    for (double x : d) CHECK(x == doctest::Approx(0.25));
  }
  SUBCASE("self-adjoint field is positive under tension") {
    const auto d = topological_derivative(sys, u, u, 0.0, 0.0, none, A);
    for (double x : d) CHECK(x > 0.0);
    const auto shifted = topological_derivative(sys, u, u, 2.0, 0.0, none, A);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(shifted[i] - d[i] == doctest::Approx(2.0));
  }
  SUBCASE("stress term is weighted by mu") {
    const std::vector<double> ones(m.num_elements(), 1.0);
    const auto d0 = topological_derivative(sys, u, u, 0.0, 0.0, ones, A);
    const auto d1 = topological_derivative(sys, u, u, 0.0, 0.5, ones, A);
    for (std::size_t i = 0; i < d0.size(); ++i) CHECK(d1[i] - d0[i] == doctest::Approx(0.5));
  }
}

TEST_CASE("explicit stress term") {
  const Mesh m = test::tension_mesh(5, 5);
  const ElasticSystem sys = assemble_system(m, LevelSetField::initial(m, 1.0), Material{}, HeavisideParams{});
  const FieldVector u = solve_state(sys, LoadSpec{});
  for (double p : {2.0, 8.0}) {
    StressParams params;
    params.p = p;
    const StressField field = compute_stress_field(sys, u, params);
    const auto s = stress_sensitivity_term(field, params, m);
    // Uniform ratio r on unit area: (1/p) * r^(1-p) * r^p = r / p.
    for (double x : s) CHECK(x == doctest::Approx(field.ratio[0] / p).epsilon(1e-9));
  }
  const StressField zero = compute_stress_field(sys, FieldVector::Zero(u.size()), StressParams{});
  for (double x : stress_sensitivity_term(zero, StressParams{}, m)) CHECK(x >= 0.0);
}

TEST_CASE("sensitivity smoother") {
  CHECK_THROWS_AS(SensitivitySmoother(1.0), Error);
  SensitivitySmoother s(0.9);
  CHECK_FALSE(s.primed());
  const std::vector<double> a = {1.0, 2.0}, b = {11.0, 2.0};
  CHECK(s.apply(a) == a);
  const auto out = s.apply(b);
  CHECK(out[0] == doctest::Approx(2.0));
  CHECK(out[1] == doctest::Approx(2.0));
  SensitivitySmoother off(0.0);
  off.apply(a);
  CHECK(off.apply(b) == b);
}
