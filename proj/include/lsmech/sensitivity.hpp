#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "lsmech/fem.hpp"
#include "lsmech/objective.hpp"
#include "lsmech/stress.hpp"

namespace lsmech {

// Gradient of the relaxed p-norm aggregate with respect to nodal
// displacements (constrained entries included; the solver ignores them).
FieldVector pnorm_gradient(const ElasticSystem& system, const FieldVector& u, const StressField& field,
                           const StressParams& params);

// rhs = c_out * f_out - c_in * f_in - mu * stress_gradient, with f_out, f_in
// the consistent port loads of e and t.
FieldVector assemble_adjoint_rhs(const ElasticSystem& system, const LoadSpec& loads, double c_out, double c_in,
                                 double mu, const FieldVector& stress_gradient);

// Adjoint load for maximizing J - mu * sigma_pn, i.e. the exact u-derivative
// of that functional. Throws when E + beta vanishes.
FieldVector build_adjoint_rhs_effective_energy(const ElasticSystem& system, const FieldVector& u, double J,
                                               double W, double E, const Normalization& norm,
                                               const LoadSpec& loads, const StressField& field,
                                               const StressParams& stress, const ObjectiveParams& objective,
                                               double mu);

// Adjoint load for minimizing sigma_pn: -d sigma_pn / du.
FieldVector build_adjoint_rhs_pnorm(const ElasticSystem& system, const FieldVector& u, const StressField& field,
                                    const StressParams& params);

// Adjoint load for minimizing mean compliance: -f_in, so v = -u.
FieldVector build_adjoint_rhs_compliance(const ElasticSystem& system, const LoadSpec& loads);

// Isotropic fourth-order tensor of the hole-insertion topological derivative:
//   A = prefactor * (iso * I (x) I + shear * (d_ik d_jl + d_il d_jk)),
//   prefactor = 3(1-nu) / (2(1+nu)(7-5nu)),
//   iso = -(1 - 14nu + 15nu^2) E / (1-2nu)^2, shear = 5E.
struct TensorA {
  double prefactor = 0.0;
  double iso = 0.0;
  double shear = 0.0;

  double component(int i, int j, int k, int l) const;
  // Matrix acting on engineering strain vectors (ex, ey, gxy).
  Eigen::Matrix3d voigt() const;
};

TensorA tensor_A(const Material& material);

// h * eps(v) : A : eps(u) for engineering strain vectors.
double topological_density(const Eigen::Vector3d& strain_v, const Eigen::Vector3d& strain_u, const TensorA& A,
                           double density);

// Per-element h * eps(v) : A : eps(u); zero on non-design elements.
std::vector<double> element_topological_derivative(const ElasticSystem& system, const FieldVector& u,
                                                   const FieldVector& v, const TensorA& A);

// Area-weighted average of element values onto nodes (design elements only).
std::vector<double> project_to_nodes(const Mesh& mesh, std::span<const double> element_values);

// Nodal d_tL = project(h eps(v):A:eps(u) + lambda + mu * stress_term).
std::vector<double> topological_derivative(const ElasticSystem& system, const FieldVector& u,
                                           const FieldVector& v, double lambda, double mu,
                                           std::span<const double> stress_term, const TensorA& A);

// Explicit stress term (1/p) * I^(1/p - 1) * ratio^p per element, where I is
// the area-weighted integral of ratio^p. mu is applied by the caller.
std::vector<double> stress_sensitivity_term(const StressField& field, const StressParams& params,
                                            const Mesh& mesh);

// Exponential moving average across iterations: the first call passes the
// input through, later calls return (1 - w_p) * current + w_p * previous.
class SensitivitySmoother {
 public:
  explicit SensitivitySmoother(double weight = 0.9);
  double weight() const { return weight_; }
  bool primed() const { return previous_.has_value(); }
  std::vector<double> apply(std::span<const double> current);
  void reset() { previous_.reset(); }
  const std::optional<std::vector<double>>& previous() const { return previous_; }
  void restore(std::vector<double> previous) { previous_ = std::move(previous); }

 private:
  double weight_;
  std::optional<std::vector<double>> previous_;
};

}  // namespace lsmech
