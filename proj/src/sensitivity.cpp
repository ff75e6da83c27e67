#include "lsmech/sensitivity.hpp"

#include <cmath>

#include "lsmech/error.hpp"

namespace lsmech {

FieldVector pnorm_gradient(const ElasticSystem& system, const FieldVector& /*u*/, const StressField& field,
                           const StressParams& params) {
  const Mesh& mesh = system.mesh();
  FieldVector g = FieldVector::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  const double integral = pnorm_integral(field, params, mesh);
  if (integral <= 0.0) return g;
  const double outer = std::pow(integral, 1.0 / params.p - 1.0);
  const Eigen::Matrix3d QD = von_mises_form(params.convention) * system.constitutive();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.is_design(e)) continue;
    // d ratio = sqrt(h) / sigma_max * (sigma^T Q D B du) / sigma_vm
    const double coeff = outer * mesh.geometry(e).area * std::pow(field.ratio[e], params.p - 1.0) *
                         field.relaxation[e] / (params.sigma_max * field.von_mises[e]);
    if (coeff == 0.0) continue;
    const Eigen::Matrix<double, 1, 6> row =
        coeff * field.sigma[e].transpose() * QD * system.strain_displacement(e);
    const auto& t = mesh.triangle(e);
    for (int a = 0; a < 3; ++a) {
      g[2 * t[a]] += row[2 * a];
      g[2 * t[a] + 1] += row[2 * a + 1];
    }
  }
  return g;
}

FieldVector assemble_adjoint_rhs(const ElasticSystem& system, const LoadSpec& loads, double c_out, double c_in,
                                 double mu, const FieldVector& stress_gradient) {
  const Mesh& mesh = system.mesh();
  FieldVector rhs = c_out * port_load(mesh, BoundaryTag::Output, loads.output_direction) -
                    c_in * port_load(mesh, BoundaryTag::Input, loads.traction);
  if (mu != 0.0) rhs -= mu * stress_gradient;
  return rhs;
}

FieldVector build_adjoint_rhs_effective_energy(const ElasticSystem& system, const FieldVector& u, double J,
                                               double /*W*/, double E, const Normalization& norm,
                                               const LoadSpec& loads, const StressField& field,
                                               const StressParams& stress, const ObjectiveParams& objective,
                                               double mu) {
  const double denom = E + objective.beta;
  if (denom == 0.0 || !std::isfinite(J)) {
    throw Error("adjoint load undefined: E + beta = 0 (degenerate design)");
  }
  // dJ/du = (f_out / W_bar - J f_in / E_bar) / (E + beta)
  const double c_out = 1.0 / (denom * norm.W_bar);
  const bool product = objective.negative_numerator == NegativeNumerator::Product && J < 0.0;
  const double c_in = (product ? -J : J) / (denom * norm.E_bar);
  const FieldVector g = mu != 0.0 ? pnorm_gradient(system, u, field, stress)
                                  : FieldVector::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  return assemble_adjoint_rhs(system, loads, c_out, c_in, mu, g);
}

FieldVector build_adjoint_rhs_pnorm(const ElasticSystem& system, const FieldVector& u, const StressField& field,
                                    const StressParams& params) {
  return -pnorm_gradient(system, u, field, params);
}

FieldVector build_adjoint_rhs_compliance(const ElasticSystem& system, const LoadSpec& loads) {
  return -port_load(system.mesh(), BoundaryTag::Input, loads.traction);
}

double TensorA::component(int i, int j, int k, int l) const {
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  return prefactor * (iso * delta(i, j) * delta(k, l) + shear * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)));
}

Eigen::Matrix3d TensorA::voigt() const {
  Eigen::Matrix3d V;
  V << iso + 2.0 * shear, iso, 0.0,
       iso, iso + 2.0 * shear, 0.0,
       0.0, 0.0, shear;
  return prefactor * V;
}

TensorA tensor_A(const Material& material) {
  const double nu = material.poisson_ratio;
  const double E = material.youngs_modulus;
  if (nu == 0.5) throw Error("tensor A undefined for nu = 0.5");
  material.validate();
  TensorA A;
  A.prefactor = 3.0 * (1.0 - nu) / (2.0 * (1.0 + nu) * (7.0 - 5.0 * nu));
  A.iso = -(1.0 - 14.0 * nu + 15.0 * nu * nu) * E / ((1.0 - 2.0 * nu) * (1.0 - 2.0 * nu));
  A.shear = 5.0 * E;
  return A;
}

double topological_density(const Eigen::Vector3d& strain_v, const Eigen::Vector3d& strain_u, const TensorA& A,
                           double density) {
  return density * strain_v.dot(A.voigt() * strain_u);
}

std::vector<double> element_topological_derivative(const ElasticSystem& system, const FieldVector& u,
                                                   const FieldVector& v, const TensorA& A) {
  const Mesh& mesh = system.mesh();
  const Eigen::Matrix3d V = A.voigt();
  std::vector<double> out(mesh.num_elements(), 0.0);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.is_design(e)) continue;
    const Eigen::Vector3d eu = element_strain(system, u, e);
    const Eigen::Vector3d ev = element_strain(system, v, e);
    out[e] = system.element_density()[e] * ev.dot(V * eu);
  }
  return out;
}

std::vector<double> project_to_nodes(const Mesh& mesh, std::span<const double> values) {
  std::vector<double> num(mesh.num_nodes(), 0.0), den(mesh.num_nodes(), 0.0);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.is_design(e)) continue;
    const double a = mesh.geometry(e).area;
    for (int n : mesh.triangle(e)) {
      num[n] += a * values[e];
      den[n] += a;
    }
  }
  for (std::size_t n = 0; n < num.size(); ++n) num[n] = den[n] > 0.0 ? num[n] / den[n] : 0.0;
  return num;
}

std::vector<double> topological_derivative(const ElasticSystem& system, const FieldVector& u,
                                           const FieldVector& v, double lambda, double mu,
                                           std::span<const double> stress_term, const TensorA& A) {
  std::vector<double> el = element_topological_derivative(system, u, v, A);
  const Mesh& mesh = system.mesh();
  for (std::size_t e = 0; e < el.size(); ++e) {
    if (!mesh.is_design(e)) continue;
    el[e] += lambda;
    if (mu != 0.0) el[e] += mu * stress_term[e];
  }
  return project_to_nodes(mesh, el);
}

std::vector<double> stress_sensitivity_term(const StressField& field, const StressParams& params,
                                            const Mesh& mesh) {
  std::vector<double> out(mesh.num_elements(), 0.0);
  const double integral = pnorm_integral(field, params, mesh);
  if (integral <= 0.0) return out;
  const double outer = std::pow(integral, 1.0 / params.p - 1.0) / params.p;
  for (std::size_t e = 0; e < out.size(); ++e) {
    if (mesh.is_design(e)) out[e] = outer * std::pow(field.ratio[e], params.p);
  }
  return out;
}

SensitivitySmoother::SensitivitySmoother(double weight) : weight_(weight) {
  if (!(weight >= 0.0 && weight < 1.0)) throw Error("smoothing weight w_p must lie in [0, 1)");
}

std::vector<double> SensitivitySmoother::apply(std::span<const double> current) {
  std::vector<double> out(current.begin(), current.end());
  if (previous_ && previous_->size() == out.size()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - weight_) * out[i] + weight_ * (*previous_)[i];
  }
  previous_ = out;
  return out;
}

}  // namespace lsmech
