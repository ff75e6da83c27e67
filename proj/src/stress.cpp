#include "lsmech/stress.hpp"

#include <algorithm>
#include <cmath>

#include "lsmech/error.hpp"
#include "lsmech/fem.hpp"

namespace lsmech {

void StressParams::validate() const {
  if (!(sigma_max > 0.0)) throw Error("sigma_max must be positive");
  if (!(p >= 1.0)) throw Error("p-norm exponent must be at least 1");
}

Eigen::Matrix3d von_mises_form(VmConvention convention) {
  Eigen::Matrix3d Q;
  Q << 1.0, -0.5, 0.0,
       -0.5, 1.0, 0.0,
       0.0, 0.0, 3.0;
  return convention == VmConvention::PaperLiteral ? Eigen::Matrix3d(2.0 * Q) : Q;
}

double von_mises(const Eigen::Vector3d& sigma, VmConvention convention) {
  const double q = sigma.dot(von_mises_form(convention) * sigma);
  return std::sqrt(std::max(q, kZeroStressGuard * kZeroStressGuard));
}

double relaxed_von_mises(double vm, double density) { return density * vm; }

StressField compute_stress_field(const ElasticSystem& system, const Eigen::VectorXd& u,
                                 const StressParams& params) {
  params.validate();
  const Mesh& mesh = system.mesh();
  const std::size_t ne = mesh.num_elements();
  StressField f;
  f.sigma.resize(ne);
  f.density.resize(ne);
  f.von_mises.resize(ne);
  f.relaxed.resize(ne);
  f.relaxation.resize(ne);
  f.ratio.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const ElementStress s = element_stress(system, u, e, params.convention);
    f.sigma[e] = s.sigma;
    f.density[e] = s.density;
    f.von_mises[e] = s.von_mises;
    f.relaxed[e] = s.relaxed_von_mises;
    f.relaxation[e] = std::sqrt(s.density);
    f.ratio[e] = f.relaxed[e] / (f.relaxation[e] * params.sigma_max);
  }
  return f;
}

double pnorm_integral(const StressField& field, const StressParams& params, const Mesh& mesh) {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.is_design(e)) sum += mesh.geometry(e).area * std::pow(field.ratio[e], params.p);
  }
  return sum;
}

double pnorm_aggregate(const StressField& field, const StressParams& params, const Mesh& mesh) {
  return std::pow(pnorm_integral(field, params, mesh), 1.0 / params.p);
}

double stress_constraint(double pnorm) { return pnorm - 1.0; }

double max_stress_ratio(const StressField& field, const Mesh& mesh) {
  double m = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.is_design(e)) m = std::max(m, field.ratio[e]);
  }
  return m;
}

double max_relaxed_von_mises(const StressField& field, const Mesh& mesh) {
  double m = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.is_design(e)) m = std::max(m, field.relaxed[e]);
  }
  return m;
}

}  // namespace lsmech
