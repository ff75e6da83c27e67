#pragma once

#include <Eigen/Core>
#include <vector>

namespace lsmech {

class ElasticSystem;
class Mesh;

// Plane-stress von Mises conventions. Conventional: sqrt(sx^2 - sx sy + sy^2
// + 3 txy^2). PaperLiteral: sqrt(sigma : B sigma) with B = 3 I4 - I (x) I,
// which is sqrt(2) times the conventional value.
enum class VmConvention { Conventional, PaperLiteral };

struct StressParams {
  double sigma_max = 2.0e7;
  double p = 2.0;
  VmConvention convention = VmConvention::Conventional;
  void validate() const;
  bool operator==(const StressParams&) const = default;
};

// Floor applied under the square root so the stress gradient stays finite.
inline constexpr double kZeroStressGuard = 1.0e-30;

// Quadratic form Q with sigma_vm^2 = s^T Q s for s = (sx, sy, txy).
Eigen::Matrix3d von_mises_form(VmConvention convention);
double von_mises(const Eigen::Vector3d& sigma, VmConvention convention);
double relaxed_von_mises(double von_mises, double density);

// Constant per-element stress state of a solved displacement field.
struct StressField {
  std::vector<Eigen::Vector3d> sigma;  // full-material stress D B u_e
  std::vector<double> density;         // h
  std::vector<double> von_mises;       // sigma_vm (guarded)
  std::vector<double> relaxed;         // h * sigma_vm
  std::vector<double> relaxation;      // Phi = h^(1/2)
  std::vector<double> ratio;           // relaxed / (Phi * sigma_max)
};

StressField compute_stress_field(const ElasticSystem& system, const Eigen::VectorXd& u,
                                 const StressParams& params);

// Area-weighted integral of ratio^p over design elements.
double pnorm_integral(const StressField& field, const StressParams& params, const Mesh& mesh);
// (integral of ratio^p)^(1/p) over the design domain.
double pnorm_aggregate(const StressField& field, const StressParams& params, const Mesh& mesh);
double stress_constraint(double pnorm);

double max_stress_ratio(const StressField& field, const Mesh& mesh);
// Largest relaxed von Mises stress over design elements.
double max_relaxed_von_mises(const StressField& field, const Mesh& mesh);

}  // namespace lsmech
