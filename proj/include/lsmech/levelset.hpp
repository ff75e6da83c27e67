#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lsmech/mesh.hpp"

namespace lsmech {

// Smoothed Heaviside mapping the level set to ersatz material density.
struct HeavisideParams {
  double w = 0.9;   // transition width in level-set units
  double d = 0.01;  // void stiffness ratio
  void validate() const;
  bool operator==(const HeavisideParams&) const = default;
};

double heaviside(double phi, const HeavisideParams& params);
double heaviside_derivative(double phi, const HeavisideParams& params);

// 1 on material (phi >= 0, boundary included), 0 on void.
int characteristic(double phi);

// Reaction-diffusion update dphi/dt = K (Ctilde * dtF + tau * lap(phi)).
struct RdeParams {
  double K = 1.0;
  double C = 0.8;
  double tau = 5.0e-5;
  double dt = 0.1;
  int substeps = 1;
  void validate() const;
  bool operator==(const RdeParams&) const = default;
};

// Nodal level-set values in [-1, 1]. Inactive nodes (touching no design
// element) are pinned to -1.
struct LevelSetField {
  std::vector<double> values;

  static LevelSetField initial(const Mesh& mesh, double value = 1.0);
  std::size_t size() const { return values.size(); }
};

// Per-element density: mean of the nodal Heaviside values; non-design
// elements carry d.
std::vector<double> element_density(const Mesh& mesh, const LevelSetField& phi,
                                    const HeavisideParams& params);
std::vector<double> nodal_density(const LevelSetField& phi, const HeavisideParams& params);

// Semi-implicit reaction-diffusion stepper. The diffusion operator
// (M/dt + K tau S) depends only on the mesh, so it is factored once and reused
// for every step of a run. Lumped mass, homogeneous Neumann boundary.
class ReactionDiffusion {
 public:
  ReactionDiffusion(const Mesh& mesh, const RdeParams& params);
  ~ReactionDiffusion();
  ReactionDiffusion(ReactionDiffusion&&) noexcept;
  ReactionDiffusion& operator=(ReactionDiffusion&&) noexcept;

  const RdeParams& params() const { return params_; }
  std::span<const double> lumped_mass() const { return mass_; }

  // C * |Omega_D| / integral |dtF|; zero for an identically zero field.
  double normalization(std::span<const double> dtF) const;

  // Advances phi by `substeps` steps with reaction term
  // Ctilde * dtF + offset, where Ctilde is taken from dtF alone so the offset
  // acts in normalized units. Result is clamped to [-1, 1].
  LevelSetField step(const LevelSetField& phi, std::span<const double> dtF, double offset = 0.0) const;

 private:
  struct Factorization;
  const Mesh* mesh_;
  RdeParams params_;
  std::vector<double> mass_;
  double design_measure_ = 0.0;
  std::unique_ptr<Factorization> factor_;
};

// One-shot form of ReactionDiffusion::step for callers without a cached
// stepper.
LevelSetField update_level_set(const Mesh& mesh, const LevelSetField& phi,
                               std::span<const double> dtF, const RdeParams& params);

}  // namespace lsmech
