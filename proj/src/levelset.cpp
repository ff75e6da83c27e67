#include "lsmech/levelset.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "lsmech/error.hpp"

namespace lsmech {

void HeavisideParams::validate() const {
  if (!(w > 0.0 && w <= 1.0)) throw Error("heaviside width w must lie in (0, 1]");
  if (!(d > 0.0 && d < 1.0)) throw Error("void stiffness ratio d must lie in (0, 1)");
}

double heaviside(double phi, const HeavisideParams& p) {
  if (phi < -p.w) return p.d;
  if (phi > p.w) return 1.0;
  const double s = phi / p.w;
  const double s2 = s * s;
  const double blend = 0.5 + s * (15.0 / 16.0 - s2 * (5.0 / 8.0 - 3.0 / 16.0 * s2));
  return blend * (1.0 - p.d) + p.d;
}

double heaviside_derivative(double phi, const HeavisideParams& p) {
  if (phi < -p.w || phi > p.w) return 0.0;
  const double s2 = (phi / p.w) * (phi / p.w);
  return (1.0 - p.d) / p.w * (15.0 / 16.0 - s2 * (15.0 / 8.0 - 15.0 / 16.0 * s2));
}

int characteristic(double phi) { return phi >= 0.0 ? 1 : 0; }

void RdeParams::validate() const {
  if (!(K > 0.0) || !(C > 0.0) || !(tau > 0.0) || !(dt > 0.0)) {
    throw Error("reaction-diffusion coefficients K, C, tau, dt must be positive");
  }
  if (substeps < 1) throw Error("substeps must be at least 1");
}

LevelSetField LevelSetField::initial(const Mesh& mesh, double value) {
  LevelSetField f;
  f.values.resize(mesh.num_nodes());
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    f.values[n] = !mesh.is_active(n) ? -1.0 : mesh.is_pinned(n) ? 1.0 : std::clamp(value, -1.0, 1.0);
  }
  return f;
}

std::vector<double> nodal_density(const LevelSetField& phi, const HeavisideParams& params) {
  std::vector<double> h(phi.values.size());
  std::transform(phi.values.begin(), phi.values.end(), h.begin(),
                 [&](double v) { return heaviside(v, params); });
  return h;
}

std::vector<double> element_density(const Mesh& mesh, const LevelSetField& phi,
                                    const HeavisideParams& params) {
  if (phi.size() != mesh.num_nodes()) throw Error("level set does not match mesh");
  const std::vector<double> hn = nodal_density(phi, params);
  std::vector<double> he(mesh.num_elements());
  for (std::size_t e = 0; e < he.size(); ++e) {
    const auto& t = mesh.triangle(e);
    he[e] = mesh.is_design(e) ? (hn[t[0]] + hn[t[1]] + hn[t[2]]) / 3.0 : params.d;
  }
  return he;
}

struct ReactionDiffusion::Factorization {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

ReactionDiffusion::ReactionDiffusion(const Mesh& mesh, const RdeParams& params)
    : mesh_(&mesh), params_(params), factor_(std::make_unique<Factorization>()) {
  params_.validate();
  const std::size_t n = mesh.num_nodes();
  mass_.assign(n, 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_elements() * 9 + n);
  const double diffusion = params_.K * params_.tau;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.is_design(e)) continue;
    const auto& t = mesh.triangle(e);
    const ElementGeometry& g = mesh.geometry(e);
    for (int a = 0; a < 3; ++a) {
      mass_[t[a]] += g.area / 3.0;
      for (int b = 0; b < 3; ++b) {
        const double s = g.area * (g.grad[a].x * g.grad[b].x + g.grad[a].y * g.grad[b].y);
        trip.emplace_back(t[a], t[b], diffusion * s);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    design_measure_ += mass_[i];
    // Inactive nodes decouple with an identity row.
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), mesh.is_active(i) ? mass_[i] / params_.dt : 1.0);
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trip.begin(), trip.end());
  factor_->llt.compute(A);
  if (factor_->llt.info() != Eigen::Success) {
    throw Error("reaction-diffusion operator factorization failed");
  }
}

ReactionDiffusion::~ReactionDiffusion() = default;
ReactionDiffusion::ReactionDiffusion(ReactionDiffusion&&) noexcept = default;
ReactionDiffusion& ReactionDiffusion::operator=(ReactionDiffusion&&) noexcept = default;

double ReactionDiffusion::normalization(std::span<const double> dtF) const {
  double abs_integral = 0.0;
  for (std::size_t i = 0; i < dtF.size(); ++i) abs_integral += mass_[i] * std::abs(dtF[i]);
  if (abs_integral == 0.0) return 0.0;
  return params_.C * design_measure_ / abs_integral;
}

LevelSetField ReactionDiffusion::step(const LevelSetField& phi, std::span<const double> dtF,
                                      double offset) const {
  const std::size_t n = mesh_->num_nodes();
  if (phi.size() != n || dtF.size() != n) throw Error("level-set update size mismatch");
  for (double v : dtF) {
    if (!std::isfinite(v)) throw Error("topological derivative contains non-finite values");
  }
  const double ctilde = normalization(dtF);
  LevelSetField cur = phi;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (int s = 0; s < params_.substeps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      rhs[static_cast<Eigen::Index>(i)] =
          mesh_->is_active(i)
              ? mass_[i] * (cur.values[i] / params_.dt + params_.K * (ctilde * dtF[i] + offset))
              : -1.0;
    }
    const Eigen::VectorXd next = factor_->llt.solve(rhs);
    if (factor_->llt.info() != Eigen::Success) throw Error("reaction-diffusion solve failed");
    for (std::size_t i = 0; i < n; ++i) {
      if (!mesh_->is_active(i)) {
        cur.values[i] = -1.0;
      } else if (mesh_->is_pinned(i)) {
        cur.values[i] = 1.0;
      } else {
        cur.values[i] = std::clamp(next[static_cast<Eigen::Index>(i)], -1.0, 1.0);
      }
    }
  }
  return cur;
}

LevelSetField update_level_set(const Mesh& mesh, const LevelSetField& phi, std::span<const double> dtF,
                               const RdeParams& params) {
  return ReactionDiffusion(mesh, params).step(phi, dtF);
}

}  // namespace lsmech
