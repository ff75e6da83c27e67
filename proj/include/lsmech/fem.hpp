#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "lsmech/levelset.hpp"
#include "lsmech/mesh.hpp"
#include "lsmech/stress.hpp"

namespace lsmech {

struct Material {
  double youngs_modulus = 210.0e9;
  double poisson_ratio = 0.3;
  void validate() const;
  bool operator==(const Material&) const = default;
};

// Plane-stress constitutive matrix on engineering strain (ex, ey, gxy).
Eigen::Matrix3d plane_stress_tensor(const Material& material);

struct LoadSpec {
  Vec2 traction{1.0e7, 0.0};          // N/m on Input edges
  Vec2 output_direction{-1.0, 0.0};   // unit vector on Output edges
  void validate() const;
  bool operator==(const LoadSpec&) const = default;
};

// Nodal 2D vector field, interleaved as (x0, y0, x1, y1, ...).
using FieldVector = Eigen::VectorXd;

// Consistent (trapezoidal) nodal load of a uniform vector density on the
// edges carrying `tag`. Its dot product with u is the port integral of
// vector . u.
FieldVector port_load(const Mesh& mesh, BoundaryTag tag, const Vec2& vector);

struct SolverOptions {
  // Systems above this many free DOFs use preconditioned CG instead of a
  // sparse Cholesky factorization.
  std::size_t direct_dof_limit = 200000;
  double relative_tolerance = 1.0e-10;
};

// Ersatz-material elasticity operator with Dirichlet/symmetry constraints
// eliminated. Holds the factorization, so state and adjoint solves within one
// iteration share it.
class ElasticSystem {
 public:
  const Mesh& mesh() const { return *mesh_; }
  const Material& material() const { return material_; }
  const Eigen::Matrix3d& constitutive() const { return D_; }
  std::span<const double> element_density() const { return density_; }

  std::size_t num_dofs() const { return 2 * mesh_->num_nodes(); }
  std::size_t num_free_dofs() const { return free_dofs_.size(); }
  bool is_constrained(std::size_t dof) const { return reduced_index_[dof] < 0; }

  // Solves K x = rhs on the free DOFs; constrained entries of x are zero.
  FieldVector solve(const FieldVector& rhs) const;
  // K u with constrained rows and columns removed.
  FieldVector apply(const FieldVector& u) const;
  double energy(const FieldVector& u) const { return u.dot(apply(u)); }

  // 3x6 strain-displacement matrix of one element.
  Eigen::Matrix<double, 3, 6> strain_displacement(std::size_t element) const;
  Eigen::Matrix<double, 6, 1> gather(const FieldVector& u, std::size_t element) const;

  friend ElasticSystem assemble_system(const Mesh& mesh, std::vector<double> density,
                                       const Material& material, const SolverOptions& options);

 private:
  struct Solver;
  const Mesh* mesh_ = nullptr;
  Material material_;
  Eigen::Matrix3d D_;
  std::vector<double> density_;
  std::vector<Eigen::Index> free_dofs_;
  std::vector<Eigen::Index> reduced_index_;
  Eigen::SparseMatrix<double> K_;
  SolverOptions options_;
  std::shared_ptr<const Solver> solver_;
};

// Rejects constraint sets that leave a rigid-body mode free.
ElasticSystem assemble_system(const Mesh& mesh, std::vector<double> density, const Material& material,
                              const SolverOptions& options = {});
ElasticSystem assemble_system(const Mesh& mesh, const LevelSetField& phi, const Material& material,
                              const HeavisideParams& heaviside, const SolverOptions& options = {});

FieldVector solve_state(const ElasticSystem& system, const LoadSpec& loads);
FieldVector solve_adjoint(const ElasticSystem& system, const FieldVector& rhs);

struct ElementStress {
  Eigen::Vector3d sigma = Eigen::Vector3d::Zero();
  double density = 1.0;
  double von_mises = 0.0;
  double relaxed_von_mises = 0.0;
};

Eigen::Vector3d element_strain(const ElasticSystem& system, const FieldVector& u, std::size_t element);
ElementStress element_stress(const ElasticSystem& system, const FieldVector& u, std::size_t element,
                             VmConvention convention = VmConvention::Conventional);

}  // namespace lsmech
