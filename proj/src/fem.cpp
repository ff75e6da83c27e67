#include "lsmech/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <string>

#include "lsmech/error.hpp"

namespace lsmech {

void Material::validate() const {
  if (!(youngs_modulus > 0.0)) throw Error("Young's modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
    throw Error("Poisson ratio must lie in (-1, 0.5)");
  }
}

Eigen::Matrix3d plane_stress_tensor(const Material& m) {
  const double nu = m.poisson_ratio;
  const double c = m.youngs_modulus / (1.0 - nu * nu);
  Eigen::Matrix3d D;
  D << c, c * nu, 0.0,
       c * nu, c, 0.0,
       0.0, 0.0, c * (1.0 - nu) / 2.0;
  return D;
}

void LoadSpec::validate() const {
  const double n = std::hypot(output_direction.x, output_direction.y);
  if (std::abs(n - 1.0) > 1e-12) throw Error("output direction must be a unit vector");
}

FieldVector port_load(const Mesh& mesh, BoundaryTag tag, const Vec2& vector) {
  FieldVector f = FieldVector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
  for (const BoundaryEdge& edge : mesh.boundary_edges()) {
    if (edge.tag != tag) continue;
    const double half = 0.5 * mesh.edge_length(edge);
    for (int n : edge.nodes) {
      f[2 * n] += half * vector.x;
      f[2 * n + 1] += half * vector.y;
    }
  }
  return f;
}

struct ElasticSystem::Solver {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  bool direct = true;
};

namespace {

// Constrained DOFs must pin both translations and the in-plane rotation.
void check_rigid_body_modes(const Mesh& mesh, const std::vector<Eigen::Index>& reduced_index) {
  const double cx = 0.5 * mesh.domain().width();
  const double cy = 0.5 * mesh.domain().height();
  const double scale = mesh.domain().length;
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (!mesh.is_active(n)) continue;
    const Vec2& p = mesh.node(n);
    const double x = (p.x - cx) / scale;
    const double y = (p.y - cy) / scale;
    if (reduced_index[2 * n] < 0) {
      const Eigen::Vector3d r(1.0, 0.0, -y);
      gram += r * r.transpose();
    }
    if (reduced_index[2 * n + 1] < 0) {
      const Eigen::Vector3d r(0.0, 1.0, x);
      gram += r * r.transpose();
    }
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) {
    throw Error("unconstrained rigid body: boundary conditions do not remove all rigid-body modes");
  }
}

}  // namespace

ElasticSystem assemble_system(const Mesh& mesh, std::vector<double> density, const Material& material,
                              const SolverOptions& options) {
  material.validate();
  if (density.size() != mesh.num_elements()) throw Error("element density does not match mesh");
  ElasticSystem sys;
  sys.mesh_ = &mesh;
  sys.material_ = material;
  sys.D_ = plane_stress_tensor(material);
  sys.density_ = std::move(density);
  sys.options_ = options;

  const std::size_t ndof = 2 * mesh.num_nodes();
  std::vector<char> constrained(ndof, 0);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (!mesh.is_active(n)) constrained[2 * n] = constrained[2 * n + 1] = 1;
  }
  for (const BoundaryEdge& edge : mesh.boundary_edges()) {
    for (int n : edge.nodes) {
      if (edge.tag == BoundaryTag::Fixed) {
        constrained[2 * n] = constrained[2 * n + 1] = 1;
      } else if (edge.tag == BoundaryTag::Symmetry) {
        const bool vertical = edge.side == Side::Left || edge.side == Side::Right;
        constrained[2 * n + (vertical ? 0 : 1)] = 1;
      }
    }
  }
  sys.reduced_index_.assign(ndof, -1);
  for (std::size_t i = 0; i < ndof; ++i) {
    if (!constrained[i]) {
      sys.reduced_index_[i] = static_cast<Eigen::Index>(sys.free_dofs_.size());
      sys.free_dofs_.push_back(static_cast<Eigen::Index>(i));
    }
  }
  check_rigid_body_modes(mesh, sys.reduced_index_);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_elements() * 36);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.is_design(e)) continue;
    const Eigen::Matrix<double, 3, 6> B = sys.strain_displacement(e);
    const Eigen::Matrix<double, 6, 6> ke =
        (sys.density_[e] * mesh.geometry(e).area) * (B.transpose() * sys.D_ * B);
    const auto& t = mesh.triangle(e);
    for (int a = 0; a < 6; ++a) {
      const Eigen::Index ra = sys.reduced_index_[2 * t[a / 2] + a % 2];
      if (ra < 0) continue;
      for (int b = 0; b < 6; ++b) {
        const Eigen::Index rb = sys.reduced_index_[2 * t[b / 2] + b % 2];
        if (rb >= 0) trip.emplace_back(ra, rb, ke(a, b));
      }
    }
  }
  const auto nfree = static_cast<Eigen::Index>(sys.free_dofs_.size());
  sys.K_.resize(nfree, nfree);
  sys.K_.setFromTriplets(trip.begin(), trip.end());

  auto solver = std::make_shared<ElasticSystem::Solver>();
  solver->direct = sys.free_dofs_.size() <= options.direct_dof_limit;
  if (solver->direct) {
    solver->llt.compute(sys.K_);
    if (solver->llt.info() != Eigen::Success) {
      throw Error("unconstrained rigid body: stiffness matrix is not positive definite");
    }
  } else {
    solver->cg.setTolerance(0.01 * options.relative_tolerance);
    solver->cg.setMaxIterations(20 * nfree);
    solver->cg.compute(sys.K_);
    if (solver->cg.info() != Eigen::Success) throw Error("preconditioner setup failed");
  }
  sys.solver_ = std::move(solver);
  return sys;
}

ElasticSystem assemble_system(const Mesh& mesh, const LevelSetField& phi, const Material& material,
                              const HeavisideParams& heaviside, const SolverOptions& options) {
  heaviside.validate();
  return assemble_system(mesh, element_density(mesh, phi, heaviside), material, options);
}

FieldVector ElasticSystem::solve(const FieldVector& rhs) const {
  if (rhs.size() != static_cast<Eigen::Index>(num_dofs())) throw Error("right-hand side size mismatch");
  const auto nfree = static_cast<Eigen::Index>(free_dofs_.size());
  Eigen::VectorXd b(nfree);
  for (Eigen::Index i = 0; i < nfree; ++i) b[i] = rhs[free_dofs_[i]];
  FieldVector x = FieldVector::Zero(rhs.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;

  Eigen::VectorXd y = solver_->direct ? Eigen::VectorXd(solver_->llt.solve(b))
                                      : Eigen::VectorXd(solver_->cg.solve(b));
  const double residual = (K_ * y - b).norm() / bnorm;
  if (!std::isfinite(residual) || residual > options_.relative_tolerance) {
    throw SolverError("linear solve did not reach tolerance (relative residual " +
                          std::to_string(residual) + ")",
                      residual);
  }
  for (Eigen::Index i = 0; i < nfree; ++i) x[free_dofs_[i]] = y[i];
  return x;
}

FieldVector ElasticSystem::apply(const FieldVector& u) const {
  const auto nfree = static_cast<Eigen::Index>(free_dofs_.size());
  Eigen::VectorXd ur(nfree);
  for (Eigen::Index i = 0; i < nfree; ++i) ur[i] = u[free_dofs_[i]];
  const Eigen::VectorXd kr = K_ * ur;
  FieldVector out = FieldVector::Zero(u.size());
  for (Eigen::Index i = 0; i < nfree; ++i) out[free_dofs_[i]] = kr[i];
  return out;
}

Eigen::Matrix<double, 3, 6> ElasticSystem::strain_displacement(std::size_t element) const {
  const ElementGeometry& g = mesh_->geometry(element);
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int a = 0; a < 3; ++a) {
    B(0, 2 * a) = g.grad[a].x;
    B(1, 2 * a + 1) = g.grad[a].y;
    B(2, 2 * a) = g.grad[a].y;
    B(2, 2 * a + 1) = g.grad[a].x;
  }
  return B;
}

Eigen::Matrix<double, 6, 1> ElasticSystem::gather(const FieldVector& u, std::size_t element) const {
  const auto& t = mesh_->triangle(element);
  Eigen::Matrix<double, 6, 1> ue;
  for (int a = 0; a < 3; ++a) {
    ue[2 * a] = u[2 * t[a]];
    ue[2 * a + 1] = u[2 * t[a] + 1];
  }
  return ue;
}

FieldVector solve_state(const ElasticSystem& system, const LoadSpec& loads) {
  loads.validate();
  return system.solve(port_load(system.mesh(), BoundaryTag::Input, loads.traction));
}

FieldVector solve_adjoint(const ElasticSystem& system, const FieldVector& rhs) { return system.solve(rhs); }

Eigen::Vector3d element_strain(const ElasticSystem& system, const FieldVector& u, std::size_t element) {
  return system.strain_displacement(element) * system.gather(u, element);
}

ElementStress element_stress(const ElasticSystem& system, const FieldVector& u, std::size_t element,
                             VmConvention convention) {
  ElementStress s;
  s.sigma = system.constitutive() * element_strain(system, u, element);
  s.density = system.element_density()[element];
  s.von_mises = von_mises(s.sigma, convention);
  s.relaxed_von_mises = relaxed_von_mises(s.von_mises, s.density);
  return s;
}

}  // namespace lsmech
