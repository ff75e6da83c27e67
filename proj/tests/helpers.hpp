#pragma once

#include <random>
#include <vector>

#include "lsmech/fem.hpp"
#include "lsmech/levelset.hpp"
#include "lsmech/mesh.hpp"

namespace lsmech::test {

inline RectDomain unit_domain(int nx, int ny) {
  RectDomain d;
  d.divisions_x = nx;
  d.divisions_y = ny;
  return d;
}

// Unit square: left roller, bottom roller, traction on the whole right side.
inline Mesh tension_mesh(int nx, int ny, double width = 1.0, double height = 1.0) {
  RectDomain d = unit_domain(nx, ny);
  d.width_frac = width;
  d.height_frac = height;
  const std::vector<Port> ports = {{Side::Left, 0.0, 1.0, BoundaryTag::Symmetry},
                                   {Side::Bottom, 0.0, 1.0, BoundaryTag::Symmetry},
                                   {Side::Right, 0.0, 1.0, BoundaryTag::Input}};
  return tag_boundaries(build_structured_mesh(d), ports);
}

// Cantilever-like mesh with all four tags, for sensitivity checks.
inline Mesh mechanism_mesh(int nx, int ny) {
  RectDomain d = unit_domain(nx, ny);
  d.height_frac = 0.5;
  const std::vector<Port> ports = {{Side::Left, 0.8, 1.0, BoundaryTag::Fixed},
                                   {Side::Left, 0.0, 0.2, BoundaryTag::Input},
                                   {Side::Right, 0.0, 0.2, BoundaryTag::Output},
                                   {Side::Bottom, 0.0, 1.0, BoundaryTag::Symmetry}};
  return tag_boundaries(build_structured_mesh(d), ports);
}

inline LevelSetField random_phi(const Mesh& mesh, unsigned seed, double lo = -0.5, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  LevelSetField phi = LevelSetField::initial(mesh);
  for (double& v : phi.values) v = dist(rng);
  return phi;
}

inline FieldVector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  FieldVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return v;
}

}  // namespace lsmech::test
