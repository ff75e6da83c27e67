#include "lsmech/objective.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include "lsmech/error.hpp"

namespace lsmech {

void ObjectiveParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw Error("objective parameters need alpha >= 0, beta >= 0, alpha + beta > 0");
  }
}

double port_integral(const Mesh& mesh, BoundaryTag tag, const Vec2& vector, const FieldVector& u) {
  double sum = 0.0;
  for (const BoundaryEdge& edge : mesh.boundary_edges()) {
    if (edge.tag != tag) continue;
    const double half = 0.5 * mesh.edge_length(edge);
    for (int n : edge.nodes) sum += half * (vector.x * u[2 * n] + vector.y * u[2 * n + 1]);
  }
  return sum;
}

double port_abs_integral(const Mesh& mesh, BoundaryTag tag, const Vec2& vector, const FieldVector& u) {
  double sum = 0.0;
  for (const BoundaryEdge& edge : mesh.boundary_edges()) {
    if (edge.tag != tag) continue;
    const double half = 0.5 * mesh.edge_length(edge);
    for (int n : edge.nodes) sum += half * std::abs(vector.x * u[2 * n] + vector.y * u[2 * n + 1]);
  }
  return sum;
}

Normalization init_normalization(const FieldVector& u0, const Mesh& mesh, const LoadSpec& loads) {
  Normalization n;
  n.W_bar = port_abs_integral(mesh, BoundaryTag::Output, loads.output_direction, u0);
  n.E_bar = port_abs_integral(mesh, BoundaryTag::Input, loads.traction, u0);
  if (!(n.W_bar > 0.0) || !(n.E_bar > 0.0)) {
    throw Error("degenerate normalization: initial port displacement vanishes");
  }
  return n;
}

double compute_W(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads, const Normalization& norm) {
  return port_integral(mesh, BoundaryTag::Output, loads.output_direction, u) / norm.W_bar;
}

double compute_E(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads, const Normalization& norm) {
  return port_integral(mesh, BoundaryTag::Input, loads.traction, u) / norm.E_bar;
}

double compute_J(double W, double E, const ObjectiveParams& params) {
  const double denom = E + params.beta;
  if (denom == 0.0) throw Error("effective energy undefined: E + beta = 0");
  return (W + params.alpha) / denom;
}

PortDisplacements evaluation_displacements(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads,
                                           PortMeasure measure, double mirror) {
  PortDisplacements d;
  const double out = port_integral(mesh, BoundaryTag::Output, loads.output_direction, u);
  if (measure == PortMeasure::Integral) {
    d.U_o = mirror * out;
  } else {
    const double len = mesh.tagged_length(BoundaryTag::Output);
    d.U_o = len > 0.0 ? out / len : 0.0;
  }
  const double tnorm = std::hypot(loads.traction.x, loads.traction.y);
  const double weight = tnorm * mesh.tagged_length(BoundaryTag::Input);
  d.U_i = weight > 0.0 ? port_integral(mesh, BoundaryTag::Input, loads.traction, u) / weight : 0.0;
  return d;
}

double volume_fraction(const Mesh& mesh, std::span<const double> density) {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.is_design(e)) sum += mesh.geometry(e).area * density[e];
  }
  return sum / mesh.design_area();
}

double volume_fraction(const Mesh& mesh, const LevelSetField& phi, const HeavisideParams& heaviside) {
  const std::vector<double> h = element_density(mesh, phi, heaviside);
  return volume_fraction(mesh, h);
}

double mean_compliance(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads) {
  return port_integral(mesh, BoundaryTag::Input, loads.traction, u);
}

bool input_connected_to_support(const Mesh& mesh, std::span<const double> density, double threshold) {
  const std::size_t nn = mesh.num_nodes();
  std::vector<char> input_node(nn, 0), fixed_node(nn, 0);
  for (const BoundaryEdge& edge : mesh.boundary_edges()) {
    for (int n : edge.nodes) {
      if (edge.tag == BoundaryTag::Input) input_node[n] = 1;
      if (edge.tag == BoundaryTag::Fixed) fixed_node[n] = 1;
    }
  }
  // Node -> material elements adjacency in CSR form.
  std::vector<int> offset(nn + 1, 0);
  auto is_material = [&](std::size_t e) { return mesh.is_design(e) && density[e] >= threshold; };
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!is_material(e)) continue;
    for (int n : mesh.triangle(e)) ++offset[n + 1];
  }
  for (std::size_t n = 0; n < nn; ++n) offset[n + 1] += offset[n];
  std::vector<int> adj(offset[nn]);
  std::vector<int> fill(offset.begin(), offset.end() - 1);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!is_material(e)) continue;
    for (int n : mesh.triangle(e)) adj[fill[n]++] = static_cast<int>(e);
  }

  std::vector<char> seen(mesh.num_elements(), 0);
  std::queue<int> frontier;
  for (std::size_t n = 0; n < nn; ++n) {
    if (!input_node[n]) continue;
    for (int k = offset[n]; k < offset[n + 1]; ++k) {
      if (!seen[adj[k]]) {
        seen[adj[k]] = 1;
        frontier.push(adj[k]);
      }
    }
  }
  while (!frontier.empty()) {
    const int e = frontier.front();
    frontier.pop();
    for (int n : mesh.triangle(e)) {
      if (fixed_node[n]) return true;
      for (int k = offset[n]; k < offset[n + 1]; ++k) {
        if (!seen[adj[k]]) {
          seen[adj[k]] = 1;
          frontier.push(adj[k]);
        }
      }
    }
  }
  return false;
}

}  // namespace lsmech
