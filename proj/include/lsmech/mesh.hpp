#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lsmech {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

enum class Side { Left, Right, Bottom, Top };
enum class BoundaryTag { Free, Fixed, Input, Output, Symmetry };

std::string_view to_string(Side side);
std::string_view to_string(BoundaryTag tag);
Side parse_side(std::string_view text);
BoundaryTag parse_tag(std::string_view text);

// Axis-aligned rectangle in normalized domain coordinates ([0,1]^2 maps to
// the full rectangle).
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  bool operator==(const Box&) const = default;
};

// Rectangular fixed design domain of size (width_frac*L) x (height_frac*L).
struct RectDomain {
  double length = 1.0;
  double width_frac = 1.0;
  double height_frac = 1.0;
  int divisions_x = 2;
  int divisions_y = 2;
  std::vector<Box> void_boxes;
  // Non-design material: elements stay in the design domain but their nodes
  // keep phi = 1.
  std::vector<Box> solid_boxes;

  double width() const { return length * width_frac; }
  double height() const { return length * height_frac; }
  void validate() const;
  bool operator==(const RectDomain&) const = default;
};

// Interval [start, end] along one side of the rectangle, as a fraction of that
// side's length. Left/Right run bottom to top, Bottom/Top run left to right.
struct Port {
  Side side = Side::Left;
  double start = 0.0;
  double end = 1.0;
  BoundaryTag tag = BoundaryTag::Free;
  bool operator==(const Port&) const = default;
};

struct BoundaryEdge {
  std::array<int, 2> nodes{};
  Side side = Side::Left;
  BoundaryTag tag = BoundaryTag::Free;
};

struct ElementGeometry {
  double area = 0.0;
  // Gradient of the linear shape function of each local node.
  std::array<Vec2, 3> grad{};
};

// Constant-strain triangle geometry: area and shape-function gradients.
ElementGeometry triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c);

// Structured triangulation of a RectDomain. Immutable once built apart from
// boundary tags, which tag_boundaries() assigns on a copy.
class Mesh {
 public:
  const RectDomain& domain() const { return domain_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return triangles_.size(); }

  std::span<const Vec2> nodes() const { return nodes_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  std::span<const BoundaryEdge> boundary_edges() const { return edges_; }

  const Vec2& node(std::size_t i) const { return nodes_[i]; }
  const std::array<int, 3>& triangle(std::size_t e) const { return triangles_[e]; }
  bool is_design(std::size_t e) const { return design_[e] != 0; }
  // A node is active when it touches at least one design element.
  bool is_active(std::size_t n) const { return active_[n] != 0; }
  // Element inside a solid box.
  bool is_solid(std::size_t e) const { return solid_[e] != 0; }
  // Node of a solid element; its level set stays at 1.
  bool is_pinned(std::size_t n) const { return pinned_[n] != 0; }
  const ElementGeometry& geometry(std::size_t e) const { return geometry_[e]; }

  double design_area() const { return design_area_; }
  // Total length of boundary edges carrying `tag`.
  double tagged_length(BoundaryTag tag) const;
  bool has_tag(BoundaryTag tag) const;
  double edge_length(const BoundaryEdge& edge) const;
  // Characteristic element edge length (smallest grid spacing).
  double element_size() const;

  friend Mesh build_structured_mesh(const RectDomain& domain);
  friend Mesh tag_boundaries(const Mesh& mesh, std::span<const Port> ports);

 private:
  RectDomain domain_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> edges_;
  std::vector<char> design_;
  std::vector<char> active_;
  std::vector<char> solid_;
  std::vector<char> pinned_;
  std::vector<ElementGeometry> geometry_;
  double design_area_ = 0.0;
};

// Each grid cell is split along its lower-left to upper-right diagonal; nodes
// are numbered row-major from the lower-left corner.
Mesh build_structured_mesh(const RectDomain& domain);

// Tags every boundary edge whose midpoint lies inside a port interval; other
// edges are Free. Overlapping ports with different tags are rejected.
Mesh tag_boundaries(const Mesh& mesh, std::span<const Port> ports);

ElementGeometry element_geometry(const Mesh& mesh, std::size_t element_id);

}  // namespace lsmech
