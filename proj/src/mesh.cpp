#include "lsmech/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsmech/error.hpp"

namespace lsmech {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Free: return "free";
    case BoundaryTag::Fixed: return "fixed";
    case BoundaryTag::Input: return "input";
    case BoundaryTag::Output: return "output";
    case BoundaryTag::Symmetry: return "symmetry";
  }
  return "?";
}

Side parse_side(std::string_view text) {
  for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
    if (text == to_string(s)) return s;
  }
  throw Error("unknown side '" + std::string(text) + "'");
}

BoundaryTag parse_tag(std::string_view text) {
  for (BoundaryTag t : {BoundaryTag::Free, BoundaryTag::Fixed, BoundaryTag::Input,
                        BoundaryTag::Output, BoundaryTag::Symmetry}) {
    if (text == to_string(t)) return t;
  }
  throw Error("unknown boundary tag '" + std::string(text) + "'");
}

void RectDomain::validate() const {
  if (divisions_x < 2 || divisions_y < 2) {
    throw Error("mesh divisions must be at least 2 in each direction");
  }
  if (!(length > 0.0) || !(width_frac > 0.0) || !(height_frac > 0.0)) {
    throw Error("domain dimensions must be positive");
  }
  auto check = [](const Box& b, const char* what) {
    const bool inside = b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= 1.0 && b.y1 <= 1.0;
    if (!inside || !(b.x0 < b.x1) || !(b.y0 < b.y1)) {
      throw Error(std::string(what) + " box must be a non-empty rectangle inside [0,1]^2");
    }
  };
  for (const Box& b : void_boxes) check(b, "void");
  for (const Box& b : solid_boxes) check(b, "solid");
}

ElementGeometry triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  ElementGeometry g;
  g.area = 0.5 * det;
  // grad N_i = (y_j - y_k, x_k - x_j) / det for cyclic (i, j, k).
  g.grad[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  g.grad[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  g.grad[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
  return g;
}

Mesh build_structured_mesh(const RectDomain& domain) {
  domain.validate();
  Mesh m;
  m.domain_ = domain;
  const int nx = domain.divisions_x;
  const int ny = domain.divisions_y;
  const double w = domain.width();
  const double h = domain.height();

  m.nodes_.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      m.nodes_.push_back({w * i / nx, h * j / ny});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };

  m.triangles_.reserve(2 * static_cast<std::size_t>(nx) * ny);
  m.design_.reserve(m.triangles_.capacity());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n0 = id(i, j), n1 = id(i + 1, j), n2 = id(i + 1, j + 1), n3 = id(i, j + 1);
      // Centroids in normalized coordinates decide void membership.
      const double cx_lo = (i + 2.0 / 3.0) / nx, cy_lo = (j + 1.0 / 3.0) / ny;
      const double cx_hi = (i + 1.0 / 3.0) / nx, cy_hi = (j + 2.0 / 3.0) / ny;
      auto inside = [](const std::vector<Box>& boxes, double cx, double cy) {
        return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) {
          return cx > b.x0 && cx < b.x1 && cy > b.y0 && cy < b.y1;
        });
      };
      auto push = [&](std::array<int, 3> tri, double cx, double cy) {
        const bool is_void = inside(domain.void_boxes, cx, cy);
        m.triangles_.push_back(tri);
        m.design_.push_back(is_void ? 0 : 1);
        m.solid_.push_back(!is_void && inside(domain.solid_boxes, cx, cy) ? 1 : 0);
      };
      push({n0, n1, n2}, cx_lo, cy_lo);
      push({n0, n2, n3}, cx_hi, cy_hi);
    }
  }

  m.active_.assign(m.nodes_.size(), 0);
  m.pinned_.assign(m.nodes_.size(), 0);
  m.geometry_.reserve(m.triangles_.size());
  for (std::size_t e = 0; e < m.triangles_.size(); ++e) {
    const auto& t = m.triangles_[e];
    m.geometry_.push_back(triangle_geometry(m.nodes_[t[0]], m.nodes_[t[1]], m.nodes_[t[2]]));
    if (m.design_[e]) {
      m.design_area_ += m.geometry_.back().area;
      for (int n : t) m.active_[n] = 1;
    }
    if (m.solid_[e]) {
      for (int n : t) m.pinned_[n] = 1;
    }
  }

  for (int i = 0; i < nx; ++i) m.edges_.push_back({{id(i, 0), id(i + 1, 0)}, Side::Bottom});
  for (int j = 0; j < ny; ++j) m.edges_.push_back({{id(nx, j), id(nx, j + 1)}, Side::Right});
  for (int i = 0; i < nx; ++i) m.edges_.push_back({{id(i, ny), id(i + 1, ny)}, Side::Top});
  for (int j = 0; j < ny; ++j) m.edges_.push_back({{id(0, j), id(0, j + 1)}, Side::Left});
  return m;
}

namespace {

// Position of the edge midpoint along its side, as a fraction of side length.
double side_fraction(const Mesh& mesh, const BoundaryEdge& edge) {
  const Vec2& a = mesh.node(edge.nodes[0]);
  const Vec2& b = mesh.node(edge.nodes[1]);
  const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  switch (edge.side) {
    case Side::Left:
    case Side::Right: return mid.y / mesh.domain().height();
    case Side::Bottom:
    case Side::Top: return mid.x / mesh.domain().width();
  }
  return 0.0;
}

}  // namespace

Mesh tag_boundaries(const Mesh& mesh, std::span<const Port> ports) {
  for (std::size_t a = 0; a < ports.size(); ++a) {
    const Port& p = ports[a];
    if (!(p.start >= 0.0 && p.end <= 1.0 && p.start < p.end)) {
      throw Error("port interval must satisfy 0 <= start < end <= 1");
    }
    for (std::size_t b = 0; b < a; ++b) {
      const Port& q = ports[b];
      if (p.side != q.side || p.tag == q.tag) continue;
      if (std::min(p.end, q.end) > std::max(p.start, q.start)) {
        throw Error("overlapping ports with conflicting tags on side " +
                    std::string(to_string(p.side)));
      }
    }
  }
  Mesh out = mesh;
  for (BoundaryEdge& edge : out.edges_) {
    edge.tag = BoundaryTag::Free;
    const double s = side_fraction(out, edge);
    for (const Port& p : ports) {
      if (p.side == edge.side && s >= p.start && s <= p.end) {
        edge.tag = p.tag;
        break;
      }
    }
  }
  return out;
}

double Mesh::edge_length(const BoundaryEdge& edge) const {
  const Vec2& a = nodes_[edge.nodes[0]];
  const Vec2& b = nodes_[edge.nodes[1]];
  return std::hypot(b.x - a.x, b.y - a.y);
}

double Mesh::tagged_length(BoundaryTag tag) const {
  double total = 0.0;
  for (const BoundaryEdge& e : edges_) {
    if (e.tag == tag) total += edge_length(e);
  }
  return total;
}

bool Mesh::has_tag(BoundaryTag tag) const {
  return std::any_of(edges_.begin(), edges_.end(), [tag](const BoundaryEdge& e) { return e.tag == tag; });
}

double Mesh::element_size() const {
  return std::min(domain_.width() / domain_.divisions_x, domain_.height() / domain_.divisions_y);
}

ElementGeometry element_geometry(const Mesh& mesh, std::size_t element_id) {
  if (element_id >= mesh.num_elements()) throw Error("element id out of range");
  return mesh.geometry(element_id);
}

}  // namespace lsmech
