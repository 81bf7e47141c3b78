#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qdlab {

enum class LatticeKind { square, honeycomb };
/// Which endpoint of an edge a vertex is: minus = tail, plus = head.
enum class End { minus, plus };
/// Which side of an edge a plaquette lies on: plus = right of the arrow.
enum class Side { minus, plus };

struct Edge {
  int v_minus = -1, v_plus = -1;
  int p_minus = -1, p_plus = -1;
  std::array<double, 2> dir{0.0, 0.0};  // embedding displacement tail -> head
};

struct StarEntry {
  int edge;
  End end;
  bool operator==(const StarEntry&) const = default;
};

struct BoundaryEntry {
  int edge;
  Side side;
  bool operator==(const BoundaryEntry&) const = default;
};

/**
 * @brief Oriented cell complex on the torus.
 *
 * Star lists run clockwise starting from +y. Boundary lists run clockwise
 * (interior on the right) starting at the lowest edge index.
 */
struct OrientedLattice {
  LatticeKind kind = LatticeKind::square;
  int width = 0, height = 0;
  int num_vertices = 0;
  int num_plaquettes = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<StarEntry>> star_order;
  std::vector<std::vector<BoundaryEntry>> boundary_order;

  int num_edges() const { return static_cast<int>(edges.size()); }
};

inline std::string to_string(LatticeKind k) { return k == LatticeKind::square ? "square" : "honeycomb"; }

inline LatticeKind lattice_kind_from_string(const std::string& s) {
  if (s == "square") return LatticeKind::square;
  if (s == "honeycomb") return LatticeKind::honeycomb;
  throw std::invalid_argument("unknown lattice kind: " + s);
}

namespace detail {

// Clockwise angle from +y in [0, 2pi).
inline double cw_angle(double dx, double dy) {
  double a = std::atan2(dx, dy);
  if (a < 0) a += 2 * std::numbers::pi;
  if (a > 2 * std::numbers::pi - 1e-12) a = 0;
  return a;
}

struct RawEdge {
  int tail, head;
  double dx, dy;
};

// Fill stars and faces from a periodic embedding given by edge displacements.
inline void assemble(OrientedLattice& l, const std::vector<RawEdge>& raw) {
  const int ne = static_cast<int>(raw.size());
  l.edges.assign(ne, Edge{});
  l.star_order.assign(l.num_vertices, {});
  for (int e = 0; e < ne; ++e) {
    l.edges[e].v_minus = raw[e].tail;
    l.edges[e].v_plus = raw[e].head;
    l.edges[e].dir = {raw[e].dx, raw[e].dy};
  }
  for (int v = 0; v < l.num_vertices; ++v) {
    std::vector<std::pair<double, StarEntry>> inc;
    for (int e = 0; e < ne; ++e) {
      if (raw[e].tail == v) inc.push_back({cw_angle(raw[e].dx, raw[e].dy), {e, End::minus}});
      if (raw[e].head == v) inc.push_back({cw_angle(-raw[e].dx, -raw[e].dy), {e, End::plus}});
    }
    std::sort(inc.begin(), inc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [angle, entry] : inc) l.star_order[v].push_back(entry);
  }

  // Face tracing: leaving w after arriving along some edge, take the next
  // edge counterclockwise from the reverse direction; the face stays on the right.
  std::vector<std::array<int, 2>> face_of(ne, {-1, -1});  // [forward, backward]
  l.boundary_order.clear();
  for (int e0 = 0; e0 < ne; ++e0)
    for (int fwd0 = 1; fwd0 >= 0; --fwd0) {
      if (face_of[e0][fwd0 ? 0 : 1] >= 0) continue;
      const int f = static_cast<int>(l.boundary_order.size());
      std::vector<BoundaryEntry> cycle;
      int e = e0;
      bool fwd = fwd0 != 0;
      while (face_of[e][fwd ? 0 : 1] < 0) {
        face_of[e][fwd ? 0 : 1] = f;
        cycle.push_back({e, fwd ? Side::plus : Side::minus});
        const int w = fwd ? raw[e].head : raw[e].tail;
        const End arrived_end = fwd ? End::plus : End::minus;
        const auto& st = l.star_order[w];
        const int k = static_cast<int>(std::find(st.begin(), st.end(), StarEntry{e, arrived_end}) - st.begin());
        const StarEntry next = st[(k + static_cast<int>(st.size()) - 1) % st.size()];
        e = next.edge;
        fwd = next.end == End::minus;
      }
      auto it = std::min_element(cycle.begin(), cycle.end(),
                                 [](const auto& a, const auto& b) { return a.edge < b.edge; });
      std::rotate(cycle.begin(), it, cycle.end());
      l.boundary_order.push_back(cycle);
    }
  l.num_plaquettes = static_cast<int>(l.boundary_order.size());
  for (int e = 0; e < ne; ++e) {
    l.edges[e].p_plus = face_of[e][0];
    l.edges[e].p_minus = face_of[e][1];
  }
}

}  // namespace detail

inline OrientedLattice build_square_torus(int w, int h) {
  if (w < 2 || h < 2) throw std::invalid_argument("build_square_torus: width and height must be >= 2");
  OrientedLattice l;
  l.kind = LatticeKind::square;
  l.width = w;
  l.height = h;
  l.num_vertices = w * h;
  auto vid = [&](int x, int y) { return ((x % w + w) % w) + w * ((y % h + h) % h); };
  std::vector<detail::RawEdge> raw;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) raw.push_back({vid(x, y), vid(x + 1, y), 1.0, 0.0});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) raw.push_back({vid(x, y), vid(x, y + 1), 0.0, 1.0});
  detail::assemble(l, raw);
  return l;
}

/// Brick-wall honeycomb: A(x,y) = 2(x + w y), B(x,y) = A + 1; edges A -> B.
inline OrientedLattice build_honeycomb_torus(int w, int h) {
  if (w < 2 || h < 2) throw std::invalid_argument("build_honeycomb_torus: width and height must be >= 2");
  OrientedLattice l;
  l.kind = LatticeKind::honeycomb;
  l.width = w;
  l.height = h;
  l.num_vertices = 2 * w * h;
  auto cell = [&](int x, int y) { return ((x % w + w) % w) + w * ((y % h + h) % h); };
  const double s = std::sqrt(3.0) / 2.0;
  std::vector<detail::RawEdge> raw;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int a = 2 * cell(x, y);
      raw.push_back({a, 2 * cell(x, y) + 1, 0.0, 1.0});
      raw.push_back({a, 2 * cell(x, y - 1) + 1, -s, -0.5});
      raw.push_back({a, 2 * cell(x + 1, y - 1) + 1, s, -0.5});
    }
  detail::assemble(l, raw);
  return l;
}

inline OrientedLattice build_lattice(LatticeKind kind, int w, int h) {
  return kind == LatticeKind::square ? build_square_torus(w, h) : build_honeycomb_torus(w, h);
}

inline const std::vector<StarEntry>& star(const OrientedLattice& l, int v) {
  if (v < 0 || v >= l.num_vertices) throw std::invalid_argument("star: vertex out of range");
  return l.star_order[v];
}

inline const std::vector<BoundaryEntry>& boundary(const OrientedLattice& l, int p) {
  if (p < 0 || p >= l.num_plaquettes) throw std::invalid_argument("boundary: plaquette out of range");
  return l.boundary_order[p];
}

/// Vertex at which a clockwise traversal of this boundary entry starts.
inline int traversal_start(const OrientedLattice& l, const BoundaryEntry& b) {
  const Edge& e = l.edges[b.edge];
  return b.side == Side::plus ? e.v_minus : e.v_plus;
}

/// Boundary of p rotated to start at the first edge whose traversal starts at v.
inline std::vector<BoundaryEntry> boundary_from(const OrientedLattice& l, int p, int v) {
  auto b = boundary(l, p);
  for (std::size_t k = 0; k < b.size(); ++k)
    if (traversal_start(l, b[k]) == v) {
      std::rotate(b.begin(), b.begin() + static_cast<long>(k), b.end());
      return b;
    }
  throw std::invalid_argument("boundary_from: vertex not on the plaquette boundary");
}

/// Boundary of p rotated so that edge e comes first.
inline std::vector<BoundaryEntry> boundary_from_edge(const OrientedLattice& l, int p, int e) {
  auto b = boundary(l, p);
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k].edge == e) {
      std::rotate(b.begin(), b.begin() + static_cast<long>(k), b.end());
      return b;
    }
  throw std::invalid_argument("boundary_from_edge: edge not on the plaquette boundary");
}

/// Sorted edge ids of star(v) (single-cell mode).
inline std::vector<int> vertex_edges(const OrientedLattice& l, int v) {
  std::vector<int> es;
  for (const auto& s : star(l, v)) es.push_back(s.edge);
  std::sort(es.begin(), es.end());
  return es;
}

/// Sorted edge ids of the boundary of p (single-cell mode).
inline std::vector<int> plaquette_edges(const OrientedLattice& l, int p) {
  std::vector<int> es;
  for (const auto& b : boundary(l, p)) es.push_back(b.edge);
  std::sort(es.begin(), es.end());
  return es;
}

inline End end_of(const OrientedLattice& l, int e, int v) {
  if (l.edges[e].v_minus == v) return End::minus;
  if (l.edges[e].v_plus == v) return End::plus;
  throw std::invalid_argument("edge " + std::to_string(e) + " not incident to vertex " + std::to_string(v));
}

inline Side side_of(const OrientedLattice& l, int e, int p) {
  if (l.edges[e].p_plus == p) return Side::plus;
  if (l.edges[e].p_minus == p) return Side::minus;
  throw std::invalid_argument("edge " + std::to_string(e) + " not on plaquette " + std::to_string(p));
}

}  // namespace qdlab
