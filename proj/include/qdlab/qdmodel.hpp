#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qdlab/groups.hpp"
#include "qdlab/lattice.hpp"
#include "qdlab/linop.hpp"

namespace qdlab {

enum class LTKind { Lplus, Lminus, Tplus, Tminus };

/// Single-edge operators L^g_+, L^g_-, T^g_+, T^g_- as |G|x|G| matrices.
inline DenseMat single_site_LT(const FiniteGroup& G, LTKind kind, int g) {
  if (g < 0 || g >= G.order) throw std::invalid_argument("single_site_LT: element out of range");
  const int n = G.order;
  DenseMat m = DenseMat::Zero(n, n);
  for (int z = 0; z < n; ++z) {
    switch (kind) {
      case LTKind::Lplus: m(G.mul[g][z], z) = 1.0; break;
      case LTKind::Lminus: m(G.mul[z][G.inv[g]], z) = 1.0; break;
      case LTKind::Tplus: if (z == g) m(z, z) = 1.0; break;
      case LTKind::Tminus: if (z == G.inv[g]) m(z, z) = 1.0; break;
    }
  }
  return m;
}

/// L^g(e,v): L_- at the tail, L_+ at the head.
inline DenseMat L_at(const FiniteGroup& G, End end, int g) {
  return single_site_LT(G, end == End::minus ? LTKind::Lminus : LTKind::Lplus, g);
}

/// T^g(e,p): T_- if p lies left of e, T_+ if right.
inline DenseMat T_at(const FiniteGroup& G, Side side, int g) {
  return single_site_LT(G, side == Side::minus ? LTKind::Tminus : LTKind::Tplus, g);
}

inline std::string edge_id(int e) { return "e" + std::to_string(e); }

/**
 * @brief Group plus lattice plus the edge layout H_L.
 *
 * layout is null when |G|^|E| does not fit the sparse index type; single-cell
 * layouts from edge_layout still work in that case.
 */
struct QdModel {
  FiniteGroup group;
  OrientedLattice lattice;
  LayoutPtr layout;

  const LayoutPtr& full_layout() const {
    if (!layout) throw ResourceLimit("full edge layout of this model is too large to index");
    return layout;
  }
};

/// Layout over the given edges (ascending) followed by extra factors.
inline LayoutPtr edge_layout(const QdModel& m, std::vector<int> edges, const std::vector<Factor>& extra = {}) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<Factor> fs;
  for (int e : edges) fs.push_back({edge_id(e), m.group.order, Role::edge});
  for (const auto& f : extra) fs.push_back(f);
  return make_layout(fs);
}

inline QdModel make_model(FiniteGroup g, OrientedLattice l) {
  QdModel m{std::move(g), std::move(l), nullptr};
  std::vector<int> all(m.lattice.num_edges());
  for (int e = 0; e < m.lattice.num_edges(); ++e) all[e] = e;
  if (std::pow(double(m.group.order), double(all.size())) < double(std::numeric_limits<int>::max()))
    m.layout = edge_layout(m, all);
  return m;
}

/// A_g(v) = prod over star(v) of L^g(e,v).
inline Operator gauge_transformation(const QdModel& m, int v, int g, const LayoutPtr& layout) {
  std::vector<std::pair<std::string, DenseMat>> parts;
  for (const auto& s : star(m.lattice, v)) parts.push_back({edge_id(s.edge), L_at(m.group, s.end, g)});
  return embed_product(layout, parts);
}
inline Operator gauge_transformation(const QdModel& m, int v, int g) { return gauge_transformation(m, v, g, m.full_layout()); }

/**
 * @brief B_g(v,p): projector onto boundary configurations with g_{k-1}...g_0 = g,
 * edges taken clockwise from v.
 *
 * Evaluated as a diagonal: T^{g_i}_+ fixes the edge value to g_i, T^{g_i}_- to g_i^-1.
 */
inline Operator magnetic_charge(const QdModel& m, int v, int p, int g, const LayoutPtr& layout) {
  const auto b = boundary_from(m.lattice, p, v);
  const auto& G = m.group;
  std::vector<int> ks;
  for (const auto& be : b) ks.push_back(layout->index_of(edge_id(be.edge)));
  return diagonal_operator(layout, [&](std::int64_t i) {
    int acc = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const int z = layout->digit(i, ks[j]);
      const int gj = b[j].side == Side::plus ? z : G.inv[z];
      acc = G.mul[gj][acc];
    }
    return acc == g ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  });
}
inline Operator magnetic_charge(const QdModel& m, int v, int p, int g) { return magnetic_charge(m, v, p, g, m.full_layout()); }

inline Operator vertex_operator(const QdModel& m, int v, const LayoutPtr& layout) {
  Operator a = Operator::zero(layout);
  for (int g = 0; g < m.group.order; ++g) a = a + gauge_transformation(m, v, g, layout);
  return scale(a, 1.0 / m.group.order);
}
inline Operator vertex_operator(const QdModel& m, int v) { return vertex_operator(m, v, m.full_layout()); }

/// B(p) = B_1(v,p), v the start of the stored boundary list.
inline Operator plaquette_operator(const QdModel& m, int p, const LayoutPtr& layout) {
  const int v = traversal_start(m.lattice, boundary(m.lattice, p).front());
  return magnetic_charge(m, v, p, m.group.identity, layout);
}
inline Operator plaquette_operator(const QdModel& m, int p) { return plaquette_operator(m, p, m.full_layout()); }

/// H_QD = -sum_v A(v) - sum_p B(p).
inline Operator build_hqd(const QdModel& m) {
  enforce_dim_cap(static_cast<std::uint64_t>(m.full_layout()->total_dim()));
  Operator h = Operator::zero(m.layout);
  for (int v = 0; v < m.lattice.num_vertices; ++v) h = h - vertex_operator(m, v);
  for (int p = 0; p < m.lattice.num_plaquettes; ++p) h = h - plaquette_operator(m, p);
  return h;
}

}  // namespace qdlab
