#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qdlab/qdmodel.hpp"

namespace qdlab {

struct RibbonLabel {
  int h = 0, g = 0;
  bool operator==(const RibbonLabel&) const = default;
};

/// Register index of (h,g) in the |G|^2 space: h + |G| g.
inline int label_index(const FiniteGroup& G, RibbonLabel k) { return k.h + G.order * k.g; }
inline RibbonLabel label_at(const FiniteGroup& G, int idx) { return {idx % G.order, idx / G.order}; }

/// Lambda^{(h0,g0),(h1,g1)}_{(h,g)} = [h0 h1 = h][g0 = g][g1 = g].
inline int lambda_coeff(const FiniteGroup& G, RibbonLabel m, RibbonLabel n, RibbonLabel k) {
  return (G.mul[m.h][n.h] == k.h && m.g == k.g && n.g == k.g) ? 1 : 0;
}

/// Omega^{(h,g)}_{(h0,g0),(h1,g1)} = [g = g0 g1][h0 = h][h1 = g0^-1 h g0].
inline int omega_coeff(const FiniteGroup& G, RibbonLabel k, RibbonLabel m, RibbonLabel n) {
  return (k.g == G.mul[m.g][n.g] && m.h == k.h && n.h == G.conj(m.g, k.h)) ? 1 : 0;
}

/// e^{(h,g)} = [g = 1].
inline int counit(RibbonLabel k) { return k.g == 0 ? 1 : 0; }

enum class TriangleKind { plaquette, vertex };
enum class SiteKind { vertex, plaquette };

struct Triangle {
  TriangleKind kind;
  int edge;
  int site;
};

inline std::string to_string(SiteKind s) { return s == SiteKind::vertex ? "vertex" : "plaquette"; }

inline void check_incidence(const QdModel& m, const Triangle& t) {
  if (t.edge < 0 || t.edge >= m.lattice.num_edges()) throw std::invalid_argument("triangle edge out of range");
  if (t.kind == TriangleKind::vertex)
    end_of(m.lattice, t.edge, t.site);
  else
    side_of(m.lattice, t.edge, t.site);
}

/// F^{(h,g)}(t): T^{g^-1}(e,p) for plaquette type, [g = 1] L^h(e,v) for vertex type.
inline Operator triangle_operator(const QdModel& m, const Triangle& t, RibbonLabel k, const LayoutPtr& layout) {
  check_incidence(m, t);
  const auto& G = m.group;
  if (t.kind == TriangleKind::plaquette)
    return embed_product(layout, {{edge_id(t.edge), T_at(G, side_of(m.lattice, t.edge, t.site), G.inv[k.g])}});
  if (k.g != G.identity) return Operator::zero(layout);
  return embed_product(layout, {{edge_id(t.edge), L_at(G, end_of(m.lattice, t.edge, t.site), k.h)}});
}

/// All |G|^2 operators of one ribbon, indexed by label_index.
using RibbonFamily = std::vector<Operator>;

inline RibbonFamily triangle_family(const QdModel& m, const Triangle& t, const LayoutPtr& layout) {
  const int n = m.group.order * m.group.order;
  RibbonFamily f;
  for (int i = 0; i < n; ++i) f.push_back(triangle_operator(m, t, label_at(m.group, i), layout));
  return f;
}

/// F^k(AB) = sum_{m,n} Omega^k_{mn} F^m(A) F^n(B).
inline RibbonFamily combine_ribbons(const FiniteGroup& G, const RibbonFamily& a, const RibbonFamily& b) {
  const int n = G.order * G.order;
  RibbonFamily out;
  for (int ki = 0; ki < n; ++ki) {
    const RibbonLabel k = label_at(G, ki);
    Operator acc = Operator::zero(a.front().layout());
    for (int mi = 0; mi < n; ++mi)
      for (int ni = 0; ni < n; ++ni)
        if (omega_coeff(G, k, label_at(G, mi), label_at(G, ni))) acc = acc + a[mi] * b[ni];
    out.push_back(acc);
  }
  return out;
}

enum class Fold { left, right };

/// Ribbon operators of a triangle sequence by recursive Omega-expansion.
inline RibbonFamily ribbon_operators(const QdModel& m, const std::vector<Triangle>& ts, const LayoutPtr& layout,
                                     Fold fold = Fold::left) {
  if (ts.empty()) throw std::invalid_argument("ribbon_operators: empty ribbon");
  std::vector<RibbonFamily> fam;
  for (const auto& t : ts) fam.push_back(triangle_family(m, t, layout));
  if (fold == Fold::left) {
    RibbonFamily acc = fam.front();
    for (std::size_t i = 1; i < fam.size(); ++i) acc = combine_ribbons(m.group, acc, fam[i]);
    return acc;
  }
  RibbonFamily acc = fam.back();
  for (std::size_t i = fam.size() - 1; i-- > 0;) acc = combine_ribbons(m.group, fam[i], acc);
  return acc;
}

/// Closed ribbon t_v (star, clockwise) or t_p (boundary, clockwise) starting at start_edge.
inline std::vector<Triangle> closed_ribbon(const QdModel& m, SiteKind kind, int site, int start_edge) {
  std::vector<Triangle> ts;
  if (kind == SiteKind::vertex) {
    auto st = star(m.lattice, site);
    auto it = std::find_if(st.begin(), st.end(), [&](const StarEntry& s) { return s.edge == start_edge; });
    if (it == st.end()) throw std::invalid_argument("closed_ribbon: start edge not in star");
    std::rotate(st.begin(), it, st.end());
    for (const auto& s : st) ts.push_back({TriangleKind::vertex, s.edge, site});
  } else {
    for (const auto& b : boundary_from_edge(m.lattice, site, start_edge))
      ts.push_back({TriangleKind::plaquette, b.edge, site});
  }
  return ts;
}

inline Operator closed_ribbon_operator(const QdModel& m, SiteKind kind, int site, int start_edge, RibbonLabel k,
                                       const LayoutPtr& layout) {
  return ribbon_operators(m, closed_ribbon(m, kind, site, start_edge), layout)[label_index(m.group, k)];
}

// ---------------------------------------------------------------------------
// Quantum double representation on the |G|^2 register

/// D_j |k> = sum_m Omega^k_{mj} |m>.
inline DenseMat qd_generator(const FiniteGroup& G, RibbonLabel j) {
  const int n = G.order * G.order;
  DenseMat d = DenseMat::Zero(n, n);
  for (int ki = 0; ki < n; ++ki)
    for (int mi = 0; mi < n; ++mi)
      if (omega_coeff(G, label_at(G, ki), label_at(G, mi), j)) d(mi, ki) = 1.0;
  return d;
}

/// C |(h,g)> = |(g^-1 h g, g)>.
inline DenseMat conjugation_unitary(const FiniteGroup& G) {
  const int n = G.order * G.order;
  DenseMat c = DenseMat::Zero(n, n);
  for (int h = 0; h < G.order; ++h)
    for (int g = 0; g < G.order; ++g) c(label_index(G, {G.conj(g, h), g}), label_index(G, {h, g})) = 1.0;
  return c;
}

/// D_{(h1,g1)} = C^-1 (|h1><h1| (x) I) C (I (x) L^{g1}_-).
inline DenseMat qd_generator_factored(const FiniteGroup& G, RibbonLabel j) {
  const int n = G.order * G.order;
  DenseMat proj = DenseMat::Zero(n, n), shift = DenseMat::Zero(n, n);
  const DenseMat lminus = single_site_LT(G, LTKind::Lminus, j.g);
  for (int h = 0; h < G.order; ++h)
    for (int g = 0; g < G.order; ++g) {
      const int i = label_index(G, {h, g});
      if (h == j.h) proj(i, i) = 1.0;
      for (int g2 = 0; g2 < G.order; ++g2)
        if (lminus(g2, g) != 0.0) shift(label_index(G, {h, g2}), i) = lminus(g2, g);
    }
  const DenseMat c = conjugation_unitary(G);
  return c.adjoint() * proj * c * shift;
}

/// |Psi> = |G|^-1/2 sum_h |(h,1)>.
inline DenseVec qd_psi(const FiniteGroup& G) {
  DenseVec v = DenseVec::Zero(G.order * G.order);
  for (int h = 0; h < G.order; ++h) v(label_index(G, {h, 0})) = 1.0 / std::sqrt(double(G.order));
  return v;
}

// ---------------------------------------------------------------------------
// M operators

enum class Representation {
  full,            // edge (x) |G|^2 register, M = sum_n F^n (x) D_n
  reduced,         // edge (x) |G| register
  reduced_literal  // plaquette register multiplied by g instead of g^-1 (reverses the flux order)
};

inline DenseVec reduced_psi(const FiniteGroup& G, SiteKind kind) {
  DenseVec v = DenseVec::Zero(G.order);
  if (kind == SiteKind::vertex)
    v.setConstant(1.0 / std::sqrt(double(G.order)));
  else
    v(G.identity) = 1.0;
  return v;
}

inline DenseVec register_psi(const FiniteGroup& G, SiteKind kind, Representation rep) {
  return rep == Representation::full ? qd_psi(G) : reduced_psi(G, kind);
}

inline int register_dim(const FiniteGroup& G, Representation rep) {
  return rep == Representation::full ? G.order * G.order : G.order;
}

/**
 * @brief M(t) acting on the triangle's edge and the register `reg`.
 *
 * Reduced vertex: sum_g L^g(e,v) (x) |g><g|. Reduced plaquette:
 * sum_g T^g(e,p) (x) L^{g^-1}_+, so that <1|M_0...M_{k-1}|1> = B(p).
 */
inline Operator m_operator(const QdModel& m, const Triangle& t, Representation rep, const LayoutPtr& layout,
                           const std::string& reg) {
  check_incidence(m, t);
  const auto& G = m.group;
  if (layout->dim_of(reg) != register_dim(G, rep)) throw std::invalid_argument("m_operator: register dimension mismatch");
  Operator acc = Operator::zero(layout);
  if (rep == Representation::full) {
    for (int ni = 0; ni < G.order * G.order; ++ni) {
      const RibbonLabel n = label_at(G, ni);
      if (t.kind == TriangleKind::vertex && n.g != G.identity) continue;
      const DenseMat edge_part = t.kind == TriangleKind::vertex
                                     ? L_at(G, end_of(m.lattice, t.edge, t.site), n.h)
                                     : T_at(G, side_of(m.lattice, t.edge, t.site), G.inv[n.g]);
      acc = acc + embed_product(layout, {{edge_id(t.edge), edge_part}, {reg, qd_generator(G, n)}});
    }
    return acc;
  }
  for (int g = 0; g < G.order; ++g) {
    if (t.kind == TriangleKind::vertex) {
      acc = acc + embed_product(layout, {{edge_id(t.edge), L_at(G, end_of(m.lattice, t.edge, t.site), g)},
                                         {reg, single_site_LT(G, LTKind::Tplus, g)}});
    } else {
      const int r = rep == Representation::reduced ? G.inv[g] : g;
      acc = acc + embed_product(layout, {{edge_id(t.edge), T_at(G, side_of(m.lattice, t.edge, t.site), g)},
                                         {reg, single_site_LT(G, LTKind::Lplus, r)}});
    }
  }
  return acc;
}

/// Triangles of a site in the operator order used by the M products.
inline std::vector<Triangle> site_triangles(const QdModel& m, SiteKind kind, int site) {
  std::vector<Triangle> ts;
  if (kind == SiteKind::vertex)
    for (const auto& s : star(m.lattice, site)) ts.push_back({TriangleKind::vertex, s.edge, site});
  else
    for (const auto& b : boundary(m.lattice, site)) ts.push_back({TriangleKind::plaquette, b.edge, site});
  return ts;
}

inline std::vector<int> site_edges(const QdModel& m, SiteKind kind, int site) {
  return kind == SiteKind::vertex ? vertex_edges(m.lattice, site) : plaquette_edges(m.lattice, site);
}

struct Prop1Result {
  double residual = 0.0;          // ||X - <Psi|M_0...M_{k-1}|Psi>||
  double residual_adjoint = 0.0;  // ||X - <Psi|M_{k-1}^+...M_0^+|Psi>||
  double worst() const { return std::max(residual, residual_adjoint); }
};

/// Single-cell check of the product form of A(v) or B(p).
inline Prop1Result check_proposition1(const QdModel& m, SiteKind kind, int site,
                                      Representation rep = Representation::reduced) {
  const auto& G = m.group;
  const LayoutPtr layout = edge_layout(m, site_edges(m, kind, site), {{"R", register_dim(G, rep), Role::r_register}});
  const LayoutPtr reduced = without_factor(*layout, "R");
  const Operator target = kind == SiteKind::vertex ? vertex_operator(m, site, reduced) : plaquette_operator(m, site, reduced);
  std::vector<Operator> ms;
  for (const auto& t : site_triangles(m, kind, site)) ms.push_back(m_operator(m, t, rep, layout, "R"));
  Operator fwd = Operator::identity(layout), bwd = Operator::identity(layout);
  for (const auto& x : ms) fwd = fwd * x;
  for (auto it = ms.rbegin(); it != ms.rend(); ++it) bwd = bwd * adjoint(*it);
  const DenseVec psi = register_psi(G, kind, rep);
  Prop1Result r;
  r.residual = operator_norm(contract_factor(fwd, "R", psi, psi, reduced) - target);
  r.residual_adjoint = operator_norm(contract_factor(bwd, "R", psi, psi, reduced) - target);
  return r;
}

inline std::string vertex_register_id(int v) { return "Rv" + std::to_string(v); }
inline std::string plaquette_register_id(int p) { return "Rp" + std::to_string(p); }

struct CommutatorRecord {
  std::string a, b;
  double norm;
};

struct Lemma1Report {
  double max_claim1 = 0.0;           // vertex-vertex and plaquette-plaquette pairs
  double max_claim2 = 0.0;           // vertex-plaquette pairs on different edges
  double min_claim3 = 0.0;           // vertex-plaquette pairs on the same edge
  std::vector<CommutatorRecord> claim3;
  int pairs_checked = 0;
  bool pass() const { return max_claim1 <= tol::kIdentity && max_claim2 <= tol::kIdentity && min_claim3 > tol::kNoncommuting; }
};

/// Commutator sweep over all reduced M operators on the whole lattice.
inline Lemma1Report check_lemma1(const QdModel& m) {
  const auto& G = m.group;
  std::vector<int> all(m.lattice.num_edges());
  for (int e = 0; e < m.lattice.num_edges(); ++e) all[e] = e;
  std::vector<Factor> regs;
  for (int v = 0; v < m.lattice.num_vertices; ++v) regs.push_back({vertex_register_id(v), G.order, Role::r_register});
  for (int p = 0; p < m.lattice.num_plaquettes; ++p) regs.push_back({plaquette_register_id(p), G.order, Role::r_register});
  enforce_dim_cap(static_cast<std::uint64_t>(std::pow(double(G.order), all.size() + regs.size())));
  const LayoutPtr layout = edge_layout(m, all, regs);

  struct Item {
    bool is_vertex;
    int edge;
    std::string name;
    Operator op;
  };
  std::vector<Item> items;
  for (int v = 0; v < m.lattice.num_vertices; ++v)
    for (const auto& t : site_triangles(m, SiteKind::vertex, v))
      items.push_back({true, t.edge, "M(e" + std::to_string(t.edge) + ",v" + std::to_string(v) + ")",
                       m_operator(m, t, Representation::reduced, layout, vertex_register_id(v))});
  for (int p = 0; p < m.lattice.num_plaquettes; ++p)
    for (const auto& t : site_triangles(m, SiteKind::plaquette, p))
      items.push_back({false, t.edge, "M(e" + std::to_string(t.edge) + ",p" + std::to_string(p) + ")",
                       m_operator(m, t, Representation::reduced, layout, plaquette_register_id(p))});

  Lemma1Report rep;
  rep.min_claim3 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const auto& a = items[i];
      const auto& b = items[j];
      const double c1 = operator_norm(commutator(a.op, b.op));
      const double c2 = operator_norm(commutator(a.op, adjoint(b.op)));
      const double c = std::max(c1, c2);
      ++rep.pairs_checked;
      if (a.is_vertex == b.is_vertex)
        rep.max_claim1 = std::max(rep.max_claim1, c);
      else if (a.edge != b.edge)
        rep.max_claim2 = std::max(rep.max_claim2, c);
      else {
        rep.min_claim3 = std::min(rep.min_claim3, c1);
        rep.claim3.push_back({a.name, b.name, c1});
      }
    }
  if (rep.claim3.empty()) rep.min_claim3 = 0.0;
  return rep;
}

}  // namespace qdlab
