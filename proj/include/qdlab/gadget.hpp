#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "qdlab/ribbon.hpp"

namespace qdlab {

/**
 * @brief One clock gadget: ground projector, ordered hops, clock register.
 *
 * All operators live on the joint layout (system plus every clock) and act
 * trivially on the clocks.
 */
struct GadgetSpec {
  std::string label;
  Operator gamma0;
  std::vector<Operator> hops;
  std::string clock;

  int n() const { return static_cast<int>(hops.size()); }
  const LayoutPtr& layout() const { return gamma0.layout(); }
};

/// chi[alpha][i]: gadgets (by position) that must sit at clock 0 while hop i of alpha acts.
using ChiMap = std::vector<std::vector<std::vector<int>>>;

/// |i><j| on a clock register.
inline Operator clock_op(const LayoutPtr& l, const std::string& clock, int i, int j) {
  const int n = l->dim_of(clock);
  DenseMat m = DenseMat::Zero(n, n);
  m((i % n + n) % n, (j % n + n) % n) = 1.0;
  return embed(l, {clock}, m);
}

struct ProportionalityReport {
  bool ok = true;
  double worst_residual = 0.0;
  std::string failure;  // first failing condition, empty if ok
};

/// Conditions (i)-(iv) on the hops, indices cyclic mod n.
inline ProportionalityReport check_proportionality(const GadgetSpec& s) {
  ProportionalityReport r;
  const int n = s.n();
  auto test = [&](const Operator& x, const Operator& p, const std::string& what, bool nonzero) {
    const auto f = fit_proportional(x, p);
    r.worst_residual = std::max(r.worst_residual, f.residual);
    const bool degenerate = nonzero && std::abs(f.c) < tol::kProportional;
    if ((!f.ok() || degenerate) && r.ok) {
      r.ok = false;
      r.failure = what + (degenerate ? " (zero fit)" : "") + ", residual " + std::to_string(f.residual);
    }
  };
  for (int i = 0; i < n; ++i) {
    const Operator& mi = s.hops[i];
    const Operator& mn = s.hops[(i + 1) % n];
    const Operator& mp = s.hops[(i + n - 1) % n];
    const Operator mmd = mi * adjoint(mi);
    const Operator sq = mmd * mmd;
    test(mi * mn * adjoint(mn) * adjoint(mi), sq, "(i) at i=" + std::to_string(i), false);
    test(sq, mmd, "(ii) at i=" + std::to_string(i), false);
    test(mmd, adjoint(mp) * mp, "(iii) at i=" + std::to_string(i), false);
  }
  if (n > 0) test(s.gamma0 * s.hops[0] * adjoint(s.hops[0]) * s.gamma0, s.gamma0, "(iv)", true);
  return r;
}

/// (H0, V) together with the unperturbed ground projector P0.
struct GadgetPair {
  Operator h0, v, p0;
};

inline void require_projector(const Operator& g, const std::string& what) {
  if (operator_norm(g * g - g) > tol::kIdentity || operator_norm(g - adjoint(g)) > tol::kIdentity)
    throw PreconditionViolation(what + " is not an orthogonal projector");
}

/// H0 = -Gamma0 (x) |0><0|, V = sum_i (M_i^+ (x) |i+1><i| + M_i (x) |i><i+1|).
inline GadgetPair build_single_clock(const GadgetSpec& s) {
  const auto rep = check_proportionality(s);
  if (!rep.ok) throw PreconditionViolation("gadget " + s.label + ": proportionality condition " + rep.failure);
  require_projector(s.gamma0, "Gamma0 of " + s.label);
  const LayoutPtr& l = s.layout();
  if (l->dim_of(s.clock) != s.n()) throw std::invalid_argument("clock dimension does not match number of hops");
  const Operator p0 = s.gamma0 * clock_op(l, s.clock, 0, 0);
  Operator v = Operator::zero(l);
  for (int i = 0; i < s.n(); ++i) {
    v = v + adjoint(s.hops[i]) * clock_op(l, s.clock, i + 1, i);
    v = v + s.hops[i] * clock_op(l, s.clock, i, i + 1);
  }
  return {scale(p0, -1.0), v, p0};
}

/// Gamma0 M_0...M_{n-1} Gamma0 + h.c., tensored with |0><0| on the clock.
inline Operator target_operator(const GadgetSpec& s) {
  Operator prod = s.gamma0;
  for (const auto& m : s.hops) prod = prod * m;
  prod = prod * s.gamma0;
  return (prod + adjoint(prod)) * clock_op(s.layout(), s.clock, 0, 0);
}

// ---------------------------------------------------------------------------
// Quantum double gadgets

struct SiteRef {
  SiteKind kind;
  int id;
  bool operator==(const SiteRef&) const = default;
};

inline std::string register_id(const SiteRef& s) {
  return s.kind == SiteKind::vertex ? vertex_register_id(s.id) : plaquette_register_id(s.id);
}
inline std::string clock_id(const SiteRef& s) {
  return (s.kind == SiteKind::vertex ? "Iv" : "Ip") + std::to_string(s.id);
}
inline std::string site_name(const SiteRef& s) { return (s.kind == SiteKind::vertex ? "v" : "p") + std::to_string(s.id); }

/// Clock dimension: the plaquette size of the lattice (4 square, 6 honeycomb).
inline int gadget_clock_dim(const QdModel& m) { return static_cast<int>(boundary(m.lattice, 0).size()); }

/// Edges touched by the sites, then (R, I) per site in the given order.
inline LayoutPtr gadget_layout(const QdModel& m, const std::vector<SiteRef>& sites) {
  std::vector<int> es;
  std::vector<Factor> extra;
  std::uint64_t dim = 1;
  const int n = gadget_clock_dim(m);
  for (const auto& s : sites) {
    for (int e : site_edges(m, s.kind, s.id)) es.push_back(e);
    extra.push_back({register_id(s), m.group.order, Role::r_register});
    extra.push_back({clock_id(s), n, Role::clock});
    dim *= static_cast<std::uint64_t>(m.group.order) * n;
  }
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  for (std::size_t i = 0; i < es.size(); ++i) dim *= static_cast<std::uint64_t>(m.group.order);
  enforce_dim_cap(dim);
  return edge_layout(m, es, extra);
}

/// Plaquette spec: Gamma0 = |1><1| on R_p, hops M_i^p in boundary order.
inline GadgetSpec plaquette_spec(const QdModel& m, int p, const LayoutPtr& l) {
  const SiteRef s{SiteKind::plaquette, p};
  const DenseVec psi = reduced_psi(m.group, SiteKind::plaquette);
  GadgetSpec g;
  g.label = site_name(s);
  g.clock = clock_id(s);
  g.gamma0 = embed(l, {register_id(s)}, psi * psi.adjoint());
  for (const auto& t : site_triangles(m, SiteKind::plaquette, p))
    g.hops.push_back(m_operator(m, t, Representation::reduced, l, register_id(s)));
  return g;
}

/// Vertex spec: Gamma0 = |Psi><Psi| uniform on R_v, hops M_i^v then identities up to n.
inline GadgetSpec vertex_spec(const QdModel& m, int v, const LayoutPtr& l) {
  const SiteRef s{SiteKind::vertex, v};
  const DenseVec psi = reduced_psi(m.group, SiteKind::vertex);
  GadgetSpec g;
  g.label = site_name(s);
  g.clock = clock_id(s);
  g.gamma0 = embed(l, {register_id(s)}, psi * psi.adjoint());
  for (const auto& t : site_triangles(m, SiteKind::vertex, v))
    g.hops.push_back(m_operator(m, t, Representation::reduced, l, register_id(s)));
  const int n = l->dim_of(g.clock);
  if (static_cast<int>(g.hops.size()) > n) throw std::invalid_argument("vertex degree exceeds clock dimension");
  while (static_cast<int>(g.hops.size()) < n) g.hops.push_back(Operator::identity(l));
  return g;
}

inline GadgetSpec site_spec(const QdModel& m, const SiteRef& s, const LayoutPtr& l) {
  return s.kind == SiteKind::vertex ? vertex_spec(m, s.id, l) : plaquette_spec(m, s.id, l);
}

/// A(v) or B(p) (x) |Psi><Psi|_R (x) |0><0|_I on the gadget layout.
inline Operator site_target(const QdModel& m, const SiteRef& s, const LayoutPtr& l) {
  const Operator x = s.kind == SiteKind::vertex ? vertex_operator(m, s.id, l) : plaquette_operator(m, s.id, l);
  const DenseVec psi = reduced_psi(m.group, s.kind);
  return x * embed(l, {register_id(s)}, psi * psi.adjoint()) * clock_op(l, clock_id(s), 0, 0);
}

struct SiteGadget {
  LayoutPtr layout;
  GadgetSpec spec;
  GadgetPair pair;
};

inline SiteGadget build_plaquette_gadget(const QdModel& m, int p) {
  SiteGadget g;
  g.layout = gadget_layout(m, {{SiteKind::plaquette, p}});
  g.spec = plaquette_spec(m, p, g.layout);
  g.pair = build_single_clock(g.spec);
  return g;
}

inline SiteGadget build_vertex_gadget(const QdModel& m, int v) {
  SiteGadget g;
  g.layout = gadget_layout(m, {{SiteKind::vertex, v}});
  g.spec = vertex_spec(m, v, g.layout);
  g.pair = build_single_clock(g.spec);
  return g;
}

/**
 * @brief chi sets for the listed sites: a vertex hop on edge e waits for the
 * plaquettes beside e, a plaquette hop on e waits for the endpoints of e.
 * Only sites present in the list count; identity pads get none.
 */
inline ChiMap chi_sets(const QdModel& m, const std::vector<SiteRef>& sites) {
  ChiMap chi(sites.size());
  auto position = [&](SiteRef r) {
    auto it = std::find(sites.begin(), sites.end(), r);
    return it == sites.end() ? -1 : static_cast<int>(it - sites.begin());
  };
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const auto& s = sites[a];
    for (const auto& t : site_triangles(m, s.kind, s.id)) {
      const Edge& e = m.lattice.edges[t.edge];
      std::vector<int> set;
      const std::vector<SiteRef> nbrs = s.kind == SiteKind::vertex
                                            ? std::vector<SiteRef>{{SiteKind::plaquette, e.p_minus}, {SiteKind::plaquette, e.p_plus}}
                                            : std::vector<SiteRef>{{SiteKind::vertex, e.v_minus}, {SiteKind::vertex, e.v_plus}};
      for (const auto& nb : nbrs) {
        const int pos = position(nb);
        if (pos >= 0 && std::find(set.begin(), set.end(), pos) == set.end()) set.push_back(pos);
      }
      std::sort(set.begin(), set.end());
      chi[a].push_back(set);
    }
    if (s.kind == SiteKind::vertex)
      while (static_cast<int>(chi[a].size()) < gadget_clock_dim(m)) chi[a].push_back({});
  }
  return chi;
}

/// Per-(alpha,i) set of beta whose hops fail to commute with M_i^alpha (or its adjoint).
inline ChiMap noncommuting_sets(const std::vector<GadgetSpec>& specs, double threshold = tol::kIdentity) {
  ChiMap out(specs.size());
  for (std::size_t a = 0; a < specs.size(); ++a)
    for (int i = 0; i < specs[a].n(); ++i) {
      std::vector<int> set;
      for (std::size_t b = 0; b < specs.size(); ++b) {
        if (a == b) continue;
        for (const auto& mj : specs[b].hops) {
          const Operator& mi = specs[a].hops[i];
          if (operator_norm(commutator(mi, mj)) > threshold || operator_norm(commutator(mi, adjoint(mj))) > threshold) {
            set.push_back(static_cast<int>(b));
            break;
          }
        }
      }
      out[a].push_back(set);
    }
  return out;
}

struct MultiClockCheck {
  double max_gamma_commutator = 0.0;    // [M_i^a, Gamma0^b], [M_i^a^+, Gamma0^b]
  double max_special_commutator = 0.0;  // [M_i^a, M_0^b^+ M_0^b] and adjoint
  double max_gamma_pair = 0.0;          // [Gamma0^a, Gamma0^b]
  std::string worst_pair;
  bool ok() const {
    return max_gamma_commutator <= tol::kIdentity && max_special_commutator <= tol::kIdentity &&
           max_gamma_pair <= tol::kIdentity;
  }
};

inline MultiClockCheck check_multi_clock_preconditions(const std::vector<GadgetSpec>& specs) {
  MultiClockCheck c;
  double worst = -1.0;
  for (std::size_t a = 0; a < specs.size(); ++a)
    for (std::size_t b = 0; b < specs.size(); ++b) {
      if (a == b) continue;
      const Operator& gb = specs[b].gamma0;
      const Operator mm = adjoint(specs[b].hops[0]) * specs[b].hops[0];
      c.max_gamma_pair = std::max(c.max_gamma_pair, operator_norm(commutator(specs[a].gamma0, gb)));
      for (const auto& mi : specs[a].hops) {
        const double g1 = std::max(operator_norm(commutator(mi, gb)), operator_norm(commutator(adjoint(mi), gb)));
        const double g2 = std::max(operator_norm(commutator(mi, mm)), operator_norm(commutator(adjoint(mi), mm)));
        c.max_gamma_commutator = std::max(c.max_gamma_commutator, g1);
        c.max_special_commutator = std::max(c.max_special_commutator, g2);
        if (std::max(g1, g2) > worst) {
          worst = std::max(g1, g2);
          c.worst_pair = specs[a].label + " vs " + specs[b].label;
        }
      }
    }
  return c;
}

/// H0 = -sum_a Gamma0^a (x) |0><0|_a; V hops dressed with chi-hat projectors.
inline GadgetPair build_multi_clock(const std::vector<GadgetSpec>& specs, const ChiMap& chi) {
  if (specs.empty()) throw std::invalid_argument("build_multi_clock: no gadgets");
  if (chi.size() != specs.size()) throw std::invalid_argument("build_multi_clock: chi map size mismatch");
  const LayoutPtr& l = specs.front().layout();
  for (const auto& s : specs) {
    const auto rep = check_proportionality(s);
    if (!rep.ok) throw PreconditionViolation("gadget " + s.label + ": proportionality condition " + rep.failure);
    require_projector(s.gamma0, "Gamma0 of " + s.label);
    if (l->dim_of(s.clock) != s.n()) throw std::invalid_argument("clock dimension does not match hops of " + s.label);
  }
  const auto pre = check_multi_clock_preconditions(specs);
  if (!pre.ok())
    throw PreconditionViolation("commutation precondition fails for " + pre.worst_pair + " (max " +
                                std::to_string(std::max(pre.max_gamma_commutator, pre.max_special_commutator)) + ")");
  Operator h0 = Operator::zero(l), v = Operator::zero(l), p0 = Operator::identity(l);
  for (std::size_t a = 0; a < specs.size(); ++a) {
    const auto& s = specs[a];
    const Operator pa = s.gamma0 * clock_op(l, s.clock, 0, 0);
    h0 = h0 - pa;
    p0 = p0 * pa;
    if (chi[a].size() != static_cast<std::size_t>(s.n())) throw std::invalid_argument("chi map has wrong hop count");
    for (int i = 0; i < s.n(); ++i) {
      Operator dress = Operator::identity(l);
      for (int b : chi[a][i]) {
        if (b == static_cast<int>(a)) throw std::invalid_argument("chi(alpha,i) contains alpha");
        dress = dress * clock_op(l, specs[b].clock, 0, 0);
      }
      v = v + adjoint(s.hops[i]) * clock_op(l, s.clock, i + 1, i) * dress;
      v = v + s.hops[i] * clock_op(l, s.clock, i, i + 1) * dress;
    }
  }
  return {h0, v, p0};
}

enum class AssemblyMode { vertices_only, plaquettes_only, full };

inline AssemblyMode assembly_mode_from_string(const std::string& s) {
  if (s == "vertices-only") return AssemblyMode::vertices_only;
  if (s == "plaquettes-only") return AssemblyMode::plaquettes_only;
  if (s == "full") return AssemblyMode::full;
  throw std::invalid_argument("unknown assembly mode: " + s);
}

struct Assembly {
  LayoutPtr layout;
  std::vector<SiteRef> sites;
  std::vector<GadgetSpec> specs;
  ChiMap chi;
  GadgetPair pair;
};

/// Multi-clock assembly over an explicit site list.
inline Assembly build_site_assembly(const QdModel& m, const std::vector<SiteRef>& sites, bool with_chi = true) {
  Assembly a;
  a.sites = sites;
  a.layout = gadget_layout(m, sites);
  for (const auto& s : sites) a.specs.push_back(site_spec(m, s, a.layout));
  a.chi = with_chi ? chi_sets(m, sites) : ChiMap{};
  if (!with_chi)
    for (const auto& s : a.specs) a.chi.push_back(std::vector<std::vector<int>>(s.n()));
  a.pair = build_multi_clock(a.specs, a.chi);
  return a;
}

/// Every vertex and/or plaquette of the lattice; single-type modes carry empty chi.
inline Assembly build_full_assembly(const QdModel& m, AssemblyMode mode) {
  std::vector<SiteRef> sites;
  if (mode != AssemblyMode::plaquettes_only)
    for (int v = 0; v < m.lattice.num_vertices; ++v) sites.push_back({SiteKind::vertex, v});
  if (mode != AssemblyMode::vertices_only)
    for (int p = 0; p < m.lattice.num_plaquettes; ++p) sites.push_back({SiteKind::plaquette, p});
  return build_site_assembly(m, sites, mode == AssemblyMode::full);
}

}  // namespace qdlab
