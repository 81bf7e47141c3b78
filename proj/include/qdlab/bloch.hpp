#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qdlab/gadget.hpp"

namespace qdlab {

using IndexTuple = std::vector<int>;

/// P_m: m-tuples of nonnegative integers with sum m and every prefix sum >= its length.
inline std::vector<IndexTuple> enumerate_pm(int m) {
  if (m < 0) throw std::invalid_argument("enumerate_pm: negative order");
  std::vector<IndexTuple> out;
  IndexTuple cur;
  std::function<void(int)> rec = [&](int sum) {
    const int p = static_cast<int>(cur.size());
    if (p == m) {
      if (sum == m) out.push_back(cur);
      return;
    }
    for (int l = m - sum; l >= 0; --l) {
      if (sum + l < p + 1 && p + 1 < m) continue;  // prefix of length p+1 must reach p+1
      cur.push_back(l);
      rec(sum + l);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral data of the shifted unperturbed Hamiltonian

/// Distinct energies of h0 (ascending, first is 0) with their eigenprojectors.
struct EnergyDecomposition {
  std::vector<double> energies;
  std::vector<Operator> projectors;

  const Operator& p0() const { return projectors.front(); }
  double first_gap() const { return energies.size() > 1 ? energies[1] : 0.0; }
  Operator hamiltonian() const {
    Operator h = Operator::zero(p0().layout());
    for (std::size_t k = 0; k < energies.size(); ++k) h = h + scale(projectors[k], energies[k]);
    return h;
  }
};

/**
 * @brief Commuting projector family P^a_0: h0 = sum_a (I - P^a_0).
 *
 * P_E collects prod_a P^a_{eps_a} over all eps with sum eps = E, P^a_1 = I - P^a_0.
 */
inline EnergyDecomposition decompose_projector_family(const std::vector<Operator>& family) {
  if (family.empty()) throw std::invalid_argument("empty projector family");
  const LayoutPtr& l = family.front().layout();
  const int L = static_cast<int>(family.size());
  std::vector<Operator> acc(L + 1, Operator::zero(l));
  for (int mask = 0; mask < (1 << L); ++mask) {
    Operator prod = Operator::identity(l);
    for (int a = 0; a < L; ++a) prod = prod * ((mask >> a & 1) ? Operator::identity(l) - family[a] : family[a]);
    acc[__builtin_popcount(static_cast<unsigned>(mask))] = acc[__builtin_popcount(static_cast<unsigned>(mask))] + prod;
  }
  EnergyDecomposition d;
  for (int e = 0; e <= L; ++e)
    if (acc[e].nnz() > 0 || e == 0) {
      d.energies.push_back(e);
      d.projectors.push_back(acc[e]);
    }
  return d;
}

/// Dense route: group eigenvalues of h0 within 1e-8. Requires ground energy 0.
inline EnergyDecomposition decompose_dense(const Operator& h0) {
  if (!is_hermitian(h0)) throw std::invalid_argument("decompose_dense: h0 not Hermitian");
  Eigen::SelfAdjointEigenSolver<DenseMat> es(to_dense(h0));
  const auto& ev = es.eigenvalues();
  if (std::abs(ev(0)) > tol::kIdentity)
    throw std::invalid_argument("unperturbed Hamiltonian is not shifted: ground energy " + std::to_string(ev(0)));
  EnergyDecomposition d;
  Eigen::Index start = 0;
  while (start < ev.size()) {
    Eigen::Index end = start + 1;
    while (end < ev.size() && ev(end) - ev(start) < 1e-8) ++end;
    const DenseMat vecs = es.eigenvectors().middleCols(start, end - start);
    d.energies.push_back(start == 0 ? 0.0 : ev.segment(start, end - start).mean());
    d.projectors.push_back(from_dense(h0.layout(), vecs * vecs.adjoint()));
    start = end;
  }
  return d;
}

inline Operator reduced_resolvent(const EnergyDecomposition& d, int ell) {
  if (ell < 0) throw std::invalid_argument("reduced_resolvent: negative power");
  if (ell == 0) return scale(d.p0(), -1.0);
  Operator s = Operator::zero(d.p0().layout());
  for (std::size_t k = 1; k < d.energies.size(); ++k) s = s + scale(d.projectors[k], std::pow(-d.energies[k], -ell));
  return s;
}

/// S^ell for a shifted h0 with ground projector p0 (dense spectral route).
inline Operator reduced_resolvent(const Operator& h0, int ell, const Operator& p0) {
  const auto d = decompose_dense(h0);
  if (frobenius_norm(d.p0() - p0) > 1e-8) throw std::invalid_argument("p0 is not the ground projector of h0");
  return reduced_resolvent(d, ell);
}

// ---------------------------------------------------------------------------
// Series terms

struct BlochTerm {
  int order = 0;
  char kind = 'A';  // 'A' or 'U'
  Operator op;
  std::vector<IndexTuple> tuples;
};

/**
 * @brief Shifted h0 (via its decomposition), V and cached resolvent powers.
 */
class BlochContext {
 public:
  BlochContext(EnergyDecomposition d, Operator v) : d_(std::move(d)), v_(std::move(v)) {
    require_same_layout(d_.p0(), v_);
  }

  const Operator& v() const { return v_; }
  const Operator& p0() const { return d_.p0(); }
  const EnergyDecomposition& decomposition() const { return d_; }
  const LayoutPtr& layout() const { return v_.layout(); }

  const Operator& resolvent(int ell) {
    auto it = s_.find(ell);
    if (it == s_.end()) it = s_.emplace(ell, reduced_resolvent(d_, ell)).first;
    return it->second;
  }

 private:
  EnergyDecomposition d_;
  Operator v_;
  std::map<int, Operator> s_;
};

/// Context for a gadget pair; family holds the per-clock P^a_0.
inline BlochContext make_context(const GadgetPair& pair, const std::vector<Operator>& family) {
  return BlochContext(decompose_projector_family(family), pair.v);
}

inline BlochContext make_context(const GadgetPair& pair) { return make_context(pair, {pair.p0}); }

inline std::vector<Operator> clock_projector_family(const std::vector<GadgetSpec>& specs) {
  std::vector<Operator> fam;
  for (const auto& s : specs) fam.push_back(s.gamma0 * clock_op(s.layout(), s.clock, 0, 0));
  return fam;
}

/// A^(m) = sum over P_{m-1} of P0 V S^{l1} V ... S^{l_{m-1}} V P0, evaluated left to right.
inline BlochTerm bloch_a_term(BlochContext& ctx, int m) {
  BlochTerm t;
  t.order = m;
  t.kind = 'A';
  t.op = Operator::zero(ctx.layout());
  if (m == 0) return t;
  const Operator p0v = ctx.p0() * ctx.v();
  for (const auto& ell : enumerate_pm(m - 1)) {
    Operator x = p0v;
    for (int l : ell) x = x * ctx.resolvent(l) * ctx.v();
    t.op = t.op + x * ctx.p0();
    t.tuples.push_back(ell);
  }
  return t;
}

/// U^(m) = sum over P_m of S^{l1} V ... S^{lm} V P0 (suffix products memoized).
inline BlochTerm bloch_u_term(BlochContext& ctx, int m) {
  BlochTerm t;
  t.order = m;
  t.kind = 'U';
  if (m == 0) {
    t.op = ctx.p0();
    t.tuples.push_back({});
    return t;
  }
  std::map<IndexTuple, Operator> memo;
  std::function<Operator(const IndexTuple&, std::size_t)> suffix = [&](const IndexTuple& ell, std::size_t j) -> Operator {
    if (j == ell.size()) return ctx.p0();
    IndexTuple key(ell.begin() + static_cast<long>(j), ell.end());
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    Operator r = ctx.resolvent(ell[j]) * (ctx.v() * suffix(ell, j + 1));
    memo.emplace(key, r);
    return r;
  };
  t.op = Operator::zero(ctx.layout());
  for (const auto& ell : enumerate_pm(m)) {
    t.op = t.op + suffix(ell, 0);
    t.tuples.push_back(ell);
  }
  return t;
}

inline BlochTerm bloch_a_term(const Operator& h0, const Operator& v, const Operator& p0, int m) {
  auto d = decompose_dense(h0);
  if (frobenius_norm(d.p0() - p0) > 1e-8) throw std::invalid_argument("p0 is not the ground projector of h0");
  BlochContext ctx(std::move(d), v);
  return bloch_a_term(ctx, m);
}

inline BlochTerm bloch_u_term(const Operator& h0, const Operator& v, const Operator& p0, int m) {
  auto d = decompose_dense(h0);
  if (frobenius_norm(d.p0() - p0) > 1e-8) throw std::invalid_argument("p0 is not the ground projector of h0");
  BlochContext ctx(std::move(d), v);
  return bloch_u_term(ctx, m);
}

/// U A U^+ with every product truncated at total order max_order.
inline Operator effective_hamiltonian_series(BlochContext& ctx, double lambda, int max_order) {
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  std::vector<Operator> u, a;
  for (int k = 0; k <= max_order; ++k) {
    u.push_back(bloch_u_term(ctx, k).op);
    a.push_back(bloch_a_term(ctx, k).op);
  }
  Operator h = Operator::zero(ctx.layout());
  for (int i = 0; i <= max_order; ++i)
    for (int j = 1; i + j <= max_order; ++j)
      for (int k = 0; i + j + k <= max_order; ++k)
        h = h + scale(u[i] * a[j] * adjoint(u[k]), std::pow(lambda, i + j + k));
  return h;
}

/// Pi = U P0 U^+ truncated at total order max_order.
inline Operator projector_series(BlochContext& ctx, double lambda, int max_order) {
  std::vector<Operator> u;
  for (int k = 0; k <= max_order; ++k) u.push_back(bloch_u_term(ctx, k).op);
  Operator pi = Operator::zero(ctx.layout());
  for (int i = 0; i <= max_order; ++i)
    for (int k = 0; i + k <= max_order; ++k) pi = pi + scale(u[i] * ctx.p0() * adjoint(u[k]), std::pow(lambda, i + k));
  return pi;
}

/**
 * @brief Orthonormalized forms: U N^-1 U^+ and U A N^-1 U^+ with N = P0 U^+ U P0.
 *
 * U P0 U^+ is not a projector beyond first order since U^+ U != P0; these are
 * the spectral projector and H Pi of the exact low-energy space, to the same order.
 */
struct NormalizedSeries {
  Operator pi, heff;
};

inline NormalizedSeries normalized_series(BlochContext& ctx, double lambda, int max_order) {
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  Operator u = Operator::zero(ctx.layout()), a = Operator::zero(ctx.layout());
  for (int k = 0; k <= max_order; ++k) {
    u = u + scale(bloch_u_term(ctx, k).op, std::pow(lambda, k));
    a = a + scale(bloch_a_term(ctx, k).op, std::pow(lambda, k));
  }
  const Operator& p0 = ctx.p0();
  const Operator dev = p0 - p0 * adjoint(u) * u * p0;  // O(lambda^2)
  Operator inv = p0, term = p0;
  for (int j = 1; 2 * j <= max_order; ++j) {
    term = term * dev;
    inv = inv + term;
  }
  return {u * inv * adjoint(u), u * a * inv * adjoint(u)};
}

struct ExactEffective {
  Operator heff, pi;
  std::vector<double> energies;
};

/// sum E_i |phi_i><phi_i| and the projector from one eigensolve.
inline ExactEffective exact_effective(const Operator& h, int d) {
  const EigenPairs ep = detail::checked_cut(h, d);
  Eigen::VectorXd e(d);
  for (int i = 0; i < d; ++i) e(i) = ep.energies[i];
  return {from_dense(h.layout(), ep.states * e.cast<cplx>().asDiagonal() * ep.states.adjoint()),
          from_dense(h.layout(), ep.states * ep.states.adjoint()), ep.energies};
}

// ---------------------------------------------------------------------------
// g coefficients

/// Single clock: (-1)^{m-1} sum over P_{m-1} tuples with support eps of (-1)^{sum(eps+l)}.
inline long g_coefficient(const std::vector<int>& eps) {
  const int m = static_cast<int>(eps.size()) + 1;
  long total = 0;
  for (const auto& ell : enumerate_pm(m - 1)) {
    bool match = true;
    int s = 0;
    for (int i = 0; i < m - 1; ++i) {
      if ((ell[i] > 0) != (eps[i] != 0)) {
        match = false;
        break;
      }
      s += eps[i] + ell[i];
    }
    if (match) total += (s % 2 == 0) ? 1 : -1;
  }
  return (m - 1) % 2 == 0 ? total : -total;
}

/// h_l(E): l_i = 0 contributes -[E_i = 0] (from S^0 = -P0), l_i > 0 contributes (-E_i)^{-l_i} if E_i > 0.
inline double h_ell(const IndexTuple& ell, const std::vector<int>& column_sums) {
  double v = 1.0;
  for (std::size_t i = 0; i < ell.size(); ++i) {
    const int e = column_sums[i];
    if (ell[i] == 0)
      v *= e == 0 ? -1.0 : 0.0;
    else
      v *= e == 0 ? 0.0 : std::pow(-double(e), -ell[i]);
    if (v == 0.0) break;
  }
  return v;
}

/// Multi-clock: eps[alpha][j]; g_m = sum over P_{m-1} of h_l(column sums).
inline double g_coefficient_multi(const std::vector<std::vector<int>>& eps) {
  if (eps.empty()) throw std::invalid_argument("g_coefficient_multi: no clocks");
  const std::size_t len = eps.front().size();
  std::vector<int> sums(len, 0);
  for (const auto& row : eps) {
    if (row.size() != len) throw std::invalid_argument("g_coefficient_multi: ragged eps");
    for (std::size_t j = 0; j < len; ++j) sums[j] += row[j];
  }
  double g = 0.0;
  for (const auto& ell : enumerate_pm(static_cast<int>(len))) g += h_ell(ell, sums);
  return g;
}

// ---------------------------------------------------------------------------
// Diagrams

/// One step of a clock: up = W_hop^+ (hop -> hop+1), down = W_hop (hop+1 -> hop).
struct Arrow {
  int clock = 0;
  int hop = 0;
  bool up = false;
  bool operator==(const Arrow&) const = default;
};

/**
 * @brief Diagram (eps, Y). eps[alpha][j] is the circle between Y_{j+1} and Y_{j+2};
 * arrows[j] is Y_{j+1}. Idle clocks carry horizontal arrows implicitly.
 */
struct Diagram {
  int order = 0;
  int clocks = 1;
  std::vector<std::vector<int>> eps;
  std::vector<Arrow> arrows;
};

inline std::string to_string(const Diagram& d) {
  std::string s;
  for (int a = 0; a < d.clocks; ++a) {
    s += "eps" + std::to_string(a) + "=";
    for (int x : d.eps[a]) s += std::to_string(x);
    s += " ";
  }
  s += "Y=";
  for (const auto& y : d.arrows)
    s += (d.clocks > 1 ? std::to_string(y.clock) + ":" : "") + "W" + std::to_string(y.hop) + (y.up ? "+" : "") + " ";
  return s;
}

namespace detail {
inline void check_diagram_limits(int n, int m, int clocks) {
  if (m < 1 || m > n) throw std::invalid_argument("diagram order must satisfy 1 <= m <= n");
  if (m > 8) throw std::invalid_argument("diagram order capped at 8");
  if (clocks < 1 || clocks > 3) throw std::invalid_argument("diagram clock count capped at 3");
}
}  // namespace detail

/// Replays the diagram from the right; true iff every validity rule holds.
inline bool is_valid_diagram(const Diagram& d, int n, const ChiMap* chi = nullptr) {
  const int m = d.order, L = d.clocks;
  if (static_cast<int>(d.arrows.size()) != m || static_cast<int>(d.eps.size()) != L) return false;
  for (const auto& row : d.eps)
    if (static_cast<int>(row.size()) != m - 1) return false;
  auto eps_at = [&](int a, int circle) {  // circle 0 and m are the P0 ends
    return (circle == 0 || circle == m) ? 0 : d.eps[a][circle - 1];
  };
  std::vector<int> h(L, 0);
  for (int j = m; j >= 1; --j) {
    const Arrow& y = d.arrows[j - 1];
    if (y.clock < 0 || y.clock >= L || y.hop < 0 || y.hop >= n) return false;
    const int a = y.clock;
    if (y.up) {
      if (y.hop != h[a]) return false;
    } else if (y.hop != (h[a] + n - 1) % n) {
      return false;
    }
    if (chi)
      for (int b : (*chi)[a][y.hop])
        if (h[b] != 0) return false;
    h[a] = y.up ? (h[a] + 1) % n : (h[a] + n - 1) % n;
    for (int b = 0; b < L; ++b) {
      if (b != a && eps_at(b, j - 1) != eps_at(b, j)) return false;
      if (eps_at(b, j - 1) == 0 && h[b] != 0) return false;
    }
  }
  return true;
}

/// All structurally nonvanishing diagrams of order m (single clock if chi is null and clocks == 1).
inline std::vector<Diagram> enumerate_valid_diagrams(int n, int m, int clocks = 1, const ChiMap* chi = nullptr) {
  detail::check_diagram_limits(n, m, clocks);
  std::vector<Diagram> out;
  Diagram cur;
  cur.order = m;
  cur.clocks = clocks;
  cur.eps.assign(clocks, std::vector<int>(m - 1, 0));
  cur.arrows.assign(m, Arrow{});
  std::vector<int> h(clocks, 0);
  // Circle values right of slot j are cur.eps[.][j-1] (or 0 at j = m).
  std::function<void(int)> rec = [&](int j) {
    if (j == 0) {
      out.push_back(cur);
      return;
    }
    for (int a = 0; a < clocks; ++a)
      for (int dir = 0; dir < 2; ++dir) {
        const bool up = dir == 1;
        const int hop = up ? h[a] : (h[a] + n - 1) % n;
        if (chi) {
          bool idle = true;
          for (int b : (*chi)[a][hop]) idle = idle && h[b] == 0;
          if (!idle) continue;
        }
        const int old = h[a];
        h[a] = up ? (h[a] + 1) % n : (h[a] + n - 1) % n;
        cur.arrows[j - 1] = {a, hop, up};
        if (j == 1) {
          bool home = true;
          for (int b = 0; b < clocks; ++b) home = home && h[b] == 0;
          bool idle_ok = true;  // idle clocks keep color 0 into the left end
          for (int b = 0; b < clocks; ++b)
            if (b != a && m > 1 && cur.eps[b][0] != 0) idle_ok = false;
          if (home && idle_ok) rec(0);
        } else {
          // Choose the circle left of slot j for the active clock; idle clocks copy.
          for (int b = 0; b < clocks; ++b)
            if (b != a) cur.eps[b][j - 2] = (j == m) ? 0 : cur.eps[b][j - 1];
          for (int e = 0; e < 2; ++e) {
            if (e == 0 && h[a] != 0) continue;
            cur.eps[a][j - 2] = e;
            bool ok = true;
            for (int b = 0; b < clocks; ++b)
              if (cur.eps[b][j - 2] == 0 && h[b] != 0) ok = false;
            if (ok) rec(j - 1);
          }
          cur.eps[a][j - 2] = 0;
        }
        h[a] = old;
      }
  };
  rec(m);
  return out;
}

/// Theta_down (all W_i, clock a) and Theta_up (all W_i^+) at order n.
inline bool is_special(const Diagram& d, int n) {
  if (d.order != n) return false;
  const int a = d.arrows.front().clock;
  for (const auto& y : d.arrows)
    if (y.clock != a || y.up != d.arrows.front().up) return false;
  for (int b = 0; b < d.clocks; ++b)
    for (int x : d.eps[b])
      if (x != (b == a ? 1 : 0)) return false;
  return true;
}

inline Diagram special_diagram(int n, int clocks, int clock, bool up) {
  Diagram d;
  d.order = n;
  d.clocks = clocks;
  d.eps.assign(clocks, std::vector<int>(n - 1, 0));
  d.eps[clock].assign(n - 1, 1);
  for (int j = 1; j <= n; ++j) d.arrows.push_back({clock, up ? n - j : j - 1, up});
  return d;
}

/**
 * @brief Materialized clock operators: W_i^a = M_i^a (x) |i><i+1|_a (x) chi-hat(a,i),
 * per-clock P^a_0, P^a_1 and the joint P0.
 */
struct ClockSystem {
  LayoutPtr layout;
  int n = 0;
  std::vector<std::vector<Operator>> w;  // lowering operators
  std::vector<Operator> p0a, p1a;
  Operator p0;
};

inline ClockSystem make_clock_system(const std::vector<GadgetSpec>& specs, const ChiMap* chi = nullptr) {
  ClockSystem cs;
  cs.layout = specs.front().layout();
  cs.n = specs.front().n();
  cs.p0 = Operator::identity(cs.layout);
  for (std::size_t a = 0; a < specs.size(); ++a) {
    const auto& s = specs[a];
    if (s.n() != cs.n) throw std::invalid_argument("clock systems need a common clock dimension");
    const Operator pa = s.gamma0 * clock_op(cs.layout, s.clock, 0, 0);
    cs.p0a.push_back(pa);
    cs.p1a.push_back(Operator::identity(cs.layout) - pa);
    cs.p0 = cs.p0 * pa;
    std::vector<Operator> ws;
    for (int i = 0; i < s.n(); ++i) {
      Operator dress = Operator::identity(cs.layout);
      if (chi)
        for (int b : (*chi)[a][i]) dress = dress * clock_op(cs.layout, specs[b].clock, 0, 0);
      ws.push_back(s.hops[i] * clock_op(cs.layout, s.clock, i, i + 1) * dress);
    }
    cs.w.push_back(ws);
  }
  return cs;
}

namespace detail {
/// Theta without the validity check (invalid diagrams should give zero).
inline Operator theta_unchecked(const Diagram& d, const ClockSystem& cs) {
  Operator x = cs.p0;
  for (int j = d.order; j >= 1; --j) {
    const Arrow& y = d.arrows[j - 1];
    const Operator& w = cs.w[y.clock][y.hop];
    x = (y.up ? adjoint(w) : w) * x;
    if (j > 1)
      for (int a = 0; a < d.clocks; ++a) x = (d.eps[a][j - 2] ? cs.p1a[a] : cs.p0a[a]) * x;
  }
  return cs.p0 * x;
}
}  // namespace detail

/// Theta(eps, Y) = P0 Y_1 P_{eps_1} Y_2 ... P_{eps_{m-1}} Y_m P0.
inline Operator theta_operator(const Diagram& d, const ClockSystem& cs, const ChiMap* chi = nullptr) {
  if (d.clocks != static_cast<int>(cs.w.size()) || !is_valid_diagram(d, cs.n, chi))
    throw std::invalid_argument("theta_operator: invalid diagram " + to_string(d));
  return detail::theta_unchecked(d, cs);
}

inline double diagram_weight(const Diagram& d) {
  return d.clocks == 1 ? static_cast<double>(g_coefficient(d.eps.front())) : g_coefficient_multi(d.eps);
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

struct ConvergenceRow {
  int order;
  double u_norm;
  double refined_bound;  // (16 gamma)^m
  double naive_bound;    // (||V||/E1)^m 4^m
  bool within_refined;
};

struct ConvergenceReport {
  double gamma = 0.0;
  double v_norm = 0.0;
  double e1 = 0.0;
  double refined_threshold = 0.0;  // 1/(16 gamma)
  double naive_threshold = 0.0;    // E1/(4 ||V||)
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<double, double>> lambda_partial_sums;  // lambda, sum_m lambda^m ||U^(m)||
  bool all_within() const {
    for (const auto& r : rows)
      if (!r.within_refined) return false;
    return true;
  }
};

inline ConvergenceReport convergence_report(BlochContext& ctx, const ClockSystem& cs, int max_order,
                                            const std::vector<double>& lambda_grid) {
  ConvergenceReport r;
  for (const auto& ws : cs.w)
    for (const auto& w : ws) r.gamma = std::max(r.gamma, operator_norm(w));
  r.v_norm = operator_norm(ctx.v());
  r.e1 = ctx.decomposition().first_gap();
  r.refined_threshold = 1.0 / (16.0 * r.gamma);
  r.naive_threshold = r.e1 / (4.0 * r.v_norm);
  std::vector<double> norms;
  for (int m = 0; m <= max_order; ++m) {
    const double un = operator_norm(bloch_u_term(ctx, m).op);
    norms.push_back(un);
    const double refined = std::pow(16.0 * r.gamma, m);
    r.rows.push_back({m, un, refined, std::pow(r.v_norm / r.e1, m) * std::pow(4.0, m), un <= refined * (1 + 1e-12)});
  }
  for (double lam : lambda_grid) {
    double s = 0.0;
    for (int m = 0; m <= max_order; ++m) s += std::pow(lam, m) * norms[m];
    r.lambda_partial_sums.push_back({lam, s});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Slope fit

/// Least-squares slope of log(residual) against log(lambda).
inline double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& residuals) {
  const std::size_t k = lambdas.size();
  if (k < 2 || residuals.size() != k) throw std::invalid_argument("loglog_slope: need >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double x = std::log(lambdas[i]), y = std::log(std::max(residuals[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace qdlab
