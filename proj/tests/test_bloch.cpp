#include <gtest/gtest.h>

#include <set>

#include "qdlab/bloch.hpp"

using namespace qdlab;

namespace {

QdModel square_z2() { return make_model(make_cyclic(2), build_square_torus(2, 2)); }

// Filter every tuple in {0..m}^m by the prefix rule.
std::set<IndexTuple> brute_pm(int m) {
  std::set<IndexTuple> out;
  IndexTuple t(m, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == m) {
      int s = 0;
      bool ok = true;
      for (int p = 0; p < m; ++p) {
        s += t[p];
        if (p + 1 < m && s < p + 1) ok = false;
      }
      if (ok && s == m) out.insert(t);
      return;
    }
    for (int v = 0; v <= m; ++v) {
      t[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

// Shifted single-clock h0 = I - P0.
Operator shifted(const GadgetPair& p) { return Operator::identity(p.p0.layout()) - p.p0; }

struct SquareGadget {
  SiteGadget g = build_plaquette_gadget(square_z2(), 0);
  BlochContext ctx = make_context(g.pair);
};

}  // namespace

TEST(IndexTuples, SmallOrders) {
  EXPECT_EQ(enumerate_pm(1), (std::vector<IndexTuple>{{1}}));
  const auto p2 = enumerate_pm(2);
  EXPECT_EQ(std::set<IndexTuple>(p2.begin(), p2.end()), (std::set<IndexTuple>{{2, 0}, {1, 1}}));
  EXPECT_EQ(enumerate_pm(0).size(), 1u);
  EXPECT_THROW(enumerate_pm(-1), std::invalid_argument);
}

TEST(IndexTuples, MatchBruteForceUpToEight) {
  for (int m = 1; m <= 8; ++m) {
    const auto got = enumerate_pm(m);
    const std::set<IndexTuple> uniq(got.begin(), got.end());
    EXPECT_EQ(uniq.size(), got.size()) << "duplicates at m=" << m;
    EXPECT_EQ(uniq, brute_pm(m)) << "m=" << m;
    EXPECT_LE(static_cast<double>(got.size()), std::pow(4.0, m));
  }
}

TEST(GCoefficient, SingleClockValues) {
  for (int n = 2; n <= 8; ++n) EXPECT_EQ(g_coefficient(std::vector<int>(n - 1, 1)), n % 2 == 0 ? -1 : 1) << n;
  EXPECT_EQ(g_coefficient({1}), -1);
  EXPECT_EQ(g_coefficient({}), 1);
  EXPECT_EQ(g_coefficient({0}), 0);  // P_1 has no zero entry
}

TEST(GCoefficient, MultiClockCollapse) {
  // One clock: h_l reduces to the single-clock sign rule.
  for (int m = 1; m <= 6; ++m)
    for (int mask = 0; mask < (1 << (m - 1)); ++mask) {
      std::vector<int> eps(m - 1);
      for (int j = 0; j < m - 1; ++j) eps[j] = mask >> j & 1;
      EXPECT_NEAR(g_coefficient_multi({eps}), double(g_coefficient(eps)), 1e-12);
    }
  // Two clocks whose column sums are all one.
  std::vector<std::vector<int>> eps{{1, 1, 0, 0, 0}, {0, 0, 1, 1, 1}};
  EXPECT_NEAR(g_coefficient_multi(eps), double(g_coefficient(std::vector<int>(5, 1))), 1e-12);
  EXPECT_NEAR(g_coefficient_multi(eps), -1.0, 1e-12);
}

TEST(Resolvent, SingleClockForm) {
  const auto g = build_plaquette_gadget(square_z2(), 0);
  const Operator h0 = shifted(g.pair);
  const Operator p1 = Operator::identity(g.layout) - g.pair.p0;
  EXPECT_LE(frobenius_norm(reduced_resolvent(h0, 0, g.pair.p0) + g.pair.p0), 1e-10);
  for (int l = 1; l <= 4; ++l)
    EXPECT_LE(frobenius_norm(reduced_resolvent(h0, l, g.pair.p0) - scale(p1, l % 2 ? -1.0 : 1.0)), 1e-10);
  EXPECT_THROW(reduced_resolvent(g.pair.h0, 1, g.pair.p0), std::invalid_argument);
}

TEST(Resolvent, MultiClockFamilyMatchesDense) {
  // Two independent toy clocks so the dense route stays small.
  const auto l = make_layout({{"S", 2, Role::edge}, {"A", 2, Role::clock}, {"B", 2, Role::clock}});
  DenseMat p = DenseMat::Zero(2, 2);
  p(0, 0) = 1.0;
  const Operator pa = embed(l, {"S"}, p) * embed(l, {"A"}, p);
  const Operator pb = embed(l, {"B"}, p);
  const auto fam = decompose_projector_family({pa, pb});
  const Operator h0 = scale(Operator::identity(l), 2.0) - pa - pb;
  const auto dense = decompose_dense(h0);
  ASSERT_EQ(fam.energies, dense.energies);
  for (int e = 0; e <= 2; ++e) {
    EXPECT_LE(frobenius_norm(fam.projectors[e] - dense.projectors[e]), 1e-10);
    for (int k = 0; k <= 3; ++k)
      EXPECT_LE(frobenius_norm(reduced_resolvent(fam, k) - reduced_resolvent(dense, k)), 1e-10);
  }
  EXPECT_LE(frobenius_norm(reduced_resolvent(fam, 1) - scale(fam.projectors[1], -1.0) - scale(fam.projectors[2], -0.5)),
            1e-12);
}

TEST(BlochTerms, LowOrdersAndIdentity) {
  SquareGadget s;
  EXPECT_EQ(bloch_a_term(s.ctx, 0).op.nnz(), 0);
  EXPECT_EQ(frobenius_norm(bloch_a_term(s.ctx, 1).op), 0.0);
  EXPECT_EQ(frobenius_norm(bloch_u_term(s.ctx, 0).op - s.g.pair.p0), 0.0);
  for (int m = 1; m <= 6; ++m) {
    const auto a = bloch_a_term(s.ctx, m);
    const auto u = bloch_u_term(s.ctx, m - 1);
    EXPECT_LE(frobenius_norm(a.op - s.ctx.p0() * s.ctx.v() * u.op), 1e-10) << m;
    EXPECT_LE(frobenius_norm(s.ctx.p0() * a.op * s.ctx.p0() - a.op), 1e-10);
  }
  // Dense-route overloads agree with the projector-family context.
  const auto direct = bloch_a_term(shifted(s.g.pair), s.g.pair.v, s.g.pair.p0, 4);
  EXPECT_LE(frobenius_norm(direct.op - bloch_a_term(s.ctx, 4).op), 1e-10);
}

TEST(BlochTerms, TheoremOneOnSquarePlaquette) {
  SquareGadget s;
  const int n = s.g.spec.n();
  for (int m = 1; m < n; ++m) {
    const auto f = fit_proportional(bloch_a_term(s.ctx, m).op, s.ctx.p0());
    EXPECT_LE(f.residual, 1e-9) << m;
  }
  const Operator target = target_operator(s.g.spec);
  const Operator an = bloch_a_term(s.ctx, n).op;
  const Operator diff = remove_component(an, s.ctx.p0()) - scale(remove_component(target, s.ctx.p0()), -1.0);
  EXPECT_LE(frobenius_norm(diff), 1e-9);
  // target = 2 B(p) (x) |Psi><Psi| (x) |0><0|
  const Operator site = site_target(square_z2(), {SiteKind::plaquette, 0}, s.g.layout);
  EXPECT_LE(frobenius_norm(target - scale(site, 2.0)), 1e-10);
}

TEST(Series, MatchesExactToOrder) {
  SquareGadget s;
  const Operator h0 = shifted(s.g.pair);
  const int d = static_cast<int>(std::lround(trace(s.ctx.p0()).real()));
  const std::vector<double> lams{0.01, 0.02, 0.04};
  for (int order : {2, 3, 4, 5}) {
    std::vector<double> plain, heff, pi, plain_pi;
    for (double lam : lams) {
      const auto ex = exact_effective(h0 + scale(s.ctx.v(), lam), d);
      const auto ns = normalized_series(s.ctx, lam, order);
      plain.push_back(frobenius_norm(remove_component(effective_hamiltonian_series(s.ctx, lam, order), s.ctx.p0()) -
                                     remove_component(ex.heff, s.ctx.p0())));
      heff.push_back(frobenius_norm(ns.heff - ex.heff));
      pi.push_back(frobenius_norm(ns.pi - ex.pi));
      plain_pi.push_back(frobenius_norm(projector_series(s.ctx, lam, order) - ex.pi));
    }
    EXPECT_GE(loglog_slope(lams, heff), order + 0.5) << order;
    EXPECT_GE(loglog_slope(lams, pi), order + 0.5) << order;
    // U A U^+ drops the U^+U normalization, which first shows up at lambda^4 times A^(2).
    if (order <= 4) EXPECT_GE(loglog_slope(lams, plain), order + 0.5) << order;
    // U P0 U^+ misses the same normalization at lambda^2.
    EXPECT_NEAR(loglog_slope(lams, plain_pi), 2.0, 0.1) << order;
  }
  EXPECT_EQ(effective_hamiltonian_series(s.ctx, 0.0, 3).nnz(), 0);
}

TEST(Series, ShiftCovariance) {
  SquareGadget s;
  const Operator h = shifted(s.g.pair) + scale(s.ctx.v(), 0.03);
  const int d = 16;
  const auto a = exact_effective(h, d);
  const auto b = exact_effective(h + scale(Operator::identity(s.g.layout), 0.7), d);
  for (int i = 0; i < d; ++i) EXPECT_NEAR(b.energies[i] - a.energies[i], 0.7, 1e-10);
  EXPECT_LE(frobenius_norm(a.pi - b.pi), 1e-10);
}

TEST(Diagrams, SingleClockCounts) {
  EXPECT_TRUE(enumerate_valid_diagrams(5, 1).empty());
  const auto two = enumerate_valid_diagrams(5, 2);
  ASSERT_EQ(two.size(), 2u);
  std::set<std::string> names;
  for (const auto& d : two) names.insert(to_string(d));
  EXPECT_TRUE(names.count("eps0=1 Y=W0 W0+ "));
  EXPECT_TRUE(names.count("eps0=1 Y=W4+ W4 "));
  const auto four = enumerate_valid_diagrams(5, 4);
  int full = 0, touching = 0;
  for (const auto& d : four) (d.eps[0] == std::vector<int>{1, 1, 1} ? full : touching)++;
  EXPECT_EQ(full, 6);
  EXPECT_EQ(touching, 4);
  EXPECT_THROW(enumerate_valid_diagrams(5, 6), std::invalid_argument);
  EXPECT_THROW(enumerate_valid_diagrams(9, 9), std::invalid_argument);
}

TEST(Diagrams, EnumerationMatchesReplayFilter) {
  // Every (eps, Y) for two clocks of dimension 3 with a chi coupling, filtered by replay.
  const int n = 3, L = 2;
  ChiMap chi{{{1}, {}, {}}, {{}, {0}, {}}};
  for (int m = 1; m <= 3; ++m) {
    std::set<std::string> dfs;
    for (const auto& d : enumerate_valid_diagrams(n, m, L, &chi)) {
      EXPECT_TRUE(is_valid_diagram(d, n, &chi));
      dfs.insert(to_string(d));
    }
    std::set<std::string> brute;
    const int arrows = L * n * 2;
    const int total_eps = L * (m - 1);
    for (long code = 0; code < std::pow(arrows, m); ++code)
      for (int em = 0; em < (1 << total_eps); ++em) {
        Diagram d;
        d.order = m;
        d.clocks = L;
        d.eps.assign(L, std::vector<int>(m - 1));
        for (int a = 0; a < L; ++a)
          for (int j = 0; j < m - 1; ++j) d.eps[a][j] = em >> (a * (m - 1) + j) & 1;
        long c = code;
        for (int j = 0; j < m; ++j) {
          const int x = static_cast<int>(c % arrows);
          c /= arrows;
          d.arrows.push_back({x / (2 * n), (x / 2) % n, x % 2 == 1});
        }
        if (is_valid_diagram(d, n, &chi)) brute.insert(to_string(d));
      }
    EXPECT_EQ(dfs, brute) << "m=" << m;
  }
}

TEST(Diagrams, InvalidDiagramsVanish) {
  SquareGadget s;
  const ClockSystem cs = make_clock_system({s.g.spec});
  const int n = cs.n;
  for (int m = 1; m <= 3; ++m) {
    int nonzero = 0;
    for (long code = 0; code < std::pow(2 * n, m); ++code)
      for (int em = 0; em < (1 << (m - 1)); ++em) {
        Diagram d;
        d.order = m;
        d.eps.assign(1, std::vector<int>(m - 1));
        for (int j = 0; j < m - 1; ++j) d.eps[0][j] = em >> j & 1;
        long c = code;
        for (int j = 0; j < m; ++j) {
          const int x = static_cast<int>(c % (2 * n));
          c /= 2 * n;
          d.arrows.push_back({0, x / 2, x % 2 == 1});
        }
        const bool valid = is_valid_diagram(d, n);
        const double norm = frobenius_norm(detail::theta_unchecked(d, cs));
        if (!valid) EXPECT_EQ(norm, 0.0) << to_string(d);
        nonzero += norm > 0.0;
      }
    EXPECT_EQ(nonzero, static_cast<int>(enumerate_valid_diagrams(n, m).size())) << m;
  }
}

TEST(Diagrams, ReconstructAndSpecialForms) {
  SquareGadget s;
  const ClockSystem cs = make_clock_system({s.g.spec});
  const int n = cs.n;
  Operator v = Operator::zero(s.g.layout);
  for (const auto& w : cs.w[0]) v = v + w + adjoint(w);
  EXPECT_LE(frobenius_norm(v - s.ctx.v()), 1e-12);

  for (int m = 1; m <= n; ++m) {
    Operator sum = Operator::zero(s.g.layout);
    for (const auto& d : enumerate_valid_diagrams(n, m)) {
      const Operator th = theta_operator(d, cs);
      sum = sum + scale(th, diagram_weight(d));
      if (!is_special(d, n)) {
        EXPECT_LE(fit_proportional(th, cs.p0).residual, 1e-9) << to_string(d);
      }
    }
    EXPECT_LE(frobenius_norm(sum - bloch_a_term(s.ctx, m).op), 1e-9) << m;
  }
  Operator prod = s.g.spec.gamma0;
  for (const auto& h : s.g.spec.hops) prod = prod * h;
  prod = prod * s.g.spec.gamma0 * clock_op(s.g.layout, s.g.spec.clock, 0, 0);
  const Diagram down = special_diagram(n, 1, 0, false);
  EXPECT_TRUE(is_special(down, n));
  EXPECT_LE(frobenius_norm(theta_operator(down, cs) - prod), 1e-12);
  EXPECT_LE(frobenius_norm(theta_operator(special_diagram(n, 1, 0, true), cs) - adjoint(prod)), 1e-12);

  Diagram bad = down;
  bad.eps[0][0] = 0;
  EXPECT_THROW(theta_operator(bad, cs), std::invalid_argument);
}

TEST(Convergence, RefinedBoundHolds) {
  SquareGadget s;
  const ClockSystem cs = make_clock_system({s.g.spec});
  const auto r = convergence_report(s.ctx, cs, 6, {0.01, 0.02});
  EXPECT_NEAR(r.gamma, 1.0, 1e-9);
  EXPECT_NEAR(r.refined_threshold, 1.0 / 16.0, 1e-9);
  EXPECT_TRUE(r.all_within());
  EXPECT_EQ(r.rows.size(), 7u);
  EXPECT_NEAR(r.e1, 1.0, 1e-12);
  EXPECT_LE(r.v_norm, 2.0 + 1e-9);
}

TEST(Slope, FitsPowerLaw) {
  EXPECT_NEAR(loglog_slope({0.01, 0.02, 0.04}, {3e-10, 3 * std::pow(2.0, 5) * 1e-10, 3 * std::pow(4.0, 5) * 1e-10}), 5.0, 1e-9);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
}
