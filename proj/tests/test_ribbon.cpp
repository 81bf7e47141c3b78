#include <gtest/gtest.h>

#include "qdlab/ribbon.hpp"

using namespace qdlab;

namespace {

std::vector<FiniteGroup> groups() { return {make_cyclic(2), make_cyclic(3), make_symmetric_3()}; }

}  // namespace

TEST(Coefficients, LambdaAndOmega) {
  auto z2 = make_cyclic(2);
  EXPECT_EQ(lambda_coeff(z2, {1, 0}, {1, 0}, {0, 0}), 1);
  EXPECT_EQ(lambda_coeff(z2, {1, 0}, {1, 1}, {0, 0}), 0);
  for (const auto& G : groups()) {
    const int n = G.order * G.order;
    for (int ki = 0; ki < n; ++ki)
      for (int ji = 0; ji < n; ++ji) {
        // sum_m e^m Omega^k_{mj} = delta^k_j
        int s = 0;
        for (int mi = 0; mi < n; ++mi) s += counit(label_at(G, mi)) * omega_coeff(G, label_at(G, ki), label_at(G, mi), label_at(G, ji));
        EXPECT_EQ(s, ki == ji ? 1 : 0);
      }
  }
  // S3 with a non-central h: the conjugation constraint is enforced.
  auto s3 = make_symmetric_3();
  for (int h = 1; h < 6; ++h)
    for (int g0 = 0; g0 < 6; ++g0)
      for (int h1 = 0; h1 < 6; ++h1)
        for (int g1 = 0; g1 < 6; ++g1) {
          const int want = (h1 == s3.mul[s3.mul[s3.inv[g0]][h]][g0]) ? 1 : 0;
          EXPECT_EQ(omega_coeff(s3, {h, s3.mul[g0][g1]}, {h, g0}, {h1, g1}), want);
        }
}

TEST(Triangles, AlgebraOnSingleTriangle) {
  for (const auto& G : {make_cyclic(2), make_symmetric_3()}) {
    auto m = make_model(G, build_square_torus(2, 2));
    const int e = 0;
    auto l = edge_layout(m, {e});
    for (Triangle t : {Triangle{TriangleKind::vertex, e, m.lattice.edges[e].v_plus},
                       Triangle{TriangleKind::plaquette, e, m.lattice.edges[e].p_minus}}) {
      auto fam = triangle_family(m, t, l);
      const int n = G.order * G.order;
      for (int mi = 0; mi < n; ++mi)
        for (int ni = 0; ni < n; ++ni) {
          Operator rhs = Operator::zero(l);
          for (int ki = 0; ki < n; ++ki)
            if (lambda_coeff(G, label_at(G, mi), label_at(G, ni), label_at(G, ki))) rhs = rhs + fam[ki];
          EXPECT_LT(frobenius_norm(fam[mi] * fam[ni] - rhs), 1e-12);
        }
    }
    Triangle tv{TriangleKind::vertex, e, m.lattice.edges[e].v_minus};
    EXPECT_EQ(triangle_operator(m, tv, {1, 1}, l).nnz(), 0);
    Triangle tp{TriangleKind::plaquette, e, m.lattice.edges[e].p_plus};
    EXPECT_EQ(frobenius_norm(triangle_operator(m, tp, {0, 1}, l) - triangle_operator(m, tp, {1, 1}, l)), 0.0);
    EXPECT_THROW(triangle_operator(m, Triangle{TriangleKind::vertex, e, 99}, {0, 0}, l), std::invalid_argument);
  }
}

TEST(Ribbons, OmegaExpansionIsAssociative) {
  for (const auto& G : {make_cyclic(3), make_symmetric_3()}) {
    auto m = make_model(G, build_honeycomb_torus(2, 2));
    const int p = 0;
    auto ts = closed_ribbon(m, SiteKind::plaquette, p, boundary(m.lattice, p)[0].edge);
    ts.resize(3);
    std::vector<int> es;
    for (const auto& t : ts) es.push_back(t.edge);
    auto l = edge_layout(m, es);
    auto left = ribbon_operators(m, ts, l, Fold::left);
    auto right = ribbon_operators(m, ts, l, Fold::right);
    for (std::size_t k = 0; k < left.size(); ++k) EXPECT_LT(frobenius_norm(left[k] - right[k]), 1e-12);
  }
}

TEST(Ribbons, ClosedLoopsGiveVertexAndPlaquetteOperators) {
  for (const auto& G : {make_cyclic(2), make_symmetric_3()})
    for (auto lat : {build_square_torus(2, 2), build_honeycomb_torus(2, 2)}) {
      auto m = make_model(G, lat);
      const int v = 1;
      auto lv = edge_layout(m, vertex_edges(m.lattice, v));
      for (const auto& s : star(m.lattice, v)) {
        auto fam = ribbon_operators(m, closed_ribbon(m, SiteKind::vertex, v, s.edge), lv);
        Operator avg = Operator::zero(lv);
        for (int g = 0; g < G.order; ++g) {
          EXPECT_LT(operator_norm(fam[label_index(G, {g, 0})] - gauge_transformation(m, v, g, lv)), 1e-10);
          avg = avg + fam[label_index(G, {g, 0})];
        }
        EXPECT_LT(operator_norm(scale(avg, 1.0 / G.order) - vertex_operator(m, v, lv)), 1e-10);
      }
      if (G.order == 6 && lat.kind == LatticeKind::honeycomb) continue;  // 6^6 plaquette space: covered in acceptance
      const int p = 1;
      auto lp = edge_layout(m, plaquette_edges(m.lattice, p));
      const auto& bnd = boundary(m.lattice, p);
      auto fam = ribbon_operators(m, closed_ribbon(m, SiteKind::plaquette, p, bnd[2].edge), lp);
      const int v0 = traversal_start(m.lattice, bnd[2]);
      for (int g = 0; g < G.order; ++g) {
        auto bg = magnetic_charge(m, v0, p, g, lp);
        for (int h = 0; h < G.order; ++h)
          EXPECT_LT(operator_norm(fam[label_index(G, {h, G.inv[g]})] - bg), 1e-10);
      }
      Operator closure = Operator::zero(lp);
      for (int ki = 0; ki < G.order * G.order; ++ki)
        if (counit(label_at(G, ki))) closure = closure + fam[ki];
      EXPECT_LT(operator_norm(scale(closure, 1.0 / G.order) - fam[label_index(G, {1 % G.order, 0})]), 1e-10);
    }
}

TEST(Ribbons, VertexPrefixesAreProductsOfL) {
  auto G = make_symmetric_3();
  auto m = make_model(G, build_square_torus(2, 2));
  const int v = 2;
  auto l = edge_layout(m, vertex_edges(m.lattice, v));
  const auto& st = star(m.lattice, v);
  auto ts = closed_ribbon(m, SiteKind::vertex, v, st[0].edge);
  for (std::size_t len = 1; len <= ts.size(); ++len) {
    std::vector<Triangle> prefix(ts.begin(), ts.begin() + static_cast<long>(len));
    auto fam = ribbon_operators(m, prefix, l);
    for (int ki = 0; ki < 36; ++ki) {
      const auto k = label_at(G, ki);
      Operator expect = Operator::zero(l);
      if (k.g == 0) {
        std::vector<std::pair<std::string, DenseMat>> parts;
        for (std::size_t i = 0; i < len; ++i) parts.push_back({edge_id(st[i].edge), L_at(G, st[i].end, k.h)});
        expect = embed_product(l, parts);
      }
      EXPECT_LT(frobenius_norm(fam[ki] - expect), 1e-12);
    }
  }
}

TEST(QdGenerator, TwoConstructionsAgreeAndRepresent) {
  for (const auto& G : {make_cyclic(3), make_symmetric_3()}) {
    const int n = G.order * G.order;
    std::vector<DenseMat> d;
    for (int j = 0; j < n; ++j) {
      d.push_back(qd_generator(G, label_at(G, j)));
      EXPECT_EQ((d.back() - qd_generator_factored(G, label_at(G, j))).norm(), 0.0);
    }
    const DenseVec psi = qd_psi(G);
    for (int mi = 0; mi < n; ++mi) {
      EXPECT_NEAR(std::abs(psi.dot(d[mi] * psi) - double(counit(label_at(G, mi))) / G.order), 0.0, 1e-12);
      for (int ni = 0; ni < n; ++ni) {
        DenseMat rhs = DenseMat::Zero(n, n);
        for (int ki = 0; ki < n; ++ki)
          if (omega_coeff(G, label_at(G, ki), label_at(G, mi), label_at(G, ni))) rhs += d[ki];
        EXPECT_LT((d[mi] * d[ni] - rhs).norm(), 1e-12);
      }
    }
  }
}

TEST(MOperators, UnitaryAndControlledFlip) {
  for (const auto& G : groups()) {
    auto m = make_model(G, build_square_torus(2, 2));
    const int e = 3;
    for (auto rep : {Representation::reduced, Representation::full}) {
      auto l = edge_layout(m, {e}, {{"R", register_dim(G, rep), Role::r_register}});
      for (Triangle t : {Triangle{TriangleKind::vertex, e, m.lattice.edges[e].v_minus},
                         Triangle{TriangleKind::plaquette, e, m.lattice.edges[e].p_plus}}) {
        auto mo = m_operator(m, t, rep, l, "R");
        EXPECT_LT(operator_norm(adjoint(mo) * mo - Operator::identity(l)), 1e-10);
        EXPECT_NEAR(operator_norm(mo), 1.0, 1e-10);
      }
    }
  }
  auto z2 = make_cyclic(2);
  auto m = make_model(z2, build_square_torus(2, 2));
  auto l = edge_layout(m, {0}, {{"R", 2, Role::r_register}});
  auto mo = m_operator(m, {TriangleKind::vertex, 0, m.lattice.edges[0].v_plus}, Representation::reduced, l, "R");
  // Control is R (digit 1), target is the edge (digit 0).
  DenseMat cnot = DenseMat::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(3, 2) = cnot(2, 3) = 1.0;
  EXPECT_EQ((to_dense(mo) - cnot).norm(), 0.0);
}

TEST(Proposition1, ReducedAndFullRoutes) {
  for (const auto& G : groups())
    for (auto lat : {build_square_torus(2, 2), build_honeycomb_torus(2, 2)}) {
      auto m = make_model(G, lat);
      for (auto kind : {SiteKind::vertex, SiteKind::plaquette}) {
        auto r = check_proposition1(m, kind, 0);
        EXPECT_LE(r.worst(), 1e-10) << G.name << " " << to_string(lat.kind) << " " << to_string(kind);
        EXPECT_NEAR(r.residual, r.residual_adjoint, 1e-12);
      }
    }
  for (const auto& G : groups()) {
    auto m = make_model(G, build_square_torus(2, 2));
    for (auto kind : {SiteKind::vertex, SiteKind::plaquette})
      EXPECT_LE(check_proposition1(m, kind, 1, Representation::full).worst(), 1e-10) << G.name;
  }
}

TEST(Proposition1, LiteralRegisterFailsOnlyForNonAbelian) {
  auto z3 = make_model(make_cyclic(3), build_square_torus(2, 2));
  EXPECT_LE(check_proposition1(z3, SiteKind::plaquette, 0, Representation::reduced_literal).worst(), 1e-10);
  auto s3 = make_model(make_symmetric_3(), build_square_torus(2, 2));
  EXPECT_GT(check_proposition1(s3, SiteKind::plaquette, 0, Representation::reduced_literal).residual, 0.5);
}

TEST(Lemma1, Z2TorusSweep) {
  auto m = make_model(make_cyclic(2), build_square_torus(2, 2));
  auto rep = check_lemma1(m);
  EXPECT_LE(rep.max_claim1, 1e-10);
  EXPECT_LE(rep.max_claim2, 1e-10);
  EXPECT_GT(rep.min_claim3, 1e-6);
  EXPECT_EQ(rep.claim3.size(), 32u);  // 8 edges x 2 endpoints x 2 sides
}
