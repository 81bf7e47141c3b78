#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "qdlab/linop.hpp"

using namespace qdlab;

namespace {

LayoutPtr qubits(int n) {
  std::vector<Factor> fs;
  for (int i = 0; i < n; ++i) fs.push_back({"q" + std::to_string(i), 2, Role::edge});
  return make_layout(fs);
}

DenseMat pauli_x() {
  DenseMat x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

Operator random_sparse(const LayoutPtr& l, int per_col, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> row(0, static_cast<int>(l->total_dim()) - 1);
  std::normal_distribution<double> nd;
  std::vector<Eigen::Triplet<cplx>> t;
  for (int c = 0; c < l->total_dim(); ++c)
    for (int k = 0; k < per_col; ++k) t.emplace_back(row(rng), c, cplx(nd(rng), nd(rng)));
  SpMat m(l->total_dim(), l->total_dim());
  m.setFromTriplets(t.begin(), t.end());
  return Operator(l, m);
}

}  // namespace

TEST(Layout, MixedRadixFactorZeroFastest) {
  auto l = make_layout({{"a", 2, Role::edge}, {"b", 3, Role::r_register}, {"c", 4, Role::clock}});
  EXPECT_EQ(l->total_dim(), 24);
  EXPECT_EQ(l->stride(0), 1);
  EXPECT_EQ(l->stride(1), 2);
  EXPECT_EQ(l->stride(2), 6);
  EXPECT_EQ(l->digit(1 + 2 * 2 + 6 * 3, 1), 2);
  EXPECT_THROW(make_layout({{"a", 2, Role::edge}, {"a", 2, Role::edge}}), std::invalid_argument);
}

TEST(Embed, IdentityAndBitFlip) {
  auto l = qubits(3);
  auto id = embed(l, {"q1"}, DenseMat::Identity(2, 2));
  EXPECT_EQ(frobenius_norm(id - Operator::identity(l)), 0.0);
  auto l2 = qubits(2);
  auto x0 = embed(l2, {"q0"}, pauli_x());
  // |00> -> |01> in the factor-0-fastest convention: index 0 -> index 1.
  EXPECT_EQ(x0.matrix().coeff(1, 0), cplx(1.0, 0.0));
  EXPECT_THROW(embed(l2, {"q0"}, DenseMat::Identity(3, 3)), std::invalid_argument);
  EXPECT_THROW(embed(l2, {"zz"}, pauli_x()), std::invalid_argument);
}

TEST(Embed, DisjointSupportsCommuteAndCompositionHolds) {
  auto l = make_layout({{"a", 2, Role::edge}, {"b", 3, Role::edge}, {"c", 2, Role::edge}});
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  auto rnd = [&](int n) {
    DenseMat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
  };
  const DenseMat A = rnd(6), B = rnd(6), C = rnd(2);
  auto ea = embed(l, {"c", "b"}, A), eb = embed(l, {"c", "b"}, B), ec = embed(l, {"a"}, C);
  EXPECT_LT(frobenius_norm(ea * eb - embed(l, {"c", "b"}, A * B)), 1e-12);
  EXPECT_LT(frobenius_norm(commutator(ea, ec)), 1e-12);
  // Product embedding equals the Kronecker product in listed order (first fastest).
  const DenseMat P = rnd(2), Q = rnd(3);
  DenseMat kron(6, 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 3; ++m) kron(i + 2 * k, j + 2 * m) = P(i, j) * Q(k, m);
  EXPECT_LT(frobenius_norm(embed_product(l, {{"a", P}, {"b", Q}}) - embed(l, {"a", "b"}, kron)), 1e-12);
}

TEST(Algebra, BasicIdentities) {
  auto l = qubits(3);
  auto a = random_sparse(l, 2, 1);
  EXPECT_EQ(commutator(a, a).nnz(), 0);
  EXPECT_EQ(frobenius_norm(adjoint(adjoint(a)) - a), 0.0);
  auto other = qubits(4);
  EXPECT_THROW(mul(a, Operator::identity(other)), std::invalid_argument);
}

TEST(Norm, KnownValuesAndSubmultiplicativity) {
  auto l = qubits(8);
  EXPECT_NEAR(operator_norm(Operator::identity(l)), 1.0, 1e-12);
  EXPECT_EQ(operator_norm(Operator::zero(l)), 0.0);
  for (unsigned s = 0; s < 4; ++s) {
    auto a = random_sparse(l, 3, 10 + s), b = random_sparse(l, 3, 20 + s);
    const double na = operator_norm(a);
    EXPECT_NEAR(na, Eigen::JacobiSVD<DenseMat>(to_dense(a)).singularValues()(0), 1e-10 * na);
    EXPECT_LE(operator_norm(a * b), na * operator_norm(b) + 1e-9);
  }
}

TEST(Eigen, DiagonalAndProjectors) {
  auto l = make_layout({{"a", 3, Role::edge}});
  DenseMat d = DenseMat::Zero(3, 3);
  d(0, 0) = 2;
  d(1, 1) = 0;
  d(2, 2) = 1;
  auto h = from_dense(l, d);
  auto ep = lowest_eigenpairs(h, 2);
  EXPECT_NEAR(ep.energies[0], 0.0, 1e-12);
  EXPECT_NEAR(ep.energies[1], 1.0, 1e-12);
  EXPECT_EQ(frobenius_norm(spectral_projector(h, 3) - Operator::identity(l)), 0.0);
  auto p = spectral_projector(h, 2);
  EXPECT_NEAR(trace(p).real(), 2.0, 1e-9);
  EXPECT_LT(frobenius_norm(p * p - p), 1e-9);
  DenseMat nh = DenseMat::Zero(3, 3);
  nh(0, 1) = 1;
  EXPECT_THROW(lowest_eigenpairs(from_dense(l, nh), 1), std::invalid_argument);
  DenseMat deg = DenseMat::Identity(3, 3);
  EXPECT_THROW(spectral_projector(from_dense(l, deg), 1), DegenerateCut);
}

TEST(Eigen, ExactEffectiveHamiltonianFullRankIsH) {
  auto l = qubits(5);
  auto a = random_sparse(l, 2, 3);
  auto h = a + adjoint(a);
  EXPECT_LT(operator_norm(effective_hamiltonian_exact(h, static_cast<int>(h.dim())) - h), 1e-8);
}

TEST(Eigen, IterativeMatchesDense) {
  // dim 2048 > dense threshold: transverse-field chain with degenerate ground space
  auto l = qubits(11);
  DenseMat z(2, 2), x = pauli_x();
  z << 1, 0, 0, -1;
  Operator h = Operator::zero(l);
  for (int i = 0; i < 11; ++i) {
    const auto a = "q" + std::to_string(i), b = "q" + std::to_string((i + 1) % 11);
    h = h - embed_product(l, {{a, z}, {b, z}});
    h = h - 0.3 * embed(l, {a}, x);
  }
  auto ep = lowest_eigenpairs(h, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(h).real());
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(ep.energies[i], es.eigenvalues()(i), 1e-9);
}

TEST(Contract, PartialExpectation) {
  auto l = make_layout({{"a", 2, Role::edge}, {"r", 2, Role::r_register}});
  DenseMat x = pauli_x();
  DenseVec plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  auto op = embed_product(l, {{"a", x}, {"r", x}});
  auto red = contract_factor(op, "r", plus);
  EXPECT_LT(frobenius_norm(red - embed(red.layout(), {"a"}, x)), 1e-12);
}

TEST(Proportionality, FitAndShiftRemoval) {
  auto l = qubits(3);
  auto p = embed(l, {"q0"}, DenseMat::Identity(2, 2) * 0.5);
  auto f = fit_proportional(scale(p, cplx(-3.0, 1.0)), p);
  EXPECT_NEAR(std::abs(f.c - cplx(-3.0, 1.0)), 0.0, 1e-12);
  EXPECT_TRUE(f.ok());
  auto q = random_sparse(l, 1, 5);
  EXPECT_FALSE(fit_proportional(q, p).ok());
  EXPECT_NEAR(std::abs(hs_inner(p, remove_component(q, p))), 0.0, 1e-12);
}

TEST(Triplets, RoundTrip) {
  auto l = qubits(4);
  auto a = random_sparse(l, 2, 9);
  const std::string path = ::testing::TempDir() + "qdlab_triplets.txt";
  save_triplets(a, path);
  auto b = load_triplets(l, path);
  EXPECT_EQ(frobenius_norm(a - b), 0.0);
  const std::string text = dump_triplets(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), "16 " + std::to_string(a.nnz()));
  std::remove(path.c_str());
}

TEST(DimCap, EnvironmentOverride) {
  setenv("QDLAB_DIM_CAP", "100", 1);
  EXPECT_THROW(enforce_dim_cap(101), ResourceLimit);
  EXPECT_NO_THROW(enforce_dim_cap(100));
  unsetenv("QDLAB_DIM_CAP");
  EXPECT_EQ(dim_cap(), 1u << 20);
}
