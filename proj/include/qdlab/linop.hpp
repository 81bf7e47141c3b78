#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qdlab/errors.hpp"
#include "qdlab/io.hpp"
#include "qdlab/tolerances.hpp"

namespace qdlab {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using DenseMat = Eigen::MatrixXcd;
using DenseVec = Eigen::VectorXcd;

enum class Role { edge, r_register, clock };

struct Factor {
  std::string id;
  int dim;
  Role role;
  bool operator==(const Factor&) const = default;
};

/// Default cap on layout dimension; QDLAB_DIM_CAP overrides.
inline std::uint64_t dim_cap() {
  if (const char* s = std::getenv("QDLAB_DIM_CAP")) {
    try {
      return static_cast<std::uint64_t>(std::stoull(s));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("QDLAB_DIM_CAP is not an integer: ") + s);
    }
  }
  return std::uint64_t{1} << 20;
}

inline void enforce_dim_cap(std::uint64_t dim) {
  const auto cap = dim_cap();
  if (dim > cap)
    throw ResourceLimit("layout dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap) +
                        " (set QDLAB_DIM_CAP to raise it)");
}

/**
 * @brief Ordered tensor factors; factor 0 is the fastest-varying digit.
 */
class SystemLayout {
 public:
  explicit SystemLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::uint64_t total = 1;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      const auto& f = factors_[k];
      if (f.dim < 1) throw std::invalid_argument("factor '" + f.id + "' has dimension < 1");
      if (index_.count(f.id)) throw std::invalid_argument("duplicate factor id '" + f.id + "'");
      index_[f.id] = static_cast<int>(k);
      strides_.push_back(static_cast<std::int64_t>(total));
      total *= static_cast<std::uint64_t>(f.dim);
      if (total > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
        throw ResourceLimit("layout dimension overflows the sparse index type");
    }
    total_ = static_cast<std::int64_t>(total);
  }

  const std::vector<Factor>& factors() const { return factors_; }
  std::int64_t total_dim() const { return total_; }
  bool has(const std::string& id) const { return index_.count(id) != 0; }
  int index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::invalid_argument("unknown factor id '" + id + "'");
    return it->second;
  }
  int dim_of(const std::string& id) const { return factors_[index_of(id)].dim; }
  std::int64_t stride(int k) const { return strides_[k]; }
  int digit(std::int64_t basis_index, int k) const {
    return static_cast<int>((basis_index / strides_[k]) % factors_[k].dim);
  }

  bool operator==(const SystemLayout& o) const { return factors_ == o.factors_; }

 private:
  std::vector<Factor> factors_;
  std::map<std::string, int> index_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 1;
};

using LayoutPtr = std::shared_ptr<const SystemLayout>;

inline LayoutPtr make_layout(std::vector<Factor> factors) {
  return std::make_shared<const SystemLayout>(std::move(factors));
}

/// Layout with one factor removed.
inline LayoutPtr without_factor(const SystemLayout& l, const std::string& id) {
  l.index_of(id);
  std::vector<Factor> fs;
  for (const auto& f : l.factors())
    if (f.id != id) fs.push_back(f);
  return make_layout(fs);
}

inline void prune(SpMat& m) {
  m.prune([](const Eigen::Index&, const Eigen::Index&, const cplx& v) { return std::abs(v) >= tol::kDrop; });
  m.makeCompressed();
}

/**
 * @brief Sparse operator bound to a layout. Entries below the drop tolerance are purged.
 */
class Operator {
 public:
  Operator() = default;
  Operator(LayoutPtr layout, SpMat m) : layout_(std::move(layout)), m_(std::move(m)) {
    if (!layout_) throw std::invalid_argument("Operator: null layout");
    if (m_.rows() != layout_->total_dim() || m_.cols() != layout_->total_dim())
      throw std::invalid_argument("Operator: matrix shape does not match layout dimension");
    prune(m_);
  }

  static Operator zero(const LayoutPtr& l) { return Operator(l, SpMat(l->total_dim(), l->total_dim())); }
  static Operator identity(const LayoutPtr& l) {
    SpMat m(l->total_dim(), l->total_dim());
    m.setIdentity();
    return Operator(l, std::move(m));
  }

  const LayoutPtr& layout() const { return layout_; }
  const SpMat& matrix() const { return m_; }
  std::int64_t dim() const { return m_.rows(); }
  std::int64_t nnz() const { return m_.nonZeros(); }

 private:
  LayoutPtr layout_;
  SpMat m_;
};

inline void require_same_layout(const Operator& a, const Operator& b) {
  if (!a.layout() || !b.layout()) throw std::invalid_argument("operator without layout");
  if (a.layout() != b.layout() && !(*a.layout() == *b.layout()))
    throw std::invalid_argument("operators live on different layouts");
}

inline Operator mul(const Operator& a, const Operator& b) {
  require_same_layout(a, b);
  return Operator(a.layout(), SpMat(a.matrix() * b.matrix()));
}
inline Operator adjoint(const Operator& a) { return Operator(a.layout(), SpMat(a.matrix().adjoint())); }
inline Operator add(const Operator& a, const Operator& b) {
  require_same_layout(a, b);
  return Operator(a.layout(), SpMat(a.matrix() + b.matrix()));
}
inline Operator sub(const Operator& a, const Operator& b) {
  require_same_layout(a, b);
  return Operator(a.layout(), SpMat(a.matrix() - b.matrix()));
}
inline Operator scale(const Operator& a, cplx s) { return Operator(a.layout(), SpMat(a.matrix() * s)); }
inline Operator commutator(const Operator& a, const Operator& b) {
  require_same_layout(a, b);
  return Operator(a.layout(), SpMat(a.matrix() * b.matrix() - b.matrix() * a.matrix()));
}

inline Operator operator*(const Operator& a, const Operator& b) { return mul(a, b); }
inline Operator operator+(const Operator& a, const Operator& b) { return add(a, b); }
inline Operator operator-(const Operator& a, const Operator& b) { return sub(a, b); }
inline Operator operator*(cplx s, const Operator& a) { return scale(a, s); }
inline Operator operator*(double s, const Operator& a) { return scale(a, cplx(s, 0.0)); }

/// Product of a list, left to right; identity if empty.
inline Operator product(const LayoutPtr& l, const std::vector<Operator>& ops) {
  if (ops.empty()) return Operator::identity(l);
  Operator r = ops.front();
  for (std::size_t k = 1; k < ops.size(); ++k) r = r * ops[k];
  return r;
}

inline cplx trace(const Operator& a) {
  cplx t = 0;
  for (int k = 0; k < a.matrix().outerSize(); ++k)
    for (SpMat::InnerIterator it(a.matrix(), k); it; ++it)
      if (it.row() == it.col()) t += it.value();
  return t;
}

/// Hilbert-Schmidt inner product tr(a^dagger b).
inline cplx hs_inner(const Operator& a, const Operator& b) {
  require_same_layout(a, b);
  return a.matrix().conjugate().cwiseProduct(b.matrix()).sum();
}

inline double frobenius_norm(const Operator& a) { return a.matrix().norm(); }

inline DenseMat to_dense(const Operator& a) { return DenseMat(a.matrix()); }

inline Operator from_dense(const LayoutPtr& l, const DenseMat& m) { return Operator(l, m.sparseView(1.0, tol::kDrop)); }

namespace detail {

inline std::vector<int> resolve_sites(const SystemLayout& l, const std::vector<std::string>& sites) {
  std::vector<int> ks;
  for (const auto& s : sites) {
    const int k = l.index_of(s);
    if (std::find(ks.begin(), ks.end(), k) != ks.end())
      throw std::invalid_argument("site '" + s + "' listed twice");
    ks.push_back(k);
  }
  return ks;
}

}  // namespace detail

/**
 * @brief Embed a dense local operator acting on the listed factors.
 *
 * The local basis index uses the listed order with the first site fastest.
 */
inline Operator embed(const LayoutPtr& layout, const std::vector<std::string>& sites, const DenseMat& local) {
  const auto ks = detail::resolve_sites(*layout, sites);
  std::int64_t ld = 1;
  for (int k : ks) ld *= layout->factors()[k].dim;
  if (local.rows() != ld || local.cols() != ld)
    throw std::invalid_argument("embed: local operator dimension " + std::to_string(local.rows()) + "x" +
                                std::to_string(local.cols()) + " does not match sites (" + std::to_string(ld) + ")");
  // Nonzeros of each local column.
  std::vector<std::vector<std::pair<std::int64_t, cplx>>> cols(ld);
  for (std::int64_t c = 0; c < ld; ++c)
    for (std::int64_t r = 0; r < ld; ++r)
      if (std::abs(local(r, c)) >= tol::kDrop) cols[c].push_back({r, local(r, c)});
  // Global offset of each local index.
  std::vector<std::int64_t> offset(ld);
  for (std::int64_t li = 0; li < ld; ++li) {
    std::int64_t rem = li, off = 0;
    for (int k : ks) {
      const int d = layout->factors()[k].dim;
      off += (rem % d) * layout->stride(k);
      rem /= d;
    }
    offset[li] = off;
  }
  const std::int64_t n = layout->total_dim();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(n));
  for (std::int64_t c = 0; c < n; ++c) {
    std::int64_t lc = 0, mult = 1, rest = c;
    for (int k : ks) {
      const int dg = layout->digit(c, k);
      lc += dg * mult;
      mult *= layout->factors()[k].dim;
      rest -= dg * layout->stride(k);
    }
    for (const auto& [lr, v] : cols[lc]) trips.emplace_back(rest + offset[lr], c, v);
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return Operator(layout, std::move(m));
}

/// Tensor product of single-factor operators (identity elsewhere).
inline Operator embed_product(const LayoutPtr& layout, const std::vector<std::pair<std::string, DenseMat>>& parts) {
  std::vector<std::string> ids;
  for (const auto& p : parts) ids.push_back(p.first);
  const auto ks = detail::resolve_sites(*layout, ids);
  std::vector<std::vector<std::vector<std::pair<int, cplx>>>> cols(parts.size());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const int d = layout->factors()[ks[j]].dim;
    const auto& loc = parts[j].second;
    if (loc.rows() != d || loc.cols() != d)
      throw std::invalid_argument("embed_product: local operator on '" + ids[j] + "' has wrong dimension");
    cols[j].resize(d);
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < d; ++r)
        if (std::abs(loc(r, c)) >= tol::kDrop) cols[j][c].push_back({r, loc(r, c)});
  }
  const std::int64_t n = layout->total_dim();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(n));
  std::vector<std::pair<std::int64_t, cplx>> acc, next;
  for (std::int64_t c = 0; c < n; ++c) {
    std::int64_t rest = c;
    for (int k : ks) rest -= layout->digit(c, k) * layout->stride(k);
    acc.assign(1, {rest, cplx(1.0, 0.0)});
    for (std::size_t j = 0; j < ks.size() && !acc.empty(); ++j) {
      next.clear();
      const auto& col = cols[j][layout->digit(c, ks[j])];
      for (const auto& [row, val] : acc)
        for (const auto& [r, v] : col) next.push_back({row + r * layout->stride(ks[j]), val * v});
      acc.swap(next);
    }
    for (const auto& [row, val] : acc) trips.emplace_back(row, c, val);
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return Operator(layout, std::move(m));
}

/// Diagonal operator with entries f(basis index).
template <class F>
Operator diagonal_operator(const LayoutPtr& layout, F&& f) {
  const std::int64_t n = layout->total_dim();
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::int64_t i = 0; i < n; ++i) {
    const cplx v = f(i);
    if (std::abs(v) >= tol::kDrop) trips.emplace_back(i, i, v);
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return Operator(layout, std::move(m));
}

/**
 * @brief <phi| X |psi> taken on one factor; result lives on the layout without it.
 */
inline Operator contract_factor(const Operator& x, const std::string& id, const DenseVec& bra, const DenseVec& ket,
                                const LayoutPtr& reduced) {
  const auto& l = *x.layout();
  const int k = l.index_of(id);
  const int d = l.factors()[k].dim;
  if (bra.size() != d || ket.size() != d) throw std::invalid_argument("contract_factor: vector dimension mismatch");
  if (!(*reduced == *without_factor(l, id))) throw std::invalid_argument("contract_factor: reduced layout mismatch");
  const std::int64_t s = l.stride(k);
  auto squeeze = [&](std::int64_t i) { return (i % s) + (i / (s * d)) * s; };
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int c = 0; c < x.matrix().outerSize(); ++c)
    for (SpMat::InnerIterator it(x.matrix(), c); it; ++it) {
      const int dr = l.digit(it.row(), k), dc = l.digit(it.col(), k);
      const cplx w = std::conj(bra(dr)) * ket(dc);
      if (w != cplx(0.0, 0.0)) trips.emplace_back(squeeze(it.row()), squeeze(it.col()), w * it.value());
    }
  const std::int64_t n = reduced->total_dim();
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return Operator(reduced, std::move(m));
}

inline Operator contract_factor(const Operator& x, const std::string& id, const DenseVec& psi) {
  return contract_factor(x, id, psi, psi, without_factor(*x.layout(), id));
}

// ---------------------------------------------------------------------------
// Norms and eigensolvers

namespace detail {

/// Largest eigenvalue of a PSD operator given by its action, via Lanczos with full reorthogonalization.
template <class Apply>
double lanczos_top(Apply&& apply, std::int64_t n, double rel_tol) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  DenseVec q(n);
  for (std::int64_t i = 0; i < n; ++i) q(i) = cplx(nd(rng), nd(rng));
  q.normalize();
  const int kmax = static_cast<int>(std::min<std::int64_t>(n, 400));
  double best = 0.0;
  for (int restart = 0; restart < 20; ++restart) {
    std::vector<DenseVec> basis{q};
    std::vector<double> alpha, beta;
    for (int j = 0; j < kmax; ++j) {
      DenseVec w = apply(basis[j]);
      const double a = basis[j].dot(w).real();
      alpha.push_back(a);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) w -= b * b.dot(w);
      const double bn = w.norm();
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      const double theta = es.eigenvalues()(m - 1);
      const double resid = bn * std::abs(es.eigenvectors()(m - 1, m - 1));
      best = theta;
      if (resid <= rel_tol * std::max(std::abs(theta), 1e-300) || bn < 1e-14 * std::max(1.0, std::abs(theta)) ||
          m == n) {
        return std::max(theta, 0.0);
      }
      if (j + 1 == kmax) {
        DenseVec ritz = DenseVec::Zero(n);
        for (int i = 0; i < m; ++i) ritz += basis[i] * es.eigenvectors()(i, m - 1);
        q = ritz.normalized();
        break;
      }
      beta.push_back(bn);
      basis.push_back(w / bn);
    }
  }
  return std::max(best, 0.0);
}

inline bool is_real(const SpMat& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

}  // namespace detail

/// Spectral norm (largest singular value).
inline double operator_norm(const Operator& a) {
  if (a.nnz() == 0) return 0.0;
  const std::int64_t n = a.dim();
  if (n <= 64) {
    Eigen::JacobiSVD<DenseMat> svd(to_dense(a));
    return svd.singularValues()(0);
  }
  const SpMat& m = a.matrix();
  const SpMat mh = m.adjoint();
  const double s2 = detail::lanczos_top([&](const DenseVec& x) -> DenseVec { return mh * (m * x); }, n, 1e-12);
  return std::sqrt(s2);
}

inline bool is_hermitian(const Operator& h, double rel_tol = tol::kHermitian) {
  const Operator d = h - adjoint(h);
  if (d.nnz() == 0) return true;
  return operator_norm(d) <= rel_tol * std::max(operator_norm(h), 1e-300);
}

struct EigenPairs {
  std::vector<double> energies;
  DenseMat states;  // columns
};

/// Dimension up to which eigensolves are dense.
inline constexpr std::int64_t kDenseEigenMax = 1024;

namespace detail {

inline EigenPairs dense_lowest(const Operator& h, int d) {
  EigenPairs out;
  if (is_real(h.matrix())) {
    Eigen::MatrixXd hr = to_dense(h).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hr);
    if (es.info() != Eigen::Success) throw NumericFailure("dense eigensolver failed");
    out.states = es.eigenvectors().leftCols(d).cast<cplx>();
    for (int i = 0; i < d; ++i) out.energies.push_back(es.eigenvalues()(i));
  } else {
    Eigen::SelfAdjointEigenSolver<DenseMat> es(to_dense(h));
    if (es.info() != Eigen::Success) throw NumericFailure("dense eigensolver failed");
    out.states = es.eigenvectors().leftCols(d);
    for (int i = 0; i < d; ++i) out.energies.push_back(es.eigenvalues()(i));
  }
  return out;
}

// Orthonormalize columns of w against basis (and among themselves); drops dependent columns.
inline DenseMat orthonormalize_against(const DenseMat& basis, std::int64_t used, DenseMat w) {
  std::vector<DenseVec> kept;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    DenseVec v = w.col(c);
    const double n0 = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).adjoint() * v);
      for (const auto& k : kept) v -= k * k.dot(v);
    }
    const double nv = v.norm();
    if (nv > 1e-10 * std::max(n0, 1e-300)) kept.push_back(v / nv);
  }
  DenseMat out(w.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = kept[i];
  return out;
}

// Restarted block Krylov (block Lanczos with full reorthogonalization and thick restart).
inline EigenPairs krylov_lowest(const Operator& h, int d) {
  const SpMat& m = h.matrix();
  const std::int64_t n = h.dim();
  const int b = static_cast<int>(std::min<std::int64_t>(n, d + 8));
  const std::int64_t kmax = std::min<std::int64_t>(n, std::max<std::int64_t>(6 * b, 120));
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  DenseMat x(n, b);
  for (std::int64_t i = 0; i < n; ++i)
    for (int j = 0; j < b; ++j) x(i, j) = cplx(nd(rng), nd(rng));
  double worst = 0.0;
  for (int restart = 0; restart < 300; ++restart) {
    DenseMat basis(n, kmax), hbasis(n, kmax);
    std::int64_t used = 0;
    DenseMat block = orthonormalize_against(basis, 0, x);
    while (block.cols() > 0 && used + block.cols() <= kmax) {
      basis.middleCols(used, block.cols()) = block;
      hbasis.middleCols(used, block.cols()) = m * block;
      const std::int64_t start = used;
      used += block.cols();
      if (used == kmax) break;
      DenseMat next = hbasis.middleCols(start, block.cols());
      next = orthonormalize_against(basis, used, next);
      if (used + next.cols() > kmax) next = next.leftCols(kmax - used);
      block = next;
    }
    DenseMat t = basis.leftCols(used).adjoint() * hbasis.leftCols(used);
    t = (t + t.adjoint()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<DenseMat> es(t);
    const int keep = static_cast<int>(std::min<std::int64_t>(b, used));
    DenseMat y = es.eigenvectors().leftCols(keep);
    DenseMat ritz = basis.leftCols(used) * y;
    DenseMat hritz = hbasis.leftCols(used) * y;
    worst = 0.0;
    for (int i = 0; i < std::min(d, keep); ++i)
      worst = std::max(worst, (hritz.col(i) - es.eigenvalues()(i) * ritz.col(i)).norm());
    if (worst <= 0.1 * tol::kEigResidual && keep >= d) {
      EigenPairs out;
      out.states = ritz.leftCols(d);
      for (int i = 0; i < d; ++i) out.energies.push_back(es.eigenvalues()(i));
      return out;
    }
    x = ritz;
  }
  throw NumericFailure("block Krylov eigensolver did not converge: worst residual " + std::to_string(worst) +
                       " after 300 restarts (dim " + std::to_string(n) + ", d " + std::to_string(d) + ")");
}

}  // namespace detail

/// The d lowest eigenpairs of a Hermitian operator, ascending.
inline EigenPairs lowest_eigenpairs(const Operator& h, int d) {
  if (d < 0 || d > h.dim()) throw std::invalid_argument("lowest_eigenpairs: d out of range");
  if (!is_hermitian(h)) throw std::invalid_argument("lowest_eigenpairs: operator is not Hermitian");
  if (d == 0) return EigenPairs{{}, DenseMat(h.dim(), 0)};
  EigenPairs out = h.dim() <= kDenseEigenMax ? detail::dense_lowest(h, d) : detail::krylov_lowest(h, d);
  for (int i = 0; i < d; ++i) {
    const double r = (h.matrix() * out.states.col(i) - out.energies[i] * out.states.col(i)).norm();
    if (r > tol::kEigResidual)
      throw NumericFailure("eigenpair " + std::to_string(i) + " residual " + std::to_string(r) + " above tolerance");
  }
  return out;
}

namespace detail {
inline EigenPairs checked_cut(const Operator& h, int d) {
  if (d < 1 || d > h.dim()) throw std::invalid_argument("spectral cut d out of range");
  if (d == h.dim()) return lowest_eigenpairs(h, d);
  EigenPairs ep = lowest_eigenpairs(h, d + 1);
  const double gap = ep.energies[d] - ep.energies[d - 1];
  if (gap <= tol::kGap)
    throw DegenerateCut("gap between eigenvalues " + std::to_string(d) + " and " + std::to_string(d + 1) + " is " +
                        std::to_string(gap));
  ep.energies.pop_back();
  ep.states.conservativeResize(Eigen::NoChange, d);
  return ep;
}
}  // namespace detail

/// Projector onto the d lowest eigenstates.
inline Operator spectral_projector(const Operator& h, int d) {
  if (d == h.dim()) return Operator::identity(h.layout());
  const EigenPairs ep = detail::checked_cut(h, d);
  return from_dense(h.layout(), ep.states * ep.states.adjoint());
}

/// sum_i E_i |phi_i><phi_i| over the d lowest eigenstates.
inline Operator effective_hamiltonian_exact(const Operator& h, int d) {
  const EigenPairs ep = detail::checked_cut(h, d);
  Eigen::VectorXd e(d);
  for (int i = 0; i < d; ++i) e(i) = ep.energies[i];
  return from_dense(h.layout(), ep.states * e.cast<cplx>().asDiagonal() * ep.states.adjoint());
}

// ---------------------------------------------------------------------------
// Proportionality

struct ProportionalityFit {
  cplx c{0.0, 0.0};
  double residual = 0.0;  // ||X - cP|| / max(1, ||X||)
  bool ok(double tolerance = tol::kProportional) const { return residual <= tolerance; }
};

/// Least-squares c = tr(P^dagger X)/tr(P^dagger P).
inline ProportionalityFit fit_proportional(const Operator& x, const Operator& p) {
  ProportionalityFit f;
  const cplx pp = hs_inner(p, p);
  if (std::abs(pp) == 0.0) {
    f.residual = operator_norm(x) / std::max(1.0, operator_norm(x));
    return f;
  }
  f.c = hs_inner(p, x) / pp;
  const Operator r = x - scale(p, f.c);
  f.residual = r.nnz() == 0 ? 0.0 : operator_norm(r) / std::max(1.0, operator_norm(x));
  return f;
}

/// X minus its component along P0 (shift removal): X - tr(P0 X)/tr(P0 P0) P0.
inline Operator remove_component(const Operator& x, const Operator& p0) {
  const cplx c = hs_inner(p0, x) / hs_inner(p0, p0);
  return x - scale(p0, c);
}

// ---------------------------------------------------------------------------
// Sparse-triplet text format: "dim nnz" then "row col re im" per entry.

inline std::string dump_triplets(const Operator& a) {
  std::ostringstream os;
  os << a.dim() << ' ' << a.nnz() << '\n';
  os << std::scientific << std::setprecision(16);
  SpMat rm = a.matrix();
  std::vector<std::tuple<std::int64_t, std::int64_t, cplx>> es;
  for (int k = 0; k < rm.outerSize(); ++k)
    for (SpMat::InnerIterator it(rm, k); it; ++it) es.emplace_back(it.row(), it.col(), it.value());
  std::sort(es.begin(), es.end(), [](const auto& x, const auto& y) {
    return std::get<0>(x) != std::get<0>(y) ? std::get<0>(x) < std::get<0>(y) : std::get<1>(x) < std::get<1>(y);
  });
  for (const auto& [r, c, v] : es) os << r << ' ' << c << ' ' << v.real() << ' ' << v.imag() << '\n';
  return os.str();
}

inline void save_triplets(const Operator& a, const std::string& path) { write_file_atomic(path, dump_triplets(a)); }

inline Operator parse_triplets(const LayoutPtr& layout, const std::string& text) {
  std::istringstream is(text);
  std::int64_t dim = 0, nnz = 0;
  if (!(is >> dim >> nnz)) throw std::invalid_argument("triplet header missing");
  if (dim != layout->total_dim()) throw std::invalid_argument("triplet dimension does not match layout");
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::int64_t i = 0; i < nnz; ++i) {
    std::int64_t r, c;
    double re, im;
    if (!(is >> r >> c >> re >> im)) throw std::invalid_argument("triplet row " + std::to_string(i) + " malformed");
    if (r < 0 || c < 0 || r >= dim || c >= dim) throw std::invalid_argument("triplet index out of range");
    trips.emplace_back(r, c, cplx(re, im));
  }
  SpMat m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return Operator(layout, std::move(m));
}

inline Operator load_triplets(const LayoutPtr& layout, const std::string& path) {
  return parse_triplets(layout, read_file(path));
}

}  // namespace qdlab
