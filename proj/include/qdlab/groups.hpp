#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdlab {

/**
 * @brief Finite group given by its Cayley table.
 *
 * Elements are 0..order-1, identity is 0.
 */
struct FiniteGroup {
  int order = 0;
  std::vector<std::vector<int>> mul;
  std::vector<int> inv;
  int identity = 0;
  std::string name;

  int operator()(int a, int b) const { return mul[a][b]; }
  int conj(int g, int h) const { return mul[mul[inv[g]][h]][g]; }  // g^-1 h g
  bool is_abelian() const {
    for (int a = 0; a < order; ++a)
      for (int b = 0; b < order; ++b)
        if (mul[a][b] != mul[b][a]) return false;
    return true;
  }
};

namespace detail {
inline std::vector<int> inverse_table(const std::vector<std::vector<int>>& mul) {
  const int n = static_cast<int>(mul.size());
  std::vector<int> inv(n, -1);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (mul[a][b] == 0) inv[a] = b;
  return inv;
}
}  // namespace detail

inline FiniteGroup make_cyclic(int n) {
  if (n <= 0) throw std::invalid_argument("make_cyclic: n must be positive");
  FiniteGroup g;
  g.order = n;
  g.name = "Z" + std::to_string(n);
  g.mul.assign(n, std::vector<int>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g.mul[a][b] = (a + b) % n;
  g.inv = detail::inverse_table(g.mul);
  return g;
}

/// S3 as permutations of {0,1,2} in lexicographic order; (ab)(x) = a(b(x)).
inline FiniteGroup make_symmetric_3() {
  std::vector<std::array<int, 3>> perms;
  std::array<int, 3> p{0, 1, 2};
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  auto index_of = [&](const std::array<int, 3>& q) {
    return static_cast<int>(std::find(perms.begin(), perms.end(), q) - perms.begin());
  };
  FiniteGroup g;
  g.order = 6;
  g.name = "S3";
  g.mul.assign(6, std::vector<int>(6));
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      std::array<int, 3> c{};
      for (int x = 0; x < 3; ++x) c[x] = perms[a][perms[b][x]];
      g.mul[a][b] = index_of(c);
    }
  g.inv = detail::inverse_table(g.mul);
  return g;
}

/// Dihedral group of the square, element r^k s^f stored at k + 4f.
inline FiniteGroup make_dihedral_4() {
  FiniteGroup g;
  g.order = 8;
  g.name = "D4";
  g.mul.assign(8, std::vector<int>(8));
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int ka = a % 4, fa = a / 4, kb = b % 4, fb = b / 4;
      const int k = ((ka + (fa ? -kb : kb)) % 4 + 4) % 4;
      g.mul[a][b] = k + 4 * ((fa + fb) % 2);
    }
  g.inv = detail::inverse_table(g.mul);
  return g;
}

inline FiniteGroup group_by_name(const std::string& name) {
  if (name == "S3") return make_symmetric_3();
  if (name == "D4") return make_dihedral_4();
  if (name.size() >= 2 && name[0] == 'Z') {
    int n = 0;
    try {
      n = std::stoi(name.substr(1));
    } catch (const std::exception&) {
      throw std::invalid_argument("unknown group: " + name);
    }
    return make_cyclic(n);
  }
  throw std::invalid_argument("unknown group: " + name);
}

/// True iff the tables define a group with identity 0. Throws on shape mismatch.
inline bool verify_group_axioms(const FiniteGroup& g) {
  const int n = g.order;
  if (n <= 0 || static_cast<int>(g.mul.size()) != n || static_cast<int>(g.inv.size()) != n)
    throw std::invalid_argument("verify_group_axioms: table shape does not match order");
  for (const auto& row : g.mul)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("verify_group_axioms: ragged multiplication table");
  if (g.identity != 0) return false;
  for (int a = 0; a < n; ++a) {
    std::vector<char> row_seen(n, 0), col_seen(n, 0);
    for (int b = 0; b < n; ++b) {
      const int r = g.mul[a][b], c = g.mul[b][a];
      if (r < 0 || r >= n || c < 0 || c >= n) return false;
      row_seen[r] = 1;
      col_seen[c] = 1;
    }
    if (std::count(row_seen.begin(), row_seen.end(), 1) != n) return false;
    if (std::count(col_seen.begin(), col_seen.end(), 1) != n) return false;
  }
  for (int a = 0; a < n; ++a) {
    if (g.mul[0][a] != a || g.mul[a][0] != a) return false;
    if (g.inv[a] < 0 || g.inv[a] >= n || g.mul[a][g.inv[a]] != 0) return false;
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (g.mul[g.mul[a][b]][c] != g.mul[a][g.mul[b][c]]) return false;
  return true;
}

}  // namespace qdlab
