#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qdlab/bloch.hpp"
#include "qdlab/io.hpp"

namespace qdlab {

using json = nlohmann::json;

/// Check ids understood by run_suite, in default order.
inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"prop1",      "lemma1",      "lemma2",   "hqd-spectrum", "thm1-bloch",
                                            "thm1-exact", "thm1p-pair",  "diagrams", "combinatorics", "convergence"};
  return ids;
}

// ---------------------------------------------------------------------------
// Configuration

struct Tolerances {
  double identity = tol::kIdentity;
  double proportional = tol::kProportional;
  double slope = tol::kSlope;
  double noncommuting = tol::kNoncommuting;
  double exact = tol::kExact;
  double pair = 1e-8;  // multi-clock coefficient
};

struct ExperimentConfig {
  std::vector<std::string> checks;
  std::string group = "Z2";
  std::string lattice = "square";
  int width = 2, height = 2;
  std::string site = "plaquette";  // vertex, plaquette or all (prop1 only)
  int site_id = 0;
  std::string mode = "full";
  std::vector<double> lambda_grid{0.01, 0.02, 0.04};
  int order = 6;
  int levels = 8;
  int expect_degeneracy = 0;  // 0: not asserted
  Tolerances tolerances;
  std::string output;
  std::string csv;
  std::uint64_t seed = 1;

  void validate() const {
    for (const auto& c : checks)
      if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end())
        throw std::invalid_argument("unknown check id: " + c);
    if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      if (!(lambda_grid[i] > 0.0)) throw std::invalid_argument("lambda grid entries must be positive");
      if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) throw std::invalid_argument("lambda grid must increase strictly");
    }
    if (order < 1 || order > 8) throw std::invalid_argument("order cap must be in 1..8");
    if (width < 1 || height < 1) throw std::invalid_argument("lattice size must be positive");
    if (site != "vertex" && site != "plaquette" && site != "all") throw std::invalid_argument("site must be vertex, plaquette or all");
    group_by_name(group);
    lattice_kind_from_string(lattice);
    assembly_mode_from_string(mode);
  }
};

/// "2x3" -> (2, 3).
inline std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("size must look like 2x2: " + s);
  }
}

/// Keys: checks, group, lattice, size, site, site_id, mode, lambda_grid, order, levels,
/// expect_degeneracy, tolerances{identity, proportional, slope, noncommuting, exact, pair}, output, csv, seed.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  static const std::set<std::string> keys{"checks", "group", "lattice", "size", "site", "site_id", "mode", "lambda_grid",
                                          "order", "levels", "expect_degeneracy", "tolerances", "output", "csv", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw std::invalid_argument("unknown config key: " + it.key());
  if (j.contains("checks")) c.checks = j.at("checks").get<std::vector<std::string>>();
  if (j.contains("group")) c.group = j.at("group").get<std::string>();
  if (j.contains("lattice")) c.lattice = j.at("lattice").get<std::string>();
  if (j.contains("size")) std::tie(c.width, c.height) = parse_size(j.at("size").get<std::string>());
  if (j.contains("site")) c.site = j.at("site").get<std::string>();
  if (j.contains("site_id")) c.site_id = j.at("site_id").get<int>();
  if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
  if (j.contains("lambda_grid")) c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  if (j.contains("order")) c.order = j.at("order").get<int>();
  if (j.contains("levels")) c.levels = j.at("levels").get<int>();
  if (j.contains("expect_degeneracy")) c.expect_degeneracy = j.at("expect_degeneracy").get<int>();
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  if (j.contains("csv")) c.csv = j.at("csv").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    auto& o = c.tolerances;
    for (auto it = t.begin(); it != t.end(); ++it) {
      const double v = it.value().get<double>();
      if (it.key() == "identity") o.identity = v;
      else if (it.key() == "proportional") o.proportional = v;
      else if (it.key() == "slope") o.slope = v;
      else if (it.key() == "noncommuting") o.noncommuting = v;
      else if (it.key() == "exact") o.exact = v;
      else if (it.key() == "pair") o.pair = v;
      else throw std::invalid_argument("unknown tolerance key: " + it.key());
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Report

struct SweepRow {
  double lambda;
  double residual;
};

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string compare = "<=";  // how value is held against threshold
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
  std::vector<SweepRow> sweep;
  json data = json::object();
};

struct Report {
  std::vector<CheckRecord> checks;
  json environment = json::object();

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline json to_json(const CheckRecord& c) {
  json j{{"name", c.name},   {"value", c.value},     {"threshold", c.threshold}, {"compare", c.compare},
         {"pass", c.pass},   {"seconds", c.seconds}, {"detail", c.detail},       {"data", c.data}};
  if (!c.sweep.empty()) {
    j["sweep"] = json::array();
    for (const auto& r : c.sweep) j["sweep"].push_back({{"lambda", r.lambda}, {"residual", r.residual}});
  }
  return j;
}

inline json to_json(const Report& r) {
  json j{{"environment", r.environment}, {"pass", r.all_pass()}, {"checks", json::array()}};
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  return j;
}

inline std::string fmt12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// name,value,threshold,pass,seconds; sweep checks give one row per lambda plus a slope row.
inline std::string csv_text(const Report& r) {
  std::ostringstream out;
  out << "name,value,threshold,pass,seconds\n";
  for (const auto& c : r.checks) {
    if (c.sweep.empty()) {
      out << c.name << ',' << fmt12(c.value) << ',' << fmt12(c.threshold) << ',' << (c.pass ? "true" : "false") << ','
          << fmt12(c.seconds) << '\n';
      continue;
    }
    for (const auto& s : c.sweep) out << c.name << "[lambda=" << fmt12(s.lambda) << "]," << fmt12(s.residual) << ",,,\n";
    out << c.name << "[slope]," << fmt12(c.value) << ',' << fmt12(c.threshold) << ',' << (c.pass ? "true" : "false")
        << ',' << fmt12(c.seconds) << '\n';
  }
  return out.str();
}

inline void emit_csv(const Report& r, const std::string& path) { write_file_atomic(path, csv_text(r)); }

inline void write_report(const Report& r, const std::string& path) { write_file_atomic(path, to_json(r).dump(2) + "\n"); }

inline json environment_info(const ExperimentConfig& cfg) {
  return {{"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"dim_cap", dim_cap()},
          {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// Shared instances

inline QdModel config_model(const ExperimentConfig& c) {
  return make_model(group_by_name(c.group), build_lattice(lattice_kind_from_string(c.lattice), c.width, c.height));
}

inline SiteKind config_site_kind(const ExperimentConfig& c) {
  if (c.site == "all") throw std::invalid_argument("this check needs site = vertex or plaquette");
  return c.site == "vertex" ? SiteKind::vertex : SiteKind::plaquette;
}

inline SiteGadget config_gadget(const ExperimentConfig& c) {
  const auto m = config_model(c);
  return config_site_kind(c) == SiteKind::vertex ? build_vertex_gadget(m, c.site_id) : build_plaquette_gadget(m, c.site_id);
}

/// Shifted h0 = sum_a (I - P^a_0) of a projector family.
inline Operator shifted_h0(const std::vector<Operator>& family) {
  Operator h = Operator::zero(family.front().layout());
  for (const auto& p : family) h = h + Operator::identity(p.layout()) - p;
  return h;
}

inline int rank_of(const Operator& projector) { return static_cast<int>(std::lround(trace(projector).real())); }

/// Coefficient and residual of tl(x) against tl(basis), tl removing the P0 component.
inline ProportionalityFit fit_traceless(const Operator& x, const Operator& basis, const Operator& p0) {
  return fit_proportional(remove_component(x, p0), remove_component(basis, p0));
}

// ---------------------------------------------------------------------------
// Theorem 1 and 1' analyses (also used by the CLI)

struct TheoremOneResult {
  int n = 0;
  int dim = 0;
  std::vector<double> lower_residuals;  // A^(m) ~ P0, m = 1..n-1
  double top_residual = 0.0;            // tl(A^(n)) - (-1)^{n-1} tl(target)
  double coefficient = 0.0;             // of tl(site target) in tl(A^(n)); expected -2 for even n
  double coefficient_error = 0.0;       // |c - expected| / |expected|
  double max_lower() const {
    double r = 0.0;
    for (double x : lower_residuals) r = std::max(r, x);
    return r;
  }
};

/// targets: the (x) |0><0| product pair; site_basis: the site operator the coefficient refers to.
inline TheoremOneResult analyse_a_terms(BlochContext& ctx, int n, const Operator& target, const Operator& site_basis) {
  TheoremOneResult r;
  r.n = n;
  r.dim = static_cast<int>(ctx.layout()->total_dim());
  const Operator& p0 = ctx.p0();
  for (int m = 1; m < n; ++m) r.lower_residuals.push_back(fit_proportional(bloch_a_term(ctx, m).op, p0).residual);
  const Operator an = bloch_a_term(ctx, n).op;
  const double sign = (n - 1) % 2 == 0 ? 1.0 : -1.0;
  const Operator want = scale(remove_component(target, p0), sign);
  r.top_residual = frobenius_norm(remove_component(an, p0) - want) / std::max(1.0, frobenius_norm(want));
  const auto f = fit_traceless(an, site_basis, p0);
  r.coefficient = f.c.real();
  const double expected = 2.0 * sign;
  r.coefficient_error = std::abs(f.c - cplx(expected, 0.0)) / std::abs(expected);
  return r;
}

inline TheoremOneResult theorem_one(const QdModel& m, const SiteGadget& g, SiteRef site) {
  BlochContext ctx = make_context(g.pair);
  return analyse_a_terms(ctx, g.spec.n(), target_operator(g.spec), site_target(m, site, g.layout));
}

struct PairInstance {
  QdModel model;
  Assembly assembly;
  MultiClockCheck preconditions;
};

/// Vertex 0 and the plaquette whose boundary starts at vertex 0's first star edge (adjacent).
inline PairInstance make_pair_instance(const ExperimentConfig& c) {
  PairInstance pi{config_model(c), {}, {}};
  const auto& lat = pi.model.lattice;
  const int v = c.site_id;
  const int e = star(lat, v).front().edge;
  const int p = lat.edges[e].p_plus;
  pi.assembly = build_site_assembly(pi.model, {{SiteKind::vertex, v}, {SiteKind::plaquette, p}});
  pi.preconditions = check_multi_clock_preconditions(pi.assembly.specs);
  return pi;
}

inline TheoremOneResult theorem_one_pair(PairInstance& pi) {
  const auto& a = pi.assembly;
  BlochContext ctx(decompose_projector_family(clock_projector_family(a.specs)), a.pair.v);
  const Operator& p0 = ctx.p0();
  Operator target = Operator::zero(a.layout), basis = Operator::zero(a.layout);
  for (std::size_t s = 0; s < a.specs.size(); ++s) {
    target = target + p0 * target_operator(a.specs[s]) * p0;
    basis = basis + p0 * site_target(pi.model, a.sites[s], a.layout) * p0;
  }
  return analyse_a_terms(ctx, a.specs.front().n(), target, basis);
}

struct SpectralSweep {
  int n = 0;
  std::vector<SweepRow> rows;
  double slope = 0.0;
};

/// Exact route: Heff - (tr Heff / d) Pi against lambda^n (-1)^{n-1} tl(target).
inline SpectralSweep spectral_route(const SiteGadget& g, const std::vector<double>& lambdas) {
  SpectralSweep s;
  s.n = g.spec.n();
  const Operator& p0 = g.pair.p0;
  const Operator h0 = shifted_h0({p0});
  const int d = rank_of(p0);
  const Operator pred = scale(remove_component(target_operator(g.spec), p0), (s.n - 1) % 2 == 0 ? 1.0 : -1.0);
  std::vector<double> res;
  for (double lam : lambdas) {
    const auto ex = exact_effective(h0 + scale(g.pair.v, lam), d);
    const Operator tilde = ex.heff - scale(ex.pi, trace(ex.heff).real() / d);
    const double r = frobenius_norm(tilde - scale(pred, std::pow(lam, s.n)));
    s.rows.push_back({lam, r});
    res.push_back(r);
  }
  s.slope = loglog_slope(lambdas, res);
  return s;
}

struct DiagramSummary {
  int enumerated = 0;
  int special = 0;
  double max_reconstruction = 0.0;   // sum g Theta - A^(m)
  double max_proportionality = 0.0;  // non-special Theta ~ P0
};

inline DiagramSummary analyse_diagrams(BlochContext& ctx, const ClockSystem& cs, int clocks, const ChiMap* chi, int max_m) {
  DiagramSummary s;
  for (int m = 1; m <= max_m; ++m) {
    Operator sum = Operator::zero(cs.layout);
    for (const auto& d : enumerate_valid_diagrams(cs.n, m, clocks, chi)) {
      ++s.enumerated;
      const Operator th = theta_operator(d, cs, chi);
      sum = sum + scale(th, diagram_weight(d));
      if (is_special(d, cs.n)) {
        ++s.special;
        continue;
      }
      s.max_proportionality = std::max(s.max_proportionality, fit_proportional(th, cs.p0).residual);
    }
    const Operator a = bloch_a_term(ctx, m).op;
    s.max_reconstruction = std::max(s.max_reconstruction, frobenius_norm(sum - a) / std::max(1.0, frobenius_norm(a)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Checks

namespace detail {

inline CheckRecord check_prop1(const ExperimentConfig& c) {
  CheckRecord r;
  r.threshold = c.tolerances.identity;
  const auto m = config_model(c);
  json sites = json::array();
  auto run = [&](SiteKind kind) {
    const auto p = check_proposition1(m, kind, c.site_id);
    sites.push_back({{"site", to_string(kind)}, {"residual", p.residual}, {"residual_adjoint", p.residual_adjoint}});
    r.value = std::max(r.value, p.worst());
  };
  if (c.site != "plaquette") run(SiteKind::vertex);
  if (c.site != "vertex") run(SiteKind::plaquette);
  r.pass = r.value <= r.threshold;
  r.data = {{"group", c.group}, {"lattice", c.lattice}, {"sites", sites}};
  r.detail = c.group + " " + c.lattice + " " + c.site + ": max residual " + fmt12(r.value);
  return r;
}

inline CheckRecord check_lemma1_record(const ExperimentConfig& c) {
  CheckRecord r;
  const auto rep = check_lemma1(config_model(c));
  r.value = std::max(rep.max_claim1, rep.max_claim2);
  r.threshold = c.tolerances.identity;
  r.pass = r.value <= r.threshold && rep.min_claim3 > c.tolerances.noncommuting && !rep.claim3.empty();
  r.data = {{"max_claim1", rep.max_claim1}, {"max_claim2", rep.max_claim2}, {"min_claim3", rep.min_claim3},
            {"claim3_pairs", rep.claim3.size()}, {"pairs_checked", rep.pairs_checked}};
  r.detail = "claims 1-2 max " + fmt12(r.value) + ", claim 3 min " + fmt12(rep.min_claim3) + " over " +
             std::to_string(rep.claim3.size()) + " same-edge pairs";
  return r;
}

inline CheckRecord check_lemma2(const ExperimentConfig& c) {
  CheckRecord r;
  const auto m = config_model(c);
  const auto& G = m.group;
  double ribbon = 0.0;
  const int v = c.site_id, p = c.site_id;
  const auto lv = edge_layout(m, vertex_edges(m.lattice, v));
  for (const auto& s : star(m.lattice, v)) {
    const auto fam = ribbon_operators(m, closed_ribbon(m, SiteKind::vertex, v, s.edge), lv);
    for (int g = 0; g < G.order; ++g)
      ribbon = std::max(ribbon, operator_norm(fam[label_index(G, {g, 0})] - gauge_transformation(m, v, g, lv)));
  }
  const auto lp = edge_layout(m, plaquette_edges(m.lattice, p));
  for (const auto& b : boundary(m.lattice, p)) {
    const auto fam = ribbon_operators(m, closed_ribbon(m, SiteKind::plaquette, p, b.edge), lp);
    const int v0 = traversal_start(m.lattice, b);
    for (int g = 0; g < G.order; ++g) {
      const Operator bg = magnetic_charge(m, v0, p, g, lp);
      for (int h = 0; h < G.order; ++h)
        ribbon = std::max(ribbon, operator_norm(fam[label_index(G, {h, G.inv[g]})] - bg));
    }
  }
  double drep = 0.0;
  const int n = G.order * G.order;
  std::vector<DenseMat> d;
  for (int j = 0; j < n; ++j) {
    d.push_back(qd_generator(G, label_at(G, j)));
    drep = std::max(drep, (d.back() - qd_generator_factored(G, label_at(G, j))).norm());
  }
  const DenseVec psi = qd_psi(G);
  for (int a = 0; a < n; ++a) {
    drep = std::max(drep, std::abs(psi.dot(d[a] * psi) - double(counit(label_at(G, a))) / G.order));
    for (int b = 0; b < n; ++b) {
      DenseMat rhs = DenseMat::Zero(n, n);
      for (int k = 0; k < n; ++k)
        if (omega_coeff(G, label_at(G, k), label_at(G, a), label_at(G, b))) rhs += d[k];
      drep = std::max(drep, (d[a] * d[b] - rhs).norm());
    }
  }
  r.value = ribbon;
  r.threshold = c.tolerances.identity;
  r.pass = ribbon <= c.tolerances.identity && drep <= c.tolerances.exact;
  r.data = {{"ribbon_residual", ribbon}, {"d_representation_residual", drep}, {"d_threshold", c.tolerances.exact}};
  r.detail = "closed ribbons " + fmt12(ribbon) + ", D identities " + fmt12(drep);
  return r;
}

inline CheckRecord check_hqd_spectrum(const ExperimentConfig& c) {
  CheckRecord r;
  const auto m = config_model(c);
  const Operator h = build_hqd(m);
  const int dim = static_cast<int>(h.dim());
  const int k = std::min(c.levels, dim);
  const auto ep = lowest_eigenpairs(h, k);
  const double ground = ep.energies.front();
  const double expected = -double(m.lattice.num_vertices + m.lattice.num_plaquettes);
  int deg = 0;
  for (double e : ep.energies) deg += std::abs(e - ground) < tol::kGap;
  double comm = 0.0, stab = 0.0;
  std::vector<Operator> terms;
  for (int v = 0; v < m.lattice.num_vertices; ++v) terms.push_back(vertex_operator(m, v));
  for (int p = 0; p < m.lattice.num_plaquettes; ++p) terms.push_back(plaquette_operator(m, p));
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i + 1; j < terms.size(); ++j) comm = std::max(comm, operator_norm(commutator(terms[i], terms[j])));
    for (int s = 0; s < deg; ++s) {
      const DenseVec psi = ep.states.col(s);
      stab = std::max(stab, (terms[i].matrix() * psi - psi).norm());
    }
  }
  r.value = std::abs(ground - expected);
  r.threshold = tol::kEigResidual;
  const bool resolved = deg < k;
  const bool deg_ok = c.expect_degeneracy == 0 || (resolved && deg == c.expect_degeneracy);
  r.pass = r.value <= r.threshold && comm <= c.tolerances.identity && stab <= tol::kEigResidual && deg_ok;
  r.data = {{"dim", dim}, {"energies", ep.energies}, {"ground", ground}, {"expected_ground", expected},
            {"degeneracy", deg}, {"degeneracy_resolved", resolved}, {"max_commutator", comm}, {"max_stabilizer_residual", stab}};
  r.detail = "ground " + fmt12(ground) + " (expected " + fmt12(expected) + "), degeneracy " + (resolved ? "" : ">=") +
             std::to_string(deg) + ", max [A,B] " + fmt12(comm);
  return r;
}

inline CheckRecord check_thm1_bloch(const ExperimentConfig& c) {
  CheckRecord r;
  const auto m = config_model(c);
  const SiteRef site{config_site_kind(c), c.site_id};
  const auto g = config_gadget(c);
  const auto t = theorem_one(m, g, site);
  r.value = std::max(t.max_lower(), t.top_residual);
  r.threshold = c.tolerances.proportional;
  r.pass = r.value <= r.threshold && t.coefficient_error <= c.tolerances.proportional;
  const double lam = c.lambda_grid.front();
  r.data = {{"n", t.n},
            {"dim", t.dim},
            {"lower_residuals", t.lower_residuals},
            {"top_residual", t.top_residual},
            {"coefficient", t.coefficient},
            {"coefficient_relative_error", t.coefficient_error},
            {"lambda", lam},
            {"effective_coefficient", t.coefficient * std::pow(lam, t.n)},
            {"predicted_coefficient", -2.0 * std::pow(lam, t.n) * ((t.n - 1) % 2 == 0 ? -1.0 : 1.0)}};
  r.detail = "n=" + std::to_string(t.n) + " dim=" + std::to_string(t.dim) + ": lower orders " + fmt12(t.max_lower()) +
             ", order n " + fmt12(t.top_residual) + ", coefficient " + fmt12(t.coefficient);
  return r;
}

inline CheckRecord check_thm1_exact(const ExperimentConfig& c) {
  CheckRecord r;
  const auto g = config_gadget(c);
  const auto s = spectral_route(g, c.lambda_grid);
  r.sweep = s.rows;
  r.value = s.slope;
  r.threshold = s.n + c.tolerances.slope;
  r.compare = ">=";
  r.pass = s.slope >= r.threshold;
  r.data = {{"n", s.n}, {"slope", s.slope}};
  r.detail = "n=" + std::to_string(s.n) + ": log-log slope " + fmt12(s.slope);
  return r;
}

inline CheckRecord check_thm1p_pair(const ExperimentConfig& c) {
  CheckRecord r;
  auto pi = make_pair_instance(c);
  const auto t = theorem_one_pair(pi);
  const double pre = std::max({pi.preconditions.max_gamma_commutator, pi.preconditions.max_special_commutator,
                               pi.preconditions.max_gamma_pair});
  r.value = std::max(t.max_lower(), t.top_residual);
  r.threshold = c.tolerances.pair;
  r.pass = r.value <= r.threshold && t.coefficient_error <= c.tolerances.pair && pre <= c.tolerances.identity;
  r.data = {{"n", t.n},
            {"dim", t.dim},
            {"sites", {site_name(pi.assembly.sites[0]), site_name(pi.assembly.sites[1])}},
            {"lower_residuals", t.lower_residuals},
            {"top_residual", t.top_residual},
            {"coefficient", t.coefficient},
            {"coefficient_relative_error", t.coefficient_error},
            {"precondition_max", pre}};
  r.detail = site_name(pi.assembly.sites[0]) + "+" + site_name(pi.assembly.sites[1]) + " dim=" + std::to_string(t.dim) +
             ": residual " + fmt12(r.value) + ", coefficient " + fmt12(t.coefficient) + ", preconditions " + fmt12(pre);
  return r;
}

inline CheckRecord check_diagrams(const ExperimentConfig& c) {
  CheckRecord r;
  // Single-clock listings at n = 5.
  const auto two = enumerate_valid_diagrams(5, 2);
  int full = 0, touching = 0;
  for (const auto& d : enumerate_valid_diagrams(5, 4)) (d.eps[0] == std::vector<int>{1, 1, 1} ? full : touching)++;
  const bool listing = enumerate_valid_diagrams(5, 1).empty() && two.size() == 2 && full == 6 && touching == 4;

  const auto g = config_gadget(c);
  BlochContext ctx = make_context(g.pair);
  const ClockSystem cs = make_clock_system({g.spec});
  const auto single = analyse_diagrams(ctx, cs, 1, nullptr, cs.n);

  json multi = nullptr;
  double multi_worst = 0.0;
  if (c.site == "plaquette" && c.lattice == "square") {
    auto pi = make_pair_instance(c);
    const auto& a = pi.assembly;
    BlochContext mctx(decompose_projector_family(clock_projector_family(a.specs)), a.pair.v);
    const ClockSystem mcs = make_clock_system(a.specs, &a.chi);
    const auto ms = analyse_diagrams(mctx, mcs, static_cast<int>(a.specs.size()), &a.chi, mcs.n);
    multi = {{"enumerated", ms.enumerated}, {"special", ms.special}, {"reconstruction", ms.max_reconstruction},
             {"proportionality", ms.max_proportionality}};
    multi_worst = std::max(ms.max_reconstruction, ms.max_proportionality);
  }
  r.value = std::max({single.max_reconstruction, single.max_proportionality, multi_worst});
  r.threshold = c.tolerances.proportional;
  r.pass = listing && r.value <= r.threshold;
  r.data = {{"n5_order2", two.size()},
            {"n5_order4_all_gray", full},
            {"n5_order4_touching", touching},
            {"single_clock",
             {{"n", cs.n},
              {"enumerated", single.enumerated},
              {"special", single.special},
              {"reconstruction", single.max_reconstruction},
              {"proportionality", single.max_proportionality}}},
            {"multi_clock", multi}};
  r.detail = "n=5 order 4: " + std::to_string(full) + "+" + std::to_string(touching) + " diagrams; " +
             std::to_string(single.enumerated) + " single-clock diagrams (n=" + std::to_string(cs.n) + ")" +
             (multi.is_null() ? std::string()
                              : ", " + std::to_string(multi.at("enumerated").get<int>()) + " multi-clock (" +
                                    std::to_string(multi.at("special").get<int>()) + " special)") +
             ", worst residual " + fmt12(r.value);
  return r;
}

/// All tuples in {0..m}^m filtered by the prefix rule.
inline std::size_t brute_force_pm_count(int m) {
  std::size_t count = 0;
  IndexTuple t(m, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == m) {
      int s = 0;
      for (int p = 0; p < m; ++p) {
        s += t[p];
        if (p + 1 < m && s < p + 1) return;
      }
      count += s == m;
      return;
    }
    for (int v = 0; v <= m; ++v) {
      t[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return count;
}

inline CheckRecord check_combinatorics(const ExperimentConfig&) {
  CheckRecord r;
  bool ok = true;
  json counts = json::array();
  for (int m = 1; m <= 8; ++m) {
    const std::size_t got = enumerate_pm(m).size(), want = brute_force_pm_count(m);
    ok = ok && got == want && double(got) <= std::pow(4.0, m);
    counts.push_back({{"m", m}, {"count", got}, {"brute_force", want}});
  }
  json signs = json::array();
  for (int n = 2; n <= 8; ++n) {
    const long g = g_coefficient(std::vector<int>(n - 1, 1));
    ok = ok && g == ((n - 1) % 2 == 0 ? 1 : -1);
    signs.push_back({{"n", n}, {"g", g}});
  }
  r.value = ok ? 0.0 : 1.0;
  r.threshold = 0.0;
  r.pass = ok;
  r.data = {{"pm_counts", counts}, {"g_all_ones", signs}};
  r.detail = ok ? "P_m counts and g_n(1..1) signs agree" : "mismatch, see data";
  return r;
}

inline CheckRecord check_convergence(const ExperimentConfig& c) {
  CheckRecord r;
  const auto g = config_gadget(c);
  BlochContext ctx = make_context(g.pair);
  const ClockSystem cs = make_clock_system({g.spec});
  const auto rep = convergence_report(ctx, cs, c.order, c.lambda_grid);
  json rows = json::array();
  double worst = 0.0;  // max ||U^(m)|| / (16 gamma)^m
  for (const auto& row : rep.rows) {
    rows.push_back({{"m", row.order}, {"u_norm", row.u_norm}, {"refined_bound", row.refined_bound},
                    {"naive_bound", row.naive_bound}, {"within", row.within_refined}});
    worst = std::max(worst, row.u_norm / row.refined_bound);
  }
  json sums = json::array();
  for (const auto& [lam, s] : rep.lambda_partial_sums) sums.push_back({{"lambda", lam}, {"sum_norms", s}});
  r.value = worst;
  r.threshold = 1.0;
  r.pass = rep.all_within();
  r.data = {{"gamma", rep.gamma},
            {"v_norm", rep.v_norm},
            {"e1", rep.e1},
            {"refined_threshold", rep.refined_threshold},
            {"naive_threshold", rep.naive_threshold},
            {"larger_threshold", rep.refined_threshold >= rep.naive_threshold ? "refined" : "naive"},
            {"orders", rows},
            {"partial_sums", sums}};
  r.detail = "gamma " + fmt12(rep.gamma) + ", refined threshold " + fmt12(rep.refined_threshold) + ", naive " +
             fmt12(rep.naive_threshold) + ", max ||U^(m)||/(16 gamma)^m " + fmt12(worst);
  return r;
}

}  // namespace detail

inline CheckRecord run_check(const std::string& id, const ExperimentConfig& c) {
  static const std::map<std::string, std::function<CheckRecord(const ExperimentConfig&)>> table{
      {"prop1", detail::check_prop1},           {"lemma1", detail::check_lemma1_record},
      {"lemma2", detail::check_lemma2},         {"hqd-spectrum", detail::check_hqd_spectrum},
      {"thm1-bloch", detail::check_thm1_bloch}, {"thm1-exact", detail::check_thm1_exact},
      {"thm1p-pair", detail::check_thm1p_pair}, {"diagrams", detail::check_diagrams},
      {"combinatorics", detail::check_combinatorics}, {"convergence", detail::check_convergence}};
  const auto it = table.find(id);
  if (it == table.end()) throw std::invalid_argument("unknown check id: " + id);
  const auto t0 = std::chrono::steady_clock::now();
  CheckRecord r = it->second(c);
  r.name = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Runs the configured checks in order; writes report/CSV when paths are set.
inline Report run_suite(const ExperimentConfig& c) {
  c.validate();
  Report rep;
  rep.environment = environment_info(c);
  for (const auto& id : c.checks) rep.checks.push_back(run_check(id, c));
  if (!c.output.empty()) write_report(rep, c.output);
  if (!c.csv.empty()) emit_csv(rep, c.csv);
  return rep;
}

}  // namespace qdlab
