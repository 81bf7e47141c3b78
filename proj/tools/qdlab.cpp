// qdlab command line: hqd, verify, gadget, bloch, suite.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "qdlab/qdlab.hpp"

using namespace qdlab;

namespace {

/// Flags shared by every subcommand; unset ones leave the config alone.
struct Overrides {
  std::optional<std::string> group, lattice, size, site, mode, out, csv;
  std::optional<int> site_id, order, levels, expect_degeneracy;
  std::optional<std::vector<double>> lambda_grid;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app, bool sweep_options = true) {
    app->add_option("--group", group, "Z<n>, S3 or D4");
    app->add_option("--lattice", lattice, "square or honeycomb");
    app->add_option("--size", size, "torus size, e.g. 2x2");
    app->add_option("--site", site, "vertex, plaquette or all");
    app->add_option("--site-id", site_id, "site index");
    app->add_option("--mode", mode, "vertices-only, plaquettes-only or full");
    app->add_option("--out", out, "JSON output path");
    app->add_option("--csv", csv, "CSV summary path");
    app->add_option("--levels", levels, "eigenvalues to compute");
    app->add_option("--expect-degeneracy", expect_degeneracy, "ground degeneracy to assert");
    app->add_option("--seed", seed, "recorded in the report");
    if (sweep_options) {
      app->add_option("--lambda-grid", lambda_grid, "comma separated lambdas")->delimiter(',');
      app->add_option("--order", order, "order cap (<= 8)");
    }
  }

  void apply(ExperimentConfig& c) const {
    if (group) c.group = *group;
    if (lattice) c.lattice = *lattice;
    if (size) std::tie(c.width, c.height) = parse_size(*size);
    if (site) c.site = *site;
    if (mode) c.mode = *mode;
    if (out) c.output = *out;
    if (csv) c.csv = *csv;
    if (site_id) c.site_id = *site_id;
    if (order) c.order = *order;
    if (levels) c.levels = *levels;
    if (expect_degeneracy) c.expect_degeneracy = *expect_degeneracy;
    if (lambda_grid) c.lambda_grid = *lambda_grid;
    if (seed) c.seed = *seed;
  }
};

void emit(const json& j, const std::string& path) {
  if (path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_file_atomic(path, j.dump(2) + "\n");
}

int report_exit(const Report& r, const ExperimentConfig& c) {
  if (c.output.empty()) std::cout << to_json(r).dump(2) << "\n";
  for (const auto& ch : r.checks)
    std::cerr << (ch.pass ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
  return r.all_pass() ? 0 : 1;
}

int cmd_hqd(const ExperimentConfig& c) {
  const auto m = config_model(c);
  const Operator h = build_hqd(m);
  const int k = std::min<int>(c.levels, static_cast<int>(h.dim()));
  const auto ep = lowest_eigenpairs(h, k);
  json levels = json::array();
  for (std::size_t i = 0; i < ep.energies.size();) {
    std::size_t j = i;
    while (j < ep.energies.size() && std::abs(ep.energies[j] - ep.energies[i]) < tol::kGap) ++j;
    levels.push_back({{"energy", ep.energies[i]}, {"degeneracy", j - i}, {"complete", j < ep.energies.size()}});
    i = j;
  }
  emit({{"group", c.group},
        {"lattice", c.lattice},
        {"size", std::to_string(c.width) + "x" + std::to_string(c.height)},
        {"dim", h.dim()},
        {"energies", ep.energies},
        {"levels", levels}},
       c.output);
  return 0;
}

int cmd_gadget(const ExperimentConfig& c, double lambda, const std::string& dump_v) {
  const auto m = config_model(c);
  const SiteRef site{config_site_kind(c), c.site_id};
  const auto g = config_gadget(c);
  const auto prop = check_proportionality(g.spec);
  const int d = rank_of(g.pair.p0);
  const int n = g.spec.n();
  const Operator h = shifted_h0({g.pair.p0}) + scale(g.pair.v, lambda);
  const auto ex = exact_effective(h, d);
  const Operator tilde = ex.heff - scale(ex.pi, trace(ex.heff).real() / d);
  const auto fit = fit_traceless(tilde, site_target(m, site, g.layout), g.pair.p0);
  if (!dump_v.empty()) save_triplets(g.pair.v, dump_v);
  emit({{"group", c.group},
        {"lattice", c.lattice},
        {"site", site_name(site)},
        {"dim", g.layout->total_dim()},
        {"clock_dim", n},
        {"ground_rank", d},
        {"v_norm", operator_norm(g.pair.v)},
        {"proportionality", {{"ok", prop.ok}, {"worst_residual", prop.worst_residual}}},
        {"lambda", lambda},
        {"low_energies", ex.energies},
        {"effective_coefficient", fit.c.real()},
        {"predicted_coefficient", 2.0 * ((n - 1) % 2 == 0 ? 1.0 : -1.0) * std::pow(lambda, n)},
        {"fit_residual", fit.residual}},
       c.output);
  return 0;
}

int cmd_bloch(ExperimentConfig c, const std::string& spec_path, int orders) {
  if (!spec_path.empty()) {
    const json j = json::parse(read_file(spec_path));
    if (j.contains("group")) c.group = j.at("group").get<std::string>();
    if (j.contains("lattice")) c.lattice = j.at("lattice").get<std::string>();
    if (j.contains("site")) c.site = j.at("site").get<std::string>();
    if (j.contains("size")) std::tie(c.width, c.height) = parse_size(j.at("size").get<std::string>());
    if (j.contains("site_id")) c.site_id = j.at("site_id").get<int>();
  }
  c.order = orders;
  c.validate();
  const auto m = config_model(c);
  const SiteRef site{config_site_kind(c), c.site_id};
  const auto g = config_gadget(c);
  BlochContext ctx = make_context(g.pair);
  const int n = g.spec.n();

  json terms = json::array();
  for (int k = 0; k <= orders; ++k) {
    const auto a = bloch_a_term(ctx, k);
    const auto u = bloch_u_term(ctx, k);
    terms.push_back({{"m", k},
                     {"a_norm", operator_norm(a.op)},
                     {"u_norm", operator_norm(u.op)},
                     {"a_p0_residual", k == 0 ? 0.0 : fit_proportional(a.op, ctx.p0()).residual},
                     {"tuples", a.tuples.size()}});
  }
  json checks = json::array();
  bool all = true;
  auto add = [&](const std::string& name, double value, double threshold, bool pass) {
    checks.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
    all = all && pass;
  };
  if (orders >= n) {
    const auto t = theorem_one(m, g, site);
    add("lower_orders_proportional", t.max_lower(), c.tolerances.proportional, t.max_lower() <= c.tolerances.proportional);
    add("order_n_target", t.top_residual, c.tolerances.proportional, t.top_residual <= c.tolerances.proportional);
    add("coefficient", t.coefficient, 2.0 * ((n - 1) % 2 == 0 ? 1 : -1), t.coefficient_error <= c.tolerances.proportional);
  }
  const auto spectral = spectral_route(g, c.lambda_grid);
  add("spectral_slope", spectral.slope, n + c.tolerances.slope, spectral.slope >= n + c.tolerances.slope);
  json series = json::array();
  const Operator h0 = shifted_h0({g.pair.p0});
  const int d = rank_of(g.pair.p0);
  for (int k = 2; k <= std::min(orders, 5); ++k) {
    std::vector<double> res;
    for (double lam : c.lambda_grid) {
      const auto ex = exact_effective(h0 + scale(g.pair.v, lam), d);
      res.push_back(frobenius_norm(normalized_series(ctx, lam, k).heff - ex.heff));
    }
    const double s = loglog_slope(c.lambda_grid, res);
    series.push_back({{"max_order", k}, {"residuals", res}, {"slope", s}});
    add("series_slope_order_" + std::to_string(k), s, k + c.tolerances.slope, s >= k + c.tolerances.slope);
  }
  json sweep = json::array();
  for (const auto& r : spectral.rows) sweep.push_back({{"lambda", r.lambda}, {"residual", r.residual}});
  emit({{"site", site_name(site)},
        {"clock_dim", n},
        {"dim", g.layout->total_dim()},
        {"terms", terms},
        {"spectral_sweep", sweep},
        {"series", series},
        {"checks", checks},
        {"pass", all}},
       c.output);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdlab: quantum double Hamiltonians from clock gadgets"};
  app.require_subcommand(1);

  Overrides ov_hqd, ov_verify, ov_gadget, ov_bloch, ov_suite;

  auto* hqd = app.add_subcommand("hqd", "low spectrum of the quantum double Hamiltonian");
  ov_hqd.add_to(hqd, false);

  std::string check;
  auto* verify = app.add_subcommand("verify", "run one check");
  verify->add_option("check", check, "check id")->required();
  ov_verify.add_to(verify);

  double lambda = 0.02;
  std::string dump_v;
  auto* gadget = app.add_subcommand("gadget", "build a single-site gadget and its effective Hamiltonian");
  gadget->add_option("--lambda", lambda, "perturbation strength");
  gadget->add_option("--dump-v", dump_v, "write V as sparse triplets");
  ov_gadget.add_to(gadget, false);

  std::string gadget_spec;
  int orders = 6;
  auto* bloch = app.add_subcommand("bloch", "Bloch series terms and slope fits for a gadget");
  bloch->add_option("--gadget", gadget_spec, "JSON with group, lattice, size, site, site_id");
  bloch->add_option("--orders", orders, "highest order (<= 8)");
  ov_bloch.add_to(bloch);

  std::string config_path;
  auto* suite = app.add_subcommand("suite", "run the checks listed in a config file");
  suite->add_option("--config", config_path, "experiment config JSON")->required();
  ov_suite.add_to(suite);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig c;
    if (*hqd) {
      ov_hqd.apply(c);
      c.validate();
      return cmd_hqd(c);
    }
    if (*verify) {
      ov_verify.apply(c);
      c.checks = {check};
      return report_exit(run_suite(c), c);
    }
    if (*gadget) {
      ov_gadget.apply(c);
      c.validate();
      return cmd_gadget(c, lambda, dump_v);
    }
    if (*bloch) {
      ov_bloch.apply(c);
      return cmd_bloch(c, gadget_spec, orders);
    }
    if (*suite) {
      c = load_config(config_path);
      ov_suite.apply(c);
      return report_exit(run_suite(c), c);
    }
  } catch (const ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
