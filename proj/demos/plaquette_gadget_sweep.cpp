// Exact effective coupling of a single-clock plaquette gadget vs lambda.

#include <cmath>
#include <cstdio>

#include "qdlab/qdlab.hpp"

using namespace qdlab;

int main() {
  ExperimentConfig c;
  c.site = "plaquette";
  const auto m = config_model(c);
  const SiteRef site{config_site_kind(c), c.site_id};
  const auto g = config_gadget(c);
  const int n = g.spec.n();
  const int d = rank_of(g.pair.p0);
  const Operator h0 = shifted_h0({g.pair.p0});
  const Operator target = site_target(m, site, g.layout);

  std::printf("n = %d, dim = %zu\n", n, static_cast<std::size_t>(g.layout->total_dim()));
  std::printf("%10s %16s %16s\n", "lambda", "fitted c", "c / lambda^n");
  for (double lam : {0.01, 0.02, 0.04, 0.08}) {
    const auto ex = exact_effective(h0 + scale(g.pair.v, lam), d);
    const Operator tilde = ex.heff - scale(ex.pi, trace(ex.heff).real() / d);
    const auto fit = fit_traceless(tilde, target, g.pair.p0);
    std::printf("%10.3g %16.6e %16.8f\n", lam, fit.c.real(), fit.c.real() / std::pow(lam, n));
  }
}
