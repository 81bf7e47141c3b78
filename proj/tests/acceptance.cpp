// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <functional>
#include <iostream>

#include "qdlab/harness.hpp"

using namespace qdlab;

namespace {

ExperimentConfig make(const std::string& group, const std::string& lattice, const std::string& site = "plaquette") {
  ExperimentConfig c;
  c.group = group;
  c.lattice = lattice;
  c.site = site;
  return c;
}

struct Criterion {
  bool pass = true;
  std::vector<std::string> notes;

  void add(const CheckRecord& r, const std::string& label) {
    pass = pass && r.pass;
    notes.push_back(label + ": " + r.detail + (r.pass ? "" : " [fail]"));
  }
};

int failures = 0;

void report(int k, const std::string& title, const std::function<Criterion()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.pass = false;
    c.notes.push_back(std::string("exception: ") + e.what());
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !c.pass;
  std::cout << "CRITERION " << k << " " << (c.pass ? "PASS" : "FAIL") << " (" << fmt12(s) << " s) " << title << "\n";
  for (const auto& n : c.notes) std::cout << "    " << n << "\n";
  std::cout.flush();
}

}  // namespace

int main() {
  report(1, "product form of A(v) and B(p)", [] {
    Criterion c;
    for (const char* g : {"Z2", "Z3", "S3"})
      for (const char* l : {"square", "honeycomb"}) c.add(run_check("prop1", make(g, l, "all")), std::string(g) + " " + l);
    return c;
  });
  report(2, "commutation pattern of the M operators", [] {
    Criterion c;
    c.add(run_check("lemma1", make("Z2", "square")), "Z2 square 2x2");
    return c;
  });
  report(3, "closed ribbons and the D representation", [] {
    Criterion c;
    for (const char* g : {"Z2", "S3"}) c.add(run_check("lemma2", make(g, "square")), g);
    return c;
  });
  report(4, "quantum double spectrum", [] {
    Criterion c;
    auto cfg = make("Z2", "square");
    cfg.expect_degeneracy = 4;
    c.add(run_check("hqd-spectrum", cfg), "Z2 square 2x2");
    return c;
  });
  report(5, "single-clock Bloch terms", [] {
    Criterion c;
    for (const char* l : {"square", "honeycomb"}) {
      const auto r = run_check("thm1-bloch", make("Z2", l));
      c.add(r, l);
      c.notes.push_back("  coefficient at lambda=" + fmt12(r.data.at("lambda")) + ": " +
                        fmt12(r.data.at("effective_coefficient")) + " vs " + fmt12(r.data.at("predicted_coefficient")));
    }
    return c;
  });
  report(6, "exact effective Hamiltonian slope", [] {
    Criterion c;
    for (const char* l : {"square", "honeycomb"}) {
      const auto r = run_check("thm1-exact", make("Z2", l));
      c.add(r, l);
      for (const auto& row : r.sweep) c.notes.push_back("  lambda " + fmt12(row.lambda) + " residual " + fmt12(row.residual));
    }
    return c;
  });
  report(7, "vertex plus plaquette multi-clock instance", [] {
    Criterion c;
    c.add(run_check("thm1p-pair", make("Z2", "square")), "Z2 square");
    return c;
  });
  report(8, "diagram enumeration and reconstruction", [] {
    Criterion c;
    for (const char* l : {"square", "honeycomb"}) c.add(run_check("diagrams", make("Z2", l)), l);
    return c;
  });
  report(9, "index tuples and g coefficients", [] {
    Criterion c;
    c.add(run_check("combinatorics", ExperimentConfig{}), "m <= 8");
    return c;
  });
  report(10, "U-norm bounds", [] {
    Criterion c;
    for (const char* l : {"square", "honeycomb"}) {
      auto cfg = make("Z2", l);
      cfg.order = 6;
      const auto r = run_check("convergence", cfg);
      c.add(r, l);
      c.notes.push_back("  larger threshold: " + r.data.at("larger_threshold").get<std::string>());
    }
    return c;
  });
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << "\n";
  return failures == 0 ? 0 : 1;
}
