// Low spectrum of the Z2 quantum double on a small square torus.
// Usage: toric_code_spectrum [group] [WxH]

#include <iostream>

#include "qdlab/qdlab.hpp"

int main(int argc, char** argv) {
  qdlab::ExperimentConfig c;
  if (argc > 1) c.group = argv[1];
  if (argc > 2) std::tie(c.width, c.height) = qdlab::parse_size(argv[2]);
  c.validate();
  const auto m = qdlab::config_model(c);
  const auto h = qdlab::build_hqd(m);
  const auto ep = qdlab::lowest_eigenpairs(h, 8);
  std::cout << c.group << " " << c.width << "x" << c.height << " dim " << h.dim() << "\n";
  for (double e : ep.energies) std::cout << "  " << e << "\n";
}
