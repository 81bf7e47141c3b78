// Prints the valid single-clock diagrams for a clock of dimension n at order m.
// Usage: diagram_listing [n] [m]

#include <cstdlib>
#include <iostream>

#include "qdlab/qdlab.hpp"

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 5;
  const int m = argc > 2 ? std::atoi(argv[2]) : 4;
  const auto ds = qdlab::enumerate_valid_diagrams(n, m);
  for (const auto& d : ds)
    std::cout << qdlab::to_string(d) << "  weight " << qdlab::diagram_weight(d)
              << (qdlab::is_special(d, n) ? "  special" : "") << "\n";
  std::cout << ds.size() << " diagrams\n";
}
