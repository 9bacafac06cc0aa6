#include "posehar/som.hpp"

namespace posehar {

int SomConfig::units() const {
  int n = 1;
  for (int c = 0; c < m; ++c) n *= q;
  return n;
}

void SomConfig::validate() const {
  if (q < 1) throw Error(Errc::InvalidConfig, "SOM q must be >= 1");
  if (m < 1) throw Error(Errc::InvalidConfig, "SOM lattice dimension must be >= 1");
  if (epochs < 1) throw Error(Errc::InvalidConfig, "SOM epochs must be >= 1");
  if (!(lr0 > 0)) throw Error(Errc::InvalidConfig, "SOM lr0 must be > 0");
  if (units() > (1 << 16)) throw Error(Errc::InvalidConfig, "SOM lattice too large");
}

std::vector<int> lattice_coords(int index, int q, int m) {
  std::vector<int> g(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) {
    g[static_cast<std::size_t>(c)] = index % q;
    index /= q;
  }
  return g;
}

}  // namespace posehar
