#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "lattice.hpp"
#include "params.hpp"

namespace khex {

// H = -U * (# occupied nearest-neighbor pairs inside the interior hexagon)
//     + Delta * (# particles anywhere), in exact grid units.
inline std::int64_t hamiltonian_grid(const HexLattice& lat, const Configuration& cfg,
                                     const Params& p) {
  std::int64_t pairs = 0;
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    if (!cfg.test(s)) continue;
    const auto& eb = lat.energy_neighbors(s);
    for (int k = 0; k < eb[3]; ++k)
      if (eb[k] > s && cfg.test(eb[k])) ++pairs;
  }
  return -p.u * pairs + p.d * cfg.n_total;
}

inline double hamiltonian(const HexLattice& lat, const Configuration& cfg, const Params& p) {
  return p.energy(hamiltonian_grid(lat, cfg, p));
}

inline double gibbs_weight(const HexLattice& lat, const Configuration& cfg, const Params& p) {
  return std::exp(-p.beta * hamiltonian(lat, cfg, p));
}

// Exact enumeration; refuses lattices beyond 2^20 states.
inline double partition_function(const HexLattice& lat, const Params& p) {
  if (lat.n_sites() > 20)
    throw std::invalid_argument("partition function enumeration is capped at 20 sites");
  double z = 0.0;
  std::uint64_t total = std::uint64_t(1) << lat.n_sites();
  for (std::uint64_t m = 0; m < total; ++m) {
    Configuration cfg;
    for (int s = 0; s < lat.n_sites(); ++s)
      if (m >> s & 1) cfg.set(static_cast<SiteId>(s));
    z += gibbs_weight(lat, cfg, p);
  }
  return z;
}

inline double gibbs_measure(const HexLattice& lat, const Configuration& cfg, const Params& p,
                            double z) {
  return gibbs_weight(lat, cfg, p) / z;
}

}  // namespace khex
