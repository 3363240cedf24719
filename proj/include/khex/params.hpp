#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rational.hpp"

namespace khex {

// Energies are stored as integer multiples of a grid unit (default U/100) so
// that all level-set comparisons, argmax locations and tie-breaks are exact.
// beta enters only through sampling weights and stays floating point.
struct Params {
  std::int64_t u = 100;  // binding energy U, grid units
  std::int64_t d = 136;  // activation energy Delta, grid units
  double grid = 0.01;    // energy value of one grid unit
  double beta = 1.0;

  double U() const { return grid * static_cast<double>(u); }
  double Delta() const { return grid * static_cast<double>(d); }
  double rho() const { return std::exp(-beta * Delta()); }
  double energy(std::int64_t g) const { return grid * static_cast<double>(g); }
};

inline std::int64_t snap_to_grid(double value, double grid, const std::string& name) {
  double q = value / grid;
  double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
    throw std::invalid_argument(name + "=" + std::to_string(value) +
                                " is not representable on the energy grid " + std::to_string(grid));
  return static_cast<std::int64_t>(r);
}

inline Params make_params(double U, double Delta, double beta = 1.0, double grid = 0.0) {
  if (U <= 0) throw std::invalid_argument("U must be positive");
  if (beta < 0) throw std::invalid_argument("beta must be nonnegative");
  if (grid < 0) throw std::invalid_argument("grid must be positive");
  if (grid == 0.0) grid = U / 100.0;
  Params p;
  p.grid = grid;
  p.beta = beta;
  p.u = snap_to_grid(U, grid, "U");
  p.d = snap_to_grid(Delta, grid, "Delta");
  if (p.u <= 0) throw std::invalid_argument("U must be positive");
  return p;
}

// Plain-text key-value file: lines "key = value", '#' comments.
// Keys: U, Delta, beta, grid.
inline Params params_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file: " + path);
  double U = 1.0, Delta = 1.36, beta = 1.0, grid = 0.0;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    for (auto& c : line)
      if (c == '=' || c == ':') c = ' ';
    std::istringstream ls(line);
    std::string key;
    double val;
    if (!(ls >> key >> val)) continue;
    if (key == "U") U = val;
    else if (key == "Delta") Delta = val;
    else if (key == "beta") beta = val;
    else if (key == "grid") grid = val;
    else throw std::runtime_error("unknown key in params file: " + key);
  }
  return make_params(U, Delta, beta, grid);
}

// ratio = U / (2(3U-2Delta)) - 1/2, exact; r* is its floor, delta its
// fractional part.
inline Rational critical_ratio(const Params& p) {
  std::int64_t s = 3 * p.u - 2 * p.d;
  if (s <= 0) throw std::invalid_argument("requires Delta < 3U/2");
  return Rational(p.u - s, 2 * s);
}

struct CriticalQuantities {
  std::int64_t r_star = 0;
  Rational delta;       // fractional part, in (0,1), never 1/2
  bool high_branch = false;  // delta > 1/2
  std::int64_t A1 = 0, A2 = 0;       // critical areas of the two branches
  std::int64_t A_star = 0;           // branch-selected critical area
  std::int64_t A3_star = 0;          // supercritical reference area
  std::int64_t gamma1_g = 0, gamma2_g = 0;  // barriers, grid units
  std::int64_t gamma_g = 0;                 // branch-selected barrier
  std::int64_t v_star_g = 0;                // Delta + U
  Rational r_bar;                           // U / (2(3U-2Delta))
};

inline CriticalQuantities critical_quantities(const Params& p) {
  if (!(p.d > p.u)) throw std::invalid_argument("requires Delta > U");
  Rational ratio = critical_ratio(p);
  std::int64_t r = ratio.floor();
  Rational delta = ratio - Rational(r);
  if (delta == Rational(0) || delta == Rational(1, 2) || delta == Rational(1))
    throw std::invalid_argument("degenerate parameters: fractional part delta = " + delta.str());
  CriticalQuantities q;
  q.r_star = r;
  q.delta = delta;
  q.high_branch = Rational(1, 2) < delta;
  q.A1 = 6 * r * r + 10 * r + 6;
  q.A2 = 6 * (r + 1) * (r + 1) + 2 * (r + 1) + 2;
  q.A3_star = 6 * (r + 2) * (r + 2) + 3;
  q.gamma1_g = -(3 * r + 2) * (3 * r + 2) * p.u + q.A1 * p.d;
  q.gamma2_g = -9 * (r + 1) * (r + 1) * p.u + q.A2 * p.d;
  q.A_star = q.high_branch ? q.A2 : q.A1;
  q.gamma_g = q.high_branch ? q.gamma2_g : q.gamma1_g;
  q.v_star_g = p.d + p.u;
  q.r_bar = Rational(p.u, 2 * (3 * p.u - 2 * p.d));
  return q;
}

// Restricted-ensemble exponent at radius r; equals H(E(r)) on the grid.
inline std::pair<std::int64_t, Rational> static_heuristic(std::int64_t r, const Params& p) {
  if (r < 0) throw std::invalid_argument("r must be nonnegative");
  std::int64_t exponent = 6 * r * r * p.d - 3 * (3 * r * r - r) * p.u;
  return {exponent, Rational(p.u, 2 * (3 * p.u - 2 * p.d))};
}

// Hard-fails outside the metastable window or on degeneracy; returns
// human-readable warnings for valid but desk-scale parameter choices.
inline std::vector<std::string> validate_regime(const Params& p) {
  if (!(p.d > p.u)) throw std::invalid_argument("regime violation: requires U < Delta");
  if (!(2 * p.d < 3 * p.u)) throw std::invalid_argument("regime violation: requires Delta < 3U/2");
  critical_quantities(p);  // throws on degenerate delta
  std::vector<std::string> warnings;
  if (100 * (3 * p.u - 2 * p.d) > p.u)
    warnings.push_back("3U-2Delta exceeds U/100: far from the asymptotic regime (small critical radius)");
  return warnings;
}

}  // namespace khex
