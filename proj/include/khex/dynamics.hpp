#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "energy.hpp"
#include "lattice.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace khex {

enum class MoveEffect : std::uint8_t { exchange, annihilate, create };

struct Move {
  OrientedBond bond;
  MoveEffect effect;
};

inline MoveEffect effect_of(BondKind k) {
  switch (k) {
    case BondKind::interior: return MoveEffect::exchange;
    case BondKind::out: return MoveEffect::annihilate;
    default: return MoveEffect::create;
  }
}

// T_b applied to cfg; bonds whose move does not apply leave cfg unchanged.
inline Configuration apply_move(const HexLattice& lat, const Configuration& cfg, const Move& m) {
  Configuration out = cfg;
  switch (m.effect) {
    case MoveEffect::exchange: {
      bool ox = cfg.test(m.bond.from), oy = cfg.test(m.bond.to);
      if (ox != oy) {
        out.flip(m.bond.from);
        out.flip(m.bond.to);
      }
      break;
    }
    case MoveEffect::annihilate:
      if (cfg.test(m.bond.from)) out.clear(m.bond.from);
      break;
    case MoveEffect::create:
      if (!cfg.test(m.bond.to)) out.set(m.bond.to);
      break;
  }
  (void)lat;
  return out;
}

// Exact grid energy difference of T_b; zero when the move is a no-op.
inline std::int64_t delta_energy_grid(const HexLattice& lat, const Configuration& cfg,
                                      const Move& m, const Params& p) {
  switch (m.effect) {
    case MoveEffect::exchange: {
      bool ox = cfg.test(m.bond.from), oy = cfg.test(m.bond.to);
      if (ox == oy) return 0;
      SiteId src = ox ? m.bond.from : m.bond.to;
      SiteId dst = ox ? m.bond.to : m.bond.from;
      std::int64_t kx = 0, ky = 0;
      const auto& ex = lat.energy_neighbors(src);
      for (int i = 0; i < ex[3]; ++i)
        if (ex[i] != dst && cfg.test(ex[i])) ++kx;
      const auto& ey = lat.energy_neighbors(dst);
      for (int i = 0; i < ey[3]; ++i)
        if (ey[i] != src && cfg.test(ey[i])) ++ky;
      return p.u * (kx - ky);
    }
    case MoveEffect::annihilate:
      return cfg.test(m.bond.from) ? -p.d : 0;  // boundary sites carry no bonds
    case MoveEffect::create:
      return cfg.test(m.bond.to) ? 0 : p.d;
  }
  return 0;
}

struct MoveEval {
  Move move;
  std::int64_t dh_grid;
  bool changes_state;
};

inline std::vector<MoveEval> enumerate_moves(const HexLattice& lat, const Configuration& cfg,
                                             const Params& p) {
  std::vector<MoveEval> out;
  out.reserve(lat.oriented_bonds().size());
  for (const OrientedBond& b : lat.oriented_bonds()) {
    Move m{b, effect_of(b.kind)};
    Configuration next = apply_move(lat, cfg, m);
    out.push_back({m, delta_energy_grid(lat, cfg, m, p), !(next == cfg)});
  }
  return out;
}

// Full Metropolis kernel entry P(from, to), multiplicities summed over all
// bonds realizing the same image. Exact for enumerable lattices; not a hot
// path.
inline double transition_prob(const HexLattice& lat, const Configuration& from,
                              const Configuration& to, const Params& p) {
  double nb = static_cast<double>(lat.oriented_bonds().size());
  double acc = 0.0;
  for (const OrientedBond& b : lat.oriented_bonds()) {
    Move m{b, effect_of(b.kind)};
    Configuration img = apply_move(lat, from, m);
    if (!(img == to)) continue;
    if (img == from) {
      acc += 1.0;  // no-op draw: contributes to the diagonal in full
    } else {
      std::int64_t dh = delta_energy_grid(lat, from, m, p);
      acc += dh > 0 ? std::exp(-p.beta * p.energy(dh)) : 1.0;
    }
  }
  double total = acc / nb;
  if (from == to) {
    // add the rejection mass of every state-changing move
    for (const OrientedBond& b : lat.oriented_bonds()) {
      Move m{b, effect_of(b.kind)};
      Configuration img = apply_move(lat, from, m);
      if (img == from) continue;
      std::int64_t dh = delta_energy_grid(lat, from, m, p);
      double a = dh > 0 ? std::exp(-p.beta * p.energy(dh)) : 1.0;
      total += (1.0 - a) / nb;
    }
  }
  return total;
}

inline std::uint64_t replica_seed(std::uint64_t base, std::uint64_t idx) {
  SplitMix64 sm{base + 0x9E3779B97F4A7C15ull * (idx + 1)};
  return sm.next();
}

// Mutable simulation state with O(1) Metropolis steps: byte occupancies,
// incrementally tracked grid energy and particle counts, and precomputed
// acceptance probabilities for the four positive energy jumps u, 2u, 3u, d.
class SimState {
 public:
  SimState(const HexLattice& lat, const Params& p, const Configuration& start,
           std::uint64_t seed)
      : lat_(&lat), p_(p), occ_(lat.n_sites(), 0), rng_(seed), seed_(seed) {
    for (SiteId s = 0; s < lat.n_sites(); ++s) {
      if (!start.test(s)) continue;
      occ_[s] = 1;
      ++n_total_;
      if (lat.is_interior(s)) ++n_interior_;
    }
    h_grid_ = hamiltonian_grid(lat, start, p);
    for (int k = 1; k <= 3; ++k) acc_u_[k] = std::exp(-p.beta * p.energy(k * p.u));
    acc_d_ = std::exp(-p.beta * p.energy(p.d));
    nb_ = static_cast<std::uint32_t>(lat.oriented_bonds().size());
  }

  const HexLattice& lattice() const { return *lat_; }
  const Params& params() const { return p_; }
  std::int64_t steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t h_grid() const { return h_grid_; }
  int n_total() const { return n_total_; }
  int n_interior() const { return n_interior_; }
  bool occupied(SiteId s) const { return occ_[s] != 0; }
  bool is_empty_config() const { return n_total_ == 0; }
  bool is_full_config() const { return n_interior_ == lat_->n_interior(); }

  Configuration snapshot() const {
    Configuration cfg;
    for (SiteId s = 0; s < lat_->n_sites(); ++s)
      if (occ_[s]) cfg.set(s);
    return cfg;
  }

  // One Metropolis step; returns true when the configuration changed.
  bool step() {
    ++steps_;
    const OrientedBond& b = lat_->oriented_bonds()[rng_.below(nb_)];
    switch (b.kind) {
      case BondKind::interior: {
        if (occ_[b.from] == occ_[b.to]) return false;
        SiteId src = occ_[b.from] ? b.from : b.to;
        SiteId dst = occ_[b.from] ? b.to : b.from;
        int kx = 0, ky = 0;
        const auto& ex = lat_->energy_neighbors(src);
        for (int i = 0; i < ex[3]; ++i)
          if (ex[i] != dst && occ_[ex[i]]) ++kx;
        const auto& ey = lat_->energy_neighbors(dst);
        for (int i = 0; i < ey[3]; ++i)
          if (ey[i] != src && occ_[ey[i]]) ++ky;
        int diff = kx - ky;
        if (diff > 0 && rng_.uniform() >= acc_u_[diff]) return false;
        occ_[src] = 0;
        occ_[dst] = 1;
        h_grid_ += p_.u * diff;
        n_interior_ += (lat_->is_interior(dst) ? 1 : 0) - (lat_->is_interior(src) ? 1 : 0);
        return true;
      }
      case BondKind::out: {
        if (!occ_[b.from]) return false;
        occ_[b.from] = 0;
        h_grid_ -= p_.d;
        --n_total_;
        return true;
      }
      case BondKind::in: {
        if (occ_[b.to]) return false;
        if (rng_.uniform() >= acc_d_) return false;
        occ_[b.to] = 1;
        h_grid_ += p_.d;
        ++n_total_;
        return true;
      }
    }
    return false;
  }

 private:
  const HexLattice* lat_;
  Params p_;
  std::vector<std::uint8_t> occ_;
  Xoshiro256 rng_;
  std::uint64_t seed_;
  std::uint32_t nb_ = 0;
  std::int64_t steps_ = 0;
  std::int64_t h_grid_ = 0;
  int n_total_ = 0;
  int n_interior_ = 0;
  double acc_u_[4] = {1, 1, 1, 1};
  double acc_d_ = 1;
};

enum class Target : std::uint8_t { empty, full, both };
enum class Reached : std::uint8_t { empty, full, timeout };

inline const char* reached_name(Reached r) {
  switch (r) {
    case Reached::empty: return "empty";
    case Reached::full: return "full";
    default: return "timeout";
  }
}

// Monitor for level crossings inside the n-particle manifold. Per sojourn in
// V_{n_level} (a maximal stretch of states with exactly n_level particles) the
// configuration at the first touch of the exact grid level, if any, is
// recorded. The log keeps the earliest and the latest record of the run: the
// latest one before absorption is the level crossing of the excursion that
// completes the transition, earlier ones belong to excursions that fell back.
struct GateMonitor {
  int n_level = 0;
  std::int64_t h_level_g = 0;
};

struct CrossingLog {
  std::int64_t first_step = 0;
  std::int64_t last_step = 0;
  Configuration first_config;
  Configuration last_config;
  std::int64_t entrances = 0;
};

struct HittingResult {
  std::int64_t steps = 0;
  Reached reached = Reached::timeout;
  std::optional<CrossingLog> crossing;
};

inline HittingResult run_until(SimState& sim, Target target, std::int64_t max_steps,
                               const GateMonitor* monitor = nullptr) {
  auto in_target = [&]() {
    if (target != Target::full && sim.is_empty_config()) return std::optional<Reached>(Reached::empty);
    if (target != Target::empty && sim.is_full_config()) return std::optional<Reached>(Reached::full);
    return std::optional<Reached>();
  };
  HittingResult res;
  auto record = [&]() {
    if (!res.crossing) {
      res.crossing.emplace();
      res.crossing->first_step = sim.steps();
      res.crossing->first_config = sim.snapshot();
    }
    res.crossing->last_step = sim.steps();
    res.crossing->last_config = sim.snapshot();
    ++res.crossing->entrances;
  };
  bool in_v = monitor && sim.n_total() == monitor->n_level;
  bool sojourn_done = false;
  if (in_v && sim.h_grid() == monitor->h_level_g) {
    record();
    sojourn_done = true;
  }
  if (auto hit = in_target()) {
    res.steps = 0;
    res.reached = *hit;
    return res;
  }
  while (sim.steps() < max_steps) {
    if (!sim.step()) continue;
    if (monitor) {
      bool now_v = sim.n_total() == monitor->n_level;
      if (now_v && !in_v) sojourn_done = false;
      if (now_v && !sojourn_done && sim.h_grid() == monitor->h_level_g) {
        record();
        sojourn_done = true;
      }
      in_v = now_v;
    }
    if (auto hit = in_target()) {
      res.steps = sim.steps();
      res.reached = *hit;
      return res;
    }
  }
  res.steps = sim.steps();
  res.reached = Reached::timeout;
  return res;
}

inline HittingResult run_until(const HexLattice& lat, const Params& p, const Configuration& start,
                               Target target, std::int64_t max_steps, std::uint64_t seed,
                               const GateMonitor* monitor = nullptr) {
  SimState sim(lat, p, start, seed);
  return run_until(sim, target, max_steps, monitor);
}

}  // namespace khex
