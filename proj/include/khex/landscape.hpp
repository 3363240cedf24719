#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "config.hpp"
#include "dynamics.hpp"
#include "energy.hpp"
#include "lattice.hpp"
#include "params.hpp"
#include "shapes.hpp"

namespace khex {

// ---- paths ----

struct PathRecord {
  std::vector<Configuration> configurations;
  std::vector<std::int64_t> energies_g;
  std::int64_t max_energy_g = std::numeric_limits<std::int64_t>::min();
  std::vector<int> argmax_indices;

  void push(const Configuration& cfg, std::int64_t h_g) {
    configurations.push_back(cfg);
    energies_g.push_back(h_g);
    if (h_g > max_energy_g) {
      max_energy_g = h_g;
      argmax_indices.clear();
    }
    if (h_g == max_energy_g) argmax_indices.push_back(static_cast<int>(energies_g.size()) - 1);
  }
  int length() const { return static_cast<int>(configurations.size()); }
};

// Every consecutive pair must be one Kawasaki move with positive probability.
inline bool validate_path(const HexLattice& lat, const PathRecord& path, const Params& p) {
  for (int i = 0; i < path.length(); ++i) {
    if (hamiltonian_grid(lat, path.configurations[i], p) != path.energies_g[i]) return false;
    if (i > 0 && !(transition_prob(lat, path.configurations[i - 1], path.configurations[i], p) > 0.0))
      return false;
  }
  return true;
}

// ---- successor enumeration (state-changing moves only) ----

template <class F>
inline void for_each_successor(const HexLattice& lat, const Configuration& cfg, const Params& p,
                               F&& visit) {
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    if (cfg.test(s)) {
      if (!lat.is_interior(s)) {
        Configuration next = cfg;
        next.clear(s);
        visit(next, -p.d);
      }
      const auto& nb = lat.raw_neighbors(s);
      for (int i = 0; i < 3; ++i) {
        SiteId y = nb[i];
        if (y == kExterior || cfg.test(y)) continue;
        std::int64_t kx = 0, ky = 0;
        const auto& ex = lat.energy_neighbors(s);
        for (int j = 0; j < ex[3]; ++j)
          if (ex[j] != y && cfg.test(ex[j])) ++kx;
        const auto& ey = lat.energy_neighbors(y);
        for (int j = 0; j < ey[3]; ++j)
          if (ey[j] != s && cfg.test(ey[j])) ++ky;
        Configuration next = cfg;
        next.clear(s);
        next.set(y);
        visit(next, p.u * (kx - ky));
      }
    } else if (!lat.is_interior(s)) {
      Configuration next = cfg;
      next.set(s);
      visit(next, p.d);
    }
  }
}

// ---- symmetry quotient ----

inline Configuration canonical_config(const HexLattice& lat, const Configuration& cfg) {
  Configuration best = cfg;
  for (const auto& perm : lat.symmetries()) {
    Configuration img;
    for (int wi = 0; wi < 4; ++wi) {
      std::uint64_t w = cfg.w[wi];
      while (w) {
        img.set(perm[(wi << 6) + std::countr_zero(w)]);
        w &= w - 1;
      }
    }
    if (img < best) best = img;
  }
  return best;
}

// ---- bottleneck (minimax) search ----

struct SearchOptions {
  std::int64_t cap = 10'000'000;  // stored states
  bool quotient = false;          // identify configurations modulo the 12 symmetries
  bool stop_on_cap = false;       // return at the first eviction instead of draining the frontier
};

// phi_g is exact when complete(). Otherwise: with a nonempty witness it is an
// achieved path maximum (Phi <= phi_g); with an empty witness it is the
// largest soundly explored bottleneck (Phi >= phi_g), namely the level at
// which the first cutoff block or cap drop occurred.
struct LandscapeResult {
  std::int64_t phi_g = 0;
  bool cutoff_hit = false;   // some expansions were blocked by the cutoff
  bool cap_hit = false;      // storage cap reached, successors were dropped
  bool unreachable = false;  // frontier exhausted without events or goal
  std::int64_t explored = 0;
  PathRecord witness;  // populated only when the goal was reached
  bool complete() const { return !cutoff_hit && !cap_hit && !unreachable; }
};

namespace detail {

struct HeapEntry {
  std::int64_t bneck_g;
  std::int64_t h_g;
  int n;
  std::array<std::uint64_t, 4> words;
  std::int32_t idx;
};

struct HeapCmp {
  bool operator()(const HeapEntry& x, const HeapEntry& y) const {
    if (x.bneck_g != y.bneck_g) return x.bneck_g > y.bneck_g;
    if (x.h_g != y.h_g) return x.h_g > y.h_g;
    if (x.n != y.n) return x.n > y.n;
    return x.words > y.words;
  }
};

struct SearchNode {
  Configuration cfg;
  std::int64_t h_g;
  std::int64_t best_g;
  std::int32_t parent;
  bool done;
};

}  // namespace detail

// Widest-path best-first search from a; stops when `goal` pops. Expands only
// states strictly below the cutoff. Returns (goal index, nodes) through the
// out-parameters so the public wrappers can reconstruct witnesses.
template <class GoalPred>
inline LandscapeResult bottleneck_search(const HexLattice& lat, const Configuration& a,
                                         GoalPred&& goal, const Params& p, std::int64_t cutoff_g,
                                         const SearchOptions& opt,
                                         std::vector<detail::SearchNode>* nodes_out,
                                         std::int32_t* goal_idx) {
  using namespace detail;
  std::vector<SearchNode>& nodes = *nodes_out;
  nodes.clear();
  *goal_idx = -1;

  std::unordered_map<Configuration, std::int32_t, ConfigHash> index;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapCmp> heap;
  LandscapeResult res;

  auto intern = [&](const Configuration& cfg, std::int64_t h_g) -> std::int32_t {
    auto it = index.find(cfg);
    if (it != index.end()) return it->second;
    if (static_cast<std::int64_t>(nodes.size()) >= opt.cap) return -1;
    std::int32_t id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({cfg, h_g, std::numeric_limits<std::int64_t>::max(), -1, false});
    index.emplace(cfg, id);
    return id;
  };

  Configuration start = opt.quotient ? canonical_config(lat, a) : a;
  std::int64_t h_start = hamiltonian_grid(lat, start, p);
  std::int32_t sid = intern(start, h_start);
  nodes[sid].best_g = h_start;
  heap.push({h_start, h_start, start.n_total, start.w, sid});

  std::int64_t last_popped = h_start;
  std::int64_t event_bound = std::numeric_limits<std::int64_t>::max();
  bool cap_tripped = false;
  while (!heap.empty()) {
    HeapEntry top = heap.top();
    heap.pop();
    SearchNode& node = nodes[top.idx];
    if (node.done || top.bneck_g != node.best_g) continue;
    node.done = true;
    ++res.explored;
    last_popped = top.bneck_g;
    if (goal(node.cfg, node.h_g)) {
      *goal_idx = top.idx;
      res.phi_g = top.bneck_g;
      res.cap_hit = cap_tripped;
      return res;
    }
    if (node.h_g >= cutoff_g) {
      res.cutoff_hit = true;
      event_bound = std::min(event_bound, top.bneck_g);
      continue;
    }
    Configuration here = node.cfg;  // copy: expansion may reallocate nodes
    std::int64_t here_h = node.h_g;
    std::int64_t here_best = node.best_g;
    std::int32_t here_idx = top.idx;
    for_each_successor(lat, here, p, [&](const Configuration& raw_next, std::int64_t dh) {
      if (cap_tripped && opt.stop_on_cap) return;
      Configuration next = opt.quotient ? canonical_config(lat, raw_next) : raw_next;
      std::int64_t h_next = here_h + dh;
      std::int32_t id = intern(next, h_next);
      if (id < 0) {
        if (!cap_tripped) event_bound = std::min(event_bound, here_best);
        cap_tripped = true;
        return;
      }
      std::int64_t cand = std::max(here_best, h_next);
      if (cand < nodes[id].best_g && !nodes[id].done) {
        nodes[id].best_g = cand;
        nodes[id].parent = here_idx;
        heap.push({cand, h_next, next.n_total, next.w, id});
      }
    });
    if (cap_tripped && opt.stop_on_cap) break;
  }
  res.cap_hit = cap_tripped;
  if (event_bound != std::numeric_limits<std::int64_t>::max()) {
    res.phi_g = event_bound;
  } else {
    res.phi_g = last_popped;
    res.unreachable = true;
  }
  return res;
}

inline PathRecord extract_witness(const std::vector<detail::SearchNode>& nodes,
                                  std::int32_t goal_idx) {
  PathRecord path;
  std::vector<std::int32_t> chain;
  for (std::int32_t i = goal_idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    path.push(nodes[*it].cfg, nodes[*it].h_g);
  return path;
}

inline LandscapeResult communication_height(const HexLattice& lat, const Configuration& a,
                                            const Configuration& b, const Params& p,
                                            std::int64_t cutoff_g,
                                            const SearchOptions& opt = {}) {
  Configuration target = opt.quotient ? canonical_config(lat, b) : b;
  std::vector<detail::SearchNode> nodes;
  std::int32_t goal_idx = -1;
  LandscapeResult res = bottleneck_search(
      lat, a, [&](const Configuration& cfg, std::int64_t) { return cfg == target; }, p, cutoff_g,
      opt, &nodes, &goal_idx);
  if (goal_idx >= 0) res.witness = extract_witness(nodes, goal_idx);
  return res;
}

struct StabilityResult {
  std::int64_t v_g = 0;     // barrier in grid units (when finite and complete)
  bool infinite = false;    // no reachable state below H(sigma): global minimum
  bool complete = true;     // false: v_g is only a lower bound (cutoff or cap)
  std::int64_t explored = 0;
  PathRecord witness;
};

inline StabilityResult stability_level(const HexLattice& lat, const Configuration& sigma,
                                       const Params& p, std::int64_t cutoff_g,
                                       const SearchOptions& opt = {}) {
  std::int64_t h0 = hamiltonian_grid(lat, sigma, p);
  std::vector<detail::SearchNode> nodes;
  std::int32_t goal_idx = -1;
  LandscapeResult inner = bottleneck_search(
      lat, sigma, [&](const Configuration&, std::int64_t h_g) { return h_g < h0; }, p, cutoff_g,
      opt, &nodes, &goal_idx);
  StabilityResult res;
  res.explored = inner.explored;
  if (goal_idx >= 0) {
    res.v_g = inner.phi_g - h0;
    res.witness = extract_witness(nodes, goal_idx);
    return res;
  }
  if (inner.cutoff_hit || inner.cap_hit) {
    res.v_g = inner.phi_g - h0;
    res.complete = false;
  } else {
    res.infinite = true;
  }
  return res;
}

struct CycleResult {
  std::unordered_set<Configuration, ConfigHash> members;
  bool complete = true;
  bool contains(const Configuration& cfg) const { return members.count(cfg) > 0; }
};

// Maximal connected component of {H < cutoff} containing sigma (which is
// included regardless of its own energy).
inline CycleResult cycle(const HexLattice& lat, const Configuration& sigma, const Params& p,
                         std::int64_t cutoff_g, std::int64_t cap = 10'000'000) {
  CycleResult res;
  res.members.insert(sigma);
  std::vector<Configuration> stack{sigma};
  while (!stack.empty()) {
    Configuration cur = stack.back();
    stack.pop_back();
    std::int64_t h_cur = hamiltonian_grid(lat, cur, p);
    if (h_cur >= cutoff_g) continue;  // sigma itself: included but not expanded
    for_each_successor(lat, cur, p, [&](const Configuration& next, std::int64_t dh) {
      if (h_cur + dh >= cutoff_g || res.members.count(next)) return;
      if (static_cast<std::int64_t>(res.members.size()) >= cap) {
        res.complete = false;
        return;
      }
      res.members.insert(next);
      stack.push_back(next);
    });
  }
  return res;
}

// ---- reference path ----

namespace detail {

// Shortest empty-site chain from an empty boundary site to `target`,
// returned as site sequence starting at the boundary. Deterministic.
inline std::vector<SiteId> empty_chain_from_boundary(const HexLattice& lat,
                                                     const std::vector<std::uint8_t>& occ,
                                                     SiteId target) {
  std::vector<SiteId> parent(lat.n_sites(), -2);
  std::vector<SiteId> queue;
  for (SiteId s = 0; s < lat.n_sites(); ++s)
    if (!lat.is_interior(s) && !occ[s]) {
      parent[s] = -1;
      queue.push_back(s);
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    SiteId cur = queue[head];
    if (cur == target) {
      std::vector<SiteId> path;
      for (SiteId s = cur; s != -1; s = parent[s]) path.push_back(s);
      std::reverse(path.begin(), path.end());
      return path;
    }
    const auto& nb = lat.raw_neighbors(cur);
    for (int i = 0; i < 3; ++i) {
      SiteId y = nb[i];
      if (y == kExterior || occ[y] || parent[y] != -2) continue;
      parent[y] = cur;
      queue.push_back(y);
    }
  }
  return {};
}

}  // namespace detail

// The canonical path from the empty to the full configuration: for each cell
// of the filling order, create a particle on the boundary ring and walk it
// through empty sites to its slot.
inline PathRecord reference_path(const HexLattice& lat, const Params& p) {
  PathRecord path;
  Configuration cfg;
  std::int64_t h = 0;
  path.push(cfg, 0);
  std::vector<std::uint8_t> occ(lat.n_sites(), 0);
  for (SiteId target : fill_order(lat)) {
    std::vector<SiteId> chain = detail::empty_chain_from_boundary(lat, occ, target);
    if (chain.empty()) throw std::logic_error("reference path: no empty chain to target");
    Configuration step = cfg;
    step.set(chain[0]);
    occ[chain[0]] = 1;
    h += p.d;
    path.push(step, h);
    for (std::size_t i = 1; i < chain.size(); ++i) {
      std::int64_t kx = 0, ky = 0;
      const auto& ex = lat.energy_neighbors(chain[i - 1]);
      for (int j = 0; j < ex[3]; ++j)
        if (ex[j] != chain[i] && step.test(ex[j])) ++kx;
      const auto& ey = lat.energy_neighbors(chain[i]);
      for (int j = 0; j < ey[3]; ++j)
        if (ey[j] != chain[i - 1] && step.test(ey[j])) ++ky;
      step.clear(chain[i - 1]);
      step.set(chain[i]);
      occ[chain[i - 1]] = 0;
      occ[chain[i]] = 1;
      h += p.u * (kx - ky);
      path.push(step, h);
    }
    cfg = step;
  }
  return path;
}

// ---- segment scan along the reference path ----

struct SegmentMax {
  std::int64_t n;       // completed insertions (growth) or removals (removal)
  std::int64_t peak_g;  // energy of the in-flight maximizer
};

// Growth: the omega* sub-path from E_{B_i}(r) to E_{B_{i+1}}(r); maximum over
// states "n cells attached, next particle free". Removal: the reverse segment
// from E_{B_{i+1}}(r); maximum over "n cells annihilated, one more detached".
inline SegmentMax segment_max(std::int64_t r, std::int64_t i, const Params& p,
                              bool removal = false) {
  if (r < 1 || i < 0 || i > 5) throw std::invalid_argument("segment needs r >= 1, 0 <= i <= 5");
  auto lens = bar_lengths(r);
  std::int64_t m0 = 6 * r * r;
  for (std::int64_t j = 0; j < i; ++j) m0 += lens[j];
  std::int64_t len = lens[i];
  SegmentMax best{0, std::numeric_limits<std::int64_t>::min()};
  if (!removal) {
    for (std::int64_t n = 0; n < len; ++n) {
      std::int64_t e = closed_form_energy_grid(m0 + n, p) + p.d;
      if (e > best.peak_g) best = {n, e};
    }
  } else {
    for (std::int64_t j = 1; j <= len; ++j) {
      std::int64_t e = closed_form_energy_grid(m0 + len - j, p) + p.d;
      if (e > best.peak_g) best = {j - 1, e};
    }
  }
  return best;
}

// ---- gate sets ----

namespace detail {

using ShapeKey = std::vector<std::int32_t>;

inline std::int32_t cell_code(const FaceCoord& f) {
  return ((f.a + 512) << 11) | ((f.b + 512) << 1) | (f.up ? 1 : 0);
}

inline ShapeKey shape_key(std::vector<FaceCoord> cells) {
  std::sort(cells.begin(), cells.end());
  const FaceCoord& base = cells.front();
  ShapeKey key;
  key.reserve(cells.size());
  for (const FaceCoord& f : cells)
    key.push_back(cell_code({f.a - base.a, f.b - base.b, f.up}));
  return key;
}

struct ShapeKeyHash {
  std::size_t operator()(const ShapeKey& k) const {
    std::size_t h = 1469598103934665603ull;
    for (std::int32_t v : k) {
      h ^= static_cast<std::size_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

inline std::int64_t plane_bonds(const std::set<FaceCoord>& cells) {
  std::int64_t b = 0;
  for (const FaceCoord& f : cells)
    for (const FaceCoord& n : face_neighbors(f))
      if (cells.count(n)) ++b;
  return b / 2;
}

inline bool no_isolated_cell(const std::set<FaceCoord>& cells) {
  for (const FaceCoord& f : cells) {
    bool bonded = false;
    for (const FaceCoord& n : face_neighbors(f))
      if (cells.count(n)) bonded = true;
    if (!bonded) return false;
  }
  return true;
}

// Some translate places every cell strictly inside the interior hexagon.
inline bool fits_interior(const std::set<FaceCoord>& cells, int L) {
  int alo = std::numeric_limits<int>::min(), ahi = std::numeric_limits<int>::max();
  int blo = alo, bhi = ahi, clo = alo, chi = ahi;
  for (const FaceCoord& f : cells) {
    std::array<Vertex, 3> vs = face_vertices_ccw(f);
    for (const Vertex& v : vs) {
      alo = std::max(alo, -L - v.first);
      ahi = std::min(ahi, L - v.first);
      blo = std::max(blo, -L - v.second);
      bhi = std::min(bhi, L - v.second);
      clo = std::max(clo, -L - (v.first + v.second));
      chi = std::min(chi, L - (v.first + v.second));
    }
  }
  if (alo > ahi || blo > bhi || clo > chi) return false;
  return alo + blo <= chi && clo <= ahi + bhi;
}

}  // namespace detail

struct GateSet {
  std::unordered_set<detail::ShapeKey, detail::ShapeKeyHash> members;  // K(A*-1), shapes
  std::int64_t area = 0;          // A* - 1
  std::int64_t h_seed_g = 0;      // Gamma - Delta
  std::int64_t seed_bonds = 0;
  std::int64_t corridor_explored = 0;
  std::size_t size() const { return members.size(); }
};

// Breadth-first closure of the protocritical shapes under single-particle
// hops with no free particles, fixed particle number, and every intermediate
// within U of the seed energy; K keeps the states at exactly the seed energy.
inline GateSet gate_set(const Params& p, const HexLattice& lat, std::int64_t cap = 2'000'000) {
  CriticalQuantities cq = critical_quantities(p);
  GateSet gs;
  gs.area = cq.A_star - 1;
  gs.h_seed_g = cq.gamma_g - p.d;
  gs.seed_bonds = (p.d * gs.area - gs.h_seed_g) / p.u;
  std::int64_t bond_floor = gs.seed_bonds - 1;

  std::vector<std::set<FaceCoord>> frontier;
  std::unordered_set<detail::ShapeKey, detail::ShapeKeyHash> seen;
  auto push_state = [&](const std::set<FaceCoord>& cells) {
    detail::ShapeKey key = detail::shape_key({cells.begin(), cells.end()});
    if (!seen.insert(key).second) return;
    if (static_cast<std::int64_t>(seen.size()) > cap) {
      std::ostringstream os;
      os << "gate closure cap exceeded after " << seen.size() - 1 << " corridor states, "
         << gs.members.size() << " gate members found";
      throw std::runtime_error(os.str());
    }
    frontier.push_back(cells);
    if (detail::plane_bonds(cells) == gs.seed_bonds) gs.members.insert(std::move(key));
  };

  for (ShapeKind kind : {ShapeKind::s_tilde, ShapeKind::d_tilde}) {
    std::vector<FaceCoord> base = shape_cells({kind, gs.area, 0, 0, 0, 0});
    for (int g = 0; g < 12; ++g) {
      std::set<FaceCoord> img;
      for (const FaceCoord& c : base) img.insert(apply_symmetry(c, g));
      if (detail::plane_bonds(img) != gs.seed_bonds)
        throw std::logic_error("protocritical seed has unexpected bond count");
      push_state(img);
    }
  }

  for (std::size_t head = 0; head < frontier.size(); ++head) {
    std::set<FaceCoord> cur = frontier[head];
    std::vector<FaceCoord> cells(cur.begin(), cur.end());
    for (const FaceCoord& x : cells) {
      for (const FaceCoord& y : face_neighbors(x)) {
        if (cur.count(y)) continue;
        std::set<FaceCoord> next = cur;
        next.erase(x);
        next.insert(y);
        if (!detail::no_isolated_cell(next)) continue;
        if (detail::plane_bonds(next) < bond_floor) continue;
        if (!detail::fits_interior(next, lat.L())) continue;
        push_state(next);
      }
    }
  }
  gs.corridor_explored = static_cast<std::int64_t>(seen.size());
  return gs;
}

// Membership in C(A*): one free particle over a gate shape at energy Gamma.
inline bool is_gate_crossing(const HexLattice& lat, const GateSet& gs, const Configuration& cfg,
                             const Params& p) {
  if (cfg.n_total != gs.area + 1) return false;
  if (hamiltonian_grid(lat, cfg, p) != gs.h_seed_g + p.d) return false;
  std::vector<SiteId> free = free_particles(lat, cfg);
  if (free.size() != 1) return false;
  std::vector<Cluster> cls = clusters(lat, cfg);
  if (cls.size() != 1) return false;
  if (cls[0].area != gs.area || cls[0].bonds != gs.seed_bonds) return false;
  std::vector<FaceCoord> cells;
  for (SiteId s : cls[0].sites) cells.push_back(lat.face(s));
  return gs.members.count(detail::shape_key(std::move(cells))) > 0;
}

}  // namespace khex
