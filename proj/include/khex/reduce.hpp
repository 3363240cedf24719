#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "landscape.hpp"

namespace khex {

namespace detail {

inline int occ_degree(const HexLattice& lat, const Configuration& cfg, SiteId s,
                      SiteId exclude = -9) {
  const auto& e = lat.energy_neighbors(s);
  int k = 0;
  for (int i = 0; i < e[3]; ++i)
    if (e[i] != exclude && cfg.test(e[i])) ++k;
  return k;
}

struct PathBuilder {
  const HexLattice& lat;
  const Params& p;
  PathRecord rec;
  Configuration cfg;
  std::int64_t h0;

  PathBuilder(const HexLattice& l, const Params& pp, const Configuration& sigma)
      : lat(l), p(pp), cfg(sigma) {
    h0 = hamiltonian_grid(lat, cfg, p);
    rec.push(cfg, h0);
  }
  std::int64_t h() const { return rec.energies_g.back(); }
  bool reduced() const { return h() < h0; }
  void exchange(SiteId x, SiteId y) {
    cfg.clear(x);
    cfg.set(y);
    rec.push(cfg, hamiltonian_grid(lat, cfg, p));
  }
  void create(SiteId s) {
    cfg.set(s);
    rec.push(cfg, hamiltonian_grid(lat, cfg, p));
  }
  void annihilate(SiteId s) {
    cfg.clear(s);
    rec.push(cfg, hamiltonian_grid(lat, cfg, p));
  }
  void walk(const std::vector<SiteId>& chain) {
    for (std::size_t i = 1; i < chain.size(); ++i) exchange(chain[i - 1], chain[i]);
  }
};

// Shortest chain of empty sites from `from` to the nearest site satisfying
// `is_target`; `from` itself is excluded from the targets.
template <class Pred>
inline std::vector<SiteId> walker_chain(const HexLattice& lat, const Configuration& cfg,
                                        SiteId from, Pred&& is_target) {
  std::vector<SiteId> parent(lat.n_sites(), -2);
  std::vector<SiteId> queue{from};
  parent[from] = -1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    SiteId cur = queue[head];
    if (cur != from && is_target(cur)) {
      std::vector<SiteId> chain;
      for (SiteId s = cur; s != -1; s = parent[s]) chain.push_back(s);
      std::reverse(chain.begin(), chain.end());
      return chain;
    }
    const auto& nb = lat.raw_neighbors(cur);
    for (int i = 0; i < 3; ++i) {
      SiteId y = nb[i];
      if (y == kExterior || cfg.test(y) || parent[y] != -2) continue;
      parent[y] = cur;
      queue.push_back(y);
    }
  }
  return {};
}

inline std::vector<std::uint8_t> occupancy(const HexLattice& lat, const Configuration& cfg) {
  std::vector<std::uint8_t> occ(lat.n_sites(), 0);
  for (SiteId s = 0; s < lat.n_sites(); ++s) occ[s] = cfg.test(s) ? 1 : 0;
  return occ;
}

// Cut the record at the first state strictly below the starting energy.
inline void shrink_to_first_drop(PathRecord& rec) {
  for (int i = 1; i < rec.length(); ++i) {
    if (rec.energies_g[i] >= rec.energies_g[0]) continue;
    PathRecord cut;
    for (int j = 0; j <= i; ++j) cut.push(rec.configurations[j], rec.energies_g[j]);
    rec = std::move(cut);
    return;
  }
}

// ---- strategies; each returns a candidate path or nothing ----

// A free particle walks to the boundary ring and leaves, or re-attaches.
inline std::optional<PathRecord> try_free(const HexLattice& lat, const Configuration& sigma,
                                          const Params& p) {
  for (SiteId f : free_particles(lat, sigma)) {
    PathBuilder b(lat, p, sigma);
    if (!lat.is_interior(f)) {
      b.annihilate(f);
      return b.rec;
    }
    auto chain = walker_chain(lat, sigma, f, [&](SiteId y) {
      return !lat.is_interior(y) || occ_degree(lat, sigma, y, f) >= 1;
    });
    if (chain.empty()) continue;
    b.walk(chain);
    if (!lat.is_interior(chain.back())) b.annihilate(chain.back());
    return b.rec;
  }
  return std::nullopt;
}

// A pi/3 tip holds on by a single bond: detach it and eject it.
inline std::optional<PathRecord> try_tip(const HexLattice& lat, const Configuration& sigma,
                                         const Params& p) {
  for (const Cluster& cl : clusters(lat, sigma)) {
    for (const BoundaryWalk& w : boundary_walks(lat, cl)) {
      if (!w.external) continue;
      for (int j = 0; j < w.length(); ++j) {
        if (w.angles[j] != 1) continue;
        SiteId t = lat.site(w.faces[j]);
        std::vector<SiteId> dests;
        const auto& nb = lat.raw_neighbors(t);
        for (int i = 0; i < 3; ++i)
          if (nb[i] != kExterior && !sigma.test(nb[i])) dests.push_back(nb[i]);
        std::sort(dests.begin(), dests.end(), [&](SiteId a, SiteId c) {
          int da = occ_degree(lat, sigma, a, t), dc = occ_degree(lat, sigma, c, t);
          return da != dc ? da > dc : a < c;
        });
        for (SiteId y : dests) {
          PathBuilder b(lat, p, sigma);
          b.exchange(t, y);
          if (b.reduced()) return b.rec;
          if (!lat.is_interior(y)) {
            b.annihilate(y);
            return b.rec;
          }
          auto chain = walker_chain(lat, b.cfg, y, [&](SiteId z) {
            return !lat.is_interior(z) || occ_degree(lat, b.cfg, z, y) >= 2;
          });
          if (chain.empty()) continue;
          b.walk(chain);
          if (!lat.is_interior(chain.back())) b.annihilate(chain.back());
          return b.rec;
        }
      }
    }
  }
  return std::nullopt;
}

// A doubly bonded vacancy (the 5pi/3 pocket, or the gap between two
// interacting clusters): bring in one particle and drop it there.
inline std::optional<PathRecord> try_pocket(const HexLattice& lat, const Configuration& sigma,
                                            const Params& p) {
  std::vector<SiteId> targets;
  for (SiteId z = 0; z < lat.n_sites(); ++z)
    if (lat.is_interior(z) && !sigma.test(z) && occ_degree(lat, sigma, z) >= 2)
      targets.push_back(z);
  std::sort(targets.begin(), targets.end(), [&](SiteId a, SiteId c) {
    int da = occ_degree(lat, sigma, a), dc = occ_degree(lat, sigma, c);
    return da != dc ? da > dc : a < c;
  });
  std::vector<std::uint8_t> occ = occupancy(lat, sigma);
  for (SiteId z : targets) {
    auto chain = empty_chain_from_boundary(lat, occ, z);
    if (chain.empty()) continue;
    PathBuilder b(lat, p, sigma);
    b.create(chain[0]);
    b.walk(chain);
    return b.rec;
  }
  return std::nullopt;
}

// A 4pi/3 corner: two adjacent singly bonded vacancies; fill both. The second
// particle lands with two bonds, which pays for both creations.
inline std::optional<PathRecord> try_staircase(const HexLattice& lat, const Configuration& sigma,
                                               const Params& p) {
  for (SiteId e1 = 0; e1 < lat.n_sites(); ++e1) {
    if (!lat.is_interior(e1) || sigma.test(e1) || occ_degree(lat, sigma, e1) != 1) continue;
    const auto& nb = lat.raw_neighbors(e1);
    for (int i = 0; i < 3; ++i) {
      SiteId e2 = nb[i];
      if (e2 == kExterior || !lat.is_interior(e2) || sigma.test(e2)) continue;
      if (occ_degree(lat, sigma, e2) != 1) continue;
      auto chain1 = empty_chain_from_boundary(lat, occupancy(lat, sigma), e1);
      if (chain1.empty()) continue;
      PathBuilder b(lat, p, sigma);
      b.create(chain1[0]);
      b.walk(chain1);
      auto chain2 = empty_chain_from_boundary(lat, occupancy(lat, b.cfg), e2);
      if (chain2.empty()) continue;
      b.create(chain2[0]);
      b.walk(chain2);
      return b.rec;
    }
  }
  return std::nullopt;
}

// A cluster with a hole: carry wall particles into the hole; the vacancy
// migrates to the rim. Iterate until the energy drops.
inline std::optional<PathRecord> try_holes(const HexLattice& lat, const Configuration& sigma,
                                           const Params& p) {
  PathBuilder b(lat, p, sigma);
  int guard = 3 * lat.n_interior() + 30;
  while (guard-- > 0) {
    if (b.reduced()) return b.rec;
    const Cluster* pick = nullptr;
    std::vector<Cluster> cls = clusters(lat, b.cfg);
    std::vector<std::vector<FaceCoord>> hs;
    for (const Cluster& cl : cls) {
      auto h = holes(lat, cl);
      if (!h.empty()) {
        pick = &cl;
        hs = std::move(h);
        break;
      }
    }
    if (!pick) break;
    std::set<SiteId> hole_sites;
    for (const auto& comp : hs)
      for (const FaceCoord& f : comp) hole_sites.insert(lat.site_checked(f));
    SiteId z0 = kExterior;
    int best_deg = -1;
    for (SiteId s : hole_sites) {
      if (b.cfg.test(s)) continue;
      int d = occ_degree(lat, b.cfg, s);
      if (d > best_deg) {
        best_deg = d;
        z0 = s;
      }
    }
    if (z0 == kExterior) break;

    // route through occupied cells from z0 to a cell with an empty neighbor
    // outside the holes
    std::vector<SiteId> parent(lat.n_sites(), -2);
    std::vector<SiteId> queue;
    parent[z0] = -1;
    const auto& z0nb = lat.raw_neighbors(z0);
    for (int i = 0; i < 3; ++i)
      if (z0nb[i] != kExterior && b.cfg.test(z0nb[i])) {
        parent[z0nb[i]] = z0;
        queue.push_back(z0nb[i]);
      }
    SiteId exit = kExterior;
    for (std::size_t head = 0; head < queue.size() && exit == kExterior; ++head) {
      SiteId cur = queue[head];
      const auto& nb = lat.raw_neighbors(cur);
      for (int i = 0; i < 3; ++i) {
        SiteId y = nb[i];
        if (y == kExterior) continue;
        if (!b.cfg.test(y) && !hole_sites.count(y)) {
          exit = cur;
          break;
        }
        if (b.cfg.test(y) && parent[y] == -2) {
          parent[y] = cur;
          queue.push_back(y);
        }
      }
    }
    if (exit == kExterior) break;
    std::vector<SiteId> route;  // z0, c1, ..., ck = exit
    for (SiteId s = exit; s != -1; s = parent[s]) route.push_back(s);
    std::reverse(route.begin(), route.end());
    for (std::size_t i = 1; i < route.size(); ++i) b.exchange(route[i], route[i - 1]);
  }
  if (b.reduced()) return b.rec;
  return std::nullopt;
}

// Side decomposition of an external boundary walk: maximal runs of collinear
// edges delimited by 2pi/3 corners, as lists of edge indices.
inline std::vector<std::vector<int>> straight_sides(const BoundaryWalk& w) {
  int n = w.length();
  std::vector<std::vector<int>> sides;
  int first_corner = -1;
  for (int j = 0; j < n; ++j)
    if (w.angles[j] == 2) {
      first_corner = j;
      break;
    }
  if (first_corner < 0) return sides;
  std::vector<int> cur;
  for (int step = 1; step <= n; ++step) {
    int j = (first_corner + step) % n;
    cur.push_back(j);
    if (w.angles[j] == 2) {
      sides.push_back(cur);
      cur.clear();
    }
  }
  return sides;
}

// Face on the right (empty side) of boundary edge j.
inline FaceCoord boundary_right_face(const BoundaryWalk& w, int j) {
  int n = w.length();
  Vertex tail = w.vertices[(j + n - 1) % n], head = w.vertices[j];
  const FaceCoord& f = w.faces[j];
  auto vs = face_vertices_ccw(f);
  for (int i = 0; i < 3; ++i)
    if (vs[i] == tail && vs[(i + 1) % 3] == head) return face_edge_neighbor(f, i);
  throw std::logic_error("boundary edge does not belong to its face");
}

inline int inscribed_radius(const std::set<FaceCoord>& cells, int rmax) {
  int best = 0;
  for (int r = 1; r <= rmax; ++r) {
    std::vector<FaceCoord> er;
    for (int a = -r - 1; a <= r + 1; ++a)
      for (int b = -r - 1; b <= r + 1; ++b)
        for (bool up : {true, false})
          if (in_hexagon(FaceCoord{a, b, up}, r)) er.push_back({a, b, up});
    bool found = false;
    for (const FaceCoord& c : cells) {
      int ta = c.a - er[0].a, tb = c.b - er[0].b;
      if (c.up != er[0].up) continue;
      bool all = true;
      for (const FaceCoord& f : er)
        if (!cells.count(FaceCoord{f.a + ta, f.b + tb, f.up})) {
          all = false;
          break;
        }
      if (all) {
        found = true;
        break;
      }
    }
    if (!found) break;
    best = r;
  }
  return best;
}

// Dismantle: peel minimum-degree cells of the chosen cluster, ejecting each
// across the boundary ring, until the energy drops.
inline std::optional<PathRecord> hexagonal_dismantle(const HexLattice& lat,
                                                     const Configuration& sigma, const Params& p,
                                                     const Cluster& cl) {
  PathBuilder b(lat, p, sigma);
  std::set<SiteId> target(cl.sites.begin(), cl.sites.end());
  int guard = 3 * static_cast<int>(target.size()) + 10;
  while (!target.empty() && guard-- > 0) {
    if (b.reduced()) return b.rec;
    SiteId x = kExterior;
    int best_deg = 99;
    for (SiteId s : target) {
      int d = occ_degree(lat, b.cfg, s);
      if (d < best_deg) {
        best_deg = d;
        x = s;
      }
    }
    std::vector<SiteId> dests;
    const auto& nb = lat.raw_neighbors(x);
    for (int i = 0; i < 3; ++i)
      if (nb[i] != kExterior && !b.cfg.test(nb[i])) dests.push_back(nb[i]);
    if (dests.empty()) {
      target.erase(x);
      continue;
    }
    std::sort(dests.begin(), dests.end(), [&](SiteId a, SiteId c) {
      bool ra = !lat.is_interior(a), rc = !lat.is_interior(c);
      if (ra != rc) return ra;
      int da = occ_degree(lat, b.cfg, a, x), dc = occ_degree(lat, b.cfg, c, x);
      return da != dc ? da < dc : a < c;
    });
    SiteId y = dests[0];
    b.exchange(x, y);
    target.erase(x);
    if (!lat.is_interior(y)) {
      b.annihilate(y);
      continue;
    }
    auto chain = walker_chain(lat, b.cfg, y, [&](SiteId z) { return !lat.is_interior(z); });
    if (chain.empty()) return std::nullopt;
    b.walk(chain);
    b.annihilate(chain.back());
  }
  if (b.reduced()) return b.rec;
  return std::nullopt;
}

// Grow: straighten the longest side with a fresh row of cells, clockwise row
// after row, until the energy drops.
inline std::optional<PathRecord> hexagonal_grow(const HexLattice& lat, const Configuration& sigma,
                                                const Params& p, const Cluster& cl) {
  PathBuilder b(lat, p, sigma);
  SiteId seed = cl.sites.front();
  for (int round = 0; round < 14; ++round) {
    if (b.reduced()) return b.rec;
    std::vector<Cluster> cls = clusters(lat, b.cfg);
    const Cluster* cur = nullptr;
    for (const Cluster& c : cls)
      if (std::find(c.sites.begin(), c.sites.end(), seed) != c.sites.end()) cur = &c;
    if (!cur) return std::nullopt;
    const BoundaryWalk* ext = nullptr;
    std::vector<BoundaryWalk> walks = boundary_walks(lat, *cur);
    for (const BoundaryWalk& w : walks)
      if (w.external) ext = &w;
    if (!ext) return std::nullopt;
    for (int k : ext->angles)
      if (k != 2 && k != 3) return std::nullopt;

    std::vector<std::vector<int>> sides = straight_sides(*ext);
    std::sort(sides.begin(), sides.end(),
              [](const auto& a, const auto& c) { return a.size() > c.size(); });
    bool placed_row = false;
    for (const auto& side : sides) {
      // row: right faces of the side edges with the wedge cells in between
      std::vector<FaceCoord> row;
      bool usable = true;
      std::vector<FaceCoord> rf;
      for (int j : side) rf.push_back(boundary_right_face(*ext, j));
      for (std::size_t k = 0; k < rf.size(); ++k) {
        row.push_back(rf[k]);
        if (k + 1 < rf.size()) {
          FaceCoord wedge{};
          bool got = false;
          for (const FaceCoord& n1 : face_neighbors(rf[k]))
            for (const FaceCoord& n2 : face_neighbors(rf[k + 1]))
              if (n1 == n2) {
                wedge = n1;
                got = true;
              }
          if (!got) {
            usable = false;
            break;
          }
          row.push_back(wedge);
        }
      }
      if (!usable) continue;
      for (const FaceCoord& f : row) {
        SiteId s = lat.site(f);
        if (s == kExterior || !lat.is_interior(s) || b.cfg.test(s)) usable = false;
      }
      if (!usable) continue;
      for (const FaceCoord& f : row) {
        SiteId s = lat.site(f);
        auto chain = empty_chain_from_boundary(lat, occupancy(lat, b.cfg), s);
        if (chain.empty()) return std::nullopt;
        b.create(chain[0]);
        b.walk(chain);
        if (b.reduced()) return b.rec;
      }
      placed_row = true;
      break;
    }
    if (!placed_row) return std::nullopt;
  }
  return std::nullopt;
}

// Equiangular clusters (all boundary angles 2pi/3 or pi): grow supercritical
// ones, dismantle subcritical ones, decided by the largest inscribed hexagon.
inline std::optional<PathRecord> try_hexagonal(const HexLattice& lat, const Configuration& sigma,
                                               const Params& p) {
  CriticalQuantities cq = critical_quantities(p);
  std::vector<Cluster> cls = clusters(lat, sigma);
  if (cls.empty()) return std::nullopt;
  std::sort(cls.begin(), cls.end(),
            [](const Cluster& a, const Cluster& c) { return a.area > c.area; });
  for (const Cluster& cl : cls) {
    int r_in = inscribed_radius(cluster_cells(lat, cl), lat.L());
    bool super = r_in >= cq.r_star + 1;
    auto first = super ? hexagonal_grow(lat, sigma, p, cl) : hexagonal_dismantle(lat, sigma, p, cl);
    if (first) return first;
    auto second =
        super ? hexagonal_dismantle(lat, sigma, p, cl) : hexagonal_grow(lat, sigma, p, cl);
    if (second) return second;
  }
  return std::nullopt;
}

}  // namespace detail

// A verified downhill escape: a move path from sigma whose maximum stays
// within V* of H(sigma) and whose last state is strictly below H(sigma).
// Dispatches on the geometry: free particles, pi/3 tips, 5pi/3 pockets and
// interacting clusters, 4pi/3 corners, holes, then equiangular clusters.
inline PathRecord reducing_path(const HexLattice& lat, const Configuration& sigma,
                                const Params& p) {
  if (sigma.n_total == 0)
    throw std::invalid_argument("reducing path undefined for the empty configuration");
  if (count_occupied_interior(lat, sigma) == lat.n_interior() &&
      sigma.n_total == lat.n_interior())
    throw std::invalid_argument("reducing path undefined for the full configuration");
  CriticalQuantities cq = critical_quantities(p);
  std::int64_t h0 = hamiltonian_grid(lat, sigma, p);
  std::int64_t bound = h0 + cq.v_star_g;
  std::vector<std::string> notes;

  auto finish = [&](std::optional<PathRecord> cand,
                    const char* name) -> std::optional<PathRecord> {
    if (!cand) return std::nullopt;
    detail::shrink_to_first_drop(*cand);
    if (cand->max_energy_g > bound) {
      notes.push_back(std::string(name) + ": peak above H + V*");
      return std::nullopt;
    }
    if (cand->energies_g.back() >= h0) {
      notes.push_back(std::string(name) + ": endpoint not below H");
      return std::nullopt;
    }
    if (!validate_path(lat, *cand, p)) {
      notes.push_back(std::string(name) + ": invalid move sequence");
      return std::nullopt;
    }
    return cand;
  };

  if (auto r = finish(detail::try_free(lat, sigma, p), "free")) return *r;
  if (auto r = finish(detail::try_tip(lat, sigma, p), "tip")) return *r;
  if (auto r = finish(detail::try_pocket(lat, sigma, p), "pocket")) return *r;
  if (auto r = finish(detail::try_staircase(lat, sigma, p), "staircase")) return *r;
  if (auto r = finish(detail::try_holes(lat, sigma, p), "holes")) return *r;
  if (auto r = finish(detail::try_hexagonal(lat, sigma, p), "hexagonal")) return *r;

  std::ostringstream os;
  os << "no reducing path found\n" << render_ascii(lat, sigma);
  os << "config: " << serialize_config(lat, sigma) << "\n";
  for (const std::string& s : notes) os << "  " << s << "\n";
  throw std::runtime_error(os.str());
}

}  // namespace khex
