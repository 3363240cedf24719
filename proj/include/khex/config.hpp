#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace khex {

// Occupancy bitmap over the sites of one lattice, with a cached particle
// count.
struct Configuration {
  std::array<std::uint64_t, 4> w{0, 0, 0, 0};
  std::int16_t n_total = 0;

  bool test(SiteId s) const { return (w[s >> 6] >> (s & 63)) & 1; }
  void set(SiteId s) {
    if (!test(s)) {
      w[s >> 6] |= std::uint64_t(1) << (s & 63);
      ++n_total;
    }
  }
  void clear(SiteId s) {
    if (test(s)) {
      w[s >> 6] &= ~(std::uint64_t(1) << (s & 63));
      --n_total;
    }
  }
  void flip(SiteId s) { test(s) ? clear(s) : set(s); }

  friend bool operator==(const Configuration& x, const Configuration& y) { return x.w == y.w; }
  friend bool operator<(const Configuration& x, const Configuration& y) { return x.w < y.w; }
};

struct ConfigHash {
  std::size_t operator()(const Configuration& c) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::uint64_t v : c.w) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(h);
  }
};

inline int manifold_index(const Configuration& cfg) { return cfg.n_total; }

inline int count_occupied_interior(const HexLattice& lat, const Configuration& cfg) {
  int n = 0;
  for (int s = 0; s < lat.n_sites(); ++s)
    if (lat.is_interior(s) && cfg.test(s)) ++n;
  return n;
}

// A site is free iff occupied and either on the inner boundary or without any
// occupied neighbor inside the interior hexagon.
inline std::vector<SiteId> free_particles(const HexLattice& lat, const Configuration& cfg) {
  std::vector<SiteId> out;
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    if (!cfg.test(s)) continue;
    if (!lat.is_interior(s)) {
      out.push_back(s);
      continue;
    }
    const auto& eb = lat.energy_neighbors(s);
    bool bonded = false;
    for (int k = 0; k < eb[3]; ++k)
      if (cfg.test(eb[k])) bonded = true;
    if (!bonded) out.push_back(s);
  }
  return out;
}

struct Cluster {
  std::vector<SiteId> sites;  // sorted
  int area = 0;
  int bonds = 0;
  int perimeter() const { return 3 * area - 2 * bonds; }
};

// Maximal connected components of the clusterized part (occupied interior
// minus free particles), ordered by smallest site id.
inline std::vector<Cluster> clusters(const HexLattice& lat, const Configuration& cfg) {
  std::vector<bool> in_cl(lat.n_sites(), false);
  for (SiteId s = 0; s < lat.n_sites(); ++s)
    if (cfg.test(s) && lat.is_interior(s)) in_cl[s] = true;
  for (SiteId s : free_particles(lat, cfg)) in_cl[s] = false;

  std::vector<Cluster> out;
  std::vector<bool> seen(lat.n_sites(), false);
  for (SiteId s0 = 0; s0 < lat.n_sites(); ++s0) {
    if (!in_cl[s0] || seen[s0]) continue;
    Cluster cl;
    std::vector<SiteId> stack{s0};
    seen[s0] = true;
    while (!stack.empty()) {
      SiteId s = stack.back();
      stack.pop_back();
      cl.sites.push_back(s);
      const auto& eb = lat.energy_neighbors(s);
      for (int k = 0; k < eb[3]; ++k) {
        if (in_cl[eb[k]] && cfg.test(eb[k])) {
          cl.bonds += (eb[k] > s) ? 1 : 0;
          if (!seen[eb[k]]) {
            seen[eb[k]] = true;
            stack.push_back(eb[k]);
          }
        }
      }
    }
    std::sort(cl.sites.begin(), cl.sites.end());
    cl.area = static_cast<int>(cl.sites.size());
    out.push_back(std::move(cl));
  }
  return out;
}

// ---- boundary geometry of polyiamonds (coordinate-space, lattice-free) ----

using Vertex = std::pair<int, int>;

inline std::array<Vertex, 3> face_vertices_ccw(const FaceCoord& f) {
  if (f.up) return {Vertex{f.a, f.b}, Vertex{f.a + 1, f.b}, Vertex{f.a, f.b + 1}};
  return {Vertex{f.a + 1, f.b}, Vertex{f.a + 1, f.b + 1}, Vertex{f.a, f.b + 1}};
}

// Neighbor across the CCW edge i -> i+1.
inline FaceCoord face_edge_neighbor(const FaceCoord& f, int i) {
  if (f.up) {
    if (i == 0) return FaceCoord{f.a, f.b - 1, false};
    if (i == 1) return FaceCoord{f.a, f.b, false};
    return FaceCoord{f.a - 1, f.b, false};
  }
  if (i == 0) return FaceCoord{f.a + 1, f.b, true};
  if (i == 1) return FaceCoord{f.a, f.b + 1, true};
  return FaceCoord{f.a, f.b, true};
}

inline int edge_direction(const Vertex& from, const Vertex& to) {
  int da = to.first - from.first, db = to.second - from.second;
  if (da == 1 && db == 0) return 0;
  if (da == 0 && db == 1) return 1;
  if (da == -1 && db == 1) return 2;
  if (da == -1 && db == 0) return 3;
  if (da == 0 && db == -1) return 4;
  if (da == 1 && db == -1) return 5;
  throw std::logic_error("not a unit lattice edge");
}

struct BoundaryWalk {
  std::vector<Vertex> vertices;   // vertices[j] = head of edge j; closed cycle
  std::vector<int> angles;        // internal angle at vertices[j] in units of pi/3
  std::vector<FaceCoord> faces;   // occupied face left of edge j
  bool external = false;
  int length() const { return static_cast<int>(vertices.size()); }
};

// Traces all boundary components of a set of faces. Edges are directed with
// the occupied face on the left; the successor of an edge is the outgoing
// edge with the maximally counter-clockwise turn, which partitions the edges
// into closed walks (external ones run counter-clockwise, holes clockwise).
inline std::vector<BoundaryWalk> trace_boundaries(const std::set<FaceCoord>& cells) {
  std::map<std::pair<Vertex, Vertex>, FaceCoord> edge_face;
  std::map<std::pair<Vertex, Vertex>, bool> used;
  std::map<Vertex, std::vector<Vertex>> outgoing;
  std::vector<std::pair<Vertex, Vertex>> order;
  for (const FaceCoord& f : cells) {
    auto vs = face_vertices_ccw(f);
    for (int i = 0; i < 3; ++i) {
      if (cells.count(face_edge_neighbor(f, i))) continue;
      Vertex a = vs[i], b = vs[(i + 1) % 3];
      edge_face[{a, b}] = f;
      used[{a, b}] = false;
      outgoing[a].push_back(b);
      order.push_back({a, b});
    }
  }

  auto successor = [&](const Vertex& a, const Vertex& b) {
    int din = edge_direction(a, b);
    Vertex next{};
    int best = -100;
    for (const Vertex& c : outgoing.at(b)) {
      int rel = (edge_direction(b, c) - din + 6) % 6;
      int turn = rel <= 2 ? rel : rel - 6;  // +2 sharp left .. -2 sharp right
      if (turn > best) {
        best = turn;
        next = c;
      }
    }
    if (best == -100 || best == -3) throw std::logic_error("boundary walk dead end");
    return std::pair<Vertex, int>{next, best};
  };

  std::vector<BoundaryWalk> walks;
  for (const auto& start : order) {
    if (used[start]) continue;
    BoundaryWalk walk;
    Vertex a = start.first, b = start.second;
    int turn_sum = 0;
    do {
      if (used[{a, b}]) throw std::logic_error("boundary edge visited twice");
      used[{a, b}] = true;
      walk.vertices.push_back(b);
      walk.faces.push_back(edge_face.at({a, b}));
      auto [next, turn] = successor(a, b);
      walk.angles.push_back(3 - turn);
      turn_sum += turn;
      a = b;
      b = next;
    } while (!(a == start.first && b == start.second));
    walk.external = turn_sum > 0;
    walks.push_back(std::move(walk));
  }
  return walks;
}

inline std::set<FaceCoord> cluster_cells(const HexLattice& lat, const Cluster& cl) {
  std::set<FaceCoord> cells;
  for (SiteId s : cl.sites) cells.insert(lat.face(s));
  return cells;
}

inline std::vector<BoundaryWalk> boundary_walks(const HexLattice& lat, const Cluster& cl) {
  if (cl.sites.empty()) throw std::invalid_argument("cluster must be nonempty");
  return trace_boundaries(cluster_cells(lat, cl));
}

// Corners: boundary vertices with internal angle 2pi/3 (the flanking face
// pair sits inside the angle).
inline int count_corners(const HexLattice& lat, const Cluster& cl) {
  int n = 0;
  for (const BoundaryWalk& w : boundary_walks(lat, cl))
    for (int k : w.angles)
      if (k == 2) ++n;
  return n;
}

// Empty-face components fully enclosed by the cluster, computed geometrically
// (other particles ignored): flood fill of empty faces from outside the
// cluster's bounding window.
inline std::vector<std::vector<FaceCoord>> holes(const HexLattice& lat, const Cluster& cl) {
  std::set<FaceCoord> cells = cluster_cells(lat, cl);
  int alo = 1 << 30, ahi = -(1 << 30), blo = 1 << 30, bhi = -(1 << 30);
  for (const FaceCoord& f : cells) {
    alo = std::min(alo, f.a - 2);
    ahi = std::max(ahi, f.a + 2);
    blo = std::min(blo, f.b - 2);
    bhi = std::max(bhi, f.b + 2);
  }
  auto inside = [&](const FaceCoord& f) {
    return f.a >= alo && f.a <= ahi && f.b >= blo && f.b <= bhi;
  };
  std::set<FaceCoord> reached;
  std::vector<FaceCoord> stack{FaceCoord{alo, blo, true}};
  reached.insert(stack[0]);
  while (!stack.empty()) {
    FaceCoord f = stack.back();
    stack.pop_back();
    for (const FaceCoord& n : face_neighbors(f)) {
      if (!inside(n) || cells.count(n) || reached.count(n)) continue;
      reached.insert(n);
      stack.push_back(n);
    }
  }
  std::set<FaceCoord> enclosed;
  for (int a = alo; a <= ahi; ++a)
    for (int b = blo; b <= bhi; ++b)
      for (bool up : {true, false}) {
        FaceCoord f{a, b, up};
        if (!cells.count(f) && !reached.count(f)) enclosed.insert(f);
      }
  std::vector<std::vector<FaceCoord>> out;
  std::set<FaceCoord> seen;
  for (const FaceCoord& f0 : enclosed) {
    if (seen.count(f0)) continue;
    std::vector<FaceCoord> comp, st{f0};
    seen.insert(f0);
    while (!st.empty()) {
      FaceCoord f = st.back();
      st.pop_back();
      comp.push_back(f);
      for (const FaceCoord& n : face_neighbors(f))
        if (enclosed.count(n) && !seen.count(n)) {
          seen.insert(n);
          st.push_back(n);
        }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

// True iff the lattice distance between the two disjoint clusters equals 2.
inline bool interacting(const HexLattice& lat, const Cluster& c1, const Cluster& c2) {
  int dmin = 1 << 30;
  for (SiteId x : c1.sites)
    for (SiteId y : c2.sites) {
      if (x == y) throw std::invalid_argument("clusters overlap");
      dmin = std::min(dmin, lat.face_distance(x, y));
    }
  if (dmin == 0) throw std::invalid_argument("clusters overlap");
  return dmin == 2;
}

// True iff some pair of clusters of cfg interacts.
inline bool interacting(const HexLattice& lat, const Configuration& cfg) {
  std::vector<Cluster> cls = clusters(lat, cfg);
  for (std::size_t i = 0; i < cls.size(); ++i)
    for (std::size_t j = i + 1; j < cls.size(); ++j)
      if (interacting(lat, cls[i], cls[j])) return true;
  return false;
}

// ---- serialization ----

inline std::string serialize_config(const HexLattice& lat, const Configuration& cfg) {
  static const char* hex = "0123456789abcdef";
  std::string bits;
  int nybbles = (lat.n_sites() + 3) / 4;
  for (int i = 0; i < nybbles; ++i) {
    int v = 0;
    for (int j = 0; j < 4; ++j) {
      SiteId s = static_cast<SiteId>(4 * i + j);
      if (s < lat.n_sites() && cfg.test(s)) v |= 1 << j;
    }
    bits.push_back(hex[v]);
  }
  std::ostringstream os;
  os << "{\"L\":" << lat.L() << ",\"bits\":\"" << bits << "\"}";
  return os.str();
}

inline Configuration parse_config(const HexLattice& lat, const std::string& json) {
  auto lpos = json.find("\"L\":");
  auto bpos = json.find("\"bits\":\"");
  if (lpos == std::string::npos || bpos == std::string::npos)
    throw std::invalid_argument("malformed configuration json");
  int L = std::stoi(json.substr(lpos + 4));
  if (L != lat.L()) throw std::invalid_argument("configuration lattice size mismatch");
  Configuration cfg;
  std::size_t p = bpos + 8;
  for (int i = 0; p + i < json.size() && json[p + i] != '"'; ++i) {
    char c = json[p + i];
    int v = c <= '9' ? c - '0' : c - 'a' + 10;
    for (int j = 0; j < 4; ++j) {
      SiteId s = static_cast<SiteId>(4 * i + j);
      if ((v >> j & 1) && s < lat.n_sites()) cfg.set(s);
    }
  }
  return cfg;
}

inline std::string render_ascii(const HexLattice& lat, const Configuration& cfg) {
  int xlo = 1 << 30, xhi = -(1 << 30), blo = 1 << 30, bhi = -(1 << 30);
  for (const FaceCoord& f : lat.faces()) {
    int x = 2 * f.a + f.b + (f.up ? 0 : 1);
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    blo = std::min(blo, f.b);
    bhi = std::max(bhi, f.b);
  }
  std::ostringstream os;
  for (int b = bhi; b >= blo; --b) {
    std::string line(xhi - xlo + 1, ' ');
    for (SiteId s = 0; s < lat.n_sites(); ++s) {
      const FaceCoord& f = lat.face(s);
      if (f.b != b) continue;
      char g = lat.is_interior(s) ? (cfg.test(s) ? '#' : '.') : (cfg.test(s) ? 'o' : '-');
      line[2 * f.a + f.b + (f.up ? 0 : 1) - xlo] = g;
    }
    os << line << '\n';
  }
  return os.str();
}

}  // namespace khex
