#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "energy.hpp"
#include "lattice.hpp"
#include "params.hpp"

namespace khex {

// ---- canonical filling order ----
//
// Frozen traversal of the plane: six faces fanned clockwise around vertex
// (0,0), then concentric annuli E(r+1)\E(r), each walked clockwise starting
// from the top-left face U(-r,r). Every canonical shape below is a prefix of
// (or indexes into) this order.

inline const std::vector<FaceCoord>& fan_cells() {
  static const std::vector<FaceCoord> fan = {
      {0, 0, true},  {0, -1, false}, {0, -1, true},
      {-1, -1, false}, {-1, 0, true}, {-1, 0, false},
  };
  return fan;
}

inline std::array<int, 6> bar_lengths(std::int64_t r) {
  int ri = static_cast<int>(r);
  return {2 * ri - 1, 2 * ri + 1, 2 * ri + 1, 2 * ri + 1, 2 * ri + 1, 2 * ri + 3};
}

// The annulus E(r+1)\E(r) in clockwise walk order (12r+6 cells).
inline std::vector<FaceCoord> ring_cells(int r) {
  if (r < 1) throw std::invalid_argument("ring index must be >= 1");
  auto in_ring = [&](const FaceCoord& f) { return in_hexagon(f, r + 1) && !in_hexagon(f, r); };
  std::vector<FaceCoord> out;
  out.push_back({-r, r, true});
  out.push_back({-r, r, false});
  std::set<FaceCoord> seen(out.begin(), out.end());
  while (static_cast<int>(out.size()) < 12 * r + 6) {
    bool advanced = false;
    for (const FaceCoord& n : face_neighbors(out.back())) {
      if (in_ring(n) && !seen.count(n)) {
        out.push_back(n);
        seen.insert(n);
        advanced = true;
        break;
      }
    }
    if (!advanced) throw std::logic_error("annulus walk stalled");
  }
  return out;
}

// First n cells of the canonical order (n <= 6*rings^2 is generated).
inline std::vector<FaceCoord> fill_cells(std::int64_t n) {
  std::vector<FaceCoord> out = fan_cells();
  for (int r = 1; static_cast<std::int64_t>(out.size()) < n; ++r) {
    auto ring = ring_cells(r);
    out.insert(out.end(), ring.begin(), ring.end());
  }
  out.resize(static_cast<std::size_t>(n));
  return out;
}

// Canonical order of all interior sites of a lattice.
inline std::vector<SiteId> fill_order(const HexLattice& lat) {
  std::vector<SiteId> out;
  for (const FaceCoord& f : fill_cells(6 * static_cast<std::int64_t>(lat.L()) * lat.L()))
    out.push_back(lat.site_checked(f));
  return out;
}

// ---- area decomposition and closed-form energies ----

struct AreaDecomposition {
  std::int64_t r, i, k;  // A = |E_{B_i}(r)| + k, 0 <= k < |B_{i+1}(r)|
  friend bool operator==(const AreaDecomposition&, const AreaDecomposition&) = default;
};

inline AreaDecomposition decompose_area(std::int64_t A) {
  if (A < 1) throw std::invalid_argument("area must be positive");
  if (A < 6) return {0, 0, A};  // inside the initial fan
  std::int64_t r = 1;
  while (6 * (r + 1) * (r + 1) <= A) ++r;
  std::int64_t rem = A - 6 * r * r, i = 0;
  auto lens = bar_lengths(r);
  while (i < 6 && rem >= lens[i]) rem -= lens[i++];
  return {r, i, rem};
}

// Bonds gained by the first k cells laid along one bar: 1,1,2,1,2,1,2,...
inline std::int64_t incomplete_bar_bonds(std::int64_t k) {
  return k <= 0 ? 0 : k + (k - 1) / 2;
}

inline std::int64_t shape_bond_count(std::int64_t A) {
  if (A < 1) return 0;
  if (A <= 5) return A - 1;
  auto [r, i, k] = decompose_area(A);
  std::int64_t bonds = 3 * (3 * r * r - r);
  auto lens = bar_lengths(r);
  for (std::int64_t j = 0; j < i; ++j) bonds += incomplete_bar_bonds(lens[j]);
  return bonds + incomplete_bar_bonds(k);
}

// Energy of the standard polyiamond of area A, on the grid.
inline std::int64_t closed_form_energy_grid(std::int64_t A, const Params& p) {
  if (A < 1) throw std::invalid_argument("area must be positive");
  return -p.u * shape_bond_count(A) + p.d * A;
}

inline double closed_form_energy(std::int64_t A, const Params& p) {
  return p.energy(closed_form_energy_grid(A, p));
}

// ---- shape constructors ----

enum class ShapeKind { regular, quasi_regular, standard, s_tilde, d_tilde, bar, incomplete_bar };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::regular;
  std::int64_t p1 = 1, p2 = 0;  // (r) / (r,i) / (A) / (l,k) depending on kind
  int rotation = 0;             // multiples of pi/3, clockwise
  int anchor_a = 0, anchor_b = 0;  // lattice translation applied after rotation
};

inline std::vector<FaceCoord> shape_cells(const ShapeSpec& spec) {
  std::vector<FaceCoord> cells;
  switch (spec.kind) {
    case ShapeKind::regular: {
      if (spec.p1 < 1) throw std::invalid_argument("hexagon radius must be >= 1");
      cells = fill_cells(6 * spec.p1 * spec.p1);
      break;
    }
    case ShapeKind::quasi_regular: {
      std::int64_t r = spec.p1, i = spec.p2;
      if (r < 1) throw std::invalid_argument("hexagon radius must be >= 1");
      if (i < 0 || i > 6) throw std::invalid_argument("bar count must be in 0..6");
      auto lens = bar_lengths(r);
      std::int64_t n = 6 * r * r;
      for (std::int64_t j = 0; j < i; ++j) n += lens[j];
      cells = fill_cells(n);
      break;
    }
    case ShapeKind::standard: {
      cells = fill_cells(spec.p1);
      break;
    }
    case ShapeKind::s_tilde: {
      cells = fill_cells(spec.p1);
      break;
    }
    case ShapeKind::d_tilde: {
      auto [r, i, k] = decompose_area(spec.p1);
      if (k != 2 || bar_lengths(r)[i] < 3)
        throw std::invalid_argument("defective shape needs a two-cell incomplete bar");
      cells = fill_cells(spec.p1 - 2);
      auto ring = ring_cells(static_cast<int>(r));
      std::int64_t off = 0;
      auto lens = bar_lengths(r);
      for (std::int64_t j = 0; j < i; ++j) off += lens[j];
      cells.push_back(ring[off]);      // first cell of the open bar
      cells.push_back(ring[off + 2]);  // third cell: distance 2 along the side
      break;
    }
    case ShapeKind::bar: {
      if (spec.p1 < 1) throw std::invalid_argument("bar length must be >= 1");
      for (std::int64_t j = 0; j < spec.p1; ++j)
        cells.push_back({static_cast<int>(j / 2), 0, j % 2 == 0});
      break;
    }
    case ShapeKind::incomplete_bar: {
      std::int64_t l = spec.p1, k = spec.p2;
      if (l < 1) throw std::invalid_argument("bar length must be >= 1");
      if (k < 0 || k > l - 1)
        throw std::invalid_argument("incomplete bar cannot exceed its supporting bar");
      for (std::int64_t j = 0; j < l; ++j)
        cells.push_back({static_cast<int>(j / 2), 0, j % 2 == 0});
      // second row grows from the left corner end, trapeze-first
      for (std::int64_t j = 0; j < k; ++j)
        cells.push_back({static_cast<int>(j / 2), 1, j % 2 == 0});
      break;
    }
  }
  return cells;
}

inline Configuration build_shape(const HexLattice& lat, const ShapeSpec& spec) {
  Configuration cfg;
  for (const FaceCoord& c : shape_cells(spec)) {
    FaceCoord f = translate(apply_symmetry(c, spec.rotation % 6), spec.anchor_a, spec.anchor_b);
    SiteId s = lat.site(f);
    if (s == kExterior || !lat.is_interior(s))
      throw std::invalid_argument("shape placement exceeds the interior hexagon");
    cfg.set(s);
  }
  return cfg;
}

// ---- shape spec strings: E(2), EB(1,5), S(21), St(21), Dt(21), B(4), IB(4,2) ----

inline ShapeSpec parse_shape(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw std::invalid_argument("malformed shape spec: " + text);
  std::string name = s.substr(0, open);
  std::string args = s.substr(open + 1, s.size() - open - 2);
  std::vector<std::int64_t> vals;
  std::size_t pos = 0;
  while (pos < args.size()) {
    std::size_t comma = args.find(',', pos);
    if (comma == std::string::npos) comma = args.size();
    vals.push_back(std::stoll(args.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  ShapeSpec spec;
  auto need = [&](std::size_t n) {
    if (vals.size() != n) throw std::invalid_argument("wrong argument count in shape spec: " + text);
  };
  if (name == "E") {
    need(1);
    spec.kind = ShapeKind::regular;
    spec.p1 = vals[0];
  } else if (name == "EB") {
    need(2);
    spec.kind = ShapeKind::quasi_regular;
    spec.p1 = vals[0];
    spec.p2 = vals[1];
  } else if (name == "S") {
    need(1);
    spec.kind = ShapeKind::standard;
    spec.p1 = vals[0];
  } else if (name == "St") {
    need(1);
    spec.kind = ShapeKind::s_tilde;
    spec.p1 = vals[0];
  } else if (name == "Dt") {
    need(1);
    spec.kind = ShapeKind::d_tilde;
    spec.p1 = vals[0];
  } else if (name == "B") {
    need(1);
    spec.kind = ShapeKind::bar;
    spec.p1 = vals[0];
  } else if (name == "IB") {
    need(2);
    spec.kind = ShapeKind::incomplete_bar;
    spec.p1 = vals[0];
    spec.p2 = vals[1];
  } else {
    throw std::invalid_argument("unknown shape kind: " + text);
  }
  return spec;
}

// ---- corners ----

// Boundary vertices with internal angle 2pi/3, each reported as the pair of
// cluster faces flanking the angle.
inline std::vector<std::pair<SiteId, SiteId>> corners(const HexLattice& lat, const Cluster& cl) {
  std::vector<std::pair<SiteId, SiteId>> out;
  for (const BoundaryWalk& w : boundary_walks(lat, cl)) {
    int n = w.length();
    for (int j = 0; j < n; ++j) {
      if (w.angles[j] != 2) continue;
      SiteId x = lat.site(w.faces[j]);
      SiteId y = lat.site(w.faces[(j + 1) % n]);
      out.emplace_back(x, y);
    }
  }
  return out;
}

// ---- protocritical seeds ----

struct SeedSet {
  std::vector<Configuration> seeds;
  bool small_lattice = false;  // L <= 2 r* + 3: boundary effects may spoil nucleation
};

inline SeedSet protocritical_seeds(const Params& p, const HexLattice& lat, bool canonical = false) {
  CriticalQuantities cq = critical_quantities(p);
  SeedSet out;
  out.small_lattice = lat.L() <= 2 * cq.r_star + 3;
  std::int64_t A = cq.A_star - 1;
  const std::array<std::vector<FaceCoord>, 2> classes = {
      shape_cells({ShapeKind::s_tilde, A, 0, 0, 0, 0}),
      shape_cells({ShapeKind::d_tilde, A, 0, 0, 0, 0}),
  };

  auto place = [&](const std::vector<FaceCoord>& cells, int g, int ta,
                   int tb) -> std::pair<bool, Configuration> {
    Configuration cfg;
    for (const FaceCoord& c : cells) {
      SiteId s = lat.site(translate(apply_symmetry(c, g), ta, tb));
      if (s == kExterior || !lat.is_interior(s)) return {false, cfg};
      cfg.set(s);
    }
    return {true, cfg};
  };

  int span = 3 * lat.L();
  std::set<std::array<std::uint64_t, 4>> dedup;
  for (const auto& cells : classes) {
    bool done = false;
    for (int g = 0; g < 6 && !done; ++g)
      for (int ta = -span; ta <= span && !done; ++ta)
        for (int tb = -span; tb <= span && !done; ++tb) {
          auto [ok, cfg] = place(cells, g, ta, tb);
          if (!ok) continue;
          if (canonical) {
            // the origin placement comes first in scan order only by luck,
            // so try it explicitly before falling back to the scan
            auto [ok0, cfg0] = place(cells, 0, 0, 0);
            out.seeds.push_back(ok0 ? cfg0 : cfg);
            done = true;
          } else if (dedup.insert(cfg.w).second) {
            out.seeds.push_back(cfg);
          }
        }
  }
  return out;
}

}  // namespace khex
