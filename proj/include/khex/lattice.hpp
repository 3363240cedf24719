#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace khex {

using SiteId = std::int16_t;
constexpr SiteId kExterior = -1;

// Triangular face of the dual lattice. An up-face U(a,b) has corner vertices
// (a,b), (a+1,b), (a,b+1); a down-face D(a,b) has (a+1,b), (a,b+1), (a+1,b+1).
struct FaceCoord {
  int a = 0;
  int b = 0;
  bool up = true;

  friend bool operator==(const FaceCoord& x, const FaceCoord& y) {
    return x.a == y.a && x.b == y.b && x.up == y.up;
  }
  friend bool operator<(const FaceCoord& x, const FaceCoord& y) {
    if (x.b != y.b) return x.b < y.b;
    if (x.a != y.a) return x.a < y.a;
    return x.up && !y.up;
  }
};

inline std::array<FaceCoord, 3> face_neighbors(const FaceCoord& f) {
  if (f.up) return {FaceCoord{f.a, f.b, false}, FaceCoord{f.a - 1, f.b, false}, FaceCoord{f.a, f.b - 1, false}};
  return {FaceCoord{f.a, f.b, true}, FaceCoord{f.a + 1, f.b, true}, FaceCoord{f.a, f.b + 1, true}};
}

inline int vertex_norm(int a, int b) {
  return std::max({std::abs(a), std::abs(b), std::abs(a + b)});
}

// Containment in the radius-L hexagon of faces: all three corner vertices at
// norm <= L.
inline bool in_hexagon(const FaceCoord& f, int L) {
  if (f.up)
    return vertex_norm(f.a, f.b) <= L && vertex_norm(f.a + 1, f.b) <= L && vertex_norm(f.a, f.b + 1) <= L;
  return vertex_norm(f.a + 1, f.b) <= L && vertex_norm(f.a, f.b + 1) <= L && vertex_norm(f.a + 1, f.b + 1) <= L;
}

// Clockwise rotation by pi/3 about the central lattice vertex.
inline FaceCoord rot60(const FaceCoord& f) {
  if (f.up) return FaceCoord{f.a + f.b, -f.a - 1, false};
  return FaceCoord{f.a + f.b + 1, -f.a - 1, true};
}

// Reflection swapping the two axial directions.
inline FaceCoord reflect(const FaceCoord& f) { return FaceCoord{f.b, f.a, f.up}; }

inline FaceCoord translate(const FaceCoord& f, int ta, int tb) {
  return FaceCoord{f.a + ta, f.b + tb, f.up};
}

// g in 0..11: rot60^(g%6), with a reflection first when g >= 6.
inline FaceCoord apply_symmetry(const FaceCoord& f, int g) {
  FaceCoord r = (g >= 6) ? reflect(f) : f;
  for (int k = 0; k < g % 6; ++k) r = rot60(r);
  return r;
}

// Lane coordinates: three families of parallel face rows; the graph distance
// between faces is the sum of absolute lane differences.
inline std::array<int, 3> lanes(const FaceCoord& f) {
  return {f.a, f.b, f.a + f.b + (f.up ? 0 : 1)};
}

enum class BondKind : std::uint8_t { interior, out, in };

struct OrientedBond {
  SiteId from = kExterior;
  SiteId to = kExterior;
  BondKind kind = BondKind::interior;
};

class HexLattice {
 public:
  explicit HexLattice(int L) : L_(L) {
    if (L < 1) throw std::invalid_argument("lattice radius must be >= 1");
    if (L > 6) throw std::invalid_argument("lattice radius > 6 exceeds the 256-site configuration words");
    build();
  }

  int L() const { return L_; }
  int n_sites() const { return static_cast<int>(faces_.size()); }
  int n_interior() const { return n_interior_; }
  const std::vector<FaceCoord>& faces() const { return faces_; }
  const FaceCoord& face(SiteId s) const { return faces_[s]; }
  bool is_interior(SiteId s) const { return interior_[s]; }
  bool is_boundary(SiteId s) const { return !interior_[s]; }

  SiteId site(const FaceCoord& f) const {
    auto it = index_.find(key(f));
    return it == index_.end() ? kExterior : it->second;
  }
  SiteId site_checked(const FaceCoord& f) const {
    SiteId s = site(f);
    if (s == kExterior) throw std::out_of_range("face not in the lattice");
    return s;
  }

  // Lattice neighbors of s; restrict_interior limits the result to the
  // interior hexagon.
  std::vector<SiteId> neighbors(SiteId s, bool restrict_interior = false) const {
    check(s);
    std::vector<SiteId> out;
    for (SiteId n : nbr_[s])
      if (n != kExterior && (!restrict_interior || interior_[n])) out.push_back(n);
    return out;
  }

  const std::array<SiteId, 3>& raw_neighbors(SiteId s) const { return nbr_[s]; }
  // Neighbors sharing an energy-carrying bond (both endpoints interior).
  const std::array<SiteId, 4>& energy_neighbors(SiteId s) const { return ebond_[s]; }

  const std::vector<OrientedBond>& oriented_bonds() const { return bonds_; }
  int count_interior_bonds() const { return n_bond_interior_; }
  int count_in_bonds() const { return n_bond_in_; }
  int count_out_bonds() const { return n_bond_out_; }
  // Number of unordered energy-carrying pairs inside the interior hexagon.
  int n_energy_pairs() const { return n_energy_pairs_; }

  int face_distance(SiteId x, SiteId y) const {
    check(x);
    check(y);
    auto lx = lanes(faces_[x]), ly = lanes(faces_[y]);
    return std::abs(lx[0] - ly[0]) + std::abs(lx[1] - ly[1]) + std::abs(lx[2] - ly[2]);
  }

  // Site permutations of the 12-element symmetry group (6 rotations x
  // optional reflection).
  const std::array<std::vector<SiteId>, 12>& symmetries() const { return perms_; }

  std::string dump_json() const {
    std::ostringstream os;
    os << "{\"L\":" << L_ << ",\"sites\":[";
    for (int s = 0; s < n_sites(); ++s) {
      const FaceCoord& f = faces_[s];
      os << (s ? "," : "") << "{\"id\":" << s << ",\"a\":" << f.a << ",\"b\":" << f.b
         << ",\"t\":\"" << (f.up ? "up" : "down") << "\",\"region\":\""
         << (interior_[s] ? "interior" : "boundary") << "\"}";
    }
    os << "],\"bonds\":[";
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      const OrientedBond& b = bonds_[i];
      const char* k = b.kind == BondKind::interior ? "interior" : (b.kind == BondKind::out ? "out" : "in");
      os << (i ? "," : "") << "{\"from\":" << b.from << ",\"to\":" << b.to << ",\"kind\":\"" << k << "\"}";
    }
    os << "]}";
    return os.str();
  }

 private:
  static std::uint32_t key(const FaceCoord& f) {
    return (static_cast<std::uint32_t>(f.a + 64) << 16) | (static_cast<std::uint32_t>(f.b + 64) << 1) |
           (f.up ? 1u : 0u);
  }

  void check(SiteId s) const {
    if (s < 0 || s >= n_sites()) throw std::out_of_range("unknown site id");
  }

  void build() {
    const int W = L_ + 2;
    std::vector<FaceCoord> all;
    for (int b = -W; b <= W; ++b)
      for (int a = -W; a <= W; ++a)
        for (bool up : {true, false}) {
          FaceCoord f{a, b, up};
          if (in_hexagon(f, L_)) {
            all.push_back(f);
          } else {
            for (const FaceCoord& n : face_neighbors(f))
              if (in_hexagon(n, L_)) {
                all.push_back(f);
                break;
              }
          }
        }
    std::sort(all.begin(), all.end());
    faces_ = std::move(all);
    if (faces_.size() > 256) throw std::logic_error("site count exceeds configuration capacity");
    interior_.resize(faces_.size());
    for (std::size_t s = 0; s < faces_.size(); ++s) {
      index_.emplace(key(faces_[s]), static_cast<SiteId>(s));
      interior_[s] = in_hexagon(faces_[s], L_);
    }
    n_interior_ = static_cast<int>(std::count(interior_.begin(), interior_.end(), true));

    nbr_.resize(faces_.size());
    ebond_.resize(faces_.size());
    for (int s = 0; s < n_sites(); ++s) {
      auto geo = face_neighbors(faces_[s]);
      int ne = 0;
      ebond_[s] = {kExterior, kExterior, kExterior, 0};
      for (int k = 0; k < 3; ++k) {
        nbr_[s][k] = site(geo[k]);
        if (interior_[s] && nbr_[s][k] != kExterior && interior_[nbr_[s][k]]) ebond_[s][ne++] = nbr_[s][k];
      }
      ebond_[s][3] = static_cast<SiteId>(ne);
    }

    for (int s = 0; s < n_sites(); ++s)
      for (SiteId n : nbr_[s])
        if (n != kExterior) {
          bonds_.push_back({static_cast<SiteId>(s), n, BondKind::interior});
          ++n_bond_interior_;
          if (interior_[s] && interior_[n] && s < n) ++n_energy_pairs_;
        } else {
          bonds_.push_back({static_cast<SiteId>(s), kExterior, BondKind::out});
          ++n_bond_out_;
        }
    for (int s = 0; s < n_sites(); ++s)
      for (SiteId n : nbr_[s])
        if (n == kExterior) {
          bonds_.push_back({kExterior, static_cast<SiteId>(s), BondKind::in});
          ++n_bond_in_;
        }

    for (int g = 0; g < 12; ++g) {
      perms_[g].resize(faces_.size());
      for (int s = 0; s < n_sites(); ++s) {
        SiteId t = site(apply_symmetry(faces_[s], g));
        if (t == kExterior) throw std::logic_error("symmetry does not preserve the lattice");
        perms_[g][s] = t;
      }
    }
  }

  int L_;
  int n_interior_ = 0;
  int n_bond_interior_ = 0, n_bond_in_ = 0, n_bond_out_ = 0;
  int n_energy_pairs_ = 0;
  std::vector<FaceCoord> faces_;
  std::vector<bool> interior_;
  std::unordered_map<std::uint32_t, SiteId> index_;
  std::vector<std::array<SiteId, 3>> nbr_;
  std::vector<std::array<SiteId, 4>> ebond_;  // [0..2] ids, [3] count
  std::vector<OrientedBond> bonds_;
  std::array<std::vector<SiteId>, 12> perms_;
};

inline HexLattice build_lattice(int L) { return HexLattice(L); }

}  // namespace khex
