#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "catch2/catch_amalgamated.hpp"
#include "khex/lattice.hpp"

using namespace khex;

TEST_CASE("face coordinate membership") {
  // E(1) is the fan of six faces around the origin vertex.
  std::set<FaceCoord> e1;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int up = 0; up < 2; ++up)
        if (in_hexagon({a, b, up == 1}, 1)) e1.insert({a, b, up == 1});
  CHECK(e1.size() == 6);
  std::set<FaceCoord> fan = {{0, 0, true},  {-1, 0, true},  {0, -1, true},
                             {-1, 0, false}, {-1, -1, false}, {0, -1, false}};
  CHECK(e1 == fan);
  CHECK(e1.count({1, 0, true}) == 0);
  CHECK(e1.count({0, 0, false}) == 0);
}

TEST_CASE("face adjacency is symmetric and orientation-alternating") {
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int up = 0; up < 2; ++up) {
        FaceCoord f{a, b, up == 1};
        auto nb = face_neighbors(f);
        for (const FaceCoord& n : nb) {
          CHECK(n.up != f.up);
          auto back = face_neighbors(n);
          CHECK(std::count(back.begin(), back.end(), f) == 1);
        }
        CHECK(std::set<FaceCoord>(nb.begin(), nb.end()).size() == 3);
      }
}

TEST_CASE("lattice site counts") {
  for (int L = 1; L <= 6; ++L) {
    HexLattice lat(L);
    CHECK(lat.L() == L);
    CHECK(lat.n_interior() == 6 * L * L);
    CHECK(lat.n_sites() == 6 * L * L + 6 * L);
    int ring = 0;
    for (SiteId s = 0; s < lat.n_sites(); ++s)
      if (lat.is_boundary(s)) ++ring;
    CHECK(ring == 6 * L);
  }
}

TEST_CASE("bond census") {
  for (int L : {1, 2, 3, 6}) {
    HexLattice lat(L);
    CHECK(static_cast<int>(lat.oriented_bonds().size()) == 18 * L * L + 30 * L);
    CHECK(lat.count_interior_bonds() == 18 * L * L + 6 * L);
    CHECK(lat.count_in_bonds() == 12 * L);
    CHECK(lat.count_out_bonds() == 12 * L);
    CHECK(lat.count_interior_bonds() + lat.count_in_bonds() + lat.count_out_bonds() ==
          static_cast<int>(lat.oriented_bonds().size()));
    CHECK(lat.n_energy_pairs() == 9 * L * L - 3 * L);
  }
}

TEST_CASE("boundary ring structure") {
  HexLattice lat(3);
  int in_bonds_seen = 0, out_bonds_seen = 0;
  std::map<SiteId, int> in_per_site, out_per_site;
  for (const OrientedBond& b : lat.oriented_bonds()) {
    switch (b.kind) {
      case BondKind::interior:
        CHECK(b.from != kExterior);
        CHECK(b.to != kExterior);
        break;
      case BondKind::in:
        CHECK(b.from == kExterior);
        CHECK(lat.is_boundary(b.to));
        ++in_per_site[b.to];
        ++in_bonds_seen;
        break;
      case BondKind::out:
        CHECK(lat.is_boundary(b.from));
        CHECK(b.to == kExterior);
        ++out_per_site[b.from];
        ++out_bonds_seen;
        break;
    }
  }
  CHECK(in_bonds_seen == lat.count_in_bonds());
  CHECK(out_bonds_seen == lat.count_out_bonds());
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    auto raw = lat.raw_neighbors(s);
    int valid = 0, interior_nb = 0, ring_nb = 0;
    for (SiteId n : raw)
      if (n != kExterior) {
        ++valid;
        (lat.is_interior(n) ? interior_nb : ring_nb)++;
      }
    if (lat.is_boundary(s)) {
      // one interior neighbor, two exterior stubs, no ring-ring adjacency
      CHECK(valid == 1);
      CHECK(interior_nb == 1);
      CHECK(in_per_site[s] == 2);
      CHECK(out_per_site[s] == 2);
      CHECK(lat.energy_neighbors(s)[3] == 0);
    } else {
      CHECK(valid == 3);
    }
  }
}

TEST_CASE("energy neighbors are the interior-interior adjacencies") {
  HexLattice lat(2);
  int pairs = 0;
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    const auto& eb = lat.energy_neighbors(s);
    for (int i = 0; i < eb[3]; ++i) {
      SiteId t = eb[i];
      CHECK(lat.is_interior(s));
      CHECK(lat.is_interior(t));
      auto raw = lat.raw_neighbors(s);
      CHECK(std::count(raw.begin(), raw.end(), t) == 1);
      if (s < t) ++pairs;
    }
  }
  CHECK(pairs == lat.n_energy_pairs());
}

TEST_CASE("face distance equals interior graph distance") {
  HexLattice lat(2);
  // BFS over interior adjacency, compared on all interior pairs; E(L) is
  // convex so the free-plane metric is achieved inside.
  for (SiteId s0 = 0; s0 < lat.n_sites(); ++s0) {
    if (!lat.is_interior(s0)) continue;
    std::vector<int> dist(lat.n_sites(), -1);
    std::queue<SiteId> q;
    dist[s0] = 0;
    q.push(s0);
    while (!q.empty()) {
      SiteId x = q.front();
      q.pop();
      for (SiteId n : lat.raw_neighbors(x))
        if (n != kExterior && lat.is_interior(n) && dist[n] < 0) {
          dist[n] = dist[x] + 1;
          q.push(n);
        }
    }
    for (SiteId s1 = 0; s1 < lat.n_sites(); ++s1)
      if (lat.is_interior(s1)) CHECK(lat.face_distance(s0, s1) == dist[s1]);
  }
}

TEST_CASE("site and face lookups invert each other") {
  HexLattice lat(3);
  for (SiteId s = 0; s < lat.n_sites(); ++s) CHECK(lat.site(lat.face(s)) == s);
  CHECK(lat.site({99, 0, true}) == kExterior);
  CHECK_THROWS_AS(lat.site_checked({99, 0, true}), std::out_of_range);
}

TEST_CASE("symmetry group acts by adjacency-preserving permutations") {
  HexLattice lat(2);
  const auto& perms = lat.symmetries();
  REQUIRE(perms.size() == 12);
  for (int g = 0; g < 12; ++g) {
    const auto& p = perms[g];
    REQUIRE(static_cast<int>(p.size()) == lat.n_sites());
    std::vector<bool> hit(lat.n_sites(), false);
    for (SiteId s = 0; s < lat.n_sites(); ++s) {
      CHECK(!hit[p[s]]);
      hit[p[s]] = true;
      CHECK(lat.is_interior(p[s]) == lat.is_interior(s));
    }
    // adjacency preserved
    for (SiteId s = 0; s < lat.n_sites(); ++s)
      for (SiteId n : lat.raw_neighbors(s)) {
        if (n == kExterior) continue;
        auto img = lat.raw_neighbors(p[s]);
        CHECK(std::count(img.begin(), img.end(), p[n]) == 1);
      }
  }
  // identity is element 0
  for (SiteId s = 0; s < lat.n_sites(); ++s) CHECK(perms[0][s] == s);
  // the 12 permutations are pairwise distinct
  std::set<std::vector<SiteId>> distinct(perms.begin(), perms.end());
  CHECK(distinct.size() == 12);
}

TEST_CASE("rotation by one step has order six") {
  HexLattice lat(2);
  FaceCoord f{1, 0, true};
  FaceCoord g = f;
  for (int k = 0; k < 6; ++k) g = apply_symmetry(g, 1);
  CHECK(g == f);
}

TEST_CASE("lattice json dump round-trips basic counts") {
  HexLattice lat(1);
  std::string js = lat.dump_json();
  CHECK(js.find("\"L\":1") != std::string::npos);
  CHECK(js.find("\"sites\"") != std::string::npos);
  CHECK(js.find("\"bonds\"") != std::string::npos);
}
