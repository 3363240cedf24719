#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "catch2/catch_amalgamated.hpp"
#include "khex/landscape.hpp"
#include "khex/reduce.hpp"

using namespace khex;

namespace {

constexpr std::int64_t kNoCutoff = std::numeric_limits<std::int64_t>::max() / 4;

Configuration from_cells(const HexLattice& lat, const std::vector<FaceCoord>& cells) {
  Configuration cfg;
  for (const FaceCoord& f : cells) cfg.set(lat.site_checked(f));
  return cfg;
}

// ---- exhaustive 12-site reference machinery ----

struct TinySpace {
  HexLattice lat{1};
  Params p = make_params(1.0, 1.36, 1.0);
  std::vector<std::int64_t> h;                  // energy per mask
  std::vector<std::vector<std::uint16_t>> adj;  // distinct single-move images

  TinySpace() {
    h.resize(4096);
    adj.resize(4096);
    for (std::uint32_t m = 0; m < 4096; ++m) {
      Configuration cfg = config_of(m);
      h[m] = hamiltonian_grid(lat, cfg, p);
      std::set<std::uint16_t> images;
      for (const MoveEval& me : enumerate_moves(lat, cfg, p))
        if (me.changes_state) images.insert(mask_of(apply_move(lat, cfg, me.move)));
      adj[m].assign(images.begin(), images.end());
    }
  }

  Configuration config_of(std::uint32_t m) const {
    Configuration cfg;
    for (int s = 0; s < 12; ++s)
      if (m >> s & 1) cfg.set(static_cast<SiteId>(s));
    return cfg;
  }
  std::uint16_t mask_of(const Configuration& cfg) const {
    std::uint16_t m = 0;
    for (int s = 0; s < 12; ++s)
      if (cfg.test(static_cast<SiteId>(s))) m |= std::uint16_t(1) << s;
    return m;
  }

  struct Dsu {
    std::vector<int> up;
    explicit Dsu(int n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int x) { return up[x] == x ? x : up[x] = find(up[x]); }
    void join(int x, int y) { up[find(x)] = find(y); }
  };

  // smallest threshold at which a and b are connected within {H <= theta}
  std::int64_t phi_oracle(std::uint16_t a, std::uint16_t b) const {
    std::vector<std::uint16_t> order(4096);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::uint16_t x, std::uint16_t y) { return h[x] < h[y]; });
    Dsu dsu(4096);
    std::vector<bool> active(4096, false);
    std::size_t i = 0;
    while (i < order.size()) {
      std::int64_t level = h[order[i]];
      while (i < order.size() && h[order[i]] == level) {
        std::uint16_t m = order[i++];
        active[m] = true;
        for (std::uint16_t n : adj[m])
          if (active[n]) dsu.join(m, n);
      }
      if (active[a] && active[b] && dsu.find(a) == dsu.find(b)) return level;
    }
    return -1;
  }

  // minimax barrier from src down to any strictly lower state
  std::pair<std::int64_t, bool> v_oracle(std::uint16_t src) const {
    std::vector<std::int64_t> best(4096, std::numeric_limits<std::int64_t>::max());
    using Entry = std::pair<std::int64_t, std::uint16_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    best[src] = h[src];
    pq.push({h[src], src});
    while (!pq.empty()) {
      auto [b, m] = pq.top();
      pq.pop();
      if (b > best[m]) continue;
      if (h[m] < h[src]) return {b - h[src], false};
      for (std::uint16_t n : adj[m]) {
        std::int64_t cand = std::max(b, h[n]);
        if (cand < best[n]) {
          best[n] = cand;
          pq.push({cand, n});
        }
      }
    }
    return {0, true};
  }

  std::set<std::uint16_t> cycle_oracle(std::uint16_t src, std::int64_t cutoff) const {
    std::set<std::uint16_t> members{src};
    if (h[src] >= cutoff) return members;
    std::vector<std::uint16_t> stack{src};
    while (!stack.empty()) {
      std::uint16_t m = stack.back();
      stack.pop_back();
      for (std::uint16_t n : adj[m]) {
        if (h[n] >= cutoff || members.count(n)) continue;
        members.insert(n);
        stack.push_back(n);
      }
    }
    return members;
  }
};

}  // namespace

TEST_CASE("communication height matches the exhaustive threshold oracle") {
  TinySpace t;
  Xoshiro256 rng(2718);

  // the canonical pair first
  Configuration empty;
  Configuration full;
  for (SiteId s = 0; s < t.lat.n_sites(); ++s)
    if (t.lat.is_interior(s)) full.set(s);
  auto res = communication_height(t.lat, empty, full, t.p, kNoCutoff, {});
  CHECK(res.complete());
  CHECK(res.phi_g == 416);
  CHECK(res.phi_g == t.phi_oracle(0, t.mask_of(full)));
  REQUIRE(res.witness.length() >= 2);
  CHECK(validate_path(t.lat, res.witness, t.p));
  CHECK(res.witness.max_energy_g == 416);
  CHECK(res.witness.configurations.front() == empty);
  CHECK(res.witness.configurations.back() == full);

  // quotient mode agrees on symmetric endpoints
  SearchOptions q;
  q.quotient = true;
  auto qres = communication_height(t.lat, empty, full, t.p, kNoCutoff, q);
  CHECK(qres.complete());
  CHECK(qres.phi_g == 416);
  CHECK(qres.explored < res.explored);

  for (int it = 0; it < 10; ++it) {
    std::uint16_t a = static_cast<std::uint16_t>(rng.below(4096));
    std::uint16_t b = static_cast<std::uint16_t>(rng.below(4096));
    auto r = communication_height(t.lat, t.config_of(a), t.config_of(b), t.p, kNoCutoff, {});
    CHECK(r.complete());
    CHECK(r.phi_g == t.phi_oracle(a, b));
    CHECK(validate_path(t.lat, r.witness, t.p));
    CHECK(r.witness.max_energy_g == r.phi_g);
  }

  // degenerate query
  auto self = communication_height(t.lat, full, full, t.p, kNoCutoff, {});
  CHECK(self.phi_g == t.h[t.mask_of(full)]);
  CHECK(self.witness.length() == 1);
}

TEST_CASE("stability level matches the exhaustive oracle") {
  TinySpace t;
  Xoshiro256 rng(31415);
  int finite_seen = 0;
  for (int it = 0; it < 20; ++it) {
    std::uint16_t m = static_cast<std::uint16_t>(rng.below(4095) + 1);
    auto [v, inf] = t.v_oracle(m);
    auto r = stability_level(t.lat, t.config_of(m), t.p, kNoCutoff, {});
    CHECK(r.complete);
    CHECK(r.infinite == inf);
    if (!inf) {
      ++finite_seen;
      CHECK(r.v_g == v);
      CHECK(validate_path(t.lat, r.witness, t.p));
      CHECK(r.witness.energies_g.back() < t.h[m]);
    }
  }
  CHECK(finite_seen > 0);

  // the empty configuration is the unique global minimum here
  Configuration empty;
  auto r0 = stability_level(t.lat, empty, t.p, kNoCutoff, {});
  CHECK(r0.infinite);
}

TEST_CASE("cycle matches the exhaustive flood oracle") {
  TinySpace t;
  Xoshiro256 rng(999);
  for (int it = 0; it < 10; ++it) {
    std::uint16_t m = static_cast<std::uint16_t>(rng.below(4096));
    std::int64_t cutoff = t.h[rng.below(4096)] + 1;
    auto want = t.cycle_oracle(m, cutoff);
    auto r = cycle(t.lat, t.config_of(m), t.p, cutoff);
    CHECK(r.complete);
    REQUIRE(r.members.size() == want.size());
    for (std::uint16_t w : want) CHECK(r.contains(t.config_of(w)));
  }
}

TEST_CASE("cycle of a strict local minimum is a singleton") {
  TinySpace t;
  Configuration full;
  for (SiteId s = 0; s < t.lat.n_sites(); ++s)
    if (t.lat.is_interior(s)) full.set(s);
  std::int64_t h_full = hamiltonian_grid(t.lat, full, t.p);
  auto r = cycle(t.lat, full, t.p, h_full);
  CHECK(r.complete);
  CHECK(r.members.size() == 1);
  CHECK(r.contains(full));
  // still a singleton just above its own level: every exit climbs
  auto r2 = cycle(t.lat, full, t.p, h_full + 1);
  CHECK(r2.members.size() == 1);
}

TEST_CASE("bounded search reports sound partial information") {
  HexLattice lat(1);
  Params p = make_params(1.0, 1.36, 1.0);
  Configuration empty;
  Configuration full;
  for (SiteId s = 0; s < lat.n_sites(); ++s)
    if (lat.is_interior(s)) full.set(s);

  // cutoff below the true barrier: explicit partial flag, lower bound only
  auto low = communication_height(lat, empty, full, p, 200, {});
  CHECK(!low.complete());
  CHECK(low.cutoff_hit);
  CHECK(low.witness.length() == 0);
  CHECK(low.phi_g <= 416);
  CHECK(low.phi_g == 272);  // the cheapest blocked level: two detached particles

  // storage cap: same soundness contract
  SearchOptions tiny;
  tiny.cap = 50;
  auto capped = communication_height(lat, empty, full, p, kNoCutoff, tiny);
  CHECK(!capped.complete());
  CHECK(capped.cap_hit);
  CHECK(capped.phi_g <= 416);

  // stability with a low ceiling degrades to a lower bound
  HexLattice lat3(3);
  Configuration e1 = build_shape(lat3, {ShapeKind::regular, 1});
  auto exact = stability_level(lat3, e1, p, kNoCutoff, {});
  CHECK(exact.complete);
  CHECK(exact.v_g == 200);
  // every exchange off E(1) costs 2U, so the cheapest blocked level is one
  // created particle at +Delta
  auto bounded = stability_level(lat3, e1, p, 300, {});
  CHECK(!bounded.complete);
  CHECK(bounded.v_g == 136);
  CHECK(bounded.v_g <= exact.v_g);
}

TEST_CASE("communication height on the larger lattice with a safe ceiling") {
  HexLattice lat(2);
  Params p = make_params(1.0, 1.36, 1.0);
  Configuration empty;
  Configuration fan = from_cells(lat, fan_cells());
  auto r = communication_height(lat, empty, fan, p, 420, {});
  CHECK(r.complete());
  CHECK(r.phi_g == 416);
  CHECK(validate_path(lat, r.witness, p));
  CHECK(r.witness.configurations.back() == fan);

  SearchOptions q;
  q.quotient = true;
  auto qr = communication_height(lat, empty, fan, p, 420, q);
  CHECK(qr.complete());
  CHECK(qr.phi_g == 416);
}

TEST_CASE("canonical form is symmetry-invariant") {
  HexLattice lat(3);
  Xoshiro256 rng(5150);
  for (int it = 0; it < 30; ++it) {
    Configuration cfg;
    for (SiteId s = 0; s < lat.n_sites(); ++s)
      if (rng.below(4) == 0) cfg.set(s);
    Configuration canon = canonical_config(lat, cfg);
    CHECK(!(cfg < canon));
    for (const auto& perm : lat.symmetries()) {
      Configuration img;
      for (SiteId s = 0; s < lat.n_sites(); ++s)
        if (cfg.test(s)) img.set(perm[s]);
      CHECK(canonical_config(lat, img) == canon);
    }
  }
}

TEST_CASE("optimal growth path hits the barrier exactly") {
  HexLattice lat(6);

  struct Case {
    double delta;
    std::int64_t gamma, a_star, h_full;
  };
  for (const Case& c : {Case{1.36, 492, 22, -1224}, Case{1.39, 570, 30, -576}}) {
    Params p = make_params(1.0, c.delta, 1.0);
    PathRecord path = reference_path(lat, p);
    CHECK(validate_path(lat, path, p));
    CHECK(path.energies_g.front() == 0);
    CHECK(path.energies_g.back() == c.h_full);
    CHECK(path.configurations.front().n_total == 0);
    CHECK(path.configurations.back().n_total == lat.n_interior());
    CHECK(path.max_energy_g == c.gamma);

    // every maximizer is the protocritical droplet plus one detached particle
    std::vector<FaceCoord> proto_cells = fill_cells(c.a_star - 1);
    std::set<FaceCoord> proto(proto_cells.begin(), proto_cells.end());
    for (int idx : path.argmax_indices) {
      const Configuration& cfg = path.configurations[idx];
      CHECK(cfg.n_total == c.a_star);
      auto fp = free_particles(lat, cfg);
      CHECK(fp.size() == 1);
      auto cls = clusters(lat, cfg);
      REQUIRE(cls.size() == 1);
      CHECK(cluster_cells(lat, cls[0]) == proto);
    }

    // states with no walker in flight realize the closed-form cluster energies
    for (int i = 0; i < path.length(); ++i) {
      const Configuration& cfg = path.configurations[i];
      if (cfg.n_total == 0 || !free_particles(lat, cfg).empty()) continue;
      CHECK(path.energies_g[i] == closed_form_energy_grid(cfg.n_total, p));
    }
  }
}

TEST_CASE("segment maxima") {
  Params p = make_params(1.0, 1.36, 1.0);

  CHECK_THROWS_AS(segment_max(0, 0, p), std::invalid_argument);
  CHECK_THROWS_AS(segment_max(1, 6, p), std::invalid_argument);
  CHECK_THROWS_AS(segment_max(1, -1, p), std::invalid_argument);

  // the opening one-cell bar peaks at its only slot
  auto s10 = segment_max(1, 0, p);
  CHECK(s10.n == 0);
  CHECK(s10.peak_g == 352);

  for (std::int64_t r = 1; r <= 3; ++r)
    for (std::int64_t i = 0; i <= 5; ++i) {
      auto sm = segment_max(r, i, p);
      if (r == 1 && i == 0) continue;
      CHECK(sm.n == 2);
    }
  CHECK(segment_max(1, 1, p).peak_g == 460);

  // subcritical rings steepen outward, supercritical rings relax
  std::int64_t prev = -1;
  for (std::int64_t i = 0; i <= 5; ++i) {
    auto sm = segment_max(1, i, p);
    CHECK(sm.peak_g > prev);
    prev = sm.peak_g;
  }
  prev = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t i = 0; i <= 5; ++i) {
    auto sm = segment_max(3, i, p);
    CHECK(sm.peak_g < prev);
    prev = sm.peak_g;
  }

  // removal from the filled ring tops out against the barrier
  auto rem = segment_max(1, 5, p, true);
  CHECK(rem.n == 2);
  CHECK(rem.peak_g == 492);
}

TEST_CASE("gate set closure") {
  Params p = make_params(1.0, 1.36, 1.0);
  HexLattice lat(6);
  GateSet gs = gate_set(p, lat);
  CHECK(gs.area == 21);
  CHECK(gs.seed_bonds == 25);
  CHECK(gs.h_seed_g == 356);
  CHECK(gs.size() == 72);
  CHECK(gs.corridor_explored == 132);

  // both protocritical classes are members
  auto st_key = detail::shape_key(shape_cells({ShapeKind::s_tilde, 21}));
  auto dt_key = detail::shape_key(shape_cells({ShapeKind::d_tilde, 21}));
  CHECK(gs.members.count(st_key) == 1);
  CHECK(gs.members.count(dt_key) == 1);
  CHECK(st_key != dt_key);

  // closed under the 12 lattice symmetries
  for (const auto& key : gs.members) {
    std::vector<FaceCoord> cells;
    cells.reserve(key.size());
    for (std::int32_t code : key) {
      int up = code & 1;
      int b = ((code >> 1) & 0x3FF) - 512;
      int a = (code >> 11) - 512;
      cells.push_back({a, b, up == 1});
    }
    for (int g = 0; g < 12; ++g) {
      std::vector<FaceCoord> img;
      img.reserve(cells.size());
      for (const FaceCoord& f : cells) img.push_back(apply_symmetry(f, g));
      CHECK(gs.members.count(detail::shape_key(std::move(img))) == 1);
    }
  }
}

TEST_CASE("gate crossing predicate") {
  Params p = make_params(1.0, 1.36, 1.0);
  HexLattice lat(6);
  GateSet gs = gate_set(p, lat);

  Configuration st = build_shape(lat, {ShapeKind::s_tilde, 21});
  Configuration with_walker = st;
  with_walker.set(lat.site_checked({4, -2, true}));
  CHECK(hamiltonian_grid(lat, with_walker, p) == 492);
  CHECK(is_gate_crossing(lat, gs, with_walker, p));

  // walker arriving over the boundary ring also counts
  Configuration ring_walker = st;
  SiteId r0 = 0;
  while (lat.is_interior(r0)) ++r0;
  ring_walker.set(r0);
  CHECK(is_gate_crossing(lat, gs, ring_walker, p));

  // attached 22nd particle: right count, wrong level, no free walker
  Configuration grown = build_shape(lat, {ShapeKind::standard, 22});
  CHECK(!is_gate_crossing(lat, gs, grown, p));
  // a 22-cell cluster at exactly the gate level still has no free walker
  Configuration loose = build_shape(lat, {ShapeKind::incomplete_bar, 12, 10, 0, -6, 0});
  CHECK(hamiltonian_grid(lat, loose, p) == 492);
  CHECK(loose.n_total == 22);
  CHECK(!is_gate_crossing(lat, gs, loose, p));
  // droplet alone is below the gate level
  CHECK(!is_gate_crossing(lat, gs, st, p));

  // rotated droplet with a walker stays in the gate
  Configuration rot = build_shape(lat, {ShapeKind::s_tilde, 21, 0, 1});
  rot.set(lat.site_checked({4, -2, true}));
  CHECK(is_gate_crossing(lat, gs, rot, p));
}

TEST_CASE("sub-barrier certificates for the two wells") {
  Params p = make_params(1.0, 1.36, 1.0);
  HexLattice lat(6);
  PathRecord path = reference_path(lat, p);

  // every centred quasi-regular up to four bars is reachable from empty
  // strictly below the barrier, so it belongs to the empty well there
  for (int bars = 0; bars <= 4; ++bars) {
    Configuration qr = build_shape(lat, {ShapeKind::quasi_regular, 1, bars});
    int at = -1;
    for (int i = 0; i < path.length(); ++i)
      if (path.configurations[i] == qr) {
        at = i;
        break;
      }
    REQUIRE(at >= 0);
    std::int64_t prefix_max = *std::max_element(path.energies_g.begin(),
                                                path.energies_g.begin() + at + 1);
    CHECK(prefix_max < 492);
    if (bars == 4) CHECK(prefix_max == 476);
  }

  // the filled state connects to an E(2)-containing droplet below the barrier
  Configuration e2 = from_cells(lat, fill_cells(24));
  int at24 = -1;
  for (int i = 0; i < path.length(); ++i)
    if (path.configurations[i] == e2) {
      at24 = i;
      break;
    }
  REQUIRE(at24 >= 0);
  std::int64_t suffix_max = *std::max_element(path.energies_g.begin() + at24,
                                              path.energies_g.end());
  CHECK(suffix_max == 480);
  CHECK(suffix_max < 492);
}

TEST_CASE("reducing paths across boundary classes") {
  Params p = make_params(1.0, 1.36, 1.0);
  HexLattice lat(6);
  const std::int64_t bound = p.d + p.u;

  auto run = [&](const Configuration& sigma) {
    std::int64_t h0 = hamiltonian_grid(lat, sigma, p);
    PathRecord rec = reducing_path(lat, sigma, p);
    REQUIRE(rec.length() >= 2);
    CHECK(rec.configurations.front() == sigma);
    CHECK(validate_path(lat, rec, p));
    CHECK(rec.max_energy_g <= h0 + bound);
    CHECK(rec.energies_g.back() < h0);
    return std::pair<std::int64_t, std::int64_t>{rec.max_energy_g - h0,
                                                 rec.energies_g.back() - h0};
  };

  SECTION("detached particles") {
    Configuration one;
    one.set(lat.site_checked({3, -1, true}));
    auto [peak, end] = run(one);
    CHECK(peak == 0);
    CHECK(end == -p.d);

    Configuration ring;
    SiteId r0 = 0;
    while (lat.is_interior(r0)) ++r0;
    ring.set(r0);
    auto [rpeak, rend] = run(ring);
    CHECK(rpeak == 0);
    CHECK(rend == -p.d);
  }

  SECTION("sharp tip") {
    Configuration s7 = build_shape(lat, {ShapeKind::standard, 7});
    auto [peak, end] = run(s7);
    CHECK(peak <= p.u);
    CHECK(end < 0);
  }

  SECTION("interacting pair bridges inward") {
    std::vector<FaceCoord> cells = fan_cells();
    cells.push_back({1, 0, true});
    cells.push_back({1, 0, false});
    Configuration sigma = from_cells(lat, cells);
    auto cls = clusters(lat, sigma);
    REQUIRE(cls.size() == 2);
    REQUIRE(interacting(lat, cls[0], cls[1]));
    // detach one dimer cell (+U), walk it over, rebond both to the fan
    auto [peak, end] = run(sigma);
    CHECK(peak == p.u);
    CHECK(end == -p.u);
  }

  SECTION("internal hole migrates to the rim") {
    std::vector<FaceCoord> cells = shape_cells({ShapeKind::regular, 2});
    cells.erase(std::find(cells.begin(), cells.end(), FaceCoord{0, 0, true}));
    Configuration sigma = from_cells(lat, cells);
    auto [peak, end] = run(sigma);
    CHECK(peak == 0);
    CHECK(end == -p.u);
  }

  SECTION("annulus") {
    Configuration sigma = from_cells(lat, ring_cells(1));
    auto [peak, end] = run(sigma);
    CHECK(peak <= bound);
    CHECK(end < 0);
  }

  SECTION("subcritical hexagon dismantles") {
    Configuration e1 = build_shape(lat, {ShapeKind::regular, 1});
    auto [peak, end] = run(e1);
    CHECK(peak == 200);
    CHECK(end < 0);
  }

  SECTION("supercritical hexagons grow") {
    Configuration e2 = build_shape(lat, {ShapeKind::regular, 2});
    auto [peak2, end2] = run(e2);
    CHECK(peak2 == 216);
    CHECK(end2 < 0);

    Configuration e3 = build_shape(lat, {ShapeKind::regular, 3});
    auto [peak3, end3] = run(e3);
    CHECK(peak3 == 208);
    CHECK(end3 < 0);
  }

  SECTION("quasi-regular shapes of both branches") {
    for (std::int64_t i : {1, 3, 5}) {
      Configuration z = build_shape(lat, {ShapeKind::quasi_regular, 1, i});
      auto [peak, end] = run(z);
      CHECK(peak <= bound);
      CHECK(end < 0);
    }
    Configuration z2 = build_shape(lat, {ShapeKind::quasi_regular, 2, 2});
    auto [peak, end] = run(z2);
    CHECK(peak <= bound);
    CHECK(end < 0);
  }

  SECTION("bars and defective droplets") {
    for (const char* spec : {"B(5)", "IB(4,3)", "St(21)", "Dt(21)"}) {
      Configuration sigma = build_shape(lat, parse_shape(spec));
      auto [peak, end] = run(sigma);
      CHECK(peak <= bound);
      CHECK(end < 0);
    }
  }

  SECTION("rejects the two ground configurations") {
    Configuration empty;
    CHECK_THROWS_AS(reducing_path(lat, empty, p), std::invalid_argument);
    HexLattice small(1);
    Configuration full;
    for (SiteId s = 0; s < small.n_sites(); ++s)
      if (small.is_interior(s)) full.set(s);
    CHECK_THROWS_AS(reducing_path(small, full, p), std::invalid_argument);
  }
}
