// Command-line driver for the hexagonal Kawasaki lattice gas: critical
// constants, single trajectories, nucleation sweeps, droplet fates,
// recurrence checks, landscape queries and a built-in verifier.
//
// Plan files are plain-text "key = value" lines. Every run echoes its
// effective plan, seed base included, so outputs replay byte-identically.
// KHEX_SEED sets the default seed base and is always echoed.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "khex/config.hpp"
#include "khex/dynamics.hpp"
#include "khex/energy.hpp"
#include "khex/landscape.hpp"
#include "khex/lattice.hpp"
#include "khex/params.hpp"
#include "khex/reduce.hpp"
#include "khex/shapes.hpp"

using namespace khex;
using nlohmann::json;

namespace {

constexpr std::int64_t kNoCutoff = std::numeric_limits<std::int64_t>::max() / 4;

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.10g", v);
  return b;
}

std::string fmt_seed(std::uint64_t s) {
  char b[24];
  std::snprintf(b, sizeof b, "0x%llX", static_cast<unsigned long long>(s));
  return b;
}

std::int64_t exp_steps(double exponent) {
  if (exponent > 42.0) return kNoCutoff;
  return static_cast<std::int64_t>(std::ceil(std::exp(exponent)));
}

// ---- experiment plans ----

struct Plan {
  std::string command;
  double U = 1.0, Delta = 1.36, grid = 0.0;
  double beta = 3.5, eps = 0.3;
  int L = 6;
  std::vector<double> betas;
  int reps = 0;  // 0: command default
  std::uint64_t seed = 0x5EEDBA5Eull;
  std::string seed_src = "default";
  std::string start, from = "empty", to = "full", target = "both";
  std::int64_t max_steps = 0;  // 0: command default
  double steps_mult = 60.0;
  std::int64_t sample_every = 0;
  std::int64_t cap = 10'000'000;
  double cutoff = 0.0;
  bool has_cutoff = false;
  bool symmetry = false;
  bool stop_on_cap = false;
  bool monitor = false;
  bool witness = false;
  std::string out;  // CSV/JSON destination, empty = stdout
};

std::map<std::string, std::string> read_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw std::runtime_error("plan value is not a boolean: " + s);
}

std::uint64_t parse_seed(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  std::uint64_t v = std::strtoull(s.c_str(), &end, 0);
  if (s.empty() || *end != '\0' || errno == ERANGE)
    throw std::runtime_error("seed is not a 64-bit integer: " + s);
  return v;
}

// Plan-file values fill every option the command line left at its default;
// explicit flags win.
void apply_plan_file(Plan& pl, CLI::App* sub, const std::string& path) {
  auto kv = read_plan_file(path);
  auto given = [&](const char* opt) {
    const CLI::Option* o = sub->get_option_no_throw(opt);
    return o != nullptr && o->count() > 0;
  };
  auto take = [&](const char* key, const char* opt, auto&& set) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    if (!given(opt)) set(it->second);
    kv.erase(it);
  };
  if (auto it = kv.find("command"); it != kv.end()) {
    if (it->second != pl.command)
      throw std::runtime_error("plan file is for command '" + it->second + "', invoked '" +
                               pl.command + "'");
    kv.erase(it);
  }
  take("U", "--U", [&](const std::string& v) { pl.U = std::stod(v); });
  take("Delta", "--Delta", [&](const std::string& v) { pl.Delta = std::stod(v); });
  take("grid", "--grid", [&](const std::string& v) { pl.grid = std::stod(v); });
  take("beta", "--beta", [&](const std::string& v) { pl.beta = std::stod(v); });
  take("betas", "--betas", [&](const std::string& v) { pl.betas = parse_list(v); });
  take("L", "--L", [&](const std::string& v) { pl.L = std::stoi(v); });
  take("reps", "--reps", [&](const std::string& v) { pl.reps = std::stoi(v); });
  take("eps", "--eps", [&](const std::string& v) { pl.eps = std::stod(v); });
  take("seed", "--seed", [&](const std::string& v) {
    pl.seed = parse_seed(v);
    pl.seed_src = "plan";
  });
  take("start", "--start", [&](const std::string& v) { pl.start = v; });
  take("from", "--from", [&](const std::string& v) { pl.from = v; });
  take("to", "--to", [&](const std::string& v) { pl.to = v; });
  take("target", "--target", [&](const std::string& v) { pl.target = v; });
  take("max_steps", "--max-steps", [&](const std::string& v) { pl.max_steps = std::stoll(v); });
  take("steps_mult", "--steps-mult", [&](const std::string& v) { pl.steps_mult = std::stod(v); });
  take("sample_every", "--sample-every",
       [&](const std::string& v) { pl.sample_every = std::stoll(v); });
  take("cap", "--cap", [&](const std::string& v) { pl.cap = std::stoll(v); });
  take("cutoff", "--cutoff", [&](const std::string& v) {
    pl.cutoff = std::stod(v);
    pl.has_cutoff = true;
  });
  take("symmetry", "--symmetry", [&](const std::string& v) { pl.symmetry = parse_bool(v); });
  take("stop_on_cap", "--stop-on-cap",
       [&](const std::string& v) { pl.stop_on_cap = parse_bool(v); });
  take("monitor", "--monitor", [&](const std::string& v) { pl.monitor = parse_bool(v); });
  take("witness", "--witness", [&](const std::string& v) { pl.witness = parse_bool(v); });
  take("out", "--out", [&](const std::string& v) { pl.out = v; });
  if (!kv.empty()) throw std::runtime_error("unknown plan key: " + kv.begin()->first);
}

using PlanEcho = std::vector<std::pair<std::string, std::string>>;

std::string betas_str(const std::vector<double>& betas) {
  std::string s;
  for (double b : betas) s += (s.empty() ? "" : ",") + fmt(b);
  return s;
}

void echo_plan(std::ostream& os, const PlanEcho& kv, const char* prefix) {
  for (const auto& [k, v] : kv) os << prefix << k << " = " << v << "\n";
}

// ---- output streams ----

struct Out {
  std::ofstream file;
  std::ostream* os = &std::cout;
  bool to_file = false;
  explicit Out(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    os = &file;
    to_file = true;
  }
  std::ostream& s() { return *os; }
  // Summary line: '#'-prefixed in the data stream, mirrored to stdout.
  void note(const std::string& line) {
    *os << "# " << line << "\n";
    if (to_file) std::cout << line << "\n";
  }
};

// ---- start configurations ----

Configuration full_interior(const HexLattice& lat) {
  Configuration c;
  for (SiteId s = 0; s < lat.n_sites(); ++s)
    if (lat.is_interior(s)) c.set(s);
  return c;
}

// "empty", "full", or a shape spec "E(2)", "EB(1,4)", "S(21)", "B(4)",
// "IB(4,2)", optionally anchored: "S(21)@1,-2" or "S(21)@1,-2,3" (rotation).
Configuration parse_start(const HexLattice& lat, const std::string& text) {
  if (text.empty() || text == "empty") return {};
  if (text == "full") return full_interior(lat);
  std::string body = text;
  int aa = 0, bb = 0, rot = 0;
  if (auto at = body.find('@'); at != std::string::npos) {
    std::string anchor = body.substr(at + 1);
    body.erase(at);
    if (std::sscanf(anchor.c_str(), "%d,%d,%d", &aa, &bb, &rot) < 2)
      throw std::invalid_argument("start anchor must be @a,b or @a,b,rot: " + text);
  }
  ShapeSpec spec = parse_shape(body);
  spec.anchor_a = aa;
  spec.anchor_b = bb;
  spec.rotation = rot;
  return build_shape(lat, spec);
}

// ---- statistics ----

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// The 1 - 1/e sample quantile of the hitting times.
double empirical_t_beta(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t qi = static_cast<std::size_t>(
      std::ceil((1.0 - std::exp(-1.0)) * static_cast<double>(v.size())));
  qi = std::min(std::max<std::size_t>(qi, 1), v.size()) - 1;
  return v[qi];
}

struct FitResult {
  double slope = 0, half_band = 0;
  int points = 0;
  bool banded = false;  // enough points for a residual-based band
};

FitResult ols_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  FitResult f;
  f.points = static_cast<int>(xs.size());
  if (f.points < 2) return f;
  double mx = mean_of(xs), my = mean_of(ys), sxx = 0, sxy = 0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  f.slope = sxy / sxx;
  if (f.points > 2) {
    double intercept = my - f.slope * mx, ss = 0;
    for (int i = 0; i < f.points; ++i) {
      double r = ys[i] - (intercept + f.slope * xs[i]);
      ss += r * r;
    }
    f.half_band = 1.96 * std::sqrt(ss / (f.points - 2) / sxx);
    f.banded = true;
  }
  return f;
}

std::pair<double, double> wilson_ci(int k, int n) {
  if (n == 0) return {0.0, 1.0};
  const double z = 1.959964;
  double ph = static_cast<double>(k) / n, z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (ph + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---- critical ----

int cmd_critical(const Plan& pl) {
  Params p = make_params(pl.U, pl.Delta, 1.0, pl.grid);
  std::printf("U = %s  Delta = %s  grid = %s\n", fmt(p.U()).c_str(), fmt(p.Delta()).c_str(),
              fmt(p.grid).c_str());
  for (const std::string& w : validate_regime(p)) std::printf("warning: %s\n", w.c_str());
  CriticalQuantities q = critical_quantities(p);
  std::printf("r*    = %lld\n", static_cast<long long>(q.r_star));
  std::printf("delta = %s (%s branch)\n", q.delta.str().c_str(), q.high_branch ? "high" : "low");
  std::printf("A*    = %lld  (A1 = %lld, A2 = %lld, A3* = %lld)\n",
              static_cast<long long>(q.A_star), static_cast<long long>(q.A1),
              static_cast<long long>(q.A2), static_cast<long long>(q.A3_star));
  std::printf("Gamma = %s  (Gamma1 = %s, Gamma2 = %s)\n", fmt(p.energy(q.gamma_g)).c_str(),
              fmt(p.energy(q.gamma1_g)).c_str(), fmt(p.energy(q.gamma2_g)).c_str());
  std::printf("V*    = %s\n", fmt(p.energy(q.v_star_g)).c_str());
  std::printf("rbar  = %s\n", q.r_bar.str().c_str());
  std::printf("\nstandard polyiamond energies at r = %lld:\n", static_cast<long long>(q.r_star));
  std::printf("%8s %8s %10s\n", "area", "bonds", "energy");
  std::int64_t r = q.r_star;
  for (std::int64_t A : {6 * r * r + 2, 6 * r * r + 2 * r + 1, 6 * r * r + 4 * r + 2,
                         6 * r * r + 6 * r + 3, 6 * r * r + 8 * r + 4, 6 * r * r + 10 * r + 5})
    std::printf("%8lld %8lld %10s\n", static_cast<long long>(A),
                static_cast<long long>(shape_bond_count(A)), fmt(closed_form_energy(A, p)).c_str());
  return 0;
}

// ---- simulate ----

int cmd_simulate(const Plan& pl) {
  Params p = make_params(pl.U, pl.Delta, pl.beta, pl.grid);
  HexLattice lat(pl.L);
  Configuration start = parse_start(lat, pl.start);
  Target tgt = pl.target == "empty"  ? Target::empty
               : pl.target == "full" ? Target::full
                                     : Target::both;
  if (pl.target != "empty" && pl.target != "full" && pl.target != "both")
    throw std::invalid_argument("target must be empty, full or both");
  std::int64_t max_steps = pl.max_steps ? pl.max_steps : 100'000'000;
  bool sampling = pl.sample_every > 0;
  int reps = pl.reps > 0 ? pl.reps : 1;
  if (sampling && reps > 1)
    throw std::invalid_argument("sampled traces run one replica at a time");

  Out out(pl.out);
  echo_plan(out.s(),
            {{"command", "simulate"},
             {"U", fmt(p.U())},
             {"Delta", fmt(p.Delta())},
             {"grid", fmt(p.grid)},
             {"beta", fmt(p.beta)},
             {"L", std::to_string(pl.L)},
             {"start", pl.start.empty() ? "empty" : pl.start},
             {"target", pl.target},
             {"reps", std::to_string(reps)},
             {"max_steps", std::to_string(max_steps)},
             {"sample_every", std::to_string(pl.sample_every)},
             {"seed", fmt_seed(pl.seed) + " (" + pl.seed_src + ")"}},
            "# ");

  if (sampling) {
    SimState sim(lat, p, start, replica_seed(pl.seed, 0));
    out.s() << "step,n,h\n";
    out.s() << 0 << "," << sim.n_total() << "," << fmt(p.energy(sim.h_grid())) << "\n";
    Reached reached = Reached::timeout;
    auto at_target = [&]() {
      if (tgt != Target::full && sim.is_empty_config()) return std::optional(Reached::empty);
      if (tgt != Target::empty && sim.is_full_config()) return std::optional(Reached::full);
      return std::optional<Reached>();
    };
    if (auto hit = at_target()) {
      reached = *hit;
    } else {
      while (sim.steps() < max_steps) {
        bool changed = sim.step();
        if (sampling && sim.steps() % pl.sample_every == 0)
          out.s() << sim.steps() << "," << sim.n_total() << "," << fmt(p.energy(sim.h_grid()))
                  << "\n";
        if (!changed) continue;
        if (auto hit = at_target()) {
          reached = *hit;
          break;
        }
      }
    }
    out.note("reached = " + std::string(reached_name(reached)) +
             ", steps = " + std::to_string(sim.steps()) + ", n = " +
             std::to_string(sim.n_total()) + ", H = " + fmt(p.energy(sim.h_grid())));
    return 0;
  }

  // replicated hitting runs; gate columns need the critical scale to exist
  std::optional<GateSet> gs;
  GateMonitor mon{};
  try {
    CriticalQuantities q = critical_quantities(p);
    gs = gate_set(p, lat);
    mon = {static_cast<int>(q.A_star), q.gamma_g};
  } catch (const std::exception& e) {
    out.note(std::string("gate monitor off: ") + e.what());
  }
  out.s() << "seed,beta,tau,reached,gate_hit,crossing_energy\n";
  int done = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::uint64_t seed = replica_seed(pl.seed, rep);
    HittingResult hr = run_until(lat, p, start, tgt, max_steps, seed, gs ? &mon : nullptr);
    if (hr.reached != Reached::timeout) ++done;
    out.s() << seed << "," << fmt(p.beta) << "," << hr.steps << "," << reached_name(hr.reached)
            << ",";
    if (hr.crossing && gs)
      out.s() << (is_gate_crossing(lat, *gs, hr.crossing->last_config, p) ? 1 : 0);
    out.s() << ",";
    if (hr.crossing)
      out.s() << fmt(p.energy(hamiltonian_grid(lat, hr.crossing->last_config, p)));
    out.s() << "\n";
  }
  out.note("absorbed " + std::to_string(done) + "/" + std::to_string(reps) + " within " +
           std::to_string(max_steps) + " steps");
  return 0;
}

// ---- nucleation ----

int cmd_nucleation(Plan& pl) {
  Params base = make_params(pl.U, pl.Delta, 1.0, pl.grid);
  CriticalQuantities q = critical_quantities(base);
  if (!(pl.L > 2 * q.r_star + 3))
    throw std::invalid_argument("nucleation requires L > 2 r* + 3 = " +
                                std::to_string(2 * q.r_star + 3) + "; got L = " +
                                std::to_string(pl.L));
  if (pl.betas.empty()) pl.betas = {2.6, 2.9, 3.2, 3.5};
  int reps = pl.reps > 0 ? pl.reps : 30;
  HexLattice lat(pl.L);
  double gamma = base.energy(q.gamma_g);

  Out out(pl.out);
  echo_plan(out.s(),
            {{"command", "nucleation"},
             {"U", fmt(base.U())},
             {"Delta", fmt(base.Delta())},
             {"grid", fmt(base.grid)},
             {"L", std::to_string(pl.L)},
             {"betas", betas_str(pl.betas)},
             {"reps", std::to_string(reps)},
             {"steps_mult", fmt(pl.steps_mult)},
             {"max_steps", std::to_string(pl.max_steps)},
             {"monitor", pl.monitor ? "1" : "0"},
             {"seed", fmt_seed(pl.seed) + " (" + pl.seed_src + ")"}},
            "# ");

  std::optional<GateSet> gs;
  if (pl.monitor) {
    try {
      gs = gate_set(base, lat);
    } catch (const std::exception& e) {
      out.note(std::string("gate set unavailable: ") + e.what());
    }
  }

  out.s() << "beta,replica,seed,steps,reached";
  if (pl.monitor) out.s() << ",gate_step,gate_hit,gate_entrances";
  out.s() << "\n";

  struct BetaStats {
    std::vector<double> taus;
    int timeouts = 0;
  };
  std::map<double, BetaStats> stats;
  std::uint64_t idx = 0;
  for (double beta : pl.betas) {
    Params p = make_params(pl.U, pl.Delta, beta, pl.grid);
    std::int64_t max_steps =
        pl.max_steps ? pl.max_steps : exp_steps(std::log(pl.steps_mult) + beta * gamma);
    GateMonitor mon{static_cast<int>(q.A_star), q.gamma_g};
    BetaStats& bs = stats[beta];
    for (int rep = 0; rep < reps; ++rep) {
      std::uint64_t seed = replica_seed(pl.seed, idx++);
      HittingResult hr =
          run_until(lat, p, {}, Target::full, max_steps, seed, pl.monitor ? &mon : nullptr);
      out.s() << fmt(beta) << "," << rep << "," << seed << "," << hr.steps << ","
              << reached_name(hr.reached);
      if (pl.monitor) {
        out.s() << ",";
        if (hr.crossing) out.s() << hr.crossing->last_step;
        out.s() << ",";
        if (hr.crossing && gs)
          out.s() << (is_gate_crossing(lat, *gs, hr.crossing->last_config, p) ? 1 : 0);
        out.s() << ",";
        out.s() << (hr.crossing ? hr.crossing->entrances : 0);
      }
      out.s() << "\n";
      if (hr.reached == Reached::full)
        bs.taus.push_back(static_cast<double>(hr.steps));
      else
        ++bs.timeouts;
    }
  }

  std::vector<double> xs, ys;
  for (double beta : pl.betas) {
    const BetaStats& bs = stats[beta];
    bool flagged = 2 * bs.timeouts > reps || bs.taus.empty();
    std::ostringstream line;
    line << "beta " << fmt(beta) << ": completed " << bs.taus.size() << "/" << reps;
    if (!bs.taus.empty())
      line << ", mean " << fmt(mean_of(bs.taus)) << ", median " << fmt(median_of(bs.taus))
           << ", T_beta " << fmt(empirical_t_beta(bs.taus)) << ", mean/T_beta "
           << fmt(mean_of(bs.taus) / empirical_t_beta(bs.taus));
    if (flagged) line << "  [flagged: timeout fraction > 1/2, excluded from fit]";
    out.note(line.str());
    if (!flagged) {
      xs.push_back(beta);
      ys.push_back(std::log(mean_of(bs.taus)));
    }
  }
  FitResult fit = ols_fit(xs, ys);
  if (fit.points < 2) {
    out.note("no fit attempted: fewer than two usable betas");
  } else {
    std::ostringstream line;
    line << "slope of log(mean tau) vs beta = " << fmt(fit.slope);
    if (fit.banded)
      line << "  (95% band [" << fmt(fit.slope - fit.half_band) << ", "
           << fmt(fit.slope + fit.half_band) << "])";
    line << ", Gamma = " << fmt(gamma);
    out.note(line.str());
  }
  return 0;
}

// ---- fate ----

int cmd_fate(const Plan& pl) {
  if (pl.start.empty()) throw std::invalid_argument("fate requires --start");
  Params p = make_params(pl.U, pl.Delta, pl.beta, pl.grid);
  HexLattice lat(pl.L);
  Configuration start = parse_start(lat, pl.start);
  int reps = pl.reps > 0 ? pl.reps : 50;
  std::int64_t max_steps = pl.max_steps ? pl.max_steps : 2'000'000'000;

  Out out(pl.out);
  echo_plan(out.s(),
            {{"command", "fate"},
             {"U", fmt(p.U())},
             {"Delta", fmt(p.Delta())},
             {"grid", fmt(p.grid)},
             {"beta", fmt(p.beta)},
             {"L", std::to_string(pl.L)},
             {"start", pl.start},
             {"reps", std::to_string(reps)},
             {"max_steps", std::to_string(max_steps)},
             {"seed", fmt_seed(pl.seed) + " (" + pl.seed_src + ")"}},
            "# ");
  out.s() << "replica,seed,steps,reached\n";

  int shrank = 0, grew = 0, timeouts = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::uint64_t seed = replica_seed(pl.seed, static_cast<std::uint64_t>(rep));
    HittingResult hr = run_until(lat, p, start, Target::both, max_steps, seed);
    out.s() << rep << "," << seed << "," << hr.steps << "," << reached_name(hr.reached) << "\n";
    if (hr.reached == Reached::empty) ++shrank;
    else if (hr.reached == Reached::full) ++grew;
    else ++timeouts;
  }
  auto [slo, shi] = wilson_ci(shrank, reps);
  auto [glo, ghi] = wilson_ci(grew, reps);
  out.note("P(shrink to empty first) = " + fmt(static_cast<double>(shrank) / reps) + "  (" +
           std::to_string(shrank) + "/" + std::to_string(reps) + ", 95% CI [" + fmt(slo) + ", " +
           fmt(shi) + "])");
  out.note("P(grow to full first)    = " + fmt(static_cast<double>(grew) / reps) + "  (" +
           std::to_string(grew) + "/" + std::to_string(reps) + ", 95% CI [" + fmt(glo) + ", " +
           fmt(ghi) + "])");
  if (timeouts) out.note("timeouts = " + std::to_string(timeouts));
  return 0;
}

// ---- recurrence ----

// Random starts: every site occupied independently with probability 1/2.
Configuration random_half(const HexLattice& lat, std::uint64_t seed) {
  SplitMix64 sm{seed};
  Configuration c;
  std::uint64_t bits = 0;
  int left = 0;
  for (SiteId s = 0; s < lat.n_sites(); ++s) {
    if (left == 0) {
      bits = sm.next();
      left = 64;
    }
    if (bits & 1) c.set(s);
    bits >>= 1;
    --left;
  }
  return c;
}

int cmd_recurrence(Plan& pl) {
  Params base = make_params(pl.U, pl.Delta, 1.0, pl.grid);
  CriticalQuantities q = critical_quantities(base);
  if (pl.betas.empty()) pl.betas = {3.0};
  int reps = pl.reps > 0 ? pl.reps : 100;
  if (reps < 100) reps = 100;  // the check needs at least 100 random starts per beta
  HexLattice lat(pl.L);
  double v_star = base.energy(q.v_star_g);

  Out out(pl.out);
  echo_plan(out.s(),
            {{"command", "recurrence"},
             {"U", fmt(base.U())},
             {"Delta", fmt(base.Delta())},
             {"grid", fmt(base.grid)},
             {"L", std::to_string(pl.L)},
             {"betas", betas_str(pl.betas)},
             {"reps", std::to_string(reps)},
             {"eps", fmt(pl.eps)},
             {"seed", fmt_seed(pl.seed) + " (" + pl.seed_src + ")"}},
            "# ");
  out.note("sampler: independent site occupation with probability 1/2");
  out.s() << "beta,replica,seed,steps,reached\n";

  std::uint64_t idx = 0;
  for (double beta : pl.betas) {
    Params p = make_params(pl.U, pl.Delta, beta, pl.grid);
    std::int64_t budget = pl.max_steps ? pl.max_steps : exp_steps(beta * (v_star + pl.eps));
    int hit = 0;
    for (int rep = 0; rep < reps; ++rep) {
      std::uint64_t cfg_seed = replica_seed(pl.seed, idx++);
      std::uint64_t sim_seed = replica_seed(pl.seed, idx++);
      Configuration start = random_half(lat, cfg_seed);
      HittingResult hr = run_until(lat, p, start, Target::both, budget, sim_seed);
      out.s() << fmt(beta) << "," << rep << "," << sim_seed << "," << hr.steps << ","
              << reached_name(hr.reached) << "\n";
      if (hr.reached != Reached::timeout) ++hit;
    }
    out.note("beta " + fmt(beta) + ": hit {empty, full} in " + std::to_string(hit) + "/" +
             std::to_string(reps) + " within " + std::to_string(budget) +
             " steps (e^{beta(V*+eps)})");
  }
  return 0;
}

// ---- landscape ----

json path_json(const HexLattice& lat, const PathRecord& path, const Params& p) {
  json steps = json::array();
  for (int i = 0; i < path.length(); ++i)
    steps.push_back({{"h", p.energy(path.energies_g[i])},
                     {"config", json::parse(serialize_config(lat, path.configurations[i]))}});
  return steps;
}

int cmd_landscape(const Plan& pl, const std::string& which) {
  Params p = make_params(pl.U, pl.Delta, pl.beta, pl.grid);
  HexLattice lat(pl.L);
  std::int64_t cutoff_g =
      pl.has_cutoff ? snap_to_grid(pl.cutoff, p.grid, "cutoff") : kNoCutoff;
  SearchOptions opt;
  opt.cap = pl.cap;
  opt.quotient = pl.symmetry;
  opt.stop_on_cap = pl.stop_on_cap;

  json j;
  j["plan"] = {{"command", "landscape " + which},
               {"U", p.U()},
               {"Delta", p.Delta()},
               {"grid", p.grid},
               {"L", pl.L},
               {"cutoff", pl.has_cutoff ? json(pl.cutoff) : json(nullptr)},
               {"cap", pl.cap},
               {"symmetry", pl.symmetry},
               {"stop_on_cap", pl.stop_on_cap}};

  if (which == "phi") {
    Configuration from = parse_start(lat, pl.from), to = parse_start(lat, pl.to);
    j["plan"]["from"] = pl.from;
    j["plan"]["to"] = pl.to;
    LandscapeResult r = communication_height(lat, from, to, p, cutoff_g, opt);
    j["value"] = p.energy(r.phi_g);
    j["explored"] = r.explored;
    j["complete"] = r.complete();
    j["cutoff_hit"] = r.cutoff_hit;
    j["cap_hit"] = r.cap_hit;
    j["unreachable"] = r.unreachable;
    if (pl.witness && r.witness.length()) j["witness_path"] = path_json(lat, r.witness, p);
  } else if (which == "stability") {
    Configuration sigma = parse_start(lat, pl.start);
    j["plan"]["sigma"] = pl.start.empty() ? "empty" : pl.start;
    StabilityResult s = stability_level(lat, sigma, p, cutoff_g, opt);
    j["value"] = p.energy(s.v_g);
    j["explored"] = s.explored;
    j["complete"] = s.complete;
    j["infinite"] = s.infinite;
    if (pl.witness && s.witness.length()) j["witness_path"] = path_json(lat, s.witness, p);
  } else if (which == "cycle") {
    if (!pl.has_cutoff) throw std::invalid_argument("cycle requires --cutoff");
    Configuration sigma = parse_start(lat, pl.start);
    j["plan"]["sigma"] = pl.start.empty() ? "empty" : pl.start;
    CycleResult c = cycle(lat, sigma, p, cutoff_g, pl.cap);
    j["value"] = c.members.size();
    j["explored"] = c.members.size();
    j["complete"] = c.complete;
  } else if (which == "gate") {
    try {
      GateSet gs = gate_set(p, lat, pl.cap);
      j["value"] = gs.size();
      j["explored"] = gs.corridor_explored;
      j["complete"] = true;
      j["area"] = gs.area;
      j["seed_energy"] = p.energy(gs.h_seed_g);
      j["seed_bonds"] = gs.seed_bonds;
    } catch (const std::exception& e) {
      j["value"] = 0;
      j["explored"] = 0;
      j["complete"] = false;
      j["error"] = e.what();
    }
  } else {  // refpath
    PathRecord w = reference_path(lat, p);
    j["value"] = p.energy(w.max_energy_g);
    j["explored"] = w.length();
    j["complete"] = true;
    j["argmax_indices"] = w.argmax_indices;
    if (pl.witness) j["witness_path"] = path_json(lat, w, p);
  }

  Out out(pl.out);
  out.s() << j.dump(2) << "\n";
  return 0;
}

// ---- refpath ----

int cmd_refpath(const Plan& pl) {
  Params p = make_params(pl.U, pl.Delta, pl.beta, pl.grid);
  HexLattice lat(pl.L);
  CriticalQuantities q = critical_quantities(p);
  PathRecord w = reference_path(lat, p);
  bool valid = validate_path(lat, w, p);
  std::printf("reference path on L = %d: %d states, valid = %s\n", pl.L, w.length(),
              valid ? "yes" : "NO");
  std::printf("max energy = %s (Gamma = %s) at %zu states\n", fmt(p.energy(w.max_energy_g)).c_str(),
              fmt(p.energy(q.gamma_g)).c_str(), w.argmax_indices.size());
  for (int ai : w.argmax_indices) {
    const Configuration& cfg = w.configurations[ai];
    int n = 0;
    for (SiteId s = 0; s < lat.n_sites(); ++s) n += cfg.test(s);
    auto cls = clusters(lat, cfg);
    std::printf("  argmax %d: n = %d, clusters = %zu, free = %zu\n", ai, n, cls.size(),
                free_particles(lat, cfg).size());
  }
  std::printf("segment maxima (growth): r i n peak\n");
  for (std::int64_t r = 1; r <= std::min<std::int64_t>(3, pl.L - 2); ++r)
    for (std::int64_t i = 0; i < 6; ++i) {
      SegmentMax sm = segment_max(r, i, p);
      std::printf("  %lld %lld %lld %s\n", static_cast<long long>(r), static_cast<long long>(i),
                  static_cast<long long>(sm.n), fmt(p.energy(sm.peak_g)).c_str());
    }
  return valid && w.max_energy_g == q.gamma_g ? 0 : 1;
}

// ---- verify ----

int cmd_verify(const Plan& pl) {
  Params p;
  try {
    p = make_params(pl.U, pl.Delta, pl.beta, pl.grid);
  } catch (const std::exception& e) {
    std::printf("configuration error: %s\n", e.what());
    return 2;
  }
  int failures = 0;
  auto check = [&](const char* name, bool ok, const std::string& detail) {
    std::printf("check %-16s %s  %s\n", name, ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
  };

  bool regime_ok = true;
  std::string rd = "U < Delta < 3U/2, non-degenerate";
  try {
    auto warnings = validate_regime(p);
    if (!warnings.empty()) rd += "; " + warnings[0];
  } catch (const std::exception& e) {
    regime_ok = false;
    rd = e.what();
  }
  check("regime", regime_ok, rd);
  if (!regime_ok) {
    std::printf("remaining checks skipped: parameters outside the metastable window\n");
    return 1;
  }
  CriticalQuantities q = critical_quantities(p);

  {  // closed-form energies against the direct Hamiltonian
    HexLattice lat5(5);
    bool ok = true;
    int n = 0;
    for (std::int64_t r : {1, 2})
      for (std::int64_t A : {6 * r * r + 2, 6 * r * r + 2 * r + 1, 6 * r * r + 4 * r + 2,
                             6 * r * r + 6 * r + 3, 6 * r * r + 8 * r + 4, 6 * r * r + 10 * r + 5}) {
        Configuration s = build_shape(lat5, {ShapeKind::standard, A});
        ok &= closed_form_energy_grid(A, p) == hamiltonian_grid(lat5, s, p);
        ++n;
      }
    check("energie1", ok, std::to_string(n) + " tabulated areas, exact on the grid");
  }

  check("gamma-identity", q.gamma_g == closed_form_energy_grid(q.A_star - 1, p) + p.d,
        "Gamma = H(S(A*-1)) + Delta = " + fmt(p.energy(q.gamma_g)));

  {  // reference path: barrier and argmax structure
    HexLattice lat(pl.L);
    PathRecord w = reference_path(lat, p);
    bool ok = validate_path(lat, w, p) && w.max_energy_g == q.gamma_g;
    for (int ai : w.argmax_indices) {
      const Configuration& cfg = w.configurations[ai];
      auto cls = clusters(lat, cfg);
      ok &= free_particles(lat, cfg).size() == 1 && cls.size() == 1 &&
            cls[0].area == q.A_star - 1 && cls[0].bonds == shape_bond_count(q.A_star - 1);
    }
    check("refpath-argmax", ok,
          "max = " + fmt(p.energy(w.max_energy_g)) + " at " +
              std::to_string(w.argmax_indices.size()) + " states, each S(A*-1) + free particle");
  }

  {  // growth segment maxima at n = 2 (single-cell bars peak at n = 0)
    bool ok = true;
    for (std::int64_t r = 1; r <= 3; ++r) {
      auto lens = bar_lengths(r);
      for (std::int64_t i = 0; i < 6; ++i) {
        std::int64_t want = lens[i] >= 3 ? 2 : lens[i] - 1;
        ok &= segment_max(r, i, p).n == want;
      }
    }
    check("segment-law", ok, "r in 1..3, all bars");
  }

  {  // reducing paths on a shape sample
    HexLattice lat(pl.L);
    std::vector<std::string> specs = {"S(9)", "E(2)", "IB(4,2)", "Dt(21)", "B(5)"};
    bool ok = true;
    std::string bad;
    int n = 0;
    for (const std::string& s : specs) {
      Configuration cfg = parse_start(lat, s);
      std::int64_t h0 = hamiltonian_grid(lat, cfg, p);
      try {
        PathRecord pr = reducing_path(lat, cfg, p);
        bool good = validate_path(lat, pr, p) && pr.max_energy_g <= h0 + q.v_star_g &&
                    pr.energies_g.back() < h0;
        if (!good && bad.empty()) bad = s;
        ok &= good;
      } catch (const std::exception&) {
        ok = false;
        if (bad.empty()) bad = s;
      }
      ++n;
    }
    check("reducing-path", ok,
          ok ? std::to_string(n) + " shapes, max <= H + V*, endpoint < H" : "failed at " + bad);
  }

  {  // L=1 golden values
    HexLattice l1(1);
    bool ok = l1.oriented_bonds().size() == 48 && l1.n_sites() == 12;
    Configuration hex1 = build_shape(l1, {ShapeKind::regular, 1});
    ok &= hamiltonian_grid(l1, hex1, p) == 6 * p.d - 6 * p.u;
    std::int64_t want = p.d;
    for (std::int64_t k = 1; k <= 5; ++k)
      want = std::max(want, closed_form_energy_grid(k, p) + p.d);
    LandscapeResult r = communication_height(l1, {}, full_interior(l1), p, kNoCutoff);
    ok &= r.complete() && r.phi_g == want && validate_path(l1, r.witness, p);
    check("l1-oracle", ok,
          "48 bonds, H(E(1)) = " + fmt(p.energy(6 * p.d - 6 * p.u)) +
              ", Phi(empty, full) = " + fmt(p.energy(r.phi_g)));
  }

  {  // detailed balance on every L=1 configuration
    HexLattice l1(1);
    double worst = 0;
    for (int mask = 0; mask < 4096; ++mask) {
      Configuration cfg;
      for (int b = 0; b < 12; ++b)
        if (mask >> b & 1) cfg.set(static_cast<SiteId>(b));
      double mu = std::exp(-p.beta * p.energy(hamiltonian_grid(l1, cfg, p)));
      std::vector<Configuration> succ;
      for (const MoveEval& m : enumerate_moves(l1, cfg, p)) {
        if (!m.changes_state) continue;
        Configuration next = apply_move(l1, cfg, m.move);
        if (std::find(succ.begin(), succ.end(), next) != succ.end()) continue;
        succ.push_back(next);
        double mu2 = std::exp(-p.beta * p.energy(hamiltonian_grid(l1, next, p)));
        worst = std::max(worst, std::abs(mu * transition_prob(l1, cfg, next, p) -
                                         mu2 * transition_prob(l1, next, cfg, p)));
      }
    }
    check("detailed-balance", worst < 1e-12,
          "all 4096 states, worst |muP - muP'| = " + fmt(worst));
  }

  std::printf("%s\n", failures ? "verification FAILED" : "verification passed");
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hexagonal Kawasaki lattice gas toolkit"};
  app.require_subcommand(1);
  Plan pl;
  if (const char* env = std::getenv("KHEX_SEED")) {
    pl.seed = parse_seed(env);
    pl.seed_src = "env";
  }
  std::string plan_path;

  auto add_params = [&](CLI::App* s) {
    s->add_option("--U,-u", pl.U, "binding energy U");
    s->add_option("--Delta,-d", pl.Delta, "activation energy Delta");
    s->add_option("--grid", pl.grid, "energy grid unit (default U/100)");
    s->add_option("--plan", plan_path, "plain-text key = value plan file");
  };
  auto add_seed = [&](CLI::App* s) {
    s->add_option_function<std::string>(
        "--seed",
        [&](const std::string& v) {
          pl.seed = parse_seed(v);
          pl.seed_src = "flag";
        },
        "seed base (overrides KHEX_SEED)");
    s->add_option("--out", pl.out, "output file (default stdout)");
    s->add_option("--L", pl.L, "lattice radius");
  };

  CLI::App* c_critical = app.add_subcommand("critical", "critical radius, areas and barriers");
  add_params(c_critical);

  CLI::App* c_sim = app.add_subcommand("simulate", "run one trajectory");
  add_params(c_sim);
  add_seed(c_sim);
  c_sim->add_option("--beta", pl.beta, "inverse temperature");
  c_sim->add_option("--start", pl.start, "start configuration (empty, full or shape spec)");
  c_sim->add_option("--target", pl.target, "absorbing target: empty, full or both");
  c_sim->add_option("--reps", pl.reps, "hitting-time replicas (default 1)");
  c_sim->add_option("--max-steps", pl.max_steps, "step budget");
  c_sim->add_option("--sample-every", pl.sample_every, "emit a CSV row every N steps");

  CLI::App* c_nuc = app.add_subcommand("nucleation", "hitting-time sweep over a beta schedule");
  add_params(c_nuc);
  add_seed(c_nuc);
  c_nuc->add_option("--betas", pl.betas, "beta schedule")->delimiter(',');
  c_nuc->add_option("--reps", pl.reps, "replicas per beta (default 30)");
  c_nuc->add_option("--steps-mult", pl.steps_mult, "step budget = mult * e^{beta Gamma}");
  c_nuc->add_option("--max-steps", pl.max_steps, "fixed step budget (overrides --steps-mult)");
  c_nuc->add_flag("--monitor", pl.monitor,
                  "record per sojourn in V_{A*} the first touch of level Gamma; report the last one");

  CLI::App* c_fate = app.add_subcommand("fate", "shrink-vs-grow fate of a droplet");
  add_params(c_fate);
  add_seed(c_fate);
  c_fate->add_option("--beta", pl.beta, "inverse temperature");
  c_fate->add_option("--start", pl.start, "start shape, e.g. EB(4,1) or S(27)");
  c_fate->add_option("--reps", pl.reps, "replicas (default 50)");
  c_fate->add_option("--max-steps", pl.max_steps, "step budget per replica");

  CLI::App* c_rec = app.add_subcommand("recurrence", "random starts hitting {empty, full}");
  add_params(c_rec);
  add_seed(c_rec);
  c_rec->add_option("--betas", pl.betas, "beta schedule (default 3.0)")->delimiter(',');
  c_rec->add_option("--reps", pl.reps, "starts per beta (>= 100)");
  c_rec->add_option("--eps", pl.eps, "budget exponent margin");
  c_rec->add_option("--max-steps", pl.max_steps, "fixed step budget (overrides the exponent)");

  CLI::App* c_land = app.add_subcommand("landscape", "energy landscape queries (JSON)");
  c_land->require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::string>> land_subs;
  for (const char* name : {"phi", "stability", "cycle", "gate", "refpath"}) {
    CLI::App* s = c_land->add_subcommand(name, "");
    add_params(s);
    s->add_option("--L", pl.L, "lattice radius");
    s->add_option("--out", pl.out, "output file (default stdout)");
    s->add_option("--cap", pl.cap, "stored-state cap");
    s->add_flag("--symmetry", pl.symmetry, "quotient by the 12 lattice symmetries");
    s->add_flag("--stop-on-cap", pl.stop_on_cap, "return at the first cap eviction");
    s->add_flag("--witness", pl.witness, "include witness_path in the output");
    s->add_option_function<double>(
        "--cutoff",
        [&](double v) {
          pl.cutoff = v;
          pl.has_cutoff = true;
        },
        "energy cutoff");
    s->add_option("--from", pl.from, "source configuration (phi)");
    s->add_option("--to", pl.to, "target configuration (phi)");
    s->add_option("--sigma", pl.start, "configuration (stability, cycle)");
    land_subs.emplace_back(s, name);
  }

  CLI::App* c_ref = app.add_subcommand("refpath", "reference path summary");
  add_params(c_ref);
  c_ref->add_option("--L", pl.L, "lattice radius");
  c_ref->add_option("--beta", pl.beta, "inverse temperature");

  CLI::App* c_verify = app.add_subcommand("verify", "cross-module identity suite");
  add_params(c_verify);
  c_verify->add_option("--L", pl.L, "lattice radius");
  c_verify->add_option("--beta", pl.beta, "inverse temperature");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* chosen = app.get_subcommands().front();
    std::string land_which;
    if (chosen == c_land)
      for (auto& [s, name] : land_subs)
        if (s->parsed()) {
          chosen = s;
          land_which = name;
        }
    pl.command = land_which.empty() ? chosen->get_name() : "landscape " + land_which;
    if (!plan_path.empty()) apply_plan_file(pl, chosen, plan_path);

    if (!land_which.empty()) return cmd_landscape(pl, land_which);
    if (chosen == c_critical) return cmd_critical(pl);
    if (chosen == c_sim) return cmd_simulate(pl);
    if (chosen == c_nuc) return cmd_nucleation(pl);
    if (chosen == c_fate) return cmd_fate(pl);
    if (chosen == c_rec) return cmd_recurrence(pl);
    if (chosen == c_ref) return cmd_refpath(pl);
    if (chosen == c_verify) return cmd_verify(pl);
    throw std::logic_error("unhandled command");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
