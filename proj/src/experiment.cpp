#include "mmgeo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "mmgeo/rng.hpp"
#include "mmgeo/spacefile.hpp"
#include "mmgeo/witness.hpp"

#ifndef MMGEO_VERSION
#define MMGEO_VERSION "unknown"
#endif

namespace mmgeo {

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sym_dissipation: return "sym_dissipation";
    case ExperimentKind::hamming_concentration: return "hamming_concentration";
    case ExperimentKind::cantor_concentration: return "cantor_concentration";
    case ExperimentKind::cube_demo: return "cube_demo";
    case ExperimentKind::verify_certificate: return "verify_certificate";
  }
  return "unknown";
}

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::exact: return "exact";
    case Tag::certified_lower: return "certified-lower";
    case Tag::estimate: return "estimate";
  }
  return "estimate";
}

namespace {

std::string_view family_name(Family f) { return f == Family::sym_chain ? "sym_chain" : "cantor_chain"; }

Family parse_family(const std::string& s) {
  if (s == "sym_chain" || s == "sym") return Family::sym_chain;
  if (s == "cantor_chain" || s == "cantor") return Family::cantor_chain;
  throw Error(ErrorCode::BadConfig, "unknown family '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

long parse_long(const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::BadConfig, "expected an integer, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s) {
  try {
    return to_double(parse_rational(s));
  } catch (const Error&) {
    throw Error(ErrorCode::BadConfig, "expected a number, got '" + s + "'");
  }
}

// "3..6" or "8, 16, 32".
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split(s, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(static_cast<int>(parse_long(item)));
      continue;
    }
    const long lo = parse_long(trim(item.substr(0, dots))), hi = parse_long(trim(item.substr(dots + 2)));
    if (hi < lo || hi - lo > 10000) throw Error(ErrorCode::BadConfig, "bad range '" + item + "'");
    for (long v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
  }
  return out;
}

// "1:1/3, 2:1/5".
std::vector<GridCell> parse_grid(const std::string& s) {
  std::vector<GridCell> out;
  for (const auto& item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BadConfig, "grid cells look like m:alpha, got '" + item + "'");
    GridCell c;
    c.m = static_cast<int>(parse_long(trim(item.substr(0, colon))));
    try {
      c.alpha = parse_rational(trim(item.substr(colon + 1)));
    } catch (const Error&) {
      throw Error(ErrorCode::BadConfig, "bad alpha in '" + item + "'");
    }
    out.push_back(c);
  }
  return out;
}

std::string alpha_text(const Rational& a) { return to_string(a); }

std::string cell_name(const GridCell& c) { return "sep;m=" + std::to_string(c.m) + ";alpha=" + alpha_text(c.alpha); }

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  bool metric_given = false, family_given = false, cap_delta_given = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    try {
      if (key == "experiment") {
        bool found = false;
        for (auto k : {ExperimentKind::sym_dissipation, ExperimentKind::hamming_concentration,
                       ExperimentKind::cantor_concentration, ExperimentKind::cube_demo,
                       ExperimentKind::verify_certificate})
          if (value == to_string(k)) {
            c.experiment = k;
            found = true;
          }
        if (!found) throw Error(ErrorCode::BadConfig, "unknown experiment '" + value + "'");
      } else if (key == "family") {
        c.chain.family = parse_family(value);
        family_given = true;
      } else if (key == "metric") {
        try {
          c.chain.metric = MetricSpec::parse(value);
        } catch (const Error& e) {
          throw Error(ErrorCode::BadConfig, e.what());
        }
        metric_given = true;
      } else if (key == "n") {
        c.ns = parse_int_list(value);
      } else if (key == "grid") {
        c.grid = parse_grid(value);
      } else if (key == "delta") {
        c.delta = parse_real(value);
      } else if (key == "tail_start") {
        c.tail_start = static_cast<int>(parse_long(value));
      } else if (key == "kappa") {
        c.kappa = parse_real(value);
      } else if (key == "samples") {
        c.samples = static_cast<std::size_t>(parse_long(value));
      } else if (key == "functions") {
        c.functions = static_cast<std::size_t>(parse_long(value));
      } else if (key == "seed") {
        c.seed = parse_long(value);
      } else if (key == "exact_cap") {
        c.exact_cap = static_cast<std::size_t>(parse_long(value));
      } else if (key == "max_points") {
        c.max_points = static_cast<std::size_t>(parse_long(value));
      } else if (key == "capacity_targets") {
        c.capacity_targets = parse_int_list(value);
      } else if (key == "capacity_delta") {
        c.capacity_delta = parse_real(value);
        cap_delta_given = true;
      } else if (key == "capacity_alpha") {
        c.capacity_alpha = parse_real(value);
      } else if (key == "cube_resolution") {
        c.cube_resolution = static_cast<int>(parse_long(value));
      } else if (key == "cube_points") {
        c.cube_points = static_cast<std::size_t>(parse_long(value));
      } else if (key == "certificate") {
        c.certificate = value;
      } else if (key == "name") {
        c.name = value;
      } else {
        throw Error(ErrorCode::BadConfig, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BadConfig)
        throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": " + e.what());
      throw;
    }
  }

  // Per-experiment defaults.
  switch (c.experiment) {
    case ExperimentKind::hamming_concentration:
      if (!metric_given) c.chain.metric = MetricSpec::hamming();
      break;
    case ExperimentKind::cantor_concentration:
      if (family_given && c.chain.family != Family::cantor_chain)
        throw Error(ErrorCode::BadConfig, "cantor_concentration uses the cantor_chain family");
      c.chain.family = Family::cantor_chain;
      if (!metric_given) c.chain.metric = MetricSpec::weighted();
      break;
    default: break;
  }
  if (c.experiment == ExperimentKind::sym_dissipation && c.grid.empty()) c.grid = {{1, Rational(1, 3)}};
  if (!cap_delta_given) c.capacity_delta = c.delta;
  if (c.name.empty()) c.name = std::string(to_string(c.experiment));

  // Validation.
  auto bad = [](const std::string& why) { return Error(ErrorCode::BadConfig, why); };
  if (c.experiment == ExperimentKind::verify_certificate) {
    if (c.certificate.empty()) throw bad("verify_certificate needs certificate = <path>");
    return c;
  }
  if (c.ns.empty()) throw bad("n must list at least one value");
  for (int n : c.ns)
    if (n < 1) throw bad("every n must be >= 1");
  if (!(c.delta > 0)) throw bad("delta must be positive");
  for (const auto& cell : c.grid)
    if (cell.m < 1 || !(cell.alpha > 0) || !(cell.alpha * (cell.m + 1) < 1))
      throw bad("grid cell " + std::to_string(cell.m) + ":" + alpha_text(cell.alpha) + " needs m >= 1 and alpha < 1/(m+1)");
  if (!(c.kappa > 0 && c.kappa < 1)) throw bad("kappa must lie in (0, 1)");
  if (c.samples == 0) throw bad("samples must be positive");
  if (c.seed < 0) throw bad("seed must be non-negative");
  if (!(c.capacity_alpha > 0 && c.capacity_alpha < 0.5)) throw bad("capacity_alpha must lie in (0, 1/2)");
  for (int m : c.capacity_targets)
    if (m < 1) throw bad("capacity targets must be >= 1");
  if (c.cube_resolution < 1) throw bad("cube_resolution must be >= 1");
  std::sort(c.ns.begin(), c.ns.end());
  c.ns.erase(std::unique(c.ns.begin(), c.ns.end()), c.ns.end());
  c.chain.n_lo = c.ns.front();
  c.chain.n_hi = c.ns.back();
  c.chain.seed = c.seed;
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

std::size_t worker_count() {
  const char* env = std::getenv("MMGEO_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v >= 1 ? static_cast<std::size_t>(v) : 1;
}

namespace {

// Runs every task; each owns its output slot, so the merge order is fixed.
void run_tasks(std::vector<std::function<void()>>& tasks, std::size_t workers) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < tasks.size();) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Wraps solver errors so they name the cell.
template <typename F>
auto in_cell(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
}

void sort_rows(Report& r) {
  std::stable_sort(r.rows.begin(), r.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.n, a.cell_order) < std::tie(b.n, b.cell_order);
  });
}

void set_verdict(Report& r, const std::string& cell, Verdict v) {
  for (auto& row : r.rows)
    if (row.cell == cell) row.verdict = v;
  r.summary.push_back(cell + " " + std::string(to_string(v)));
}

std::size_t tail_index(const std::vector<int>& ns, int tail_start) {
  std::size_t k = 0;
  while (k < ns.size() && ns[k] < tail_start) ++k;
  return k;
}

std::string file_tag(const Rational& a) {
  std::string s = to_string(a);
  std::replace(s.begin(), s.end(), '/', '-');
  return s;
}

// ---------------------------------------------------------------- sym_dissipation

Report run_sym(const ExperimentConfig& c, std::size_t workers) {
  if (c.chain.family != Family::sym_chain) throw Error(ErrorCode::BadConfig, "sym_dissipation uses the sym_chain family");
  Report r;
  r.experiment = "sym_dissipation";
  const std::size_t N = c.ns.size();
  // Spaces small enough to hold as matrices.
  std::vector<std::optional<GroupSpace>> spaces(N);
  {
    std::vector<std::function<void()>> build;
    for (std::size_t k = 0; k < N; ++k) {
      double size = 1;
      for (int i = 2; i <= c.ns[k]; ++i) size *= i;
      if (size > static_cast<double>(c.max_points)) continue;
      build.push_back([&, k] {
        GroupChainSpec spec = c.chain;
        spec.exact_copy_cap = c.max_points;
        spaces[k] = in_cell("n=" + std::to_string(c.ns[k]), [&] { return build_chain_space(spec, c.ns[k]); });
      });
    }
    run_tasks(build, workers);
  }

  const std::size_t G = c.grid.size(), T = c.capacity_targets.size();
  // Slots: per n, per cell: coset witness and bracket; per target: capacity row.
  struct CellOut {
    std::optional<CosetWitness> witness;
    std::string witness_note;
    SepBracket bracket;
  };
  std::vector<std::vector<CellOut>> cells(N, std::vector<CellOut>(G));
  std::vector<std::vector<GrowthRow>> growth(N, std::vector<GrowthRow>(T));
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t g = 0; g < G; ++g)
      tasks.push_back([&, k, g] {
        const int n = c.ns[k];
        const GridCell& cell = c.grid[g];
        CellOut& out = cells[k][g];
        const std::string where = "n=" + std::to_string(n) + " " + cell_name(cell);
        try {
          out.witness = theorem_witness(n, cell.m, std::vector<Rational>(static_cast<std::size_t>(cell.m + 1), cell.alpha),
                                        c.chain.metric);
          if (const std::string why = verify_coset_witness(*out.witness); !why.empty()) {
            out.witness_note = "witness rejected: " + why;
            out.witness.reset();
          }
        } catch (const Error& e) {
          out.witness_note = e.what();
        }
        if (spaces[k]) {
          SepOptions opts;
          opts.exact_cap = c.exact_cap;
          opts.anchor = spaces[k]->identity;
          if (out.witness && out.witness->separation >= c.delta) opts.provided = out.witness->blocks;
          out.bracket = in_cell(where, [&] { return sep_m(spaces[k]->space, cell.m, to_double(cell.alpha), opts); });
        } else if (out.witness) {
          out.bracket.lower = out.witness->separation;
          out.bracket.source = "provided";
        } else {
          out.bracket.source = "empty";
        }
      });
    for (std::size_t t = 0; t < T; ++t)
      tasks.push_back([&, k, t] {
        const int m = c.capacity_targets[t];
        GrowthRow& row = growth[k][t];
        row.m = m;
        if (!spaces[k] || !spaces[k]->exact) {
          row.note = "no exact copy of Sym(" + std::to_string(c.ns[k]) + ")";
          return;
        }
        const GroupSpace& Gs = *spaces[k];
        const BlockProvider cosets = [&](std::size_t, std::size_t count) {
          return coset_blocks(Gs, c.capacity_delta, count);
        };
        const auto rep = in_cell("n=" + std::to_string(c.ns[k]) + " capacity m=" + std::to_string(m), [&] {
          return capacity_growth_check({*Gs.exact}, c.capacity_delta, c.capacity_alpha, {m}, cosets);
        });
        row = rep.rows.front();
      });
  }
  run_tasks(tasks, workers);

  const std::size_t tail = tail_index(c.ns, c.tail_start);
  for (std::size_t g = 0; g < G; ++g) {
    const GridCell& cell = c.grid[g];
    const std::string sep_cell = cell_name(cell);
    const std::string coset_cell = "coset;m=" + std::to_string(cell.m) + ";alpha=" + alpha_text(cell.alpha);
    std::vector<SepBracket> column, coset_column;
    for (std::size_t k = 0; k < N; ++k) {
      const CellOut& out = cells[k][g];
      const int n = c.ns[k];
      column.push_back(out.bracket);
      r.rows.push_back({r.experiment, n, sep_cell, cell.m, alpha_text(cell.alpha), out.bracket.lower,
                        out.bracket.exact ? Tag::exact : Tag::certified_lower, Verdict::inconclusive, 2 * g});
      SepBracket cb;
      cb.lower = out.witness ? out.witness->separation : 0.0;
      coset_column.push_back(cb);
      r.rows.push_back({r.experiment, n, coset_cell, cell.m, alpha_text(cell.alpha), cb.lower, Tag::certified_lower,
                        Verdict::inconclusive, 2 * g + 1});
      std::string prov = "n=" + std::to_string(n) + " " + sep_cell + " source=" + out.bracket.source;
      if (out.witness) {
        prov += " strategy=" + out.witness->strategy;
        r.artifacts.emplace_back("witness_n" + std::to_string(n) + "_m" + std::to_string(cell.m) + "_a" +
                                     file_tag(cell.alpha) + ".txt",
                                 out.witness->serialize());
      } else {
        prov += " witness: " + out.witness_note;
      }
      r.provenance.push_back(prov);
    }
    set_verdict(r, sep_cell, cell_verdict(column, c.delta, tail));
    // Coset witnesses claim only lower bounds, so they never refute.
    const Verdict cv = cell_verdict(coset_column, c.delta, tail);
    set_verdict(r, coset_cell, cv == Verdict::refutes ? Verdict::inconclusive : cv);
  }
  for (std::size_t t = 0; t < T; ++t) {
    const int m = c.capacity_targets[t];
    const std::string cell = "capacity;m=" + std::to_string(m);
    for (std::size_t k = 0; k < N; ++k) {
      const GrowthRow& row = growth[k][t];
      const int n = c.ns[k];
      const double value = row.certificate ? row.certificate->verified_capacity : 0;
      r.rows.push_back({r.experiment, n, cell, m, format_real(c.capacity_alpha), value, Tag::certified_lower,
                        Verdict::inconclusive, 2 * G + t});
      if (row.certificate) {
        CapacityCertificate cert = *row.certificate;
        cert.space_source = "chain sym_chain " + std::to_string(n) + " " + c.chain.metric.to_string();
        r.artifacts.emplace_back("capacity_n" + std::to_string(n) + "_m" + std::to_string(m) + ".txt", cert.serialize());
        r.provenance.push_back("n=" + std::to_string(n) + " " + cell + " eps=" + to_string(cert.eps));
      } else {
        r.provenance.push_back("n=" + std::to_string(n) + " " + cell + " " + row.note);
      }
    }
    const bool last_ok = N > 0 && growth[N - 1][t].certificate.has_value();
    set_verdict(r, cell, last_ok ? Verdict::supports : Verdict::inconclusive);
  }
  return r;
}

// ---------------------------------------------------------------- concentration

Report run_hamming(const ExperimentConfig& c, std::size_t workers) {
  Report r;
  r.experiment = "hamming_concentration";
  const std::size_t N = c.ns.size();
  std::vector<double> values(N);
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < N; ++k)
    tasks.push_back([&, k] {
      GroupChainSpec spec = c.chain;
      double size = 1;
      for (int i = 2; i <= c.ns[k] && size <= static_cast<double>(c.samples); ++i) size *= i;
      spec.sampled = size > static_cast<double>(c.samples);
      spec.sample_size = c.samples;
      ObsDiamOptions opts;
      opts.functions = c.functions;
      values[k] = in_cell("n=" + std::to_string(c.ns[k]), [&] {
        const GroupSpace G = build_chain_space(spec, c.ns[k]);
        return obs_diam_estimate(G, c.kappa, static_cast<std::uint64_t>(c.seed), opts);
      });
    });
  run_tasks(tasks, workers);
  const std::string cell = "obs-diam;kappa=" + format_real(c.kappa);
  for (std::size_t k = 0; k < N; ++k)
    r.rows.push_back({r.experiment, c.ns[k], cell, 0, format_real(c.kappa), values[k], Tag::estimate,
                      Verdict::inconclusive, 0});
  set_verdict(r, cell, Verdict::inconclusive);
  r.provenance.push_back(std::string("family=") + std::string(family_name(c.chain.family)) +
                         " metric=" + c.chain.metric.to_string() + " samples=" + std::to_string(c.samples) +
                         " functions=" + std::to_string(c.functions));
  return r;
}

// Largest fibre diameter of the map dropping the last coordinate from depth
// n+1 to depth n, after checking the map is 1-Lipschitz, measure preserving,
// and lets every point lift along any target at no extra cost. Those three
// facts bound d_conc(X_{n+1}, X_n) by the fibre diameter.
double fibre_bound(const GroupSpace& A, const GroupSpace& B, std::string& note) {
  constexpr double tol = 1e-12;
  const std::uint32_t mask = (std::uint32_t{1} << B.n) - 1;
  std::map<std::uint32_t, Index> where;
  for (std::size_t i = 0; i < B.bits.size(); ++i) where[B.bits[i]] = static_cast<Index>(i);
  const Index na = A.space.size(), nb = B.space.size();
  std::vector<Index> pi(static_cast<std::size_t>(na));
  Vector<double> pushed = Vector<double>::Zero(nb);
  for (Index x = 0; x < na; ++x) {
    pi[static_cast<std::size_t>(x)] = where.at(A.bits[static_cast<std::size_t>(x)] & mask);
    pushed(pi[static_cast<std::size_t>(x)]) += A.space.weight(x);
  }
  for (Index y = 0; y < nb; ++y)
    if (std::abs(pushed(y) - B.space.weight(y)) > 1e-12) note = "projection does not preserve the measure";
  double fibre = 0;
  for (Index x = 0; x < na; ++x)
    for (Index y = 0; y < na; ++y) {
      const Index px = pi[static_cast<std::size_t>(x)], py = pi[static_cast<std::size_t>(y)];
      if (B.space.dist(px, py) > A.space.dist(x, y) + tol) note = "projection is not 1-Lipschitz";
      if (px == py) fibre = std::max(fibre, A.space.dist(x, y));
    }
  std::vector<std::vector<Index>> fibres(static_cast<std::size_t>(nb));
  for (Index x = 0; x < na; ++x) fibres[static_cast<std::size_t>(pi[static_cast<std::size_t>(x)])].push_back(x);
  for (Index x = 0; x < na; ++x)
    for (Index t = 0; t < nb; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (Index y : fibres[static_cast<std::size_t>(t)]) best = std::min(best, A.space.dist(x, y));
      if (best > B.space.dist(pi[static_cast<std::size_t>(x)], t) + tol) note = "some point does not lift";
    }
  return note.empty() ? fibre : std::numeric_limits<double>::infinity();
}

Report run_cantor(const ExperimentConfig& c, std::size_t workers) {
  Report r;
  r.experiment = "cantor_concentration";
  const std::size_t N = c.ns.size();
  std::vector<double> step(N);
  std::vector<std::string> notes(N);
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < N; ++k)
    tasks.push_back([&, k] {
      GroupChainSpec spec = c.chain;
      spec.n_hi = c.ns[k] + 1;
      spec.exact_copy_cap = 0;
      step[k] = in_cell("depth=" + std::to_string(c.ns[k]), [&] {
        const GroupSpace B = build_chain_space(spec, c.ns[k]);
        const GroupSpace A = build_chain_space(spec, c.ns[k] + 1);
        return fibre_bound(A, B, notes[k]);
      });
    });
  run_tasks(tasks, workers);
  // The tail row bounds d_conc(X_n, X_{last+1}) by adding step bounds, which
  // needs consecutive depths.
  for (std::size_t k = 0; k < N; ++k) {
    r.rows.push_back({r.experiment, c.ns[k], "dconc-step", 0, "", step[k], Tag::estimate, Verdict::inconclusive, 0});
    if (!notes[k].empty()) r.provenance.push_back("depth=" + std::to_string(c.ns[k]) + " " + notes[k]);
  }
  bool consecutive = true;
  for (std::size_t k = 1; k < N; ++k) consecutive = consecutive && c.ns[k] == c.ns[k - 1] + 1;
  if (consecutive)
    for (std::size_t k = 0; k < N; ++k) {
      double tail = 0;
      for (std::size_t j = k; j < N; ++j) tail += step[j];
      r.rows.push_back({r.experiment, c.ns[k], "dconc-tail", 0, "", tail, Tag::estimate, Verdict::inconclusive, 1});
    }
  sort_rows(r);
  set_verdict(r, "dconc-step", Verdict::inconclusive);
  if (consecutive) set_verdict(r, "dconc-tail", Verdict::inconclusive);
  r.provenance.push_back("metric=" + c.chain.metric.to_string() +
                         " bound: d_conc(X_{n+1}, X_n) <= largest fibre diameter of the coordinate projection");
  return r;
}

// ---------------------------------------------------------------- cube

Report run_cube(const ExperimentConfig& c, std::size_t workers) {
  Report r;
  r.experiment = "cube_demo";
  const std::size_t N = c.ns.size(), G = c.grid.size();
  std::vector<std::vector<double>> values(N, std::vector<double>(G));
  std::vector<MMSpace> samples;
  for (std::size_t k = 0; k < N; ++k) {
    const MMSpace full = cube_grid(c.ns[k], c.cube_resolution);
    std::vector<Index> idx(static_cast<std::size_t>(full.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Index>(i);
    Rng rng(static_cast<std::uint64_t>(c.seed) + static_cast<std::uint64_t>(c.ns[k]));
    rng.shuffle(idx);
    idx.resize(std::min(idx.size(), c.cube_points));
    std::sort(idx.begin(), idx.end());
    const Index n = static_cast<Index>(idx.size());
    Matrix<double> d(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) d(i, j) = full.dist(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    samples.push_back(make_space<double>(d, uniform_weights<double>(n)));
  }
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t g = 0; g < G; ++g)
      tasks.push_back([&, k, g] {
        SepOptions opts;
        opts.effort = Effort::bracket;
        values[k][g] = in_cell("dim=" + std::to_string(c.ns[k]) + " " + cell_name(c.grid[g]), [&] {
          return sep_m(samples[k], c.grid[g].m, to_double(c.grid[g].alpha), opts).lower;
        });
      });
  run_tasks(tasks, workers);
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t g = 0; g < G; ++g)
      r.rows.push_back({r.experiment, c.ns[k], cell_name(c.grid[g]), c.grid[g].m, alpha_text(c.grid[g].alpha),
                        values[k][g], Tag::estimate, Verdict::inconclusive, g});
  // Sampled sub-grids cannot certify either asymptotic claim about the cube.
  for (const auto& cell : c.grid) set_verdict(r, cell_name(cell), Verdict::inconclusive);
  r.provenance.push_back("resolution=" + std::to_string(c.cube_resolution) +
                         " points=" + std::to_string(c.cube_points) + " metric=sup");
  return r;
}

Report run_verify(const ExperimentConfig& c) {
  Report r;
  r.experiment = "verify_certificate";
  const VerifyResult v = verify_certificate_file(c.certificate);
  r.rows.push_back({r.experiment, v.n, v.kind, 0, "", v.value, Tag::certified_lower,
                    v.valid ? Verdict::supports : Verdict::refutes, 0});
  r.summary.push_back(v.kind + " " + (v.valid ? "valid" : "invalid: " + v.reason));
  r.provenance.push_back("file=" + c.certificate);
  return r;
}

}  // namespace

MMSpace cube_grid(int dim, int resolution) {
  if (dim < 1 || resolution < 1) throw Error(ErrorCode::BadConfig, "cube needs dim >= 1 and resolution >= 1");
  double size = std::pow(static_cast<double>(resolution), dim);
  if (size > 20000) throw Error(ErrorCode::TooLarge, "cube grid with " + format_real(size) + " points");
  const Index n = static_cast<Index>(size);
  std::vector<std::vector<int>> coords(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(dim)));
  for (Index i = 0; i < n; ++i) {
    Index rest = i;
    for (int a = 0; a < dim; ++a) {
      coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = static_cast<int>(rest % resolution);
      rest /= resolution;
    }
  }
  Matrix<double> d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      int gap = 0;
      for (int a = 0; a < dim; ++a)
        gap = std::max(gap, std::abs(coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
                                     coords[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)]));
      d(i, j) = static_cast<double>(gap) / resolution;
    }
  return validate_space<double>(default_labels(n), std::move(d), uniform_weights<double>(n), SpaceMode::metric,
                                validation_tolerance<double>(), false);
}

Report run(const ExperimentConfig& config, std::size_t workers) {
  Report r;
  switch (config.experiment) {
    case ExperimentKind::sym_dissipation: r = run_sym(config, workers); break;
    case ExperimentKind::hamming_concentration: r = run_hamming(config, workers); break;
    case ExperimentKind::cantor_concentration: r = run_cantor(config, workers); break;
    case ExperimentKind::cube_demo: r = run_cube(config, workers); break;
    case ExperimentKind::verify_certificate: r = run_verify(config); break;
  }
  sort_rows(r);
  r.provenance.insert(r.provenance.begin(),
                      {std::string("tool mmgeo ") + MMGEO_VERSION, "experiment " + r.experiment,
                       "seed " + std::to_string(config.seed), "exact_cap " + std::to_string(config.exact_cap)});
  return r;
}

std::string to_csv(const Report& report) {
  std::ostringstream os;
  os << "experiment,n,cell,m,alpha,value,tag,verdict\n";
  for (const auto& row : report.rows)
    os << row.experiment << ',' << row.n << ',' << row.cell << ',' << row.m << ',' << row.alpha << ','
       << (std::isfinite(row.value) ? format_real(row.value) : std::string("inf")) << ',' << to_string(row.tag) << ','
       << to_string(row.verdict) << '\n';
  return os.str();
}

std::string to_svg(const Report& report) {
  constexpr double W = 640, H = 400, L = 60, R = 160, T = 30, B = 50;
  std::vector<std::string> cells;
  for (const auto& row : report.rows)
    if (std::find(cells.begin(), cells.end(), row.cell) == cells.end()) cells.push_back(row.cell);
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0;
  for (const auto& row : report.rows)
    if (std::isfinite(row.value)) {
      x0 = std::min(x0, static_cast<double>(row.n));
      x1 = std::max(x1, static_cast<double>(row.n));
      y1 = std::max(y1, row.value);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 <= 0) y1 = 1;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto px = [&](double n) { return L + (n - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - v / y1 * (H - T - B); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << report.experiment << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\">n</text>\n";
  os << "<text x=\"10\" y=\"" << (H - B + T) / 2 << "\" font-size=\"12\">value</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 15 << "\" font-size=\"10\">" << num(x0) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 15 << "\" font-size=\"10\">" << num(x1) << "</text>\n";
  os << "<text x=\"" << L - 35 << "\" y=\"" << T + 4 << "\" font-size=\"10\">" << num(y1) << "</text>\n";
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const char* colour = colours[ci % (sizeof colours / sizeof *colours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    bool first = true;
    for (const auto& row : report.rows)
      if (row.cell == cells[ci] && std::isfinite(row.value)) {
        os << (first ? "" : " ") << num(px(row.n)) << ',' << num(py(row.value));
        first = false;
      }
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 15 * (ci + 1) << "\" font-size=\"10\" fill=\"" << colour
       << "\">" << cells[ci] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> emit(const Report& report, const std::string& name, OutputFormat format,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir + "': " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& file, const std::string& text) {
    const std::string path = (fs::path(out_dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    written.push_back(path);
  };
  put(name + (format == OutputFormat::csv ? ".csv" : ".svg"), format == OutputFormat::csv ? to_csv(report) : to_svg(report));
  std::string prov;
  for (const auto& line : report.provenance) prov += line + '\n';
  for (const auto& line : report.summary) prov += "verdict " + line + '\n';
  put(name + ".provenance.txt", prov);
  for (const auto& [file, text] : report.artifacts) put(file, text);
  return written;
}

ExactMMSpace certificate_space(const std::string& source, const std::string& trailing_text) {
  std::istringstream in(source);
  std::string kind;
  in >> kind;
  if (kind == "inline") {
    std::istringstream body(trailing_text);
    LoadedSpace loaded = read_space(body);
    return *loaded.exact;
  }
  if (kind == "chain") {
    std::string family, metric;
    int n = 0;
    in >> family >> n;
    std::getline(in >> std::ws, metric);
    GroupChainSpec spec;
    spec.family = parse_family(family);
    spec.metric = MetricSpec::parse(metric);
    spec.n_lo = spec.n_hi = n;
    const GroupSpace G = build_chain_space(spec, n);
    if (!G.exact) throw Error(ErrorCode::TooLarge, "no exact copy for '" + source + "'");
    return *G.exact;
  }
  throw Error(ErrorCode::ParseError, "unknown space source '" + source + "'");
}

VerifyResult verify_certificate_text(const std::string& text) {
  VerifyResult v;
  const std::string header = text.substr(0, text.find('\n'));
  try {
    if (header == "coset-witness v1") {
      v.kind = "coset-witness";
      const CosetWitness w = CosetWitness::parse(text);
      v.n = w.n;
      v.value = w.separation;
      v.reason = verify_coset_witness(w);
    } else if (header == "capacity-certificate v1") {
      v.kind = "capacity-certificate";
      const auto end = text.find("\nend\n");
      const std::string trailing = end == std::string::npos ? std::string() : text.substr(end + 5);
      const CapacityCertificate c = CapacityCertificate::parse(text);
      const ExactMMSpace X = certificate_space(c.space_source, trailing);
      v.n = static_cast<int>(X.size());
      v.value = c.verified_capacity;
      v.reason = verify_capacity_certificate(X, c);
    } else {
      v.kind = "unknown";
      v.reason = "unrecognized header '" + header + "'";
    }
  } catch (const Error& e) {
    v.reason = e.what();
  }
  v.valid = v.reason.empty();
  return v;
}

VerifyResult verify_certificate_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return verify_certificate_text(ss.str());
}

}  // namespace mmgeo
