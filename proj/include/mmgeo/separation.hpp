#pragma once

// Separation distances Sep(X; k_0..k_m): the largest d such that some sets
// B_0..B_m with mu(B_i) >= k_i have every cross pair at distance >= d.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mmgeo/mmcore.hpp"

namespace mmgeo {

inline constexpr double kMassTol = 1e-12;

enum class Effort { exact, bracket, automatic };

using SepWitness = std::vector<PointSet>;

struct SepBracket {
  double lower = 0;
  double upper = std::numeric_limits<double>::infinity();
  bool exact = false;
  /// Sets realizing `lower` (re-verified before being returned).
  std::optional<SepWitness> witness;
  /// Where the lower bound came from: "exact", "provided", "components",
  /// "search", or "empty".
  std::string source;
};

struct SepOptions {
  Effort effort = Effort::automatic;
  std::size_t exact_cap = 16;
  std::size_t max_m = 3;
  /// A point that some automorphism maps to any other point. When set, the
  /// exact search pins it into the first set.
  std::optional<Index> anchor;
  std::optional<SepWitness> provided;
  /// Node budget for the heuristic search used in bracket mode.
  std::size_t bracket_nodes = 20000;
};

/// Masses >= kappa (up to kMassTol) and all cross distances >= delta.
bool verify_sep_witness(const MMSpace& X, const std::vector<double>& kappas, const SepWitness& w, double delta);

/// Smallest cross distance of a witness (0 when two sets share a point).
double witness_separation(const MMSpace& X, const SepWitness& w);

/// Exact decision: do sets with the given masses and cross distances
/// >= delta exist? Returns a witness when they do. `node_limit` of 0 means
/// unlimited; when the budget runs out the result is std::nullopt and
/// `*exhausted` is set.
std::optional<SepWitness> sep_feasible(const MMSpace& X, const std::vector<double>& kappas, double delta,
                                       std::optional<Index> anchor = std::nullopt, std::size_t node_limit = 0,
                                       bool* exhausted = nullptr);

/// Ball-mass necessary condition: for each i, the points whose far mass
/// mu{y : d(x,y) >= delta} reaches sum_{j != i} k_j carry mass >= k_i, and
/// these sets jointly carry sum k_i.
bool ball_mass_admits(const MMSpace& X, const std::vector<double>& kappas, double delta);

SepBracket sep(const MMSpace& X, const std::vector<double>& kappas, const SepOptions& options = {});

/// Sep with m+1 equal thresholds alpha, 0 < alpha < 1/(m+1).
SepBracket sep_m(const MMSpace& X, int m, double alpha, const SepOptions& options = {});

struct RationalReduction {
  Rational alpha;
  long ell = 0;
  /// plan[i]: the uniform blocks whose union becomes set i.
  std::vector<std::vector<long>> plan;
};

/// kappa_i = p_i / q over the least common denominator q: alpha = 1/q,
/// ell = sum p_i - 1, and set i collects p_i consecutive blocks.
RationalReduction reduce_rational(const std::vector<Rational>& kappas);
/// Doubles must be recognizably rational (denominator <= max_denominator).
RationalReduction reduce_rational(const std::vector<double>& kappas, std::int64_t max_denominator = 1000000);

/// Groups an ell-witness (ell+1 sets of mass >= alpha) into a kappa-witness.
SepWitness transport_witness(const RationalReduction& r, const SepWitness& blocks);

// ---------------------------------------------------------------- report

struct DissipationRow {
  std::size_t space_index = 0;
  int m = 0;
  double alpha = 0;
  SepBracket bracket;
};

enum class Verdict { supports, refutes, inconclusive };
std::string_view to_string(Verdict v);

struct CellVerdict {
  int m = 0;
  double alpha = 0;
  Verdict verdict = Verdict::inconclusive;
};

struct DissipationReport {
  double delta = 0;
  std::vector<DissipationRow> rows;
  std::vector<CellVerdict> cells;
  /// Fixed wording: verdicts describe the finite prefix only.
  static constexpr std::string_view scope = "finite-prefix evidence";

  std::string csv() const;
};

/// One cell's verdict from its brackets in sequence order (rule below).
Verdict cell_verdict(const std::vector<SepBracket>& column, double delta, std::size_t tail_start = 0);

using WitnessProvider = std::function<std::optional<SepWitness>(std::size_t space_index, int m, double alpha)>;
using OptionsProvider = std::function<SepOptions(std::size_t space_index)>;

/// Per cell: `supports` when every lower bound from `tail_start` on is
/// >= delta, `refutes` when the last space's upper bound is < delta,
/// `inconclusive` otherwise.
DissipationReport dissipation_report(const std::vector<MMSpace>& seq, double delta,
                                     const std::vector<std::pair<int, double>>& grid, const SepOptions& options = {},
                                     const WitnessProvider& witnesses = {}, std::size_t tail_start = 0,
                                     const OptionsProvider& per_space = {});

}  // namespace mmgeo
