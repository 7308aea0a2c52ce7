#pragma once

// Finite permutation groups Sym(n) and the dyadic Cantor chain (Z/2)^D as
// metric measure spaces under invariant metrics with uniform (Haar) measure.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmgeo/mmcore.hpp"
#include "mmgeo/separation.hpp"

namespace mmgeo {

class Permutation {
 public:
  Permutation() = default;
  /// Raises DegreeMismatch unless `mapping` is a bijection of {0..n-1}.
  explicit Permutation(std::vector<int> mapping);
  static Permutation identity(int n);

  int degree() const { return static_cast<int>(map_.size()); }
  int operator()(int k) const { return map_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& mapping() const { return map_; }

  Permutation inverse() const;
  /// (f * g)(k) = f(g(k)).
  friend Permutation operator*(const Permutation& f, const Permutation& g);
  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation& a, const Permutation& b) { return a.map_ <=> b.map_; }

  std::string label() const;

 private:
  std::vector<int> map_;
};

/// All n! permutations in lexicographic order (identity first). n <= 8.
std::vector<Permutation> enumerate_sym(int n);

/// Lexicographic rank of a permutation, the index into enumerate_sym.
std::size_t lex_rank(const Permutation& p);

struct MetricSpec {
  enum class Base { weighted_mismatch, hamming_normalized };
  Base base = Base::weighted_mismatch;
  /// Mismatch weights; empty means 2^-(k+1).
  std::vector<double> weights;
  /// Evaluate the base metric on inverses (d^-(g,h) = d(g^-1, h^-1)).
  bool inverse = false;

  static MetricSpec weighted(std::vector<double> weights = {});
  static MetricSpec hamming();
  /// Raises BadMetric when `inner` is already an inverse.
  static MetricSpec inverse_of(const MetricSpec& inner);

  double weight(int k) const;
  /// Positive weights with sum <= 1; raises BadMetric otherwise.
  void validate() const;

  /// "weighted", "weighted:0.5,0.25", "hamming", "inverse(weighted)".
  std::string to_string() const;
  static MetricSpec parse(const std::string& text);
};

double metric_eval(const MetricSpec& spec, const Permutation& g, const Permutation& h);

enum class Family { sym_chain, cantor_chain };

struct GroupChainSpec {
  Family family = Family::sym_chain;
  MetricSpec metric = MetricSpec::inverse_of(MetricSpec::weighted());
  int n_lo = 1, n_hi = 1;
  bool sampled = false;
  std::size_t sample_size = 0;
  std::int64_t seed = 0;
  /// Exact rational copy of the space when |K_n| does not exceed this.
  std::size_t exact_copy_cap = 720;
};

struct GroupSpace {
  MMSpace space;
  std::optional<ExactMMSpace> exact;
  Family family = Family::sym_chain;
  MetricSpec metric;
  int n = 0;
  std::vector<Permutation> elements;  // sym_chain
  std::vector<std::uint32_t> bits;    // cantor_chain, coordinate j is bit j
  /// inverse_index[i] is the index of the inverse of element i; empty when
  /// the points are not closed under inversion (sampled spaces).
  std::vector<Index> inverse_index;
  bool sampled = false;
  /// Index of the identity element, when present.
  std::optional<Index> identity;
};

/// Sym(n) exact for n <= 7, Cantor depth <= 14; sampled Sym(n) for any n
/// (distinct uniform samples). Raises TooLarge, BadSeed, BadSample.
GroupSpace build_chain_space(const GroupChainSpec& spec, int n);

/// Right cosets Hg of H = pointwise stabilizer of S, keyed by (g^-1(s))_{s in S}
/// in lexicographic key order. Entries index enumerate_sym(n).
std::vector<PointSet> coset_partition(int n, const std::vector<int>& S);

/// Randomized check of d(gf, hf) = d(g, h).
bool is_right_invariant(const MetricSpec& spec, int n, std::uint64_t seed = 1, int trials = 200);
bool is_left_invariant(const MetricSpec& spec, int n, std::uint64_t seed = 1, int trials = 200);

enum class WitnessStrategy { proof, direct, automatic };

struct CosetWitness {
  int n = 0;
  int m = 0;
  std::vector<int> stabilized{0};
  std::string strategy;
  MetricSpec metric;
  std::vector<Rational> kappas;
  /// Proof path bookkeeping (zero for the direct strategy).
  BigInt p = 0, q = 0, p_star = 0, r = 0;
  long q_star = 0;
  /// Indices (into enumerate_sym(n)) of coset representatives F_i.
  std::vector<std::vector<Index>> representatives;
  std::vector<PointSet> blocks;
  std::vector<Rational> masses;
  double delta = 0;
  /// Smallest cross distance found, over all cross pairs.
  double separation = 0;

  std::string serialize() const;
  static CosetWitness parse(const std::string& text);
};

/// The equivariant witness: blocks are unions of right cosets of Stab(0),
/// certified to carry mass > kappa_i (proof) or >= kappa_i (direct) and to be
/// pairwise delta-separated with delta = w_0 (2/n for Hamming).
CosetWitness theorem_witness(int n, int m, const std::vector<Rational>& kappas, const MetricSpec& metric,
                             WitnessStrategy strategy = WitnessStrategy::automatic);

/// Re-checks masses in exact arithmetic and separation by direct evaluation.
/// Returns an empty string when valid, otherwise the first failure.
std::string verify_coset_witness(const CosetWitness& w);

/// The same points under d^-(x, y) = d(x^-1, y^-1); inverse_index records the
/// isometry x -> x^-1 onto the original space. Raises NotAGroupSpace.
GroupSpace invert_space(const GroupSpace& G);

struct ObsDiamOptions {
  std::size_t functions = 64;
  /// Include counting functions x -> |{k in T : x(k) in V}| / n (1-Lipschitz
  /// for the normalized Hamming metric; every candidate is verified).
  bool coordinate_functions = true;
};

/// Max over sampled 1-Lipschitz functions of the (1 - kappa)-partial diameter
/// of the push-forward. Raises BadKappa.
double obs_diam_estimate(const GroupSpace& G, double kappa, std::uint64_t seed, const ObsDiamOptions& opts = {});
double obs_diam_estimate(const MMSpace& X, double kappa, std::uint64_t seed, const ObsDiamOptions& opts = {});

/// Width of the shortest interval holding mass >= 1 - kappa.
double partial_diameter(const DiscreteMeasure<double>& measure, double kappa);

/// Blocks for capacity certificates: cosets of Stab({0..s-1}) with the
/// largest s that keeps 2^-s >= delta, dealt round-robin into `count` blocks.
std::optional<std::vector<PointSet>> coset_blocks(const GroupSpace& G, double delta, std::size_t count);

/// The cosets of Stab({0..s-1}) as points, with the smallest cross distance
/// between two cosets as their distance and the coset masses as weights.
/// A function Lipschitz on the quotient pulls back to one on G with the
/// same constant and the same me_mu distances. Raises NotAGroupSpace for
/// sampled or Cantor spaces and BadMetric when the result is not a metric.
struct CosetQuotient {
  MMSpace space;
  /// coset[i]: the quotient point of element i.
  std::vector<Index> coset;
};
CosetQuotient coset_quotient(const GroupSpace& G, int s = 1);

}  // namespace mmgeo
