#include "mmgeo/groups.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mmgeo/error.hpp"
#include "mmgeo/rng.hpp"
#include "mmgeo/spacefile.hpp"

namespace mmgeo {

// ---------------------------------------------------------------- permutations

Permutation::Permutation(std::vector<int> mapping) : map_(std::move(mapping)) {
  std::vector<char> seen(map_.size(), 0);
  for (int v : map_) {
    if (v < 0 || v >= degree() || seen[static_cast<std::size_t>(v)])
      throw Error(ErrorCode::DegreeMismatch, "mapping is not a bijection of {0.." + std::to_string(degree() - 1) + "}");
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  Permutation p;
  p.map_ = std::move(m);
  return p;
}

Permutation Permutation::inverse() const {
  Permutation p;
  p.map_.assign(map_.size(), 0);
  for (std::size_t k = 0; k < map_.size(); ++k) p.map_[static_cast<std::size_t>(map_[k])] = static_cast<int>(k);
  return p;
}

Permutation operator*(const Permutation& f, const Permutation& g) {
  if (f.degree() != g.degree()) throw Error(ErrorCode::DegreeMismatch, "composing permutations of different degree");
  Permutation p;
  p.map_.resize(g.map_.size());
  for (std::size_t k = 0; k < g.map_.size(); ++k) p.map_[k] = f(g.map_[k]);
  return p;
}

std::string Permutation::label() const {
  std::string s = "[";
  for (std::size_t k = 0; k < map_.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(map_[k]);
  }
  return s + "]";
}

std::vector<Permutation> enumerate_sym(int n) {
  if (n < 0) throw Error(ErrorCode::DegreeMismatch, "negative degree");
  if (n > 8) throw Error(ErrorCode::TooLarge, "enumerate_sym: n = " + std::to_string(n) + " exceeds 8");
  std::vector<Permutation> out;
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

std::size_t lex_rank(const Permutation& p) {
  const int n = p.degree();
  std::size_t rank = 0;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    std::size_t smaller = 0;
    for (int v = 0; v < p(k); ++v) smaller += used[static_cast<std::size_t>(v)] ? 0 : 1;
    used[static_cast<std::size_t>(p(k))] = 1;
    rank = rank * static_cast<std::size_t>(n - k) + smaller;
  }
  return rank;
}

// ---------------------------------------------------------------- metrics

MetricSpec MetricSpec::weighted(std::vector<double> weights) {
  MetricSpec s;
  s.base = Base::weighted_mismatch;
  s.weights = std::move(weights);
  s.validate();
  return s;
}

MetricSpec MetricSpec::hamming() {
  MetricSpec s;
  s.base = Base::hamming_normalized;
  return s;
}

MetricSpec MetricSpec::inverse_of(const MetricSpec& inner) {
  if (inner.inverse) throw Error(ErrorCode::BadMetric, "inverse_of nests at most once");
  MetricSpec s = inner;
  s.inverse = true;
  return s;
}

double MetricSpec::weight(int k) const {
  if (weights.empty()) return std::ldexp(1.0, -(k + 1));
  if (k < 0 || static_cast<std::size_t>(k) >= weights.size())
    throw Error(ErrorCode::BadMetric, "weight list has no entry for position " + std::to_string(k));
  return weights[static_cast<std::size_t>(k)];
}

void MetricSpec::validate() const {
  if (base != Base::weighted_mismatch) return;
  double total = 0;
  for (double w : weights) {
    if (!(w > 0) || !std::isfinite(w)) throw Error(ErrorCode::BadMetric, "weights must be positive");
    total += w;
  }
  if (total > 1 + 1e-12) throw Error(ErrorCode::BadMetric, "weights sum above 1");
}

std::string MetricSpec::to_string() const {
  std::string s;
  if (base == Base::hamming_normalized) {
    s = "hamming";
  } else {
    s = "weighted";
    for (std::size_t k = 0; k < weights.size(); ++k) {
      std::ostringstream os;
      os.precision(17);
      os << weights[k];
      s += (k ? "," : ":") + os.str();
    }
  }
  return inverse ? "inverse(" + s + ")" : s;
}

MetricSpec MetricSpec::parse(const std::string& text) {
  std::string t = text;
  t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
  if (t.rfind("inverse(", 0) == 0 || t.rfind("inverse_of(", 0) == 0) {
    if (t.back() != ')') throw Error(ErrorCode::BadMetric, "unbalanced parenthesis in '" + text + "'");
    const std::size_t open = t.find('(');
    return inverse_of(parse(t.substr(open + 1, t.size() - open - 2)));
  }
  if (t == "hamming" || t == "hamming_normalized") return hamming();
  if (t == "weighted" || t == "weighted_mismatch") return weighted();
  const std::size_t colon = t.find(':');
  if (colon != std::string::npos && (t.substr(0, colon) == "weighted" || t.substr(0, colon) == "weighted_mismatch")) {
    std::vector<double> w;
    std::stringstream ss(t.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        w.push_back(to_double(parse_rational(item)));
      } catch (const Error&) {
        throw Error(ErrorCode::BadMetric, "bad weight '" + item + "'");
      }
    }
    if (w.empty()) throw Error(ErrorCode::BadMetric, "empty weight list");
    return weighted(std::move(w));
  }
  throw Error(ErrorCode::BadMetric, "unknown metric '" + text + "'");
}

namespace {

// Mismatch positions of the evaluated pair, after inversion if requested.
template <typename F>
void for_each_mismatch(const MetricSpec& spec, const Permutation& g, const Permutation& h, F&& f) {
  if (g.degree() != h.degree()) throw Error(ErrorCode::DegreeMismatch, "metric on permutations of different degree");
  if (spec.inverse) {
    // g^-1(k) != h^-1(k) with k = g(j) iff j != h^-1(g(j)); walk k directly.
    const Permutation gi = g.inverse(), hi = h.inverse();
    for (int k = 0; k < g.degree(); ++k)
      if (gi(k) != hi(k)) f(k);
  } else {
    for (int k = 0; k < g.degree(); ++k)
      if (g(k) != h(k)) f(k);
  }
}

Rational metric_eval_exact(const MetricSpec& spec, const Permutation& g, const Permutation& h) {
  Rational total = 0;
  int count = 0;
  for_each_mismatch(spec, g, h, [&](int k) {
    ++count;
    if (spec.base == MetricSpec::Base::weighted_mismatch) total += exact_rational(spec.weight(k));
  });
  if (spec.base == MetricSpec::Base::hamming_normalized) return g.degree() ? Rational(count, g.degree()) : Rational(0);
  return total;
}

// Distance on mismatch patterns given as plain arrays (inverses precomputed).
double mismatch_value(const MetricSpec& spec, const std::vector<int>& a, const std::vector<int>& b,
                      const std::vector<double>& w) {
  double total = 0;
  int count = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != b[k]) {
      total += w[k];
      ++count;
    }
  if (spec.base == MetricSpec::Base::hamming_normalized) return a.empty() ? 0.0 : double(count) / double(a.size());
  return total;
}

std::vector<double> weight_table(const MetricSpec& spec, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  if (spec.base == MetricSpec::Base::weighted_mismatch)
    for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = spec.weight(k);
  return w;
}

// The arrays the metric compares: g itself, or g^-1 for inverse specs.
std::vector<std::vector<int>> patterns(const MetricSpec& spec, const std::vector<Permutation>& elems) {
  std::vector<std::vector<int>> out;
  out.reserve(elems.size());
  for (const auto& g : elems) out.push_back(spec.inverse ? g.inverse().mapping() : g.mapping());
  return out;
}

std::string bits_label(std::uint32_t x, int depth) {
  std::string s;
  for (int j = 0; j < depth; ++j) s += ((x >> j) & 1u) ? '1' : '0';
  return s;
}

double cantor_dist(const MetricSpec& spec, std::uint32_t x, std::uint32_t y, int depth) {
  const std::uint32_t diff = x ^ y;
  if (spec.base == MetricSpec::Base::hamming_normalized)
    return depth ? double(__builtin_popcount(diff)) / double(depth) : 0.0;
  double total = 0;
  for (int j = 0; j < depth; ++j)
    if ((diff >> j) & 1u) total += spec.weight(j);
  return total;
}

Rational cantor_dist_exact(const MetricSpec& spec, std::uint32_t x, std::uint32_t y, int depth) {
  const std::uint32_t diff = x ^ y;
  if (spec.base == MetricSpec::Base::hamming_normalized)
    return depth ? Rational(__builtin_popcount(diff), depth) : Rational(0);
  Rational total = 0;
  for (int j = 0; j < depth; ++j)
    if ((diff >> j) & 1u) total += exact_rational(spec.weight(j));
  return total;
}

MMSpace known_metric(std::vector<std::string> labels, Matrix<double> d) {
  const Index n = d.rows();
  return validate_space<double>(std::move(labels), std::move(d), uniform_weights<double>(n), SpaceMode::metric,
                                validation_tolerance<double>(), false);
}

ExactMMSpace known_metric_exact(std::vector<std::string> labels, Matrix<Rational> d) {
  const Index n = d.rows();
  Vector<Rational> w(n);
  for (Index i = 0; i < n; ++i) w(i) = Rational(1, n);
  return validate_space<Rational>(std::move(labels), std::move(d), std::move(w), SpaceMode::metric, Rational(0),
                                  false);
}

// n! when it fits, otherwise nullopt.
std::optional<std::uint64_t> factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) {
    if (f > ~std::uint64_t{0} / static_cast<std::uint64_t>(k)) return std::nullopt;
    f *= static_cast<std::uint64_t>(k);
  }
  return f;
}

}  // namespace

double metric_eval(const MetricSpec& spec, const Permutation& g, const Permutation& h) {
  double total = 0;
  int count = 0;
  for_each_mismatch(spec, g, h, [&](int k) {
    ++count;
    if (spec.base == MetricSpec::Base::weighted_mismatch) total += spec.weight(k);
  });
  if (spec.base == MetricSpec::Base::hamming_normalized) return g.degree() ? double(count) / g.degree() : 0.0;
  return total;
}

// ---------------------------------------------------------------- chain spaces

GroupSpace build_chain_space(const GroupChainSpec& spec, int n) {
  spec.metric.validate();
  if (n < 0) throw Error(ErrorCode::DegreeMismatch, "negative chain index");
  if (spec.sampled && spec.seed < 0) throw Error(ErrorCode::BadSeed, "seed must be non-negative");
  if (spec.metric.base == MetricSpec::Base::weighted_mismatch && !spec.metric.weights.empty() &&
      spec.metric.weights.size() < static_cast<std::size_t>(n))
    throw Error(ErrorCode::BadMetric, "weight list shorter than the degree " + std::to_string(n));

  GroupSpace G;
  G.family = spec.family;
  G.metric = spec.metric;
  G.n = n;
  G.sampled = spec.sampled;

  if (spec.family == Family::cantor_chain) {
    const int cap = spec.sampled ? 31 : 14;
    if (n > cap) throw Error(ErrorCode::TooLarge, "cantor depth " + std::to_string(n) + " exceeds " + std::to_string(cap));
    const std::uint64_t order = std::uint64_t{1} << n;
    if (spec.sampled) {
      if (spec.sample_size == 0 || spec.sample_size > order)
        throw Error(ErrorCode::BadSample, "sample size must lie in [1, 2^depth]");
      Rng rng(static_cast<std::uint64_t>(spec.seed));
      std::set<std::uint32_t> seen;
      while (G.bits.size() < spec.sample_size) {
        const auto x = static_cast<std::uint32_t>(rng.below(order));
        if (seen.insert(x).second) G.bits.push_back(x);
      }
    } else {
      for (std::uint64_t x = 0; x < order; ++x) G.bits.push_back(static_cast<std::uint32_t>(x));
      // Every element is its own inverse.
      G.inverse_index.resize(G.bits.size());
      std::iota(G.inverse_index.begin(), G.inverse_index.end(), Index{0});
      G.identity = 0;
    }
    const auto N = static_cast<Index>(G.bits.size());
    Matrix<double> d(N, N);
    std::vector<std::string> labels;
    for (Index i = 0; i < N; ++i) {
      labels.push_back(bits_label(G.bits[static_cast<std::size_t>(i)], n));
      for (Index j = 0; j < N; ++j)
        d(i, j) = cantor_dist(spec.metric, G.bits[static_cast<std::size_t>(i)], G.bits[static_cast<std::size_t>(j)], n);
    }
    if (!spec.sampled && static_cast<std::size_t>(N) <= spec.exact_copy_cap) {
      Matrix<Rational> de(N, N);
      for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j)
          de(i, j) = cantor_dist_exact(spec.metric, G.bits[static_cast<std::size_t>(i)],
                                       G.bits[static_cast<std::size_t>(j)], n);
      G.exact = known_metric_exact(labels, std::move(de));
    }
    G.space = known_metric(std::move(labels), std::move(d)).with_sampled_flag(spec.sampled);
    return G;
  }

  if (spec.sampled) {
    const auto order = factorial(n);
    if (spec.sample_size == 0 || (order && spec.sample_size > *order))
      throw Error(ErrorCode::BadSample, "sample size must lie in [1, n!]");
    Rng rng(static_cast<std::uint64_t>(spec.seed));
    std::set<std::vector<int>> seen;
    std::vector<int> m(static_cast<std::size_t>(n));
    while (G.elements.size() < spec.sample_size) {
      std::iota(m.begin(), m.end(), 0);
      rng.shuffle(m);
      if (seen.insert(m).second) G.elements.emplace_back(m);
    }
  } else {
    if (n > 7) throw Error(ErrorCode::TooLarge, "exact Sym(n) spaces stop at n = 7");
    G.elements = enumerate_sym(n);
    G.inverse_index.resize(G.elements.size());
    for (std::size_t i = 0; i < G.elements.size(); ++i)
      G.inverse_index[i] = static_cast<Index>(lex_rank(G.elements[i].inverse()));
    G.identity = 0;
  }

  const auto N = static_cast<Index>(G.elements.size());
  const auto pat = patterns(spec.metric, G.elements);
  const auto w = weight_table(spec.metric, n);
  Matrix<double> d(N, N);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) {
    labels.push_back(G.elements[static_cast<std::size_t>(i)].label());
    d(i, i) = 0;
    for (Index j = 0; j < i; ++j)
      d(i, j) = d(j, i) = mismatch_value(spec.metric, pat[static_cast<std::size_t>(i)], pat[static_cast<std::size_t>(j)], w);
  }
  if (!spec.sampled && static_cast<std::size_t>(N) <= spec.exact_copy_cap) {
    Matrix<Rational> de(N, N);
    for (Index i = 0; i < N; ++i) {
      de(i, i) = 0;
      for (Index j = 0; j < i; ++j)
        de(i, j) = de(j, i) =
            metric_eval_exact(spec.metric, G.elements[static_cast<std::size_t>(i)], G.elements[static_cast<std::size_t>(j)]);
    }
    G.exact = known_metric_exact(labels, std::move(de));
  }
  for (std::size_t i = 0; i < G.elements.size(); ++i)
    if (G.elements[i] == Permutation::identity(n)) G.identity = static_cast<Index>(i);
  G.space = known_metric(std::move(labels), std::move(d)).with_sampled_flag(spec.sampled);
  return G;
}

// ---------------------------------------------------------------- cosets

namespace {

std::vector<int> coset_key(const Permutation& g, const std::vector<int>& S, bool right) {
  std::vector<int> key;
  key.reserve(S.size());
  const Permutation gi = right ? g.inverse() : Permutation();
  for (int s : S) key.push_back(right ? gi(s) : g(s));
  return key;
}

std::vector<PointSet> group_by_key(const std::vector<Permutation>& elems, const std::vector<int>& S, bool right) {
  std::map<std::vector<int>, PointSet> cosets;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    for (int s : S)
      if (s < 0 || s >= elems[i].degree())
        throw Error(ErrorCode::DegreeMismatch, "stabilized point " + std::to_string(s) + " outside the degree");
    cosets[coset_key(elems[i], S, right)].push_back(static_cast<Index>(i));
  }
  std::vector<PointSet> out;
  for (auto& [key, members] : cosets) out.push_back(std::move(members));
  return out;
}

}  // namespace

std::vector<PointSet> coset_partition(int n, const std::vector<int>& S) {
  return group_by_key(enumerate_sym(n), S, true);
}

namespace {

bool invariance_trials(const MetricSpec& spec, int n, std::uint64_t seed, int trials, bool right) {
  if (n <= 1) return true;
  Rng rng(seed);
  auto random_perm = [&] {
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 0);
    rng.shuffle(m);
    return Permutation(m);
  };
  for (int t = 0; t < trials; ++t) {
    const Permutation f = random_perm(), g = random_perm(), h = random_perm();
    const double base = metric_eval(spec, g, h);
    const double moved = right ? metric_eval(spec, g * f, h * f) : metric_eval(spec, f * g, f * h);
    if (std::abs(base - moved) > 1e-12) return false;
  }
  return true;
}

}  // namespace

bool is_right_invariant(const MetricSpec& spec, int n, std::uint64_t seed, int trials) {
  return invariance_trials(spec, n, seed, trials, true);
}

bool is_left_invariant(const MetricSpec& spec, int n, std::uint64_t seed, int trials) {
  return invariance_trials(spec, n, seed, trials, false);
}

// ---------------------------------------------------------------- witness

namespace {

// Least cost of a mismatch at the base point: the ball of this radius around
// e lies in Stab(0).
double base_delta(const MetricSpec& metric, int n) {
  if (metric.base == MetricSpec::Base::hamming_normalized) return 2.0 / n;
  return metric.weight(0);
}

constexpr std::size_t kExhaustivePairs = 20'000'000;
constexpr std::size_t kSampledPairs = 2'000'000;

// Smallest cross distance between blocks; exhaustive when the pair count is
// moderate, otherwise seeded sampling. Stops early below `stop_below`.
double cross_separation(const MetricSpec& metric, int n, const std::vector<Permutation>& elems,
                        const std::vector<PointSet>& blocks, double stop_below) {
  const auto pat = patterns(metric, elems);
  const auto w = weight_table(metric, n);
  auto dist = [&](Index a, Index b) {
    return mismatch_value(metric, pat[static_cast<std::size_t>(a)], pat[static_cast<std::size_t>(b)], w);
  };
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = i + 1; j < blocks.size(); ++j) pairs += blocks[i].size() * blocks[j].size();
  double best = std::numeric_limits<double>::infinity();
  if (pairs <= kExhaustivePairs) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = i + 1; j < blocks.size(); ++j)
        for (Index a : blocks[i])
          for (Index b : blocks[j]) {
            best = std::min(best, dist(a, b));
            if (best < stop_below) return best;
          }
    return best;
  }
  Rng rng(0x5eed);
  for (std::size_t t = 0; t < kSampledPairs; ++t) {
    const std::size_t i = rng.below(blocks.size());
    std::size_t j = rng.below(blocks.size() - 1);
    if (j >= i) ++j;
    const Index a = blocks[i][rng.below(blocks[i].size())];
    const Index b = blocks[j][rng.below(blocks[j].size())];
    best = std::min(best, dist(a, b));
    if (best < stop_below) return best;
  }
  return best;
}

Rational ceil_rational(const Rational& x) {
  BigInt num = boost::multiprecision::numerator(x), den = boost::multiprecision::denominator(x);
  BigInt q = num / den;
  if (q * den < num) q += 1;
  return Rational(q);
}

}  // namespace

CosetWitness theorem_witness(int n, int m, const std::vector<Rational>& kappas, const MetricSpec& metric,
                             WitnessStrategy strategy) {
  if (m < 1) throw Error(ErrorCode::BadQuery, "m must be at least 1");
  if (kappas.size() != static_cast<std::size_t>(m + 1))
    throw Error(ErrorCode::BadQuery, "expected m + 1 = " + std::to_string(m + 1) + " thresholds");
  Rational total = 0;
  for (const auto& k : kappas) {
    if (k <= 0) throw Error(ErrorCode::BadQuery, "thresholds must be positive");
    total += k;
  }
  if (total >= 1) throw Error(ErrorCode::KappaSumNotBelowOne, "sum of thresholds is " + to_string(total));
  if (n < 1 || n > 8) throw Error(ErrorCode::TooLarge, "theorem_witness enumerates Sym(n) for 1 <= n <= 8");
  metric.validate();
  if (!is_right_invariant(metric, n)) throw Error(ErrorCode::MetricNotRightInvariant, metric.to_string());

  const auto elems = enumerate_sym(n);
  const double delta = base_delta(metric, n);
  for (const auto& g : elems)
    if (metric_eval(metric, Permutation::identity(n), g) < delta && g(0) != 0)
      throw Error(ErrorCode::BadMetric, "ball of radius " + std::to_string(delta) + " leaves Stab(0)");

  const auto cosets = group_by_key(elems, {0}, true);
  const long q_star = static_cast<long>(cosets.size());

  CosetWitness w;
  w.n = n;
  w.m = m;
  w.metric = metric;
  w.kappas = kappas;
  w.q_star = q_star;
  w.delta = delta;

  // Number of cosets per block.
  std::vector<long> take(static_cast<std::size_t>(m + 1), 0);
  auto proof_path = [&] {
    const Rational alpha = *std::max_element(kappas.begin(), kappas.end());
    if ((m + 1) * alpha >= 1) throw Error(ErrorCode::AlphaOutOfRange, "proof path needs (m+1) max kappa < 1");
    BigInt p = boost::multiprecision::numerator(alpha), q = boost::multiprecision::denominator(alpha);
    if ((m + 1) * p + m + 1 > q) {
      const BigInt gap = q - (m + 1) * p;
      const BigInt c = (BigInt(m + 1) + gap - 1) / gap;
      p *= c;
      q *= c;
    }
    if (BigInt(q_star) < q)
      throw Error(ErrorCode::ChainTooShort, "needs " + q.str() + " cosets, Sym(" + std::to_string(n) + ") has " +
                                                std::to_string(q_star));
    const BigInt lhs = (p + 1) * q_star;
    const BigInt p_star = lhs / q, r = lhs - p_star * q;
    if ((m + 1) * p_star > q_star || Rational(p_star, q_star) <= alpha)
      throw Error(ErrorCode::ChainTooShort, "p* = " + p_star.str() + " does not fit");
    w.strategy = "proof";
    w.p = p;
    w.q = q;
    w.p_star = p_star;
    w.r = r;
    std::fill(take.begin(), take.end(), static_cast<long>(p_star));
  };
  auto direct = [&] {
    long used = 0;
    for (int i = 0; i <= m; ++i) {
      take[static_cast<std::size_t>(i)] =
          std::max(1L, static_cast<long>(ceil_rational(kappas[static_cast<std::size_t>(i)] * q_star).convert_to<double>()));
      used += take[static_cast<std::size_t>(i)];
    }
    if (used > q_star)
      throw Error(ErrorCode::ChainTooShort, "direct blocks need " + std::to_string(used) + " cosets, Sym(" +
                                                std::to_string(n) + ") has " + std::to_string(q_star));
    w.strategy = "direct";
  };
  if (strategy == WitnessStrategy::proof) {
    proof_path();
  } else if (strategy == WitnessStrategy::direct) {
    direct();
  } else {
    try {
      proof_path();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ChainTooShort && e.code() != ErrorCode::AlphaOutOfRange) throw;
      direct();
    }
  }

  std::size_t next = 0;
  for (int i = 0; i <= m; ++i) {
    std::vector<Index> reps;
    PointSet block;
    for (long c = 0; c < take[static_cast<std::size_t>(i)]; ++c, ++next) {
      const PointSet& coset = cosets[next];
      reps.push_back(coset.front());
      block.insert(block.end(), coset.begin(), coset.end());
    }
    std::sort(block.begin(), block.end());
    w.masses.emplace_back(static_cast<long>(block.size()), static_cast<long>(elems.size()));
    w.representatives.push_back(std::move(reps));
    w.blocks.push_back(std::move(block));
  }
  w.separation = cross_separation(metric, n, elems, w.blocks, -1.0);
  if (const std::string problem = verify_coset_witness(w); !problem.empty())
    throw Error(ErrorCode::BlocksNotSeparated, problem);
  return w;
}

std::string verify_coset_witness(const CosetWitness& w) {
  if (w.n < 1 || w.n > 8) return "degree out of range";
  if (w.blocks.size() != static_cast<std::size_t>(w.m + 1) || w.kappas.size() != w.blocks.size() ||
      w.masses.size() != w.blocks.size() || w.representatives.size() != w.blocks.size())
    return "expected m + 1 blocks, thresholds, masses and representative sets";
  const auto elems = enumerate_sym(w.n);
  const auto N = static_cast<Index>(elems.size());
  const auto cosets = group_by_key(elems, w.stabilized, true);
  std::vector<long> coset_of(elems.size(), -1);
  for (std::size_t c = 0; c < cosets.size(); ++c)
    for (Index i : cosets[c]) coset_of[static_cast<std::size_t>(i)] = static_cast<long>(c);

  std::vector<int> owner(elems.size(), -1);
  std::set<long> rep_cosets;
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    std::set<long> block_cosets;
    for (Index i : w.blocks[b]) {
      if (i < 0 || i >= N) return "block " + std::to_string(b) + " has an index outside Sym(n)";
      if (owner[static_cast<std::size_t>(i)] != -1) return "blocks overlap at element " + std::to_string(i);
      owner[static_cast<std::size_t>(i)] = static_cast<int>(b);
      block_cosets.insert(coset_of[static_cast<std::size_t>(i)]);
    }
    // B_b = H F_b: the block is exactly the union of its representatives' cosets.
    std::set<long> from_reps;
    std::size_t expected = 0;
    for (Index r : w.representatives[b]) {
      if (r < 0 || r >= N || owner[static_cast<std::size_t>(r)] != static_cast<int>(b))
        return "representative outside its block";
      const long c = coset_of[static_cast<std::size_t>(r)];
      if (!rep_cosets.insert(c).second) return "two representatives share a coset";
      from_reps.insert(c);
      expected += cosets[static_cast<std::size_t>(c)].size();
    }
    if (from_reps != block_cosets || expected != w.blocks[b].size())
      return "block " + std::to_string(b) + " is not the union of its representatives' cosets";
    const Rational mass(static_cast<long>(w.blocks[b].size()), static_cast<long>(N));
    if (mass != w.masses[b]) return "recorded mass of block " + std::to_string(b) + " is wrong";
    const bool strict = w.strategy == "proof";
    if (strict ? !(mass > w.kappas[b]) : !(mass >= w.kappas[b]))
      return "block " + std::to_string(b) + " mass " + to_string(mass) + " misses threshold " + to_string(w.kappas[b]);
  }
  const double sep = cross_separation(w.metric, w.n, elems, w.blocks, w.delta);
  if (sep < w.delta) return "cross pair at distance " + format_real(sep) + " below delta " + format_real(w.delta);
  return {};
}

std::string CosetWitness::serialize() const {
  std::ostringstream os;
  os << "coset-witness v1\n";
  os << "n " << n << "\nm " << m << "\nmetric " << metric.to_string() << "\nstabilized";
  for (int s : stabilized) os << ' ' << s;
  os << "\nstrategy " << strategy << "\nkappas";
  for (const auto& k : kappas) os << ' ' << to_string(k);
  os << "\ndelta " << format_real(delta) << "\nseparation " << format_real(separation);
  os << "\nproof " << p << ' ' << q << ' ' << p_star << ' ' << q_star << ' ' << r << '\n';
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    os << "mass " << b << ' ' << to_string(masses[b]) << "\nrep " << b;
    for (Index i : representatives[b]) os << ' ' << i;
    os << "\nblock " << b;
    for (Index i : blocks[b]) os << ' ' << i;
    os << '\n';
  }
  return os.str();
}

CosetWitness CosetWitness::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& why) { return Error(ErrorCode::ParseError, "coset-witness: " + why); };
  if (!std::getline(in, line) || line != "coset-witness v1") throw fail("missing header");
  CosetWitness w;
  w.stabilized.clear();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "n") {
      ls >> w.n;
    } else if (key == "m") {
      ls >> w.m;
    } else if (key == "metric") {
      std::string rest;
      std::getline(ls, rest);
      w.metric = MetricSpec::parse(rest);
    } else if (key == "stabilized") {
      for (int s; ls >> s;) w.stabilized.push_back(s);
    } else if (key == "strategy") {
      ls >> w.strategy;
    } else if (key == "kappas") {
      for (std::string t; ls >> t;) w.kappas.push_back(parse_rational(t));
    } else if (key == "delta") {
      std::string t;
      ls >> t;
      w.delta = to_double(parse_rational(t));
    } else if (key == "separation") {
      std::string t;
      ls >> t;
      w.separation = t == "inf" ? std::numeric_limits<double>::infinity() : to_double(parse_rational(t));
    } else if (key == "proof") {
      std::string a, b, c, e;
      ls >> a >> b >> c >> w.q_star >> e;
      w.p = BigInt(a);
      w.q = BigInt(b);
      w.p_star = BigInt(c);
      w.r = BigInt(e);
    } else if (key == "mass" || key == "rep" || key == "block") {
      std::size_t b;
      if (!(ls >> b)) throw fail("missing block number");
      auto grow = [&](auto& v) {
        if (v.size() <= b) v.resize(b + 1);
      };
      if (key == "mass") {
        std::string t;
        ls >> t;
        grow(w.masses);
        w.masses[b] = parse_rational(t);
      } else {
        auto& target = key == "rep" ? w.representatives : w.blocks;
        grow(target);
        for (Index i; ls >> i;) target[b].push_back(i);
      }
    } else {
      throw fail("unknown key '" + key + "'");
    }
    if (ls.fail() && !ls.eof()) throw fail("bad value on line '" + line + "'");
  }
  return w;
}

// ---------------------------------------------------------------- inversion

GroupSpace invert_space(const GroupSpace& G) {
  if (G.inverse_index.empty() || static_cast<Index>(G.inverse_index.size()) != G.space.size())
    throw Error(ErrorCode::NotAGroupSpace, "points are not closed under inversion");
  GroupSpace out = G;
  out.metric = G.metric;
  out.metric.inverse = !G.metric.inverse;
  const Index N = G.space.size();
  Matrix<double> d(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j)
      d(i, j) = G.space.dist(G.inverse_index[static_cast<std::size_t>(i)], G.inverse_index[static_cast<std::size_t>(j)]);
  out.space = validate_space<double>(G.space.points(), std::move(d), G.space.weights(), G.space.mode(),
                                     validation_tolerance<double>(), false)
                  .with_sampled_flag(G.space.sampled());
  if (G.exact) {
    Matrix<Rational> de(N, N);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j)
        de(i, j) =
            G.exact->dist(G.inverse_index[static_cast<std::size_t>(i)], G.inverse_index[static_cast<std::size_t>(j)]);
    out.exact = validate_space<Rational>(G.exact->points(), std::move(de), G.exact->weights(), G.exact->mode(),
                                         Rational(0), false);
  }
  return out;
}

// ---------------------------------------------------------------- observable diameter

double partial_diameter(const DiscreteMeasure<double>& measure, double kappa) {
  const double need = 1 - kappa - kMassTol;
  double best = std::numeric_limits<double>::infinity();
  double window = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    while (j < measure.size() && window < need) window += measure[j++].mass;
    if (window < need) break;
    best = std::min(best, measure[j - 1].value - measure[i].value);
    window -= measure[i].mass;
  }
  return std::isfinite(best) ? best : 0.0;
}

namespace {

void check_kappa(double kappa) {
  if (!(kappa > 0 && kappa < 1)) throw Error(ErrorCode::BadKappa, "kappa must lie in (0, 1)");
}

// Max trimmed spread of x -> d(x, A) over `count` random subsets A.
double distance_functions(const MMSpace& X, double kappa, Rng& rng, std::size_t count) {
  const Index N = X.size();
  double best = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t size = 1 + rng.below(std::min<std::uint64_t>(static_cast<std::uint64_t>(N), 8));
    std::vector<Index> A;
    for (std::size_t a = 0; a < size; ++a) A.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(N))));
    RealFunction f(N);
    for (Index x = 0; x < N; ++x) {
      double v = std::numeric_limits<double>::infinity();
      for (Index a : A) v = std::min(v, X.dist(x, a));
      f(x) = v;
    }
    best = std::max(best, partial_diameter(pushforward(X, f), kappa));
  }
  return best;
}

}  // namespace

double obs_diam_estimate(const MMSpace& X, double kappa, std::uint64_t seed, const ObsDiamOptions& opts) {
  check_kappa(kappa);
  Rng rng(seed);
  return distance_functions(X, kappa, rng, opts.functions);
}

double obs_diam_estimate(const GroupSpace& G, double kappa, std::uint64_t seed, const ObsDiamOptions& opts) {
  check_kappa(kappa);
  Rng rng(seed);
  const bool coords = opts.coordinate_functions && G.family == Family::sym_chain && G.n >= 2;
  const std::size_t distance_count = coords ? opts.functions / 2 : opts.functions;
  double best = distance_functions(G.space, kappa, rng, distance_count);
  if (!coords) return best;
  const Index N = G.space.size();
  const int n = G.n;
  for (std::size_t t = distance_count; t < opts.functions; ++t) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<char> in_T(static_cast<std::size_t>(n), 0), in_V(static_cast<std::size_t>(n), 0);
    for (int k = 0; k < n / 2; ++k) in_T[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    rng.shuffle(order);
    for (int k = 0; k < n / 2; ++k) in_V[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    RealFunction f(N);
    for (Index x = 0; x < N; ++x) {
      const Permutation& g = G.elements[static_cast<std::size_t>(x)];
      int count = 0;
      for (int k = 0; k < n; ++k) count += in_T[static_cast<std::size_t>(k)] && in_V[static_cast<std::size_t>(g(k))];
      f(x) = double(count) / n;
    }
    if (!is_lipschitz(G.space, f, 1.0)) continue;
    best = std::max(best, partial_diameter(pushforward(G.space, f), kappa));
  }
  return best;
}

// ---------------------------------------------------------------- capacity blocks

std::optional<std::vector<PointSet>> coset_blocks(const GroupSpace& G, double delta, std::size_t count) {
  if (G.family != Family::sym_chain || G.metric.base != MetricSpec::Base::weighted_mismatch || count == 0)
    return std::nullopt;
  // Elements in different cosets of Stab({0..s-1}) mismatch somewhere below s,
  // which costs at least the smallest of those weights.
  int s = 0;
  double smallest = std::numeric_limits<double>::infinity();
  while (s < G.n && std::min(smallest, G.metric.weight(s)) >= delta) smallest = std::min(smallest, G.metric.weight(s++));
  if (s == 0) return std::nullopt;
  std::vector<int> S(static_cast<std::size_t>(s));
  std::iota(S.begin(), S.end(), 0);
  const auto cosets = group_by_key(G.elements, S, G.metric.inverse);
  if (cosets.size() < count) return std::nullopt;
  std::vector<PointSet> blocks(count);
  for (std::size_t c = 0; c < cosets.size(); ++c) {
    auto& b = blocks[c % count];
    b.insert(b.end(), cosets[c].begin(), cosets[c].end());
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  return blocks;
}

CosetQuotient coset_quotient(const GroupSpace& G, int s) {
  if (G.family != Family::sym_chain || G.sampled) throw Error(ErrorCode::NotAGroupSpace, "quotient needs a full Sym(n)");
  if (s < 1 || s > G.n) throw Error(ErrorCode::BadQuery, "stabilized prefix must have 1 <= s <= n");
  std::vector<int> S(static_cast<std::size_t>(s));
  std::iota(S.begin(), S.end(), 0);
  const auto cosets = group_by_key(G.elements, S, G.metric.inverse);
  const Index k = static_cast<Index>(cosets.size());
  CosetQuotient out;
  out.coset.assign(static_cast<std::size_t>(G.space.size()), 0);
  Vector<double> w = Vector<double>::Zero(k);
  for (Index c = 0; c < k; ++c)
    for (Index x : cosets[static_cast<std::size_t>(c)]) {
      out.coset[static_cast<std::size_t>(x)] = c;
      w(c) += G.space.weight(x);
    }
  Matrix<double> d = Matrix<double>::Constant(k, k, std::numeric_limits<double>::infinity());
  for (Index x = 0; x < G.space.size(); ++x)
    for (Index y = 0; y < G.space.size(); ++y) {
      const Index a = out.coset[static_cast<std::size_t>(x)], b = out.coset[static_cast<std::size_t>(y)];
      if (a != b) d(a, b) = std::min(d(a, b), G.space.dist(x, y));
    }
  d.diagonal().setZero();
  try {
    out.space = validate_space<double>(default_labels(k), std::move(d), std::move(w), SpaceMode::metric,
                                       validation_tolerance<double>(), true);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadMetric, std::string("coset distances are not a metric: ") + e.what());
  }
  return out;
}

}  // namespace mmgeo
