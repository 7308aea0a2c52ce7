#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mmgeo/error.hpp"
#include "mmgeo/groups.hpp"
#include "mmgeo/packing.hpp"
#include "mmgeo/separation.hpp"

using namespace mmgeo;

namespace {

const MetricSpec kD = MetricSpec::weighted();
const MetricSpec kDinv = MetricSpec::inverse_of(MetricSpec::weighted());

Permutation random_perm(std::mt19937_64& rng, int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(m);
}

// Independent definitions straight from the formulas, in exact arithmetic.
Rational ref_weighted(const std::vector<int>& g, const std::vector<int>& h) {
  Rational total = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g[k] != h[k]) total += Rational(1, BigInt(1) << (k + 1));
  return total;
}

std::vector<int> ref_inverse(const std::vector<int>& g) {
  std::vector<int> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[static_cast<std::size_t>(g[k])] = static_cast<int>(k);
  return out;
}

Rational ref_dinv(const std::vector<int>& g, const std::vector<int>& h) {
  return ref_weighted(ref_inverse(g), ref_inverse(h));
}

GroupSpace sym(int n, MetricSpec metric = kDinv) {
  GroupChainSpec spec;
  spec.metric = std::move(metric);
  return build_chain_space(spec, n);
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("permutations: construction, composition, inverse") {
  expect_error(ErrorCode::DegreeMismatch, [] { Permutation({0, 0, 1}); });
  expect_error(ErrorCode::DegreeMismatch, [] { Permutation({0, 3, 1}); });
  const Permutation f({1, 2, 0}), g({0, 2, 1});
  CHECK((f * g).mapping() == std::vector<int>{1, 0, 2});  // f(g(k))
  CHECK((f * f.inverse()) == Permutation::identity(3));
  CHECK(f.label() == "[1,2,0]");
  expect_error(ErrorCode::DegreeMismatch, [&] { (void)(f * Permutation::identity(2)); });
}

TEST_CASE("enumerate_sym: counts, order, rank") {
  CHECK(enumerate_sym(1).size() == 1);
  const auto s3 = enumerate_sym(3);
  REQUIRE(s3.size() == 6);
  CHECK(s3.front() == Permutation::identity(3));
  CHECK(std::is_sorted(s3.begin(), s3.end()));
  const auto s8 = enumerate_sym(8);
  CHECK(s8.size() == 40320);
  for (std::size_t i = 0; i < s8.size(); i += 97) CHECK(lex_rank(s8[i]) == i);
  expect_error(ErrorCode::TooLarge, [] { enumerate_sym(9); });
}

TEST_CASE("metric_eval: worked values") {
  const Permutation e = Permutation::identity(3), t({1, 0, 2});
  CHECK(metric_eval(kD, e, t) == 0.75);
  CHECK(metric_eval(MetricSpec::hamming(), e, t) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  expect_error(ErrorCode::DegreeMismatch, [&] { metric_eval(kD, e, Permutation::identity(4)); });
  for (const auto& g : enumerate_sym(4)) {
    const Permutation e4 = Permutation::identity(4);
    CHECK(metric_eval(kDinv, e4, g) == metric_eval(kD, e4, g.inverse()));
    CHECK(exact_rational(metric_eval(kDinv, e4, g)) == ref_dinv(e4.mapping(), g.mapping()));
  }
}

TEST_CASE("metric specs: validation and text form") {
  expect_error(ErrorCode::BadMetric, [] { MetricSpec::weighted({0.5, -0.1}); });
  expect_error(ErrorCode::BadMetric, [] { MetricSpec::weighted({0.5, 0.4, 0.2}); });
  expect_error(ErrorCode::BadMetric, [] { MetricSpec::inverse_of(kDinv); });
  expect_error(ErrorCode::BadMetric, [] { MetricSpec::parse("euclid"); });
  for (const std::string text : {"weighted", "hamming", "inverse(weighted)", "inverse(hamming)", "weighted:0.5,0.25,0.125"}) {
    const MetricSpec m = MetricSpec::parse(text);
    CHECK(MetricSpec::parse(m.to_string()).to_string() == m.to_string());
  }
  CHECK(MetricSpec::parse("inverse(weighted:1/2,1/4,1/8)").weights == std::vector<double>{0.5, 0.25, 0.125});
  // Custom weights must cover the degree.
  GroupChainSpec spec;
  spec.metric = MetricSpec::weighted({0.5, 0.25});
  expect_error(ErrorCode::BadMetric, [&] { build_chain_space(spec, 3); });
}

TEST_CASE("invariance: d is left-invariant, d^- right-invariant, exactly") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Permutation f = random_perm(rng, n), g = random_perm(rng, n), h = random_perm(rng, n);
    CHECK(metric_eval(kD, f * g, f * h) == metric_eval(kD, g, h));
    CHECK(metric_eval(kDinv, g * f, h * f) == metric_eval(kDinv, g, h));
    const MetricSpec ham = MetricSpec::hamming();
    CHECK(metric_eval(ham, f * g, f * h) == metric_eval(ham, g, h));
    CHECK(metric_eval(ham, g * f, h * f) == metric_eval(ham, g, h));
  }
  CHECK(is_left_invariant(kD, 6));
  CHECK(is_right_invariant(kDinv, 6));
  CHECK_FALSE(is_right_invariant(kD, 6));
  CHECK_FALSE(is_left_invariant(kDinv, 6));
}

TEST_CASE("ball in subgroup: d^-(e, g) < 1/2 forces g(0) = 0, n <= 6") {
  for (int n = 1; n <= 6; ++n) {
    const Permutation e = Permutation::identity(n);
    for (const auto& g : enumerate_sym(n))
      if (metric_eval(kDinv, e, g) < 0.5) CHECK(g(0) == 0);
  }
}

TEST_CASE("build_chain_space: worked examples") {
  const GroupSpace s3 = sym(3, kD);
  CHECK(s3.space.size() == 6);
  for (Index i = 0; i < 6; ++i) CHECK(s3.space.weight(i) == doctest::Approx(1.0 / 6));
  CHECK(diameter(s3.space) == 0.875);
  REQUIRE(s3.exact);
  CHECK(diameter(*s3.exact) == Rational(7, 8));
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      CHECK(s3.exact->dist(i, j) == ref_weighted(s3.elements[static_cast<std::size_t>(i)].mapping(),
                                                 s3.elements[static_cast<std::size_t>(j)].mapping()));

  const GroupSpace s1 = sym(1);
  CHECK(s1.space.size() == 1);
  CHECK(s1.space.weight(0) == 1.0);

  GroupChainSpec cantor;
  cantor.family = Family::cantor_chain;
  cantor.metric = kD;
  const GroupSpace c1 = build_chain_space(cantor, 1);
  REQUIRE(c1.space.size() == 2);
  CHECK(c1.space.dist(0, 1) == 0.5);
  const GroupSpace c4 = build_chain_space(cantor, 4);
  CHECK(c4.space.size() == 16);
  CHECK(diameter(c4.space) == 0.9375);

  expect_error(ErrorCode::TooLarge, [] { sym(8); });
  cantor.n_hi = 15;
  expect_error(ErrorCode::TooLarge, [&] { build_chain_space(cantor, 15); });
}

TEST_CASE("build_chain_space: sampled mode") {
  GroupChainSpec spec;
  spec.metric = MetricSpec::hamming();
  spec.sampled = true;
  spec.sample_size = 50;
  spec.seed = 7;
  const GroupSpace a = build_chain_space(spec, 10), b = build_chain_space(spec, 10);
  CHECK(a.space.sampled());
  CHECK(a.inverse_index.empty());
  CHECK_FALSE(a.exact);
  CHECK(a.space.dist() == b.space.dist());
  std::set<std::vector<int>> distinct;
  for (const auto& g : a.elements) distinct.insert(g.mapping());
  CHECK(distinct.size() == 50);
  spec.seed = 8;
  CHECK(build_chain_space(spec, 10).space.dist() != a.space.dist());

  spec.seed = -1;
  expect_error(ErrorCode::BadSeed, [&] { build_chain_space(spec, 10); });
  spec.seed = 1;
  spec.sample_size = 7;
  expect_error(ErrorCode::BadSample, [&] { build_chain_space(spec, 3); });
  spec.sample_size = 6;
  CHECK(build_chain_space(spec, 3).space.size() == 6);
}

TEST_CASE("coset_partition: examples and exact coset masses") {
  const auto c = coset_partition(3, {0});
  REQUIRE(c.size() == 3);
  const auto elems = enumerate_sym(3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(c[k].size() == 2);
    for (Index i : c[k]) CHECK(elems[static_cast<std::size_t>(i)].inverse()(0) == static_cast<int>(k));
  }
  CHECK(coset_partition(3, {0, 1}).size() == 6);
  CHECK(coset_partition(3, {}).size() == 1);

  for (int n = 1; n <= 7; ++n) {
    const auto cosets = coset_partition(n, {0});
    CHECK(cosets.size() == static_cast<std::size_t>(n));
    const auto all = enumerate_sym(n);
    // H g = { h g : h(0) = 0 }: every coset is closed under left multiplication by H.
    for (const auto& coset : cosets) {
      CHECK(Rational(static_cast<long>(coset.size()), static_cast<long>(all.size())) == Rational(1, n));
      if (n <= 5) {
        std::set<Index> members(coset.begin(), coset.end());
        for (const auto& h : all) {
          if (h(0) != 0) continue;
          const Permutation hg = h * all[static_cast<std::size_t>(coset.front())];
          CHECK(members.count(static_cast<Index>(lex_rank(hg))) == 1);
        }
      }
    }
  }
}

TEST_CASE("theorem_witness: worked examples") {
  const std::vector<Rational> third{Rational(1, 3), Rational(1, 3)};
  expect_error(ErrorCode::ChainTooShort, [&] { theorem_witness(3, 1, third, kDinv, WitnessStrategy::proof); });

  const CosetWitness d3 = theorem_witness(3, 1, third, kDinv, WitnessStrategy::direct);
  CHECK(d3.strategy == "direct");
  const auto elems = enumerate_sym(3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(d3.masses[i] == Rational(1, 3));
    for (Index g : d3.blocks[i]) CHECK(elems[static_cast<std::size_t>(g)].inverse()(0) == static_cast<int>(i));
  }
  for (Index a : d3.blocks[0])
    for (Index b : d3.blocks[1])
      CHECK(ref_dinv(elems[static_cast<std::size_t>(a)].mapping(), elems[static_cast<std::size_t>(b)].mapping()) >=
            Rational(1, 2));

  const CosetWitness p6 = theorem_witness(6, 1, third, kDinv, WitnessStrategy::proof);
  CHECK(p6.strategy == "proof");
  CHECK(p6.p == 2);
  CHECK(p6.q == 6);
  CHECK(p6.q_star == 6);
  CHECK(p6.p_star == 3);
  CHECK(p6.r == 0);
  for (const auto& m : p6.masses) CHECK(m > Rational(1, 3));
  CHECK(p6.separation >= 0.5);
  CHECK(theorem_witness(6, 1, third, kDinv).strategy == "proof");
  CHECK(theorem_witness(3, 1, third, kDinv).strategy == "direct");

  expect_error(ErrorCode::KappaSumNotBelowOne,
               [] { theorem_witness(6, 1, {Rational(1, 2), Rational(1, 2)}, kDinv); });
  expect_error(ErrorCode::MetricNotRightInvariant, [&] { theorem_witness(6, 1, third, kD); });
  expect_error(ErrorCode::BadQuery, [&] { theorem_witness(6, 2, third, kDinv); });
}

TEST_CASE("theorem_witness: soundness against the space matrix") {
  std::mt19937_64 rng(5);
  for (int n = 3; n <= 6; ++n) {
    const GroupSpace G = sym(n);
    for (int t = 0; t < 12; ++t) {
      const int m = 1 + static_cast<int>(rng() % 3);
      const long den = (m + 1) + 1 + static_cast<long>(rng() % 12);
      std::vector<Rational> kappas(static_cast<std::size_t>(m + 1), Rational(1, den));
      CosetWitness w;
      try {
        w = theorem_witness(n, m, kappas, kDinv);
      } catch (const Error& e) {
        // Only the direct strategy's capacity can run out.
        CHECK(e.code() == ErrorCode::ChainTooShort);
        long need = 0;
        for (const auto& k : kappas) need += static_cast<long>(std::ceil(to_double(k) * n - 1e-12));
        CHECK(need > n);
        continue;
      }
      CHECK(verify_coset_witness(w).empty());
      std::vector<double> kd;
      for (const auto& k : kappas) kd.push_back(to_double(k));
      CHECK(verify_sep_witness(G.space, kd, w.blocks, 0.5));
      for (std::size_t b = 0; b < w.blocks.size(); ++b) CHECK(mass(*G.exact, w.blocks[b]) == w.masses[b]);
    }
  }
}

TEST_CASE("theorem_witness: serialization and tamper detection") {
  const CosetWitness w = theorem_witness(5, 2, {Rational(1, 5), Rational(1, 5), Rational(1, 5)}, kDinv);
  const std::string text = w.serialize();
  const CosetWitness back = CosetWitness::parse(text);
  CHECK(back.serialize() == text);
  CHECK(verify_coset_witness(back).empty());

  CosetWitness moved = back;  // swap one element across blocks
  std::swap(moved.blocks[0].back(), moved.blocks[1].back());
  CHECK_FALSE(verify_coset_witness(moved).empty());
  CosetWitness light = back;
  light.kappas[0] = Rational(1, 2);
  CHECK_FALSE(verify_coset_witness(light).empty());
  CosetWitness close = back;
  close.delta = 0.75;
  CHECK_FALSE(verify_coset_witness(close).empty());
  expect_error(ErrorCode::ParseError, [] { CosetWitness::parse("capacity-certificate v1\n"); });
}

TEST_CASE("invert_space: involution and isometry") {
  GroupChainSpec cantor;
  cantor.family = Family::cantor_chain;
  cantor.metric = kD;
  const GroupSpace c = build_chain_space(cantor, 3);
  CHECK(invert_space(c).space.dist() == c.space.dist());

  for (int n = 1; n <= 5; ++n) {
    const GroupSpace G = sym(n, kD);
    const GroupSpace I = invert_space(G);
    CHECK(I.metric.inverse);
    CHECK(invert_space(I).space.dist() == G.space.dist());
    const GroupSpace back = invert_space(I);
    const auto& a = back.exact->dist();
    const auto& b = G.exact->dist();
    bool same = true;
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) same = same && a(i, j) == b(i, j);
    CHECK(same);
    // Matches d^- evaluated from scratch.
    const GroupSpace direct = sym(n, kDinv);
    CHECK(I.space.dist() == direct.space.dist());
    // x -> x^-1 carries (K, d^-) isometrically and measure-preservingly onto (K, d).
    for (Index i = 0; i < I.space.size(); ++i) {
      const Index ii = I.inverse_index[static_cast<std::size_t>(i)];
      CHECK(I.space.weight(i) == G.space.weight(ii));
      for (Index j = 0; j < I.space.size(); ++j)
        CHECK(I.space.dist(i, j) == G.space.dist(ii, I.inverse_index[static_cast<std::size_t>(j)]));
    }
  }

  GroupChainSpec sampled;
  sampled.sampled = true;
  sampled.sample_size = 10;
  expect_error(ErrorCode::NotAGroupSpace, [&] { invert_space(build_chain_space(sampled, 5)); });
}

TEST_CASE("inversion preserves Sep, capacity and me_mu of transported functions") {
  SepOptions exact;
  exact.effort = Effort::exact;
  exact.exact_cap = 128;
  for (int n = 2; n <= 4; ++n) {
    const GroupSpace G = sym(n, kD);
    const GroupSpace I = invert_space(G);
    for (auto [m, a] : std::vector<std::pair<int, double>>{{1, 1.0 / 3}, {2, 1.0 / 5}, {3, 1.0 / 7}}) {
      const auto x = sep_m(G.space, m, a, exact), y = sep_m(I.space, m, a, exact);
      CHECK(x.exact);
      CHECK(y.exact);
      CHECK(x.lower == y.lower);
    }
    for (double eps : {0.1, 0.3, 0.6}) CHECK(capacity(G.space, eps).value == capacity(I.space, eps).value);
    std::mt19937_64 rng(static_cast<std::uint64_t>(n));
    for (int t = 0; t < 20; ++t) {
      const Index N = G.space.size();
      RealFunction f(N), g(N), ft(N), gt(N);
      for (Index i = 0; i < N; ++i) {
        f(i) = static_cast<double>(rng() % 5) / 4;
        g(i) = static_cast<double>(rng() % 5) / 4;
      }
      for (Index i = 0; i < N; ++i) {
        ft(i) = f(I.inverse_index[static_cast<std::size_t>(i)]);
        gt(i) = g(I.inverse_index[static_cast<std::size_t>(i)]);
      }
      CHECK(me_mu(G.space, f, g) == me_mu(I.space, ft, gt));
    }
  }
  // Sym(3), single cell, exact on both sides.
  const auto a = sep_m(sym(3, kDinv).space, 1, 1.0 / 3, exact);
  const auto b = sep_m(invert_space(sym(3, kD)).space, 1, 1.0 / 3, exact);
  CHECK(a.exact);
  CHECK(a.lower == b.lower);
  CHECK(a.lower == 0.75);
}

TEST_CASE("partial_diameter and obs_diam_estimate") {
  const DiscreteMeasure<double> mu{{0.0, 0.1}, {1.0, 0.8}, {3.0, 0.1}};
  CHECK(partial_diameter(mu, 0.1) == 1.0);
  CHECK(partial_diameter(mu, 0.05) == 3.0);
  CHECK(partial_diameter(mu, 0.3) == 0.0);
  CHECK(partial_diameter({}, 0.5) == 0.0);
  const DiscreteMeasure<double> split{{0.0, 0.5}, {1.0, 0.5}};
  CHECK(partial_diameter(split, 0.01) == 1.0);
  CHECK(partial_diameter(split, 0.5) == 0.0);

  CHECK(obs_diam_estimate(sym(1), 0.1, 3) == 0.0);
  const GroupSpace s4 = sym(4, MetricSpec::hamming());
  CHECK(obs_diam_estimate(s4, 0.999, 3) == 0.0);
  CHECK(obs_diam_estimate(s4, 0.1, 3) == obs_diam_estimate(s4, 0.1, 3));
  CHECK(obs_diam_estimate(s4, 0.1, 3) <= diameter(s4.space));
  expect_error(ErrorCode::BadKappa, [&] { obs_diam_estimate(s4, 0.0, 1); });
  expect_error(ErrorCode::BadKappa, [&] { obs_diam_estimate(s4.space, 1.0, 1); });

  GroupChainSpec spec;
  spec.metric = MetricSpec::hamming();
  spec.sampled = true;
  spec.sample_size = 2000;
  spec.seed = 1;
  const double small = obs_diam_estimate(build_chain_space(spec, 8), 0.1, 1);
  const double large = obs_diam_estimate(build_chain_space(spec, 40), 0.1, 1);
  CHECK(large < small);
}

TEST_CASE("coset_blocks: separated unions of cosets") {
  const GroupSpace G = sym(5);
  const auto blocks = coset_blocks(G, 0.5, 4);
  REQUIRE(blocks);
  CHECK(blocks->size() == 4);
  std::size_t total = 0;
  for (const auto& b : *blocks) total += b.size();
  CHECK(total == 120);
  CHECK(witness_separation(G.space, *blocks) >= 0.5);
  const auto finer = coset_blocks(G, 0.25, 8);
  REQUIRE(finer);
  CHECK(witness_separation(G.space, *finer) >= 0.25);
  CHECK_FALSE(coset_blocks(G, 0.5, 6));  // only five cosets of Stab(0)
  CHECK_FALSE(coset_blocks(sym(4, MetricSpec::hamming()), 0.5, 2));
}

TEST_CASE("coset_quotient: pulled-back functions keep Lipschitz constant and me distances") {
  const GroupSpace G = sym(3);
  const CosetQuotient Q = coset_quotient(G);
  REQUIRE(Q.space.size() == 3);
  for (Index a = 0; a < 3; ++a) {
    CHECK(Q.space.weight(a) == doctest::Approx(1.0 / 3));
    for (Index b = 0; b < 3; ++b) CHECK(Q.space.dist(a, b) == (a == b ? 0.0 : 0.625));
  }
  const FunctionNet net = lip_net(Q.space, 1, 1, 0.5);
  auto pull = [&](const RealFunction& f) {
    RealFunction out(G.space.size());
    for (Index x = 0; x < G.space.size(); ++x) out(x) = f(Q.coset[static_cast<std::size_t>(x)]);
    return out;
  };
  for (std::size_t i = 0; i < net.size(); ++i) {
    CHECK(is_lipschitz(G.space, pull(net.members[i]), 1.0));
    for (std::size_t j = 0; j < net.size(); j += 3)
      CHECK(me_mu(G.space, pull(net.members[i]), pull(net.members[j])) ==
            doctest::Approx(net.metric(static_cast<Index>(i), static_cast<Index>(j))).epsilon(1e-12));
  }
  // A subfamily never certifies more than the full net of the same grid.
  const double via_quotient = dconc_lower_to_point(net).value;
  const double full = dconc_lower_to_point(lip_net(G.space, 1, 1, 0.5)).value;
  CHECK(via_quotient > 0.01);
  CHECK(via_quotient <= full);
  const MMSpace point = make_space<double>(Matrix<double>::Zero(1, 1), uniform_weights<double>(1));
  CHECK(dconc_lower(Q.space, point, 1, 1, 0.5).value >= via_quotient);

  GroupChainSpec cantor;
  cantor.family = Family::cantor_chain;
  expect_error(ErrorCode::NotAGroupSpace, [&] { coset_quotient(build_chain_space(cantor, 2)); });
}
