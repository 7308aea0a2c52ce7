#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "mmgeo/mmcore.hpp"
#include "mmgeo/spacefile.hpp"

using namespace mmgeo;

namespace {

MMSpace two_point(double gap, double wa = 0.5, double wb = 0.5) {
  Matrix<double> d(2, 2);
  d << 0, gap, gap, 0;
  Vector<double> w(2);
  w << wa, wb;
  return make_space<double>(d, w);
}

template <typename S>
ErrorCode code_of(S&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::BadConfig;
}

// Oracle: the infimum is attained at a gap value or at a tail-mass value, so
// test every such candidate directly against the definition.
Rational me_oracle(const Vector<Rational>& w, const Vector<Rational>& f, const Vector<Rational>& g) {
  std::vector<Rational> cand;
  const Index n = w.size();
  auto tail = [&](const Rational& eps) {
    Rational m = 0;
    for (Index i = 0; i < n; ++i)
      if (abs_value<Rational>(f(i) - g(i)) > eps) m += w(i);
    return m;
  };
  for (Index i = 0; i < n; ++i) {
    cand.push_back(abs_value<Rational>(f(i) - g(i)));
    cand.push_back(tail(cand.back()));
  }
  cand.push_back(tail(Rational(0)));
  Rational best = -1;
  for (const auto& e : cand) {
    if (e < 0) continue;
    if (tail(e) <= e && (best < 0 || e < best)) best = e;
  }
  return best;
}

}  // namespace

TEST_CASE("validate_space accepts and rejects the basic shapes") {
  Matrix<double> one(1, 1);
  one << 0;
  Vector<double> w1(1);
  w1 << 1.0;
  CHECK(make_space<double>(one, w1).size() == 1);
  CHECK(two_point(1).size() == 2);
  CHECK(code_of([] { two_point(1, 0.6, 0.6); }) == ErrorCode::WeightsNotProbability);
  CHECK(code_of([] { two_point(-1); }) == ErrorCode::NegativeDistance);

  Matrix<double> asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK(code_of([&] { make_space<double>(asym, uniform_weights<double>(2)); }) == ErrorCode::AsymmetricMatrix);
  Matrix<double> diag(2, 2);
  diag << 0.1, 1, 1, 0;
  CHECK(code_of([&] { make_space<double>(diag, uniform_weights<double>(2)); }) == ErrorCode::NonzeroDiagonal);
  Matrix<double> tri(3, 3);
  tri << 0, 1, 3, 1, 0, 1, 3, 1, 0;
  CHECK(code_of([&] { make_space<double>(tri, uniform_weights<double>(3)); }) == ErrorCode::TriangleViolation);
  CHECK(make_space<double>(tri, uniform_weights<double>(3), SpaceMode::pseudo).mode() == SpaceMode::pseudo);
}

TEST_CASE("support lists exactly the positive-weight points") {
  CHECK(support(two_point(1)) == PointSet{0, 1});
  CHECK(support(two_point(1, 1.0, 0.0)) == PointSet{0});
  Vector<double> w(3);
  w << 0.25, 0, 0.75;
  auto X = line_space<double>({0, 1, 2}, w);
  CHECK(support(X) == PointSet{0, 2});
  auto R = restrict_to_support(X);
  CHECK(R.size() == 2);
  CHECK(R.dist(0, 1) == 2);
}

TEST_CASE("pushforward merges equal values") {
  auto X = two_point(1);
  RealFunction c(2);
  c << 3, 3;
  auto m = pushforward(X, c);
  REQUIRE(m.size() == 1);
  CHECK(m[0].value == 3);
  CHECK(m[0].mass == 1.0);

  RealFunction f(2);
  f << 0, 1;
  m = pushforward(X, f);
  REQUIRE(m.size() == 2);
  CHECK(m[0].mass == 0.5);
  CHECK(m[1].mass == 0.5);

  Vector<double> w(3);
  w << 0.25, 0.25, 0.5;
  auto Y = line_space<double>({0, 1, 2}, w);
  RealFunction g(3);
  g << 1, 1, 2;
  m = pushforward(Y, g);
  REQUIRE(m.size() == 2);
  CHECK(m[0].value == 1);
  CHECK(m[0].mass == 0.5);
  CHECK(m[1].value == 2);
  CHECK(m[1].mass == 0.5);
}

TEST_CASE("me_mu worked values") {
  auto X = two_point(1);
  RealFunction f(2), g(2);
  f << 0, 0;
  g << 0, 1;
  CHECK(me_mu(X, f, f) == 0);
  CHECK(me_mu(X, f, g) == 0.5);
  RealFunction h(2);
  h << 0.3, -0.3;
  CHECK(me_mu(X, f, h) <= 0.3);
}

TEST_CASE("me_mu agrees with the candidate-enumeration oracle in exact arithmetic") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = gen::uniform_int(rng, 1, 7);
    auto counts = gen::random_counts(rng, n, 4);
    int total = 0;
    for (int c : counts) total += c;
    Vector<Rational> w(n), f(n), g(n);
    for (Index i = 0; i < n; ++i) {
      w(i) = Rational(counts[static_cast<std::size_t>(i)], total);
      f(i) = Rational(gen::uniform_int(rng, -4, 4), 4);
      g(i) = Rational(gen::uniform_int(rng, -4, 4), gen::uniform_int(rng, 1, 6));
    }
    CHECK(me_mu<Rational>(w, f, g) == me_oracle(w, f, g));
  }
}

TEST_CASE("me_mu pseudo-metric properties on random triples") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = gen::uniform_int(rng, 1, 8);
    auto X = gen::random_space(rng, n);
    auto f = gen::random_function(rng, n), g = gen::random_function(rng, n), h = gen::random_function(rng, n);
    CHECK(me_mu(X, f, g) == me_mu(X, g, f));
    CHECK(me_mu(X, f, h) <= me_mu(X, f, g) + me_mu(X, g, h) + 1e-9);
    CHECK(me_mu(X, f, g) <= (f - g).cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST_CASE("me_mu vanishes exactly when functions agree on the support") {
  Vector<double> w(3);
  w << 0.5, 0, 0.5;
  auto X = line_space<double>({0, 1, 2}, w);
  RealFunction f(3), g(3);
  f << 1, 5, 2;
  g << 1, -7, 2;
  CHECK(me_mu(X, f, g) == 0);
  g(2) = 2.5;
  CHECK(me_mu(X, f, g) > 0);
}

TEST_CASE("parametrize lays out weight intervals in index order") {
  Vector<double> w(2);
  w << 0.25, 0.75;
  auto P = parametrize(line_space<double>({0, 1}, w));
  CHECK(P.intervals[0] == std::pair<double, double>{0, 0.25});
  CHECK(P.intervals[1] == std::pair<double, double>{0.25, 1});
  CHECK(P.locate(0.1) == 0);
  CHECK(P.locate(0.25) == 1);

  Vector<double> one(1);
  one << 1;
  CHECK(parametrize(line_space<double>({0}, one)).intervals[0] == std::pair<double, double>{0, 1});

  Vector<Rational> thirds = uniform_weights<Rational>(3);
  auto Q = parametrize(line_space<Rational>({0, 1, 2}, thirds));
  for (Index i = 0; i < 3; ++i) CHECK(Q.preimage_length(i) == Rational(1, 3));

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto X = gen::random_space(rng, gen::uniform_int(rng, 1, 9));
    auto R = parametrize(X);
    for (Index i = 0; i < X.size(); ++i) CHECK(std::abs(R.preimage_length(i) - X.weight(i)) <= 1e-12);
    CHECK(R.intervals.back().second == 1.0);
  }
}

TEST_CASE("hausdorff worked values and axioms") {
  auto L = line_space<double>({0, 0.6, 1.2}, uniform_weights<double>(3));
  CHECK(hausdorff(L, {0, 2}, {0, 2}) == 0);
  CHECK(hausdorff(two_point(1), {0}, {1}) == 1);
  CHECK(hausdorff(L, {0, 2}, {1}) == doctest::Approx(0.6));
  CHECK(std::isinf(hausdorff(L, {}, {1})));
  CHECK(hausdorff(L, {}, {}) == 0);

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = gen::uniform_int(rng, 2, 7);
    auto X = gen::random_space(rng, n);
    auto subset = [&] {
      PointSet s;
      while (s.empty())
        for (Index i = 0; i < n; ++i)
          if (gen::uniform_int(rng, 0, 1)) s.push_back(i);
      return s;
    };
    auto A = subset(), B = subset(), C = subset();
    CHECK(hausdorff(X, A, B) == hausdorff(X, B, A));
    CHECK(hausdorff(X, A, C) <= hausdorff(X, A, B) + hausdorff(X, B, C) + 1e-9);
    CHECK((hausdorff(X, A, B) == 0) == (A == B));
  }
}

TEST_CASE("isomorphism search and label permutation") {
  std::mt19937_64 rng(15);
  auto X = gen::random_space(rng, 5);
  std::vector<Index> perm{3, 0, 4, 1, 2};
  Matrix<double> d(5, 5);
  Vector<double> w(5);
  for (Index i = 0; i < 5; ++i) {
    w(perm[i]) = X.weight(i);
    for (Index j = 0; j < 5; ++j) d(perm[i], perm[j]) = X.dist(i, j);
  }
  auto Y = make_space<double>(d, w);
  CHECK(find_isomorphism(X, Y).has_value());
  auto Z = line_space<double>({0, 1, 3, 7, 15}, uniform_weights<double>(5));
  CHECK_FALSE(find_isomorphism(X, Z).has_value());
}

TEST_CASE("space file round trip keeps exact values") {
  const std::string text =
      "mmspace v1 n=3 mode=metric\n"
      "w 1/4\nw 0\nw 0.75\n"
      "d 0\nd 1 0\nd 2 1 0\n";
  std::istringstream in(text);
  auto loaded = read_space(in);
  CHECK(loaded.space.size() == 3);
  REQUIRE(loaded.exact.has_value());
  CHECK(loaded.exact->weight(0) == Rational(1, 4));
  CHECK(loaded.exact->weight(2) == Rational(3, 4));
  std::ostringstream out;
  write_space(out, *loaded.exact);
  CHECK(out.str() == "mmspace v1 n=3 mode=metric\nw 1/4\nw 0\nw 3/4\nd 0\nd 1 0\nd 2 1 0\n");

  std::ostringstream dbl;
  write_space(dbl, loaded.space);
  std::istringstream back(dbl.str());
  auto again = read_space(back);
  CHECK(again.space.dist() == loaded.space.dist());
  CHECK(again.space.weights() == loaded.space.weights());

  std::istringstream bad("mmspace v1 n=2 mode=metric\nw 0.5\nw 0.5\nd 0\nd 1 0.5\n");
  CHECK(code_of([&] { read_space(bad); }) == ErrorCode::NonzeroDiagonal);
  std::istringstream junk("mmspace v1 n=1 mode=metric\nw one\nd 0\n");
  CHECK(code_of([&] { read_space(junk); }) == ErrorCode::ParseError);
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("3/10") == Rational(3, 10));
  CHECK(parse_rational("-0.125") == Rational(-1, 8));
  CHECK(parse_rational("2.5e-1") == Rational(1, 4));
  CHECK(parse_rational("7") == 7);
  Rational r;
  CHECK(recognize_rational(1.0 / 3.0, 1000, 1e-12, r));
  CHECK(r == Rational(1, 3));
  CHECK_FALSE(recognize_rational(std::sqrt(2.0), 1000, 1e-12, r));
  CHECK(round_down(1.0 / 3.0, 10) == Rational(3, 10));
  CHECK(round_down(-0.25, 3) == Rational(-1, 3));
}
