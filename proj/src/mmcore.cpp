#include "mmgeo/mmcore.hpp"

namespace mmgeo {

ExactMMSpace to_exact(const MMSpace& X) {
  const Index n = X.size();
  Matrix<Rational> d(n, n);
  Vector<Rational> w(n);
  for (Index i = 0; i < n; ++i) {
    w(i) = exact_rational(X.weight(i));
    for (Index j = 0; j < n; ++j) d(i, j) = exact_rational(X.dist(i, j));
  }
  // Double weights rarely sum to exactly 1; renormalize in exact arithmetic.
  Rational total = 0;
  for (Index i = 0; i < n; ++i) total += w(i);
  for (Index i = 0; i < n; ++i) w(i) /= total;
  // The triangle inequality held for the doubles within 1e-9; keep that slack.
  return validate_space<Rational>(X.points(), std::move(d), std::move(w), X.mode(), Rational(1, 1000000000))
      .with_sampled_flag(X.sampled());
}

}  // namespace mmgeo
