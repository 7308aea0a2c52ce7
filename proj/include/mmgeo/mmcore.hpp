#pragma once

// Finite metric measure spaces and their measure-theoretic primitives.
//
// Everything here is templated on the scalar type. `double` drives the
// solvers; `Rational` (exact) is used wherever a mass or distance bound has
// to be certified without rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmgeo/error.hpp"
#include "mmgeo/rational.hpp"

namespace mmgeo {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One value per point of an associated space.
template <typename Scalar>
using BasicFunction = Vector<Scalar>;
using RealFunction = BasicFunction<double>;

using PointSet = std::vector<Index>;

enum class SpaceMode { metric, pseudo };

/// Validation slack: 1e-9 for floating point, zero for exact scalars.
template <typename Scalar>
Scalar validation_tolerance() {
  if constexpr (std::numeric_limits<Scalar>::is_exact) {
    return Scalar(0);
  } else {
    return Scalar(1e-9);
  }
}

template <typename Scalar>
Scalar abs_value(const Scalar& x) {
  return x < Scalar(0) ? Scalar(-x) : x;
}

template <typename Scalar>
class BasicMMSpace;

template <typename Scalar>
BasicMMSpace<Scalar> validate_space(std::vector<std::string> points, Matrix<Scalar> dist, Vector<Scalar> weights,
                                    SpaceMode mode, const Scalar& tol, bool check_triangle);
template <typename Scalar>
BasicMMSpace<Scalar> validate_space(std::vector<std::string> points, Matrix<Scalar> dist, Vector<Scalar> weights,
                                    SpaceMode mode, const Scalar& tol);

/// A finite set of points with a symmetric (pseudo-)distance matrix and a
/// probability vector. Immutable once validated.
template <typename Scalar>
class BasicMMSpace {
 public:
  using scalar_type = Scalar;

  Index size() const { return dist_.rows(); }
  const std::vector<std::string>& points() const { return points_; }
  const Matrix<Scalar>& dist() const { return dist_; }
  const Scalar& dist(Index i, Index j) const { return dist_(i, j); }
  const Vector<Scalar>& weights() const { return weights_; }
  const Scalar& weight(Index i) const { return weights_(i); }
  SpaceMode mode() const { return mode_; }
  bool sampled() const { return sampled_; }

  BasicMMSpace with_sampled_flag(bool sampled = true) const {
    BasicMMSpace out = *this;
    out.sampled_ = sampled;
    return out;
  }

  template <typename Other>
  BasicMMSpace<Other> cast() const {
    BasicMMSpace<Other> out;
    out.points_ = points_;
    out.dist_ = dist_.template cast<Other>();
    out.weights_ = weights_.template cast<Other>();
    out.mode_ = mode_;
    out.sampled_ = sampled_;
    return out;
  }

 private:
  template <typename>
  friend class BasicMMSpace;
  friend BasicMMSpace validate_space<Scalar>(std::vector<std::string>, Matrix<Scalar>, Vector<Scalar>, SpaceMode,
                                             const Scalar&, bool);

  std::vector<std::string> points_;
  Matrix<Scalar> dist_;
  Vector<Scalar> weights_;
  SpaceMode mode_ = SpaceMode::metric;
  bool sampled_ = false;
};

using MMSpace = BasicMMSpace<double>;
using ExactMMSpace = BasicMMSpace<Rational>;

/// Checks symmetry, zero diagonal, non-negativity, the probability
/// constraint and (metric mode) the triangle inequality. `tol` applies to the
/// triangle inequality and the weight sum. `check_triangle = false` is for
/// distances that are metrics by construction (the cubic check dominates on
/// group spaces with thousands of elements).
template <typename Scalar>
BasicMMSpace<Scalar> validate_space(std::vector<std::string> points, Matrix<Scalar> dist, Vector<Scalar> weights,
                                    SpaceMode mode, const Scalar& tol, bool check_triangle) {
  const Index n = dist.rows();
  if (dist.cols() != n || weights.size() != n || static_cast<Index>(points.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "distance matrix, weights and points disagree on the point count");
  for (Index i = 0; i < n; ++i) {
    if (dist(i, i) != Scalar(0)) throw Error(ErrorCode::NonzeroDiagonal, "dist[" + std::to_string(i) + "][i] != 0");
    for (Index j = 0; j < n; ++j) {
      if (dist(i, j) < Scalar(0))
        throw Error(ErrorCode::NegativeDistance,
                    "dist[" + std::to_string(i) + "][" + std::to_string(j) + "] < 0");
      if (dist(i, j) != dist(j, i))
        throw Error(ErrorCode::AsymmetricMatrix,
                    "dist[" + std::to_string(i) + "][" + std::to_string(j) + "] != dist[j][i]");
    }
  }
  if (mode == SpaceMode::metric && check_triangle) {
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
          if (dist(i, j) > dist(i, k) + dist(k, j) + tol)
            throw Error(ErrorCode::TriangleViolation, "d(" + std::to_string(i) + "," + std::to_string(j) +
                                                           ") exceeds the path through " + std::to_string(k));
  }
  Scalar total(0);
  for (Index i = 0; i < n; ++i) {
    if (weights(i) < Scalar(0)) throw Error(ErrorCode::WeightsNotProbability, "negative weight");
    total += weights(i);
  }
  if (abs_value<Scalar>(total - Scalar(1)) > tol)
    throw Error(ErrorCode::WeightsNotProbability, "weights do not sum to 1");

  BasicMMSpace<Scalar> out;
  out.points_ = std::move(points);
  out.dist_ = std::move(dist);
  out.weights_ = std::move(weights);
  out.mode_ = mode;
  return out;
}

template <typename Scalar>
BasicMMSpace<Scalar> validate_space(std::vector<std::string> points, Matrix<Scalar> dist, Vector<Scalar> weights,
                                    SpaceMode mode, const Scalar& tol) {
  return validate_space<Scalar>(std::move(points), std::move(dist), std::move(weights), mode, tol, true);
}

template <typename Scalar>
BasicMMSpace<Scalar> validate_space(std::vector<std::string> points, Matrix<Scalar> dist, Vector<Scalar> weights,
                                    SpaceMode mode) {
  return validate_space<Scalar>(std::move(points), std::move(dist), std::move(weights), mode,
                                validation_tolerance<Scalar>());
}

inline std::vector<std::string> default_labels(Index n) {
  std::vector<std::string> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = std::to_string(i);
  return labels;
}

/// Convenience overload with index labels "0", "1", ...
template <typename Scalar>
BasicMMSpace<Scalar> make_space(Matrix<Scalar> dist, Vector<Scalar> weights, SpaceMode mode = SpaceMode::metric) {
  auto labels = default_labels(dist.rows());
  return validate_space<Scalar>(std::move(labels), std::move(dist), std::move(weights), mode);
}

template <typename Scalar>
Vector<Scalar> uniform_weights(Index n) {
  return Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n));
}

/// Points placed on the real line, metrized by absolute difference.
template <typename Scalar>
BasicMMSpace<Scalar> line_space(const std::vector<Scalar>& coords, Vector<Scalar> weights) {
  const Index n = static_cast<Index>(coords.size());
  Matrix<Scalar> d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d(i, j) = abs_value<Scalar>(coords[i] - coords[j]);
  return make_space<Scalar>(std::move(d), std::move(weights));
}

template <typename Derived>
typename Derived::Scalar diameter(const Eigen::MatrixBase<Derived>& dist) {
  using Scalar = typename Derived::Scalar;
  if (dist.size() == 0) return Scalar(0);
  return dist.maxCoeff();
}

template <typename Scalar>
Scalar diameter(const BasicMMSpace<Scalar>& X) {
  return diameter(X.dist());
}

template <typename Scalar>
void check_function(const BasicMMSpace<Scalar>& X, const BasicFunction<Scalar>& f) {
  if (f.size() != X.size()) throw Error(ErrorCode::DimensionMismatch, "function length differs from point count");
}

template <typename Scalar>
Scalar mass(const BasicMMSpace<Scalar>& X, const PointSet& set) {
  Scalar m(0);
  for (Index i : set) m += X.weight(i);
  return m;
}

/// Points with positive weight.
template <typename Scalar>
PointSet support(const BasicMMSpace<Scalar>& X) {
  PointSet out;
  for (Index i = 0; i < X.size(); ++i)
    if (X.weight(i) > Scalar(0)) out.push_back(i);
  return out;
}

template <typename Scalar>
bool fully_supported(const BasicMMSpace<Scalar>& X) {
  return static_cast<Index>(support(X).size()) == X.size();
}

/// Subspace on `keep`, weights renormalized to total mass 1.
template <typename Scalar>
BasicMMSpace<Scalar> subspace(const BasicMMSpace<Scalar>& X, const PointSet& keep) {
  const Index k = static_cast<Index>(keep.size());
  Matrix<Scalar> d(k, k);
  Vector<Scalar> w(k);
  std::vector<std::string> labels;
  Scalar total(0);
  for (Index a = 0; a < k; ++a) {
    w(a) = X.weight(keep[a]);
    total += w(a);
    labels.push_back(X.points()[static_cast<std::size_t>(keep[a])]);
    for (Index b = 0; b < k; ++b) d(a, b) = X.dist(keep[a], keep[b]);
  }
  if (total == Scalar(0)) throw Error(ErrorCode::WeightsNotProbability, "subspace carries no mass");
  w /= total;
  if constexpr (!std::numeric_limits<Scalar>::is_exact) {
    // Keep the sum within tolerance after the division.
    w(k - 1) = Scalar(1) - w.head(k - 1).sum();
    if (w(k - 1) < Scalar(0)) w(k - 1) = Scalar(0);
  }
  // Restrictions of a validated space satisfy the triangle inequality already.
  return validate_space<Scalar>(std::move(labels), std::move(d), std::move(w), X.mode(),
                                validation_tolerance<Scalar>(), false)
      .with_sampled_flag(X.sampled());
}

/// The space with its measure restricted to the support.
template <typename Scalar>
BasicMMSpace<Scalar> restrict_to_support(const BasicMMSpace<Scalar>& X) {
  return subspace(X, support(X));
}

template <typename Scalar>
struct Atom {
  Scalar value;
  Scalar mass;
};

/// Discrete measure on the reals: atoms sorted by value, zero masses dropped.
template <typename Scalar>
using DiscreteMeasure = std::vector<Atom<Scalar>>;

template <typename Scalar>
DiscreteMeasure<Scalar> pushforward(const BasicMMSpace<Scalar>& X, const BasicFunction<Scalar>& f) {
  check_function(X, f);
  std::vector<Index> order(static_cast<std::size_t>(X.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return f(a) < f(b); });
  DiscreteMeasure<Scalar> out;
  for (Index i : order) {
    if (X.weight(i) == Scalar(0)) continue;
    if (!out.empty() && out.back().value == f(i)) {
      out.back().mass += X.weight(i);
    } else {
      out.push_back({f(i), X.weight(i)});
    }
  }
  return out;
}

/// me_mu(f, g) = inf{eps > 0 : mu(|f - g| > eps) <= eps}, computed exactly.
///
/// mu(|f-g| > eps) is a right-continuous step function of eps; on each step
/// [u_j, u_{j+1}) the least feasible eps is max(u_j, tail_j), so the answer
/// is the first step where that value stays inside the step.
template <typename Scalar>
Scalar me_mu(const Vector<Scalar>& weights, const Vector<Scalar>& f, const Vector<Scalar>& g) {
  const Index n = weights.size();
  if (f.size() != n || g.size() != n) throw Error(ErrorCode::DimensionMismatch, "me_mu: length mismatch");
  std::vector<std::pair<Scalar, Scalar>> gaps;  // (|f-g|, weight), positive gaps only
  gaps.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Scalar h = abs_value<Scalar>(f(i) - g(i));
    if (h > Scalar(0) && weights(i) > Scalar(0)) gaps.emplace_back(std::move(h), weights(i));
  }
  if (gaps.empty()) return Scalar(0);
  std::sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Scalar tail(0);
  for (const auto& gw : gaps) tail += gw.second;
  // Step (0, u_1): mu(|f-g| > eps) is the whole positive-gap mass.
  Scalar lo(0);
  std::size_t k = 0;
  while (k < gaps.size()) {
    const Scalar& hi = gaps[k].first;
    const Scalar candidate = lo < tail ? tail : lo;
    if (candidate < hi) return candidate;
    // Remove every atom with gap == hi; the next step starts at hi.
    while (k < gaps.size() && gaps[k].first == hi) {
      tail -= gaps[k].second;
      ++k;
    }
    lo = hi;
  }
  return lo;  // last step [u_max, inf) has zero tail
}

template <typename Scalar>
Scalar me_mu(const BasicMMSpace<Scalar>& X, const BasicFunction<Scalar>& f, const BasicFunction<Scalar>& g) {
  check_function(X, f);
  check_function(X, g);
  return me_mu<Scalar>(X.weights(), f, g);
}

/// Step map phi: [0,1) -> X with phi_*(Lebesgue) = mu; point i owns
/// [start_i, end_i). Zero-weight points own empty intervals.
template <typename Scalar>
struct Parametrization {
  std::vector<std::pair<Scalar, Scalar>> intervals;

  /// Point whose interval contains t in [0,1).
  Index locate(const Scalar& t) const {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                               [](const Scalar& value, const auto& iv) { return value < iv.second; });
    if (it == intervals.end()) throw Error(ErrorCode::TOutOfRange, "parameter outside [0,1)");
    return static_cast<Index>(it - intervals.begin());
  }

  Scalar preimage_length(Index i) const {
    const auto& iv = intervals[static_cast<std::size_t>(i)];
    return iv.second - iv.first;
  }
};

template <typename Scalar>
Parametrization<Scalar> parametrize(const BasicMMSpace<Scalar>& X) {
  Parametrization<Scalar> out;
  Scalar start(0);
  for (Index i = 0; i < X.size(); ++i) {
    Scalar end = (i + 1 == X.size()) ? Scalar(1) : Scalar(start + X.weight(i));
    out.intervals.emplace_back(start, end);
    start = end;
  }
  return out;
}

/// Hausdorff distance between two point sets under `dist`; infinite when
/// exactly one set is empty, zero when both are.
template <typename Derived>
typename Derived::Scalar hausdorff(const Eigen::MatrixBase<Derived>& dist, const PointSet& A, const PointSet& B) {
  using Scalar = typename Derived::Scalar;
  if (A.empty() && B.empty()) return Scalar(0);
  if (A.empty() || B.empty()) {
    if constexpr (std::numeric_limits<Scalar>::has_infinity) {
      return std::numeric_limits<Scalar>::infinity();
    } else {
      throw Error(ErrorCode::InfiniteDistance, "Hausdorff distance to the empty set");
    }
  }
  auto directed = [&](const PointSet& from, const PointSet& to) {
    Scalar worst(0);
    for (Index a : from) {
      Scalar best = dist(a, to.front());
      for (Index b : to) best = std::min<Scalar>(best, dist(a, b));
      worst = std::max<Scalar>(worst, best);
    }
    return worst;
  };
  return std::max<Scalar>(directed(A, B), directed(B, A));
}

template <typename Scalar>
Scalar hausdorff(const BasicMMSpace<Scalar>& X, const PointSet& A, const PointSet& B) {
  return hausdorff(X.dist(), A, B);
}

/// True when |f(x) - f(y)| <= ell d(x,y) + tol for every pair.
template <typename Scalar>
bool is_lipschitz(const BasicMMSpace<Scalar>& X, const BasicFunction<Scalar>& f, const Scalar& ell,
                  const Scalar& tol = validation_tolerance<Scalar>()) {
  check_function(X, f);
  for (Index i = 0; i < X.size(); ++i)
    for (Index j = i + 1; j < X.size(); ++j)
      if (abs_value<Scalar>(f(i) - f(j)) > ell * X.dist(i, j) + tol) return false;
  return true;
}

/// Searches for a measure-preserving isometry between the supports of X and
/// Y (backtracking; intended for small spaces). Returns the map on supports
/// as pairs (x, y).
template <typename Scalar>
std::optional<std::vector<std::pair<Index, Index>>> find_isomorphism(
    const BasicMMSpace<Scalar>& X, const BasicMMSpace<Scalar>& Y, const Scalar& tol = validation_tolerance<Scalar>()) {
  const PointSet sx = support(X);
  const PointSet sy = support(Y);
  if (sx.size() != sy.size()) return std::nullopt;
  const std::size_t n = sx.size();
  auto close = [&](const Scalar& a, const Scalar& b) { return abs_value<Scalar>(a - b) <= tol; };
  std::vector<Index> image(n, -1);
  std::vector<bool> used(n, false);
  auto extend = [&](auto&& self, std::size_t k) -> bool {
    if (k == n) return true;
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c] || !close(X.weight(sx[k]), Y.weight(sy[c]))) continue;
      bool ok = true;
      for (std::size_t p = 0; p < k && ok; ++p)
        ok = close(X.dist(sx[k], sx[p]), Y.dist(sy[c], sy[static_cast<std::size_t>(image[p])]));
      if (!ok) continue;
      used[c] = true;
      image[k] = static_cast<Index>(c);
      if (self(self, k + 1)) return true;
      used[c] = false;
    }
    return false;
  };
  if (!extend(extend, 0)) return std::nullopt;
  std::vector<std::pair<Index, Index>> out;
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(sx[k], sy[static_cast<std::size_t>(image[k])]);
  return out;
}

/// Exact copy of a double space (every binary64 value is rational).
ExactMMSpace to_exact(const MMSpace& X);

}  // namespace mmgeo
