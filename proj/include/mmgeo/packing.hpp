#pragma once

// Capacities, Gromov-Hausdorff distance between finite metric spaces, grid
// nets of bounded Lipschitz functions, and lower bounds on the observable
// distance built from them.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmgeo/mmcore.hpp"

namespace mmgeo {

// ---------------------------------------------------------------- capacity

struct CapacityResult {
  std::size_t value = 0;
  /// An eps-discrete subset of size `value`, ascending.
  PointSet witness;
  /// Set when the instance exceeded the exact cap and `value` comes from a
  /// greedy construction.
  bool lower_bound_only = false;
};

/// Maximum size of a subset with pairwise distances strictly above eps.
/// Exact (branch and bound over the graph d > eps) up to `exact_cap` points;
/// the exact witness is the lexicographically smallest maximum subset.
CapacityResult capacity(const Matrix<double>& dist, double eps, std::size_t exact_cap = 64);
CapacityResult capacity(const MMSpace& M, double eps, std::size_t exact_cap = 64);

/// Upper bound on capacity from a greedy colouring of the graph d > eps.
std::size_t capacity_upper(const Matrix<double>& dist, double eps);

/// Largest clique in the graph with edges `d >= threshold` (so the returned
/// set is eps-discrete for every eps < threshold). Exact up to `exact_cap`.
CapacityResult discrete_below(const Matrix<double>& dist, double threshold, std::size_t exact_cap = 64);

/// "Cap_eps >= count for every eps < below".
struct CapacityStep {
  double below;
  std::size_t count;
};

/// Certified capacity lower bounds at every distinct positive distance.
std::vector<CapacityStep> lower_profile(const Matrix<double>& dist, std::size_t exact_cap = 64);

/// A non-increasing, right-continuous upper bound U(eps) on Cap_eps, stored
/// as steps: U(eps) = value of the last step whose start is <= eps.
/// `std::nullopt` means no finite bound.
struct UpperProfile {
  std::vector<std::pair<double, std::optional<std::size_t>>> steps;

  std::optional<std::size_t> at(double eps) const;
  /// Least eps >= 0 with U(eps) < count, if any.
  std::optional<double> first_below(std::size_t count) const;
};

UpperProfile upper_profile(const Matrix<double>& dist, std::size_t exact_cap = 64);

/// If Cap_eps(A) >= c for all eps < b while Cap_a(B) < c, then any
/// correspondence of distortion < b - a would carry a (b)-discrete set of A
/// into an a-discrete set of B, so d_GH(A, B) >= (b - a) / 2.
double gh_gap_bound(const std::vector<CapacityStep>& lower_a, const UpperProfile& upper_b);

// ---------------------------------------------------------------- GH distance

using Correspondence = std::vector<std::pair<Index, Index>>;

struct GHResult {
  double lower = 0;
  double upper = 0;
  bool exact = false;
  std::optional<Correspondence> witness;
};

double distortion(const Matrix<double>& dm, const Matrix<double>& dn, const Correspondence& R);

/// Exact d_GH as half the least distortion of a correspondence between the
/// two point sets. Raises TooLarge when |M|*|N| exceeds `size_limit`.
GHResult gh_exact(const Matrix<double>& dm, const Matrix<double>& dn, std::size_t size_limit = 64);
GHResult gh_exact(const MMSpace& M, const MMSpace& N, std::size_t size_limit = 64);

/// Certified lower bound from capacity gaps, in both directions.
double gh_lower_capacity(const Matrix<double>& dm, const Matrix<double>& dn, std::size_t exact_cap = 64);
double gh_lower_capacity(const MMSpace& M, const MMSpace& N, std::size_t exact_cap = 64);

/// Exact when small enough, otherwise [max(capacity gap, |diam M - diam N|/2),
/// max(diam M, diam N)/2].
GHResult gh_bounds(const MMSpace& M, const MMSpace& N, std::size_t size_limit = 64);

// ---------------------------------------------------------------- function nets

inline constexpr double kLipschitzTol = 1e-9;

struct FunctionNet {
  MMSpace base;
  double ell = 0;
  double s = 0;
  double grid_step = 0;
  /// Extra additive slack allowed in the Lipschitz constraint (0 for a
  /// genuine net; grid_step for the rounding envelope used in upper bounds).
  double lipschitz_slack = 0;
  std::vector<RealFunction> members;
  Matrix<double> metric;  // me_mu between members

  std::size_t size() const { return members.size(); }
  /// The net as a finite (pseudo-)metric space with uniform weights.
  MMSpace as_space() const;
};

/// Grid values -s, -s + h, ..., up to s.
std::vector<double> grid_values(double s, double grid_step);

/// Every grid-valued function with |f| <= s and |f(x) - f(y)| <=
/// ell d(x,y) + lipschitz_slack. Raises NetTooLarge once more than
/// `max_size` members exist.
FunctionNet lip_net(const MMSpace& X, double ell, double s, double grid_step, std::size_t max_size = 5000,
                    double lipschitz_slack = 0);

struct DconcBound {
  /// Certified lower bound on d_conc(X, Y) (already includes the slack).
  double value = 0;
  /// Discretization slack accounted for in the upper-side capacities.
  double slack = 0;
  /// Which direction produced `value`: 0 for net(X) against Lip(Y), 1 for
  /// the reverse.
  int direction = 0;
  std::size_t net_sizes[2] = {0, 0};
  /// Directions skipped because the upper-side envelope was too large.
  std::vector<std::string> notes;
};

struct DconcOptions {
  std::size_t max_net = 5000;
  std::size_t exact_cap = 64;
};

/// Lower bound on the observable distance through
/// d_GH((Lip_ell^s X, me), (Lip_ell^s Y, me)) <= ell d_conc(X, Y):
/// capacities of the grid net of X bound Cap(Lip X) from below, and either
/// the closed form (Y a point) or the rounding envelope of Y bounds Cap(Lip Y)
/// from above. Symmetric in X and Y.
DconcBound dconc_lower(const MMSpace& X, const MMSpace& Y, double ell, double s, double grid_step,
                       const DconcOptions& options = {});

/// Lower bound on d_conc(X, point) from any family inside Lip_ell^s(X):
/// capacities of a subfamily bound Cap(Lip X) from below, so `family` may
/// be pulled back from a quotient of X. Only direction 0 is meaningful.
DconcBound dconc_lower_to_point(const FunctionNet& family, std::size_t exact_cap = 64);

/// Closed-form capacity of ([-s, s], min(|a - b|, 1)), i.e. of the bounded
/// functions on a one-point space under me.
UpperProfile point_lip_profile(double s);

}  // namespace mmgeo
