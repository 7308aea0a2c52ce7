#pragma once

// Rademacher functions on dyadic grids and explicit capacity certificates:
// 2^n separated blocks give n functions in Lip_{1/delta} with values in
// [0,1] that are pairwise far apart in me_mu.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmgeo/error.hpp"
#include "mmgeo/mmcore.hpp"
#include "mmgeo/rational.hpp"

namespace mmgeo {

/// r_i(t) = (-1)^floor(2^i t) at t = k / 2^level, in integer arithmetic.
/// Raises TOutOfRange unless 0 <= k < 2^level.
int rademacher(int i, const BigInt& k, int level);

/// Same for a double. Every finite double is dyadic, so this is exact too.
int rademacher(int i, double t);

/// The grid points k with r_i(k/2^n) = r_j(k/2^n), by enumeration.
std::vector<std::int64_t> agreement_set(int n, int i, int j);

/// |{t in T_n : r_i(t) = r_j(t)}|. Raises EqualIndices when i == j.
std::int64_t agreement_count(int n, int i, int j);

/// f*(x) = min(min_{y in B} f(y) + d(x,y)/delta, 1). `f_on_b[k]` is the
/// value at B[k].
template <typename Scalar>
BasicFunction<Scalar> lip_extend(const BasicMMSpace<Scalar>& X, const PointSet& B, const BasicFunction<Scalar>& f_on_b,
                                 const Scalar& delta) {
  if (B.empty()) throw Error(ErrorCode::EmptyB, "lip_extend needs a nonempty base set");
  if (f_on_b.size() != static_cast<Index>(B.size()))
    throw Error(ErrorCode::DimensionMismatch, "lip_extend: one value per base point");
  if (!(delta > Scalar(0))) throw Error(ErrorCode::BadQuery, "lip_extend: delta must be positive");
  for (Index k = 0; k < f_on_b.size(); ++k)
    if (f_on_b(k) < Scalar(0) || f_on_b(k) > Scalar(1))
      throw Error(ErrorCode::BadQuery, "lip_extend: values must lie in [0,1]");
  for (Index y : B)
    if (y < 0 || y >= X.size()) throw Error(ErrorCode::BadQuery, "lip_extend: base point out of range");
  BasicFunction<Scalar> out(X.size());
  for (Index x = 0; x < X.size(); ++x) {
    Scalar best(1);
    for (std::size_t k = 0; k < B.size(); ++k) {
      Scalar v = f_on_b(static_cast<Index>(k)) + X.dist(x, B[k]) / delta;
      if (v < best) best = std::move(v);
    }
    out(x) = std::move(best);
  }
  return out;
}

struct CapacityCertificate {
  /// Where the space comes from, e.g. "chain sym_chain 6 inverse(weighted)"
  /// or "inline" (the space follows the certificate in the same file).
  std::string space_source = "inline";
  Rational delta, eps, tau;
  /// 2^n blocks; block k plays the grid point k / 2^n.
  std::vector<PointSet> blocks;
  std::vector<Rational> block_masses;
  /// f*_1..f*_n over the whole space.
  std::vector<Vector<Rational>> functions;
  /// Smallest me_mu(f*_i, f*_j) and smallest mu(N_ij) over i < j.
  Rational min_distance, min_disagreement;
  int verified_capacity = 0;

  std::string serialize() const;
  static CapacityCertificate parse(const std::string& text);
};

/// Builds and verifies the certificate. ε = 0 is accepted (exact masses
/// meeting 2^-n). Raises BlockMassTooSmall, BlocksNotSeparated, BadTau,
/// BadEps, or BadQuery for a block count that is not a power of two >= 2.
CapacityCertificate capacity_certificate(const ExactMMSpace& X, const std::vector<PointSet>& blocks,
                                         const Rational& delta, const Rational& eps, const Rational& tau);
CapacityCertificate capacity_certificate(const MMSpace& X, const std::vector<PointSet>& blocks, double delta,
                                         double eps, double tau);

/// Rechecks everything a certificate claims against X from scratch. Empty
/// string when valid, otherwise the first failure.
std::string verify_capacity_certificate(const ExactMMSpace& X, const CapacityCertificate& c);

/// Largest mass deficit 1 - 2^n min_k mu(B_k), clamped at 0.
Rational required_eps(const ExactMMSpace& X, const std::vector<PointSet>& blocks);

/// Blocks for space `index` split into `count` parts (nullopt when none).
using BlockProvider = std::function<std::optional<std::vector<PointSet>>(std::size_t index, std::size_t count)>;

struct GrowthRow {
  std::size_t space_index = 0;
  int m = 0;
  std::optional<CapacityCertificate> certificate;
  /// Why no certificate was produced (NoBlocksFound and similar).
  std::string note;
};

struct GrowthReport {
  double delta = 0, alpha = 0;
  std::vector<GrowthRow> rows;
  /// Largest verified capacity per space.
  std::vector<int> best;
};

/// For each space and target m, asks for 2^m blocks separated at delta
/// (from `provider`, else by exact separation search under `node_limit`)
/// and certifies Cap_alpha(Lip_{1/delta}, me_mu) >= m with
/// tau = alpha / (1 - eps). Raises BadTarget for m < 1 and AlphaOutOfRange
/// unless 0 < alpha < 1/2.
GrowthReport capacity_growth_check(const std::vector<ExactMMSpace>& seq, double delta, double alpha,
                                   const std::vector<int>& m_targets, const BlockProvider& provider = {},
                                   std::size_t node_limit = 200000);

}  // namespace mmgeo
