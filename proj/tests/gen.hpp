#pragma once

// Seeded random instances shared by the property tests. Distances are small
// integers (shortest paths in random weighted graphs) so that floating-point
// comparisons in the oracles are exact.

#include <cstdint>
#include <random>
#include <vector>

#include "mmgeo/mmcore.hpp"

namespace gen {

using mmgeo::Index;

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Shortest-path metric on a random connected weighted graph.
inline mmgeo::Matrix<double> random_metric(std::mt19937_64& rng, Index n, int max_edge = 4) {
  const double inf = 1e18;
  mmgeo::Matrix<double> d = mmgeo::Matrix<double>::Constant(n, n, inf);
  for (Index i = 0; i < n; ++i) d(i, i) = 0;
  for (Index i = 1; i < n; ++i) {  // random spanning tree keeps it connected
    const Index j = uniform_int(rng, 0, static_cast<int>(i - 1));
    d(i, j) = d(j, i) = uniform_int(rng, 1, max_edge);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (uniform_int(rng, 0, 2) == 0) {
        const double w = uniform_int(rng, 1, max_edge);
        d(i, j) = d(j, i) = std::min(d(i, j), w);
      }
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

/// Integer weights 1..max_w normalized; "uniformish" masses.
inline std::vector<int> random_counts(std::mt19937_64& rng, Index n, int max_w = 3) {
  std::vector<int> c(static_cast<std::size_t>(n));
  for (auto& x : c) x = uniform_int(rng, 1, max_w);
  return c;
}

inline mmgeo::Vector<double> normalize(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  mmgeo::Vector<double> w(static_cast<Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) w(static_cast<Index>(i)) = counts[i] / total;
  return w;
}

inline mmgeo::MMSpace random_space(std::mt19937_64& rng, Index n, int max_edge = 4, int max_w = 3) {
  auto d = random_metric(rng, n, max_edge);
  return mmgeo::make_space<double>(d, normalize(random_counts(rng, n, max_w)));
}

inline mmgeo::RealFunction random_function(std::mt19937_64& rng, Index n, int lo = -4, int hi = 4) {
  mmgeo::RealFunction f(n);
  for (Index i = 0; i < n; ++i) f(i) = uniform_int(rng, lo, hi) / 4.0;
  return f;
}

}  // namespace gen
