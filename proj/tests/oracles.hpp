#pragma once

// Independent brute-force oracles. They share no code with the solvers
// beyond the space type.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "mmgeo/mmcore.hpp"

namespace oracle {

using mmgeo::Index;

/// Sep by labelling every point with one of m+1 sets or "unused":
/// overlapping tuples only ever reach 0, so disjoint labellings decide it.
inline double sep_labelings(const mmgeo::MMSpace& X, const std::vector<double>& kappas) {
  const Index n = X.size();
  const std::size_t G = kappas.size();
  for (double k : kappas)
    if (k > 1 + 1e-12) return 0;
  std::vector<std::size_t> label(static_cast<std::size_t>(n), 0);
  double best = 0;
  while (true) {
    std::vector<double> mass(G, 0);
    for (Index i = 0; i < n; ++i)
      if (label[static_cast<std::size_t>(i)] < G) mass[label[static_cast<std::size_t>(i)]] += X.weight(i);
    bool ok = true;
    for (std::size_t g = 0; g < G; ++g) ok = ok && mass[g] >= kappas[g] - 1e-12;
    if (ok) {
      double sepd = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const auto a = label[static_cast<std::size_t>(i)], b = label[static_cast<std::size_t>(j)];
          if (a < G && b < G && a != b) sepd = std::min(sepd, X.dist(i, j));
        }
      best = std::max(best, sepd);
    }
    std::size_t k = 0;
    while (k < label.size() && ++label[k] == G + 1) label[k++] = 0;
    if (k == label.size()) break;
  }
  return best;
}

/// Sep over literally every (m+1)-tuple of subsets; only for tiny spaces.
inline double sep_subset_tuples(const mmgeo::MMSpace& X, const std::vector<double>& kappas) {
  const Index n = X.size();
  const std::size_t G = kappas.size();
  const std::uint32_t S = 1u << n;
  std::vector<std::uint32_t> pick(G, 0);
  double best = 0;
  auto mass = [&](std::uint32_t s) {
    double m = 0;
    for (Index i = 0; i < n; ++i)
      if (s >> i & 1) m += X.weight(i);
    return m;
  };
  while (true) {
    bool ok = true;
    for (std::size_t g = 0; g < G && ok; ++g) ok = mass(pick[g]) >= kappas[g] - 1e-12;
    if (ok) {
      double sepd = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < G; ++a)
        for (std::size_t b = a + 1; b < G; ++b)
          for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
              if ((pick[a] >> i & 1) && (pick[b] >> j & 1)) sepd = std::min(sepd, X.dist(i, j));
      best = std::max(best, sepd);
    }
    std::size_t k = 0;
    while (k < G && ++pick[k] == S) pick[k++] = 0;
    if (k == G) break;
  }
  return best;
}

}  // namespace oracle
