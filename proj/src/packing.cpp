#include "mmgeo/packing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmgeo/detail/bitset.hpp"

namespace mmgeo {

using detail::Bits;

namespace {

std::vector<Bits> adjacency(const Matrix<double>& d, double eps, bool inclusive) {
  const auto n = static_cast<std::size_t>(d.rows());
  std::vector<Bits> adj(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d(static_cast<Index>(i), static_cast<Index>(j));
      if (i != j && (inclusive ? v >= eps : v > eps)) adj[i].set(j);
    }
  return adj;
}

// Branch and bound for maximum cliques with greedy colouring bounds
// (Tomita-style). has_clique() stops at the first clique of the requested size.
class CliqueSearch {
 public:
  explicit CliqueSearch(const std::vector<Bits>& adj) : adj_(adj) {}

  std::size_t max_clique(const Bits& P) {
    best_ = 0;
    stop_at_ = static_cast<std::size_t>(-1);
    cur_.clear();
    expand(P);
    return best_;
  }

  bool has_clique(const Bits& P, std::size_t k) {
    if (k == 0) return true;
    best_ = k - 1;
    stop_at_ = k;
    cur_.clear();
    expand(P);
    return best_ >= k;
  }

  std::size_t colour_bound(const Bits& P) const {
    std::vector<std::size_t> order, bound;
    colour_sort(P, order, bound);
    return bound.empty() ? 0 : bound.back();
  }

 private:
  void colour_sort(Bits Q, std::vector<std::size_t>& order, std::vector<std::size_t>& bound) const {
    std::size_t colour = 0;
    while (Q.any()) {
      ++colour;
      Bits U = Q;
      for (std::size_t v = U.next(); v < U.size(); v = U.next(v + 1)) {
        U.subtract(adj_[v]);
        Q.reset(v);
        order.push_back(v);
        bound.push_back(colour);
      }
    }
  }

  void expand(Bits P) {
    std::vector<std::size_t> order, bound;
    colour_sort(P, order, bound);
    for (std::size_t k = order.size(); k-- > 0;) {
      if (cur_.size() + bound[k] <= best_) return;
      const std::size_t v = order[k];
      cur_.push_back(v);
      Bits NP = P & adj_[v];
      if (NP.none()) {
        if (cur_.size() > best_) best_ = cur_.size();
      } else {
        expand(std::move(NP));
      }
      cur_.pop_back();
      if (best_ >= stop_at_) return;
      P.reset(v);
    }
  }

  const std::vector<Bits>& adj_;
  std::vector<std::size_t> cur_;
  std::size_t best_ = 0;
  std::size_t stop_at_ = 0;
};

CapacityResult exact_clique(const std::vector<Bits>& adj) {
  const std::size_t n = adj.size();
  CapacityResult out;
  if (n == 0) return out;
  CliqueSearch search(adj);
  const std::size_t omega = search.max_clique(Bits(n, true));
  // Lexicographically smallest maximum clique: fix elements greedily.
  Bits P(n, true);
  for (std::size_t v = 0; v < n && out.witness.size() < omega; ++v) {
    if (!P.test(v)) continue;
    Bits later = P & adj[v];
    for (std::size_t u = 0; u <= v; ++u) later.reset(u);
    if (search.has_clique(later, omega - out.witness.size() - 1)) {
      out.witness.push_back(static_cast<Index>(v));
      P = std::move(later);
    }
  }
  out.value = omega;
  return out;
}

CapacityResult greedy_clique(const std::vector<Bits>& adj) {
  const std::size_t n = adj.size();
  CapacityResult out;
  out.lower_bound_only = true;
  if (n == 0) return out;
  std::vector<std::size_t> starts(n);
  std::iota(starts.begin(), starts.end(), std::size_t{0});
  std::stable_sort(starts.begin(), starts.end(),
                   [&](std::size_t a, std::size_t b) { return adj[a].count() > adj[b].count(); });
  starts.resize(std::min<std::size_t>(n, 64));
  for (std::size_t s : starts) {
    PointSet clique{static_cast<Index>(s)};
    Bits P = adj[s];
    while (P.any()) {
      std::size_t pick = P.size(), pick_deg = 0;
      P.for_each([&](std::size_t v) {
        const std::size_t deg = P.intersection_count(adj[v]);
        if (pick == P.size() || deg > pick_deg) {
          pick = v;
          pick_deg = deg;
        }
      });
      clique.push_back(static_cast<Index>(pick));
      P &= adj[pick];
    }
    if (clique.size() > out.value) {
      std::sort(clique.begin(), clique.end());
      out.value = clique.size();
      out.witness = std::move(clique);
    }
  }
  return out;
}

CapacityResult clique_of(const std::vector<Bits>& adj, std::size_t exact_cap) {
  return adj.size() <= exact_cap ? exact_clique(adj) : greedy_clique(adj);
}

std::vector<double> distinct_positive(const Matrix<double>& d) {
  std::vector<double> vals;
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = i + 1; j < d.cols(); ++j)
      if (d(i, j) > 0) vals.push_back(d(i, j));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

}  // namespace

CapacityResult capacity(const Matrix<double>& dist, double eps, std::size_t exact_cap) {
  if (!(eps > 0)) throw Error(ErrorCode::NonpositiveEps, "capacity needs eps > 0");
  return clique_of(adjacency(dist, eps, false), exact_cap);
}

CapacityResult capacity(const MMSpace& M, double eps, std::size_t exact_cap) {
  return capacity(M.dist(), eps, exact_cap);
}

std::size_t capacity_upper(const Matrix<double>& dist, double eps) {
  auto adj = adjacency(dist, eps, false);
  return CliqueSearch(adj).colour_bound(Bits(adj.size(), true));
}

CapacityResult discrete_below(const Matrix<double>& dist, double threshold, std::size_t exact_cap) {
  return clique_of(adjacency(dist, threshold, true), exact_cap);
}

std::vector<CapacityStep> lower_profile(const Matrix<double>& dist, std::size_t exact_cap) {
  std::vector<CapacityStep> out;
  for (double b : distinct_positive(dist)) out.push_back({b, discrete_below(dist, b, exact_cap).value});
  return out;
}

std::optional<std::size_t> UpperProfile::at(double eps) const {
  std::optional<std::size_t> v;
  for (const auto& [start, value] : steps) {
    if (start > eps) break;
    v = value;
  }
  return v;
}

std::optional<double> UpperProfile::first_below(std::size_t count) const {
  for (const auto& [start, value] : steps)
    if (value && *value < count) return start;
  return std::nullopt;
}

UpperProfile upper_profile(const Matrix<double>& dist, std::size_t exact_cap) {
  const auto n = static_cast<std::size_t>(dist.rows());
  auto bound = [&](double eps) -> std::size_t {
    auto adj = adjacency(dist, eps, false);
    if (n <= exact_cap) return exact_clique(adj).value;
    return CliqueSearch(adj).colour_bound(Bits(n, true));
  };
  UpperProfile out;
  out.steps.emplace_back(0.0, bound(0.0));
  for (double t : distinct_positive(dist)) out.steps.emplace_back(t, bound(t));
  return out;
}

double gh_gap_bound(const std::vector<CapacityStep>& lower_a, const UpperProfile& upper_b) {
  double eta = 0;
  for (const auto& step : lower_a) {
    auto a = upper_b.first_below(step.count);
    if (a && step.below > *a) eta = std::max(eta, (step.below - *a) / 2);
  }
  return eta;
}

// ---------------------------------------------------------------- GH

double distortion(const Matrix<double>& dm, const Matrix<double>& dn, const Correspondence& R) {
  double worst = 0;
  for (const auto& [i, j] : R)
    for (const auto& [k, l] : R) worst = std::max(worst, std::abs(dm(i, k) - dn(j, l)));
  return worst;
}

namespace {

class CorrespondenceSearch {
 public:
  CorrespondenceSearch(const Matrix<double>& dm, const Matrix<double>& dn) : dm_(dm), dn_(dn) {
    nm_ = static_cast<std::size_t>(dm.rows());
    nn_ = static_cast<std::size_t>(dn.rows());
  }

  std::optional<Correspondence> feasible(double t) {
    const std::size_t P = nm_ * nn_;
    compat_.assign(P, Bits(P));
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = 0; q < P; ++q)
        if (gap(p, q) <= t) compat_[p].set(q);
    chosen_.clear();
    Bits rows(nm_), cols(nn_);
    if (!search(Bits(P, true), rows, cols)) return std::nullopt;
    Correspondence R;
    for (std::size_t p : chosen_) R.emplace_back(static_cast<Index>(p / nn_), static_cast<Index>(p % nn_));
    std::sort(R.begin(), R.end());
    return R;
  }

  double gap(std::size_t p, std::size_t q) const {
    return std::abs(dm_(static_cast<Index>(p / nn_), static_cast<Index>(q / nn_)) -
                    dn_(static_cast<Index>(p % nn_), static_cast<Index>(q % nn_)));
  }

 private:
  bool search(const Bits& allowed, Bits& rows, Bits& cols) {
    // Branch on the uncovered row or column with the fewest admissible pairs.
    std::size_t best_count = static_cast<std::size_t>(-1);
    bool best_is_row = true;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < nm_; ++i) {
      if (rows.test(i)) continue;
      std::size_t c = 0;
      for (std::size_t j = 0; j < nn_; ++j) c += allowed.test(i * nn_ + j);
      if (c < best_count) best_count = c, best_is_row = true, best_idx = i;
    }
    for (std::size_t j = 0; j < nn_; ++j) {
      if (cols.test(j)) continue;
      std::size_t c = 0;
      for (std::size_t i = 0; i < nm_; ++i) c += allowed.test(i * nn_ + j);
      if (c < best_count) best_count = c, best_is_row = false, best_idx = j;
    }
    if (best_count == static_cast<std::size_t>(-1)) return true;  // everything covered
    if (best_count == 0) return false;
    const std::size_t span = best_is_row ? nn_ : nm_;
    for (std::size_t k = 0; k < span; ++k) {
      const std::size_t i = best_is_row ? best_idx : k;
      const std::size_t j = best_is_row ? k : best_idx;
      const std::size_t p = i * nn_ + j;
      if (!allowed.test(p)) continue;
      const bool had_row = rows.test(i), had_col = cols.test(j);
      rows.set(i);
      cols.set(j);
      chosen_.push_back(p);
      if (search(allowed & compat_[p], rows, cols)) return true;
      chosen_.pop_back();
      if (!had_row) rows.reset(i);
      if (!had_col) cols.reset(j);
    }
    return false;
  }

  const Matrix<double>& dm_;
  const Matrix<double>& dn_;
  std::size_t nm_ = 0, nn_ = 0;
  std::vector<Bits> compat_;
  std::vector<std::size_t> chosen_;
};

}  // namespace

GHResult gh_exact(const Matrix<double>& dm, const Matrix<double>& dn, std::size_t size_limit) {
  const auto nm = static_cast<std::size_t>(dm.rows());
  const auto nn = static_cast<std::size_t>(dn.rows());
  if (nm == 0 || nn == 0) throw Error(ErrorCode::DimensionMismatch, "gh_exact on an empty space");
  if (nm * nn > size_limit)
    throw Error(ErrorCode::TooLarge, std::to_string(nm) + "x" + std::to_string(nn) + " exceeds the correspondence limit");
  CorrespondenceSearch search(dm, dn);
  std::vector<double> cand{0.0};
  const std::size_t P = nm * nn;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = p + 1; q < P; ++q) cand.push_back(search.gap(p, q));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  // The full product is always a correspondence, so the top candidate is feasible.
  std::size_t lo = 0, hi = cand.size() - 1;
  std::optional<Correspondence> best = search.feasible(cand[hi]);
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (auto R = search.feasible(cand[mid])) {
      hi = mid;
      best = std::move(R);
    } else {
      lo = mid + 1;
    }
  }
  GHResult out;
  out.lower = out.upper = cand[hi] / 2;
  out.exact = true;
  out.witness = std::move(best);
  return out;
}

GHResult gh_exact(const MMSpace& M, const MMSpace& N, std::size_t size_limit) {
  return gh_exact(M.dist(), N.dist(), size_limit);
}

double gh_lower_capacity(const Matrix<double>& dm, const Matrix<double>& dn, std::size_t exact_cap) {
  return std::max(gh_gap_bound(lower_profile(dm, exact_cap), upper_profile(dn, exact_cap)),
                  gh_gap_bound(lower_profile(dn, exact_cap), upper_profile(dm, exact_cap)));
}

double gh_lower_capacity(const MMSpace& M, const MMSpace& N, std::size_t exact_cap) {
  return gh_lower_capacity(M.dist(), N.dist(), exact_cap);
}

GHResult gh_bounds(const MMSpace& M, const MMSpace& N, std::size_t size_limit) {
  if (static_cast<std::size_t>(M.size() * N.size()) <= size_limit) return gh_exact(M, N, size_limit);
  GHResult out;
  const double dM = diameter(M), dN = diameter(N);
  out.upper = std::max(dM, dN) / 2;
  out.lower = std::min(out.upper, std::max(gh_lower_capacity(M, N), std::abs(dM - dN) / 2));
  return out;
}

// ---------------------------------------------------------------- nets

std::vector<double> grid_values(double s, double grid_step) {
  if (!(grid_step > 0) || !(s >= 0) || !std::isfinite(s)) throw Error(ErrorCode::BadGrid, "need grid_step > 0, s >= 0");
  const auto K = static_cast<std::size_t>(std::floor(2 * s / grid_step + 1e-9));
  std::vector<double> out;
  for (std::size_t k = 0; k <= K; ++k) out.push_back(static_cast<double>(k) * grid_step - s);
  return out;
}

MMSpace FunctionNet::as_space() const {
  const Index n = static_cast<Index>(members.size());
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) labels.push_back("f" + std::to_string(i));
  return validate_space<double>(std::move(labels), metric, uniform_weights<double>(n), SpaceMode::pseudo);
}

FunctionNet lip_net(const MMSpace& X, double ell, double s, double grid_step, std::size_t max_size,
                    double lipschitz_slack) {
  if (!(ell >= 0) || !(s >= 0)) throw Error(ErrorCode::BadGrid, "need ell >= 0 and s >= 0");
  const std::vector<double> grid = grid_values(s, grid_step);
  const std::size_t n = static_cast<std::size_t>(X.size());
  const std::size_t K = grid.size();

  FunctionNet net;
  net.base = X;
  net.ell = ell;
  net.s = s;
  net.grid_step = grid_step;
  net.lipschitz_slack = lipschitz_slack;

  // Depth-first enumeration with forward checking on per-point domains.
  std::vector<std::vector<char>> alive(n, std::vector<char>(K, 1));
  std::vector<std::size_t> left(n, K);
  std::vector<std::pair<std::size_t, std::size_t>> trail;
  std::vector<std::size_t> value(n, 0);

  auto dfs = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      if (net.members.size() >= max_size)
        throw Error(ErrorCode::NetTooLarge, "net exceeds " + std::to_string(max_size) + " functions");
      RealFunction f(static_cast<Index>(n));
      for (std::size_t k = 0; k < n; ++k) f(static_cast<Index>(k)) = grid[value[k]];
      net.members.push_back(std::move(f));
      return;
    }
    for (std::size_t v = 0; v < K; ++v) {
      if (!alive[i][v]) continue;
      value[i] = v;
      const std::size_t mark = trail.size();
      bool ok = true;
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        const double room = ell * X.dist(static_cast<Index>(i), static_cast<Index>(j)) + lipschitz_slack + kLipschitzTol;
        for (std::size_t u = 0; u < K; ++u) {
          if (alive[j][u] && std::abs(grid[u] - grid[v]) > room) {
            alive[j][u] = 0;
            trail.emplace_back(j, u);
            if (--left[j] == 0) {
              ok = false;
              break;
            }
          }
        }
      }
      if (ok) self(self, i + 1);
      while (trail.size() > mark) {
        auto [j, u] = trail.back();
        trail.pop_back();
        alive[j][u] = 1;
        ++left[j];
      }
    }
  };
  if (n > 0) dfs(dfs, 0);

  const Index m = static_cast<Index>(net.members.size());
  net.metric = Matrix<double>::Zero(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b)
      net.metric(a, b) = net.metric(b, a) = me_mu(X, net.members[static_cast<std::size_t>(a)],
                                                   net.members[static_cast<std::size_t>(b)]);
  return net;
}

namespace {

UpperProfile point_profile_up_to(double s, std::size_t max_count) {
  // Cap_eps of ([-s, s], min(|a-b|, 1)) is ceil(2s/eps) below 1 and 1 from 1 on.
  UpperProfile out;
  if (s == 0) {
    out.steps.emplace_back(0.0, std::size_t{1});
    return out;
  }
  out.steps.emplace_back(0.0, std::nullopt);
  for (std::size_t k = std::max<std::size_t>(max_count, 2); k >= 2; --k) {
    const double start = 2 * s / static_cast<double>(k);
    if (start < 1) out.steps.emplace_back(start, k);
  }
  out.steps.emplace_back(1.0, std::size_t{1});
  return out;
}

UpperProfile shifted(const UpperProfile& p, double h) {
  UpperProfile out;
  out.steps.emplace_back(0.0, std::nullopt);
  for (const auto& [start, value] : p.steps) out.steps.emplace_back(start + h, value);
  return out;
}

}  // namespace

DconcBound dconc_lower_to_point(const FunctionNet& family, std::size_t exact_cap) {
  if (!(family.ell > 0)) throw Error(ErrorCode::BadGrid, "dconc_lower_to_point needs ell > 0");
  DconcBound out;
  out.net_sizes[0] = family.size();
  const auto lower = lower_profile(family.metric, exact_cap);
  out.value = std::max(0.0, gh_gap_bound(lower, point_profile_up_to(family.s, family.size() + 1)) / family.ell);
  return out;
}

UpperProfile point_lip_profile(double s) { return point_profile_up_to(s, 4096); }

DconcBound dconc_lower(const MMSpace& X, const MMSpace& Y, double ell, double s, double grid_step,
                       const DconcOptions& options) {
  if (!(ell > 0)) throw Error(ErrorCode::BadGrid, "dconc_lower needs ell > 0");
  const MMSpace spaces[2] = {restrict_to_support(X), restrict_to_support(Y)};
  DconcBound out;
  for (int dir = 0; dir < 2; ++dir) {
    const MMSpace& A = spaces[dir];
    const MMSpace& B = spaces[1 - dir];
    FunctionNet net = lip_net(A, ell, s, grid_step, options.max_net);
    out.net_sizes[dir] = net.size();
    const auto lower = lower_profile(net.metric, options.exact_cap);

    UpperProfile upper;
    double slack = 0;
    if (B.size() == 1) {
      upper = point_profile_up_to(s, net.size() + 1);
    } else {
      const double ratio = 2 * s / grid_step;
      if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw Error(ErrorCode::BadGrid, "rounding envelope needs 2s/grid_step to be an integer");
      try {
        FunctionNet envelope = lip_net(B, ell, s, grid_step, options.max_net, grid_step);
        upper = shifted(upper_profile(envelope.metric, options.exact_cap), grid_step);
        slack = grid_step;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NetTooLarge) throw;
        out.notes.push_back("direction " + std::to_string(dir) + " skipped: " + e.what());
        continue;
      }
    }
    const double value = gh_gap_bound(lower, upper) / ell;
    if (value > out.value || (dir == 0 && out.value == 0)) {
      out.value = value;
      out.slack = slack;
      out.direction = dir;
    }
  }
  out.value = std::max(0.0, out.value);
  return out;
}

}  // namespace mmgeo
