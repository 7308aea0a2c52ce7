#include "mmgeo/separation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "mmgeo/detail/bitset.hpp"
#include "mmgeo/spacefile.hpp"

namespace mmgeo {

using detail::Bits;

namespace {

void check_query(const std::vector<double>& kappas) {
  if (kappas.size() < 2) throw Error(ErrorCode::BadQuery, "need at least two mass thresholds (m >= 1)");
  for (double k : kappas)
    if (!(k > 0) || !std::isfinite(k)) throw Error(ErrorCode::BadQuery, "mass thresholds must be positive");
}

std::vector<double> distinct_distances(const MMSpace& X) {
  std::vector<double> vals;
  for (Index i = 0; i < X.size(); ++i)
    for (Index j = i + 1; j < X.size(); ++j)
      if (X.dist(i, j) > 0) vals.push_back(X.dist(i, j));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

SepWitness everything(const MMSpace& X, std::size_t groups) {
  PointSet all(static_cast<std::size_t>(X.size()));
  std::iota(all.begin(), all.end(), Index{0});
  return SepWitness(groups, all);
}

// Point-level dive: each node picks the most constrained deficient set and a
// candidate point, then branches on "joins" versus "excluded from this set".
// Quick to find witnesses when they are plentiful; weak at refuting.
class SepSearch {
 public:
  SepSearch(const MMSpace& X, const std::vector<double>& kappas, double delta, std::size_t node_limit)
      : X_(X), kappa_(kappas), n_(static_cast<std::size_t>(X.size())), G_(kappas.size()), limit_(node_limit) {
    conflict_.assign(n_, Bits(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j && X.dist(static_cast<Index>(i), static_cast<Index>(j)) < delta) conflict_[i].set(j);
    for (double k : kappa_) total_kappa_ += k;
  }

  std::optional<SepWitness> run(std::optional<Index> anchor) {
    for (double k : kappa_)
      if (k > 1 + kMassTol) return std::nullopt;
    State s;
    s.members.assign(G_, Bits(n_));
    s.allowed.assign(G_, Bits(n_, true));
    s.mass.assign(G_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      if (X_.weight(static_cast<Index>(i)) <= 0)
        for (auto& a : s.allowed) a.reset(i);
    if (anchor) {
      if (*anchor < 0 || *anchor >= X_.size()) throw Error(ErrorCode::BadQuery, "anchor outside the space");
      if (X_.weight(*anchor) <= 0) return std::nullopt;
      join(s, 0, static_cast<std::size_t>(*anchor));
    }
    if (!dfs(s)) return std::nullopt;
    return witness_;
  }

  bool exhausted() const { return exhausted_; }

 private:
  struct State {
    std::vector<Bits> members, allowed;
    std::vector<double> mass;
  };

  double mass_of(const Bits& b) const {
    double m = 0;
    b.for_each([&](std::size_t v) { m += X_.weight(static_cast<Index>(v)); });
    return m;
  }

  void join(State& s, std::size_t g, std::size_t v) const {
    s.members[g].set(v);
    s.mass[g] += X_.weight(static_cast<Index>(v));
    for (std::size_t h = 0; h < G_; ++h) {
      s.allowed[h].reset(v);
      if (h != g) s.allowed[h].subtract(conflict_[v]);
    }
  }

  bool dfs(State& s) {
    if (limit_ && ++nodes_ > limit_) {
      exhausted_ = true;
      return false;
    }
    std::size_t pick = G_;
    double pick_slack = 0;
    Bits reach(n_);
    for (std::size_t g = 0; g < G_; ++g) {
      reach |= s.members[g];
      reach |= s.allowed[g];
      if (s.mass[g] >= kappa_[g] - kMassTol) continue;
      const double slack = s.mass[g] + mass_of(s.allowed[g]) - kappa_[g];
      if (slack < -kMassTol) return false;
      if (pick == G_ || slack < pick_slack) {
        pick = g;
        pick_slack = slack;
      }
    }
    if (pick == G_) {
      witness_.clear();
      for (const auto& m : s.members) {
        PointSet set;
        m.for_each([&](std::size_t v) { set.push_back(static_cast<Index>(v)); });
        witness_.push_back(std::move(set));
      }
      return true;
    }
    if (mass_of(reach) < total_kappa_ - kMassTol) return false;

    // Heaviest candidate first; among equals, the one that removes the
    // least potential from the other sets.
    Bits others(n_);
    for (std::size_t g = 0; g < G_; ++g)
      if (g != pick) others |= s.allowed[g];
    std::size_t v = n_, v_damage = 0;
    double v_weight = -1;
    s.allowed[pick].for_each([&](std::size_t c) {
      const double w = X_.weight(static_cast<Index>(c));
      if (w < v_weight) return;
      const std::size_t damage = conflict_[c].intersection_count(others);
      if (w > v_weight || damage < v_damage) {
        v = c;
        v_weight = w;
        v_damage = damage;
      }
    });

    {
      State t = s;
      join(t, pick, v);
      if (dfs(t)) return true;
      if (exhausted_) return false;
    }
    // Set `pick` does not contain v. If `pick` is still empty, every other
    // empty set with the same threshold and the same options is
    // interchangeable with it, so v can be excluded from those too.
    const bool empty = s.members[pick].none();
    const Bits before = s.allowed[pick];
    for (std::size_t g = 0; g < G_; ++g) {
      if (g == pick || (empty && s.members[g].none() && kappa_[g] == kappa_[pick] && s.allowed[g] == before))
        s.allowed[g].reset(v);
    }
    return dfs(s);
  }

  const MMSpace& X_;
  const std::vector<double>& kappa_;
  std::size_t n_, G_;
  std::vector<Bits> conflict_;
  double total_kappa_ = 0;
  std::size_t limit_;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
  SepWitness witness_;
};

// Exact search over "which set may use this point" masks. Points that
// pairwise conflict (distance < delta) can feed at most one set, so the search
// branches on the label of a whole conflict clique. Once the conflicts that
// still matter (between points whose masks allow different sets) fall apart
// into small components, each component is enumerated on its own and the
// per-component mass vectors are combined by a capped dynamic program.
class LabelSearch {
 public:
  using Mask = std::uint32_t;
  static constexpr std::size_t kMaxGroups = 32;

  LabelSearch(const MMSpace& X, const std::vector<double>& kappas, double delta, std::size_t node_limit)
      : X_(X), kappa_(kappas), n_(static_cast<std::size_t>(X.size())), G_(kappas.size()), limit_(node_limit) {
    if (G_ > kMaxGroups) throw Error(ErrorCode::BadQuery, "at most 32 sets are supported");
    conflict_.assign(n_, Bits(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j && X.dist(static_cast<Index>(i), static_cast<Index>(j)) < delta) conflict_[i].set(j);
  }

  std::optional<SepWitness> run(std::optional<Index> anchor) {
    for (double k : kappa_)
      if (k > 1 + kMassTol) return std::nullopt;
    const Mask all = G_ == 32 ? ~Mask{0} : (Mask{1} << G_) - 1;
    std::vector<Mask> mask(n_, all);
    for (std::size_t i = 0; i < n_; ++i)
      if (X_.weight(static_cast<Index>(i)) <= 0) mask[i] = 0;
    if (anchor) {
      if (*anchor < 0 || *anchor >= X_.size()) throw Error(ErrorCode::BadQuery, "anchor outside the space");
      const auto a = static_cast<std::size_t>(*anchor);
      if (mask[a] == 0) return std::nullopt;
      forced_ = a;
      // The anchor sits in set 0, so nothing near it can join another set.
      mask[a] = 1;
      conflict_[a].for_each([&](std::size_t v) { mask[v] &= 1; });
    }
    if (!solve(mask)) return std::nullopt;
    return witness_;
  }

  bool exhausted() const { return exhausted_; }

 private:
  static bool single(Mask m) { return m && !(m & (m - 1)); }
  static bool relevant(Mask a, Mask b) { return a && b && !(a == b && single(a)); }

  // Every family T of sets needs its total threshold from points that some
  // member of T may still use.
  bool hall(const std::vector<Mask>& mask) const {
    std::vector<std::pair<Mask, double>> types;
    {
      std::vector<std::pair<Mask, double>> raw;
      for (std::size_t v = 0; v < n_; ++v)
        if (mask[v]) raw.emplace_back(mask[v], X_.weight(static_cast<Index>(v)));
      std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [m, w] : raw) {
        if (!types.empty() && types.back().first == m)
          types.back().second += w;
        else
          types.emplace_back(m, w);
      }
    }
    auto check = [&](Mask T) {
      double need = 0, have = 0;
      for (std::size_t g = 0; g < G_; ++g)
        if (T >> g & 1u) need += kappa_[g];
      for (const auto& [m, w] : types)
        if (m & T) have += w;
      return have >= need - kMassTol;
    };
    if (G_ <= 8) {
      for (Mask T = 1; T < (Mask{1} << G_); ++T)
        if (!check(T)) return false;
      return true;
    }
    for (std::size_t g = 0; g < G_; ++g)
      if (!check(Mask{1} << g)) return false;
    return check(~Mask{0});
  }

  template <typename F>
  void for_relevant(const std::vector<Mask>& mask, std::size_t u, F&& f) const {
    conflict_[u].for_each([&](std::size_t v) {
      if (relevant(mask[u], mask[v])) f(v);
    });
  }

  // Rough count of the assignments a component enumeration would visit.
  static double enumeration_cost(const std::vector<Mask>& mask, const std::vector<std::size_t>& comp) {
    double cost = 1;
    for (std::size_t v : comp) cost *= 1 + std::popcount(mask[v]);
    return cost;
  }

  bool solve(const std::vector<Mask>& mask) {
    if (limit_ && ++nodes_ > limit_) {
      exhausted_ = true;
      return false;
    }
    if (!hall(mask)) return false;

    std::vector<int> comp_of(n_, -1);
    std::vector<std::vector<std::size_t>> comps;
    for (std::size_t s = 0; s < n_; ++s) {
      if (!mask[s] || comp_of[s] != -1) continue;
      const int id = static_cast<int>(comps.size());
      comps.emplace_back();
      std::vector<std::size_t> stack{s};
      comp_of[s] = id;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        comps.back().push_back(u);
        for_relevant(mask, u, [&](std::size_t v) {
          if (comp_of[v] == -1) {
            comp_of[v] = id;
            stack.push_back(v);
          }
        });
      }
    }
    std::size_t worst = comps.size();
    double worst_cost = kLeafCost;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const double cost = enumeration_cost(mask, comps[c]);
      if (cost > worst_cost) {
        worst = c;
        worst_cost = cost;
      }
    }
    if (worst == comps.size()) return leaf(mask, comps);

    // A conflict clique through the busiest point of the hardest component.
    const auto& C = comps[worst];
    auto degree = [&](std::size_t u) {
      std::size_t d = 0;
      for_relevant(mask, u, [&](std::size_t) { ++d; });
      return d;
    };
    std::size_t seed = C.front(), seed_deg = 0;
    for (std::size_t u : C)
      if (const std::size_t d = degree(u); d > seed_deg) {
        seed = u;
        seed_deg = d;
      }
    std::vector<std::pair<std::size_t, std::size_t>> cand;  // (degree, point)
    for_relevant(mask, seed, [&](std::size_t v) { cand.emplace_back(degree(v), v); });
    std::sort(cand.begin(), cand.end(), std::greater<>());
    std::vector<std::size_t> clique{seed};
    for (const auto& [d, v] : cand) {
      bool ok = true;
      for (std::size_t c : clique) ok = ok && conflict_[c].test(v);
      if (ok) clique.push_back(v);
    }
    Mask options = 0;
    for (std::size_t v : clique) options |= mask[v];

    // Sets with equal thresholds that no point tells apart are interchangeable.
    auto interchangeable = [&](std::size_t g, std::size_t h) {
      if (kappa_[g] != kappa_[h]) return false;
      for (std::size_t v = 0; v < n_; ++v)
        if (((mask[v] >> g) & 1u) != ((mask[v] >> h) & 1u)) return false;
      return true;
    };
    for (std::size_t g = 0; g < G_; ++g) {
      if (!(options >> g & 1u)) continue;
      bool repeat = false;
      for (std::size_t h = 0; h < g && !repeat; ++h) repeat = (options >> h & 1u) && interchangeable(g, h);
      if (repeat) continue;
      std::vector<Mask> child = mask;
      for (std::size_t v : clique) child[v] &= Mask{1} << g;
      if (solve(child)) return true;
      if (exhausted_) return false;
    }
    return false;
  }

  struct Entry {
    std::vector<double> mass;
    std::vector<std::pair<std::size_t, std::size_t>> assign;  // (point, set)
  };

  std::vector<double> capped(std::vector<double> m) const {
    for (std::size_t g = 0; g < G_; ++g) m[g] = std::min(m[g], kappa_[g]);
    return m;
  }

  static std::vector<long long> key(const std::vector<double>& m) {
    std::vector<long long> k(m.size());
    for (std::size_t g = 0; g < m.size(); ++g) k[g] = std::llround(m[g] * 1e12);
    return k;
  }

  static bool dominated(const std::vector<double>& a, const std::vector<double>& b) {  // a <= b
    for (std::size_t g = 0; g < a.size(); ++g)
      if (a[g] > b[g] + kMassTol) return false;
    return true;
  }

  template <typename T>
  static void prune(std::vector<T>& items, const std::function<const std::vector<double>&(const T&)>& vec) {
    std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) {
      return std::accumulate(vec(a).begin(), vec(a).end(), 0.0) > std::accumulate(vec(b).begin(), vec(b).end(), 0.0);
    });
    std::vector<T> kept;
    for (auto& it : items) {
      bool dom = false;
      for (const auto& k : kept)
        if (dominated(vec(it), vec(k))) {
          dom = true;
          break;
        }
      if (!dom) kept.push_back(std::move(it));
    }
    items = std::move(kept);
  }

  const std::vector<Entry>& frontier(const std::vector<Mask>& mask, std::vector<std::size_t> comp) {
    std::sort(comp.begin(), comp.end());
    std::vector<std::uint64_t> memo_key;
    memo_key.reserve(comp.size());
    for (std::size_t v : comp) memo_key.push_back(static_cast<std::uint64_t>(v) << 32 | mask[v]);
    if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
    if (memo_.size() > kMemoLimit) memo_.clear();
    std::vector<int> chosen(comp.size(), -1);
    std::vector<std::size_t> local(n_, comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i) local[comp[i]] = i;
    std::map<std::vector<long long>, Entry> found;
    std::vector<double> m(G_, 0.0);
    auto rec = [&](auto&& self, std::size_t i) -> void {
      if (i == comp.size()) {
        auto c = capped(m);
        auto k = key(c);
        if (found.count(k)) return;
        Entry e{std::move(c), {}};
        for (std::size_t j = 0; j < comp.size(); ++j)
          if (chosen[j] >= 0) e.assign.emplace_back(comp[j], static_cast<std::size_t>(chosen[j]));
        found.emplace(std::move(k), std::move(e));
        return;
      }
      const std::size_t v = comp[i];
      for (std::size_t g = 0; g < G_; ++g) {
        if (!(mask[v] >> g & 1u)) continue;
        bool ok = true;
        for_relevant(mask, v, [&](std::size_t u) {
          const std::size_t j = local[u];
          if (j < i && chosen[j] >= 0 && static_cast<std::size_t>(chosen[j]) != g) ok = false;
        });
        if (!ok) continue;
        chosen[i] = static_cast<int>(g);
        m[g] += X_.weight(static_cast<Index>(v));
        self(self, i + 1);
        m[g] -= X_.weight(static_cast<Index>(v));
        chosen[i] = -1;
      }
      if (forced_ && *forced_ == v) return;
      self(self, i + 1);
    };
    rec(rec, 0);
    std::vector<Entry> out;
    for (auto& [k, e] : found) out.push_back(std::move(e));
    prune<Entry>(out, [](const Entry& e) -> const std::vector<double>& { return e.mass; });
    return memo_.emplace(std::move(memo_key), std::move(out)).first->second;
  }

  bool leaf(const std::vector<Mask>& mask, std::vector<std::vector<std::size_t>>& comps) {
    // The anchor's component first, so it is never skipped by the early exit.
    if (forced_)
      for (std::size_t c = 0; c < comps.size(); ++c)
        if (std::find(comps[c].begin(), comps[c].end(), *forced_) != comps[c].end()) std::swap(comps[0], comps[c]);
    struct State {
      std::vector<double> mass;
      long prev;
      long entry;
    };
    std::vector<const std::vector<Entry>*> fronts;
    std::vector<std::vector<State>> layers;
    layers.push_back({State{std::vector<double>(G_, 0.0), -1, -1}});
    auto done = [&](const std::vector<double>& m) {
      for (std::size_t g = 0; g < G_; ++g)
        if (m[g] < kappa_[g] - kMassTol) return false;
      return true;
    };
    for (std::size_t c = 0; c <= comps.size(); ++c) {
      auto& cur = layers.back();
      for (std::size_t s = 0; s < cur.size(); ++s) {
        if (!done(cur[s].mass) || (forced_ && c == 0 && !comps.empty())) continue;
        // Reconstruct the witness along the back pointers.
        SepWitness w(G_);
        long idx = static_cast<long>(s);
        for (std::size_t layer = layers.size() - 1; layer > 0; --layer) {
          const State& st = layers[layer][static_cast<std::size_t>(idx)];
          for (const auto& [v, g] : (*fronts[layer - 1])[static_cast<std::size_t>(st.entry)].assign)
            w[g].push_back(static_cast<Index>(v));
          idx = st.prev;
        }
        for (auto& set : w) std::sort(set.begin(), set.end());
        witness_ = std::move(w);
        return true;
      }
      if (c == comps.size()) break;
      fronts.push_back(&frontier(mask, comps[c]));
      std::map<std::vector<long long>, State> next;
      for (std::size_t s = 0; s < cur.size(); ++s)
        for (std::size_t e = 0; e < fronts.back()->size(); ++e) {
          std::vector<double> m = cur[s].mass;
          for (std::size_t g = 0; g < G_; ++g) m[g] += (*fronts.back())[e].mass[g];
          m = capped(std::move(m));
          auto k = key(m);
          if (!next.count(k)) next.emplace(std::move(k), State{std::move(m), static_cast<long>(s), static_cast<long>(e)});
        }
      std::vector<State> layer;
      for (auto& [k, st] : next) layer.push_back(std::move(st));
      prune<State>(layer, [](const State& st) -> const std::vector<double>& { return st.mass; });
      layers.push_back(std::move(layer));
    }
    return false;
  }

  static constexpr double kLeafCost = 512;
  static constexpr std::size_t kMemoLimit = 200000;

  const MMSpace& X_;
  const std::vector<double>& kappa_;
  std::size_t n_, G_;
  std::vector<Bits> conflict_;
  std::optional<std::size_t> forced_;
  std::map<std::vector<std::uint64_t>, std::vector<Entry>> memo_;
  std::size_t limit_;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
  SepWitness witness_;
};

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Single-linkage components: the components of {d < delta} are unions along
// minimum-spanning-tree edges of weight < delta. Sweeping the candidates
// upward, give whole components to the set with the largest remaining
// deficit. Returns the best (largest) delta at which that works.
std::optional<std::pair<double, SepWitness>> component_witness(const MMSpace& X, const std::vector<double>& kappas,
                                                               const std::vector<double>& cands) {
  const std::size_t n = static_cast<std::size_t>(X.size());
  if (n == 0) return std::nullopt;
  // Prim's algorithm, O(n^2).
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::vector<bool> in_tree(n, false);
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  best[0] = 0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    in_tree[u] = true;
    if (it > 0) edges.emplace_back(best[u], from[u], u);
    for (std::size_t v = 0; v < n; ++v) {
      const double d = X.dist(static_cast<Index>(u), static_cast<Index>(v));
      if (!in_tree[v] && d < best[v]) {
        best[v] = d;
        from[v] = u;
      }
    }
  }
  std::sort(edges.begin(), edges.end());

  std::optional<std::pair<double, SepWitness>> found;
  DisjointSets ds(n);
  std::size_t e = 0;
  for (double delta : cands) {
    while (e < edges.size() && std::get<0>(edges[e]) < delta) {
      ds.unite(std::get<1>(edges[e]), std::get<2>(edges[e]));
      ++e;
    }
    std::vector<std::size_t> root_index(n, n);
    std::vector<PointSet> comps;
    std::vector<double> comp_mass;
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t r = ds.find(v);
      if (root_index[r] == n) {
        root_index[r] = comps.size();
        comps.emplace_back();
        comp_mass.push_back(0);
      }
      comps[root_index[r]].push_back(static_cast<Index>(v));
      comp_mass[root_index[r]] += X.weight(static_cast<Index>(v));
    }
    std::vector<std::size_t> order(comps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return comp_mass[a] > comp_mass[b]; });
    SepWitness w(kappas.size());
    std::vector<double> mass(kappas.size(), 0);
    for (std::size_t c : order) {
      std::size_t g = kappas.size();
      for (std::size_t h = 0; h < kappas.size(); ++h) {
        const double deficit = kappas[h] - mass[h];
        if (deficit > kMassTol && (g == kappas.size() || deficit > kappas[g] - mass[g])) g = h;
      }
      if (g == kappas.size()) break;
      w[g].insert(w[g].end(), comps[c].begin(), comps[c].end());
      mass[g] += comp_mass[c];
    }
    bool ok = true;
    for (std::size_t h = 0; h < kappas.size(); ++h) ok = ok && mass[h] >= kappas[h] - kMassTol;
    if (ok) {
      for (auto& set : w) std::sort(set.begin(), set.end());
      found = std::make_pair(delta, std::move(w));
    }
  }
  return found;
}

// Index of the largest candidate admitted by the ball-mass condition, or -1.
long ball_mass_index(const MMSpace& X, const std::vector<double>& kappas, const std::vector<double>& cands) {
  long lo = -1, hi = static_cast<long>(cands.size()) - 1;
  while (lo < hi) {
    const long mid = lo + (hi - lo + 1) / 2;
    if (ball_mass_admits(X, kappas, cands[static_cast<std::size_t>(mid)])) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

long index_of(const std::vector<double>& cands, double value) {
  auto it = std::upper_bound(cands.begin(), cands.end(), value);
  return static_cast<long>(it - cands.begin()) - 1;
}

constexpr std::size_t kDiveNodes = 5000;

}  // namespace

bool verify_sep_witness(const MMSpace& X, const std::vector<double>& kappas, const SepWitness& w, double delta) {
  if (w.size() != kappas.size()) return false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (Index p : w[i])
      if (p < 0 || p >= X.size()) return false;
    if (mass(X, w[i]) < kappas[i] - kMassTol) return false;
  }
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j)
      for (Index a : w[i])
        for (Index b : w[j])
          if (X.dist(a, b) < delta) return false;
  return true;
}

double witness_separation(const MMSpace& X, const SepWitness& w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j)
      for (Index a : w[i])
        for (Index b : w[j]) best = std::min(best, X.dist(a, b));
  return best;
}

std::optional<SepWitness> sep_feasible(const MMSpace& X, const std::vector<double>& kappas, double delta,
                                       std::optional<Index> anchor, std::size_t node_limit, bool* exhausted) {
  check_query(kappas);
  if (exhausted) *exhausted = false;
  // A short point-level dive settles the easy feasible cases; the clique
  // search does the rest, including every refutation.
  {
    SepSearch dive(X, kappas, delta, node_limit ? std::min(node_limit, kDiveNodes) : kDiveNodes);
    if (auto w = dive.run(anchor)) return w;
    if (!dive.exhausted()) return std::nullopt;
  }
  LabelSearch search(X, kappas, delta, node_limit);
  auto out = search.run(anchor);
  if (exhausted) *exhausted = search.exhausted();
  return out;
}

bool ball_mass_admits(const MMSpace& X, const std::vector<double>& kappas, double delta) {
  const Index n = X.size();
  std::vector<double> far(static_cast<std::size_t>(n), 0);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      if (X.dist(x, y) >= delta) far[static_cast<std::size_t>(x)] += X.weight(y);
  double total = 0;
  for (double k : kappas) total += k;
  double joint = 0;
  for (Index x = 0; x < n; ++x) {
    for (double k : kappas)
      if (far[static_cast<std::size_t>(x)] >= total - k - kMassTol) {
        joint += X.weight(x);
        break;
      }
  }
  if (joint < total - kMassTol) return false;
  for (double k : kappas) {
    double m = 0;
    for (Index x = 0; x < n; ++x)
      if (far[static_cast<std::size_t>(x)] >= total - k - kMassTol) m += X.weight(x);
    if (m < k - kMassTol) return false;
  }
  return true;
}

SepBracket sep(const MMSpace& X, const std::vector<double>& kappas, const SepOptions& options) {
  check_query(kappas);
  const std::size_t m = kappas.size() - 1;
  const bool small = static_cast<std::size_t>(X.size()) <= options.exact_cap && m <= options.max_m;
  if (options.effort == Effort::exact && !small)
    throw Error(ErrorCode::TooLargeForExact, std::to_string(X.size()) + " points, m = " + std::to_string(m) +
                                                 " exceeds the exact caps");
  const bool exact = options.effort == Effort::exact || (options.effort == Effort::automatic && small);

  SepBracket out;
  for (double k : kappas)
    if (k > 1 + kMassTol) {  // no tuple at all; sup of the empty family is 0
      out.lower = out.upper = 0;
      out.exact = true;
      out.source = "empty";
      return out;
    }
  const std::vector<double> cands = distinct_distances(X);

  // Certified lower bound: provided witness, then single-linkage components.
  long lo = -1;
  if (options.provided && verify_sep_witness(X, kappas, *options.provided, 0)) {
    const double s = witness_separation(X, *options.provided);
    const long idx = index_of(cands, s);
    if (idx > lo) {
      lo = idx;
      out.witness = options.provided;
      out.source = "provided";
    }
  }
  if (auto comp = component_witness(X, kappas, cands)) {
    const long idx = index_of(cands, comp->first);
    if (idx > lo) {
      lo = idx;
      out.witness = std::move(comp->second);
      out.source = "components";
    }
  }
  long hi = ball_mass_index(X, kappas, cands);
  if (hi < lo) hi = lo;  // cannot happen for a sound bound; keep the bracket ordered

  if (exact) {
    while (lo < hi) {
      const long mid = lo + (hi - lo + 1) / 2;
      if (auto w = sep_feasible(X, kappas, cands[static_cast<std::size_t>(mid)], options.anchor)) {
        lo = mid;
        out.witness = std::move(w);
        out.source = "exact";
      } else {
        hi = mid - 1;
      }
    }
  } else {
    int tries = 0;
    for (long c = hi; c > lo && tries < 6; --c, ++tries) {
      bool exhausted = false;
      auto w = sep_feasible(X, kappas, cands[static_cast<std::size_t>(c)], options.anchor, options.bracket_nodes,
                            &exhausted);
      if (w) {
        lo = c;
        out.witness = std::move(w);
        out.source = "search";
        break;
      }
      if (!exhausted) hi = c - 1;  // a completed search is a proof of infeasibility
    }
  }

  out.lower = lo >= 0 ? cands[static_cast<std::size_t>(lo)] : 0.0;
  out.upper = hi >= 0 ? cands[static_cast<std::size_t>(hi)] : 0.0;
  out.exact = lo == hi;
  if (lo < 0) {
    out.witness = everything(X, kappas.size());
    out.source = "empty";
  }
  if (out.witness && !verify_sep_witness(X, kappas, *out.witness, out.lower))
    throw Error(ErrorCode::BadQuery, "internal: separation witness failed re-verification");
  return out;
}

SepBracket sep_m(const MMSpace& X, int m, double alpha, const SepOptions& options) {
  if (m < 1) throw Error(ErrorCode::BadQuery, "m must be at least 1");
  if (!(alpha > 0) || !(alpha < 1.0 / (m + 1)))
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1/(m+1))");
  return sep(X, std::vector<double>(static_cast<std::size_t>(m + 1), alpha), options);
}

// ---------------------------------------------------------------- reduction

RationalReduction reduce_rational(const std::vector<Rational>& kappas) {
  if (kappas.empty()) throw Error(ErrorCode::BadQuery, "no thresholds");
  BigInt q = 1;
  Rational total = 0;
  for (const auto& k : kappas) {
    if (k <= 0) throw Error(ErrorCode::BadQuery, "thresholds must be positive");
    q = boost::multiprecision::lcm(q, boost::multiprecision::denominator(k));
    total += k;
  }
  if (total >= 1) throw Error(ErrorCode::KappaSumNotBelowOne, "sum of thresholds is " + to_string(total));
  RationalReduction r;
  r.alpha = Rational(1, q);
  long next = 0;
  for (const auto& k : kappas) {
    const Rational scaled = k * q;
    const long p = boost::multiprecision::numerator(scaled).convert_to<long>();
    std::vector<long> blocks(static_cast<std::size_t>(p));
    std::iota(blocks.begin(), blocks.end(), next);
    next += p;
    r.plan.push_back(std::move(blocks));
  }
  r.ell = next - 1;
  return r;
}

RationalReduction reduce_rational(const std::vector<double>& kappas, std::int64_t max_denominator) {
  std::vector<Rational> exact;
  for (double k : kappas) {
    Rational r;
    if (!recognize_rational(k, max_denominator, 1e-12, r))
      throw Error(ErrorCode::NotRational, "threshold " + format_real(k) + " is not a recognizable fraction");
    exact.push_back(r);
  }
  return reduce_rational(exact);
}

SepWitness transport_witness(const RationalReduction& r, const SepWitness& blocks) {
  if (static_cast<long>(blocks.size()) != r.ell + 1)
    throw Error(ErrorCode::DimensionMismatch, "expected ell+1 blocks");
  SepWitness out;
  for (const auto& group : r.plan) {
    PointSet set;
    for (long b : group) set.insert(set.end(), blocks[static_cast<std::size_t>(b)].begin(),
                                    blocks[static_cast<std::size_t>(b)].end());
    std::sort(set.begin(), set.end());
    out.push_back(std::move(set));
  }
  return out;
}

// ---------------------------------------------------------------- report

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::supports: return "supports";
    case Verdict::refutes: return "refutes";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string DissipationReport::csv() const {
  std::ostringstream out;
  out << "space_index,m,alpha,lower,upper,exact,verdict\n";
  for (const auto& row : rows) {
    Verdict v = Verdict::inconclusive;
    for (const auto& c : cells)
      if (c.m == row.m && c.alpha == row.alpha) v = c.verdict;
    out << row.space_index << ',' << row.m << ',' << format_real(row.alpha) << ',' << format_real(row.bracket.lower)
        << ',' << (std::isinf(row.bracket.upper) ? std::string("inf") : format_real(row.bracket.upper)) << ','
        << (row.bracket.exact ? "true" : "false") << ',' << to_string(v) << '\n';
  }
  return out.str();
}

Verdict cell_verdict(const std::vector<SepBracket>& column, double delta, std::size_t tail_start) {
  if (column.empty()) return Verdict::inconclusive;
  bool all_tail_ok = tail_start < column.size();
  for (std::size_t k = tail_start; k < column.size(); ++k)
    if (column[k].lower < delta) all_tail_ok = false;
  if (all_tail_ok) return Verdict::supports;
  if (column.back().upper < delta) return Verdict::refutes;
  return Verdict::inconclusive;
}

DissipationReport dissipation_report(const std::vector<MMSpace>& seq, double delta,
                                     const std::vector<std::pair<int, double>>& grid, const SepOptions& options,
                                     const WitnessProvider& witnesses, std::size_t tail_start,
                                     const OptionsProvider& per_space) {
  if (!(delta > 0)) throw Error(ErrorCode::BadQuery, "delta must be positive");
  DissipationReport report;
  report.delta = delta;
  for (const auto& [m, alpha] : grid) {
    if (m < 1 || !(alpha > 0) || !(alpha < 1.0 / (m + 1)))
      throw Error(ErrorCode::AlphaOutOfRange, "grid cell (" + std::to_string(m) + ", " + format_real(alpha) + ")");
    std::vector<SepBracket> column;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      SepOptions opts = per_space ? per_space(k) : options;
      if (witnesses) opts.provided = witnesses(k, m, alpha);
      DissipationRow row{k, m, alpha, sep_m(seq[k], m, alpha, opts)};
      column.push_back(row.bracket);
      report.rows.push_back(std::move(row));
    }
    const Verdict v = cell_verdict(column, delta, tail_start);
    report.cells.push_back({m, alpha, v});
  }
  return report;
}

}  // namespace mmgeo
