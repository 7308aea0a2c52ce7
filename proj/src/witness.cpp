#include "mmgeo/witness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmgeo/separation.hpp"

namespace mmgeo {

int rademacher(int i, const BigInt& k, int level) {
  if (i < 1) throw Error(ErrorCode::BadQuery, "rademacher index must be >= 1");
  if (level < 0) throw Error(ErrorCode::TOutOfRange, "negative grid level");
  if (k < 0 || k >= (BigInt(1) << level)) throw Error(ErrorCode::TOutOfRange, "t must lie in [0,1)");
  // floor(2^i k / 2^level)
  const BigInt f = i >= level ? BigInt(k << (i - level)) : BigInt(k >> (level - i));
  return (f & 1) == 0 ? 1 : -1;
}

int rademacher(int i, double t) {
  if (i < 1) throw Error(ErrorCode::BadQuery, "rademacher index must be >= 1");
  if (!(t >= 0.0 && t < 1.0)) throw Error(ErrorCode::TOutOfRange, "t must lie in [0,1)");
  // t = mantissa * 2^-1074 at worst, so k / 2^1074 is exact.
  constexpr int kLevel = 1074;
  const Rational scaled = exact_rational(t) * Rational(BigInt(1) << kLevel);
  return rademacher(i, boost::multiprecision::numerator(scaled), kLevel);
}

std::vector<std::int64_t> agreement_set(int n, int i, int j) {
  if (i == j) throw Error(ErrorCode::EqualIndices, "agreement_count needs i != j");
  if (n < 1 || n > 40 || i < 1 || j < 1) throw Error(ErrorCode::BadQuery, "need 1 <= i, j and 1 <= n <= 40");
  std::vector<std::int64_t> out;
  for (std::int64_t k = 0; k < (std::int64_t{1} << n); ++k)
    if (rademacher(i, BigInt(k), n) == rademacher(j, BigInt(k), n)) out.push_back(k);
  return out;
}

std::int64_t agreement_count(int n, int i, int j) { return static_cast<std::int64_t>(agreement_set(n, i, j).size()); }

namespace {

int block_exponent(std::size_t count) {
  if (count < 2 || (count & (count - 1)) != 0)
    throw Error(ErrorCode::BadQuery, "need 2^n blocks with n >= 1, got " + std::to_string(count));
  int n = 0;
  while ((std::size_t{1} << n) < count) ++n;
  return n;
}

// f_i on block k: 1/2 (1 + r_i(k / 2^n)).
Rational grid_value(int i, std::size_t k, int n) { return rademacher(i, BigInt(k), n) == 1 ? Rational(1) : Rational(0); }

// Checks the preconditions shared by construction and verification.
// Returns the error code and message of the first failure.
std::optional<std::pair<ErrorCode, std::string>> check_blocks(const ExactMMSpace& X,
                                                              const std::vector<PointSet>& blocks,
                                                              const Rational& delta, const Rational& eps,
                                                              const Rational& tau, std::vector<Rational>* masses) {
  using R = std::optional<std::pair<ErrorCode, std::string>>;
  if (!(tau > 0 && tau < Rational(1, 2))) return R({ErrorCode::BadTau, "tau must lie in (0, 1/2)"});
  if (!(eps >= 0 && eps < 1)) return R({ErrorCode::BadEps, "eps must lie in [0, 1)"});
  if (!(delta > 0)) return R({ErrorCode::BadQuery, "delta must be positive"});
  const int n = block_exponent(blocks.size());
  std::vector<int> owner(static_cast<std::size_t>(X.size()), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Index x : blocks[b]) {
      if (x < 0 || x >= X.size()) return R({ErrorCode::BadQuery, "block point out of range"});
      auto& o = owner[static_cast<std::size_t>(x)];
      if (o >= 0) return R({ErrorCode::BlocksNotSeparated, "point " + std::to_string(x) + " lies in two blocks"});
      o = static_cast<int>(b);
    }
  const Rational need = (1 - eps) / Rational(BigInt(1) << n);
  std::vector<Rational> m(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (Index x : blocks[b]) m[b] += X.weight(x);
    if (m[b] < need)
      return R({ErrorCode::BlockMassTooSmall,
                "block " + std::to_string(b) + " has mass " + to_string(m[b]) + " < " + to_string(need)});
  }
  for (std::size_t a = 0; a < blocks.size(); ++a)
    for (std::size_t b = a + 1; b < blocks.size(); ++b)
      for (Index x : blocks[a])
        for (Index y : blocks[b])
          if (X.dist(x, y) < delta)
            return R({ErrorCode::BlocksNotSeparated, "points " + std::to_string(x) + " and " + std::to_string(y) +
                                                         " at distance " + to_string(X.dist(x, y))});
  if (masses) *masses = std::move(m);
  return std::nullopt;
}

// Base set B, the values of f_i on it, and mu(N_ij) for i < j.
struct Construction {
  PointSet base;
  std::vector<Vector<Rational>> on_base;
  std::vector<Vector<Rational>> extended;
};

Construction construct(const ExactMMSpace& X, const std::vector<PointSet>& blocks, const Rational& delta) {
  const int n = block_exponent(blocks.size());
  Construction c;
  std::vector<std::size_t> pi;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Index x : blocks[b]) {
      c.base.push_back(x);
      pi.push_back(b);
    }
  for (int i = 1; i <= n; ++i) {
    Vector<Rational> f(static_cast<Index>(c.base.size()));
    for (std::size_t k = 0; k < c.base.size(); ++k) f(static_cast<Index>(k)) = grid_value(i, pi[k], n);
    c.extended.push_back(lip_extend<Rational>(X, c.base, f, delta));
    c.on_base.push_back(std::move(f));
  }
  return c;
}

// mu(N_ij) as the sum of block masses over grid points where r_i != r_j.
Rational disagreement_mass(const std::vector<Rational>& masses, int i, int j, int n) {
  Rational total = 0;
  for (std::size_t k = 0; k < masses.size(); ++k)
    if (rademacher(i, BigInt(k), n) != rademacher(j, BigInt(k), n)) total += masses[k];
  return total;
}

}  // namespace

Rational required_eps(const ExactMMSpace& X, const std::vector<PointSet>& blocks) {
  const int n = block_exponent(blocks.size());
  Rational lightest = 1;
  for (const auto& b : blocks) lightest = std::min(lightest, mass(X, b));
  const Rational e = 1 - lightest * Rational(BigInt(1) << n);
  return e > 0 ? e : Rational(0);
}

std::string verify_capacity_certificate(const ExactMMSpace& X, const CapacityCertificate& c) {
  try {
    std::vector<Rational> masses;
    if (auto bad = check_blocks(X, c.blocks, c.delta, c.eps, c.tau, &masses)) return bad->second;
    if (masses != c.block_masses) return "recorded block masses differ from the space";
    const int n = block_exponent(c.blocks.size());
    if (c.verified_capacity != n) return "claimed capacity is not log2 of the block count";
    if (static_cast<int>(c.functions.size()) != n) return "expected one function per Rademacher index";
    const Construction built = construct(X, c.blocks, c.delta);
    const Rational ell = 1 / c.delta;
    for (int i = 0; i < n; ++i) {
      const auto& f = c.functions[static_cast<std::size_t>(i)];
      if (f.size() != X.size()) return "function length differs from the space";
      for (Index x = 0; x < X.size(); ++x)
        if (f(x) != built.extended[static_cast<std::size_t>(i)](x)) return "function values differ from the construction";
      for (Index x = 0; x < X.size(); ++x)
        if (f(x) < 0 || f(x) > 1) return "function leaves [0,1]";
      if (!is_lipschitz<Rational>(X, f, ell, Rational(0))) return "function is not (1/delta)-Lipschitz";
      for (std::size_t k = 0; k < built.base.size(); ++k)
        if (f(built.base[k]) != built.on_base[static_cast<std::size_t>(i)](static_cast<Index>(k)))
          return "extension does not restrict to f_i on the blocks";
    }
    Rational min_me = 1, min_n = 1;
    const Rational half_floor = (1 - c.eps) / 2;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        const Rational me = me_mu<Rational>(X.weights(), c.functions[static_cast<std::size_t>(i - 1)],
                                            c.functions[static_cast<std::size_t>(j - 1)]);
        const Rational nij = disagreement_mass(masses, i, j, n);
        if (me < nij) return "me_mu below mu(N_ij) for pair " + std::to_string(i) + "," + std::to_string(j);
        if (nij < half_floor) return "mu(N_ij) below (1 - eps)/2";
        min_me = std::min(min_me, me);
        min_n = std::min(min_n, nij);
      }
    if (!(half_floor > (1 - c.eps) * c.tau)) return "(1 - eps)/2 does not exceed (1 - eps) tau";
    if (n >= 2 && (min_me != c.min_distance || min_n != c.min_disagreement)) return "recorded bounds differ";
    return {};
  } catch (const Error& e) {
    return e.what();
  }
}

CapacityCertificate capacity_certificate(const ExactMMSpace& X, const std::vector<PointSet>& blocks,
                                         const Rational& delta, const Rational& eps, const Rational& tau) {
  CapacityCertificate c;
  if (auto bad = check_blocks(X, blocks, delta, eps, tau, &c.block_masses)) throw Error(bad->first, bad->second);
  const int n = block_exponent(blocks.size());
  c.delta = delta;
  c.eps = eps;
  c.tau = tau;
  c.blocks = blocks;
  c.functions = construct(X, blocks, delta).extended;
  c.verified_capacity = n;
  c.min_distance = 1;
  c.min_disagreement = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      c.min_distance = std::min(c.min_distance, me_mu<Rational>(X.weights(), c.functions[static_cast<std::size_t>(i - 1)],
                                                                c.functions[static_cast<std::size_t>(j - 1)]));
      c.min_disagreement = std::min(c.min_disagreement, disagreement_mass(c.block_masses, i, j, n));
    }
  if (const std::string why = verify_capacity_certificate(X, c); !why.empty())
    throw Error(ErrorCode::BlocksNotSeparated, "certificate failed its own check: " + why);
  return c;
}

CapacityCertificate capacity_certificate(const MMSpace& X, const std::vector<PointSet>& blocks, double delta,
                                         double eps, double tau) {
  return capacity_certificate(to_exact(X), blocks, exact_rational(delta), exact_rational(eps), exact_rational(tau));
}

std::string CapacityCertificate::serialize() const {
  std::ostringstream os;
  os << "capacity-certificate v1\n";
  os << "space " << space_source << "\ndelta " << to_string(delta) << "\neps " << to_string(eps) << "\ntau "
     << to_string(tau) << "\ncapacity " << verified_capacity << "\nmin-me " << to_string(min_distance)
     << "\nmin-n " << to_string(min_disagreement) << '\n';
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    os << "mass " << b << ' ' << to_string(block_masses[b]) << "\nblock " << b;
    for (Index x : blocks[b]) os << ' ' << x;
    os << '\n';
  }
  for (std::size_t i = 0; i < functions.size(); ++i) {
    os << "f " << i + 1;
    for (Index x = 0; x < functions[i].size(); ++x) os << ' ' << to_string(functions[i](x));
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

CapacityCertificate CapacityCertificate::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& why) { return Error(ErrorCode::ParseError, "capacity-certificate: " + why); };
  if (!std::getline(in, line) || line != "capacity-certificate v1") throw fail("missing header");
  CapacityCertificate c;
  auto rational = [&](std::istringstream& ls) {
    std::string t;
    if (!(ls >> t)) throw fail("missing value");
    return parse_rational(t);
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end") break;
    if (key == "space") {
      std::getline(ls >> std::ws, c.space_source);
    } else if (key == "delta") {
      c.delta = rational(ls);
    } else if (key == "eps") {
      c.eps = rational(ls);
    } else if (key == "tau") {
      c.tau = rational(ls);
    } else if (key == "capacity") {
      ls >> c.verified_capacity;
    } else if (key == "min-me") {
      c.min_distance = rational(ls);
    } else if (key == "min-n") {
      c.min_disagreement = rational(ls);
    } else if (key == "mass" || key == "block") {
      std::size_t b;
      if (!(ls >> b)) throw fail("missing block number");
      if (key == "mass") {
        if (c.block_masses.size() <= b) c.block_masses.resize(b + 1);
        c.block_masses[b] = rational(ls);
      } else {
        if (c.blocks.size() <= b) c.blocks.resize(b + 1);
        for (Index x; ls >> x;) c.blocks[b].push_back(x);
      }
    } else if (key == "f") {
      std::size_t i;
      if (!(ls >> i) || i < 1) throw fail("bad function number");
      std::vector<Rational> values;
      for (std::string t; ls >> t;) values.push_back(parse_rational(t));
      if (c.functions.size() < i) c.functions.resize(i);
      Vector<Rational> f(static_cast<Index>(values.size()));
      for (std::size_t k = 0; k < values.size(); ++k) f(static_cast<Index>(k)) = values[k];
      c.functions[i - 1] = std::move(f);
    } else {
      throw fail("unknown key '" + key + "'");
    }
    if (ls.fail() && !ls.eof()) throw fail("bad value on line '" + line + "'");
  }
  return c;
}

// ---------------------------------------------------------------- growth

namespace {

MMSpace to_double_space(const ExactMMSpace& X) {
  const Index n = X.size();
  Matrix<double> d(n, n);
  Vector<double> w(n);
  for (Index i = 0; i < n; ++i) {
    w(i) = to_double(X.weight(i));
    for (Index j = 0; j < n; ++j) d(i, j) = to_double(X.dist(i, j));
  }
  return validate_space<double>(X.points(), std::move(d), std::move(w), X.mode(), validation_tolerance<double>(),
                                false);
}

}  // namespace

GrowthReport capacity_growth_check(const std::vector<ExactMMSpace>& seq, double delta, double alpha,
                                   const std::vector<int>& m_targets, const BlockProvider& provider,
                                   std::size_t node_limit) {
  if (!(alpha > 0 && alpha < 0.5)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1/2)");
  if (!(delta > 0)) throw Error(ErrorCode::BadQuery, "delta must be positive");
  for (int m : m_targets)
    if (m < 1 || m > 20) throw Error(ErrorCode::BadTarget, "targets must satisfy 1 <= m <= 20");
  GrowthReport report;
  report.delta = delta;
  report.alpha = alpha;
  report.best.assign(seq.size(), 0);
  const Rational a = exact_rational(alpha), d = exact_rational(delta);
  // Mass slack asked of the search when no blocks are supplied: halfway to
  // the largest eps that still leaves tau = alpha / (1 - eps) below 1/2.
  const double search_eps = (1 - 2 * alpha) / 2;
  for (std::size_t s = 0; s < seq.size(); ++s) {
    const ExactMMSpace& X = seq[s];
    for (int m : m_targets) {
      GrowthRow row;
      row.space_index = s;
      row.m = m;
      const std::size_t count = std::size_t{1} << m;
      std::optional<std::vector<PointSet>> blocks;
      if (provider) {
        blocks = provider(s, count);
      } else if (static_cast<std::size_t>(X.size()) >= count) {
        const std::vector<double> kappas(count, (1 - search_eps) / static_cast<double>(count));
        bool exhausted = false;
        const MMSpace Xd = to_double_space(X);
        blocks = sep_feasible(Xd, kappas, delta, std::nullopt, node_limit, &exhausted);
        if (!blocks && exhausted) row.note = "search budget exhausted; ";
      }
      if (!blocks) {
        row.note += std::string(to_string(ErrorCode::NoBlocksFound));
        report.rows.push_back(std::move(row));
        continue;
      }
      const Rational eps = required_eps(X, *blocks);
      if (!(2 * a < 1 - eps)) {
        row.note = std::string(to_string(ErrorCode::BlockMassTooSmall)) + ": blocks need eps " + to_string(eps) +
                   ", too large for alpha";
        report.rows.push_back(std::move(row));
        continue;
      }
      try {
        row.certificate = capacity_certificate(X, *blocks, d, eps, a / (1 - eps));
        report.best[s] = std::max(report.best[s], row.certificate->verified_capacity);
      } catch (const Error& e) {
        row.note = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace mmgeo
