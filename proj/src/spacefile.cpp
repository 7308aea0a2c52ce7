#include "mmgeo/spacefile.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace mmgeo {

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> out;
  for (std::string tok; iss >> tok;) out.push_back(tok);
  return out;
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

std::string value_after(const std::string& tok, const std::string& key) {
  if (tok.rfind(key + "=", 0) != 0) throw Error(ErrorCode::ParseError, "expected " + key + "=..., got '" + tok + "'");
  return tok.substr(key.size() + 1);
}

}  // namespace

LoadedSpace read_space(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw Error(ErrorCode::ParseError, "empty space file");
  auto head = tokens(line);
  if (head.size() != 4 || head[0] != "mmspace" || head[1] != "v1")
    throw Error(ErrorCode::ParseError, "bad header '" + line + "'");
  const std::string count = value_after(head[2], "n");
  Index n = 0;
  auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
  if (ec != std::errc() || ptr != count.data() + count.size() || n <= 0)
    throw Error(ErrorCode::ParseError, "bad point count '" + count + "'");
  const std::string mode_text = value_after(head[3], "mode");
  SpaceMode mode;
  if (mode_text == "metric") {
    mode = SpaceMode::metric;
  } else if (mode_text == "pseudo") {
    mode = SpaceMode::pseudo;
  } else {
    throw Error(ErrorCode::ParseError, "unknown mode '" + mode_text + "'");
  }

  Vector<Rational> w(n);
  for (Index i = 0; i < n; ++i) {
    if (!next_content_line(in, line)) throw Error(ErrorCode::ParseError, "missing weight line");
    auto t = tokens(line);
    if (t.size() != 2 || t[0] != "w") throw Error(ErrorCode::ParseError, "bad weight line '" + line + "'");
    w(i) = parse_rational(t[1]);
  }
  Matrix<Rational> d(n, n);
  for (Index i = 0; i < n; ++i) {
    if (!next_content_line(in, line)) throw Error(ErrorCode::ParseError, "missing distance row");
    auto t = tokens(line);
    if (static_cast<Index>(t.size()) != i + 2 || t[0] != "d")
      throw Error(ErrorCode::ParseError, "distance row " + std::to_string(i) + " needs " + std::to_string(i + 1) +
                                             " entries: '" + line + "'");
    for (Index j = 0; j <= i; ++j) {
      d(i, j) = parse_rational(t[static_cast<std::size_t>(j + 1)]);
      d(j, i) = d(i, j);
    }
  }
  // Validate the exact values first; doubles inherit the verdict up to rounding.
  ExactMMSpace exact = validate_space<Rational>(default_labels(n), d, w, mode);
  Matrix<double> dd(n, n);
  Vector<double> wd(n);
  for (Index i = 0; i < n; ++i) {
    wd(i) = to_double(w(i));
    for (Index j = 0; j < n; ++j) dd(i, j) = to_double(d(i, j));
  }
  MMSpace space = validate_space<double>(default_labels(n), std::move(dd), std::move(wd), mode);
  return {std::move(space), std::move(exact)};
}

LoadedSpace read_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_space(in);
}

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "cannot format value");
  return std::string(buf, ptr);
}

namespace {

template <typename Scalar, typename Fmt>
void write_generic(std::ostream& out, const BasicMMSpace<Scalar>& X, Fmt fmt) {
  out << "mmspace v1 n=" << X.size() << " mode=" << (X.mode() == SpaceMode::metric ? "metric" : "pseudo") << '\n';
  for (Index i = 0; i < X.size(); ++i) out << "w " << fmt(X.weight(i)) << '\n';
  for (Index i = 0; i < X.size(); ++i) {
    out << 'd';
    for (Index j = 0; j <= i; ++j) out << ' ' << fmt(X.dist(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

}  // namespace

void write_space(std::ostream& out, const MMSpace& X) {
  // A value that is the double nearest some p/q with small q is written as
  // p/q, so 1/6-weights read back as an exact probability vector.
  write_generic(out, X, [](double v) {
    Rational r;
    if (std::isfinite(v) && recognize_rational(v, 1 << 20, 0.0, r) && to_double(r) == v && denominator(r) != 1)
      return to_string(r);
    return format_real(v);
  });
}

void write_space(std::ostream& out, const ExactMMSpace& X) {
  write_generic(out, X, [](const Rational& v) { return to_string(v); });
}

void write_space_file(const std::string& path, const MMSpace& X) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  write_space(out, X);
}

}  // namespace mmgeo
