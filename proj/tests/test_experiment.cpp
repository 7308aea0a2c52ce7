#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmgeo/error.hpp"
#include "mmgeo/experiment.hpp"
#include "mmgeo/spacefile.hpp"
#include "mmgeo/witness.hpp"

using namespace mmgeo;

namespace {

ExperimentConfig config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("parse_config: values, defaults, and validation") {
  const auto c = config("# comment\nexperiment = sym_dissipation\nn = 6, 3..4\ngrid = 1:1/3, 2:0.2  # trailing\n"
                        "delta = 1/2\nseed = 9\n");
  CHECK(c.ns == std::vector<int>{3, 4, 6});
  REQUIRE(c.grid.size() == 2);
  CHECK(c.grid[1].m == 2);
  CHECK(c.grid[1].alpha == Rational(1, 5));
  CHECK(c.delta == 0.5);
  CHECK(c.chain.seed == 9);
  CHECK(c.chain.metric.to_string() == "inverse(weighted)");
  CHECK(c.name == "sym_dissipation");
  CHECK(config("experiment = hamming_concentration\nn = 8\n").chain.metric.to_string() == "hamming");
  CHECK(config("experiment = cantor_concentration\nn = 2\n").chain.family == Family::cantor_chain);
  CHECK(config("n = 3\n").grid.size() == 1);

  for (const std::string bad : {"n = 3\nfoo = 1\n", "n = 3\ngrid = 1:1/2\n", "n = 3\ngrid = 0:1/5\n", "n 3\n",
                                "n = 3\ndelta = 0\n", "n = x\n", "experiment = nope\n", "grid = 1:1/3\n",
                                "experiment = verify_certificate\n", "n = 3\nkappa = 1\n", "n = 3\nmetric = euclid\n",
                                "experiment = cantor_concentration\nfamily = sym_chain\nn = 2\n"})
    expect_error(ErrorCode::BadConfig, [&] { config(bad); });
}

TEST_CASE("sym_dissipation: n = 3..6, delta 1/2, cell (1, 1/3) supports") {
  const Report r = run(config("experiment = sym_dissipation\nn = 3..6\ndelta = 0.5\ngrid = 1:1/3\n"), 1);
  std::size_t sep_rows = 0;
  for (const auto& row : r.rows) {
    if (row.cell.rfind("sep;", 0) == 0) {
      ++sep_rows;
      CHECK(row.value >= 0.5);
      CHECK(row.tag != Tag::estimate);
      CHECK(row.verdict == Verdict::supports);
    }
    if (row.cell == "capacity;m=2" && row.n >= 4) CHECK(row.value >= 2);
  }
  CHECK(sep_rows == 4);
  // Artifacts recheck on their own.
  std::size_t checked = 0;
  for (const auto& [name, text] : r.artifacts) {
    const VerifyResult v = verify_certificate_text(text);
    CHECK_MESSAGE(v.valid, name << ": " << v.reason);
    ++checked;
  }
  CHECK(checked >= 4);
}

TEST_CASE("sym_dissipation: Sym(7) uses coset witnesses only; Sym(3) at m = 3 stays below 1/2") {
  const Report r = run(config("n = 3, 7\ngrid = 3:1/7\ncapacity_targets = 1\n"), 2);
  for (const auto& row : r.rows) {
    if (row.n == 7 && row.cell == "sep;m=3;alpha=1/7") {
      CHECK(row.tag == Tag::certified_lower);
      CHECK(row.value >= 0.5);
    }
    if (row.n == 3 && row.cell == "sep;m=3;alpha=1/7") {
      CHECK(row.tag == Tag::exact);
      CHECK(row.value == 0.375);
    }
  }
  // The last space supports the cell while the first does not.
  CHECK(r.summary.front() == "sep;m=3;alpha=1/7 inconclusive");
  const Report tail = run(config("n = 3, 7\ngrid = 3:1/7\ncapacity_targets = 1\ntail_start = 7\n"), 1);
  CHECK(tail.summary.front() == "sep;m=3;alpha=1/7 supports");
}

TEST_CASE("hamming_concentration: decreasing estimates, identical CSV for any worker count") {
  const auto c = config("experiment = hamming_concentration\nn = 8, 16, 32, 64\nkappa = 0.1\nsamples = 2000\nseed = 5\n");
  const Report one = run(c, 1), many = run(c, 3);
  CHECK(to_csv(one) == to_csv(many));
  CHECK(to_csv(one) == to_csv(run(c, 1)));
  REQUIRE(one.rows.size() == 4);
  for (std::size_t k = 1; k < 4; ++k) CHECK(one.rows[k].value < one.rows[k - 1].value);
  for (const auto& row : one.rows) {
    CHECK(row.tag == Tag::estimate);
    CHECK(row.verdict == Verdict::inconclusive);
  }
}

TEST_CASE("cantor_concentration: the step bound is the last coordinate weight") {
  const Report r = run(config("experiment = cantor_concentration\nn = 1..6\n"), 2);
  for (const auto& row : r.rows)
    if (row.cell == "dconc-step") CHECK(row.value == std::ldexp(1.0, -(row.n + 1)));
  CHECK(r.rows.size() == 12);
  try {
    run(config("experiment = cantor_concentration\nn = 15\n"), 1);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooLarge);
    CHECK(std::string(e.what()).find("depth=15") != std::string::npos);
  }
}

TEST_CASE("cube_demo: estimates only, always inconclusive") {
  const Report r = run(config("experiment = cube_demo\nn = 1..3\ngrid = 1:1/3\ncube_resolution = 10\n"), 2);
  CHECK(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.tag == Tag::estimate);
    CHECK(row.verdict == Verdict::inconclusive);
  }
  const MMSpace g = cube_grid(2, 3);
  CHECK(g.size() == 9);
  CHECK(diameter(g) == doctest::Approx(2.0 / 3));
}

TEST_CASE("emit: csv and svg layout") {
  Report empty;
  CHECK(to_csv(empty) == "experiment,n,cell,m,alpha,value,tag,verdict\n");

  Report r;
  r.experiment = "demo";
  r.rows = {{"demo", 4, "a", 1, "1/3", 0.5, Tag::exact, Verdict::supports, 0},
            {"demo", 3, "b", 1, "1/3", 0.25, Tag::estimate, Verdict::inconclusive, 1},
            {"demo", 3, "a", 1, "1/3", 0.75, Tag::certified_lower, Verdict::supports, 0}};
  const std::string csv = to_csv(r);
  CHECK(count(csv, "\n") == 4);
  CHECK(count(to_svg(r), "<polyline") == 2);

  const auto dir = std::filesystem::temp_directory_path() / "mmgeo_emit_test";
  std::filesystem::remove_all(dir);
  const auto paths = emit(r, "demo", OutputFormat::csv, dir.string());
  REQUIRE(paths.size() == 2);
  std::ifstream in(paths[0]);
  std::stringstream back;
  back << in.rdbuf();
  CHECK(back.str() == csv);
  std::filesystem::remove_all(dir);
}

TEST_CASE("verify_certificate_text: inline spaces and tampering") {
  Matrix<Rational> d(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) d(i, j) = i == j ? 0 : 1;
  const ExactMMSpace X = make_space<Rational>(d, uniform_weights<Rational>(4));
  const auto c = capacity_certificate(X, {{0}, {1}, {2}, {3}}, Rational(1), Rational(0), Rational(2, 5));
  std::ostringstream file;
  file << c.serialize();
  write_space(file, X);
  const VerifyResult ok = verify_certificate_text(file.str());
  CHECK(ok.valid);
  CHECK(ok.kind == "capacity-certificate");
  CHECK(ok.value == 2);

  std::string text = file.str();
  text.replace(text.find("min-me 1/2"), 10, "min-me 3/4");
  CHECK_FALSE(verify_certificate_text(text).valid);
  CHECK_FALSE(verify_certificate_text("hello\n").valid);

  const CosetWitness w = theorem_witness(4, 1, {Rational(1, 3), Rational(1, 3)}, MetricSpec::inverse_of(MetricSpec::weighted()));
  CHECK(verify_certificate_text(w.serialize()).valid);
}
