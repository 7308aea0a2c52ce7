#pragma once

// Config-driven experiments over group chains and cube discretizations,
// reported as tagged CSV rows (plus optional SVG charts).
//
// Config files are `key = value` lines; `#` starts a comment.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mmgeo/groups.hpp"
#include "mmgeo/rational.hpp"
#include "mmgeo/separation.hpp"

namespace mmgeo {

enum class ExperimentKind { sym_dissipation, hamming_concentration, cantor_concentration, cube_demo, verify_certificate };
std::string_view to_string(ExperimentKind k);

struct GridCell {
  int m = 1;
  Rational alpha;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::sym_dissipation;
  /// Family and metric of the chain; n_lo/n_hi are filled from `ns`.
  GroupChainSpec chain;
  std::vector<int> ns;
  std::vector<GridCell> grid;
  double delta = 0.5;
  /// Verdicts look at n >= tail_start (0: the whole list).
  int tail_start = 0;
  /// Trimmed mass for observable diameters.
  double kappa = 0.1;
  std::size_t samples = 2000;
  std::size_t functions = 64;
  std::int64_t seed = 1;
  /// Largest space handed to the exact separation solver.
  std::size_t exact_cap = 120;
  /// Largest Sym(n) whose distance matrix gets built; beyond it only
  /// coset witnesses are reported.
  std::size_t max_points = 720;
  std::vector<int> capacity_targets{1, 2};
  double capacity_delta = 0.5;
  double capacity_alpha = 0.2;
  int cube_resolution = 10;
  std::size_t cube_points = 48;
  std::string certificate;
  std::string name;  // output basename, defaults to the experiment name
};

/// Raises BadConfig with the offending line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

enum class Tag { exact, certified_lower, estimate };
std::string_view to_string(Tag t);

struct ReportRow {
  std::string experiment;
  int n = 0;
  std::string cell;
  int m = 0;
  std::string alpha;
  double value = 0;
  Tag tag = Tag::estimate;
  Verdict verdict = Verdict::inconclusive;
  /// Position of the cell in the config, for ordering.
  std::size_t cell_order = 0;
};

struct Report {
  std::string experiment;
  std::vector<ReportRow> rows;
  /// One line per cell: "<cell> <verdict>".
  std::vector<std::string> summary;
  /// Seeds, caps, strategies, notes. Kept out of the CSV.
  std::vector<std::string> provenance;
  /// Extra files (name, contents): witnesses and certificates.
  std::vector<std::pair<std::string, std::string>> artifacts;
};

/// Workers from MMGEO_THREADS (default 1, at least 1).
std::size_t worker_count();

/// Rows come back sorted by (n, cell order) whatever the worker count.
Report run(const ExperimentConfig& config, std::size_t workers = worker_count());

std::string to_csv(const Report& report);
std::string to_svg(const Report& report);

enum class OutputFormat { csv, svg };
/// Writes <name>.csv or <name>.svg, <name>.provenance.txt, and artifacts
/// into `out_dir`. Returns the paths written. Raises IoError.
std::vector<std::string> emit(const Report& report, const std::string& name, OutputFormat format,
                              const std::string& out_dir);

struct VerifyResult {
  std::string kind;  // "coset-witness" or "capacity-certificate"
  bool valid = false;
  std::string reason;
  int n = 0;
  double value = 0;
};

/// Rechecks a serialized CosetWitness or CapacityCertificate. Capacity
/// certificates name their space: "chain <family> <n> <metric>", or
/// "inline" with a space file after the certificate's `end` line.
VerifyResult verify_certificate_text(const std::string& text);
VerifyResult verify_certificate_file(const std::string& path);

/// The space a capacity certificate refers to.
ExactMMSpace certificate_space(const std::string& source, const std::string& trailing_text);

/// ([0,1]^dim, sup metric, product measure) on the cell-centre grid with
/// `resolution` points per axis.
MMSpace cube_grid(int dim, int resolution);

}  // namespace mmgeo
