// mmgeo: run experiments, verify certificates, build and inspect spaces.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mmgeo/experiment.hpp"
#include "mmgeo/spacefile.hpp"

using namespace mmgeo;

namespace {

int run_command(const std::string& config_path, const std::optional<std::int64_t>& seed,
                const std::optional<std::size_t>& exact_cap, const std::string& out_dir, const std::string& format) {
  ExperimentConfig config = parse_config_file(config_path);
  if (seed) {
    if (*seed < 0) throw Error(ErrorCode::BadConfig, "--seed must be non-negative");
    config.seed = *seed;
    config.chain.seed = *seed;
  }
  if (exact_cap) config.exact_cap = *exact_cap;
  const Report report = run(config);
  const auto paths = emit(report, config.name, format == "svg" ? OutputFormat::svg : OutputFormat::csv, out_dir);
  for (const auto& line : report.summary) std::cout << line << '\n';
  for (const auto& p : paths) std::cout << "wrote " << p << '\n';
  return 0;
}

int verify_command(const std::string& path) {
  const VerifyResult v = verify_certificate_file(path);
  if (v.valid) {
    std::cout << v.kind << " valid (value " << format_real(v.value) << ")\n";
    return 0;
  }
  std::cout << v.kind << " invalid: " << v.reason << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite metric measure spaces: separation, capacity, and group-chain experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "csv";
  std::optional<std::int64_t> seed;
  std::optional<std::size_t> exact_cap;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--exact-cap", exact_cap, "Largest space for the exact separation solver");
  run_cmd->add_option("--out-dir", out_dir, "Output directory");
  run_cmd->add_option("--format", format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));

  std::string cert_path;
  auto* verify_cmd = app.add_subcommand("verify", "Recheck a coset witness or capacity certificate");
  verify_cmd->add_option("certificate", cert_path)->required()->check(CLI::ExistingFile);

  auto* space_cmd = app.add_subcommand("space", "Build or inspect space files");
  space_cmd->require_subcommand(1);
  std::string family = "sym_chain", metric = "inverse(weighted)", out_path;
  int n = 3;
  std::size_t samples = 0;
  std::int64_t space_seed = 1;
  auto* build_cmd = space_cmd->add_subcommand("build", "Write a chain space as an mmspace file");
  build_cmd->add_option("--family", family)->check(CLI::IsMember({"sym_chain", "cantor_chain"}));
  build_cmd->add_option("--n", n, "Degree (Sym) or depth (Cantor)")->required();
  build_cmd->add_option("--metric", metric);
  build_cmd->add_option("--samples", samples, "Sample this many elements instead of enumerating");
  build_cmd->add_option("--seed", space_seed);
  build_cmd->add_option("-o,--output", out_path)->required();

  std::string space_path;
  auto* info_cmd = space_cmd->add_subcommand("info", "Summarize an mmspace file");
  info_cmd->add_option("file", space_path)->required()->check(CLI::ExistingFile);
  auto* export_cmd = space_cmd->add_subcommand("export", "Write the distance matrix and weights as CSV");
  export_cmd->add_option("file", space_path)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("-o,--output", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run_command(config_path, seed, exact_cap, out_dir, format);
    if (*verify_cmd) return verify_command(cert_path);
    if (*build_cmd) {
      GroupChainSpec spec;
      spec.family = family == "cantor_chain" ? Family::cantor_chain : Family::sym_chain;
      spec.metric = MetricSpec::parse(metric);
      spec.n_lo = spec.n_hi = n;
      spec.sampled = samples > 0;
      spec.sample_size = samples;
      spec.seed = space_seed;
      spec.exact_copy_cap = 0;
      write_space_file(out_path, build_chain_space(spec, n).space);
      std::cout << "wrote " << out_path << '\n';
      return 0;
    }
    if (*info_cmd || *export_cmd) {
      const LoadedSpace loaded = read_space_file(space_path);
      const MMSpace& X = loaded.space;
      if (*info_cmd) {
        std::cout << "points " << X.size() << "\ndiameter " << format_real(diameter(X)) << "\nfully_supported "
                  << (fully_supported(X) ? "yes" : "no") << '\n';
        return 0;
      }
      std::ofstream out(out_path);
      out << "point,weight";
      for (Index j = 0; j < X.size(); ++j) out << ',' << X.points()[static_cast<std::size_t>(j)];
      out << '\n';
      for (Index i = 0; i < X.size(); ++i) {
        out << X.points()[static_cast<std::size_t>(i)] << ',' << format_real(X.weight(i));
        for (Index j = 0; j < X.size(); ++j) out << ',' << format_real(X.dist(i, j));
        out << '\n';
      }
      if (!out) throw Error(ErrorCode::IoError, "cannot write '" + out_path + "'");
      std::cout << "wrote " << out_path << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
