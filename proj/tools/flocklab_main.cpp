// flocklab command line: validate configs, run paired kinetic/fluid
// experiments, sweep epsilon with slope fits, replay manifests, and expose
// the brute-force metric oracles.
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 acceptance
// threshold missed (sweep --assert).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "flocklab/harness.hpp"
#include "flocklab/oracles.hpp"

namespace {

flocklab::Atoms load_atoms_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> xs, ms;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x = 0.0, m = 0.0;
    if (ls >> x >> m) {
      xs.push_back(x);
      ms.push_back(m);
    }
  }
  flocklab::Atoms atoms;
  atoms.x = Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  atoms.mass = Eigen::Map<Eigen::ArrayXd>(ms.data(), static_cast<Eigen::Index>(ms.size()));
  return atoms;
}

int run_command(const std::string& config_path, const std::string& out_dir) {
  using namespace flocklab;
  RunConfig raw = load_config_file(config_path);
  raw.output_dir = out_dir;  // dumps land next to the metrics CSV
  ValidatedConfig vcfg = validate_or_throw(std::move(raw));
  PairResult pair = run_pair(vcfg);
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / "metrics.csv";
  std::ofstream out(path, std::ios::binary);
  out << MetricRecord::csv_header() << "\n";
  for (const auto& rec : pair.records) out << rec.csv_row() << "\n";
  std::cout << "wrote " << path.string() << " (" << pair.records.size() << " snapshots), e = "
            << theorem_error(pair) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale kinetic/hydrodynamic convergence laboratory"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (results are thread-count independent)");

  std::string config_path, plan_path, manifest_path, out_dir = "out";
  std::string metric_name, file_a, file_b;
  bool assert_gate = false;
  double min_slope = 0.4, band = 0.1;

  auto* validate = app.add_subcommand("validate", "validate a run config");
  validate->add_option("config", config_path)->required();

  auto* run = app.add_subcommand("run", "paired kinetic/fluid run with metrics CSV");
  run->add_option("config", config_path)->required();
  run->add_option("--out", out_dir);

  auto* sweep = app.add_subcommand("sweep", "epsilon sweep with slope fit and manifest");
  sweep->add_option("plan", plan_path)->required();
  sweep->add_option("--out", out_dir);
  sweep->add_flag("--assert", assert_gate, "exit 4 unless slope/monotonicity gates pass");
  sweep->add_option("--min-slope", min_slope);
  sweep->add_option("--band", band);

  auto* replay = app.add_subcommand("replay", "re-run a manifest and verify bitwise");
  replay->add_option("manifest", manifest_path)->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force metric oracles");
  oracle_cmd->add_option("metric", metric_name, "w1 | dbl | entropy")->required();
  oracle_cmd->add_option("file_a", file_a)->required();
  oracle_cmd->add_option("file_b", file_b);

  CLI11_PARSE(app, argc, argv);
  flocklab::global_thread_count() = threads;

  try {
    if (validate->parsed()) {
      flocklab::RunConfig cfg = flocklab::load_config_file(config_path);
      const auto violations = flocklab::validate_config(cfg);
      if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& v : violations) std::cerr << v.field << ": " << v.message << "\n";
      return 2;
    }
    if (run->parsed()) return run_command(config_path, out_dir);
    if (sweep->parsed()) {
      const auto plan = flocklab::load_sweep_plan(plan_path);
      const auto result = flocklab::epsilon_sweep(plan);
      const auto paths = flocklab::emit_manifest(result, out_dir);
      std::cout << "slope " << result.fit.slope << ", manifest " << paths.manifest << "\n";
      if (assert_gate && !flocklab::sweep_gate(result, min_slope, band)) {
        std::cerr << "acceptance gate failed (slope or monotonicity)\n";
        return 4;
      }
      return 0;
    }
    if (replay->parsed()) {
      const auto report = flocklab::replay_manifest(manifest_path);
      std::cout << report.detail << "\n";
      return report.ok ? 0 : 3;
    }
    if (oracle_cmd->parsed()) {
      if (metric_name == "w1") {
        std::cout << flocklab::oracle::w1_assignment(load_atoms_csv(file_a), load_atoms_csv(file_b))
                  << "\n";
      } else if (metric_name == "dbl") {
        std::cout << flocklab::oracle::dbl_lp(load_atoms_csv(file_a), load_atoms_csv(file_b))
                  << "\n";
      } else if (metric_name == "entropy") {
        // Histogram rows "mass" with a --cell area encoded as file_b.
        const auto atoms = load_atoms_csv(file_a);
        std::vector<double> masses(atoms.mass.data(), atoms.mass.data() + atoms.mass.size());
        const double cell = file_b.empty() ? 1.0 : std::stod(file_b);
        std::cout << flocklab::oracle::entropy_direct(masses, cell) << "\n";
      } else {
        std::cerr << "unknown oracle metric " << metric_name << "\n";
        return 2;
      }
      return 0;
    }
  } catch (const flocklab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}
