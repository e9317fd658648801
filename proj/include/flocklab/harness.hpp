#pragma once

// Orchestration: paired kinetic/fluid runs with synchronized snapshots,
// epsilon sweeps with slope fits of log e(eps) against log eps, and
// reproducible manifests (re-running a manifest must reproduce outputs
// byte-identically).

#include <string>
#include <vector>

#include "flocklab/core.hpp"
#include "flocklab/fluid.hpp"
#include "flocklab/metrics.hpp"

namespace flocklab {

struct TimeGridMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateFit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- paired run ---------------------------------------------------------------

struct PairResult {
  std::vector<MetricRecord> records;
  Regime regime = Regime::Diffusive;
  bool coulomb = false;
};

// Runs the kinetic solver and its limit system side by side on the shared
// grid and initial data; metrics are computed at every kinetic snapshot
// time after the fluid integrator has caught up.
PairResult run_pair(const ValidatedConfig& vcfg);

// Theorem-matching scalar error of one run: sup over snapshots of
//   diffusive:      E  (+ Coulomb field energy in the Coulomb case)
//   diffusionless:  E_hat + d_BL^2  (+ Coulomb field energy).
double theorem_error(const PairResult& pair);

// --- sweeps ---------------------------------------------------------------------

struct SweepPlan {
  RunConfig base;
  std::vector<double> epsilons;  // strictly decreasing, all >= 0.05
  int n_seeds = 3;
  double dt_over_epsilon = 0.25;  // dt_eps = c * eps, c <= 0.5
  std::string name = "sweep";
};

std::vector<ConfigViolation> validate_sweep_plan(const SweepPlan& plan);
SweepPlan parse_sweep_plan_text(const std::string& text);
SweepPlan load_sweep_plan(const std::string& path);
std::string sweep_plan_to_text(const SweepPlan& plan);

// Per-epsilon config: dt tied to epsilon, seed offset per repetition,
// snapshot stride targeting ~8 metric times.
RunConfig config_for_epsilon(const SweepPlan& plan, double epsilon, int seed_index);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

// Ordinary least squares on (x, y) pairs; DegenerateFit without at least
// two distinct x.
FitResult fit_slope(const std::vector<std::pair<double, double>>& points);

struct EpsilonEntry {
  double epsilon = 0.0;
  std::vector<double> e_per_seed;
  double e_mean = 0.0;
  std::vector<MetricRecord> records;  // all seeds, in seed order
};

struct SweepResult {
  SweepPlan plan;
  std::vector<EpsilonEntry> entries;
  FitResult fit;  // log e vs log eps on the seed means
};

SweepResult epsilon_sweep(const SweepPlan& plan);

// Acceptance-style gate: fitted slope >= min_slope and e(eps) decreasing
// in descending-epsilon order within the relative band.
bool sweep_gate(const SweepResult& result, double min_slope, double band);

// --- manifests -------------------------------------------------------------------

std::uint64_t fnv1a_hash(const std::string& text);

struct ManifestPaths {
  std::string manifest;
  std::string summary_csv;
  std::vector<std::string> metrics_csv;
};

// Writes the manifest (config hash, seeds, code version, per-epsilon e
// values, slope), one metrics CSV per epsilon, and the summary CSV.
ManifestPaths emit_manifest(const SweepResult& result, const std::string& directory);

std::string summary_csv_text(const SweepResult& result);

struct ReplayReport {
  bool ok = false;
  std::string detail;
};

// Re-runs the sweep stored in a manifest and verifies that every recorded
// e value and the summary CSV reproduce bitwise.
ReplayReport replay_manifest(const std::string& manifest_path);

extern const char* kCodeVersion;

}  // namespace flocklab
