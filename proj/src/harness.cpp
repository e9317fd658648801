#include "flocklab/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace flocklab {

const char* kCodeVersion = "flocklab 0.1.0";

// --- paired run ---------------------------------------------------------------

PairResult run_pair(const ValidatedConfig& vcfg) {
  const RunConfig& cfg = vcfg.cfg;
  const Grid1D& grid = cfg.grid;
  const double h = grid.cell_width();
  if (!grid.velocity) throw VGridTooNarrow("paired runs require a velocity grid");
  const int hist_nx = grid.n_cells % 64 == 0 ? 64 : grid.n_cells;

  const ForceSpecs specs = make_force_specs(cfg);
  FluidIntegrator fluid(initial_fluid_state(cfg), specs, fluid_coeffs(cfg.params), grid,
                        0.25 * h, cfg.dealias);

  PairResult out;
  out.regime = cfg.params.regime;
  out.coulomb = cfg.interaction.kind == InteractionChoice::Kind::Coulomb;

  double int_gamma_rel = 0.0;
  double int_phi_rel = 0.0;
  double prev_gamma_integrand = 0.0;
  double prev_phi_integrand = 0.0;
  double prev_time = 0.0;
  bool have_prev = false;

  run_kinetic(vcfg, [&](const KineticSnapshot& snap) {
    fluid.advance_to(snap.time);
    const FluidState& flu = fluid.state();
    if (std::abs(flu.time - snap.time) > 1e-9)
      throw TimeGridMismatch("fluid and kinetic snapshot times diverged");
    if (cfg.dump_particles) {
      char name[64];
      std::snprintf(name, sizeof name, "fluid_t%.6f.csv", snap.time);
      std::filesystem::create_directories(cfg.output_dir);
      write_state_csv(flu, grid, (std::filesystem::path(cfg.output_dir) / name).string());
    }

    MetricRecord rec;
    rec.seed = cfg.seed;
    rec.time = snap.time;

    const MomentFields& mom = *snap.moments;
    const GridFn rho_flu = flu.density();

    const FreeEnergyResult fe = free_energy_and_dissipations(
        *snap.ensemble, mom, *snap.fields, cfg.params, specs, grid, hist_nx);
    rec.free_energy = fe.free_energy;
    rec.d1_diag = fe.d1_diag;
    rec.d2 = fe.d2;
    rec.d3 = fe.d3;

    const FluidEntropyParts parts = fluid_relative_entropy(mom, flu, grid);
    rec.e_hat = parts.e_hat;
    if (flu.form == FluidForm::Isothermal) {
      rec.rel_entropy = parts.e_total;
      rec.h_eps_rho = parts.h_part;
      if (parts.h_reversed) rec.h_rho_eps = *parts.h_reversed;
      rec.est_l1_lhs = parts.l1_gap_sq;
      rec.est_l1_rhs = parts.l1_bound;
    }

    if (out.coulomb) rec.coulomb_gap = coulomb_gap(mom.rho_eps, rho_flu, cfg.params.lambda, h);

    // Theorem dissipation integrand with w = u_eps - u.
    const GridFn w = mom.u_eps - flu.u;
    const GridFn phi_rho_w =
        periodic_convolution(specs.weight.phi, GridFn(mom.rho_eps * w), h);
    const double phi_rel =
        cfg.params.alpha * ((snap.fields->phi_conv_rho * w.square() * mom.rho_eps).sum() -
                            (phi_rho_w * w * mom.rho_eps).sum()) *
        h;
    const double gamma_rel =
        cfg.params.gamma * (mom.rho_eps * w.square()).sum() * h;
    rec.phi_dissip = phi_rel;
    if (have_prev) {
      int_gamma_rel += 0.5 * (prev_gamma_integrand + gamma_rel) * (snap.time - prev_time);
      int_phi_rel += 0.5 * (prev_phi_integrand + phi_rel) * (snap.time - prev_time);
    }
    prev_gamma_integrand = gamma_rel;
    prev_phi_integrand = phi_rel;
    prev_time = snap.time;
    have_prev = true;
    rec.int_gamma_rel = int_gamma_rel;
    rec.int_phi_rel = int_phi_rel;

    rec.d_bl = dbl_distance(mom.rho_eps, rho_flu, h);
    rec.w1 = w1_distance(mom.rho_eps, rho_flu, h);
    rec.l1_density_gap = (mom.rho_eps - rho_flu).abs().sum() * h;

    const PhaseHistogram hist = phase_histogram(*snap.ensemble, hist_nx, *grid.velocity);
    if (flu.form == FluidForm::Isothermal) {
      const GridFn rho_hist = restrict_density(rho_flu, hist_nx);
      const GridFn u_hist = restrict_velocity(rho_flu, flu.u, hist_nx, 0.0);
      rec.l1_maxwellian = l1_maxwellian_gap(hist, rho_hist, u_hist);
    }

    const auto rows = moment_gap_checks(mom, *snap.ensemble, flu, grid, &hist);
    int violations = 0;
    for (const auto& r : rows)
      if (!r.satisfied) ++violations;
    rec.mg_violations = violations;
    rec.mg1_l1_lhs = rows[0].lhs;
    rec.mg1_l1_rhs = rows[0].rhs;
    rec.mg1_bl_lhs = rows[1].lhs;
    rec.mg1_bl_rhs = rows[1].rhs;
    rec.mg2_l1_lhs = rows[2].lhs;
    rec.mg2_l1_rhs = rows[2].rhs;
    rec.mg2_bl_lhs = rows[3].lhs;
    rec.mg2_bl_rhs = rows[3].rhs;
    rec.mg3_lhs = rows[4].lhs;
    rec.mg3_rhs = rows[4].rhs;
    rec.mg3_tol = rows[4].tol;

    rec.ke = snap.ledger.ke;
    rec.pe_w = snap.ledger.pe_w;
    rec.pe_v = snap.ledger.pe_v;
    rec.int_alpha_d2 = snap.ledger.int_alpha_d2;
    rec.int_gamma_d3 = snap.ledger.int_gamma_d3;
    rec.int_beta_la = snap.ledger.int_beta_la;
    rec.int_source = snap.ledger.int_source;

    const FluidEnergyLedger fl = fluid.ledger();
    rec.fluid_energy = fl.total(flu.form);
    rec.fluid_int_gamma = fl.int_gamma_rho_u2;
    rec.fluid_int_phi = fl.int_half_alpha_phi_u;

    out.records.push_back(std::move(rec));
  });
  return out;
}

double theorem_error(const PairResult& pair) {
  double e = 0.0;
  for (const auto& rec : pair.records) {
    double state = 0.0;
    if (pair.regime == Regime::Diffusive) {
      state = rec.rel_entropy.value_or(0.0);
    } else {
      const double dbl = rec.d_bl.value_or(0.0);
      state = rec.e_hat.value_or(0.0) + dbl * dbl;
    }
    if (pair.coulomb) state += rec.coulomb_gap.value_or(0.0);
    e = std::max(e, state);
  }
  return e;
}

// --- sweeps ---------------------------------------------------------------------

std::vector<ConfigViolation> validate_sweep_plan(const SweepPlan& plan) {
  std::vector<ConfigViolation> out;
  if (plan.epsilons.empty()) out.push_back({"epsilons", "must not be empty"});
  for (std::size_t i = 0; i + 1 < plan.epsilons.size(); ++i) {
    if (!(plan.epsilons[i] > plan.epsilons[i + 1]))
      out.push_back({"epsilons", "must be strictly decreasing"});
  }
  for (double e : plan.epsilons) {
    if (!(e >= 0.05)) out.push_back({"epsilons", "all epsilons must be >= 0.05 (stiffness budget)"});
  }
  if (plan.n_seeds < 1) out.push_back({"n_seeds", "must be at least 1"});
  if (!(plan.dt_over_epsilon > 0.0) || plan.dt_over_epsilon > 0.5)
    out.push_back({"dt_over_epsilon", "must lie in (0, 0.5]"});
  return out;
}

RunConfig config_for_epsilon(const SweepPlan& plan, double epsilon, int seed_index) {
  RunConfig cfg = plan.base;
  cfg.params.epsilon = epsilon;
  cfg.params.beta = -1.0;   // re-derived from the regime by validation
  cfg.params.sigma = -1.0;
  cfg.dt = plan.dt_over_epsilon * epsilon;
  cfg.seed = plan.base.seed + static_cast<std::uint64_t>(seed_index);
  const long steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-12));
  cfg.snapshot_stride = std::max(1L, steps / 8);
  return cfg;
}

FitResult fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw DegenerateFit("slope fit needs at least two points");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx == 0.0) throw DegenerateFit("slope fit needs two distinct x values");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  for (const auto& [x, y] : points)
    fit.max_residual = std::max(fit.max_residual, std::abs(y - fit.slope * x - fit.intercept));
  return fit;
}

SweepResult epsilon_sweep(const SweepPlan& plan) {
  {
    auto violations = validate_sweep_plan(plan);
    if (!violations.empty()) throw ConfigError(violations);
  }
  SweepResult result;
  result.plan = plan;
  for (double eps : plan.epsilons) {
    EpsilonEntry entry;
    entry.epsilon = eps;
    for (int s = 0; s < plan.n_seeds; ++s) {
      ValidatedConfig vcfg = validate_or_throw(config_for_epsilon(plan, eps, s));
      PairResult pair = run_pair(vcfg);
      entry.e_per_seed.push_back(theorem_error(pair));
      for (auto& rec : pair.records) entry.records.push_back(std::move(rec));
    }
    double mean = 0.0;
    for (double e : entry.e_per_seed) mean += e;
    entry.e_mean = mean / static_cast<double>(entry.e_per_seed.size());
    result.entries.push_back(std::move(entry));
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& entry : result.entries) {
    if (!(entry.e_mean > 0.0)) throw DegenerateFit("sweep error values must be positive");
    points.push_back({std::log(entry.epsilon), std::log(entry.e_mean)});
  }
  result.fit = fit_slope(points);
  return result;
}

bool sweep_gate(const SweepResult& result, double min_slope, double band) {
  if (!(result.fit.slope >= min_slope)) return false;
  for (std::size_t i = 0; i + 1 < result.entries.size(); ++i) {
    // epsilons descend, so e must not grow by more than the band.
    if (result.entries[i + 1].e_mean > result.entries[i].e_mean * (1.0 + band)) return false;
  }
  return true;
}

// --- manifests -------------------------------------------------------------------

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string plan_fingerprint(const SweepPlan& plan) {
  std::ostringstream os;
  os << config_to_text(plan.base) << "\n" << plan.n_seeds << "\n" << plan.dt_over_epsilon << "\n";
  for (double e : plan.epsilons) os << format_double(e) << ",";
  os << "\n" << plan.name;
  return os.str();
}

}  // namespace

SweepPlan parse_sweep_plan_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::vector<ConfigViolation>{{"<plan>", e.what()}});
  }
  SweepPlan plan;
  if (!doc.contains("base") || !doc.at("base").is_object())
    throw ConfigError(std::vector<ConfigViolation>{{"base", "sweep plan needs a base config object"}});
  plan.base = parse_config_text(doc.at("base").dump());
  if (!doc.contains("epsilons")) throw ConfigError(std::vector<ConfigViolation>{{"epsilons", "missing"}});
  for (const auto& e : doc.at("epsilons")) plan.epsilons.push_back(e.get<double>());
  plan.n_seeds = doc.value("n_seeds", 3);
  plan.dt_over_epsilon = doc.value("dt_over_epsilon", 0.25);
  plan.name = doc.value("name", std::string("sweep"));
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "base" && key != "epsilons" && key != "n_seeds" && key != "dt_over_epsilon" &&
        key != "name")
      throw ConfigError(std::vector<ConfigViolation>{{key, "unknown key"}});
  }
  return plan;
}

SweepPlan load_sweep_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<ConfigViolation>{{"<file>", "cannot open " + path}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_plan_text(ss.str());
}

std::string sweep_plan_to_text(const SweepPlan& plan) {
  nlohmann::json doc;
  doc["base"] = nlohmann::json::parse(config_to_text(plan.base));
  doc["epsilons"] = plan.epsilons;
  doc["n_seeds"] = plan.n_seeds;
  doc["dt_over_epsilon"] = plan.dt_over_epsilon;
  doc["name"] = plan.name;
  return doc.dump(2);
}

std::string summary_csv_text(const SweepResult& result) {
  std::ostringstream os;
  os << "epsilon,e_mean";
  for (int s = 0; s < result.plan.n_seeds; ++s) os << ",e_seed" << s;
  os << ",slope,intercept,max_residual\n";
  for (const auto& entry : result.entries) {
    os << format_double(entry.epsilon) << "," << format_double(entry.e_mean);
    for (double e : entry.e_per_seed) os << "," << format_double(e);
    os << "," << format_double(result.fit.slope) << "," << format_double(result.fit.intercept)
       << "," << format_double(result.fit.max_residual) << "\n";
  }
  return os.str();
}

ManifestPaths emit_manifest(const SweepResult& result, const std::string& directory) {
  if (result.entries.empty()) throw std::runtime_error("refusing to write an empty manifest");
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  ManifestPaths paths;
  const std::string summary = summary_csv_text(result);
  paths.summary_csv = (fs::path(directory) / (result.plan.name + "_summary.csv")).string();
  {
    std::ofstream out(paths.summary_csv, std::ios::binary);
    out << summary;
  }

  nlohmann::json doc;
  doc["name"] = result.plan.name;
  doc["code_version"] = kCodeVersion;
  doc["plan"] = nlohmann::json::parse(sweep_plan_to_text(result.plan));
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(plan_fingerprint(result.plan))));
  doc["config_hash"] = hash_buf;
  std::vector<std::string> e_mean;
  std::vector<std::vector<std::string>> e_seed;
  for (const auto& entry : result.entries) {
    e_mean.push_back(format_double(entry.e_mean));
    std::vector<std::string> per;
    for (double e : entry.e_per_seed) per.push_back(format_double(e));
    e_seed.push_back(std::move(per));
  }
  doc["e_mean"] = e_mean;
  doc["e_per_seed"] = e_seed;
  doc["slope"] = result.fit.slope;
  doc["intercept"] = result.fit.intercept;
  doc["max_residual"] = result.fit.max_residual;
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(summary)));
  doc["summary_hash"] = hash_buf;
  doc["summary_csv"] = paths.summary_csv;

  std::vector<std::string> metric_files;
  for (const auto& entry : result.entries) {
    std::ostringstream name;
    name << result.plan.name << "_eps" << format_double(entry.epsilon) << ".csv";
    const std::string file = (fs::path(directory) / name.str()).string();
    std::ofstream out(file, std::ios::binary);
    out << MetricRecord::csv_header() << "\n";
    for (const auto& rec : entry.records) out << rec.csv_row() << "\n";
    metric_files.push_back(file);
  }
  doc["metrics_csv"] = metric_files;
  paths.metrics_csv = metric_files;

  paths.manifest = (fs::path(directory) / (result.plan.name + "_manifest.json")).string();
  std::ofstream out(paths.manifest, std::ios::binary);
  out << doc.dump(2) << "\n";
  return paths;
}

ReplayReport replay_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) return {false, "cannot open " + manifest_path};
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    return {false, std::string("manifest parse error: ") + e.what()};
  }
  SweepPlan plan = parse_sweep_plan_text(doc.at("plan").dump());
  const SweepResult rerun = epsilon_sweep(plan);

  const auto stored_e = doc.at("e_mean").get<std::vector<std::string>>();
  if (stored_e.size() != rerun.entries.size()) return {false, "epsilon count changed"};
  for (std::size_t i = 0; i < stored_e.size(); ++i) {
    if (stored_e[i] != format_double(rerun.entries[i].e_mean))
      return {false, "e(eps) mismatch at index " + std::to_string(i) + ": stored " +
                         stored_e[i] + " recomputed " + format_double(rerun.entries[i].e_mean)};
  }
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(summary_csv_text(rerun))));
  if (doc.at("summary_hash").get<std::string>() != hash_buf)
    return {false, "summary hash mismatch"};
  return {true, "bitwise reproduction verified"};
}

}  // namespace flocklab
