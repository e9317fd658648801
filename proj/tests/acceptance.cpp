// Acceptance suite: one test case per numbered criterion, each printing a
// single PASS/FAIL line. The four epsilon sweeps (regime x interaction)
// are computed once and shared across criteria.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

#include "flocklab/harness.hpp"
#include "flocklab/oracles.hpp"
#include "flocklab/rng.hpp"

using namespace flocklab;

namespace {

constexpr double kMinSlope = 0.4;
constexpr double kBand = 0.10;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[ACCEPTANCE] %02d %-22s %s  (%s)\n", id, name, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

SweepPlan acceptance_plan(Regime regime, InteractionChoice::Kind interaction,
                          const std::string& name) {
  SweepPlan plan;
  plan.base = default_experiment_config();
  plan.base.n_particles = 200000;
  plan.base.grid.n_cells = 128;
  plan.base.t_final = 0.5;
  plan.base.params.regime = regime;
  plan.base.interaction.kind = interaction;
  plan.epsilons = {0.4, 0.2, 0.1, 0.05};
  plan.n_seeds = 3;
  plan.dt_over_epsilon = 0.25;
  plan.name = name;
  return plan;
}

struct SweepSet {
  SweepResult diff_sine;
  SweepResult nless_sine;
  SweepResult diff_coulomb;
  SweepResult nless_coulomb;
};

const SweepSet& sweeps() {
  static const SweepSet set = [] {
    SweepSet s;
    const auto run = [](const SweepPlan& plan) {
      const auto t0 = std::chrono::steady_clock::now();
      SweepResult r = epsilon_sweep(plan);
      const auto t1 = std::chrono::steady_clock::now();
      std::fprintf(stderr, "sweep %-14s slope %.3f  (%.1f s)\n", plan.name.c_str(), r.fit.slope,
                   std::chrono::duration<double>(t1 - t0).count());
      return r;
    };
    s.diff_sine = run(acceptance_plan(Regime::Diffusive, InteractionChoice::Kind::Sine,
                                      "diff_sine"));
    s.nless_sine = run(acceptance_plan(Regime::Diffusionless, InteractionChoice::Kind::Sine,
                                       "nless_sine"));
    s.diff_coulomb = run(acceptance_plan(Regime::Diffusive, InteractionChoice::Kind::Coulomb,
                                         "diff_coulomb"));
    s.nless_coulomb = run(acceptance_plan(Regime::Diffusionless,
                                          InteractionChoice::Kind::Coulomb, "nless_coulomb"));
    return s;
  }();
  return set;
}

// Per-epsilon scalar: reduce each seed's record stream, then average seeds.
std::vector<double> per_epsilon(const SweepResult& result,
                                const std::function<double(const std::vector<const MetricRecord*>&)>& reduce) {
  std::vector<double> out;
  for (const auto& entry : result.entries) {
    double sum = 0.0;
    int n_seeds = 0;
    std::uint64_t current = ~0ULL;
    std::vector<const MetricRecord*> stream;
    auto flush = [&]() {
      if (!stream.empty()) {
        sum += reduce(stream);
        ++n_seeds;
        stream.clear();
      }
    };
    for (const auto& rec : entry.records) {
      if (rec.seed != current) {
        flush();
        current = rec.seed;
      }
      stream.push_back(&rec);
    }
    flush();
    out.push_back(sum / n_seeds);
  }
  return out;
}

bool monotone_decreasing(const std::vector<double>& values, double band) {
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (values[i + 1] > values[i] * (1.0 + band)) return false;
  }
  return true;
}

std::string fmt_series(const std::vector<double>& v) {
  std::string s;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.3e ", x);
    s += buf;
  }
  return s;
}

Atoms random_equal_mass_atoms(int count, std::uint64_t seed) {
  Atoms a;
  a.x.resize(count);
  a.mass = Eigen::ArrayXd::Constant(count, 1.0 / count);
  const CounterRng rng(seed, 0);
  for (int i = 0; i < count; ++i) a.x[i] = rng.uniform(static_cast<std::uint64_t>(i));
  return a;
}

}  // namespace

TEST_CASE("criterion 1: diffusive-regime sqrt(eps) rate") {
  const SweepResult& r = sweeps().diff_sine;
  std::vector<double> e;
  for (const auto& entry : r.entries) e.push_back(entry.e_mean);
  const bool pass = r.fit.slope >= kMinSlope && monotone_decreasing(e, kBand);
  report(1, "diffusive-rate", pass,
         "slope=" + std::to_string(r.fit.slope) + " e: " + fmt_series(e));
  CHECK(r.fit.slope >= kMinSlope);
  CHECK(monotone_decreasing(e, kBand));
}

TEST_CASE("criterion 2: diffusionless-regime sqrt(eps) rate") {
  const SweepResult& r = sweeps().nless_sine;
  std::vector<double> e;
  for (const auto& entry : r.entries) e.push_back(entry.e_mean);
  const bool pass = r.fit.slope >= kMinSlope && monotone_decreasing(e, kBand);
  report(2, "diffusionless-rate", pass,
         "slope=" + std::to_string(r.fit.slope) + " e: " + fmt_series(e));
  CHECK(r.fit.slope >= kMinSlope);
  CHECK(monotone_decreasing(e, kBand));
}

TEST_CASE("criterion 3: Coulomb variants") {
  auto sup_gap = [](const std::vector<const MetricRecord*>& stream) {
    double m = 0.0;
    for (const auto* rec : stream) m = std::max(m, rec->coulomb_gap.value_or(0.0));
    return m;
  };
  bool pass = true;
  std::string detail;
  for (const SweepResult* r : {&sweeps().diff_coulomb, &sweeps().nless_coulomb}) {
    std::vector<double> e;
    for (const auto& entry : r->entries) e.push_back(entry.e_mean);
    const std::vector<double> gap = per_epsilon(*r, sup_gap);
    const bool ok =
        r->fit.slope >= kMinSlope && monotone_decreasing(e, kBand) && monotone_decreasing(gap, kBand);
    pass = pass && ok;
    detail += r->plan.name + ": slope=" + std::to_string(r->fit.slope) +
              " gap: " + fmt_series(gap);
    CHECK(r->fit.slope >= kMinSlope);
    CHECK(monotone_decreasing(e, kBand));
    CHECK(monotone_decreasing(gap, kBand));
  }
  report(3, "coulomb-variants", pass, detail);
}

TEST_CASE("criterion 4: Maxwellian L1 convergence across sweep 1") {
  auto terminal_gap = [](const std::vector<const MetricRecord*>& stream) {
    return stream.back()->l1_maxwellian.value_or(0.0);
  };
  const std::vector<double> gap = per_epsilon(sweeps().diff_sine, terminal_gap);
  bool pass = true;
  for (std::size_t i = 0; i + 1 < gap.size(); ++i) {
    if (gap[i + 1] > gap[i] + 0.05) pass = false;
  }
  report(4, "maxwellian-L1", pass, "gap(T): " + fmt_series(gap));
  CHECK(pass);
}

TEST_CASE("criterion 5: kinetic energy identity residual halves with dt") {
  auto residual = [](double dt) {
    RunConfig cfg = default_experiment_config();
    cfg.params.regime = Regime::Diffusionless;
    cfg.params.epsilon = 0.2;
    cfg.params.beta = -1.0;
    cfg.params.sigma = -1.0;
    cfg.n_particles = 1000000;
    cfg.dt = dt;
    cfg.t_final = 0.5;
    cfg.snapshot_stride = 1 << 20;  // first and last snapshot only
    const ValidatedConfig vcfg = validate_or_throw(cfg);
    double first = 0.0, last = 0.0, dissip = 0.0;
    run_kinetic(vcfg, [&](const KineticSnapshot& snap) {
      const double mech = snap.ledger.ke + snap.ledger.pe_w + snap.ledger.pe_v;
      if (snap.step == 0) first = mech;
      last = mech;
      dissip = snap.ledger.int_beta_la + snap.ledger.int_alpha_d2 + snap.ledger.int_gamma_d3;
    });
    return std::abs(last - first + dissip);
  };
  const double r1 = residual(0.05);
  const double r2 = residual(0.025);
  const double ratio = r1 / r2;
  const bool pass = ratio >= 1.7 && ratio <= 2.3;
  char buf[128];
  std::snprintf(buf, sizeof buf, "R(dt)=%.3e R(dt/2)=%.3e ratio=%.2f", r1, r2, ratio);
  report(5, "energy-identity", pass, buf);
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.3);
}

TEST_CASE("criterion 6: free-energy growth bound across all sweeps") {
  // F(t) <= F(0) exp(C (1 + gamma^2) t / beta) with C = 10 (1 + |phi|_inf);
  // phi = 1 + cos(2 pi x)/2 has sup norm 3/2, so C = 25.
  const double c_margin = 10.0 * (1.0 + 1.5);
  double worst_margin = -1e300;
  double worst_eps = 0.0;
  const char* worst_sweep = "";
  bool pass = true;
  for (const auto& [result, name] :
       {std::pair<const SweepResult*, const char*>{&sweeps().diff_sine, "diff_sine"},
        {&sweeps().nless_sine, "nless_sine"},
        {&sweeps().diff_coulomb, "diff_coulomb"},
        {&sweeps().nless_coulomb, "nless_coulomb"}}) {
    const double gamma = result->plan.base.params.gamma;
    for (const auto& entry : result->entries) {
      const double inv_beta = entry.epsilon;  // beta = 1/eps in both regimes
      std::uint64_t seed = ~0ULL;
      double f0 = 0.0;
      for (const auto& rec : entry.records) {
        if (rec.seed != seed) {
          seed = rec.seed;
          f0 = rec.free_energy.value();
        }
        const double bound =
            f0 * std::exp(c_margin * (1.0 + gamma * gamma) * rec.time * inv_beta);
        const double margin = rec.free_energy.value() - bound;
        if (margin > worst_margin) {
          worst_margin = margin;
          worst_eps = entry.epsilon;
          worst_sweep = name;
        }
        if (margin > 0.0) pass = false;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst margin %.4f at eps=%.2f in %s (C=%.0f)", worst_margin,
                worst_eps, worst_sweep, c_margin);
  report(6, "free-energy-bound", pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 7: fluid energy identity order and mass conservation") {
  RunConfig cfg = default_experiment_config();
  cfg.grid.n_cells = 128;
  cfg.grid.velocity.reset();
  cfg.interaction.kind = InteractionChoice::Kind::Sine;
  const ForceSpecs specs = make_force_specs(cfg);
  const FluidCoeffs coeffs{1.0, 1.0, 1.0};
  const double h = cfg.grid.cell_width();

  auto residual = [&](double dt) {
    FluidState init;
    init.form = FluidForm::Isothermal;
    init.g = initial_density(cfg).log();
    init.u = initial_velocity(cfg);
    FluidIntegrator integ(init, specs, coeffs, cfg.grid, dt, true);
    const double e0 = integ.ledger().total(FluidForm::Isothermal);
    integ.advance_to(0.25);
    const auto led = integ.ledger();
    return std::abs(led.total(FluidForm::Isothermal) - e0 + led.int_gamma_rho_u2 +
                    led.int_half_alpha_phi_u);
  };
  const double r1 = residual(0.002);
  const double r2 = residual(0.001);
  const double order = std::log2(r1 / r2);

  FluidState init;
  init.form = FluidForm::Isothermal;
  init.g = initial_density(cfg).log();
  init.u = initial_velocity(cfg);
  FluidIntegrator iso(init, specs, coeffs, cfg.grid, 2e-4, true);
  const double m0 = iso.state().g.exp().sum() * h;
  iso.advance_to(2.0);  // 1e4 steps at dt = 2e-4
  const double iso_drift = std::abs(iso.state().g.exp().sum() * h - m0);

  FluidState pinit;
  pinit.form = FluidForm::Pressureless;
  pinit.g = initial_density(cfg) - 1.0;
  pinit.u = initial_velocity(cfg);
  FluidIntegrator pre(pinit, specs, coeffs, cfg.grid, 2e-4, true);
  const double p0 = pre.state().g.sum() * h;
  pre.advance_to(2.0);
  const double pre_drift = std::abs(pre.state().g.sum() * h - p0);

  const bool pass = order >= 1.9 && iso_drift <= 1e-10 && pre_drift <= 1e-10;
  char buf[160];
  std::snprintf(buf, sizeof buf, "order=%.2f iso drift=%.2e pressureless drift=%.2e", order,
                iso_drift, pre_drift);
  report(7, "fluid-identities", pass, buf);
  CHECK(order >= 1.9);
  CHECK(iso_drift <= 1e-10);
  CHECK(pre_drift <= 1e-10);
}

TEST_CASE("criterion 8: transport distances match the brute-force oracles") {
  double worst_w1 = 0.0, worst_dbl = 0.0;
  bool dominated = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 2 + trial % 11;  // up to 12 atoms
    const Atoms a = random_equal_mass_atoms(count, 9000 + static_cast<std::uint64_t>(trial));
    const Atoms b = random_equal_mass_atoms(count, 9500 + static_cast<std::uint64_t>(trial));
    const double w1 = w1_distance(a, b);
    const double dbl = dbl_distance(a, b);
    worst_w1 = std::max(worst_w1, std::abs(w1 - oracle::w1_assignment(a, b)));
    worst_dbl = std::max(worst_dbl, std::abs(dbl - oracle::dbl_lp(a, b)));
    if (dbl > w1 + 1e-9) dominated = false;
  }
  const bool pass = worst_w1 <= 1e-9 && worst_dbl <= 1e-9 && dominated;
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |w1-oracle|=%.2e max |dbl-oracle|=%.2e dbl<=w1 %s",
                worst_w1, worst_dbl, dominated ? "everywhere" : "violated");
  report(8, "transport-oracles", pass, buf);
  CHECK(worst_w1 <= 1e-9);
  CHECK(worst_dbl <= 1e-9);
  CHECK(dominated);
}

TEST_CASE("criterion 9: moment-error inequality ledger has zero violations") {
  long rows = 0;
  long violations = 0;
  for (const SweepResult* r : {&sweeps().diff_sine, &sweeps().nless_sine, &sweeps().diff_coulomb,
                               &sweeps().nless_coulomb}) {
    for (const auto& entry : r->entries) {
      for (const auto& rec : entry.records) {
        ++rows;
        violations += static_cast<long>(rec.mg_violations.value_or(1.0));
        // The recorded entropy-to-L1 chain rows are inequalities too.
        if (rec.est_l1_lhs && rec.est_l1_rhs &&
            *rec.est_l1_lhs > *rec.est_l1_rhs + 1e-12 * (1.0 + *rec.est_l1_rhs))
          ++violations;
        if (rec.rel_entropy && rec.e_hat && *rec.e_hat > *rec.rel_entropy + 1e-12)
          ++violations;
      }
    }
  }
  const bool pass = violations == 0 && rows > 0;
  report(9, "moment-ledger", pass,
         std::to_string(rows) + " snapshots, " + std::to_string(violations) + " violations");
  CHECK(violations == 0);
  CHECK(rows > 0);
}

TEST_CASE("criterion 10: manifest replay is byte-identical across thread counts") {
  const std::string dir = "acceptance_manifest";
  std::filesystem::remove_all(dir);
  const auto paths = emit_manifest(sweeps().diff_sine, dir);

  global_thread_count() = 2;
  const auto report2 = replay_manifest(paths.manifest);
  global_thread_count() = 1;

  report(10, "determinism", report2.ok, report2.detail);
  CHECK(report2.ok);
  std::filesystem::remove_all(dir);
}
