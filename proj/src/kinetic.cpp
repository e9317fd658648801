#include "flocklab/kinetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "flocklab/rng.hpp"

namespace flocklab {

namespace {

// Counter layout per particle stream: 0,1 init position/velocity draws,
// then normal(step + 1) for the step noise (normal consumes two uniforms).
constexpr std::uint64_t kInitUniformCounter = 0;
constexpr std::uint64_t kInitNormalCounter = 1;

struct ChunkSums {
  double d3 = 0.0;
  double loc_align = 0.0;
  double max_abs_v = 0.0;
};

}  // namespace

ParticleEnsemble init_well_prepared(const GridFn& rho0, const GridFn& u0, long n,
                                    std::uint64_t seed, const Grid1D& grid, Regime regime) {
  if (rho0.minCoeff() <= 0.0) throw DegenerateDensity("initial density must be strictly positive");
  if (rho0.size() != grid.n_cells || u0.size() != grid.n_cells)
    throw std::invalid_argument("initial data does not match the grid");

  const double h = grid.cell_width();
  const int g = grid.n_cells;
  // Cumulative mass over cells, normalized to exactly 1 at the end so the
  // inverse CDF covers every draw.
  std::vector<double> cum(static_cast<std::size_t>(g), 0.0);
  double acc = 0.0;
  for (int j = 0; j < g; ++j) {
    acc += rho0[j] * h;
    cum[static_cast<std::size_t>(j)] = acc;
  }
  for (auto& c : cum) c /= acc;

  ParticleEnsemble ens;
  ens.positions.resize(n);
  ens.velocities.resize(n);
  ens.weight = 1.0 / static_cast<double>(n);
  ens.seed = seed;

  parallel_chunks(n, global_thread_count(), [&](int, long begin, long end) {
    for (long i = begin; i < end; ++i) {
      const CounterRng rng(seed, static_cast<std::uint64_t>(i));
      const double uu = rng.uniform(kInitUniformCounter);
      const auto it = std::lower_bound(cum.begin(), cum.end(), uu);
      const int j = static_cast<int>(std::min<std::ptrdiff_t>(it - cum.begin(), g - 1));
      const double lo = j == 0 ? 0.0 : cum[static_cast<std::size_t>(j - 1)];
      const double span = cum[static_cast<std::size_t>(j)] - lo;
      const double frac = span > 0.0 ? (uu - lo) / span : 0.5;
      const double x = wrap_torus((j + frac) * h);
      ens.positions[i] = x;
      double v = interp_periodic(u0, h, x);
      if (regime == Regime::Diffusive) v += rng.normal(kInitNormalCounter);
      ens.velocities[i] = v;
    }
  });
  return ens;
}

GridFn deposit_values(const ParticleEnsemble& ensemble, const Grid1D& grid,
                      const Eigen::ArrayXd& values) {
  const int g = grid.n_cells;
  const double h = grid.cell_width();
  const long n = ensemble.size();
  std::vector<GridFn> partial(kFixedChunks, GridFn::Zero(g));
  parallel_chunks(n, global_thread_count(), [&](int chunk, long begin, long end) {
    GridFn& buf = partial[static_cast<std::size_t>(chunk)];
    for (long i = begin; i < end; ++i) {
      const double s = ensemble.positions[i] / h - 0.5;
      const double fl = std::floor(s);
      const double frac = s - fl;
      long j0 = static_cast<long>(fl) % g;
      if (j0 < 0) j0 += g;
      const long j1 = (j0 + 1) % g;
      const double w = ensemble.weight * values[i];
      buf[j0] += w * (1.0 - frac);
      buf[j1] += w * frac;
    }
  });
  GridFn out = GridFn::Zero(g);
  for (const auto& buf : partial) out += buf;
  return out / h;
}

MomentFields estimate_moments(const ParticleEnsemble& ensemble, const Grid1D& grid,
                              double eps_reg) {
  MomentFields m;
  m.rho_eps = deposit_values(ensemble, grid, Eigen::ArrayXd::Ones(ensemble.size()));
  m.rho_u_eps = deposit_values(ensemble, grid, ensemble.velocities);
  m.u_eps = m.rho_u_eps / (m.rho_eps + eps_reg);
  return m;
}

Eigen::ArrayXd assemble_accelerations(const ParticleEnsemble& ensemble,
                                      const MomentFields& moments, const FieldSet& fields,
                                      const ModelParams& params, const Grid1D& grid) {
  const double h = grid.cell_width();
  const long n = ensemble.size();
  Eigen::ArrayXd accels(n);
  const GridFn conservative = fields.grad_v + fields.grad_w_conv_rho;
  parallel_chunks(n, global_thread_count(), [&](int, long begin, long end) {
    for (long i = begin; i < end; ++i) {
      const double x = ensemble.positions[i];
      const double v = ensemble.velocities[i];
      double a = -params.gamma * v;
      if (params.lambda != 0.0) a -= params.lambda * interp_periodic(conservative, h, x);
      if (params.alpha != 0.0) {
        a += params.alpha * (interp_periodic(fields.phi_conv_rho_u, h, x) -
                             interp_periodic(fields.phi_conv_rho, h, x) * v);
      }
      if (params.beta != 0.0) a -= params.beta * (v - interp_periodic(moments.u_eps, h, x));
      accels[i] = a;
    }
  });
  return accels;
}

ParticleEnsemble step_euler_maruyama(const ParticleEnsemble& ensemble,
                                     const Eigen::ArrayXd& accels, double dt, double sigma,
                                     std::uint64_t step_index) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_euler_maruyama: dt must be positive");
  const long n = ensemble.size();
  ParticleEnsemble next;
  next.positions.resize(n);
  next.velocities.resize(n);
  next.weight = ensemble.weight;
  next.seed = ensemble.seed;
  const double noise_amp = sigma > 0.0 ? std::sqrt(2.0 * sigma * dt) : 0.0;
  parallel_chunks(n, global_thread_count(), [&](int, long begin, long end) {
    for (long i = begin; i < end; ++i) {
      next.positions[i] = wrap_torus(ensemble.positions[i] + ensemble.velocities[i] * dt);
      double v = ensemble.velocities[i] + accels[i] * dt;
      if (noise_amp != 0.0) {
        const CounterRng rng(ensemble.seed, static_cast<std::uint64_t>(i));
        v += noise_amp * rng.normal(kInitNormalCounter + 1 + step_index);
      }
      next.velocities[i] = v;
    }
  });
  return next;
}

namespace {

// Chunk-ordered particle sums used by the ledger.
ChunkSums particle_sums(const ParticleEnsemble& ens, const MomentFields& m, const Grid1D& grid) {
  const double h = grid.cell_width();
  std::vector<ChunkSums> partial(kFixedChunks);
  parallel_chunks(ens.size(), global_thread_count(), [&](int chunk, long begin, long end) {
    ChunkSums& s = partial[static_cast<std::size_t>(chunk)];
    for (long i = begin; i < end; ++i) {
      const double v = ens.velocities[i];
      const double du = v - interp_periodic(m.u_eps, h, ens.positions[i]);
      s.d3 += ens.weight * v * v;
      s.loc_align += ens.weight * du * du;
      s.max_abs_v = std::max(s.max_abs_v, std::abs(v));
    }
  });
  ChunkSums total;
  for (const auto& s : partial) {
    total.d3 += s.d3;
    total.loc_align += s.loc_align;
    total.max_abs_v = std::max(total.max_abs_v, s.max_abs_v);
  }
  return total;
}

void dump_particles_csv(const ParticleEnsemble& ens, const std::string& dir, double time) {
  std::filesystem::create_directories(dir);
  char name[64];
  std::snprintf(name, sizeof name, "particles_t%.6f.csv", time);
  std::ofstream out(std::filesystem::path(dir) / name);
  out << "x,v\n";
  out.precision(17);
  for (long i = 0; i < ens.size(); ++i) out << ens.positions[i] << "," << ens.velocities[i] << "\n";
}

}  // namespace

void run_kinetic(const ValidatedConfig& vcfg, const SnapshotCallback& on_snapshot) {
  const RunConfig& cfg = vcfg.cfg;
  const ModelParams& p = cfg.params;
  if (cfg.dt > 0.5 * p.epsilon + 1e-15)
    throw StiffnessError("dt exceeds epsilon/2; explicit stepping of the local alignment is unstable");

  const Grid1D& grid = cfg.grid;
  const double h = grid.cell_width();
  const ForceSpecs specs = make_force_specs(cfg);

  ParticleEnsemble ens = init_well_prepared(initial_density(cfg), initial_velocity(cfg),
                                            cfg.n_particles, cfg.seed, grid, p.regime);

  const long n_steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-12));
  KineticLedger ledger;
  double prev_integrands[6] = {0, 0, 0, 0, 0, 0};
  bool have_prev = false;
  double time = 0.0;
  double prev_time = 0.0;

  for (long step = 0; step <= n_steps; ++step) {
    MomentFields moments = estimate_moments(ens, grid, cfg.eps_reg);
    FieldSet fields = compute_fields(moments.rho_eps, moments.rho_u_eps, specs, grid);
    const ChunkSums sums = particle_sums(ens, moments, grid);
    if (sums.max_abs_v > 1e6) throw BlowUp("particle velocity exceeded 1e6");

    // Instantaneous ledger entries. D2 uses the expanded second-moment form
    //   D2 = int S2 (phi*rho) - int (rho u) (phi*(rho u)),  S2 = int |v|^2 f dv.
    const GridFn s2 = deposit_values(ens, grid, ens.velocities.square());
    ledger.d3 = sums.d3;
    ledger.loc_align = sums.loc_align;
    ledger.d2 = (s2 * fields.phi_conv_rho).sum() * h -
                (moments.rho_u_eps * fields.phi_conv_rho_u).sum() * h;
    ledger.ke = 0.5 * sums.d3;
    ledger.pe_w = specs.has_interaction
                      ? p.lambda * interaction_energy(moments.rho_eps, specs.interaction, h)
                      : 0.0;
    ledger.pe_v = p.lambda * (specs.v_values * moments.rho_eps).sum() * h;
    ledger.rho_u2 = (moments.rho_eps * moments.u_eps.square()).sum() * h;
    ledger.phi_u_dissip =
        2.0 * ((fields.phi_conv_rho * moments.u_eps.square() * moments.rho_eps).sum() -
               (fields.phi_conv_rho_u * moments.u_eps * moments.rho_eps).sum()) *
        h;
    ledger.fe_source =
        p.beta > 0.0
            ? p.sigma * p.gamma / p.beta +
                  (p.sigma * p.alpha / p.beta) * (fields.phi_conv_rho * moments.rho_eps).sum() * h
            : 0.0;

    const double integrands[6] = {p.alpha * ledger.d2,          p.gamma * ledger.d3,
                                  p.beta * ledger.loc_align,    0.5 * p.alpha * ledger.phi_u_dissip,
                                  p.gamma * ledger.rho_u2,      ledger.fe_source};
    if (have_prev) {
      double* acc[6] = {&ledger.int_alpha_d2,         &ledger.int_gamma_d3,
                        &ledger.int_beta_la,          &ledger.int_half_alpha_phi_u,
                        &ledger.int_gamma_rho_u2,     &ledger.int_source};
      for (int k = 0; k < 6; ++k)
        *acc[k] += 0.5 * (prev_integrands[k] + integrands[k]) * (time - prev_time);
    }
    for (int k = 0; k < 6; ++k) prev_integrands[k] = integrands[k];
    have_prev = true;
    prev_time = time;

    const bool last = step == n_steps;
    if (step % cfg.snapshot_stride == 0 || last) {
      KineticSnapshot snap;
      snap.time = time;
      snap.step = step;
      snap.ensemble = &ens;
      snap.moments = &moments;
      snap.fields = &fields;
      snap.ledger = ledger;
      if (on_snapshot) on_snapshot(snap);
      if (cfg.dump_particles) dump_particles_csv(ens, cfg.output_dir, time);
    }
    if (last) break;

    // Nominal step times are step * dt (no accumulation error); only a
    // genuinely fractional final step is shortened.
    const double t_next = step + 1 == n_steps ? cfg.t_final : (step + 1) * cfg.dt;
    const double dt_step = std::abs(t_next - time - cfg.dt) < 1e-12 * cfg.t_final
                               ? cfg.dt
                               : t_next - time;
    Eigen::ArrayXd accels = assemble_accelerations(ens, moments, fields, p, grid);
    ens = step_euler_maruyama(ens, accels, dt_step, p.sigma, static_cast<std::uint64_t>(step));
    time = t_next;
  }
}

}  // namespace flocklab
