#include "flocklab/metrics.hpp"

#include <cmath>
#include <sstream>

namespace flocklab {

double rel_entropy_pointwise(double a, double b) {
  if (!(b > 0.0)) throw DomainError("rel_entropy_pointwise requires b > 0");
  if (a < 0.0) throw DomainError("rel_entropy_pointwise requires a >= 0");
  if (a == 0.0) return b;
  return a * std::log(a) - b * std::log(b) - (1.0 + std::log(b)) * (a - b);
}

PhaseHistogram phase_histogram(const ParticleEnsemble& ensemble, int n_x,
                               const VelocityGrid& vgrid) {
  PhaseHistogram hist;
  hist.n_x = n_x;
  hist.n_v = vgrid.n_v;
  hist.hx = 1.0 / n_x;
  hist.hv = vgrid.cell_width();
  hist.v_min = vgrid.v_min;
  hist.mass = Eigen::ArrayXXd::Zero(n_x, vgrid.n_v);

  long outside = 0;
  const long n = ensemble.size();
  for (long i = 0; i < n; ++i) {
    const int j = std::min(n_x - 1, static_cast<int>(ensemble.positions[i] * n_x));
    const double s = (ensemble.velocities[i] - vgrid.v_min) / hist.hv;
    if (s < 0.0 || s >= vgrid.n_v) {
      ++outside;
      continue;
    }
    hist.mass(j, static_cast<int>(s)) += ensemble.weight;
  }
  hist.outside_fraction = static_cast<double>(outside) / static_cast<double>(n);
  if (hist.outside_fraction > 1e-3)
    throw VGridTooNarrow("more than 0.1% of particles fall outside the velocity grid");
  return hist;
}

double histogram_f_log_f(const PhaseHistogram& hist, long n_particles) {
  const double cell = hist.hx * hist.hv;
  double plugin = 0.0;
  long occupied = 0;
  for (int j = 0; j < hist.n_x; ++j) {
    for (int a = 0; a < hist.n_v; ++a) {
      const double m = hist.mass(j, a);
      if (m > 0.0) {
        plugin += m * std::log(m / cell);
        ++occupied;
      }
    }
  }
  // Miller-Madow: the plug-in underestimates entropy -int f log f by
  // (occupied - 1) / (2N); correct the sign-flipped functional accordingly.
  return plugin - static_cast<double>(occupied - 1) / (2.0 * static_cast<double>(n_particles));
}

GridFn restrict_density(const GridFn& rho, int n_x) {
  const int g = static_cast<int>(rho.size());
  if (g % n_x != 0) throw GridMismatch("histogram bins must divide the grid size");
  const int k = g / n_x;
  GridFn out(n_x);
  for (int j = 0; j < n_x; ++j) out[j] = rho.segment(j * k, k).mean();
  return out;
}

GridFn restrict_velocity(const GridFn& rho, const GridFn& u, int n_x, double eps_reg) {
  const int g = static_cast<int>(rho.size());
  if (g % n_x != 0) throw GridMismatch("histogram bins must divide the grid size");
  const int k = g / n_x;
  GridFn out(n_x);
  for (int j = 0; j < n_x; ++j) {
    const double m = rho.segment(j * k, k).mean();
    const double mu = (rho.segment(j * k, k) * u.segment(j * k, k)).mean();
    out[j] = mu / (m + eps_reg);
  }
  return out;
}

FluidEntropyParts fluid_relative_entropy(const MomentFields& kin, const FluidState& flu,
                                         const Grid1D& grid) {
  if (kin.rho_eps.size() != flu.g.size()) throw GridMismatch("kinetic and fluid grids differ");
  const double h = grid.cell_width();
  const GridFn rho = flu.density();
  FluidEntropyParts parts;
  parts.e_hat = 0.5 * (kin.rho_eps * (kin.u_eps - flu.u).square()).sum() * h;
  if (flu.form == FluidForm::Isothermal) {
    double h_part = 0.0;
    for (Eigen::Index j = 0; j < rho.size(); ++j)
      h_part += rel_entropy_pointwise(kin.rho_eps[j], rho[j]) * h;
    parts.h_part = h_part;
    if (kin.rho_eps.minCoeff() > 0.0) {
      double rev = 0.0;
      for (Eigen::Index j = 0; j < rho.size(); ++j)
        rev += rel_entropy_pointwise(rho[j], kin.rho_eps[j]) * h;
      parts.h_reversed = rev;
    }
    parts.e_total = parts.e_hat + parts.h_part;
  } else {
    parts.e_total = parts.e_hat;
  }
  const double l1 = (kin.rho_eps - rho).abs().sum() * h;
  parts.l1_gap_sq = l1 * l1;
  parts.l1_bound =
      2.0 * (kin.rho_eps.sum() * h + rho.sum() * h) * (flu.form == FluidForm::Isothermal
                                                           ? parts.h_part
                                                           : 0.0);
  return parts;
}

double coulomb_gap(const GridFn& rho_eps, const GridFn& rho, double lambda, double cell_width) {
  for (const GridFn* r : {&rho_eps, &rho}) {
    if (std::abs(r->sum() * cell_width - 1.0) > 1e-9)
      throw NonUnitMass("coulomb_gap requires unit-mass densities");
  }
  const GridFn field = poisson_field(rho - rho_eps, cell_width);
  return 0.5 * lambda * field.square().sum() * cell_width;
}

FreeEnergyResult free_energy_and_dissipations(const ParticleEnsemble& ensemble,
                                              const MomentFields& moments,
                                              const FieldSet& fields, const ModelParams& params,
                                              const ForceSpecs& specs, const Grid1D& grid,
                                              int hist_nx) {
  if (!grid.velocity) throw VGridTooNarrow("free energy needs a velocity grid");
  const double h = grid.cell_width();
  FreeEnergyResult res;

  const PhaseHistogram hist = phase_histogram(ensemble, hist_nx, *grid.velocity);
  const double f_log_f = histogram_f_log_f(hist, ensemble.size());

  double kinetic2 = 0.0;
  for (long i = 0; i < ensemble.size(); ++i)
    kinetic2 += ensemble.weight * ensemble.velocities[i] * ensemble.velocities[i];
  res.d3 = kinetic2;

  const GridFn s2 = deposit_values(ensemble, grid, ensemble.velocities.square());
  res.d2 = (s2 * fields.phi_conv_rho).sum() * h -
           (moments.rho_u_eps * fields.phi_conv_rho_u).sum() * h;

  const double entropy_weight = params.beta > 0.0 ? params.sigma / params.beta : 0.0;
  const double pot_w = specs.has_interaction
                           ? params.lambda * interaction_energy(moments.rho_eps,
                                                                specs.interaction, h)
                           : 0.0;
  const double pot_v = params.lambda * (specs.v_values * moments.rho_eps).sum() * h;
  res.free_energy = entropy_weight * f_log_f + 0.5 * kinetic2 + pot_w + pot_v;

  // D1 diagnostic: int f |(sigma/beta) d_v log f - (u - v)|^2 from the
  // smoothed histogram; particle data has no direct access to grad_v f.
  const GridFn u_hist = restrict_velocity(moments.rho_eps, moments.u_eps, hist.n_x, 1e-12);
  double d1 = 0.0;
  for (int j = 0; j < hist.n_x; ++j) {
    for (int a = 1; a + 1 < hist.n_v; ++a) {
      const double m = hist.mass(j, a);
      if (m <= 0.0) continue;
      const double m_lo = hist.mass(j, a - 1);
      const double m_hi = hist.mass(j, a + 1);
      if (m_lo <= 0.0 || m_hi <= 0.0) continue;
      const double dlog = (std::log(m_hi) - std::log(m_lo)) / (2.0 * hist.hv);
      const double diff = entropy_weight * dlog - (u_hist[j] - hist.v_center(a));
      d1 += m * diff * diff;
    }
  }
  res.d1_diag = d1;
  return res;
}

double l1_maxwellian_gap(const PhaseHistogram& hist, const GridFn& rho_hist,
                         const GridFn& u_hist) {
  const double cell = hist.hx * hist.hv;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  double gap = 0.0;
  double m_inside = 0.0;
  for (int j = 0; j < hist.n_x; ++j) {
    for (int a = 0; a < hist.n_v; ++a) {
      const double dv = u_hist[j] - hist.v_center(a);
      const double maxwellian = rho_hist[j] * norm * std::exp(-0.5 * dv * dv);
      gap += std::abs(hist.mass(j, a) - maxwellian * cell);
      m_inside += maxwellian * cell;
    }
  }
  gap += hist.outside_fraction + std::max(0.0, 1.0 - m_inside);
  return gap;
}

double maxwellian_mass(const PhaseHistogram& hist, const GridFn& rho_hist, const GridFn& u_hist) {
  const double cell = hist.hx * hist.hv;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  double mass = 0.0;
  for (int j = 0; j < hist.n_x; ++j) {
    for (int a = 0; a < hist.n_v; ++a) {
      const double dv = u_hist[j] - hist.v_center(a);
      mass += rho_hist[j] * norm * std::exp(-0.5 * dv * dv) * cell;
    }
  }
  return mass;
}

std::vector<MomentGapRow> moment_gap_checks(const MomentFields& kin,
                                            const ParticleEnsemble& ensemble,
                                            const FluidState& flu, const Grid1D& grid,
                                            const PhaseHistogram* phase) {
  if (kin.rho_eps.size() != flu.g.size()) throw GridMismatch("kinetic and fluid grids differ");
  const double h = grid.cell_width();
  const int g = grid.n_cells;
  const GridFn rho = flu.density();
  const GridFn& u = flu.u;
  const GridFn re_u = kin.rho_eps * kin.u_eps;
  const GridFn r_u = rho * u;

  const double mass_eps = kin.rho_eps.sum() * h;
  const double weighted_gap2 = (kin.rho_eps * (kin.u_eps - u).square()).sum() * h;
  const double u_inf = u.abs().maxCoeff();
  double u_lip = 0.0;
  for (int j = 0; j < g; ++j) u_lip = std::max(u_lip, std::abs(u[(j + 1) % g] - u[j]) / h);
  const double rho_l1_gap = (kin.rho_eps - rho).abs().sum() * h;
  const double dbl_rho = flat_norm_signed_grid(kin.rho_eps - rho, h);
  const double dbl_mom = flat_norm_signed_grid(re_u - r_u, h);
  const double root_term = std::sqrt(mass_eps) * std::sqrt(weighted_gap2);

  std::vector<MomentGapRow> rows;
  auto push = [&rows](std::string name, double lhs, double rhs, double tol) {
    // The tol-free rows are exact discrete inequalities; allow only float
    // roundoff on top of the stated estimator tolerance.
    const bool ok = lhs <= rhs + tol + 1e-12 * (1.0 + std::abs(rhs));
    rows.push_back({std::move(name), lhs, rhs, tol, ok});
  };

  // (i) momentum gap, L1 and bounded-Lipschitz forms.
  push("momentum_l1", (re_u - r_u).abs().sum() * h, root_term + u_inf * rho_l1_gap, 0.0);
  push("momentum_bl", dbl_mom, root_term + (u_inf + u_lip) * dbl_rho, 0.0);

  // (ii) convection gap.
  const GridFn re_uu = re_u * kin.u_eps;
  const GridFn r_uu = r_u * u;
  push("convection_l1", (re_uu - r_uu).abs().sum() * h,
       weighted_gap2 + 2.0 * u_inf * root_term + 3.0 * u_inf * u_inf * rho_l1_gap, 0.0);
  const double c1 = u_inf + u_lip;
  const double c2 = std::max(u_inf * u_inf, u_inf * u_inf + 2.0 * u_inf * u_lip);
  push("convection_bl", flat_norm_signed_grid(re_uu - r_uu, h),
       weighted_gap2 + 2.0 * c1 * dbl_mom + c2 * dbl_rho, 0.0);

  // (iii) phase-space distance to the monokinetic state rho x delta_u; the
  // histogram deposition tolerance covers the x/v binning shifts and any
  // mass outside the velocity grid.
  if (phase != nullptr) {
    double second_moment = 0.0;
    for (long i = 0; i < ensemble.size(); ++i) {
      const double dv = ensemble.velocities[i] - interp_periodic(kin.u_eps, h, ensemble.positions[i]);
      second_moment += ensemble.weight * dv * dv;
    }
    const GridFn rho_hist = restrict_density(rho, phase->n_x);
    const GridFn u_hist = restrict_velocity(rho, u, phase->n_x, 0.0);
    Eigen::ArrayXXd diff = phase->mass;
    for (int j = 0; j < phase->n_x; ++j) {
      const double column_mass = rho_hist[j] * phase->hx;
      const double s = (u_hist[j] - phase->v_min) / phase->hv - 0.5;
      const double fl = std::floor(s);
      const double frac = s - fl;
      const int a0 = std::min(phase->n_v - 1, std::max(0, static_cast<int>(fl)));
      const int a1 = std::min(phase->n_v - 1, a0 + 1);
      diff(j, a0) -= column_mass * (1.0 - frac);
      diff(j, a1) -= column_mass * frac;
    }
    const double lhs = flat_norm_phase(diff, phase->hx, phase->hv);
    const double rhs = std::sqrt(mass_eps) * (std::sqrt(second_moment) + std::sqrt(weighted_gap2)) +
                       (1.0 + u_lip) * dbl_rho;
    push("monokinetic_bl", lhs, rhs, phase->hx + phase->hv + phase->outside_fraction);
  }
  return rows;
}

// --- CSV record --------------------------------------------------------------

namespace {

const char* kColumns[] = {
    "seed",          "time",          "free_energy",  "d1_diag",      "d2",
    "d3",            "rel_entropy",   "e_hat",        "h_eps_rho",    "h_rho_eps",
    "coulomb_gap",   "phi_dissip",    "int_gamma_rel", "int_phi_rel", "d_bl",
    "w1",            "l1_maxwellian", "l1_density_gap", "est_l1_lhs", "est_l1_rhs",
    "ke",            "pe_w",          "pe_v",         "int_alpha_d2", "int_gamma_d3",
    "int_beta_la",   "int_source",    "fluid_energy", "fluid_int_gamma", "fluid_int_phi",
    "mg1_l1_lhs",    "mg1_l1_rhs",    "mg1_bl_lhs",   "mg1_bl_rhs",   "mg2_l1_lhs",
    "mg2_l1_rhs",    "mg2_bl_lhs",    "mg2_bl_rhs",   "mg3_lhs",      "mg3_rhs",
    "mg3_tol",       "mg_violations", "error"};

void append_value(std::ostringstream& os, const std::optional<double>& v, std::string& error,
                  const char* name) {
  if (v && !std::isfinite(*v)) {
    if (!error.empty()) error += "; ";
    error += std::string(name) + " non-finite";
    return;  // blank field, NaN never serialized
  }
  if (v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    os << buf;
  }
}

}  // namespace

std::string MetricRecord::csv_header() {
  std::ostringstream os;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) {
    if (i) os << ",";
    os << kColumns[i];
  }
  return os.str();
}

std::string MetricRecord::csv_row() const {
  std::string err = error;
  const std::optional<double> fields[] = {
      free_energy,  d1_diag,     d2,          d3,           rel_entropy, e_hat,
      h_eps_rho,    h_rho_eps,   coulomb_gap, phi_dissip,   int_gamma_rel, int_phi_rel,
      d_bl,         w1,          l1_maxwellian, l1_density_gap, est_l1_lhs, est_l1_rhs,
      ke,           pe_w,        pe_v,        int_alpha_d2, int_gamma_d3, int_beta_la,
      int_source,   fluid_energy, fluid_int_gamma, fluid_int_phi, mg1_l1_lhs, mg1_l1_rhs,
      mg1_bl_lhs,   mg1_bl_rhs,  mg2_l1_lhs,  mg2_l1_rhs,   mg2_bl_lhs,  mg2_bl_rhs,
      mg3_lhs,      mg3_rhs,     mg3_tol,     mg_violations};
  std::ostringstream os;
  os << seed << ",";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", time);
  os << buf;
  for (std::size_t i = 0; i < std::size(fields); ++i) {
    os << ",";
    append_value(os, fields[i], err, kColumns[i + 2]);
  }
  os << "," << err;
  return os.str();
}

}  // namespace flocklab
