#include "flocklab/fluid.hpp"

#include <cmath>
#include <fstream>

#include "flocklab/fft.hpp"

namespace flocklab {

namespace {

GridFn interaction_force(const GridFn& rho, const ForceSpecs& specs, double h) {
  if (!specs.has_interaction) return GridFn::Zero(rho.size());
  // The mean-corrected solve is insensitive to the tiny mass drift a long
  // integration accumulates, so skip coulomb_force's unit-mass gate here.
  if (specs.interaction.kind == InteractionSpec::Kind::Coulomb) return poisson_field(rho, h);
  return periodic_convolution(specs.interaction.grad_w, rho, h);
}

void check_finite(const FluidState& state) {
  if (!state.g.allFinite() || !state.u.allFinite())
    throw NonFiniteState("fluid state contains non-finite values");
}

}  // namespace

FluidRHS rhs_isothermal(const FluidState& state, const ForceSpecs& specs,
                        const FluidCoeffs& coeffs, const Grid1D& grid) {
  check_finite(state);
  const double h = grid.cell_width();
  const GridFn rho = state.g.exp();
  const GridFn dg_dx = spectral_derivative(state.g);
  const GridFn du_dx = spectral_derivative(state.u);

  FluidRHS rhs;
  // Divergence form of -(u g' + u'): the node sum of a spectral derivative
  // vanishes identically, so the semi-discrete system conserves mean(e^g)
  // regardless of aliasing.
  rhs.dg = -spectral_derivative(rho * state.u) / rho;
  rhs.du = -(state.u * du_dx) - dg_dx - coeffs.gamma * state.u;
  if (coeffs.lambda != 0.0)
    rhs.du -= coeffs.lambda * (specs.grad_v + interaction_force(rho, specs, h));
  if (coeffs.alpha != 0.0) {
    auto [phi_rho, phi_rho_u] = phi_convolutions(rho, GridFn(rho * state.u), specs.weight, h);
    rhs.du -= coeffs.alpha * (phi_rho * state.u - phi_rho_u);
  }
  return rhs;
}

FluidRHS rhs_pressureless(const FluidState& state, const ForceSpecs& specs,
                          const FluidCoeffs& coeffs, const Grid1D& grid) {
  check_finite(state);
  const double h = grid.cell_width();
  const GridFn rho = 1.0 + state.g;
  if (rho.minCoeff() <= 0.0) throw VacuumError("pressureless density reached vacuum");
  const GridFn du_dx = spectral_derivative(state.u);

  FluidRHS rhs;
  rhs.dg = -spectral_derivative(rho * state.u);
  rhs.du = -(state.u * du_dx) - coeffs.gamma * state.u;
  if (coeffs.lambda != 0.0)
    rhs.du -= coeffs.lambda * (specs.grad_v + interaction_force(rho, specs, h));
  if (coeffs.alpha != 0.0) {
    auto [phi_rho, phi_rho_u] = phi_convolutions(rho, GridFn(rho * state.u), specs.weight, h);
    rhs.du -= coeffs.alpha * (phi_rho * state.u - phi_rho_u);
  }
  return rhs;
}

FluidRHS fluid_rhs(const FluidState& state, const ForceSpecs& specs, const FluidCoeffs& coeffs,
                   const Grid1D& grid) {
  return state.form == FluidForm::Isothermal ? rhs_isothermal(state, specs, coeffs, grid)
                                             : rhs_pressureless(state, specs, coeffs, grid);
}

double cfl_limit(const FluidState& state, const Grid1D& grid) {
  const double u_max = state.u.abs().maxCoeff();
  return 0.5 * grid.cell_width() / std::max(1.0, u_max + 1.0);
}

FluidState step_rk4(const FluidState& state, double dt, const ForceSpecs& specs,
                    const FluidCoeffs& coeffs, const Grid1D& grid, bool dealias,
                    const FluidForcing& forcing) {
  if (dt > cfl_limit(state, grid) * (1.0 + 1e-12))
    throw CFLViolation("dt exceeds the CFL bound 0.5 h / max(1, |u|+1)");

  auto eval = [&](const FluidState& s, double t) {
    FluidRHS rhs = fluid_rhs(s, specs, coeffs, grid);
    if (forcing) {
      const FluidRHS f = forcing(s, t);
      rhs.dg += f.dg;
      rhs.du += f.du;
    }
    return rhs;
  };
  auto advanced = [&](const FluidRHS& k, double scale) {
    FluidState s = state;
    s.g = state.g + scale * k.dg;
    s.u = state.u + scale * k.du;
    s.time = state.time + scale;
    return s;
  };

  const FluidRHS k1 = eval(state, state.time);
  const FluidRHS k2 = eval(advanced(k1, 0.5 * dt), state.time + 0.5 * dt);
  const FluidRHS k3 = eval(advanced(k2, 0.5 * dt), state.time + 0.5 * dt);
  const FluidRHS k4 = eval(advanced(k3, dt), state.time + dt);

  FluidState next = state;
  next.g = state.g + (dt / 6.0) * (k1.dg + 2.0 * k2.dg + 2.0 * k3.dg + k4.dg);
  next.u = state.u + (dt / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
  next.time = state.time + dt;
  if (dealias) {
    next.u = dealias_two_thirds(next.u);
    if (state.form == FluidForm::Isothermal) {
      // Filter the density, not its log: the 2/3 projector keeps mode 0, so
      // mean(e^g) survives the filter exactly.
      const GridFn rho = dealias_two_thirds(next.g.exp());
      if (rho.minCoeff() <= 0.0) throw NonFiniteState("dealiased density lost positivity");
      next.g = rho.log();
    } else {
      next.g = dealias_two_thirds(next.g);
    }
  }
  check_finite(next);
  return next;
}

FluidEnergyLedger instantaneous_energies(const FluidState& state, const ForceSpecs& specs,
                                         const FluidCoeffs& coeffs, const Grid1D& grid) {
  const double h = grid.cell_width();
  const GridFn rho = state.density();
  FluidEnergyLedger e;
  e.kinetic = 0.5 * (rho * state.u.square()).sum() * h;
  e.entropy = state.form == FluidForm::Isothermal ? (rho * state.g).sum() * h : 0.0;
  e.pot_v = coeffs.lambda * (specs.v_values * rho).sum() * h;
  e.pot_w = specs.has_interaction
                ? coeffs.lambda * interaction_energy(rho, specs.interaction, h)
                : 0.0;
  e.gamma_rho_u2 = coeffs.gamma * (rho * state.u.square()).sum() * h;
  if (coeffs.alpha != 0.0) {
    auto [phi_rho, phi_rho_u] = phi_convolutions(rho, GridFn(rho * state.u), specs.weight, h);
    e.half_alpha_phi_u = coeffs.alpha * ((phi_rho * state.u.square() * rho).sum() -
                                         (phi_rho_u * state.u * rho).sum()) *
                         h;
  }
  return e;
}

FluidIntegrator::FluidIntegrator(FluidState initial, ForceSpecs specs, FluidCoeffs coeffs,
                                 Grid1D grid, double dt_target, bool dealias)
    : state_(std::move(initial)),
      specs_(std::move(specs)),
      coeffs_(coeffs),
      grid_(grid),
      dt_target_(dt_target),
      dealias_(dealias) {
  accumulate(instantaneous_energies(state_, specs_, coeffs_, grid_));
}

void FluidIntegrator::accumulate(const FluidEnergyLedger& at) {
  if (have_prev_) {
    const double dt = state_.time - prev_time_;
    int_gamma_rho_u2_ += 0.5 * (prev_gamma_rho_u2_ + at.gamma_rho_u2) * dt;
    int_half_alpha_phi_u_ += 0.5 * (prev_half_alpha_phi_u_ + at.half_alpha_phi_u) * dt;
  }
  prev_gamma_rho_u2_ = at.gamma_rho_u2;
  prev_half_alpha_phi_u_ = at.half_alpha_phi_u;
  prev_time_ = state_.time;
  have_prev_ = true;
}

void FluidIntegrator::advance_to(double t_target, const FluidForcing& forcing) {
  const double h = grid_.cell_width();
  while (state_.time < t_target - 1e-12) {
    const double remaining = t_target - state_.time;
    const double dt_cap = std::min(dt_target_, cfl_limit(state_, grid_));
    const long n_sub = std::max(1L, static_cast<long>(std::ceil(remaining / dt_cap - 1e-12)));
    const double dt = remaining / static_cast<double>(n_sub);
    state_ = step_rk4(state_, dt, specs_, coeffs_, grid_, dealias_, forcing);
    // Gradient blow-up monitor: the solver is only trusted inside the smooth
    // window, which has no computable endpoint.
    double grad = 0.0;
    for (int j = 0; j < grid_.n_cells; ++j)
      grad = std::max(grad, std::abs(state_.u[(j + 1) % grid_.n_cells] - state_.u[j]) / h);
    if (grad > 1e3)
      throw GradientBlowUp("velocity gradient exceeded 1e3; smooth window ended");
    accumulate(instantaneous_energies(state_, specs_, coeffs_, grid_));
  }
}

FluidEnergyLedger FluidIntegrator::ledger() const {
  FluidEnergyLedger e = instantaneous_energies(state_, specs_, coeffs_, grid_);
  e.int_gamma_rho_u2 = int_gamma_rho_u2_;
  e.int_half_alpha_phi_u = int_half_alpha_phi_u_;
  return e;
}

FluidState initial_fluid_state(const RunConfig& cfg) {
  const GridFn rho0 = initial_density(cfg);
  FluidState state;
  state.form = cfg.params.regime == Regime::Diffusive ? FluidForm::Isothermal
                                                      : FluidForm::Pressureless;
  state.g = state.form == FluidForm::Isothermal ? GridFn(rho0.log()) : GridFn(rho0 - 1.0);
  state.u = initial_velocity(cfg);
  state.time = 0.0;
  return state;
}

FluidCoeffs fluid_coeffs(const ModelParams& params) {
  return {params.gamma, params.lambda, params.alpha};
}

void write_state_csv(const FluidState& state, const Grid1D& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x,rho,u\n";
  out.precision(17);
  const GridFn rho = state.density();
  for (int j = 0; j < grid.n_cells; ++j)
    out << grid.center(j) << "," << rho[j] << "," << state.u[j] << "\n";
}

}  // namespace flocklab
