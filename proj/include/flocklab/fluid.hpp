#pragma once

// Pseudospectral solver for the two limit systems on the periodic grid,
// in their reformulated variables:
//   isothermal  (g = log rho):  dg/dt = -(u g' + u'),
//       du/dt = -u u' - g' - gamma u - lambda(V' + W'*rho)
//               - alpha((phi*rho) u - phi*(rho u)),      rho = exp(g)
//   pressureless (g = rho - 1): dg/dt = -((1+g) u)',
//       du/dt = -u u' - gamma u - lambda(V' + W'*(1+g))
//               - alpha((phi*(1+g)) u - phi*((1+g) u)).
// Classical RK4 in time with optional 2/3-rule dealiasing after each step.
// Valid in the smooth small-data regime; the pressureless vacuum guard
// aborts instead of regularizing.

#include <functional>

#include "flocklab/core.hpp"
#include "flocklab/fields.hpp"

namespace flocklab {

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VacuumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CFLViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// The smooth-solution window has no computable a-priori endpoint; runs are
// aborted empirically when the velocity gradient leaves the smooth regime.
struct GradientBlowUp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FluidRHS {
  GridFn dg;
  GridFn du;
};

struct FluidCoeffs {
  double gamma = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
};

// Optional manufactured-solution forcing added to the right-hand side.
using FluidForcing = std::function<FluidRHS(const FluidState&, double time)>;

FluidRHS rhs_isothermal(const FluidState& state, const ForceSpecs& specs,
                        const FluidCoeffs& coeffs, const Grid1D& grid);
FluidRHS rhs_pressureless(const FluidState& state, const ForceSpecs& specs,
                          const FluidCoeffs& coeffs, const Grid1D& grid);
FluidRHS fluid_rhs(const FluidState& state, const ForceSpecs& specs, const FluidCoeffs& coeffs,
                   const Grid1D& grid);

// CFL bound used by the stepper: dt <= 0.5 h / max(1, |u|_inf + 1).
double cfl_limit(const FluidState& state, const Grid1D& grid);

FluidState step_rk4(const FluidState& state, double dt, const ForceSpecs& specs,
                    const FluidCoeffs& coeffs, const Grid1D& grid, bool dealias,
                    const FluidForcing& forcing = nullptr);

// Free-energy ledger entries for the strong-solution identity
//   d/dt [kinetic + entropy + pot_v + pot_w]
//     = -gamma int rho |u|^2 - (alpha/2) int int phi |u(x)-u(y)|^2 rho rho;
// the entropy term int rho log rho appears only in the isothermal form.
struct FluidEnergyLedger {
  double kinetic = 0.0;
  double entropy = 0.0;
  double pot_v = 0.0;
  double pot_w = 0.0;
  double gamma_rho_u2 = 0.0;       // instantaneous gamma int rho |u|^2
  double half_alpha_phi_u = 0.0;   // instantaneous (alpha/2) int int phi |du|^2 rho rho
  double int_gamma_rho_u2 = 0.0;   // trapezoid time integrals of the two above
  double int_half_alpha_phi_u = 0.0;
  double total(FluidForm form) const {
    return kinetic + (form == FluidForm::Isothermal ? entropy : 0.0) + pot_v + pot_w;
  }
};

FluidEnergyLedger instantaneous_energies(const FluidState& state, const ForceSpecs& specs,
                                         const FluidCoeffs& coeffs, const Grid1D& grid);

// Time integrator that owns its state and dissipation integrals; used for
// standalone fluid runs and for pairing with the kinetic solver.
class FluidIntegrator {
 public:
  FluidIntegrator(FluidState initial, ForceSpecs specs, FluidCoeffs coeffs, Grid1D grid,
                  double dt_target, bool dealias);

  // Advances to t_target in uniform substeps no longer than the target dt
  // (shrunk further if the CFL bound demands it).
  void advance_to(double t_target, const FluidForcing& forcing = nullptr);

  const FluidState& state() const { return state_; }
  FluidEnergyLedger ledger() const;

 private:
  void accumulate(const FluidEnergyLedger& at);

  FluidState state_;
  ForceSpecs specs_;
  FluidCoeffs coeffs_;
  Grid1D grid_;
  double dt_target_;
  bool dealias_;
  double int_gamma_rho_u2_ = 0.0;
  double int_half_alpha_phi_u_ = 0.0;
  double prev_gamma_rho_u2_ = 0.0;
  double prev_half_alpha_phi_u_ = 0.0;
  double prev_time_ = 0.0;
  bool have_prev_ = false;
};

// Builds the fluid counterpart of a validated kinetic configuration:
// isothermal for the diffusive regime, pressureless for the diffusionless
// regime, initialized from the same (rho0, u0).
FluidState initial_fluid_state(const RunConfig& cfg);
FluidCoeffs fluid_coeffs(const ModelParams& params);

// Snapshot dump with columns x,rho,u.
void write_state_csv(const FluidState& state, const Grid1D& grid, const std::string& path);

}  // namespace flocklab
