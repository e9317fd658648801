#pragma once

// Functionals tracked by the convergence experiments: pointwise and
// integrated relative entropies, the modulated kinetic energy, the Coulomb
// field energy, free energy with its dissipations, the L1 gap to the local
// Maxwellian, transport distances (see transport.hpp), and the moment-error
// inequality ledger.

#include <optional>
#include <string>
#include <vector>

#include "flocklab/core.hpp"
#include "flocklab/fields.hpp"
#include "flocklab/kinetic.hpp"
#include "flocklab/transport.hpp"

namespace flocklab {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GridMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VGridTooNarrow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Classical relative entropy H(a|b) = a log a - b log b - (1 + log b)(a - b),
// the Bregman divergence of z log z; >= 0 with equality iff a = b. a = 0
// returns the limit value b.
double rel_entropy_pointwise(double a, double b);

// --- phase-space histograms --------------------------------------------------

struct PhaseHistogram {
  Eigen::ArrayXXd mass;  // n_x rows, n_v cols; cell masses of the inside part
  int n_x = 0;
  int n_v = 0;
  double hx = 0.0;
  double hv = 0.0;
  double v_min = 0.0;
  double outside_fraction = 0.0;

  double x_center(int j) const { return (j + 0.5) * hx; }
  double v_center(int a) const { return v_min + (a + 0.5) * hv; }
};

// Nearest-cell (x, v) histogram; throws VGridTooNarrow when more than 0.1%
// of the particles fall outside the velocity grid.
PhaseHistogram phase_histogram(const ParticleEnsemble& ensemble, int n_x,
                               const VelocityGrid& vgrid);

// Plug-in estimate of int f log f with a Miller-Madow style bias correction;
// histogram-resolution bias is O(hx + hv) on top of the O(sqrt(bins/N))
// sampling error.
double histogram_f_log_f(const PhaseHistogram& hist, long n_particles);

// --- entropies and energies ---------------------------------------------------

// Restriction of run-grid fields to a coarser histogram x-grid (n_x must
// divide the grid size); mass-exact averaging for densities, mass-weighted
// for velocities.
GridFn restrict_density(const GridFn& rho, int n_x);
GridFn restrict_velocity(const GridFn& rho, const GridFn& u, int n_x, double eps_reg);

struct FluidEntropyParts {
  double e_total = 0.0;              // E (isothermal) or E_hat (pressureless)
  double e_hat = 0.0;                // integral rho_eps/2 |u_eps - u|^2
  double h_part = 0.0;               // integral H(rho_eps | rho), isothermal only
  std::optional<double> h_reversed;  // integral H(rho | rho_eps) when rho_eps > 0
  double l1_gap_sq = 0.0;            // |rho_eps - rho|_L1 squared
  double l1_bound = 0.0;             // 2(|rho_eps| + |rho|) int H  (est_l1 chain)
};

FluidEntropyParts fluid_relative_entropy(const MomentFields& kin, const FluidState& flu,
                                         const Grid1D& grid);

// (lambda/2) int |grad W * (rho - rho_eps)|^2 via the mean-corrected Poisson
// solve; equals the squared H^{-1}-type gap.
double coulomb_gap(const GridFn& rho_eps, const GridFn& rho, double lambda, double cell_width);

struct FreeEnergyResult {
  double free_energy = 0.0;
  double d1_diag = 0.0;  // histogram estimate, diagnostic only
  double d2 = 0.0;
  double d3 = 0.0;
};

// F = (sigma/beta) int f log f + (1/2) int |v|^2 f + (lambda/2) int int W rho rho
//     + lambda int V rho; D2 through the expanded second-moment form, D3
//     exactly from particles.
FreeEnergyResult free_energy_and_dissipations(const ParticleEnsemble& ensemble,
                                              const MomentFields& moments,
                                              const FieldSet& fields, const ModelParams& params,
                                              const ForceSpecs& specs, const Grid1D& grid,
                                              int hist_nx);

// |hist(f_eps) - M_{rho,u}|_L1 with M evaluated by cell-center quadrature;
// mass that falls outside the velocity grid is charged to the gap.
double l1_maxwellian_gap(const PhaseHistogram& hist, const GridFn& rho_hist,
                         const GridFn& u_hist);

// Cell-sum of M_{rho,u} hx hv (normalization diagnostic; ~1 for wide grids).
double maxwellian_mass(const PhaseHistogram& hist, const GridFn& rho_hist, const GridFn& u_hist);

// --- moment-error inequality ledger -------------------------------------------

struct MomentGapRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;  // estimator tolerance (0 for the exact discrete rows)
  bool satisfied = false;
};

// Both sides of the moment-error inequalities: L1 and bounded-Lipschitz
// bounds on rho u and rho u x u gaps, plus the phase-space distance of f_eps
// to the monokinetic state rho x delta_u. The phase row carries the
// histogram deposition tolerance hx + hv + outside mass.
std::vector<MomentGapRow> moment_gap_checks(const MomentFields& kin,
                                            const ParticleEnsemble& ensemble,
                                            const FluidState& flu, const Grid1D& grid,
                                            const PhaseHistogram* phase);

// --- per-snapshot record -------------------------------------------------------

struct MetricRecord {
  std::uint64_t seed = 0;
  double time = 0.0;
  std::optional<double> free_energy, d1_diag, d2, d3;
  std::optional<double> rel_entropy, e_hat, h_eps_rho, h_rho_eps;
  std::optional<double> coulomb_gap, phi_dissip;
  std::optional<double> int_gamma_rel, int_phi_rel;
  std::optional<double> d_bl, w1, l1_maxwellian, l1_density_gap;
  std::optional<double> est_l1_lhs, est_l1_rhs;
  std::optional<double> ke, pe_w, pe_v;
  std::optional<double> int_alpha_d2, int_gamma_d3, int_beta_la, int_source;
  std::optional<double> fluid_energy, fluid_int_gamma, fluid_int_phi;
  std::optional<double> mg1_l1_lhs, mg1_l1_rhs, mg1_bl_lhs, mg1_bl_rhs;
  std::optional<double> mg2_l1_lhs, mg2_l1_rhs, mg2_bl_lhs, mg2_bl_rhs;
  std::optional<double> mg3_lhs, mg3_rhs, mg3_tol;
  std::optional<double> mg_violations;
  std::string error;

  static std::string csv_header();
  std::string csv_row() const;  // NaN is forbidden: non-finite values are
                                // blanked and noted in the error column
};

}  // namespace flocklab
