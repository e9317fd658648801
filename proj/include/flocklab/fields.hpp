#pragma once

// Periodic force fields on the grid: confinement gradient, interaction
// force grad W * rho (spectral Coulomb or tabulated bounded-Lipschitz
// kernel), and the communication-weight convolutions phi * rho and
// phi * (rho u). All convolutions run through the same FFT path, which
// realizes the rectangle-rule quadrature (k * f)_j = h sum_m k_{j-m} f_m.

#include <stdexcept>
#include <utility>

#include "flocklab/core.hpp"

namespace flocklab {

struct NonUnitMass : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct KernelAsymmetry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Interaction force realization. Coulomb carries no samples (it is solved
// spectrally); the bounded-Lipschitz variant holds grad W sampled at the
// displacement values r*h, r = 0..G-1, odd-symmetric on the torus.
// Discontinuous tables are representable, but their rectangle-rule
// convolution converges only at first order.
struct InteractionSpec {
  enum class Kind { Coulomb, BoundedLipschitz };
  Kind kind = Kind::BoundedLipschitz;
  GridFn grad_w;

  static InteractionSpec coulomb() { return {Kind::Coulomb, GridFn()}; }
  static InteractionSpec bounded_lipschitz(GridFn samples);
};

// Communication weight phi >= 0, even-symmetric, with its recorded sup
// norm and discrete Lipschitz constant.
struct WeightSpec {
  GridFn phi;
  double sup_norm = 0.0;
  double lipschitz = 0.0;

  static WeightSpec from_samples(GridFn samples, double cell_width);
};

struct FieldSet {
  GridFn grad_v;
  GridFn grad_w_conv_rho;
  GridFn phi_conv_rho;
  GridFn phi_conv_rho_u;
};

// Periodic convolution via FFT; kernel indexed by displacement r*h.
GridFn periodic_convolution(const GridFn& kernel, const GridFn& f, double cell_width);

// Solves -P'' = source - mean(source) spectrally and returns P'; output has
// zero mean. This is the mean-corrected torus realization of DeltaW = -delta_0.
GridFn poisson_field(const GridFn& source, double cell_width);

// grad W * rho for the Coulomb interaction; rho must carry unit mass.
GridFn coulomb_force(const GridFn& rho, double cell_width);

// grad W * rho for a tabulated kernel (odd symmetry rechecked here).
GridFn kernel_force(const GridFn& rho, const InteractionSpec& spec, double cell_width);

// (phi * rho, phi * (rho u)) through the same spectral path.
std::pair<GridFn, GridFn> phi_convolutions(const GridFn& rho, const GridFn& rho_u,
                                           const WeightSpec& spec, double cell_width);

// Confinement gradient: Zero -> 0; CosineWell V = a(1 - cos 2 pi x) ->
// V' = 2 pi a sin(2 pi x).
GridFn grad_confinement(const PotentialSpec& spec, const Grid1D& grid);
GridFn confinement_values(const PotentialSpec& spec, const Grid1D& grid);

// W * rho with the mean-zero antiderivative convention (interaction
// energies are insensitive to the W constant because the densities
// compared share their mass).
GridFn w_potential_conv(const GridFn& rho, const InteractionSpec& spec, double cell_width);

// (1/2) integral (W * rho) rho dx.
double interaction_energy(const GridFn& rho, const InteractionSpec& spec, double cell_width);

// Realized specs for a run configuration (tables loaded and checked).
struct ForceSpecs {
  PotentialSpec potential;
  InteractionSpec interaction;
  WeightSpec weight;
  GridFn grad_v;    // on the run grid
  GridFn v_values;
  bool has_interaction = false;  // false when the config chose 'none'
};

ForceSpecs make_force_specs(const RunConfig& cfg);

// Assembles every field needed by the kinetic drift for given moments.
FieldSet compute_fields(const GridFn& rho, const GridFn& rho_u, const ForceSpecs& specs,
                        const Grid1D& grid);

// Two-column CSV (x, value) sampled on the displacement grid of `grid`;
// enforces alignment and the requested symmetry.
GridFn load_kernel_table(const std::string& path, const Grid1D& grid, bool odd_symmetric);

// Linear interpolation of a periodic grid function at a torus point,
// adjoint to cloud-in-cell deposition.
double interp_periodic(const GridFn& values, double cell_width, double x);

}  // namespace flocklab
