#pragma once

// Domain types shared by every module: model coefficients, the periodic
// grid, particle/fluid state containers, and the run configuration with
// its validator. All types are immutable snapshots once constructed;
// solvers mutate only by producing new snapshots.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flocklab {

using GridFn = Eigen::ArrayXd;

// --- torus helpers -------------------------------------------------------

// Canonical torus coordinate in [0, 1).
inline double wrap_torus(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w = 0.0;  // guards x = -1e-18 rounding to 1.0
  return w;
}

// Representative of x - y in [-1/2, 1/2): the shortest signed displacement.
inline double torus_disp(double x, double y) {
  double d = x - y - std::floor(x - y + 0.5);
  if (d >= 0.5) d = -0.5;
  return d;
}

// --- model coefficients ---------------------------------------------------

enum class Regime { Diffusive, Diffusionless };

const char* regime_name(Regime r);
std::optional<Regime> parse_regime(const std::string& name);

// Coefficient tuple of the kinetic equation
//   df/dt + v df/dx - d/dv((gamma v + lambda(V' + W'*rho))f) + alpha d/dv(F[f] f)
//     = d/dv(beta (v - u) f + sigma df/dv).
// Diffusive regime couples beta = sigma = 1/epsilon; diffusionless regime
// has beta = 1/epsilon, sigma = 0.
struct ModelParams {
  double gamma = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  Regime regime = Regime::Diffusive;
};

// --- grids ----------------------------------------------------------------

struct VelocityGrid {
  double v_min = -8.0;
  double v_max = 8.0;
  int n_v = 64;

  double cell_width() const { return (v_max - v_min) / n_v; }
  double center(int a) const { return v_min + (a + 0.5) * cell_width(); }
};

// Uniform periodic grid on the unit torus; cell centers x_j = (j + 1/2) h.
// n_cells must be a power of two (spectral transforms).
struct Grid1D {
  int n_cells = 0;
  double length = 1.0;
  std::optional<VelocityGrid> velocity;

  double cell_width() const { return length / n_cells; }
  double center(int j) const { return (j + 0.5) * cell_width(); }
  GridFn centers() const;
  int wrap_index(long j) const {
    long m = j % n_cells;
    return static_cast<int>(m < 0 ? m + n_cells : m);
  }
};

// --- state containers -----------------------------------------------------

// N equal-weight phase-space samples (x_i, v_i) representing f^eps.
// Positions stay wrapped to [0, 1); total mass N * (1/N) = 1. The seed
// keys one counter-based random stream per particle.
struct ParticleEnsemble {
  Eigen::ArrayXd positions;
  Eigen::ArrayXd velocities;
  double weight = 0.0;
  std::uint64_t seed = 0;

  long size() const { return positions.size(); }
};

enum class FluidForm { Isothermal, Pressureless };

// Reformulated fluid variables: isothermal carries g = log(rho), so
// rho = exp(g) > 0 automatically; pressureless carries g = rho - 1 and
// must keep 1 + g > 0.
struct FluidState {
  FluidForm form = FluidForm::Isothermal;
  GridFn g;
  GridFn u;
  double time = 0.0;

  GridFn density() const { return form == FluidForm::Isothermal ? GridFn(g.exp()) : GridFn(1.0 + g); }
};

// --- run configuration -----------------------------------------------------

struct PotentialSpec {
  enum class Kind { Zero, CosineWell };
  Kind kind = Kind::Zero;
  double amplitude = 0.0;  // V(x) = a (1 - cos(2 pi x))
};

struct InteractionChoice {
  enum class Kind { None, Coulomb, Sine, Table };
  Kind kind = Kind::None;
  std::string table_path;  // two-column CSV of grad W samples, Kind::Table only
};

struct WeightChoice {
  enum class Kind { Zero, Constant, Cosine, Table };
  Kind kind = Kind::Constant;  // Constant: phi = 1; Cosine: phi = 1 + cos(2 pi x)/2
  std::string table_path;
};

struct RunConfig {
  ModelParams params;
  Grid1D grid;
  long n_particles = 0;
  double dt = 0.0;
  double t_final = 0.0;
  std::uint64_t seed = 0;
  PotentialSpec potential;
  InteractionChoice interaction;
  WeightChoice weight;
  double eps_reg = 1e-8;  // moment regularizer: u = rho u / (rho + eps_reg)
  int snapshot_stride = 1;
  std::string output_dir = ".";
  bool dump_particles = false;
  bool dealias = true;
  // Initial data rho0 = 1 + rho0_cos_amp cos(2 pi x), u0 = u0_sin_amp sin(2 pi x).
  double rho0_cos_amp = 0.3;
  double u0_sin_amp = 0.2;
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::vector<ConfigViolation>& violations);
  std::vector<ConfigViolation> violations;
};

// Wrapper certifying that validate_config found no violations.
struct ValidatedConfig {
  RunConfig cfg;
};

// Checks every invariant (regime/coefficient coupling, power-of-two grid,
// positive dt, ...) and returns one violation per broken field. beta and
// sigma may be left unset (negative) in the raw config; validation fills
// them from the regime.
std::vector<ConfigViolation> validate_config(RunConfig& cfg);

// Throwing form; returns the normalized config.
ValidatedConfig validate_or_throw(RunConfig cfg);

// Flat key-value config document (JSON-compatible). Unknown keys are
// errors. Every key mirrors a RunConfig field; see README for the grammar.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string config_to_text(const RunConfig& cfg);

// Default experiment configuration (V = 0, phi = 1 + cos(2 pi x)/2,
// sine kernel, rho0 = 1 + 0.3 cos, u0 = 0.2 sin, T = 0.5).
RunConfig default_experiment_config();

// Initial data of a config sampled on its grid.
GridFn initial_density(const RunConfig& cfg);
GridFn initial_velocity(const RunConfig& cfg);

// --- deterministic chunked execution ---------------------------------------

// Work is split into a fixed number of chunks regardless of thread count,
// and per-chunk results must be merged in chunk order by the caller; the
// numerical result is then independent of scheduling.
inline constexpr int kFixedChunks = 64;

void parallel_chunks(long n_items, int n_threads,
                     const std::function<void(int chunk, long begin, long end)>& body);

int& global_thread_count();  // default 1; set by the CLI --threads flag

}  // namespace flocklab
