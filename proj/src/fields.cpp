#include "flocklab/fields.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "flocklab/fft.hpp"

namespace flocklab {

namespace {

void check_odd_symmetry(const GridFn& k) {
  const Eigen::Index n = k.size();
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index mirror = (n - r) % n;
    if (std::abs(k[r] + k[mirror]) > 1e-12)
      throw KernelAsymmetry("kernel table is not odd-symmetric on the torus");
  }
}

void check_even_symmetry(const GridFn& k) {
  const Eigen::Index n = k.size();
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index mirror = (n - r) % n;
    if (std::abs(k[r] - k[mirror]) > 1e-12)
      throw KernelAsymmetry("weight table is not even-symmetric on the torus");
  }
}

}  // namespace

InteractionSpec InteractionSpec::bounded_lipschitz(GridFn samples) {
  check_odd_symmetry(samples);
  return {Kind::BoundedLipschitz, std::move(samples)};
}

WeightSpec WeightSpec::from_samples(GridFn samples, double cell_width) {
  check_even_symmetry(samples);
  if ((samples < -1e-12).any()) throw KernelAsymmetry("communication weight must be non-negative");
  WeightSpec spec;
  spec.sup_norm = samples.abs().maxCoeff();
  double lip = 0.0;
  const Eigen::Index n = samples.size();
  for (Eigen::Index r = 0; r < n; ++r)
    lip = std::max(lip, std::abs(samples[(r + 1) % n] - samples[r]) / cell_width);
  spec.lipschitz = lip;
  spec.phi = std::move(samples);
  return spec;
}

GridFn periodic_convolution(const GridFn& kernel, const GridFn& f, double cell_width) {
  if (kernel.size() != f.size()) throw std::invalid_argument("convolution size mismatch");
  auto kf = fft_forward(kernel);
  auto ff = fft_forward(f);
  for (std::size_t q = 0; q < kf.size(); ++q) kf[q] *= ff[q] * cell_width;
  return fft_inverse_real(std::move(kf));
}

GridFn poisson_field(const GridFn& source, double cell_width) {
  const std::size_t n = static_cast<std::size_t>(source.size());
  auto spec = fft_forward(source);
  // -P'' = s - mean(s):  P_hat = s_hat / k^2, field = P' -> i k P_hat = i s_hat / k.
  spec[0] = Complex(0.0, 0.0);
  for (std::size_t q = 1; q < n; ++q) {
    if (q == n / 2) {
      spec[q] = Complex(0.0, 0.0);
      continue;
    }
    const double k = 2.0 * M_PI * static_cast<double>(signed_frequency(q, n));
    spec[q] *= Complex(0.0, 1.0 / k);
  }
  (void)cell_width;
  return fft_inverse_real(std::move(spec));
}

GridFn coulomb_force(const GridFn& rho, double cell_width) {
  const double mass = rho.sum() * cell_width;
  if (std::abs(mass - 1.0) > 1e-9) throw NonUnitMass("coulomb_force requires unit mass");
  return poisson_field(rho, cell_width);
}

GridFn kernel_force(const GridFn& rho, const InteractionSpec& spec, double cell_width) {
  if (spec.kind != InteractionSpec::Kind::BoundedLipschitz)
    throw std::invalid_argument("kernel_force expects a bounded-Lipschitz spec");
  check_odd_symmetry(spec.grad_w);
  return periodic_convolution(spec.grad_w, rho, cell_width);
}

std::pair<GridFn, GridFn> phi_convolutions(const GridFn& rho, const GridFn& rho_u,
                                           const WeightSpec& spec, double cell_width) {
  return {periodic_convolution(spec.phi, rho, cell_width),
          periodic_convolution(spec.phi, rho_u, cell_width)};
}

GridFn grad_confinement(const PotentialSpec& spec, const Grid1D& grid) {
  if (spec.kind == PotentialSpec::Kind::Zero) return GridFn::Zero(grid.n_cells);
  const GridFn x = grid.centers();
  return 2.0 * M_PI * spec.amplitude * (2.0 * M_PI * x).sin();
}

GridFn confinement_values(const PotentialSpec& spec, const Grid1D& grid) {
  if (spec.kind == PotentialSpec::Kind::Zero) return GridFn::Zero(grid.n_cells);
  const GridFn x = grid.centers();
  return spec.amplitude * (1.0 - (2.0 * M_PI * x).cos());
}

GridFn w_potential_conv(const GridFn& rho, const InteractionSpec& spec, double cell_width) {
  const std::size_t n = static_cast<std::size_t>(rho.size());
  if (spec.kind == InteractionSpec::Kind::Coulomb) {
    auto sf = fft_forward(rho);
    sf[0] = Complex(0.0, 0.0);
    for (std::size_t q = 1; q < n; ++q) {
      if (q == n / 2) {
        // Dropped alongside the Nyquist derivative in poisson_field, so the
        // discrete integration by parts (1/2) int (W*rho) rho =
        // (1/2) int |grad W * rho|^2 stays exact.
        sf[q] = Complex(0.0, 0.0);
        continue;
      }
      const double k = 2.0 * M_PI * static_cast<double>(signed_frequency(q, n));
      sf[q] /= k * k;
    }
    return fft_inverse_real(std::move(sf));
  }
  // W from the spectral antiderivative of grad W, mean-zero convention.
  auto kf = fft_forward(spec.grad_w);
  auto ff = fft_forward(rho);
  kf[0] = Complex(0.0, 0.0);
  for (std::size_t q = 1; q < n; ++q) {
    if (q == n / 2) {
      kf[q] = Complex(0.0, 0.0);
      continue;
    }
    const double k = 2.0 * M_PI * static_cast<double>(signed_frequency(q, n));
    kf[q] = kf[q] / Complex(0.0, k) * ff[q] * cell_width;
  }
  return fft_inverse_real(std::move(kf));
}

double interaction_energy(const GridFn& rho, const InteractionSpec& spec, double cell_width) {
  const GridFn w_rho = w_potential_conv(rho, spec, cell_width);
  return 0.5 * (w_rho * rho).sum() * cell_width;
}

ForceSpecs make_force_specs(const RunConfig& cfg) {
  ForceSpecs specs;
  specs.potential = cfg.potential;
  specs.grad_v = grad_confinement(cfg.potential, cfg.grid);
  specs.v_values = confinement_values(cfg.potential, cfg.grid);

  const int n = cfg.grid.n_cells;
  const double h = cfg.grid.cell_width();
  switch (cfg.interaction.kind) {
    case InteractionChoice::Kind::None:
      specs.interaction = InteractionSpec::bounded_lipschitz(GridFn::Zero(n));
      specs.has_interaction = false;
      break;
    case InteractionChoice::Kind::Coulomb:
      specs.interaction = InteractionSpec::coulomb();
      specs.has_interaction = true;
      break;
    case InteractionChoice::Kind::Sine: {
      GridFn k(n);
      for (int r = 0; r < n; ++r) k[r] = std::sin(2.0 * M_PI * r * h) / (2.0 * M_PI);
      specs.interaction = InteractionSpec::bounded_lipschitz(std::move(k));
      specs.has_interaction = true;
      break;
    }
    case InteractionChoice::Kind::Table:
      specs.interaction = InteractionSpec::bounded_lipschitz(
          load_kernel_table(cfg.interaction.table_path, cfg.grid, /*odd_symmetric=*/true));
      specs.has_interaction = true;
      break;
  }

  switch (cfg.weight.kind) {
    case WeightChoice::Kind::Zero:
      specs.weight = WeightSpec::from_samples(GridFn::Zero(n), h);
      break;
    case WeightChoice::Kind::Constant:
      specs.weight = WeightSpec::from_samples(GridFn::Ones(n), h);
      break;
    case WeightChoice::Kind::Cosine: {
      GridFn phi(n);
      for (int r = 0; r < n; ++r) phi[r] = 1.0 + 0.5 * std::cos(2.0 * M_PI * r * h);
      specs.weight = WeightSpec::from_samples(std::move(phi), h);
      break;
    }
    case WeightChoice::Kind::Table:
      specs.weight = WeightSpec::from_samples(
          load_kernel_table(cfg.weight.table_path, cfg.grid, /*odd_symmetric=*/false), h);
      break;
  }
  return specs;
}

FieldSet compute_fields(const GridFn& rho, const GridFn& rho_u, const ForceSpecs& specs,
                        const Grid1D& grid) {
  const double h = grid.cell_width();
  FieldSet fields;
  fields.grad_v = specs.grad_v;
  if (!specs.has_interaction) {
    fields.grad_w_conv_rho = GridFn::Zero(grid.n_cells);
  } else if (specs.interaction.kind == InteractionSpec::Kind::Coulomb) {
    fields.grad_w_conv_rho = coulomb_force(rho, h);
  } else {
    fields.grad_w_conv_rho = periodic_convolution(specs.interaction.grad_w, rho, h);
  }
  auto [phi_rho, phi_rho_u] = phi_convolutions(rho, rho_u, specs.weight, h);
  fields.phi_conv_rho = std::move(phi_rho);
  fields.phi_conv_rho_u = std::move(phi_rho_u);
  return fields;
}

GridFn load_kernel_table(const std::string& path, const Grid1D& grid, bool odd_symmetric) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel table " + path);
  const int n = grid.n_cells;
  const double h = grid.cell_width();
  GridFn samples = GridFn::Zero(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x = 0.0, value = 0.0;
    if (!(ls >> x >> value))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'x,value'");
    const double pos = wrap_torus(x);
    const double idx = pos / h;
    const long r = std::lround(idx);
    if (std::abs(idx - static_cast<double>(r)) > 1e-9)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": x is not aligned with the displacement grid");
    const int rr = grid.wrap_index(r);
    if (seen[static_cast<std::size_t>(rr)])
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate sample");
    seen[static_cast<std::size_t>(rr)] = true;
    samples[rr] = value;
  }
  for (int r = 0; r < n; ++r) {
    if (!seen[static_cast<std::size_t>(r)])
      throw std::runtime_error(path + ": missing sample at displacement " + std::to_string(r * h));
  }
  if (odd_symmetric) check_odd_symmetry(samples);
  return samples;
}

double interp_periodic(const GridFn& values, double cell_width, double x) {
  const Eigen::Index n = values.size();
  const double s = wrap_torus(x) / cell_width - 0.5;
  const double fl = std::floor(s);
  const double frac = s - fl;
  long j0 = static_cast<long>(fl);
  long m = j0 % n;
  if (m < 0) m += n;
  const Eigen::Index a = m;
  const Eigen::Index b = (m + 1) % n;
  return (1.0 - frac) * values[a] + frac * values[b];
}

}  // namespace flocklab
