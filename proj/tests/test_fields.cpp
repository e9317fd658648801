#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "flocklab/fields.hpp"
#include "flocklab/rng.hpp"

using namespace flocklab;

namespace {

Grid1D make_grid(int n) {
  Grid1D g;
  g.n_cells = n;
  return g;
}

// O(G^2) reference convolution (k * f)_j = h sum_m k_{j-m} f_m.
GridFn direct_convolution(const GridFn& kernel, const GridFn& f, double h) {
  const int n = static_cast<int>(kernel.size());
  GridFn out = GridFn::Zero(n);
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < n; ++m) {
      int r = (j - m) % n;
      if (r < 0) r += n;
      out[j] += kernel[r] * f[m] * h;
    }
  }
  return out;
}

GridFn random_positive_density(int n, std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  GridFn rho(n);
  for (int j = 0; j < n; ++j) rho[j] = 0.2 + rng.uniform(static_cast<std::uint64_t>(j));
  rho /= rho.sum() * (1.0 / n);  // unit mass
  return rho;
}

GridFn random_odd_kernel(int n, std::uint64_t seed) {
  const CounterRng rng(seed, 1);
  GridFn k = GridFn::Zero(n);
  for (int r = 1; r < n / 2; ++r) {
    const double value = rng.uniform(static_cast<std::uint64_t>(r)) - 0.5;
    k[r] = value;
    k[n - r] = -value;
  }
  return k;
}

}  // namespace

TEST_CASE("coulomb_force on uniform density vanishes") {
  const Grid1D grid = make_grid(64);
  const GridFn field = coulomb_force(GridFn::Ones(64), grid.cell_width());
  CHECK(field.abs().maxCoeff() < 1e-13);
}

TEST_CASE("coulomb_force single-mode identities") {
  const Grid1D grid = make_grid(128);
  const double h = grid.cell_width();
  const GridFn x = grid.centers();

  const GridFn rho1 = 1.0 + (2.0 * M_PI * x).cos();
  const GridFn field1 = coulomb_force(rho1, h);
  const GridFn expected1 = -(2.0 * M_PI * x).sin() / (2.0 * M_PI);
  CHECK((field1 - expected1).abs().maxCoeff() < 1e-12);
  // The analytic field at x = 1/4 is -1/(2 pi).
  CHECK(-std::sin(2.0 * M_PI * 0.25) / (2.0 * M_PI) ==
        doctest::Approx(-0.159154943).epsilon(1e-8));

  const GridFn rho2 = 1.0 + 0.3 * (4.0 * M_PI * x).cos();
  const GridFn field2 = coulomb_force(rho2, h);
  const GridFn expected2 = -0.3 * (4.0 * M_PI * x).sin() / (4.0 * M_PI);
  CHECK((field2 - expected2).abs().maxCoeff() < 1e-12);
}

TEST_CASE("coulomb field differentiates back to the mean-corrected source") {
  const Grid1D grid = make_grid(256);
  const double h = grid.cell_width();
  const GridFn x = grid.centers();
  const GridFn rho = 1.0 + 0.4 * (2.0 * M_PI * x).cos() + 0.1 * (6.0 * M_PI * x).sin();
  const GridFn field = coulomb_force(rho, h);
  // Centered difference of the field recovers mean(rho) - rho at O(h^2).
  double worst = 0.0;
  const int n = grid.n_cells;
  for (int j = 0; j < n; ++j) {
    const double dfield = (field[(j + 1) % n] - field[(j + n - 1) % n]) / (2.0 * h);
    worst = std::max(worst, std::abs(dfield + rho[j] - 1.0));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("coulomb_force output integrates to zero and rejects non-unit mass") {
  const Grid1D grid = make_grid(128);
  const double h = grid.cell_width();
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const GridFn rho = random_positive_density(128, seed);
    const GridFn field = coulomb_force(rho, h);
    CHECK(std::abs(field.sum() * h) < 1e-12);
  }
  CHECK_THROWS_AS((void)coulomb_force(GridFn::Ones(128) * 1.5, h), NonUnitMass);
}

TEST_CASE("kernel_force examples and brute-force equivalence") {
  const Grid1D grid = make_grid(128);
  const double h = grid.cell_width();
  const GridFn x = grid.centers();

  GridFn sine(128);
  for (int r = 0; r < 128; ++r) sine[r] = std::sin(2.0 * M_PI * r * h) / (2.0 * M_PI);
  const InteractionSpec spec = InteractionSpec::bounded_lipschitz(sine);

  // Odd kernel against the uniform density integrates to zero.
  CHECK(kernel_force(GridFn::Ones(128), spec, h).abs().maxCoeff() < 1e-14);

  // Half-amplitude mode coupling.
  const GridFn rho = 1.0 + (2.0 * M_PI * x).cos();
  const GridFn field = kernel_force(rho, spec, h);
  const GridFn expected = (2.0 * M_PI * x).sin() / (4.0 * M_PI);
  CHECK((field - expected).abs().maxCoeff() < 1e-13);

  // Random density, random odd kernel: spectral equals direct summation.
  for (std::uint64_t seed : {21u, 22u}) {
    const GridFn r = random_positive_density(128, seed);
    const GridFn k = random_odd_kernel(128, seed);
    const InteractionSpec s = InteractionSpec::bounded_lipschitz(k);
    CHECK((kernel_force(r, s, h) - direct_convolution(k, r, h)).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("kernel_force rejects asymmetric tables") {
  GridFn bad = GridFn::Zero(64);
  bad[1] = 1.0;  // no mirrored -1 at index 63
  CHECK_THROWS_AS((void)InteractionSpec::bounded_lipschitz(bad), KernelAsymmetry);
}

TEST_CASE("phi convolutions: constant kernel returns masses, cosine mode product") {
  const Grid1D grid = make_grid(128);
  const double h = grid.cell_width();
  const GridFn x = grid.centers();
  const GridFn rho = 1.0 + (2.0 * M_PI * x).cos();
  const GridFn rho_u = 0.3 * (2.0 * M_PI * x).sin() + 0.7;

  const WeightSpec ones = WeightSpec::from_samples(GridFn::Ones(128), h);
  auto [pr, pru] = phi_convolutions(rho, rho_u, ones, h);
  CHECK((pr - 1.0).abs().maxCoeff() < 1e-13);
  CHECK((pru - rho_u.sum() * h).abs().maxCoeff() < 1e-13);

  GridFn cosine(128);
  for (int r = 0; r < 128; ++r) cosine[r] = 1.0 + 0.5 * std::cos(2.0 * M_PI * r * h);
  const WeightSpec spec = WeightSpec::from_samples(cosine, h);
  auto [cr, cru] = phi_convolutions(rho, rho_u, spec, h);
  const GridFn expected = 1.0 + 0.25 * (2.0 * M_PI * x).cos();
  CHECK((cr - expected).abs().maxCoeff() < 1e-13);
  CHECK((cru - direct_convolution(cosine, rho_u, h)).abs().maxCoeff() < 1e-12);
  CHECK(cr.minCoeff() > -1e-12);
}

TEST_CASE("grad_confinement examples") {
  const Grid1D grid = make_grid(128);
  PotentialSpec zero;
  CHECK(grad_confinement(zero, grid).abs().maxCoeff() == 0.0);

  PotentialSpec well{PotentialSpec::Kind::CosineWell, 1.0};
  const GridFn gv = grad_confinement(well, grid);
  const GridFn x = grid.centers();
  for (int j = 0; j < 128; ++j)
    CHECK(gv[j] == doctest::Approx(2.0 * M_PI * std::sin(2.0 * M_PI * x[j])).epsilon(1e-12));
  // a = 1 at x = 1/4 gives 2 pi; a = 0.5 at x = 0 gives 0 (symmetry point).
  CHECK(2.0 * M_PI * 1.0 * std::sin(2.0 * M_PI * 0.25) == doctest::Approx(2.0 * M_PI));
  CHECK(2.0 * M_PI * 0.5 * std::sin(0.0) == 0.0);
}

TEST_CASE("action-reaction for odd kernels and the Coulomb field") {
  const Grid1D grid = make_grid(128);
  const double h = grid.cell_width();
  const GridFn rho1 = random_positive_density(128, 31);
  const GridFn rho2 = random_positive_density(128, 32);

  const GridFn k = random_odd_kernel(128, 33);
  const InteractionSpec spec = InteractionSpec::bounded_lipschitz(k);
  const double forward = (kernel_force(rho1, spec, h) * rho2).sum() * h;
  const double backward = (kernel_force(rho2, spec, h) * rho1).sum() * h;
  CHECK(forward == doctest::Approx(-backward).epsilon(1e-10));

  const double cf = (coulomb_force(rho1, h) * rho2).sum() * h;
  const double cb = (coulomb_force(rho2, h) * rho1).sum() * h;
  CHECK(cf == doctest::Approx(-cb).epsilon(1e-10));
}

TEST_CASE("linearity of the convolution operators") {
  const Grid1D grid = make_grid(64);
  const double h = grid.cell_width();
  const GridFn rho1 = random_positive_density(64, 41);
  const GridFn rho2 = random_positive_density(64, 42);
  const GridFn k = random_odd_kernel(64, 43);
  const InteractionSpec spec = InteractionSpec::bounded_lipschitz(k);

  const double a = 0.7, b = -0.2;
  const GridFn combo = a * rho1 + b * rho2;
  const GridFn lhs = kernel_force(combo, spec, h);
  const GridFn rhs = a * kernel_force(rho1, spec, h) + b * kernel_force(rho2, spec, h);
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-12);

  // Coulomb is affine-checked on mean-1 convex combinations.
  const double theta = 0.3;
  const GridFn mix = theta * rho1 + (1.0 - theta) * rho2;
  const GridFn cl = coulomb_force(mix, h);
  const GridFn cr = theta * coulomb_force(rho1, h) + (1.0 - theta) * coulomb_force(rho2, h);
  CHECK((cl - cr).abs().maxCoeff() < 1e-12);
}

TEST_CASE("spectral equals direct summation on grids up to 256") {
  for (int n : {32, 64, 128, 256}) {
    const Grid1D grid = make_grid(n);
    const double h = grid.cell_width();
    const GridFn rho = random_positive_density(n, 50 + static_cast<std::uint64_t>(n));
    const GridFn k = random_odd_kernel(n, 60 + static_cast<std::uint64_t>(n));
    const InteractionSpec spec = InteractionSpec::bounded_lipschitz(k);
    CHECK((kernel_force(rho, spec, h) - direct_convolution(k, rho, h)).abs().maxCoeff() < 1e-10);

    GridFn phi(n);
    for (int r = 0; r < n; ++r) phi[r] = 1.0 + 0.5 * std::cos(2.0 * M_PI * r * h);
    const WeightSpec w = WeightSpec::from_samples(phi, h);
    auto [pr, pru] = phi_convolutions(rho, rho, w, h);
    CHECK((pr - direct_convolution(phi, rho, h)).abs().maxCoeff() < 1e-10);
    CHECK((pru - direct_convolution(phi, rho, h)).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("interaction energy: sine kernel against the O(G^2) double sum") {
  const int n = 128;
  const Grid1D grid = make_grid(n);
  const double h = grid.cell_width();
  const GridFn rho = random_positive_density(n, 71);

  GridFn sine(n);
  GridFn w_closed(n);
  for (int r = 0; r < n; ++r) {
    sine[r] = std::sin(2.0 * M_PI * r * h) / (2.0 * M_PI);
    w_closed[r] = -std::cos(2.0 * M_PI * r * h) / (4.0 * M_PI * M_PI);
  }
  const InteractionSpec spec = InteractionSpec::bounded_lipschitz(sine);
  double direct = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < n; ++m) {
      int r = (j - m) % n;
      if (r < 0) r += n;
      direct += 0.5 * w_closed[r] * rho[j] * rho[m] * h * h;
    }
  }
  CHECK(interaction_energy(rho, spec, h) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("coulomb energy equals field energy") {
  const int n = 128;
  const double h = 1.0 / n;
  const GridFn rho = random_positive_density(n, 81);
  const InteractionSpec spec = InteractionSpec::coulomb();
  const GridFn field = coulomb_force(rho, h);
  // (1/2) int (W * rho) rho = (1/2) int |grad W * rho|^2 by parts on the torus.
  CHECK(interaction_energy(rho, spec, h) ==
        doctest::Approx(0.5 * field.square().sum() * h).epsilon(1e-10));
}

TEST_CASE("kernel table CSV loader enforces alignment and symmetry") {
  const Grid1D grid = make_grid(32);
  const double h = grid.cell_width();
  const std::string path = "kernel_table_test.csv";
  {
    std::ofstream out(path);
    out << "# x,grad_w\n";
    for (int r = 0; r < 32; ++r) out << r * h << "," << std::sin(2.0 * M_PI * r * h) << "\n";
  }
  const GridFn loaded = load_kernel_table(path, grid, true);
  for (int r = 0; r < 32; ++r) CHECK(loaded[r] == doctest::Approx(std::sin(2.0 * M_PI * r * h)));

  {
    std::ofstream out(path);
    out << "0.013,1.0\n";  // not on the displacement grid
  }
  CHECK_THROWS(load_kernel_table(path, grid, true));

  {
    std::ofstream out(path);
    for (int r = 0; r < 32; ++r) out << r * h << "," << (r == 1 ? 1.0 : 0.0) << "\n";
  }
  CHECK_THROWS_AS((void)load_kernel_table(path, grid, true), KernelAsymmetry);
  std::remove(path.c_str());
}

TEST_CASE("periodic interpolation is exact on linear segments and wraps") {
  GridFn values(4);
  values << 1.0, 2.0, 3.0, 2.0;
  const double h = 0.25;
  CHECK(interp_periodic(values, h, 0.125) == doctest::Approx(1.0));  // cell 0 center
  CHECK(interp_periodic(values, h, 0.25) == doctest::Approx(1.5));   // midpoint of cells 0,1
  CHECK(interp_periodic(values, h, 0.0) == doctest::Approx(1.5));    // wraps to cells 3,0
}
