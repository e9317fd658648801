#pragma once

// Optimal-transport style distances used by the convergence metrics.
//
// w1_distance: 1-D Wasserstein-1 on the torus through the cyclic CDF
// formula  W1 = min_c int |F1 - F2 - c| dx, optimal c = weighted median.
//
// dbl_distance: bounded-Lipschitz (flat) distance
//   sup { int psi d(mu - nu) : |psi| <= 1, Lip psi <= 1 },
// computed exactly as a min-cost flow on the support graph: transport
// along the circle at cost = distance plus mass creation/destruction at
// cost 1 (the sup-norm cap). The same solver runs on the (x, v) histogram
// lattice with the l1 product metric for phase-space measures.

#include <stdexcept>
#include <vector>

#include "flocklab/core.hpp"

namespace flocklab {

struct MassMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted point masses on the unit torus.
struct Atoms {
  Eigen::ArrayXd x;
  Eigen::ArrayXd mass;
};

Atoms grid_atoms(const GridFn& density, double cell_width);

double w1_distance(const Atoms& a, const Atoms& b);
double w1_distance(const GridFn& rho1, const GridFn& rho2, double cell_width);

double dbl_distance(const Atoms& a, const Atoms& b);
double dbl_distance(const GridFn& rho1, const GridFn& rho2, double cell_width);

// Flat norm of a signed measure on the torus (atoms with signed masses);
// no mass-balance requirement, the imbalance pays the sup-norm price.
double flat_norm_signed(const Atoms& signed_atoms);
double flat_norm_signed_grid(const GridFn& signed_density, double cell_width);

// Flat norm of a signed measure on the (x, v) lattice: torus in x (spacing
// hx, wrap-around), line in v (spacing hv), l1 product metric. `mass(j, a)`
// is the signed cell mass at x-index j, v-index a.
double flat_norm_phase(const Eigen::ArrayXXd& mass, double hx, double hv);

// Exact min-cost flow with infinite arc capacities (successive shortest
// paths with potentials); exposed for the metric solvers above.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n_nodes);
  void add_edge(int a, int b, double cost);  // undirected, cost >= 0
  // supplies must sum to ~0; returns the minimal transport cost.
  double solve(std::vector<double> supplies);

 private:
  struct Arc {
    int to;
    double cost;
    double residual;
    int pair;  // index of the reverse arc
  };
  int n_;
  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
};

}  // namespace flocklab
