#pragma once

// Brute-force reference implementations used by the test suites and the
// `oracle` CLI verb. These deliberately take different algorithmic routes
// from the production metrics: W1 by exhaustive min-cost matching of
// equal-mass grains, the bounded-Lipschitz distance by a dense simplex on
// the test-function polytope, entropy by direct summation.

#include "flocklab/transport.hpp"

namespace flocklab::oracle {

// Min-cost assignment between two equal-count, equal-mass atom families
// (bitmask DP over all pairings); exact torus W1 for <= ~20 atoms.
double w1_assignment(const Atoms& a, const Atoms& b);

// Dense-simplex solve of
//   max sum_i c_i psi_i  s.t. |psi_i| <= 1, |psi_i - psi_j| <= d_ij
// over the union support of the two measures (c = mass difference).
double dbl_lp(const Atoms& a, const Atoms& b);
double dbl_lp_signed(const Atoms& signed_atoms);

// Plug-in sum of m log(m / cell_area) over histogram cells.
double entropy_direct(const std::vector<double>& masses, double cell_area);

// Generic small LP: maximize c.x subject to A x <= b, x >= 0 with b >= 0
// (slack basis feasible); returns the optimum.
double simplex_maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c);

}  // namespace flocklab::oracle
