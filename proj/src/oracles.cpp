#include "flocklab/oracles.hpp"

#include <cmath>
#include <limits>

namespace flocklab::oracle {

namespace {

double torus_distance(double x, double y) { return std::abs(torus_disp(x, y)); }

}  // namespace

double w1_assignment(const Atoms& a, const Atoms& b) {
  const int m = static_cast<int>(a.x.size());
  if (m != static_cast<int>(b.x.size()))
    throw MassMismatch("assignment oracle needs matching atom counts");
  if (m == 0) return 0.0;
  if (m > 20) throw std::invalid_argument("assignment oracle capped at 20 atoms");
  const double grain = a.mass[0];
  for (Eigen::Index i = 0; i < a.mass.size(); ++i) {
    if (std::abs(a.mass[i] - grain) > 1e-12 || std::abs(b.mass[i] - grain) > 1e-12)
      throw MassMismatch("assignment oracle needs equal-mass atoms");
  }
  const std::size_t full = std::size_t{1} << m;
  std::vector<double> dp(full, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const int i = __builtin_popcountll(mask);  // next a-atom to match
    if (i == m) continue;
    for (int j = 0; j < m; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      const double cost = dp[mask] + torus_distance(a.x[i], b.x[j]);
      if (cost < dp[next]) dp[next] = cost;
    }
  }
  return dp[full - 1] * grain;
}

double simplex_maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  // Tableau over structural + slack variables; the slack basis is feasible
  // because b >= 0.
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.block(0, 0, m, n) = a;
  tab.block(0, n, m, m).setIdentity();
  tab.block(0, n + m, m, 1) = b;
  tab.block(m, 0, 1, n) = -c.transpose();

  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const double tol = 1e-11;
  const long max_iters = 200L * (m + n);
  for (long iter = 0; iter < max_iters; ++iter) {
    // Dantzig rule with a Bland fallback for the last stretch.
    int enter = -1;
    if (iter < max_iters / 2) {
      double best = -tol;
      for (int j = 0; j < n + m; ++j) {
        if (tab(m, j) < best) {
          best = tab(m, j);
          enter = j;
        }
      }
    } else {
      for (int j = 0; j < n + m; ++j) {
        if (tab(m, j) < -tol) {
          enter = j;
          break;
        }
      }
    }
    if (enter < 0) return tab(m, n + m);

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (tab(i, enter) > tol) {
        const double ratio = tab(i, n + m) / tab(i, enter);
        if (ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("simplex: unbounded LP");

    tab.row(leave) /= tab(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double factor = tab(i, enter);
      if (factor != 0.0) tab.row(i) -= factor * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw std::runtime_error("simplex: iteration limit reached");
}

double dbl_lp_signed(const Atoms& signed_atoms) {
  // Combine coincident positions.
  std::vector<std::pair<double, double>> atoms;
  for (Eigen::Index i = 0; i < signed_atoms.x.size(); ++i)
    atoms.push_back({wrap_torus(signed_atoms.x[i]), signed_atoms.mass[i]});
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> pos, mass;
  for (const auto& [p, m] : atoms) {
    if (!pos.empty() && p == pos.back()) {
      mass.back() += m;
    } else {
      pos.push_back(p);
      mass.push_back(m);
    }
  }
  const int n = static_cast<int>(pos.size());
  if (n == 0) return 0.0;

  // psi_i = p_i - 1 turns the box into 0 <= p_i <= 2 and keeps every pair
  // constraint right-hand side non-negative.
  const int pairs = n * (n - 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + pairs, n);
  Eigen::VectorXd b(n + pairs);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    a(row, i) = 1.0;
    b(row++) = 2.0;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      a(row, i) = 1.0;
      a(row, j) = -1.0;
      b(row++) = torus_distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::VectorXd c(n);
  double mass_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    c(i) = mass[static_cast<std::size_t>(i)];
    mass_sum += mass[static_cast<std::size_t>(i)];
  }
  return simplex_maximize(a, b, c) - mass_sum;
}

double dbl_lp(const Atoms& a, const Atoms& b) {
  Atoms diff;
  diff.x.resize(a.x.size() + b.x.size());
  diff.mass.resize(a.x.size() + b.x.size());
  diff.x << a.x, b.x;
  diff.mass << a.mass, -b.mass;
  return dbl_lp_signed(diff);
}

double entropy_direct(const std::vector<double>& masses, double cell_area) {
  double sum = 0.0;
  for (double m : masses) {
    if (m > 0.0) sum += m * std::log(m / cell_area);
  }
  return sum;
}

}  // namespace flocklab::oracle
