#include "flocklab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace flocklab {

namespace {

constexpr double kInfCap = 1e300;

void check_probability_pair(const Atoms& a, const Atoms& b) {
  if ((a.mass < 0.0).any() || (b.mass < 0.0).any())
    throw MassMismatch("distance requires non-negative masses");
  const double ma = a.mass.sum();
  const double mb = b.mass.sum();
  if (std::abs(ma - mb) > 1e-9 * std::max(1.0, std::abs(ma)))
    throw MassMismatch("distance requires equal total mass");
}

}  // namespace

Atoms grid_atoms(const GridFn& density, double cell_width) {
  Atoms atoms;
  const Eigen::Index n = density.size();
  atoms.x.resize(n);
  atoms.mass.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    atoms.x[j] = (static_cast<double>(j) + 0.5) * cell_width;
    atoms.mass[j] = density[j] * cell_width;
  }
  return atoms;
}

// --- W1 via the cyclic CDF formula ------------------------------------------

double w1_distance(const Atoms& a, const Atoms& b) {
  check_probability_pair(a, b);
  struct Event {
    double pos;
    double jump;
  };
  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(a.x.size() + b.x.size()));
  for (Eigen::Index i = 0; i < a.x.size(); ++i) events.push_back({wrap_torus(a.x[i]), a.mass[i]});
  for (Eigen::Index i = 0; i < b.x.size(); ++i) events.push_back({wrap_torus(b.x[i]), -b.mass[i]});
  std::sort(events.begin(), events.end(),
            [](const Event& l, const Event& r) { return l.pos < r.pos; });

  // Piecewise-constant F_a - F_b between event positions; segment values and
  // lengths over one period.
  std::vector<std::pair<double, double>> segments;  // (value, length)
  double value = 0.0;
  std::size_t i = 0;
  while (i < events.size()) {
    const double pos = events[i].pos;
    while (i < events.size() && events[i].pos == pos) value += events[i++].jump;
    const double next = i < events.size() ? events[i].pos : events.front().pos + 1.0;
    if (next - pos > 0.0) segments.push_back({value, next - pos});
  }
  if (segments.empty()) return 0.0;

  // Optimal shift c is the length-weighted median of the segment values.
  std::vector<std::pair<double, double>> sorted = segments;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const auto& s : sorted) total += s.second;
  double acc = 0.0;
  double c = sorted.back().first;
  for (const auto& s : sorted) {
    acc += s.second;
    if (acc >= 0.5 * total) {
      c = s.first;
      break;
    }
  }
  double dist = 0.0;
  for (const auto& s : segments) dist += std::abs(s.first - c) * s.second;
  return dist;
}

double w1_distance(const GridFn& rho1, const GridFn& rho2, double cell_width) {
  return w1_distance(grid_atoms(rho1, cell_width), grid_atoms(rho2, cell_width));
}

// --- min-cost flow ----------------------------------------------------------

MinCostFlow::MinCostFlow(int n_nodes) : n_(n_nodes), adj_(static_cast<std::size_t>(n_nodes)) {}

void MinCostFlow::add_edge(int a, int b, double cost) {
  auto add_directed = [this](int from, int to, double c) {
    const int idx = static_cast<int>(arcs_.size());
    arcs_.push_back({to, c, kInfCap, idx + 1});
    arcs_.push_back({from, -c, 0.0, idx});
    adj_[static_cast<std::size_t>(from)].push_back(idx);
    adj_[static_cast<std::size_t>(to)].push_back(idx + 1);
  };
  add_directed(a, b, cost);
  add_directed(b, a, cost);
}

double MinCostFlow::solve(std::vector<double> excess) {
  if (static_cast<int>(excess.size()) != n_) throw std::invalid_argument("supply size mismatch");
  double scale = 1.0;
  for (double e : excess) scale = std::max(scale, std::abs(e));
  const double tol = 1e-13 * scale;

  std::vector<double> potential(static_cast<std::size_t>(n_), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(n_));
  std::vector<int> parent_arc(static_cast<std::size_t>(n_));
  std::vector<char> settled(static_cast<std::size_t>(n_));
  double total_cost = 0.0;
  const long max_rounds = 64L * n_ + 4096;

  for (long round = 0; round < max_rounds; ++round) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(parent_arc.begin(), parent_arc.end(), -1);
    std::fill(settled.begin(), settled.end(), 0);

    bool any_source = false;
    for (int v = 0; v < n_; ++v) {
      if (excess[static_cast<std::size_t>(v)] > tol) {
        dist[static_cast<std::size_t>(v)] = 0.0;
        heap.push({0.0, v});
        any_source = true;
      }
    }
    if (!any_source) break;

    int target = -1;
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (settled[static_cast<std::size_t>(v)]) continue;
      settled[static_cast<std::size_t>(v)] = 1;
      if (excess[static_cast<std::size_t>(v)] < -tol) {
        target = v;
        break;
      }
      for (const int ai : adj_[static_cast<std::size_t>(v)]) {
        const Arc& arc = arcs_[static_cast<std::size_t>(ai)];
        if (arc.residual <= tol) continue;
        const double rc = std::max(
            0.0, arc.cost + potential[static_cast<std::size_t>(v)] -
                     potential[static_cast<std::size_t>(arc.to)]);
        const double nd = d + rc;
        if (nd < dist[static_cast<std::size_t>(arc.to)] - 1e-18) {
          dist[static_cast<std::size_t>(arc.to)] = nd;
          parent_arc[static_cast<std::size_t>(arc.to)] = ai;
          heap.push({nd, arc.to});
        }
      }
    }
    if (target < 0) throw std::runtime_error("min-cost flow: demand unreachable");

    const double d_target = dist[static_cast<std::size_t>(target)];
    for (int v = 0; v < n_; ++v)
      potential[static_cast<std::size_t>(v)] += std::min(dist[static_cast<std::size_t>(v)], d_target);

    // Bottleneck along the parent chain back to the multi-source set.
    double bottleneck = -excess[static_cast<std::size_t>(target)];
    int v = target;
    while (parent_arc[static_cast<std::size_t>(v)] >= 0) {
      const Arc& arc = arcs_[static_cast<std::size_t>(parent_arc[static_cast<std::size_t>(v)])];
      bottleneck = std::min(bottleneck, arc.residual);
      v = arcs_[static_cast<std::size_t>(arc.pair)].to;
    }
    const int source = v;
    bottleneck = std::min(bottleneck, excess[static_cast<std::size_t>(source)]);
    if (!(bottleneck > 0.0)) break;

    v = target;
    while (parent_arc[static_cast<std::size_t>(v)] >= 0) {
      const int ai = parent_arc[static_cast<std::size_t>(v)];
      Arc& arc = arcs_[static_cast<std::size_t>(ai)];
      arc.residual -= bottleneck;
      arcs_[static_cast<std::size_t>(arc.pair)].residual += bottleneck;
      total_cost += bottleneck * arc.cost;
      v = arcs_[static_cast<std::size_t>(arc.pair)].to;
    }
    excess[static_cast<std::size_t>(source)] -= bottleneck;
    excess[static_cast<std::size_t>(target)] += bottleneck;
  }
  return total_cost;
}

// --- flat norms --------------------------------------------------------------

namespace {

// Nodes on the circle at the sorted union of atom positions, consecutive
// arcs carry the circular gaps, plus a bank node at sup-norm cost 1.
double flat_norm_circle(const std::vector<std::pair<double, double>>& signed_atoms) {
  if (signed_atoms.empty()) return 0.0;
  std::vector<std::pair<double, double>> atoms = signed_atoms;  // (pos, mass)
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> pos;
  std::vector<double> mass;
  for (const auto& [p, m] : atoms) {
    if (!pos.empty() && p == pos.back()) {
      mass.back() += m;
    } else {
      pos.push_back(p);
      mass.push_back(m);
    }
  }
  const int m = static_cast<int>(pos.size());
  const int bank = m;
  MinCostFlow flow(m + 1);
  if (m > 1) {
    for (int i = 0; i + 1 < m; ++i) flow.add_edge(i, i + 1, pos[static_cast<std::size_t>(i + 1)] - pos[static_cast<std::size_t>(i)]);
    flow.add_edge(m - 1, 0, 1.0 - (pos.back() - pos.front()));
  }
  std::vector<double> supplies(static_cast<std::size_t>(m + 1), 0.0);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    supplies[static_cast<std::size_t>(i)] = mass[static_cast<std::size_t>(i)];
    total += mass[static_cast<std::size_t>(i)];
    flow.add_edge(i, bank, 1.0);
  }
  supplies[static_cast<std::size_t>(bank)] = -total;
  return flow.solve(std::move(supplies));
}

}  // namespace

double flat_norm_signed(const Atoms& signed_atoms) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(static_cast<std::size_t>(signed_atoms.x.size()));
  for (Eigen::Index i = 0; i < signed_atoms.x.size(); ++i)
    atoms.push_back({wrap_torus(signed_atoms.x[i]), signed_atoms.mass[i]});
  return flat_norm_circle(atoms);
}

double flat_norm_signed_grid(const GridFn& signed_density, double cell_width) {
  return flat_norm_signed(grid_atoms(signed_density, cell_width));
}

double dbl_distance(const Atoms& a, const Atoms& b) {
  check_probability_pair(a, b);
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(static_cast<std::size_t>(a.x.size() + b.x.size()));
  for (Eigen::Index i = 0; i < a.x.size(); ++i) atoms.push_back({wrap_torus(a.x[i]), a.mass[i]});
  for (Eigen::Index i = 0; i < b.x.size(); ++i) atoms.push_back({wrap_torus(b.x[i]), -b.mass[i]});
  return flat_norm_circle(atoms);
}

double dbl_distance(const GridFn& rho1, const GridFn& rho2, double cell_width) {
  return dbl_distance(grid_atoms(rho1, cell_width), grid_atoms(rho2, cell_width));
}

double flat_norm_phase(const Eigen::ArrayXXd& mass, double hx, double hv) {
  const int n_x = static_cast<int>(mass.rows());
  const int n_v = static_cast<int>(mass.cols());
  // Restrict to the contiguous band of v-rows that carry mass; shortest
  // paths never detour outside it.
  int lo = n_v, hi = -1;
  for (int a = 0; a < n_v; ++a) {
    for (int j = 0; j < n_x; ++j) {
      if (mass(j, a) != 0.0) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        break;
      }
    }
  }
  if (hi < lo) return 0.0;
  const int rows = hi - lo + 1;
  const int bank = n_x * rows;
  auto node = [&](int j, int a) { return j * rows + (a - lo); };

  MinCostFlow flow(bank + 1);
  std::vector<double> supplies(static_cast<std::size_t>(bank + 1), 0.0);
  double total = 0.0;
  for (int j = 0; j < n_x; ++j) {
    for (int a = lo; a <= hi; ++a) {
      const int id = node(j, a);
      if (n_x > 1) flow.add_edge(id, node((j + 1) % n_x, a), hx);
      if (a < hi) flow.add_edge(id, node(j, a + 1), hv);
      flow.add_edge(id, bank, 1.0);
      supplies[static_cast<std::size_t>(id)] = mass(j, a);
      total += mass(j, a);
    }
  }
  supplies[static_cast<std::size_t>(bank)] = -total;
  return flow.solve(std::move(supplies));
}

}  // namespace flocklab
