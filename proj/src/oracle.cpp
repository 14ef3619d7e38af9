#include "c2s/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace c2s {

namespace {

std::vector<Stop> stops_of(const MicroInstance& inst, const std::vector<int>& route) {
  std::vector<Stop> s;
  s.reserve(route.size());
  for (int i : route) s.push_back(inst.orders.at(static_cast<std::size_t>(i)));
  return s;
}

double route_cost(const MicroInstance& inst, const std::vector<int>& route) {
  if (route.empty()) return 0.0;
  double total = 0.0;
  Point here = inst.depot;
  for (int i : route) {
    const Point& p = inst.orders[static_cast<std::size_t>(i)].location;
    total += distance(here, p);
    here = p;
  }
  return total + distance(here, inst.depot);
}

struct BestRoute {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> order;
};

// Cheapest feasible visit order of the orders in `mask`, by enumerating
// permutations depth-first and pruning on capacity, windows and cost.
BestRoute best_route(const MicroInstance& inst, unsigned mask) {
  BestRoute best;
  std::vector<int> members;
  int load = 0;
  for (int i = 0; i < static_cast<int>(inst.orders.size()); ++i)
    if (mask & (1U << i)) {
      members.push_back(i);
      load += inst.orders[static_cast<std::size_t>(i)].demand;
    }
  if (load > inst.capacity) return best;

  std::vector<int> path;
  std::vector<bool> used(members.size(), false);
  auto dfs = [&](auto&& self, const Point& here, double ready, double dist) -> void {
    if (dist >= best.cost) return;
    if (path.size() == members.size()) {
      const double total = dist + distance(here, inst.depot);
      if (total < best.cost) {
        best.cost = total;
        best.order = path;
      }
      return;
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (used[k]) continue;
      const Stop& s = inst.orders[static_cast<std::size_t>(members[k])];
      const double leg = distance(here, s.location);
      const double begin = std::max(ready + leg / inst.speed, s.window_open);
      if (begin > s.window_close) continue;
      used[k] = true;
      path.push_back(members[k]);
      self(self, s.location, begin + inst.service_time, dist + leg);
      path.pop_back();
      used[k] = false;
    }
  };
  dfs(dfs, inst.depot, inst.start, 0.0);
  return best;
}

}  // namespace

double route_set_cost(const MicroInstance& instance, const std::vector<std::vector<int>>& routes) {
  double total = 0.0;
  for (const auto& r : routes) total += route_cost(instance, r);
  return total;
}

std::optional<OracleSolution> brute_force(const MicroInstance& instance) {
  const std::size_t n = instance.orders.size();
  if (n > kOracleMaxOrders)
    throw OracleBoundExceeded("oracle handles at most " + std::to_string(kOracleMaxOrders) +
                              " orders");
  if (n == 0) return OracleSolution{};
  const unsigned full = (1U << n) - 1U;
  std::vector<BestRoute> single(full + 1);
  for (unsigned m = 1; m <= full; ++m) single[m] = best_route(instance, m);

  // Set-partition recursion over bitmasks: the block holding the lowest
  // remaining order is enumerated explicitly, so each partition is seen once.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(full + 1, inf);
  std::vector<unsigned> block(full + 1, 0);
  cost[0] = 0.0;
  for (unsigned m = 1; m <= full; ++m) {
    const unsigned low = m & (~m + 1U);
    for (unsigned sub = m; sub; sub = (sub - 1) & m) {
      if (!(sub & low) || !std::isfinite(single[sub].cost) || !std::isfinite(cost[m ^ sub]))
        continue;
      const double c = single[sub].cost + cost[m ^ sub];
      if (c < cost[m]) {
        cost[m] = c;
        block[m] = sub;
      }
    }
  }
  if (!std::isfinite(cost[full])) return std::nullopt;
  OracleSolution sol;
  sol.cost = cost[full];
  for (unsigned m = full; m; m ^= block[m]) sol.routes.push_back(single[block[m]].order);
  return sol;
}

std::vector<std::string> validate(const MicroInstance& instance,
                                  const std::vector<std::vector<int>>& routes) {
  std::vector<std::string> out;
  std::vector<int> covered(instance.orders.size(), 0);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    bool indices_ok = true;
    for (int i : routes[r]) {
      if (i < 0 || static_cast<std::size_t>(i) >= instance.orders.size()) {
        out.push_back("route " + std::to_string(r) + " names unknown order " + std::to_string(i));
        indices_ok = false;
        continue;
      }
      ++covered[static_cast<std::size_t>(i)];
    }
    if (!indices_ok) continue;
    const auto stops = stops_of(instance, routes[r]);
    const auto timing =
        time_route(instance.depot, instance.start, stops, instance.speed, instance.service_time);
    for (auto& v : route_violations(timing, stops, instance.capacity))
      out.push_back("route " + std::to_string(r) + ": " + v);
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (covered[i] == 0) out.push_back("coverage violation: order " + std::to_string(i) + " unserved");
    if (covered[i] > 1)
      out.push_back("coverage violation: order " + std::to_string(i) + " served " +
                    std::to_string(covered[i]) + " times");
  }
  return out;
}

}  // namespace c2s
