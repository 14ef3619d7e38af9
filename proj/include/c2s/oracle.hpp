#pragma once

#include <optional>
#include <string>
#include <vector>

#include "c2s/env.hpp"

namespace c2s {

inline constexpr std::size_t kOracleMaxOrders = 8;

// Small single-depot CVRP-TW instance. Every route leaves the depot at
// `start` with a fresh vehicle.
struct MicroInstance {
  Point depot;
  double start = 0.0;
  int capacity = 40;
  double speed = 0.1;
  double service_time = 1.0;
  std::vector<Stop> orders;
};

class OracleBoundExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OracleSolution {
  double cost = 0.0;                     // J: legs plus first and last depot legs
  std::vector<std::vector<int>> routes;  // order indices in visit order
};

// Total distance J of a route set.
double route_set_cost(const MicroInstance& instance, const std::vector<std::vector<int>>& routes);

// Exact minimum of J over every partition of the orders into routes and every
// visit order within a route, subject to capacity and windows. nullopt when
// no route set serves every order.
std::optional<OracleSolution> brute_force(const MicroInstance& instance);

// Empty iff every route is feasible and every order is covered exactly once.
std::vector<std::string> validate(const MicroInstance& instance,
                                  const std::vector<std::vector<int>>& routes);

}  // namespace c2s
