#pragma once

#include <vector>

#include "c2s/demand.hpp"
#include "c2s/oracle.hpp"
#include "c2s/vrp_policy.hpp"

namespace c2s {

// Random single-depot instance drawn from the demand model at t = 0. Every
// order can be served by a direct dispatch from the depot.
MicroInstance random_micro_instance(Rng& rng, int num_orders, const EnvConstants& env = {},
                                    const DemandParams& params = {});

// Routing context for an instance; RouteOrder ids are instance indices.
RoutingContext micro_context(const MicroInstance& instance);

// Routes from the heuristic router as instance indices, or nullopt when it
// leaves orders unserved.
std::optional<std::vector<std::vector<int>>> heuristic_routes(const MicroInstance& instance);

}  // namespace c2s
