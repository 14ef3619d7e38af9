#include "c2s/micro.hpp"

namespace c2s {

MicroInstance random_micro_instance(Rng& rng, int num_orders, const EnvConstants& env,
                                    const DemandParams& params) {
  std::uniform_int_distribution<int> pick_depot(0, env.num_warehouses - 1);
  MicroInstance inst;
  inst.depot = warehouse_location(pick_depot(rng));
  inst.capacity = env.capacity;
  inst.speed = env.speed;
  inst.service_time = env.service_time;
  while (static_cast<int>(inst.orders.size()) < num_orders) {
    Stop s;
    s.location = sample_location(rng, params.quadrant_weights);
    s.demand = std::min(sample_demand(rng, params.demand_low, params.demand_high), env.capacity);
    std::tie(s.window_open, s.window_close) =
        sample_time_window(rng, inst.start, env.wave_period, params);
    const double arrive = inst.start + distance(inst.depot, s.location) / inst.speed;
    if (arrive <= s.window_close) inst.orders.push_back(s);
  }
  return inst;
}

RoutingContext micro_context(const MicroInstance& instance) {
  std::vector<RouteOrder> orders;
  for (std::size_t i = 0; i < instance.orders.size(); ++i) {
    const Stop& s = instance.orders[i];
    orders.push_back({static_cast<OrderId>(i), s.location, s.demand, s.window_open, s.window_close});
  }
  return make_context(0, instance.depot, instance.start, instance.capacity, instance.speed,
                      instance.service_time, std::move(orders));
}

std::optional<std::vector<std::vector<int>>> heuristic_routes(const MicroInstance& instance) {
  const RoutingContext ctx = micro_context(instance);
  const RoutingResult result = vrp_heuristic(ctx);
  if (!result.dropped.empty()) return std::nullopt;
  return result.order_sequences(ctx);
}

}  // namespace c2s
