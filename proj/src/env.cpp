#include "c2s/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace c2s {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("configuration error: " + join(problems)),
      problems_(std::move(problems)) {}

TripRejected::TripRejected(std::vector<std::string> violations)
    : std::runtime_error("trip rejected: " + join(violations)),
      violations_(std::move(violations)) {}

void EnvConstants::validate() const {
  std::vector<std::string> problems;
  if (num_warehouses < 1 || num_warehouses > 4)
    problems.push_back("num_warehouses must be in 1..4");
  if (!(wave_period > 0.0)) problems.push_back("wave period T must be positive");
  if (!(horizon > wave_period)) problems.push_back("wave period T must be smaller than horizon tau");
  if (wave_period > 0.0 && horizon > 0.0) {
    const double waves = horizon / wave_period;
    if (std::abs(waves - std::round(waves)) > 1e-9)
      problems.push_back("wave period T must divide horizon tau");
  }
  if (capacity <= 0) problems.push_back("capacity Q must be positive");
  if (!(speed > 0.0)) problems.push_back("speed v must be positive");
  if (!(service_time > 0.0)) problems.push_back("service time Delta must be positive");
  if (max_inventory <= 0) problems.push_back("max inventory must be positive");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

int EnvConstants::num_waves() const {
  return static_cast<int>(std::lround(horizon / wave_period));
}

Point warehouse_location(int index) {
  static constexpr Point kCenters[4] = {{0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}, {0.5, -0.5}};
  if (index < 0 || index > 3) throw std::out_of_range("warehouse index");
  return kCenters[index];
}

int quadrant_of(const Point& p) {
  if (p.y >= 0.0) return p.x >= 0.0 ? 0 : 1;
  return p.x < 0.0 ? 2 : 3;
}

const char* to_string(OrderStatus s) {
  switch (s) {
    case OrderStatus::Open: return "open";
    case OrderStatus::Assigned: return "assigned";
    case OrderStatus::Served: return "served";
    case OrderStatus::Dropped: return "dropped";
  }
  return "?";
}

std::optional<OrderStatus> parse_status(std::string_view s) {
  if (s == "open") return OrderStatus::Open;
  if (s == "assigned") return OrderStatus::Assigned;
  if (s == "served") return OrderStatus::Served;
  if (s == "dropped") return OrderStatus::Dropped;
  return std::nullopt;
}

double Trip::total_distance() const {
  return std::accumulate(leg_distances.begin(), leg_distances.end(), 0.0) + return_distance;
}

double capacity_utilization(const Trip& trip, int capacity) {
  return static_cast<double>(trip.load) / static_cast<double>(capacity);
}

RouteTiming time_route(const Point& depot, double start, std::span<const Stop> stops,
                       double speed, double service_time) {
  RouteTiming timing;
  timing.arrival.reserve(stops.size());
  timing.service_start.reserve(stops.size());
  timing.leg_distance.reserve(stops.size());
  Point here = depot;
  double ready = start;
  for (const Stop& stop : stops) {
    const double leg = distance(here, stop.location);
    const double arrival = ready + leg / speed;
    const double begin = std::max(arrival, stop.window_open);
    timing.leg_distance.push_back(leg);
    timing.arrival.push_back(arrival);
    timing.service_start.push_back(begin);
    timing.load += stop.demand;
    ready = begin + service_time;
    here = stop.location;
  }
  timing.return_distance = distance(here, depot);
  timing.return_time = ready + timing.return_distance / speed;
  return timing;
}

std::vector<std::string> route_violations(const RouteTiming& timing,
                                          std::span<const Stop> stops, int capacity) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < stops.size(); ++k) {
    const double s = timing.service_start[k];
    if (s < stops[k].window_open || s > stops[k].window_close) {
      std::ostringstream msg;
      msg << "window violation at stop " << k << ": service " << s << " outside ["
          << stops[k].window_open << ", " << stops[k].window_close << "]";
      out.push_back(msg.str());
    }
  }
  if (timing.load > capacity) {
    std::ostringstream msg;
    msg << "capacity violation: load " << timing.load << " > " << capacity;
    out.push_back(msg.str());
  }
  return out;
}

World::World(const EnvConstants& constants) : constants_(constants) {
  constants_.validate();
  for (int i = 0; i < constants_.num_warehouses; ++i) {
    warehouses_.push_back(
        {i, warehouse_location(i), constants_.max_inventory, constants_.max_inventory});
  }
  fleets_.resize(warehouses_.size());
}

void World::advance_to(double t) {
  if (t < clock_) throw StateError("clock cannot move backwards");
  clock_ = t;
}

const Warehouse& World::warehouse(int id) const { return warehouses_.at(id); }

const std::vector<Vehicle>& World::fleet(int depot) const { return fleets_.at(depot); }

bool World::vehicle_idle_at(int depot, double t) const {
  const auto& f = fleets_.at(depot);
  return std::any_of(f.begin(), f.end(), [t](const Vehicle& v) { return v.available_at <= t; });
}

const Order& World::order(OrderId id) const {
  if (!has_order(id)) throw std::out_of_range("unknown order " + std::to_string(id));
  return orders_[static_cast<std::size_t>(id)];
}

Order& World::mutable_order(OrderId id) {
  if (!has_order(id)) throw std::out_of_range("unknown order " + std::to_string(id));
  return orders_[static_cast<std::size_t>(id)];
}

bool World::has_order(OrderId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < orders_.size();
}

OrderId World::add_order(Order order) {
  if (order.demand < 1 || order.demand > constants_.capacity)
    throw std::invalid_argument("order demand must be in 1..Q");
  if (!(order.window_open < order.window_close))
    throw std::invalid_argument("order window must satisfy open < close");
  if (!on_grid(order.location)) throw std::invalid_argument("order location off grid");
  order.id = static_cast<OrderId>(orders_.size());
  order.status = OrderStatus::Open;
  order.warehouse = -1;
  order.trip_id = -1;
  order.defer_count = 0;
  order.served_at = std::numeric_limits<double>::quiet_NaN();
  orders_.push_back(order);
  return order.id;
}

void World::restock() {
  for (auto& w : warehouses_) w.inventory = w.max_inventory;
}

void World::assign_order(OrderId id, int warehouse_id) {
  Order& o = mutable_order(id);
  if (o.status != OrderStatus::Open)
    throw StateError("order " + std::to_string(id) + " is not open");
  Warehouse& w = warehouses_.at(warehouse_id);
  if (w.inventory < o.demand)
    throw InfeasibleAction("warehouse " + std::to_string(warehouse_id) +
                           " has insufficient inventory for order " + std::to_string(id));
  w.inventory -= o.demand;
  o.status = OrderStatus::Assigned;
  o.warehouse = warehouse_id;
}

DeferOutcome World::defer_order(OrderId id, double now) {
  Order& o = mutable_order(id);
  if (o.status != OrderStatus::Open)
    throw StateError("order " + std::to_string(id) + " is not open");
  if (o.window_close >= now + constants_.wave_period) {
    ++o.defer_count;
    return DeferOutcome::Deferred;
  }
  o.status = OrderStatus::Dropped;
  return DeferOutcome::Dropped;
}

void World::drop_assigned(OrderId id) {
  Order& o = mutable_order(id);
  if (o.status != OrderStatus::Assigned)
    throw StateError("order " + std::to_string(id) + " is not assigned");
  warehouses_.at(o.warehouse).inventory += o.demand;
  o.status = OrderStatus::Dropped;
}

std::vector<OrderId> World::drop_expired(double now) {
  std::vector<OrderId> dropped;
  for (auto& o : orders_) {
    if (o.window_close >= now) continue;
    if (o.status == OrderStatus::Open) {
      o.status = OrderStatus::Dropped;
      dropped.push_back(o.id);
    } else if (o.status == OrderStatus::Assigned) {
      warehouses_.at(o.warehouse).inventory += o.demand;
      o.status = OrderStatus::Dropped;
      dropped.push_back(o.id);
    }
  }
  return dropped;
}

Vehicle& World::pick_vehicle(int depot, double start_time) {
  auto& f = fleets_.at(depot);
  Vehicle* best = nullptr;
  for (auto& v : f) {
    if (v.available_at > start_time) continue;
    if (best == nullptr || v.available_at < best->available_at ||
        (v.available_at == best->available_at && v.id < best->id))
      best = &v;
  }
  if (best != nullptr) return *best;
  f.push_back({next_vehicle_id_++, depot, start_time});
  return f.back();
}

Trip World::execute_trip(const TripPlan& plan) {
  std::vector<std::string> violations;
  if (plan.depot < 0 || plan.depot >= static_cast<int>(warehouses_.size()))
    throw TripRejected({"unknown depot " + std::to_string(plan.depot)});
  if (plan.orders.empty()) throw TripRejected({"trip has no orders"});

  std::vector<Stop> stops;
  stops.reserve(plan.orders.size());
  std::vector<OrderId> seen;
  for (OrderId id : plan.orders) {
    if (!has_order(id)) {
      violations.push_back("unknown order " + std::to_string(id));
      continue;
    }
    const Order& o = orders_[static_cast<std::size_t>(id)];
    if (std::find(seen.begin(), seen.end(), id) != seen.end())
      violations.push_back("order " + std::to_string(id) + " listed twice");
    seen.push_back(id);
    if (o.status != OrderStatus::Assigned || o.warehouse != plan.depot)
      violations.push_back("order " + std::to_string(id) + " is not assigned to depot " +
                           std::to_string(plan.depot));
    stops.push_back({o.location, o.demand, o.window_open, o.window_close});
  }
  if (!violations.empty()) throw TripRejected(std::move(violations));

  const Point depot = warehouses_[static_cast<std::size_t>(plan.depot)].location;
  RouteTiming timing =
      time_route(depot, plan.start_time, stops, constants_.speed, constants_.service_time);
  violations = route_violations(timing, stops, constants_.capacity);
  if (!violations.empty()) throw TripRejected(std::move(violations));

  Vehicle& vehicle = pick_vehicle(plan.depot, plan.start_time);
  Trip trip;
  trip.id = static_cast<int>(trips_.size());
  trip.vehicle = vehicle.id;
  trip.depot = plan.depot;
  trip.start_time = plan.start_time;
  trip.leg_distances = timing.leg_distance;
  trip.return_distance = timing.return_distance;
  trip.return_time = timing.return_time;
  trip.load = timing.load;
  for (std::size_t k = 0; k < plan.orders.size(); ++k) {
    trip.visits.push_back({plan.orders[k], timing.arrival[k], timing.service_start[k]});
    Order& o = orders_[static_cast<std::size_t>(plan.orders[k])];
    o.status = OrderStatus::Served;
    o.served_at = timing.service_start[k];
    o.trip_id = trip.id;
  }
  vehicle.available_at = timing.return_time;
  trips_.push_back(trip);
  return trip;
}

OrderCounts World::counts() const {
  OrderCounts c;
  c.generated = orders_.size();
  for (const auto& o : orders_) {
    switch (o.status) {
      case OrderStatus::Open: ++c.open; break;
      case OrderStatus::Assigned: ++c.assigned; break;
      case OrderStatus::Served: ++c.served; break;
      case OrderStatus::Dropped: ++c.dropped; break;
    }
  }
  return c;
}

std::vector<OrderId> World::open_orders_fcfs() const {
  std::vector<OrderId> ids;
  for (const auto& o : orders_)
    if (o.status == OrderStatus::Open) ids.push_back(o.id);
  std::stable_sort(ids.begin(), ids.end(), [this](OrderId a, OrderId b) {
    const auto& oa = orders_[static_cast<std::size_t>(a)];
    const auto& ob = orders_[static_cast<std::size_t>(b)];
    if (oa.created_at != ob.created_at) return oa.created_at < ob.created_at;
    return a < b;
  });
  return ids;
}

std::vector<OrderId> World::assigned_orders(int depot) const {
  std::vector<OrderId> ids;
  for (const auto& o : orders_)
    if (o.status == OrderStatus::Assigned && o.warehouse == depot) ids.push_back(o.id);
  return ids;
}

}  // namespace c2s
