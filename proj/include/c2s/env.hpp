#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2s/geometry.hpp"

namespace c2s {

using OrderId = int;

// Invalid configuration. Carries every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// An action the caller should have masked out (e.g. assigning to a warehouse
// without enough stock).
class InfeasibleAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lifecycle violation: acting on an order in the wrong state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TripRejected : public std::runtime_error {
 public:
  explicit TripRejected(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct EnvConstants {
  int num_warehouses = 4;
  double wave_period = 100.0;  // T
  double horizon = 300.0;      // tau, episode length
  int capacity = 40;           // Q, identical across the fleet
  double speed = 0.1;          // v, normalized distance per time unit
  double service_time = 1.0;   // Delta
  int max_inventory = 500;     // P_max, identical across warehouses
  // Restock every T/2 instead of every T. Decisions only happen at wave
  // boundaries, so this changes the event log but not the stock seen.
  bool restock_half_period = false;

  void validate() const;
  int num_waves() const;
};

// Quadrant centers in the order (+,+), (-,+), (-,-), (+,-). Only the first
// n are used when fewer warehouses are configured.
Point warehouse_location(int index);
// Quadrant index (same order as warehouse_location) containing p.
int quadrant_of(const Point& p);

enum class OrderStatus { Open, Assigned, Served, Dropped };

const char* to_string(OrderStatus s);
std::optional<OrderStatus> parse_status(std::string_view s);

struct Order {
  OrderId id = -1;
  int demand = 0;  // m
  Point location;
  double created_at = 0.0;
  double window_open = 0.0;   // theta_min
  double window_close = 0.0;  // theta_max, inclusive
  OrderStatus status = OrderStatus::Open;
  int warehouse = -1;  // set on assignment
  double served_at = std::numeric_limits<double>::quiet_NaN();
  int trip_id = -1;
  int defer_count = 0;  // h
};

struct Warehouse {
  int id = 0;
  Point location;
  int inventory = 0;
  int max_inventory = 0;
};

struct Vehicle {
  int id = 0;
  int home_depot = 0;
  double available_at = 0.0;
};

struct Visit {
  OrderId order = -1;
  double arrival = 0.0;
  double service_start = 0.0;
};

struct Trip {
  int id = 0;
  int vehicle = 0;
  int depot = 0;
  double start_time = 0.0;
  std::vector<Visit> visits;
  // leg_distances[k] is the distance driven to reach visits[k].
  std::vector<double> leg_distances;
  double return_distance = 0.0;
  double return_time = 0.0;
  int load = 0;

  double total_distance() const;
};

double capacity_utilization(const Trip& trip, int capacity);

// A customer stop as seen by routing code: everything needed to time a route.
struct Stop {
  Point location;
  int demand = 0;
  double window_open = 0.0;
  double window_close = 0.0;
};

struct RouteTiming {
  std::vector<double> arrival;
  std::vector<double> service_start;
  std::vector<double> leg_distance;
  double return_distance = 0.0;
  double return_time = 0.0;
  int load = 0;
};

// Times a route that leaves `depot` at `start`, waiting at each stop until
// its window opens. Does not check feasibility.
RouteTiming time_route(const Point& depot, double start, std::span<const Stop> stops,
                       double speed, double service_time);

// Window and capacity violations of a timed route; empty when feasible.
std::vector<std::string> route_violations(const RouteTiming& timing,
                                          std::span<const Stop> stops, int capacity);

struct TripPlan {
  int depot = 0;
  double start_time = 0.0;
  std::vector<OrderId> orders;
};

enum class DeferOutcome { Deferred, Dropped };

struct OrderCounts {
  std::size_t generated = 0;
  std::size_t open = 0;
  std::size_t assigned = 0;
  std::size_t served = 0;
  std::size_t dropped = 0;
};

// Single-owner world model for one episode.
class World {
 public:
  explicit World(const EnvConstants& constants);

  const EnvConstants& constants() const { return constants_; }
  double clock() const { return clock_; }
  void advance_to(double t);

  const std::vector<Warehouse>& warehouses() const { return warehouses_; }
  const Warehouse& warehouse(int id) const;
  const std::vector<Vehicle>& fleet(int depot) const;
  bool vehicle_idle_at(int depot, double t) const;

  // Ids are dense: order(id) is orders()[id].
  const std::vector<Order>& orders() const { return orders_; }
  const Order& order(OrderId id) const;
  bool has_order(OrderId id) const;
  OrderId add_order(Order order);

  void restock();
  void assign_order(OrderId id, int warehouse);
  DeferOutcome defer_order(OrderId id, double now);
  // Drops an Assigned order that routing could not serve; its stock goes back.
  void drop_assigned(OrderId id);
  std::vector<OrderId> drop_expired(double now);
  Trip execute_trip(const TripPlan& plan);

  const std::vector<Trip>& trips() const { return trips_; }
  OrderCounts counts() const;
  // Open orders sorted first-come-first-served (creation time, then id).
  std::vector<OrderId> open_orders_fcfs() const;
  std::vector<OrderId> assigned_orders(int depot) const;

 private:
  Order& mutable_order(OrderId id);
  Vehicle& pick_vehicle(int depot, double start_time);

  EnvConstants constants_;
  double clock_ = 0.0;
  std::vector<Warehouse> warehouses_;
  std::vector<std::vector<Vehicle>> fleets_;
  int next_vehicle_id_ = 0;
  std::vector<Order> orders_;
  std::vector<Trip> trips_;
};

}  // namespace c2s
