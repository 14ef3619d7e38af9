#include <doctest.h>

#include <cmath>
#include <random>

#include "c2s/env.hpp"
#include "c2s/rng.hpp"

using namespace c2s;

namespace {

Order make_order(Point p, int demand, double open, double close, double created = 0.0) {
  Order o;
  o.location = p;
  o.demand = demand;
  o.created_at = created;
  o.window_open = open;
  o.window_close = close;
  return o;
}

}  // namespace

TEST_CASE("default world has four quadrant warehouses at full stock") {
  World w(EnvConstants{});
  REQUIRE(w.warehouses().size() == 4);
  const Point expected[4] = {{0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}, {0.5, -0.5}};
  for (int i = 0; i < 4; ++i) {
    CHECK(w.warehouse(i).location.x == expected[i].x);
    CHECK(w.warehouse(i).location.y == expected[i].y);
    CHECK(w.warehouse(i).inventory == 500);
    CHECK(w.fleet(i).empty());
  }
  CHECK(w.clock() == 0.0);
}

TEST_CASE("wave count and single depot override") {
  EnvConstants env;
  env.horizon = 1000;
  CHECK(env.num_waves() == 10);
  env.num_warehouses = 1;
  World w(env);
  CHECK(w.warehouses().size() == 1);
}

TEST_CASE("invalid constants are rejected with every problem") {
  EnvConstants env;
  env.wave_period = 300;
  env.horizon = 300;
  env.capacity = -1;
  env.speed = 0;
  env.service_time = -2;
  try {
    World w(env);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() >= 4);
  }
}

TEST_CASE("distance examples and metric properties") {
  CHECK(distance({0.5, 0.5}, {-1, -1}) == doctest::Approx(2.1213).epsilon(1e-4));
  CHECK(distance({0.3, -0.2}, {0.3, -0.2}) == 0.0);
  CHECK(distance({0.5, 0.5}, {0.5, -0.5}) == doctest::Approx(1.0));
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    CHECK(distance(a, b) >= 0.0);
    CHECK(distance(a, b) == distance(b, a));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
  }
}

TEST_CASE("restock resets stock and is idempotent") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.5, 0.5}, 5, 20, 80));
  w.assign_order(a, 0);
  CHECK(w.warehouse(0).inventory == 495);
  w.restock();
  for (const auto& wh : w.warehouses()) CHECK(wh.inventory == 500);
  w.restock();
  for (const auto& wh : w.warehouses()) CHECK(wh.inventory == 500);
}

TEST_CASE("assign_order boundaries") {
  EnvConstants env;
  env.max_inventory = 10;
  World w(env);
  const OrderId a = w.add_order(make_order({0.5, 0.5}, 10, 20, 80));
  w.assign_order(a, 0);
  CHECK(w.order(a).status == OrderStatus::Assigned);
  CHECK(w.order(a).warehouse == 0);
  CHECK(w.warehouse(0).inventory == 0);

  env.max_inventory = 9;
  World w2(env);
  const OrderId b = w2.add_order(make_order({0.5, 0.5}, 10, 20, 80));
  CHECK_THROWS_AS(w2.assign_order(b, 0), InfeasibleAction);
  CHECK(w2.order(b).status == OrderStatus::Open);
  CHECK(w2.warehouse(0).inventory == 9);

  World w3(EnvConstants{});
  const OrderId c = w3.add_order(make_order({0.5, 0.5}, 5, 20, 80));
  w3.assign_order(c, 2);
  CHECK(w3.warehouse(2).inventory == 495);
  CHECK_THROWS_AS(w3.assign_order(c, 1), StateError);
}

TEST_CASE("defer_order keeps or drops depending on the next epoch") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.1, 0.1}, 3, 20, 150));
  CHECK(w.defer_order(a, 0) == DeferOutcome::Deferred);
  CHECK(w.order(a).defer_count == 1);
  CHECK(w.order(a).status == OrderStatus::Open);

  const OrderId b = w.add_order(make_order({0.1, 0.1}, 3, 20, 50));
  CHECK(w.defer_order(b, 0) == DeferOutcome::Dropped);
  CHECK(w.order(b).status == OrderStatus::Dropped);
  CHECK_THROWS_AS(w.defer_order(b, 0), StateError);

  const OrderId c = w.add_order(make_order({0.1, 0.1}, 3, 20, 1000));
  for (int k = 0; k < 3; ++k) CHECK(w.defer_order(c, 100.0 * k) == DeferOutcome::Deferred);
  CHECK(w.order(c).defer_count == 3);
}

TEST_CASE("execute_trip timing example") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.5, 0.3}, 4, 0.5, 100));
  w.assign_order(a, 0);
  // Window opens before arrival, so service starts on arrival.
  const Trip t = w.execute_trip({0, 0.0, {a}});
  REQUIRE(t.visits.size() == 1);
  CHECK(t.visits[0].arrival == doctest::Approx(2.0));
  CHECK(t.visits[0].service_start == doctest::Approx(2.0));
  CHECK(t.return_time == doctest::Approx(5.0));
  CHECK(w.order(a).status == OrderStatus::Served);
  CHECK(w.order(a).served_at == doctest::Approx(2.0));
  CHECK(w.fleet(0).size() == 1);
  CHECK(w.fleet(0)[0].available_at == doctest::Approx(5.0));
  CHECK(w.vehicle_idle_at(0, 5.0));
  CHECK_FALSE(w.vehicle_idle_at(0, 4.0));
}

TEST_CASE("execute_trip waits for the window to open") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.5, -0.5}, 4, 50, 60));
  w.assign_order(a, 0);
  const Trip t = w.execute_trip({0, 30.0, {a}});  // arrives at 40
  CHECK(t.visits[0].arrival == doctest::Approx(40.0));
  CHECK(t.visits[0].service_start == doctest::Approx(50.0));
}

TEST_CASE("execute_trip rejects capacity and window violations without mutating") {
  World w(EnvConstants{});
  std::vector<OrderId> ids;
  for (int k = 0; k < 5; ++k) {
    ids.push_back(w.add_order(make_order({0.5 + 0.05 * k, 0.5}, 10, 1, 300)));
    w.assign_order(ids.back(), 0);
  }
  try {
    w.execute_trip({0, 0.0, ids});
    FAIL("expected rejection");
  } catch (const TripRejected& e) {
    REQUIRE_FALSE(e.violations().empty());
    CHECK(e.violations().back().find("capacity") != std::string::npos);
  }
  for (OrderId id : ids) CHECK(w.order(id).status == OrderStatus::Assigned);
  CHECK(w.trips().empty());
  CHECK(w.fleet(0).empty());

  const OrderId late = w.add_order(make_order({-0.9, -0.9}, 1, 1, 2));
  w.assign_order(late, 0);
  CHECK_THROWS_AS(w.execute_trip({0, 0.0, {late}}), TripRejected);
  CHECK_THROWS_AS(w.execute_trip({0, 0.0, {12345}}), TripRejected);
}

TEST_CASE("window end is inclusive") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.5, 0.3}, 4, 1, 2.0));
  w.assign_order(a, 0);
  const Trip t = w.execute_trip({0, 0.0, {a}});
  CHECK(t.visits[0].service_start == doctest::Approx(2.0));
}

TEST_CASE("capacity utilization examples") {
  Trip t;
  t.load = 20;
  CHECK(capacity_utilization(t, 40) == doctest::Approx(0.5));
  t.load = 40;
  CHECK(capacity_utilization(t, 40) == doctest::Approx(1.0));
  t.load = 10;
  CHECK(capacity_utilization(t, 40) == doctest::Approx(0.25));

  World w(EnvConstants{});
  std::vector<OrderId> ids;
  for (int m : {5, 10, 5}) {
    ids.push_back(w.add_order(make_order({0.6, 0.6}, m, 1, 300)));
    w.assign_order(ids.back(), 0);
  }
  CHECK(capacity_utilization(w.execute_trip({0, 0.0, ids}), 40) == doctest::Approx(0.5));
}

TEST_CASE("drop_expired uses an inclusive window end and returns stock") {
  World w(EnvConstants{});
  const OrderId a = w.add_order(make_order({0.1, 0.1}, 3, 20, 99));
  const OrderId b = w.add_order(make_order({0.1, 0.1}, 3, 20, 100));
  const OrderId c = w.add_order(make_order({0.6, 0.6}, 6, 20, 60));
  const OrderId d = w.add_order(make_order({0.6, 0.6}, 4, 1, 60));
  w.assign_order(c, 0);
  w.assign_order(d, 0);
  w.execute_trip({0, 0.0, {d}});
  CHECK(w.warehouse(0).inventory == 490);
  const auto dropped = w.drop_expired(100);
  CHECK(dropped == std::vector<OrderId>{a, c});
  CHECK(w.order(b).status == OrderStatus::Open);
  CHECK(w.order(d).status == OrderStatus::Served);
  CHECK(w.warehouse(0).inventory == 496);
}

TEST_CASE("add_order validates its input") {
  World w(EnvConstants{});
  CHECK_THROWS_AS(w.add_order(make_order({0, 0}, 0, 1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(w.add_order(make_order({0, 0}, 41, 1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(w.add_order(make_order({0, 0}, 1, 2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(w.add_order(make_order({1.5, 0}, 1, 1, 2)), std::invalid_argument);
}

TEST_CASE("random lifecycle keeps conservation and trip feasibility") {
  Rng rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> m(1, 10);
  std::uniform_real_distribution<double> off(20, 80), width(10, 200);
  for (int episode = 0; episode < 20; ++episode) {
    EnvConstants env;
    env.max_inventory = 60;
    World w(env);
    for (int wave = 0; wave < 3; ++wave) {
      const double now = 100.0 * wave;
      w.advance_to(now);
      w.restock();
      for (const auto& wh : w.warehouses()) CHECK(wh.inventory == env.max_inventory);
      for (int k = 0; k < 25; ++k) {
        const double open = now + off(rng);
        w.add_order(make_order({u(rng), u(rng)}, m(rng), open, open + width(rng), now));
      }
      w.drop_expired(now);
      for (OrderId id : w.open_orders_fcfs()) {
        const Order& o = w.order(id);
        const int wh = quadrant_of(o.location);
        if (w.warehouse(wh).inventory >= o.demand)
          w.assign_order(id, wh);
        else
          w.defer_order(id, now);
      }
      for (int d = 0; d < 4; ++d) {
        for (OrderId id : w.assigned_orders(d)) {
          try {
            w.execute_trip({d, now, {id}});
          } catch (const TripRejected&) {
            w.drop_assigned(id);
          }
        }
      }
      for (const auto& wh : w.warehouses()) CHECK(wh.inventory >= 0);
      const OrderCounts c = w.counts();
      CHECK(c.generated == c.open + c.assigned + c.served + c.dropped);
    }
    for (const Trip& t : w.trips()) {
      const Point depot = w.warehouse(t.depot).location;
      Point here = depot;
      double ready = t.start_time;
      int load = 0;
      for (std::size_t k = 0; k < t.visits.size(); ++k) {
        const Order& o = w.order(t.visits[k].order);
        CHECK(o.trip_id == t.id);
        const double leg = distance(here, o.location);
        CHECK(t.visits[k].service_start >= ready + leg / env.speed - 1e-9);
        CHECK(t.visits[k].service_start >= o.window_open);
        CHECK(t.visits[k].service_start <= o.window_close);
        ready = t.visits[k].service_start + env.service_time;
        here = o.location;
        load += o.demand;
      }
      CHECK(load <= env.capacity);
      CHECK(t.return_time == doctest::Approx(ready + distance(here, depot) / env.speed));
    }
  }
}

TEST_CASE("status names round trip") {
  for (auto s : {OrderStatus::Open, OrderStatus::Assigned, OrderStatus::Served, OrderStatus::Dropped})
    CHECK(parse_status(to_string(s)) == s);
  CHECK_FALSE(parse_status("bogus").has_value());
}
