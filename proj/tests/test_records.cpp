#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "c2s/demand.hpp"
#include "c2s/micro.hpp"
#include "c2s/records.hpp"

using namespace c2s;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("c2s_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("order dump round trips every field") {
  World w(EnvConstants{});
  Order o;
  o.location = {0.123456789, -0.987654321};
  o.demand = 7;
  o.created_at = 0.0;
  o.window_open = 12.5;
  o.window_close = 80.25;
  const OrderId a = w.add_order(o);
  const OrderId b = w.add_order(o);
  w.assign_order(a, 0);
  w.execute_trip({0, 0.0, {a}});
  (void)b;
  std::stringstream ss;
  write_order_dump(ss, w.orders());
  const auto back = read_order_dump(ss);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& x = w.orders()[i];
    const auto& y = back[i];
    CHECK(x.id == y.id);
    CHECK(x.location == y.location);
    CHECK(x.demand == y.demand);
    CHECK(x.window_open == y.window_open);
    CHECK(x.window_close == y.window_close);
    CHECK(x.status == y.status);
    CHECK(x.warehouse == y.warehouse);
  }
  CHECK(back[0].served_at == w.orders()[0].served_at);
  CHECK(std::isnan(back[1].served_at));
}

TEST_CASE("bad order dumps are rejected") {
  std::istringstream no_header("1,2,3\n");
  CHECK_THROWS(read_order_dump(no_header));
  std::istringstream bad_state(
      "order_id,x,y,m,t,theta_min,theta_max,state,warehouse_id,served_at\n"
      "0,0.1,0.1,1,0,1,2,Lost,-1,\n");
  CHECK_THROWS(read_order_dump(bad_state));
}

TEST_CASE("trip log lists sequences and legs") {
  World w(EnvConstants{});
  Order o;
  o.location = {0.5, 0.6};
  o.demand = 10;
  o.window_open = 0.5;
  o.window_close = 100;
  const OrderId a = w.add_order(o);
  o.location = {0.5, 0.7};
  const OrderId b = w.add_order(o);
  w.assign_order(a, 0);
  w.assign_order(b, 0);
  w.execute_trip({0, 0.0, {a, b}});
  std::ostringstream os;
  write_trip_log(os, w.trips(), 40);
  const std::string text = os.str();
  CHECK(text.find("trip_id,depot,vehicle,start,order_sequence") == 0);
  CHECK(text.find(",0;1,") != std::string::npos);
  CHECK(text.find(",20,0.5\n") != std::string::npos);
}

TEST_CASE("oracle instance round trips") {
  Rng rng(51);
  const auto inst = random_micro_instance(rng, 6);
  std::stringstream ss;
  write_oracle_instance(ss, inst);
  const auto back = read_oracle_instance(ss);
  CHECK(back.depot == inst.depot);
  CHECK(back.capacity == inst.capacity);
  CHECK(back.speed == inst.speed);
  CHECK(back.service_time == inst.service_time);
  REQUIRE(back.orders.size() == inst.orders.size());
  for (std::size_t i = 0; i < inst.orders.size(); ++i) {
    CHECK(back.orders[i].location == inst.orders[i].location);
    CHECK(back.orders[i].demand == inst.orders[i].demand);
    CHECK(back.orders[i].window_open == inst.orders[i].window_open);
    CHECK(back.orders[i].window_close == inst.orders[i].window_close);
  }
}

TEST_CASE("graph buffer round trips") {
  Rng rng(52);
  std::vector<Warehouse> wh;
  for (int i = 0; i < 4; ++i) wh.push_back({i, warehouse_location(i), 500, 500});
  std::vector<GraphSnapshot> graphs;
  for (int g = 0; g < 3; ++g) {
    std::vector<Point> pts;
    std::vector<OrderId> ids;
    for (int k = 0; k < 12; ++k) {
      pts.push_back(sample_location(rng, kUniformWeights));
      ids.push_back(100 * g + k);
    }
    graphs.push_back(build_graph(pts, wh, ids));
  }
  const auto dir = scratch("graphs");
  save_graph_buffer(dir.string(), graphs);
  const auto back = load_graph_buffer(dir.string(), wh);
  REQUIRE(back.size() == graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    CHECK(back[g].order_ids == graphs[g].order_ids);
    CHECK(back[g].features == graphs[g].features);
    CHECK(back[g].adjacency == graphs[g].adjacency);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("decision trace format") {
  std::vector<DecisionTraceRow> rows{{3, 0xabcULL, 4, -9.0}};
  std::ostringstream os;
  write_decision_trace(os, rows);
  CHECK(os.str() == "order_id,state_hash,action,settled_reward\n3,0000000000000abc,4,-9\n");
}
