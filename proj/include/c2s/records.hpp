#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "c2s/env.hpp"
#include "c2s/gae.hpp"
#include "c2s/oracle.hpp"

namespace c2s {

// Line-oriented order records:
// order_id,x,y,m,t,theta_min,theta_max,state,warehouse_id,served_at
// served_at is empty while unserved; warehouse_id is -1 when unassigned.
void write_order_dump(std::ostream& os, std::span<const Order> orders);
std::vector<Order> read_order_dump(std::istream& is);
void write_order_dump_file(const std::string& path, std::span<const Order> orders);
std::vector<Order> read_order_dump_file(const std::string& path);

// trip_id,depot,vehicle,start,order_sequence,leg_distances,load,utilization
// with ';'-separated lists.
void write_trip_log(std::ostream& os, std::span<const Trip> trips, int capacity);

// Header record "depot_x,depot_y,Q,v,delta,start" then order records.
void write_oracle_instance(std::ostream& os, const MicroInstance& instance);
MicroInstance read_oracle_instance(std::istream& is);

struct DecisionTraceRow {
  OrderId order = -1;
  std::uint64_t state_hash = 0;
  int action = 0;
  double settled_reward = 0.0;
};

// order_id,state_hash,action,settled_reward
void write_decision_trace(std::ostream& os, std::span<const DecisionTraceRow> rows);

// One order dump per graph: graph_0000.csv, graph_0001.csv, ...
void save_graph_buffer(const std::string& dir, std::span<const GraphSnapshot> graphs);
std::vector<GraphSnapshot> load_graph_buffer(const std::string& dir,
                                             std::span<const Warehouse> warehouses);

}  // namespace c2s
