#include "c2s/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "c2s/text.hpp"

namespace c2s {

namespace {

constexpr const char* kOrderHeader =
    "order_id,x,y,m,t,theta_min,theta_max,state,warehouse_id,served_at";
constexpr const char* kTripHeader =
    "trip_id,depot,vehicle,start,order_sequence,leg_distances,load,utilization";
constexpr const char* kInstanceHeader = "depot_x,depot_y,Q,v,delta,start";

using text::format_real;

void write_order(std::ostream& os, const Order& o) {
  os << o.id << ',' << format_real(o.location.x) << ',' << format_real(o.location.y) << ','
     << o.demand << ',' << format_real(o.created_at) << ',' << format_real(o.window_open) << ','
     << format_real(o.window_close) << ',' << to_string(o.status) << ',' << o.warehouse << ',';
  if (!std::isnan(o.served_at)) os << format_real(o.served_at);
  os << '\n';
}

Order parse_order(const std::string& line, int lineno) {
  const auto f = text::split(text::trim(line), ',');
  const std::string where = "order record line " + std::to_string(lineno) + ": ";
  if (f.size() != 10) throw std::runtime_error(where + "expected 10 fields");
  Order o;
  try {
    o.id = static_cast<OrderId>(text::to_integer(f[0]));
    o.location = {text::to_double(f[1]), text::to_double(f[2])};
    o.demand = static_cast<int>(text::to_integer(f[3]));
    o.created_at = text::to_double(f[4]);
    o.window_open = text::to_double(f[5]);
    o.window_close = text::to_double(f[6]);
    const auto status = parse_status(text::trim(f[7]));
    if (!status) throw std::invalid_argument("unknown state '" + f[7] + "'");
    o.status = *status;
    o.warehouse = static_cast<int>(text::to_integer(f[8]));
    if (!text::trim(f[9]).empty()) o.served_at = text::to_double(f[9]);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(where + e.what());
  }
  return o;
}

std::vector<Order> read_orders(std::istream& is, int lineno) {
  std::vector<Order> out;
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    out.push_back(parse_order(line, lineno));
  }
  return out;
}

void expect_header(std::istream& is, const char* header, const char* what) {
  std::string line;
  if (!std::getline(is, line) || text::trim(line) != header)
    throw std::runtime_error(std::string(what) + ": expected header '" + header + "'");
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ";" : "") + fmt(items[i]);
  return out;
}

}  // namespace

void write_order_dump(std::ostream& os, std::span<const Order> orders) {
  os << kOrderHeader << '\n';
  for (const auto& o : orders) write_order(os, o);
}

std::vector<Order> read_order_dump(std::istream& is) {
  expect_header(is, kOrderHeader, "order dump");
  return read_orders(is, 1);
}

void write_order_dump_file(const std::string& path, std::span<const Order> orders) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_order_dump(os, orders);
}

std::vector<Order> read_order_dump_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_order_dump(is);
}

void write_trip_log(std::ostream& os, std::span<const Trip> trips, int capacity) {
  os << kTripHeader << '\n';
  for (const auto& t : trips) {
    std::vector<OrderId> ids;
    for (const auto& v : t.visits) ids.push_back(v.order);
    os << t.id << ',' << t.depot << ',' << t.vehicle << ',' << format_real(t.start_time) << ','
       << join(ids, [](OrderId id) { return std::to_string(id); }) << ','
       << join(t.leg_distances, [](double d) { return format_real(d); }) << ',' << t.load << ','
       << format_real(capacity_utilization(t, capacity)) << '\n';
  }
}

void write_oracle_instance(std::ostream& os, const MicroInstance& instance) {
  os << kInstanceHeader << '\n';
  os << format_real(instance.depot.x) << ',' << format_real(instance.depot.y) << ','
     << instance.capacity << ',' << format_real(instance.speed) << ','
     << format_real(instance.service_time) << ',' << format_real(instance.start) << '\n';
  os << kOrderHeader << '\n';
  OrderId id = 0;
  for (const auto& s : instance.orders) {
    Order o;
    o.id = id++;
    o.location = s.location;
    o.demand = s.demand;
    o.created_at = instance.start;
    o.window_open = s.window_open;
    o.window_close = s.window_close;
    write_order(os, o);
  }
}

MicroInstance read_oracle_instance(std::istream& is) {
  expect_header(is, kInstanceHeader, "oracle instance");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("oracle instance: missing depot record");
  const auto f = text::split(text::trim(line), ',');
  if (f.size() != 6) throw std::runtime_error("oracle instance line 2: expected 6 fields");
  MicroInstance inst;
  try {
    inst.depot = {text::to_double(f[0]), text::to_double(f[1])};
    inst.capacity = static_cast<int>(text::to_integer(f[2]));
    inst.speed = text::to_double(f[3]);
    inst.service_time = text::to_double(f[4]);
    inst.start = text::to_double(f[5]);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("oracle instance line 2: ") + e.what());
  }
  expect_header(is, kOrderHeader, "oracle instance");
  for (const auto& o : read_orders(is, 3))
    inst.orders.push_back({o.location, o.demand, o.window_open, o.window_close});
  return inst;
}

void write_decision_trace(std::ostream& os, std::span<const DecisionTraceRow> rows) {
  os << "order_id,state_hash,action,settled_reward\n";
  char hash[32];
  for (const auto& r : rows) {
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.state_hash));
    os << r.order << ',' << hash << ',' << r.action << ',' << format_real(r.settled_reward) << '\n';
  }
}

void save_graph_buffer(const std::string& dir, std::span<const GraphSnapshot> graphs) {
  std::filesystem::create_directories(dir);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const auto& graph = graphs[g];
    std::vector<Order> orders;
    for (int k = 0; k < graph.size(); ++k) {
      Order o;
      o.id = k < static_cast<int>(graph.order_ids.size()) ? graph.order_ids[static_cast<std::size_t>(k)] : k;
      o.location = {graph.features(k, 0), graph.features(k, 1)};
      orders.push_back(o);
    }
    char name[32];
    std::snprintf(name, sizeof name, "graph_%04zu.csv", g);
    write_order_dump_file((std::filesystem::path(dir) / name).string(), orders);
  }
}

std::vector<GraphSnapshot> load_graph_buffer(const std::string& dir,
                                             std::span<const Warehouse> warehouses) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<GraphSnapshot> out;
  for (const auto& f : files) {
    const auto orders = read_order_dump_file(f.string());
    std::vector<Point> points;
    std::vector<OrderId> ids;
    for (const auto& o : orders) {
      points.push_back(o.location);
      ids.push_back(o.id);
    }
    out.push_back(build_graph(points, warehouses, ids));
  }
  return out;
}

}  // namespace c2s
