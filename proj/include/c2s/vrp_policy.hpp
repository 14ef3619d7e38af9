#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "c2s/env.hpp"
#include "c2s/nn.hpp"

namespace c2s {

// An assigned, unserved order as the router sees it.
struct RouteOrder {
  OrderId id = -1;
  Point location;
  int demand = 0;
  double window_open = 0.0;
  double window_close = 0.0;
};

struct Clustering {
  std::vector<std::vector<int>> clusters;  // member indices, leader first
  std::vector<int> cluster_of;             // per order index
  double radius = 0.0;                     // joining radius used
  double rho = 0.0;                        // neighbourhood radius
};

inline constexpr double kMinNeighbourhoodRadius = 1e-3;

// Greedy leader clustering in window-opening order. An order joins the first
// cluster whose leader lies within half the median pairwise distance, else
// founds a new cluster. rho is the largest member-to-leader distance.
Clustering cluster_orders(std::span<const RouteOrder> orders);

// Everything the router needs for one depot in one wave.
struct RoutingContext {
  int depot_id = 0;
  Point depot;
  double now = 0.0;
  int capacity = 0;
  double speed = 0.0;
  double service_time = 0.0;
  std::vector<RouteOrder> orders;  // sorted by (window_open, id)
  Clustering clustering;
  double d_max = 0.0;       // largest pairwise distance, depot included
  double t_max = 0.0;       // d_max / v + Delta
  double tau_thresh = 0.0;  // median pairwise customer travel time

  double rho() const { return clustering.rho; }
  int cluster_of(int idx) const { return clustering.cluster_of[static_cast<std::size_t>(idx)]; }
  const std::vector<int>& cluster(int c) const {
    return clustering.clusters[static_cast<std::size_t>(c)];
  }
};

RoutingContext make_context(int depot_id, const Point& depot, double now, int capacity,
                            double speed, double service_time, std::vector<RouteOrder> orders);
RoutingContext make_context(const World& world, int depot, double now);

// A vehicle part-way through building a trip.
struct VehicleState {
  Point position;
  int at = -1;  // order index, -1 at depot
  double ready = 0.0;
  int remaining = 0;
  std::vector<int> route;  // order indices served so far

  static VehicleState fresh(const RoutingContext& ctx);
};

double arrival_time(const RoutingContext& ctx, const VehicleState& v, int idx);
double service_start(const RoutingContext& ctx, const VehicleState& v, int idx);
bool is_feasible(const RoutingContext& ctx, const VehicleState& v, int idx);
// Vehicle state after serving idx.
VehicleState advance(const RoutingContext& ctx, const VehicleState& v, int idx);

// Unfinished orders the vehicle can still serve: enough capacity left and
// service can start no later than the window close (waiting allowed).
std::vector<int> feasible_candidates(const RoutingContext& ctx, const VehicleState& v,
                                     const std::vector<bool>& done);

inline constexpr int kVrpFeatureCount = 17;
using VrpFeatures = std::array<double, kVrpFeatureCount>;

enum VrpFeature : int {
  kDist,
  kDistShort,
  kTimeGap,
  kTimeShort,
  kSameCluster,
  kNonMemberDist,
  kClusterLeft,
  kDropFar,
  kDropClose,
  kDropLong,
  kServedInCluster,
  kClusterDemandFits,
  kHops,
  kClusterTimeFits,
  kUrgency,
  kTimePerLoad,
  kRemote,
};

VrpFeatures vrp_features(const RoutingContext& ctx, const VehicleState& v,
                         const std::vector<bool>& done, int candidate);

enum class SelectMode { Explore, Exploit, Eval };

// Index into `values` or nullopt (close the trip) when there is nothing to
// choose from. Explore: uniform. Exploit: softmax sample. Eval: argmax.
std::optional<std::size_t> vrp_select(std::span<const double> values, SelectMode mode, Rng& rng);

double vrp_step_reward(double rho, double leg_distance, double gap_time, double d_max,
                       double t_max, double tau_thresh);
// 2 rho - (sum of legs + return leg) / (P + 1), with P = legs.size().
double vrp_terminal_reward(double rho, std::span<const double> legs, double return_distance);
// Decision p (1-based) of P receives partial_p + gamma^(P-p) * terminal.
std::vector<double> settle_trip_rewards(std::span<const double> partials, double terminal,
                                        double gamma);

struct RouteStep {
  int order = -1;  // index into the context's orders
  double leg_distance = 0.0;
  double gap_time = 0.0;  // from ready at the previous stop to service start
  VrpFeatures features{};
};

struct PlannedRoute {
  std::vector<RouteStep> steps;
  double return_distance = 0.0;
  int load = 0;
};

struct RoutingResult {
  std::vector<PlannedRoute> routes;
  std::vector<int> dropped;  // infeasible even for a fresh vehicle

  std::vector<std::vector<OrderId>> order_sequences(const RoutingContext& ctx) const;
};

// Picks the next stop from the candidate list (indices into ctx.orders).
using StopSelector = std::function<std::size_t(const RoutingContext&, const VehicleState&,
                                               const std::vector<bool>& done,
                                               std::span<const int> candidates)>;

// Shared dispatch loop: keep sending fresh vehicles from the depot, each
// serving selected stops until nothing is feasible, until every order is
// served or infeasible for a fresh vehicle.
RoutingResult build_routes(const RoutingContext& ctx, const StopSelector& select,
                           bool record_features);

// Baseline: always the first feasible order in window-opening order.
RoutingResult vrp_heuristic(const RoutingContext& ctx);

struct VrpExperience {
  VrpFeatures features{};
  double reward = 0.0;
};

struct VrpSettings {
  double gamma = 0.9;
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t replay_capacity = 100000;
};

double vrp_train_batch(DenseNet& net, std::span<const VrpExperience> batch, double lr);

// Value net over vehicle-customer pairs: 17 -> 128 -> 64 -> 32 -> 8 -> 1.
class VrpAgent {
 public:
  explicit VrpAgent(Rng& rng, VrpSettings settings = {});
  explicit VrpAgent(DenseNet net, VrpSettings settings = {});

  const DenseNet& net() const { return net_; }
  DenseNet& net() { return net_; }
  const VrpSettings& settings() const { return settings_; }
  ReplayBuffer<VrpExperience>& replay() { return replay_; }
  const ReplayBuffer<VrpExperience>& replay() const { return replay_; }

  std::vector<double> values(std::span<const VrpFeatures> features) const;

  // Routes one depot. With training set, each decision explores with
  // probability epsilon and otherwise samples the softmax; without it,
  // decisions are argmax.
  RoutingResult route(const RoutingContext& ctx, bool training, double epsilon, Rng& rng) const;

  // Finalized experiences for every decision of a routing result.
  std::vector<VrpExperience> experiences(const RoutingContext& ctx,
                                         const RoutingResult& result) const;

  std::optional<double> train_step(Rng& rng);

 private:
  DenseNet net_;
  VrpSettings settings_;
  ReplayBuffer<VrpExperience> replay_;
};

double median(std::vector<double> values);

}  // namespace c2s
