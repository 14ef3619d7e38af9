#include "c2s/vrp_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace c2s {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::vector<double> pairwise_distances(std::span<const RouteOrder> orders) {
  std::vector<double> out;
  for (std::size_t i = 0; i < orders.size(); ++i)
    for (std::size_t j = i + 1; j < orders.size(); ++j)
      out.push_back(distance(orders[i].location, orders[j].location));
  return out;
}

bool window_order(const RouteOrder& a, const RouteOrder& b) {
  if (a.window_open != b.window_open) return a.window_open < b.window_open;
  return a.id < b.id;
}

}  // namespace

Clustering cluster_orders(std::span<const RouteOrder> orders) {
  Clustering c;
  c.cluster_of.assign(orders.size(), -1);
  c.radius = 0.5 * median(pairwise_distances(orders));
  std::vector<int> visit(orders.size());
  std::iota(visit.begin(), visit.end(), 0);
  std::stable_sort(visit.begin(), visit.end(), [&](int a, int b) {
    return window_order(orders[static_cast<std::size_t>(a)], orders[static_cast<std::size_t>(b)]);
  });
  double rho = 0.0;
  for (int idx : visit) {
    const Point& p = orders[static_cast<std::size_t>(idx)].location;
    int joined = -1;
    for (std::size_t k = 0; k < c.clusters.size(); ++k) {
      const Point& leader = orders[static_cast<std::size_t>(c.clusters[k].front())].location;
      const double d = distance(p, leader);
      if (d <= c.radius) {
        joined = static_cast<int>(k);
        rho = std::max(rho, d);
        break;
      }
    }
    if (joined < 0) {
      joined = static_cast<int>(c.clusters.size());
      c.clusters.emplace_back();
    }
    c.clusters[static_cast<std::size_t>(joined)].push_back(idx);
    c.cluster_of[static_cast<std::size_t>(idx)] = joined;
  }
  c.rho = std::max(rho, kMinNeighbourhoodRadius);
  return c;
}

RoutingContext make_context(int depot_id, const Point& depot, double now, int capacity,
                            double speed, double service_time, std::vector<RouteOrder> orders) {
  RoutingContext ctx;
  ctx.depot_id = depot_id;
  ctx.depot = depot;
  ctx.now = now;
  ctx.capacity = capacity;
  ctx.speed = speed;
  ctx.service_time = service_time;
  std::stable_sort(orders.begin(), orders.end(), window_order);
  ctx.orders = std::move(orders);
  ctx.clustering = cluster_orders(ctx.orders);

  const std::vector<double> pair_d = pairwise_distances(ctx.orders);
  double d_max = pair_d.empty() ? 0.0 : *std::max_element(pair_d.begin(), pair_d.end());
  for (const auto& o : ctx.orders) d_max = std::max(d_max, distance(depot, o.location));
  ctx.d_max = std::max(d_max, kMinNeighbourhoodRadius);
  ctx.t_max = ctx.d_max / speed + service_time;
  if (!pair_d.empty()) {
    ctx.tau_thresh = median(pair_d) / speed;
  } else if (!ctx.orders.empty()) {
    ctx.tau_thresh = distance(depot, ctx.orders.front().location) / speed;
  }
  return ctx;
}

RoutingContext make_context(const World& world, int depot, double now) {
  std::vector<RouteOrder> orders;
  for (OrderId id : world.assigned_orders(depot)) {
    const Order& o = world.order(id);
    orders.push_back({o.id, o.location, o.demand, o.window_open, o.window_close});
  }
  const EnvConstants& env = world.constants();
  return make_context(depot, world.warehouse(depot).location, now, env.capacity, env.speed,
                      env.service_time, std::move(orders));
}

VehicleState VehicleState::fresh(const RoutingContext& ctx) {
  VehicleState v;
  v.position = ctx.depot;
  v.ready = ctx.now;
  v.remaining = ctx.capacity;
  return v;
}

double arrival_time(const RoutingContext& ctx, const VehicleState& v, int idx) {
  return v.ready + distance(v.position, ctx.orders[static_cast<std::size_t>(idx)].location) /
                       ctx.speed;
}

double service_start(const RoutingContext& ctx, const VehicleState& v, int idx) {
  return std::max(arrival_time(ctx, v, idx), ctx.orders[static_cast<std::size_t>(idx)].window_open);
}

bool is_feasible(const RoutingContext& ctx, const VehicleState& v, int idx) {
  const RouteOrder& o = ctx.orders[static_cast<std::size_t>(idx)];
  return o.demand <= v.remaining && service_start(ctx, v, idx) <= o.window_close;
}

VehicleState advance(const RoutingContext& ctx, const VehicleState& v, int idx) {
  VehicleState next = v;
  const RouteOrder& o = ctx.orders[static_cast<std::size_t>(idx)];
  next.ready = service_start(ctx, v, idx) + ctx.service_time;
  next.position = o.location;
  next.at = idx;
  next.remaining -= o.demand;
  next.route.push_back(idx);
  return next;
}

std::vector<int> feasible_candidates(const RoutingContext& ctx, const VehicleState& v,
                                     const std::vector<bool>& done) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(ctx.orders.size()); ++i)
    if (!done[static_cast<std::size_t>(i)] && is_feasible(ctx, v, i)) out.push_back(i);
  return out;
}

VrpFeatures vrp_features(const RoutingContext& ctx, const VehicleState& v,
                         const std::vector<bool>& done, int candidate) {
  VrpFeatures f{};
  const auto& orders = ctx.orders;
  const RouteOrder& c = orders[static_cast<std::size_t>(candidate)];
  const double rho = ctx.rho();
  const double dist = distance(v.position, c.location);
  const double arrival = arrival_time(ctx, v, candidate);
  const double start = std::max(arrival, c.window_open);
  const double gap = start - v.ready;
  const int c_cluster = ctx.cluster_of(candidate);
  const int loc_cluster = v.at >= 0 ? ctx.cluster_of(v.at) : -1;
  const auto& members = ctx.cluster(c_cluster);
  const double cluster_size = static_cast<double>(members.size());

  // Distance from order idx to the nearest unfinished order outside cluster.
  auto nearest_outside = [&](int idx, int cluster) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(orders.size()); ++j) {
      if (done[static_cast<std::size_t>(j)] || j == idx || ctx.cluster_of(j) == cluster) continue;
      best = std::min(best, distance(orders[static_cast<std::size_t>(idx)].location,
                                     orders[static_cast<std::size_t>(j)].location));
    }
    return best;
  };

  f[kDist] = dist / ctx.d_max;
  f[kDistShort] = dist <= rho ? 1.0 : 0.0;
  f[kTimeGap] = gap / ctx.t_max;
  f[kTimeShort] = gap <= ctx.tau_thresh ? 1.0 : 0.0;
  const bool same = loc_cluster >= 0 && loc_cluster == c_cluster;
  f[kSameCluster] = same ? 1.0 : 0.0;
  if (same) {
    const double nd = nearest_outside(candidate, c_cluster);
    f[kNonMemberDist] = std::isfinite(nd) ? nd / ctx.d_max : 1.0;
  }

  if (!same && loc_cluster >= 0) {
    std::vector<int> abandoned;
    for (int m : ctx.cluster(loc_cluster))
      if (!done[static_cast<std::size_t>(m)] && m != candidate) abandoned.push_back(m);
    if (!abandoned.empty()) {
      f[kClusterLeft] = 1.0;
      const double loc_to_depot = distance(v.position, ctx.depot);
      bool far = true, close = true, longer = true;
      for (int a : abandoned) {
        const Point& pa = orders[static_cast<std::size_t>(a)].location;
        far = far && distance(pa, ctx.depot) > loc_to_depot;
        close = close && distance(pa, v.position) <= rho;
        longer = longer && nearest_outside(a, loc_cluster) > distance(v.position, pa);
      }
      f[kDropFar] = far ? 1.0 : 0.0;
      f[kDropClose] = close ? 1.0 : 0.0;
      f[kDropLong] = longer ? 1.0 : 0.0;
    }
  }

  int served_here = 0;
  for (int s : v.route)
    if (ctx.cluster_of(s) == c_cluster) ++served_here;
  f[kServedInCluster] = served_here / cluster_size;

  int open_demand = 0;
  for (int m : members)
    if (!done[static_cast<std::size_t>(m)]) open_demand += orders[static_cast<std::size_t>(m)].demand;
  f[kClusterDemandFits] = open_demand <= v.remaining ? 1.0 : 0.0;

  const VehicleState after = advance(ctx, v, candidate);
  int hops = 0;
  bool all_follow = true;
  for (int m : members) {
    if (m == candidate || done[static_cast<std::size_t>(m)]) continue;
    if (is_feasible(ctx, v, m) && is_feasible(ctx, advance(ctx, v, m), candidate)) ++hops;
    all_follow = all_follow && is_feasible(ctx, after, m);
  }
  f[kHops] = hops / cluster_size;
  f[kClusterTimeFits] = all_follow ? 1.0 : 0.0;

  f[kUrgency] = (c.window_close - arrival) / ctx.t_max;
  const double time_share = (start + ctx.service_time - v.ready) / ctx.t_max;
  const double load_share = std::max(static_cast<double>(c.demand) / ctx.capacity,
                                     1.0 / static_cast<double>(ctx.capacity));
  f[kTimePerLoad] = time_share / load_share;

  const auto& clusters = ctx.clustering.clusters;
  if (clusters.size() > 1) {
    const Point& leader = orders[static_cast<std::size_t>(members.front())].location;
    double total = 0.0;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      if (static_cast<int>(k) == c_cluster) continue;
      total += distance(leader, orders[static_cast<std::size_t>(clusters[k].front())].location);
    }
    f[kRemote] = total / static_cast<double>(clusters.size() - 1) / ctx.d_max;
  }
  return f;
}

std::optional<std::size_t> vrp_select(std::span<const double> values, SelectMode mode, Rng& rng) {
  if (values.empty()) return std::nullopt;
  switch (mode) {
    case SelectMode::Explore: {
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      return pick(rng);
    }
    case SelectMode::Exploit: {
      const double top = *std::max_element(values.begin(), values.end());
      std::vector<double> weights;
      weights.reserve(values.size());
      for (double v : values) weights.push_back(std::exp(v - top));
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      return pick(rng);
    }
    case SelectMode::Eval:
      return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                      values.begin());
  }
  return std::nullopt;
}

double vrp_step_reward(double rho, double leg_distance, double gap_time, double d_max,
                       double t_max, double tau_thresh) {
  return (rho - leg_distance) / d_max + (tau_thresh - gap_time) / t_max;
}

double vrp_terminal_reward(double rho, std::span<const double> legs, double return_distance) {
  if (legs.empty()) throw std::invalid_argument("terminal reward needs at least one leg");
  const double total = std::accumulate(legs.begin(), legs.end(), 0.0) + return_distance;
  return 2.0 * rho - total / static_cast<double>(legs.size() + 1);
}

std::vector<double> settle_trip_rewards(std::span<const double> partials, double terminal,
                                        double gamma) {
  const std::size_t P = partials.size();
  std::vector<double> out(P);
  for (std::size_t p = 1; p <= P; ++p)
    out[p - 1] = partials[p - 1] + std::pow(gamma, static_cast<double>(P - p)) * terminal;
  return out;
}

std::vector<std::vector<OrderId>> RoutingResult::order_sequences(const RoutingContext& ctx) const {
  std::vector<std::vector<OrderId>> out;
  for (const auto& r : routes) {
    std::vector<OrderId> seq;
    for (const auto& s : r.steps) seq.push_back(ctx.orders[static_cast<std::size_t>(s.order)].id);
    out.push_back(std::move(seq));
  }
  return out;
}

RoutingResult build_routes(const RoutingContext& ctx, const StopSelector& select,
                           bool record_features) {
  RoutingResult result;
  std::vector<bool> done(ctx.orders.size(), false);
  std::size_t remaining = ctx.orders.size();
  while (remaining > 0) {
    VehicleState v = VehicleState::fresh(ctx);
    PlannedRoute route;
    for (;;) {
      const std::vector<int> candidates = feasible_candidates(ctx, v, done);
      if (candidates.empty()) break;
      const std::size_t pick = select(ctx, v, done, candidates);
      const int idx = candidates.at(pick);
      RouteStep step;
      step.order = idx;
      step.leg_distance = distance(v.position, ctx.orders[static_cast<std::size_t>(idx)].location);
      step.gap_time = service_start(ctx, v, idx) - v.ready;
      if (record_features) step.features = vrp_features(ctx, v, done, idx);
      v = advance(ctx, v, idx);
      done[static_cast<std::size_t>(idx)] = true;
      --remaining;
      route.load += ctx.orders[static_cast<std::size_t>(idx)].demand;
      route.steps.push_back(step);
    }
    if (route.steps.empty()) {
      for (int i = 0; i < static_cast<int>(ctx.orders.size()); ++i)
        if (!done[static_cast<std::size_t>(i)]) result.dropped.push_back(i);
      break;
    }
    route.return_distance = distance(v.position, ctx.depot);
    result.routes.push_back(std::move(route));
  }
  return result;
}

RoutingResult vrp_heuristic(const RoutingContext& ctx) {
  // Orders are kept in window-opening order, and candidates preserve it.
  return build_routes(
      ctx, [](const RoutingContext&, const VehicleState&, const std::vector<bool>&,
              std::span<const int>) { return std::size_t{0}; },
      false);
}

double vrp_train_batch(DenseNet& net, std::span<const VrpExperience> batch, double lr) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  Matrix inputs(kVrpFeatureCount, b);
  Matrix targets(1, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& e = batch[static_cast<std::size_t>(i)];
    for (int k = 0; k < kVrpFeatureCount; ++k) inputs(k, i) = e.features[static_cast<std::size_t>(k)];
    targets(0, i) = e.reward;
  }
  return net.train_batch(inputs, targets, lr);
}

VrpAgent::VrpAgent(Rng& rng, VrpSettings settings)
    : VrpAgent(DenseNet({kVrpFeatureCount, 128, 64, 32, 8, 1}, Activation::Tanh, rng), settings) {}

VrpAgent::VrpAgent(DenseNet net, VrpSettings settings)
    : net_(std::move(net)), settings_(settings), replay_(settings.replay_capacity) {
  if (net_.input_size() != kVrpFeatureCount || net_.output_size() != 1)
    throw std::invalid_argument("VRP value net must map 17 features to 1 value");
}

std::vector<double> VrpAgent::values(std::span<const VrpFeatures> features) const {
  Matrix inputs(kVrpFeatureCount, static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i)
    for (int k = 0; k < kVrpFeatureCount; ++k)
      inputs(k, static_cast<Eigen::Index>(i)) = features[i][static_cast<std::size_t>(k)];
  const Matrix out = net_.forward_batch(inputs);
  return std::vector<double>(out.data(), out.data() + out.size());
}

RoutingResult VrpAgent::route(const RoutingContext& ctx, bool training, double epsilon,
                              Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto select = [&](const RoutingContext& c, const VehicleState& v, const std::vector<bool>& done,
                    std::span<const int> candidates) {
    SelectMode mode = SelectMode::Eval;
    if (training) mode = u(rng) < epsilon ? SelectMode::Explore : SelectMode::Exploit;
    std::vector<double> vals(candidates.size(), 0.0);
    if (mode != SelectMode::Explore) {
      std::vector<VrpFeatures> feats;
      feats.reserve(candidates.size());
      for (int idx : candidates) feats.push_back(vrp_features(c, v, done, idx));
      vals = values(feats);
    }
    return *vrp_select(vals, mode, rng);
  };
  return build_routes(ctx, select, true);
}

std::vector<VrpExperience> VrpAgent::experiences(const RoutingContext& ctx,
                                                 const RoutingResult& result) const {
  std::vector<VrpExperience> out;
  for (const auto& route : result.routes) {
    std::vector<double> partials, legs;
    for (const auto& s : route.steps) {
      partials.push_back(vrp_step_reward(ctx.rho(), s.leg_distance, s.gap_time, ctx.d_max,
                                         ctx.t_max, ctx.tau_thresh));
      legs.push_back(s.leg_distance);
    }
    const double terminal = vrp_terminal_reward(ctx.rho(), legs, route.return_distance);
    const auto rewards = settle_trip_rewards(partials, terminal, settings_.gamma);
    for (std::size_t p = 0; p < route.steps.size(); ++p)
      out.push_back({route.steps[p].features, rewards[p]});
  }
  return out;
}

std::optional<double> VrpAgent::train_step(Rng& rng) {
  if (replay_.size() < settings_.batch_size) return std::nullopt;
  const auto batch = replay_.sample(rng, settings_.batch_size);
  return vrp_train_batch(net_, batch, settings_.learning_rate);
}

}  // namespace c2s
