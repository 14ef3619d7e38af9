#include "c2s/c2s_policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace c2s {

int c2s_state_size(int num_warehouses) { return 7 + 3 * num_warehouses; }

Vector c2s_state(const World& world, const Order& order, const EmbeddingMap& embeddings,
                 double now) {
  const auto it = embeddings.find(order.id);
  if (it == embeddings.end())
    throw std::out_of_range("no embedding for order " + std::to_string(order.id));
  const EnvConstants& env = world.constants();
  const int n = env.num_warehouses;
  Vector s(c2s_state_size(n));
  int k = 0;
  s(k++) = it->second[0];
  s(k++) = it->second[1];
  for (const auto& w : world.warehouses()) s(k++) = distance(w.location, order.location);
  for (const auto& w : world.warehouses())
    s(k++) = static_cast<double>(w.inventory) / static_cast<double>(env.max_inventory);
  s(k++) = static_cast<double>(order.demand) / 10.0;
  // Window bounds relative to now, in waves.
  s(k++) = (order.window_open - now) / env.wave_period;
  s(k++) = (order.window_close - now) / env.wave_period;
  s(k++) = now / env.horizon;
  s(k++) = static_cast<double>(order.defer_count) / 10.0;
  for (int d = 0; d < n; ++d) s(k++) = world.vehicle_idle_at(d, now) ? 1.0 : 0.0;
  return s;
}

std::vector<bool> action_mask(const World& world, const Order& order, double now) {
  const int n = world.constants().num_warehouses;
  std::vector<bool> mask(static_cast<std::size_t>(n + 1), false);
  bool any = false;
  for (int w = 0; w < n; ++w) {
    mask[static_cast<std::size_t>(w)] = world.warehouse(w).inventory >= order.demand;
    any = any || mask[static_cast<std::size_t>(w)];
  }
  const bool defer_survives = order.window_close >= now + world.constants().wave_period;
  mask[static_cast<std::size_t>(n)] = defer_survives || !any;
  return mask;
}

int c2s_heuristic(const World& world, const Order& order) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& w : world.warehouses()) {
    if (w.inventory < order.demand) continue;
    const double d = distance(w.location, order.location);
    if (d < best_d) {
      best_d = d;
      best = w.id;
    }
  }
  return best >= 0 ? best : defer_action(world.constants().num_warehouses);
}

int c2s_q_action(const Vector& q_values, double epsilon, const std::vector<bool>& mask, Rng& rng) {
  if (static_cast<std::size_t>(q_values.size()) != mask.size())
    throw std::invalid_argument("mask size does not match action count");
  std::vector<int> legal;
  for (std::size_t a = 0; a < mask.size(); ++a)
    if (mask[a]) legal.push_back(static_cast<int>(a));
  if (legal.empty()) throw std::invalid_argument("no legal action");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
      return legal[pick(rng)];
    }
  }
  int best = legal.front();
  for (int a : legal)
    if (q_values(a) > q_values(best)) best = a;
  return best;
}

void check_components(const RewardComponents& c) {
  // Slack only for the last digit of 1.5 * sqrt(2).
  if (!(c.distance >= -kMaxWarehouseDistance - 1e-12 && c.distance <= 0.0))
    throw ContractViolation("distance reward D out of [-2.12, 0]: " + std::to_string(c.distance));
  if (!(c.trip >= -1.0 && c.trip <= 0.0))
    throw ContractViolation("trip reward L out of [-1, 0]: " + std::to_string(c.trip));
  if (!(c.utilization >= -1.0 && c.utilization <= 0.0))
    throw ContractViolation("utilization reward U out of [-1, 0]: " +
                            std::to_string(c.utilization));
  if (c.fulfilled != 0.0 && c.fulfilled != 1.0)
    throw ContractViolation("fulfillment reward F must be 0 or 1");
}

double c2s_reward(const RewardComponents& c, const RewardWeights& w) {
  check_components(c);
  return w.a1 * (c.distance + c.trip) + c.fulfilled + w.a2 * c.utilization;
}

RewardComponents reward_components(const World& world, const Order& order, const Trip& trip) {
  if (order.status != OrderStatus::Served || order.trip_id != trip.id)
    throw std::invalid_argument("order was not served on this trip");
  const int q = world.constants().capacity;
  RewardComponents c;
  c.distance = -distance(world.warehouse(trip.depot).location, order.location);
  const double share = trip.total_distance() / static_cast<double>(trip.visits.size());
  c.trip = -std::min(1.0, share / kTripShareScale);
  c.fulfilled = 1.0;
  c.utilization = -static_cast<double>(q - trip.load) / static_cast<double>(q);
  return c;
}

void PendingReward::add_defer(DecisionRecord record) {
  if (settled_) throw StateError("pending reward already settled");
  if (final_) throw StateError("defer recorded after the final decision");
  defers_.push_back(std::move(record));
}

void PendingReward::set_final(DecisionRecord record) {
  if (settled_) throw StateError("pending reward already settled");
  if (final_) throw StateError("final decision already recorded");
  final_ = std::move(record);
}

std::vector<C2sExperience> PendingReward::settle(double base, double gamma) {
  if (settled_) throw StateError("order " + std::to_string(order_) + " settled twice");
  settled_ = true;
  std::vector<C2sExperience> out;
  const int h = defer_count();
  for (int k = 1; k <= h; ++k) {
    const auto& rec = defers_[static_cast<std::size_t>(k - 1)];
    out.push_back({rec.state, rec.action, std::pow(gamma, h - k + 1) * base, true, {}});
  }
  if (final_) out.push_back({final_->state, final_->action, base, true, {}});
  return out;
}

double c2s_train_batch(DenseNet& net, std::span<const C2sExperience> batch, double gamma,
                       double lr) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  Matrix inputs(net.input_size(), b);
  for (Eigen::Index i = 0; i < b; ++i) inputs.col(i) = batch[static_cast<std::size_t>(i)].state;
  Matrix targets = net.forward_batch(inputs);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& e = batch[static_cast<std::size_t>(i)];
    double y = e.reward;
    if (!e.terminal) y += gamma * net.forward(e.next_state).maxCoeff();
    targets(e.action, i) = y;
  }
  return net.train_batch(inputs, targets, lr);
}

C2sAgent::C2sAgent(int num_warehouses, Rng& rng, C2sSettings settings)
    : C2sAgent(DenseNet({c2s_state_size(num_warehouses), 76, 38, num_warehouses + 1},
                        Activation::Tanh, rng),
               settings) {}

C2sAgent::C2sAgent(DenseNet net, C2sSettings settings)
    : net_(std::move(net)), settings_(settings), replay_(settings.replay_capacity) {}

int C2sAgent::act(const Vector& state, const std::vector<bool>& mask, double epsilon,
                  Rng& rng) const {
  return c2s_q_action(net_.forward(state), epsilon, mask, rng);
}

std::optional<double> C2sAgent::train_step(Rng& rng) {
  if (replay_.size() < settings_.batch_size) return std::nullopt;
  const auto batch = replay_.sample(rng, settings_.batch_size);
  return c2s_train_batch(net_, batch, settings_.gamma, settings_.learning_rate);
}

std::uint64_t state_hash(const Vector& state) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = state(i);
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace c2s
