#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "c2s/env.hpp"
#include "c2s/nn.hpp"

namespace c2s {

// Raised when a reward component leaves its documented range: always a bug.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Farthest customer-warehouse distance on the grid: 1.5 * sqrt(2).
inline constexpr double kMaxWarehouseDistance = 2.1213203435596424;
// Worst single-customer round trip, used to scale the per-customer trip share.
inline constexpr double kTripShareScale = 2.0 * kMaxWarehouseDistance;

struct RewardWeights {
  double a1 = 1.0;
  double a2 = 1.0;
  double drop_penalty = -10.0;
};

struct RewardComponents {
  double distance = 0.0;     // D in [-2.12, 0]
  double trip = 0.0;         // L in [-1, 0]
  double fulfilled = 0.0;    // F in {0, 1}
  double utilization = 0.0;  // U in [-1, 0]
};

using Embedding = std::array<double, 2>;
using EmbeddingMap = std::unordered_map<OrderId, Embedding>;

// Features per order: embedding (2), distance to each warehouse (N),
// stock per warehouse (N), demand, window open, window close, clock,
// holding interval, idle-vehicle indicator per depot (N).
int c2s_state_size(int num_warehouses);
Vector c2s_state(const World& world, const Order& order, const EmbeddingMap& embeddings,
                 double now);

// Action index: 0..N-1 assign to that warehouse, N defer.
inline int defer_action(int num_warehouses) { return num_warehouses; }

// Warehouses with enough stock are legal. Defer is legal unless it would
// drop the order while some warehouse is still legal.
std::vector<bool> action_mask(const World& world, const Order& order, double now);

// Nearest warehouse with enough stock, else defer. Ties go to the lower id.
int c2s_heuristic(const World& world, const Order& order);

// Epsilon-greedy over legal actions; greedy ties go to the lowest index.
int c2s_q_action(const Vector& q_values, double epsilon, const std::vector<bool>& mask, Rng& rng);

double c2s_reward(const RewardComponents& c, const RewardWeights& w);
RewardComponents reward_components(const World& world, const Order& order, const Trip& trip);
void check_components(const RewardComponents& c);

struct C2sExperience {
  Vector state;
  int action = 0;
  double reward = 0.0;
  bool terminal = true;
  Vector next_state;  // only read when !terminal
};

struct DecisionRecord {
  Vector state;
  int action = 0;
};

// Decisions taken on one order, waiting for its service or drop.
class PendingReward {
 public:
  explicit PendingReward(OrderId order = -1) : order_(order) {}

  void add_defer(DecisionRecord record);
  // The decision that ended the chain: an assignment, or a defer that
  // turned into a drop.
  void set_final(DecisionRecord record);

  OrderId order() const { return order_; }
  int defer_count() const { return static_cast<int>(defers_.size()); }
  const std::vector<DecisionRecord>& defers() const { return defers_; }
  const std::optional<DecisionRecord>& final_decision() const { return final_; }
  bool settled() const { return settled_; }

  // Defer k (1-based, oldest first) receives gamma^(h-k+1) * base; the final
  // decision receives base. All experiences are terminal.
  std::vector<C2sExperience> settle(double base, double gamma);

 private:
  OrderId order_;
  std::vector<DecisionRecord> defers_;
  std::optional<DecisionRecord> final_;
  bool settled_ = false;
};

struct C2sSettings {
  double gamma = 0.9;
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t replay_capacity = 100000;
};

// TD targets: r for terminal samples, r + gamma * max Q(s') otherwise. Only
// the taken action's output carries error.
double c2s_train_batch(DenseNet& net, std::span<const C2sExperience> batch, double gamma,
                       double lr);

class C2sAgent {
 public:
  C2sAgent(int num_warehouses, Rng& rng, C2sSettings settings = {});
  C2sAgent(DenseNet net, C2sSettings settings = {});

  const DenseNet& net() const { return net_; }
  DenseNet& net() { return net_; }
  const C2sSettings& settings() const { return settings_; }
  ReplayBuffer<C2sExperience>& replay() { return replay_; }
  const ReplayBuffer<C2sExperience>& replay() const { return replay_; }

  int act(const Vector& state, const std::vector<bool>& mask, double epsilon, Rng& rng) const;
  // One gradient step on a uniform replay sample; nullopt while the buffer
  // holds fewer than batch_size samples.
  std::optional<double> train_step(Rng& rng);

 private:
  DenseNet net_;
  C2sSettings settings_;
  ReplayBuffer<C2sExperience> replay_;
};

std::uint64_t state_hash(const Vector& state);

}  // namespace c2s
