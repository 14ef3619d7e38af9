#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "c2s/c2s_policy.hpp"
#include "c2s/demand.hpp"
#include "c2s/env.hpp"

namespace c2s {

enum class C2sMode { Heuristic, Learned, Pretrained };
enum class VrpMode { Heuristic, Learned };

// One of the five supported policy pairings.
struct AgentCombo {
  C2sMode c2s = C2sMode::Heuristic;
  VrpMode vrp = VrpMode::Heuristic;

  // Accepts "H+L" style names (also "HL").
  static AgentCombo parse(std::string_view name);
  std::string name() const;  // "H+L"
  std::string tag() const;   // "HL", used in file names
  bool c2s_learned() const { return c2s != C2sMode::Heuristic; }
  bool vrp_learned() const { return vrp == VrpMode::Learned; }
  bool learnable() const { return c2s == C2sMode::Learned || vrp_learned(); }

  friend bool operator==(const AgentCombo&, const AgentCombo&) = default;
};

const std::array<AgentCombo, 5>& all_combos();

enum class RunMode { Train, Eval };

struct RunConfig {
  AgentCombo combo;
  RunMode mode = RunMode::Train;

  int episodes = 200;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int eval_episodes = 20;
  std::vector<std::uint64_t> eval_seeds{101, 102, 103};

  EnvConstants env;
  DemandParams demand;  // training distribution
  std::array<double, 4> eval_weights = kSkewedWeights;

  double epsilon_start = 1.0;
  double epsilon_decay = 0.999;
  double epsilon_floor = 0.01;
  double gamma = 0.9;
  double c2s_learning_rate = 1e-3;
  double vrp_learning_rate = 1e-3;
  int batch_size = 512;
  int replay_capacity = 100000;
  // Gradient steps per round: one wave for C2S, one routed depot for VRP.
  int train_steps = 4;
  RewardWeights reward;

  int gae_hidden = 16;
  int gae_graphs = 100;
  int gae_epochs = 50;
  double gae_learning_rate = 0.01;

  std::string output_dir = ".";
  std::string c2s_checkpoint;
  std::string vrp_checkpoint;
  std::string gae_checkpoint;

  // Every problem, not just the first; throws ConfigError when non-empty.
  void validate() const;
  double epsilon_at(int episode) const;
};

}  // namespace c2s
