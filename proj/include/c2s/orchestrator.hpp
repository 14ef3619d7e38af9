#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2s/c2s_policy.hpp"
#include "c2s/config.hpp"
#include "c2s/gae.hpp"
#include "c2s/metrics.hpp"
#include "c2s/records.hpp"
#include "c2s/vrp_policy.hpp"

namespace c2s {

// A run broke one of its own invariants (conservation, frozen weights, ...).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Agents {
  std::optional<GaeModel> gae;
  std::optional<C2sAgent> c2s;
  std::optional<VrpAgent> vrp;
};

C2sSettings c2s_settings(const RunConfig& config);
VrpSettings vrp_settings(const RunConfig& config);
GaeSettings gae_settings(const RunConfig& config);

// Freshly initialized agents for every learned part of the combo.
Agents make_agents(const AgentCombo& combo, const RunConfig& config, std::uint64_t seed);
// Throws std::invalid_argument when an agent the combo needs is missing.
void check_agents(const AgentCombo& combo, const Agents& agents);

// Seed of the demand and policy streams of one episode.
std::uint64_t episode_seed(std::uint64_t seed, int episode);

enum class WaveEvent { Restock, Spawn, Expire, Decide, Route, Settle, Train };
const char* to_string(WaveEvent e);

struct EventRecord {
  double time = 0.0;
  WaveEvent kind = WaveEvent::Restock;
  int count = 0;
};

// One settled decision chain.
struct Settlement {
  OrderId order = -1;
  int defers = 0;  // h
  bool dropped = false;
  double base = 0.0;
  std::optional<RewardComponents> components;  // served orders only
  std::vector<double> rewards;  // defers oldest first, then the final decision
};

struct EpisodeOptions {
  std::uint64_t seed = 0;
  int episode = 0;
  double epsilon = 0.0;
  bool train_c2s = false;
  bool train_vrp = false;
  bool collect_graphs = false;
  bool trace = false;
  DemandParams demand;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<EventRecord> events;
  std::vector<Settlement> settlements;
  std::vector<GraphSnapshot> graphs;
  std::vector<DecisionTraceRow> trace;
  World world;
};

// One episode: per wave restock, spawn, expire, decide (FCFS), route per
// depot, settle, then optional training steps.
EpisodeResult run_episode(const AgentCombo& combo, Agents& agents, const RunConfig& config,
                          const EpisodeOptions& options);

// Graphs from H+H rollouts on the training distribution.
std::vector<GraphSnapshot> collect_graphs(const RunConfig& config, std::uint64_t seed, int count);
GaeModel train_gae_from_rollouts(const RunConfig& config, std::uint64_t seed,
                                 std::vector<double>* losses = nullptr);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> curve;
  std::string curve_path;
  std::string c2s_checkpoint;
  std::string vrp_checkpoint;
  std::string gae_checkpoint;
};

struct TrainReport {
  std::vector<SeedRun> runs;
  std::vector<std::string> log;
};

// Default checkpoint locations inside the output directory.
std::string c2s_checkpoint_path(const RunConfig& config, const AgentCombo& combo, std::uint64_t seed);
std::string vrp_checkpoint_path(const RunConfig& config, const AgentCombo& combo, std::uint64_t seed);
std::string gae_checkpoint_path(const RunConfig& config, std::uint64_t seed);
std::string phase1_checkpoint_path(const RunConfig& config, std::uint64_t seed);

// Trains every seed; P+L is delegated to train_two_phase.
TrainReport train(const RunConfig& config);
// Phase 1 trains C2S against the routing heuristic; phase 2 loads those
// weights, keeps them fixed and trains the router.
TrainReport train_phase_one(const RunConfig& config);
TrainReport train_phase_two(const RunConfig& config);
TrainReport train_two_phase(const RunConfig& config);

// Agents for evaluation, loaded from checkpoints (explicit paths or the
// defaults for the first training seed).
Agents load_agents(const AgentCombo& combo, const RunConfig& config);

// Greedy evaluation over eval seeds x eval episodes with the evaluation
// quadrant weights. Writes eval_<combo>.csv when write_file is set.
std::vector<EpisodeMetrics> evaluate(const AgentCombo& combo, Agents& agents,
                                     const RunConfig& config, bool write_file = true);
std::vector<EpisodeMetrics> evaluate(const RunConfig& config);

}  // namespace c2s
