#include "c2s/orchestrator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace c2s {

namespace {

struct Outcome {
  OrderId id = -1;
  bool dropped = false;
  std::optional<RewardComponents> components;
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

std::string weights_blob(const DenseNet& net) {
  std::ostringstream os;
  net.save(os);
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

C2sSettings c2s_settings(const RunConfig& config) {
  return {config.gamma, config.c2s_learning_rate, static_cast<std::size_t>(config.batch_size),
          static_cast<std::size_t>(config.replay_capacity)};
}

VrpSettings vrp_settings(const RunConfig& config) {
  return {config.gamma, config.vrp_learning_rate, static_cast<std::size_t>(config.batch_size),
          static_cast<std::size_t>(config.replay_capacity)};
}

GaeSettings gae_settings(const RunConfig& config) {
  GaeSettings s;
  s.hidden = config.gae_hidden;
  s.learning_rate = config.gae_learning_rate;
  return s;
}

Agents make_agents(const AgentCombo& combo, const RunConfig& config, std::uint64_t seed) {
  Agents agents;
  if (combo.c2s_learned()) {
    Rng gae_rng = substream(seed, "init.gae");
    agents.gae.emplace(gae_rng, gae_settings(config));
    Rng rng = substream(seed, "init.c2s");
    agents.c2s.emplace(config.env.num_warehouses, rng, c2s_settings(config));
  }
  if (combo.vrp_learned()) {
    Rng rng = substream(seed, "init.vrp");
    agents.vrp.emplace(rng, vrp_settings(config));
  }
  return agents;
}

void check_agents(const AgentCombo& combo, const Agents& agents) {
  if (combo.c2s_learned() && !agents.c2s)
    throw std::invalid_argument("combo " + combo.name() + " needs a C2S agent");
  if (combo.c2s_learned() && !agents.gae)
    throw std::invalid_argument("combo " + combo.name() + " needs a graph embedding model");
  if (combo.vrp_learned() && !agents.vrp)
    throw std::invalid_argument("combo " + combo.name() + " needs a VRP agent");
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(episode) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const char* to_string(WaveEvent e) {
  switch (e) {
    case WaveEvent::Restock: return "restock";
    case WaveEvent::Spawn: return "spawn";
    case WaveEvent::Expire: return "expire";
    case WaveEvent::Decide: return "decide";
    case WaveEvent::Route: return "route";
    case WaveEvent::Settle: return "settle";
    case WaveEvent::Train: return "train";
  }
  return "?";
}

EpisodeResult run_episode(const AgentCombo& combo, Agents& agents, const RunConfig& config,
                          const EpisodeOptions& options) {
  check_agents(combo, agents);
  if (options.train_c2s && combo.c2s != C2sMode::Learned)
    throw std::invalid_argument("combo " + combo.name() + " has no trainable C2S agent");
  if (options.train_vrp && !combo.vrp_learned())
    throw std::invalid_argument("combo " + combo.name() + " has no trainable VRP agent");
  options.demand.validate();

  const EnvConstants& env = config.env;
  const int n = env.num_warehouses;
  const std::uint64_t ep_seed = episode_seed(options.seed, options.episode);
  DemandStreams demand = DemandStreams::from_seed(ep_seed);
  Rng act_rng = substream(ep_seed, "policy.c2s");
  Rng train_rng = substream(ep_seed, "train");
  const double c2s_epsilon = combo.c2s == C2sMode::Learned ? options.epsilon : 0.0;

  EpisodeResult result{{}, {}, {}, {}, {}, World(env)};
  World& world = result.world;
  std::map<OrderId, PendingReward> pending;
  EpisodeMetrics& m = result.metrics;
  m.episode = options.episode;
  m.seed = options.seed;
  m.epsilon = options.epsilon;
  std::vector<double> d_rewards, l_rewards, u_rewards, utilizations, c2s_losses, vrp_losses;
  double reward_sum = 0.0;

  auto log = [&](double t, WaveEvent kind, int count) { result.events.push_back({t, kind, count}); };

  for (int wave = 0; wave < env.num_waves(); ++wave) {
    const double t = wave * env.wave_period;
    world.advance_to(t);
    std::vector<Outcome> outcomes;
    std::vector<VrpExperience> vrp_batch;

    world.restock();
    log(t, WaveEvent::Restock, n);

    const auto fresh = sample_wave(demand, t, options.demand, env);
    for (const auto& o : fresh) world.add_order(o);
    log(t, WaveEvent::Spawn, static_cast<int>(fresh.size()));

    const auto expired = world.drop_expired(t);
    for (OrderId id : expired) outcomes.push_back({id, true, std::nullopt});
    log(t, WaveEvent::Expire, static_cast<int>(expired.size()));

    const auto open = world.open_orders_fcfs();
    EmbeddingMap embeddings;
    if (combo.c2s_learned() || options.collect_graphs) {
      GraphSnapshot graph = build_graph(world, open);
      if (combo.c2s_learned() && graph.size() > 0) {
        const Matrix e = agents.gae->encode(graph);
        for (int k = 0; k < graph.size(); ++k)
          embeddings[graph.order_ids[static_cast<std::size_t>(k)]] = {e(k, 0), e(k, 1)};
      }
      if (options.collect_graphs && graph.size() >= 2) result.graphs.push_back(std::move(graph));
    }
    for (OrderId id : open) {
      const Order& order = world.order(id);
      DecisionRecord rec;
      if (combo.c2s_learned()) {
        rec.state = c2s_state(world, order, embeddings, t);
        rec.action = agents.c2s->act(rec.state, action_mask(world, order, t), c2s_epsilon, act_rng);
      } else {
        rec.action = c2s_heuristic(world, order);
      }
      auto [it, inserted] = pending.try_emplace(id, id);
      PendingReward& chain = it->second;
      if (rec.action < n) {
        world.assign_order(id, rec.action);
        chain.set_final(std::move(rec));
      } else if (world.defer_order(id, t) == DeferOutcome::Deferred) {
        chain.add_defer(std::move(rec));
        ++m.deferred;
      } else {
        chain.set_final(std::move(rec));
        outcomes.push_back({id, true, std::nullopt});
      }
    }
    log(t, WaveEvent::Decide, static_cast<int>(open.size()));

    int wave_trips = 0;
    int routed_depots = 0;
    for (int d = 0; d < n; ++d) {
      const RoutingContext ctx = make_context(world, d, t);
      if (ctx.orders.empty()) continue;
      ++routed_depots;
      RoutingResult routing;
      if (combo.vrp_learned()) {
        Rng route_rng = substream(ep_seed, "policy.vrp", static_cast<std::uint64_t>(wave * n + d));
        routing = agents.vrp->route(ctx, options.train_vrp, options.epsilon, route_rng);
        if (options.train_vrp) {
          auto exps = agents.vrp->experiences(ctx, routing);
          vrp_batch.insert(vrp_batch.end(), exps.begin(), exps.end());
        }
      } else {
        routing = vrp_heuristic(ctx);
      }
      for (const auto& seq : routing.order_sequences(ctx)) {
        const Trip trip = world.execute_trip({d, t, seq});
        ++wave_trips;
        utilizations.push_back(capacity_utilization(trip, env.capacity));
        for (const auto& v : trip.visits)
          outcomes.push_back({v.order, false, reward_components(world, world.order(v.order), trip)});
      }
      for (int idx : routing.dropped) {
        const OrderId id = ctx.orders[static_cast<std::size_t>(idx)].id;
        world.drop_assigned(id);
        outcomes.push_back({id, true, std::nullopt});
      }
    }
    log(t, WaveEvent::Route, wave_trips);

    std::vector<C2sExperience> c2s_batch;
    for (const auto& out : outcomes) {
      const auto it = pending.find(out.id);
      if (it == pending.end())
        throw InvariantViolation("order " + std::to_string(out.id) + " settled without a decision");
      Settlement s;
      s.order = out.id;
      s.defers = it->second.defer_count();
      s.dropped = out.dropped;
      s.components = out.components;
      s.base = out.dropped ? config.reward.drop_penalty : c2s_reward(*out.components, config.reward);
      auto exps = it->second.settle(s.base, config.gamma);
      for (const auto& e : exps) {
        s.rewards.push_back(e.reward);
        if (options.trace) result.trace.push_back({out.id, state_hash(e.state), e.action, e.reward});
      }
      if (out.components) {
        d_rewards.push_back(out.components->distance);
        l_rewards.push_back(out.components->trip);
        u_rewards.push_back(out.components->utilization);
      }
      reward_sum += s.base;
      if (options.train_c2s) c2s_batch.insert(c2s_batch.end(), exps.begin(), exps.end());
      result.settlements.push_back(std::move(s));
      pending.erase(it);
    }
    log(t, WaveEvent::Settle, static_cast<int>(outcomes.size()));

    if (options.train_c2s || options.train_vrp) {
      int steps = 0;
      for (auto& e : c2s_batch) agents.c2s->replay().push(std::move(e));
      for (auto& e : vrp_batch) agents.vrp->replay().push(e);
      for (int k = 0; options.train_c2s && k < config.train_steps; ++k) {
        if (auto loss = agents.c2s->train_step(train_rng)) {
          c2s_losses.push_back(*loss);
          ++steps;
        }
      }
      for (int k = 0; options.train_vrp && k < config.train_steps * routed_depots; ++k) {
        if (auto loss = agents.vrp->train_step(train_rng)) {
          vrp_losses.push_back(*loss);
          ++steps;
        }
      }
      log(t, WaveEvent::Train, steps);
    }

    if (env.restock_half_period) {
      world.advance_to(t + 0.5 * env.wave_period);
      world.restock();
      log(world.clock(), WaveEvent::Restock, n);
    }
  }

  const OrderCounts counts = world.counts();
  m.generated = static_cast<int>(counts.generated);
  m.served = static_cast<int>(counts.served);
  m.dropped = static_cast<int>(counts.dropped);
  m.open_at_end = static_cast<int>(counts.open + counts.assigned);
  if (m.generated != m.served + m.dropped + m.open_at_end)
    throw InvariantViolation("order conservation broken: generated " + std::to_string(m.generated) +
                             " != served + dropped + open");
  m.trips = static_cast<int>(world.trips().size());
  for (int d = 0; d < n; ++d) m.vehicles += static_cast<int>(world.fleet(d).size());
  m.served_per_trip = m.trips > 0 ? static_cast<double>(m.served) / m.trips : 0.0;
  m.sum_reward = reward_sum;
  m.mean_distance_reward = mean_of(d_rewards);
  m.mean_trip_reward = mean_of(l_rewards);
  m.mean_utilization_reward = mean_of(u_rewards);
  m.mean_utilization = mean_of(utilizations);
  m.c2s_loss = mean_of(c2s_losses);
  m.vrp_loss = mean_of(vrp_losses);
  return result;
}

std::vector<GraphSnapshot> collect_graphs(const RunConfig& config, std::uint64_t seed, int count) {
  const AgentCombo hh{C2sMode::Heuristic, VrpMode::Heuristic};
  Agents none;
  std::vector<GraphSnapshot> graphs;
  EpisodeOptions opt;
  opt.seed = substream(seed, "gae.rollouts")();
  opt.collect_graphs = true;
  opt.demand = config.demand;
  int guard = 0;
  while (static_cast<int>(graphs.size()) < count) {
    auto r = run_episode(hh, none, config, opt);
    for (auto& g : r.graphs) {
      if (static_cast<int>(graphs.size()) == count) break;
      graphs.push_back(std::move(g));
    }
    ++opt.episode;
    if (++guard > 100 * count + 100)
      throw std::runtime_error("heuristic rollouts produced no usable graphs");
  }
  return graphs;
}

GaeModel train_gae_from_rollouts(const RunConfig& config, std::uint64_t seed,
                                 std::vector<double>* losses) {
  const auto graphs = collect_graphs(config, seed, config.gae_graphs);
  Rng init = substream(seed, "init.gae");
  GaeModel model(init, gae_settings(config));
  Rng rng = substream(seed, "train.gae");
  auto history = train_gae(model, graphs, config.gae_epochs, rng);
  if (losses) *losses = std::move(history);
  return model;
}

std::string c2s_checkpoint_path(const RunConfig& config, const AgentCombo& combo, std::uint64_t seed) {
  return join_path(config.output_dir, "c2s_" + combo.tag() + "_" + std::to_string(seed) + ".ckpt");
}

std::string vrp_checkpoint_path(const RunConfig& config, const AgentCombo& combo, std::uint64_t seed) {
  return join_path(config.output_dir, "vrp_" + combo.tag() + "_" + std::to_string(seed) + ".ckpt");
}

std::string gae_checkpoint_path(const RunConfig& config, std::uint64_t seed) {
  return join_path(config.output_dir, "gae_" + std::to_string(seed) + ".ckpt");
}

std::string phase1_checkpoint_path(const RunConfig& config, std::uint64_t seed) {
  return join_path(config.output_dir, "c2s_PL_phase1_" + std::to_string(seed) + ".ckpt");
}

namespace {

// Explicit GAE checkpoint when configured and present, else one per seed,
// trained on demand.
GaeModel obtain_gae(const RunConfig& config, std::uint64_t seed, std::string& path,
                    std::vector<std::string>& log) {
  if (!config.gae_checkpoint.empty() && std::filesystem::exists(config.gae_checkpoint)) {
    path = config.gae_checkpoint;
    log.push_back("seed " + std::to_string(seed) + ": loaded embedding model " + path);
    return GaeModel::load_file(path);
  }
  path = gae_checkpoint_path(config, seed);
  if (std::filesystem::exists(path)) {
    log.push_back("seed " + std::to_string(seed) + ": loaded embedding model " + path);
    return GaeModel::load_file(path);
  }
  GaeModel model = train_gae_from_rollouts(config, seed);
  model.save_file(path);
  log.push_back("seed " + std::to_string(seed) + ": trained embedding model -> " + path);
  return model;
}

// Shared training loop over seeds x episodes.
TrainReport run_training(const RunConfig& config, const AgentCombo& combo, bool train_c2s,
                         bool train_vrp, const std::string& phase,
                         const std::function<void(Agents&, std::uint64_t, SeedRun&)>& prepare,
                         const std::function<void(Agents&, std::uint64_t, SeedRun&)>& finish) {
  ensure_dir(config.output_dir);
  TrainReport report;
  for (std::uint64_t seed : config.seeds) {
    SeedRun run;
    run.seed = seed;
    Agents agents = make_agents(combo, config, seed);
    if (combo.c2s_learned()) agents.gae = obtain_gae(config, seed, run.gae_checkpoint, report.log);
    if (prepare) prepare(agents, seed, run);
    report.log.push_back(phase + "seed " + std::to_string(seed) + ": start, " +
                         std::to_string(config.episodes) + " episodes of " + combo.name());
    for (int ep = 0; ep < config.episodes; ++ep) {
      EpisodeOptions opt;
      opt.seed = seed;
      opt.episode = ep;
      opt.epsilon = config.epsilon_at(ep);
      opt.train_c2s = train_c2s;
      opt.train_vrp = train_vrp;
      opt.demand = config.demand;
      run.curve.push_back(run_episode(combo, agents, config, opt).metrics);
    }
    run.curve_path = join_path(config.output_dir,
                               "curves_" + combo.tag() + "_" + std::to_string(seed) + ".csv");
    export_csv(run.curve, run.curve_path);
    if (finish) finish(agents, seed, run);
    report.log.push_back(phase + "seed " + std::to_string(seed) + ": done after " +
                         std::to_string(run.curve.size()) + " episodes");
    report.runs.push_back(std::move(run));
  }
  return report;
}

void save_agents(const Agents& agents, const RunConfig& config, const AgentCombo& combo,
                 std::uint64_t seed, SeedRun& run) {
  if (agents.c2s) {
    run.c2s_checkpoint = c2s_checkpoint_path(config, combo, seed);
    agents.c2s->net().save_file(run.c2s_checkpoint);
  }
  if (agents.vrp) {
    run.vrp_checkpoint = vrp_checkpoint_path(config, combo, seed);
    agents.vrp->net().save_file(run.vrp_checkpoint);
  }
}

void append(TrainReport& into, TrainReport&& from) {
  for (auto& r : from.runs) into.runs.push_back(std::move(r));
  for (auto& l : from.log) into.log.push_back(std::move(l));
}

}  // namespace

TrainReport train(const RunConfig& config) {
  config.validate();
  const AgentCombo combo = config.combo;
  if (!combo.learnable()) throw ConfigError({"combo " + combo.name() + " has nothing to train"});
  if (combo.c2s == C2sMode::Pretrained) return train_two_phase(config);
  return run_training(config, combo, combo.c2s == C2sMode::Learned, combo.vrp_learned(), "", nullptr,
                      [&](Agents& agents, std::uint64_t seed, SeedRun& run) {
                        save_agents(agents, config, combo, seed, run);
                      });
}

TrainReport train_phase_one(const RunConfig& config) {
  const AgentCombo lh{C2sMode::Learned, VrpMode::Heuristic};
  return run_training(config, lh, true, false, "phase 1 ", nullptr,
                      [&](Agents& agents, std::uint64_t seed, SeedRun& run) {
                        run.c2s_checkpoint = phase1_checkpoint_path(config, seed);
                        agents.c2s->net().save_file(run.c2s_checkpoint);
                      });
}

TrainReport train_phase_two(const RunConfig& config) {
  const AgentCombo pl{C2sMode::Pretrained, VrpMode::Learned};
  for (std::uint64_t seed : config.seeds)
    if (!std::filesystem::exists(phase1_checkpoint_path(config, seed)))
      throw std::runtime_error("phase 2 needs the phase 1 checkpoint " +
                               phase1_checkpoint_path(config, seed));
  std::map<std::uint64_t, std::string> frozen;
  return run_training(
      config, pl, false, true, "phase 2 ",
      [&](Agents& agents, std::uint64_t seed, SeedRun&) {
        agents.c2s.emplace(DenseNet::load_file(phase1_checkpoint_path(config, seed)),
                           c2s_settings(config));
        frozen[seed] = weights_blob(agents.c2s->net());
      },
      [&](Agents& agents, std::uint64_t seed, SeedRun& run) {
        if (weights_blob(agents.c2s->net()) != frozen[seed])
          throw InvariantViolation("C2S weights changed during phase 2");
        save_agents(agents, config, pl, seed, run);
      });
}

TrainReport train_two_phase(const RunConfig& config) {
  TrainReport report;
  append(report, train_phase_one(config));
  append(report, train_phase_two(config));
  return report;
}

Agents load_agents(const AgentCombo& combo, const RunConfig& config) {
  const std::uint64_t seed = config.seeds.front();
  Agents agents;
  auto need = [](const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
      throw std::runtime_error(std::string("missing ") + what + " checkpoint " + path);
    return path;
  };
  if (combo.c2s_learned()) {
    const std::string gae = config.gae_checkpoint.empty() ? gae_checkpoint_path(config, seed)
                                                          : config.gae_checkpoint;
    agents.gae = GaeModel::load_file(need(gae, "embedding"));
    const std::string c2s = config.c2s_checkpoint.empty()
                                ? c2s_checkpoint_path(config, combo, seed)
                                : config.c2s_checkpoint;
    agents.c2s.emplace(DenseNet::load_file(need(c2s, "C2S")), c2s_settings(config));
  }
  if (combo.vrp_learned()) {
    const std::string vrp = config.vrp_checkpoint.empty()
                                ? vrp_checkpoint_path(config, combo, seed)
                                : config.vrp_checkpoint;
    agents.vrp.emplace(DenseNet::load_file(need(vrp, "VRP")), vrp_settings(config));
  }
  return agents;
}

std::vector<EpisodeMetrics> evaluate(const AgentCombo& combo, Agents& agents,
                                     const RunConfig& config, bool write_file) {
  std::vector<EpisodeMetrics> rows;
  DemandParams demand = config.demand;
  demand.quadrant_weights = config.eval_weights;
  for (std::uint64_t seed : config.eval_seeds) {
    for (int ep = 0; ep < config.eval_episodes; ++ep) {
      EpisodeOptions opt;
      opt.seed = seed;
      opt.episode = ep;
      opt.demand = demand;
      rows.push_back(run_episode(combo, agents, config, opt).metrics);
    }
  }
  if (write_file) {
    ensure_dir(config.output_dir);
    export_csv(rows, join_path(config.output_dir, "eval_" + combo.tag() + ".csv"));
  }
  return rows;
}

std::vector<EpisodeMetrics> evaluate(const RunConfig& config) {
  Agents agents = load_agents(config.combo, config);
  return evaluate(config.combo, agents, config, true);
}

}  // namespace c2s
