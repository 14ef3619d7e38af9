#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "c2s/metrics.hpp"
#include "c2s/micro.hpp"
#include "c2s/orchestrator.hpp"
#include "c2s/records.hpp"

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "Config file (flat dotted key = value)");
  cmd->add_option("-s,--set", common.overrides, "Override one key: key=value (repeatable)");
}

c2s::RunConfig load_config(const Common& common, c2s::RunMode mode) {
  c2s::RunConfig config;
  if (!common.config_path.empty()) config = c2s::parse_config(common.config_path, false);
  config.mode = mode;
  for (const auto& o : common.overrides) c2s::apply_override(config, o);
  config.validate();
  return config;
}

void print_summary(const std::vector<c2s::EpisodeMetrics>& rows) {
  const auto summary = c2s::summarize(rows, c2s::GroupBy::Seed);
  const auto& cols = c2s::metric_columns();
  for (const auto& s : summary) {
    std::printf("seed %lld (%zu episodes)\n", static_cast<long long>(s.group), s.count);
    for (std::size_t c = 2; c < cols.size(); ++c)
      std::printf("  %-24s %12.6f +- %.6f\n", cols[c].c_str(), s.mean[c], s.stddev[c]);
  }
}

int cmd_train(const Common& common) {
  const auto config = load_config(common, c2s::RunMode::Train);
  const auto report = c2s::train(config);
  for (const auto& line : report.log) std::printf("%s\n", line.c_str());
  for (const auto& run : report.runs) {
    std::printf("curve %s\n", run.curve_path.c_str());
    if (!run.c2s_checkpoint.empty()) std::printf("c2s checkpoint %s\n", run.c2s_checkpoint.c_str());
    if (!run.vrp_checkpoint.empty()) std::printf("vrp checkpoint %s\n", run.vrp_checkpoint.c_str());
  }
  return 0;
}

int cmd_eval(const Common& common) {
  const auto config = load_config(common, c2s::RunMode::Eval);
  const auto rows = c2s::evaluate(config);
  std::printf("%s: %zu episodes -> %s\n", config.combo.name().c_str(), rows.size(),
              (std::filesystem::path(config.output_dir) / ("eval_" + config.combo.tag() + ".csv"))
                  .string()
                  .c_str());
  print_summary(rows);
  return 0;
}

int cmd_train_gae(const Common& common, const std::string& buffer_dir) {
  auto config = load_config(common, c2s::RunMode::Eval);
  const std::uint64_t seed = config.seeds.front();
  const auto graphs = c2s::collect_graphs(config, seed, config.gae_graphs);
  const auto heldout = c2s::collect_graphs(config, seed + 7919, std::max(10, config.gae_graphs / 5));
  if (!buffer_dir.empty()) c2s::save_graph_buffer(buffer_dir, graphs);
  c2s::Rng init = c2s::substream(seed, "init.gae");
  c2s::GaeModel model(init, c2s::gae_settings(config));
  c2s::Rng rng = c2s::substream(seed, "train.gae");
  const double before = c2s::edge_auc(model, heldout);
  const auto losses = c2s::train_gae(model, graphs, config.gae_epochs, rng);
  const double after = c2s::edge_auc(model, heldout);
  std::filesystem::create_directories(config.output_dir);
  const std::string path =
      config.gae_checkpoint.empty() ? c2s::gae_checkpoint_path(config, seed) : config.gae_checkpoint;
  model.save_file(path);
  std::printf("graphs %zu, held-out %zu\n", graphs.size(), heldout.size());
  if (!losses.empty()) std::printf("loss first %.6f last %.6f\n", losses.front(), losses.back());
  std::printf("held-out AUC before %.4f after %.4f\n", before, after);
  std::printf("saved %s\n", path.c_str());
  return 0;
}

int cmd_oracle_check(const std::string& instance_path, int count, int orders, std::uint64_t seed) {
  std::vector<c2s::MicroInstance> instances;
  if (!instance_path.empty()) {
    std::ifstream is(instance_path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + instance_path);
    instances.push_back(c2s::read_oracle_instance(is));
  } else {
    c2s::Rng rng = c2s::substream(seed, "oracle-check");
    for (int i = 0; i < count; ++i) instances.push_back(c2s::random_micro_instance(rng, orders));
  }
  int failures = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto best = c2s::brute_force(inst);
    const auto heur = c2s::heuristic_routes(inst);
    if (!best) {
      std::printf("instance %zu: infeasible%s\n", i, heur ? " but the heuristic served it" : "");
      if (heur) ++failures;
      continue;
    }
    if (const auto v = c2s::validate(inst, best->routes); !v.empty()) {
      std::printf("instance %zu: oracle routes invalid: %s\n", i, v.front().c_str());
      ++failures;
      continue;
    }
    if (!heur) {
      std::printf("instance %zu: J* %.6f, heuristic left orders unserved\n", i, best->cost);
      continue;
    }
    const double j = c2s::route_set_cost(inst, *heur);
    const auto hv = c2s::validate(inst, *heur);
    const bool beaten = j < best->cost - 1e-9;
    if (beaten || !hv.empty()) ++failures;
    if (instances.size() == 1 || beaten || !hv.empty())
      std::printf("instance %zu: J* %.6f, heuristic %.6f%s%s\n", i, best->cost, j,
                  beaten ? " HEURISTIC BEATS ORACLE" : "", hv.empty() ? "" : " INVALID HEURISTIC");
  }
  std::printf("%zu instances, %d violations\n", instances.size(), failures);
  return failures == 0 ? 0 : kExitViolation;
}

int cmd_dump_world(const Common& common, int episode, std::uint64_t seed) {
  auto config = load_config(common, c2s::RunMode::Eval);
  c2s::Agents agents;
  if (config.combo.learnable()) agents = c2s::load_agents(config.combo, config);
  c2s::EpisodeOptions opt;
  opt.seed = seed;
  opt.episode = episode;
  opt.demand = config.demand;
  const auto result = c2s::run_episode(config.combo, agents, config, opt);
  std::filesystem::create_directories(config.output_dir);
  const auto dir = std::filesystem::path(config.output_dir);
  const std::string orders_path = (dir / ("world_dump_" + std::to_string(episode) + ".csv")).string();
  c2s::write_order_dump_file(orders_path, result.world.orders());
  const std::string trips_path = (dir / ("trips_" + std::to_string(episode) + ".csv")).string();
  std::ofstream trips(trips_path, std::ios::binary);
  c2s::write_trip_log(trips, result.world.trips(), config.env.capacity);
  for (const auto& e : result.events)
    std::printf("t=%g %s %d\n", e.time, c2s::to_string(e.kind), e.count);
  std::printf("orders -> %s\ntrips -> %s\n", orders_path.c_str(), trips_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint fulfillment and routing simulator"};
  app.require_subcommand(1);

  Common common;
  auto* train = app.add_subcommand("train", "Train the learned agents of a combo");
  add_common(train, common);
  auto* eval = app.add_subcommand("eval", "Greedy evaluation from checkpoints");
  add_common(eval, common);
  std::string buffer_dir;
  auto* gae = app.add_subcommand("train-gae", "Train the graph embedding model on heuristic rollouts");
  add_common(gae, common);
  gae->add_option("--buffer-dir", buffer_dir, "Also persist the training graphs here");
  std::string instance_path;
  int count = 200;
  int orders = 7;
  std::uint64_t seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the routing heuristic with the exact solver");
  oracle->add_option("--instance", instance_path, "Instance file (otherwise random instances)");
  oracle->add_option("-n,--count", count, "Random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--orders", orders, "Orders per random instance")->check(CLI::Range(1, 8));
  oracle->add_option("--seed", seed, "Seed for random instances");
  int episode = 0;
  auto* dump = app.add_subcommand("dump-world", "Run one episode and dump orders and trips");
  add_common(dump, common);
  dump->add_option("--episode", episode, "Episode index");
  dump->add_option("--seed", seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(common);
    if (eval->parsed()) return cmd_eval(common);
    if (gae->parsed()) return cmd_train_gae(common, buffer_dir);
    if (oracle->parsed()) return cmd_oracle_check(instance_path, count, orders, seed);
    if (dump->parsed()) return cmd_dump_world(common, episode, seed);
  } catch (const c2s::ConfigError& e) {
    for (const auto& p : e.problems()) std::fprintf(stderr, "config: %s\n", p.c_str());
    return kExitConfig;
  } catch (const c2s::InvariantViolation& e) {
    std::fprintf(stderr, "invariant violated: %s\n", e.what());
    return kExitViolation;
  } catch (const c2s::TripRejected& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitViolation;
  } catch (const c2s::ContractViolation& e) {
    std::fprintf(stderr, "contract violated: %s\n", e.what());
    return kExitViolation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitViolation;
  }
  return 0;
}
