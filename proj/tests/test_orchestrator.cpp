#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "c2s/orchestrator.hpp"

using namespace c2s;

namespace {

RunConfig small_config(const std::string& name) {
  RunConfig c;
  c.episodes = 3;
  c.seeds = {1};
  c.eval_episodes = 2;
  c.eval_seeds = {101};
  c.demand.customers_low = 5;
  c.demand.customers_high = 10;
  c.batch_size = 16;
  c.gae_graphs = 10;
  c.gae_epochs = 3;
  const auto dir = std::filesystem::temp_directory_path() / ("c2s_orch_" + name);
  std::filesystem::remove_all(dir);
  c.output_dir = dir.string();
  return c;
}

EpisodeResult run(const AgentCombo& combo, const RunConfig& c, std::uint64_t seed, int episode) {
  Agents agents = make_agents(combo, c, seed);
  EpisodeOptions opt;
  opt.seed = seed;
  opt.episode = episode;
  opt.demand = c.demand;
  return run_episode(combo, agents, c, opt);
}

std::string csv_of(const std::vector<EpisodeMetrics>& rows) {
  std::ostringstream os;
  export_csv(rows, os);
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void check_conservation(const EpisodeResult& r) {
  const auto& m = r.metrics;
  const auto counts = r.world.counts();
  CHECK(counts.generated == counts.open + counts.assigned + counts.served + counts.dropped);
  CHECK(m.generated == static_cast<int>(counts.generated));
  CHECK(m.served == static_cast<int>(counts.served));
  CHECK(m.dropped == static_cast<int>(counts.dropped));
  CHECK(counts.assigned == 0);
  CHECK(r.settlements.size() == counts.served + counts.dropped);
  for (const auto& s : r.settlements) CHECK(s.rewards.size() == static_cast<std::size_t>(s.defers) + 1);
}

}  // namespace

static void check_cycle(const EpisodeResult& r, const std::vector<WaveEvent>& cycle) {
  REQUIRE(r.events.size() == cycle.size() * 3);
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    CHECK(r.events[k].kind == cycle[k % cycle.size()]);
    CHECK(r.events[k].time == 100.0 * static_cast<double>(k / cycle.size()));
  }
}

TEST_CASE("wave events run in order") {
  const auto c = small_config("events");
  std::vector<WaveEvent> cycle{WaveEvent::Restock, WaveEvent::Spawn, WaveEvent::Expire,
                               WaveEvent::Decide,  WaveEvent::Route, WaveEvent::Settle};
  check_cycle(run(AgentCombo::parse("H+H"), c, 1, 0), cycle);

  const auto ll = AgentCombo::parse("L+L");
  Agents agents = make_agents(ll, c, 1);
  EpisodeOptions opt;
  opt.seed = 1;
  opt.epsilon = 1.0;
  opt.train_c2s = opt.train_vrp = true;
  opt.demand = c.demand;
  cycle.push_back(WaveEvent::Train);
  check_cycle(run_episode(ll, agents, c, opt), cycle);
}

TEST_CASE("half-period restock adds a restock event per wave") {
  auto c = small_config("half");
  c.env.restock_half_period = true;
  const auto r = run(AgentCombo::parse("H+H"), c, 1, 0);
  int restocks = 0;
  for (const auto& e : r.events) restocks += e.kind == WaveEvent::Restock;
  CHECK(restocks == 6);
}

TEST_CASE("heuristic episodes are reproducible") {
  const auto c = small_config("det");
  const auto a = run(AgentCombo::parse("H+H"), c, 5, 2);
  const auto b = run(AgentCombo::parse("H+H"), c, 5, 2);
  CHECK(csv_of({a.metrics}) == csv_of({b.metrics}));
  const auto d = run(AgentCombo::parse("H+H"), c, 6, 2);
  CHECK(csv_of({a.metrics}) != csv_of({d.metrics}));

  Agents none;
  const auto e1 = evaluate(AgentCombo::parse("H+H"), none, c, false);
  const auto e2 = evaluate(AgentCombo::parse("H+H"), none, c, false);
  CHECK(e1.size() == 2);
  CHECK(csv_of(e1) == csv_of(e2));
}

TEST_CASE("episodes without customers do nothing") {
  auto c = small_config("empty");
  c.demand.customers_low = 0;
  c.demand.customers_high = 0;
  const auto r = run(AgentCombo::parse("H+H"), c, 1, 0);
  CHECK(r.metrics.generated == 0);
  CHECK(r.metrics.trips == 0);
  CHECK(r.metrics.sum_reward == 0.0);
}

TEST_CASE("ample stock, speed and windows serve everything") {
  auto c = small_config("ample");
  c.env.speed = 10.0;
  c.demand.width_low = 1.0;
  for (const char* name : {"H+H", "H+L"}) {
    const auto r = run(AgentCombo::parse(name), c, 3, 0);
    CHECK(r.metrics.served == r.metrics.generated);
    CHECK(r.metrics.dropped == 0);
    check_conservation(r);
  }
}

TEST_CASE("conservation and settlement on the default profile") {
  const auto c = small_config("conserve");
  for (const auto& combo : {AgentCombo::parse("H+H"), AgentCombo::parse("L+L")})
    for (int ep = 0; ep < 4; ++ep) check_conservation(run(combo, c, 9, ep));
}

TEST_CASE("epsilon schedule") {
  RunConfig c;
  CHECK(c.epsilon_at(0) == 1.0);
  CHECK(c.epsilon_at(100) == doctest::Approx(0.905).epsilon(1e-3));
}

TEST_CASE("agents must match the combo") {
  const auto c = small_config("mismatch");
  Agents none;
  EpisodeOptions opt;
  CHECK_THROWS_AS(run_episode(AgentCombo::parse("L+L"), none, c, opt), std::invalid_argument);
  CHECK_THROWS_AS(check_agents(AgentCombo::parse("H+L"), none), std::invalid_argument);
  CHECK_NOTHROW(check_agents(AgentCombo::parse("H+H"), none));

  auto hh = c;
  hh.combo = AgentCombo::parse("H+H");
  hh.mode = RunMode::Train;
  CHECK_THROWS_AS(train(hh), ConfigError);
}

TEST_CASE("second phase needs the first") {
  auto c = small_config("phase_missing");
  c.combo = AgentCombo::parse("P+L");
  CHECK_THROWS(train_phase_two(c));
}

TEST_CASE("two-phase training keeps the fulfillment weights fixed") {
  auto c = small_config("phase");
  c.combo = AgentCombo::parse("P+L");
  const auto report = train_two_phase(c);
  REQUIRE(report.runs.size() == 2);  // one per phase
  const std::string phase1 = phase1_checkpoint_path(c, 1);
  const std::string final_c2s = c2s_checkpoint_path(c, c.combo, 1);
  REQUIRE(std::filesystem::exists(phase1));
  REQUIRE(std::filesystem::exists(final_c2s));
  CHECK(slurp(phase1) == slurp(final_c2s));
  CHECK(std::filesystem::exists(vrp_checkpoint_path(c, c.combo, 1)));
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("every combo trains and evaluates end to end") {
  auto c = small_config("all");
  for (const auto& combo : all_combos()) {
    c.combo = combo;
    if (combo.learnable() || combo.c2s == C2sMode::Pretrained) {
      c.mode = RunMode::Train;
      const auto report = train(c);
      REQUIRE(report.runs.size() == (combo.c2s == C2sMode::Pretrained ? 2u : 1u));
      for (const auto& run : report.runs) {
        CHECK(run.curve.size() == 3);
        CHECK(std::filesystem::exists(run.curve_path));
      }
    }
    c.mode = RunMode::Eval;
    const auto rows = evaluate(c);
    CHECK(rows.size() == 2);
    CHECK(std::filesystem::exists(std::filesystem::path(c.output_dir) /
                                  ("eval_" + combo.tag() + ".csv")));
    for (const auto& m : rows) {
      CHECK(m.epsilon == 0.0);
      CHECK(m.served + m.dropped + m.open_at_end <= m.generated);
    }
  }
  std::filesystem::remove_all(c.output_dir);
}
