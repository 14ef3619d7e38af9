// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "c2s/micro.hpp"
#include "c2s/orchestrator.hpp"

using namespace c2s;

namespace {

// Pinned thresholds and sizes.
constexpr int kValidationInstances = 1000;
constexpr int kValidationCustomers = 30;
constexpr int kMicroInstances = 200;
constexpr int kMicroMaxOrders = 7;
constexpr int kTrainEpisodes = 200;
constexpr int kEvalEpisodes = 20;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kTripRatioMax = 0.85;
constexpr double kUtilizationRatioMin = 1.3;
constexpr std::size_t kMinSettledRewards = 100000;
constexpr double kDistanceFloor = -2.1214;
constexpr double kDropPenalty = -10.0;
constexpr double kRewardTolerance = 1e-12;
constexpr double kGradientTolerance = 1e-4;
constexpr double kAucMin = 0.8;
constexpr int kGaeGraphs = 100;
constexpr int kHeldoutGraphs = 20;
constexpr double kTimeTolerance = 1e-9;
// Desk profile for the learning criteria: 30 customers per wave, slow fleet.
constexpr double kDeskSpeed = 0.01;
constexpr int kDeskCustomers = 30;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string csv_of(const std::vector<EpisodeMetrics>& rows) {
  std::ostringstream os;
  export_csv(rows, os);
  return os.str();
}

double mean_of(const std::vector<EpisodeMetrics>& rows, double EpisodeMetrics::*field) {
  double s = 0.0;
  for (const auto& r : rows) s += r.*field;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double mean_trips(const std::vector<EpisodeMetrics>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += r.trips;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

std::filesystem::path work_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("c2s_acceptance_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

RunConfig desk_config(const std::string& name) {
  RunConfig c;
  c.env.speed = kDeskSpeed;
  c.demand.customers_low = kDeskCustomers;
  c.demand.customers_high = kDeskCustomers;
  c.episodes = kTrainEpisodes;
  c.eval_episodes = kEvalEpisodes;
  c.output_dir = work_dir(name).string();
  return c;
}

int conservation_failures = 0;

void check_conservation(const std::vector<EpisodeMetrics>& rows) {
  for (const auto& m : rows)
    if (m.generated != m.served + m.dropped + m.open_at_end) ++conservation_failures;
}

// Independent replay of a trip: legs, waiting, windows, load and capacity.
int trip_violations(const World& world, const Trip& trip) {
  const EnvConstants& env = world.constants();
  int bad = 0;
  Point here = world.warehouse(trip.depot).location;
  double ready = trip.start_time;
  int load = 0;
  for (const auto& v : trip.visits) {
    const Order& o = world.order(v.order);
    const double earliest = ready + distance(here, o.location) / env.speed;
    if (v.service_start + kTimeTolerance < earliest) ++bad;
    if (v.service_start + kTimeTolerance < o.window_open) ++bad;
    if (v.service_start > o.window_close + kTimeTolerance) ++bad;
    load += o.demand;
    ready = v.service_start + env.service_time;
    here = o.location;
  }
  if (load > env.capacity || load != trip.load) ++bad;
  return bad;
}

struct Trained {
  RunConfig config;  // seeds = {seed}
  std::uint64_t seed = 0;
};

// H+L trained per seed on the desk profile.
std::vector<Trained> train_desk() {
  std::vector<Trained> out;
  for (std::uint64_t seed : kSeeds) {
    RunConfig c = desk_config("desk_" + std::to_string(seed));
    c.combo = AgentCombo::parse("H+L");
    c.mode = RunMode::Train;
    c.seeds = {seed};
    c.eval_seeds = {100 + seed};
    train(c);
    c.mode = RunMode::Eval;
    out.push_back({c, seed});
  }
  return out;
}

Outcome criterion_validation(const Trained& trained) {
  const auto start = Clock::now();
  Agents agents = load_agents(AgentCombo::parse("H+L"), trained.config);
  DemandParams params;
  params.customers_low = kValidationCustomers;
  params.customers_high = kValidationCustomers;
  int trips = 0, rejected = 0, replay_bad = 0;
  for (int i = 0; i < kValidationInstances; ++i) {
    EnvConstants env;
    env.speed = i % 2 == 0 ? 0.1 : kDeskSpeed;
    DemandStreams streams = DemandStreams::from_seed(substream(7, "validation", i)());
    const auto orders = sample_wave(streams, 0.0, params, env);
    Rng rng = substream(7, "validation.route", i);
    const int depot = i % env.num_warehouses;
    for (int which = 0; which < 2; ++which) {
      World world(env);
      for (auto o : orders) world.assign_order(world.add_order(o), depot);
      const RoutingContext ctx = make_context(world, depot, 0.0);
      const RoutingResult res = which == 0 ? vrp_heuristic(ctx) : agents.vrp->route(ctx, false, 0.0, rng);
      for (const auto& seq : res.order_sequences(ctx)) {
        ++trips;
        try {
          const Trip trip = world.execute_trip({depot, 0.0, seq});
          replay_bad += trip_violations(world, trip);
        } catch (const TripRejected&) {
          ++rejected;
        }
      }
    }
  }
  Outcome out;
  out.seconds = since(start);
  out.pass = rejected == 0 && replay_bad == 0 && trips > 0;
  out.detail = fmt("%d instances, %d trips (VRP-H and trained VRP-L), %d rejected, %d replay violations",
                   kValidationInstances, trips, rejected, replay_bad);
  return out;
}

Outcome criterion_oracle() {
  const auto start = Clock::now();
  Rng rng = substream(11, "micro");
  int beaten = 0, unserved = 0, infeasible = 0, ties = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < kMicroInstances; ++i) {
    const auto inst = random_micro_instance(rng, 1 + i % kMicroMaxOrders);
    const auto best = brute_force(inst);
    const auto heur = heuristic_routes(inst);
    if (!best) {
      ++infeasible;
      if (heur) ++beaten;
      continue;
    }
    if (!heur) {
      ++unserved;
      continue;
    }
    const double j = route_set_cost(inst, *heur);
    if (j < best->cost - 1e-9 || !validate(inst, *heur).empty()) ++beaten;
    if (std::abs(j - best->cost) <= 1e-9) ++ties;
    worst_gap = std::max(worst_gap, j / std::max(best->cost, 1e-12));
  }
  Outcome out;
  out.seconds = since(start);
  out.pass = beaten == 0 && infeasible == 0;
  out.detail = fmt("%d instances, %d heuristic wins, %d ties, %d left unserved by heuristic, "
                   "%d oracle-infeasible, worst J(H)/J* %.3f",
                   kMicroInstances, beaten, ties, unserved, infeasible, worst_gap);
  return out;
}

struct Comparison {
  std::vector<EpisodeMetrics> hh, hl;
};

Comparison compare_desk(const std::vector<Trained>& trained) {
  Comparison c;
  for (const auto& t : trained) {
    Agents none;
    const auto hh = evaluate(AgentCombo::parse("H+H"), none, t.config, false);
    Agents agents = load_agents(AgentCombo::parse("H+L"), t.config);
    const auto hl = evaluate(AgentCombo::parse("H+L"), agents, t.config, false);
    check_conservation(hh);
    check_conservation(hl);
    c.hh.insert(c.hh.end(), hh.begin(), hh.end());
    c.hl.insert(c.hl.end(), hl.begin(), hl.end());
  }
  return c;
}

Outcome criterion_trips(const Comparison& c, double train_seconds) {
  const double h = mean_trips(c.hh), l = mean_trips(c.hl);
  Outcome out;
  out.seconds = train_seconds;
  out.pass = l <= kTripRatioMax * h;
  out.detail = fmt("H+L %.2f vs H+H %.2f trips/episode, ratio %.3f (need <= %.2f); %zu eval episodes, "
                   "%d training episodes x %zu seeds",
                   l, h, l / h, kTripRatioMax, c.hl.size(), kTrainEpisodes, std::size(kSeeds));
  return out;
}

Outcome criterion_utilization(const Comparison& c) {
  const double h = mean_of(c.hh, &EpisodeMetrics::mean_utilization);
  const double l = mean_of(c.hl, &EpisodeMetrics::mean_utilization);
  Outcome out;
  out.pass = l >= kUtilizationRatioMin * h;
  out.detail = fmt("H+L %.3f vs H+H %.3f mean utilization, ratio %.3f (need >= %.2f)", l, h, l / h,
                   kUtilizationRatioMin);
  return out;
}

Outcome criterion_rewards() {
  const auto start = Clock::now();
  RunConfig c;
  c.demand.customers_low = kDeskCustomers;
  c.demand.customers_high = kDeskCustomers;
  c.demand.quadrant_weights = kSkewedWeights;  // stock-outs force defers
  c.env.max_inventory = 60;
  const auto combo = AgentCombo::parse("L+L");
  std::size_t rewards = 0, chains = 0, deferred_chains = 0, drops = 0;
  int violations = 0;
  std::vector<EpisodeMetrics> rows;
  for (int ep = 0; rewards < kMinSettledRewards; ++ep) {
    Agents agents = make_agents(combo, c, 5);
    EpisodeOptions opt;
    opt.seed = 5;
    opt.episode = ep;
    opt.epsilon = 0.5;
    opt.demand = c.demand;
    std::optional<EpisodeResult> r;
    try {
      r.emplace(run_episode(combo, agents, c, opt));
    } catch (const ContractViolation&) {
      ++violations;
      continue;
    }
    rows.push_back(r->metrics);
    for (const auto& s : r->settlements) {
      ++chains;
      if (s.defers > 0) ++deferred_chains;
      double base = 0.0;
      if (s.dropped) {
        ++drops;
        if (s.base != kDropPenalty) ++violations;
        base = kDropPenalty;
      } else {
        if (!s.components) {
          ++violations;
          continue;
        }
        const auto& k = *s.components;
        if (!(k.distance >= kDistanceFloor && k.distance <= 0.0)) ++violations;
        if (!(k.trip >= -1.0 && k.trip <= 0.0)) ++violations;
        if (!(k.utilization >= -1.0 && k.utilization <= 0.0)) ++violations;
        if (k.fulfilled != 1.0) ++violations;
        base = c.reward.a1 * (k.distance + k.trip) + k.fulfilled + c.reward.a2 * k.utilization;
        if (std::abs(base - s.base) > kRewardTolerance) ++violations;
      }
      const int h = s.defers;
      if (s.rewards.size() != static_cast<std::size_t>(h) + 1) {
        ++violations;
        continue;
      }
      for (int k = 1; k <= h; ++k) {
        double factor = 1.0;
        for (int e = 0; e < h - k + 1; ++e) factor *= c.gamma;
        if (std::abs(s.rewards[static_cast<std::size_t>(k - 1)] - factor * base) > kRewardTolerance)
          ++violations;
      }
      if (s.rewards.back() != base) ++violations;
      rewards += s.rewards.size();
    }
  }
  check_conservation(rows);
  Outcome out;
  out.seconds = since(start);
  out.pass = violations == 0 && rewards >= kMinSettledRewards && deferred_chains > 0 && drops > 0;
  out.detail = fmt("%zu settled rewards over %zu chains (%zu with defers, %zu drops) in %zu episodes, "
                   "%d violations",
                   rewards, chains, deferred_chains, drops, rows.size(), violations);
  return out;
}

// Small training runs of every combo, reused by criteria 6 and 9.
struct Protocol {
  RunConfig config;
  std::vector<std::string> errors;
  bool frozen = false;
  std::string frozen_detail;
};

Protocol run_protocol() {
  Protocol p;
  RunConfig c;
  c.episodes = 5;
  c.seeds = {21};
  c.eval_episodes = 3;
  c.eval_seeds = {121, 122};
  c.batch_size = 64;
  c.gae_graphs = 20;
  c.gae_epochs = 5;
  c.output_dir = work_dir("protocol").string();
  for (const auto& combo : all_combos()) {
    c.combo = combo;
    try {
      if (combo.learnable() || combo.c2s == C2sMode::Pretrained) {
        c.mode = RunMode::Train;
        train(c);
      }
      c.mode = RunMode::Eval;
      const auto rows = evaluate(c);
      check_conservation(rows);
      if (rows.size() != 6) p.errors.push_back(combo.name() + ": wrong eval row count");
    } catch (const std::exception& e) {
      p.errors.push_back(combo.name() + ": " + e.what());
    }
  }
  c.combo = AgentCombo::parse("P+L");
  const std::string phase1 = phase1_checkpoint_path(c, 21);
  const std::string final_c2s = c2s_checkpoint_path(c, c.combo, 21);
  p.frozen = std::filesystem::exists(phase1) && std::filesystem::exists(final_c2s) &&
             slurp(phase1) == slurp(final_c2s);
  p.frozen_detail = p.frozen ? "phase-1 and final C2S checkpoints byte-identical"
                             : "phase-1 weights changed or missing";
  p.config = c;
  return p;
}

Outcome criterion_determinism(const Protocol& p) {
  const auto start = Clock::now();
  int mismatched = 0, compared = 0;
  for (const auto& combo : all_combos()) {
    RunConfig c = p.config;
    c.combo = combo;
    c.mode = RunMode::Eval;
    try {
      Agents a = load_agents(combo, c);
      Agents b = load_agents(combo, c);
      const auto ra = evaluate(combo, a, c, false);
      const auto rb = evaluate(combo, b, c, false);
      check_conservation(ra);
      if (csv_of(ra) != csv_of(rb)) ++mismatched;
      ++compared;
    } catch (const std::exception&) {
      ++mismatched;
    }
  }
  Outcome out;
  out.seconds = since(start);
  out.pass = mismatched == 0 && conservation_failures == 0 && compared == 5;
  out.detail = fmt("%d/5 combos compared across two eval runs, %d mismatched; %d conservation "
                   "failures over every run in this binary",
                   compared, mismatched, conservation_failures);
  return out;
}

Outcome criterion_gradients() {
  const auto start = Clock::now();
  Rng rng = substream(31, "gradients");
  std::normal_distribution<double> n(0.0, 0.5);
  auto random_vec = [&](int size) { return Vector(Vector::NullaryExpr(size, [&] { return n(rng); })); };
  double dqn = 0.0, vrp = 0.0, gcn = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    C2sAgent c2s(4, rng);
    dqn = std::max(dqn, gradient_check(c2s.net(), random_vec(19), random_vec(5)));
    VrpAgent v(rng);
    vrp = std::max(vrp, gradient_check(v.net(), random_vec(17), random_vec(1)));
    GaeModel gae(rng);
    std::vector<Point> pts;
    for (int k = 0; k < 20; ++k) pts.push_back(sample_location(rng, kUniformWeights));
    std::vector<Warehouse> wh;
    for (int w = 0; w < 4; ++w) wh.push_back({w, warehouse_location(w), 500, 500});
    const auto g = build_graph(pts, wh);
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> labels;
    GaeModel::sample_pairs(g, rng, pairs, labels);
    if (!pairs.empty()) gcn = std::max(gcn, gae_gradient_check(gae, g, pairs, labels));
  }
  Outcome out;
  out.seconds = since(start);
  out.pass = dqn <= kGradientTolerance && vrp <= kGradientTolerance && gcn <= kGradientTolerance;
  out.detail = fmt("max relative error DQN %.2e, VRP value net %.2e, GCN %.2e (need <= %.0e)", dqn,
                   vrp, gcn, kGradientTolerance);
  return out;
}

Outcome criterion_gae() {
  const auto start = Clock::now();
  RunConfig c;
  c.gae_graphs = kGaeGraphs;
  const std::uint64_t seed = 41;
  const auto heldout = collect_graphs(c, seed + 1000, kHeldoutGraphs);
  Rng init = substream(seed, "init.gae");
  const GaeModel untrained(init, gae_settings(c));
  const double before = edge_auc(untrained, heldout);
  const GaeModel model = train_gae_from_rollouts(c, seed);
  const double auc = edge_auc(model, heldout);
  int bad = 0;
  long pairs = 0;
  for (const auto& g : heldout) {
    const Matrix e = model.encode(g);
    const double m = max_pairwise_distance(e);
    for (int i = 0; i < g.size(); ++i) {
      if (decode_similarity(e.row(i).transpose(), e.row(i).transpose(), m) != 1.0) ++bad;
      for (int j = 0; j < g.size(); ++j, ++pairs) {
        const double s = decode_similarity(e.row(i).transpose(), e.row(j).transpose(), m);
        if (!(s >= 0.0 && s <= 1.0)) ++bad;
      }
    }
  }
  Outcome out;
  out.seconds = since(start);
  out.pass = auc >= kAucMin && bad == 0;
  out.detail = fmt("held-out AUC %.4f (untrained %.4f, need >= %.2f) on %d graphs; %ld similarity "
                   "pairs, %d out of range or self-similarity != 1",
                   auc, before, kAucMin, kHeldoutGraphs, pairs, bad);
  return out;
}

Outcome criterion_protocol(const Protocol& p, double seconds) {
  Outcome out;
  out.seconds = seconds;
  out.pass = p.errors.empty() && p.frozen;
  out.detail = (p.errors.empty() ? std::string("5/5 combos trained and evaluated") : p.errors.front()) +
               "; " + p.frozen_detail;
  return out;
}

void report(int id, const Outcome& o) {
  std::printf("criterion %d: %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              o.seconds);
  std::fflush(stdout);
}

}  // namespace

int main() {
  std::vector<Outcome> outcomes(10);
  try {
    auto t = Clock::now();
    const auto trained = train_desk();
    const double train_seconds = since(t);

    outcomes[1] = criterion_validation(trained.front());
    outcomes[2] = criterion_oracle();
    t = Clock::now();
    const auto cmp = compare_desk(trained);
    outcomes[3] = criterion_trips(cmp, train_seconds + since(t));
    outcomes[4] = criterion_utilization(cmp);
    outcomes[5] = criterion_rewards();
    t = Clock::now();
    const auto protocol = run_protocol();
    const double protocol_seconds = since(t);
    outcomes[7] = criterion_gradients();
    outcomes[8] = criterion_gae();
    outcomes[9] = criterion_protocol(protocol, protocol_seconds);
    outcomes[6] = criterion_determinism(protocol);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("desk profile for criteria 3-4: v = %.3g, %d customers per wave, horizon 300, "
              "%d training episodes\n",
              kDeskSpeed, kDeskCustomers, kTrainEpisodes);
  bool all = true;
  for (int id = 1; id <= 9; ++id) {
    report(id, outcomes[static_cast<std::size_t>(id)]);
    all = all && outcomes[static_cast<std::size_t>(id)].pass;
  }
  return all ? 0 : 1;
}
