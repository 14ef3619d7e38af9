#include "c2s/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "c2s/text.hpp"

namespace c2s {

using text::format_real;
using text::split;
using text::to_double;
using text::to_integer;
using text::trim;

AgentCombo AgentCombo::parse(std::string_view name) {
  std::string s;
  for (char ch : name)
    if (ch != '+' && ch != '-' && !std::isspace(static_cast<unsigned char>(ch)))
      s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (const auto& combo : all_combos())
    if (combo.tag() == s) return combo;
  throw std::invalid_argument("unknown agent combo '" + std::string(name) +
                              "' (expected H+H, L+H, H+L, L+L or P+L)");
}

std::string AgentCombo::tag() const {
  std::string t;
  t.push_back(c2s == C2sMode::Heuristic ? 'H' : c2s == C2sMode::Learned ? 'L' : 'P');
  t.push_back(vrp == VrpMode::Heuristic ? 'H' : 'L');
  return t;
}

std::string AgentCombo::name() const {
  const std::string t = tag();
  return std::string(1, t[0]) + "+" + t[1];
}

const std::array<AgentCombo, 5>& all_combos() {
  static const std::array<AgentCombo, 5> combos{{
      {C2sMode::Heuristic, VrpMode::Heuristic},
      {C2sMode::Learned, VrpMode::Heuristic},
      {C2sMode::Heuristic, VrpMode::Learned},
      {C2sMode::Learned, VrpMode::Learned},
      {C2sMode::Pretrained, VrpMode::Learned},
  }};
  return combos;
}

namespace {

void collect(std::vector<std::string>& problems, const std::function<void()>& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
}

bool weights_ok(const std::array<double, 4>& w) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  collect(problems, [&] { env.validate(); });
  collect(problems, [&] { demand.validate(); });
  if (mode == RunMode::Train && !combo.learnable())
    problems.push_back("combo " + combo.name() + " has nothing to train");
  if (episodes < 1) problems.push_back("episodes must be positive");
  if (seeds.empty()) problems.push_back("seeds must not be empty");
  if (eval_episodes < 1) problems.push_back("eval_episodes must be positive");
  if (eval_seeds.empty()) problems.push_back("eval_seeds must not be empty");
  if (!weights_ok(eval_weights))
    problems.push_back("eval quadrant weights must be non-negative and sum to 1");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0))
    problems.push_back("epsilon.start must be in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
    problems.push_back("epsilon.decay must be in (0, 1]");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= epsilon_start))
    problems.push_back("epsilon.floor must be in [0, epsilon.start]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) problems.push_back("gamma must be in [0, 1]");
  if (!(c2s_learning_rate > 0.0)) problems.push_back("c2s.learning_rate must be positive");
  if (!(vrp_learning_rate > 0.0)) problems.push_back("vrp.learning_rate must be positive");
  if (batch_size < 1) problems.push_back("train.batch_size must be positive");
  if (replay_capacity < batch_size)
    problems.push_back("train.replay_capacity must be at least train.batch_size");
  if (train_steps < 0) problems.push_back("train.steps must be non-negative");
  if (!(reward.drop_penalty <= 0.0)) problems.push_back("reward.drop_penalty must not be positive");
  if (gae_hidden < 1) problems.push_back("gae.hidden must be positive");
  if (gae_graphs < 1) problems.push_back("gae.graphs must be positive");
  if (gae_epochs < 0) problems.push_back("gae.epochs must be non-negative");
  if (!(gae_learning_rate > 0.0)) problems.push_back("gae.learning_rate must be positive");
  if (output_dir.empty()) problems.push_back("paths.output_dir must not be empty");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double RunConfig::epsilon_at(int episode) const {
  return std::max(epsilon_floor, epsilon_start * std::pow(epsilon_decay, episode));
}

std::string format_fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace {

struct Column {
  std::string name;
  bool integral;
  std::function<double(const EpisodeMetrics&)> get;
  std::function<void(EpisodeMetrics&, double)> set;
};

#define C2S_INT_COLUMN(field)                                                    \
  Column {                                                                       \
    #field, true, [](const EpisodeMetrics& m) { return static_cast<double>(m.field); }, \
        [](EpisodeMetrics& m, double v) { m.field = static_cast<decltype(m.field)>(v); } \
  }
#define C2S_REAL_COLUMN(name, field)                                \
  Column {                                                          \
    name, false, [](const EpisodeMetrics& m) { return m.field; },   \
        [](EpisodeMetrics& m, double v) { m.field = v; }            \
  }

const std::vector<Column>& columns() {
  static const std::vector<Column> cols{
      C2S_INT_COLUMN(episode),
      C2S_INT_COLUMN(seed),
      C2S_INT_COLUMN(generated),
      C2S_INT_COLUMN(served),
      C2S_INT_COLUMN(dropped),
      C2S_INT_COLUMN(deferred),
      C2S_INT_COLUMN(open_at_end),
      C2S_INT_COLUMN(trips),
      C2S_INT_COLUMN(vehicles),
      C2S_REAL_COLUMN("served_per_trip", served_per_trip),
      C2S_REAL_COLUMN("sum_reward", sum_reward),
      C2S_REAL_COLUMN("mean_distance_reward", mean_distance_reward),
      C2S_REAL_COLUMN("mean_trip_reward", mean_trip_reward),
      C2S_REAL_COLUMN("mean_utilization_reward", mean_utilization_reward),
      C2S_REAL_COLUMN("mean_utilization", mean_utilization),
      C2S_REAL_COLUMN("epsilon", epsilon),
      C2S_REAL_COLUMN("c2s_loss", c2s_loss),
      C2S_REAL_COLUMN("vrp_loss", vrp_loss),
  };
  return cols;
}

#undef C2S_INT_COLUMN
#undef C2S_REAL_COLUMN

}  // namespace

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.push_back(c.name);
    return n;
  }();
  return names;
}

std::vector<double> metric_values(const EpisodeMetrics& m) {
  std::vector<double> out;
  for (const auto& c : columns()) out.push_back(c.get(m));
  return out;
}

void export_csv(std::span<const EpisodeMetrics> records, std::ostream& os) {
  os << "# " << kMetricsSchema << '\n';
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i].name;
  os << '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) os << ',';
      if (cols[i].integral)
        os << static_cast<long long>(cols[i].get(r));
      else
        os << format_fixed(cols[i].get(r));
    }
    os << '\n';
  }
}

void export_csv(std::span<const EpisodeMetrics> records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  export_csv(records, os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<EpisodeMetrics> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != std::string("# ") + kMetricsSchema)
    throw std::runtime_error("metrics csv: missing schema line '# " + std::string(kMetricsSchema) +
                             "'");
  if (!std::getline(is, line)) throw std::runtime_error("metrics csv: missing header");
  const auto header = split(trim(line), ',');
  const auto& cols = columns();
  std::vector<const Column*> order;
  for (const auto& h : header) {
    const auto it = std::find_if(cols.begin(), cols.end(), [&](const Column& c) { return c.name == h; });
    if (it == cols.end()) throw std::runtime_error("metrics csv: unknown column '" + h + "'");
    order.push_back(&*it);
  }
  std::vector<EpisodeMetrics> out;
  int lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != order.size())
      throw std::runtime_error("metrics csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(order.size()) + " fields");
    EpisodeMetrics m;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        order[i]->set(m, order[i]->integral ? static_cast<double>(to_integer(cells[i]))
                                            : to_double(cells[i]));
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("metrics csv line " + std::to_string(lineno) + ", column " +
                                 order[i]->name + ": " + e.what());
      }
    }
    out.push_back(m);
  }
  return out;
}

std::vector<EpisodeMetrics> parse_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return parse_csv(is);
}

std::vector<SummaryRow> summarize(std::span<const EpisodeMetrics> records, GroupBy by) {
  std::map<std::int64_t, std::vector<std::vector<double>>> groups;
  for (const auto& r : records) {
    const std::int64_t key = by == GroupBy::Episode ? r.episode : static_cast<std::int64_t>(r.seed);
    groups[key].push_back(metric_values(r));
  }
  std::vector<SummaryRow> out;
  const std::size_t width = columns().size();
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    s.group = key;
    s.count = rows.size();
    s.mean.assign(width, 0.0);
    s.stddev.assign(width, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows)
      for (std::size_t c = 0; c < width; ++c) s.mean[c] += row[c] / n;
    for (const auto& row : rows)
      for (std::size_t c = 0; c < width; ++c) s.stddev[c] += (row[c] - s.mean[c]) * (row[c] - s.mean[c]) / n;
    for (auto& v : s.stddev) v = std::sqrt(v);
    out.push_back(std::move(s));
  }
  return out;
}

void export_summary_csv(std::span<const SummaryRow> rows, std::ostream& os) {
  os << "# " << kMetricsSchema << " summary\n";
  os << "group,count";
  for (const auto& c : columns()) os << ',' << c.name << "_mean," << c.name << "_std";
  os << '\n';
  for (const auto& r : rows) {
    os << r.group << ',' << r.count;
    for (std::size_t c = 0; c < r.mean.size(); ++c)
      os << ',' << format_fixed(r.mean[c]) << ',' << format_fixed(r.stddev[c]);
    os << '\n';
  }
}

namespace {

struct ConfigKey {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(s, ',')) {
    const long long v = to_integer(part);
    if (v < 0) throw std::invalid_argument("seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::string render_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

std::array<double, 4> parse_weights(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 4) throw std::invalid_argument("expected four comma-separated weights");
  std::array<double, 4> w{};
  for (std::size_t i = 0; i < 4; ++i) w[i] = to_double(parts[i]);
  return w;
}

std::string render_weights(const std::array<double, 4>& w) {
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) out += (i ? "," : "") + format_real(w[i]);
  return out;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < -2147483647LL || v > 2147483647LL) throw std::invalid_argument("integer out of range");
  return static_cast<int>(v);
}

template <typename Field>
ConfigKey int_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, const std::string& v) { field(c) = to_int(v); },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
ConfigKey real_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, const std::string& v) { field(c) = to_double(v); },
          [field](const RunConfig& c) { return format_real(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
ConfigKey string_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, const std::string& v) { field(c) = trim(v); },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

#define C2S_FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<ConfigKey>& key_table() {
  static const std::vector<ConfigKey> keys{
      {"combo", [](RunConfig& c, const std::string& v) { c.combo = AgentCombo::parse(trim(v)); },
       [](const RunConfig& c) { return c.combo.name(); }},
      {"mode",
       [](RunConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "train")
           c.mode = RunMode::Train;
         else if (t == "eval")
           c.mode = RunMode::Eval;
         else
           throw std::invalid_argument("mode must be train or eval");
       },
       [](const RunConfig& c) { return std::string(c.mode == RunMode::Train ? "train" : "eval"); }},
      int_key("episodes", C2S_FIELD(episodes)),
      {"seeds", [](RunConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); },
       [](const RunConfig& c) { return render_seeds(c.seeds); }},
      int_key("eval.episodes", C2S_FIELD(eval_episodes)),
      {"eval.seeds", [](RunConfig& c, const std::string& v) { c.eval_seeds = parse_seed_list(v); },
       [](const RunConfig& c) { return render_seeds(c.eval_seeds); }},
      {"eval.quadrant_weights",
       [](RunConfig& c, const std::string& v) { c.eval_weights = parse_weights(v); },
       [](const RunConfig& c) { return render_weights(c.eval_weights); }},
      int_key("env.num_warehouses", C2S_FIELD(env.num_warehouses)),
      real_key("env.wave_period", C2S_FIELD(env.wave_period)),
      real_key("env.horizon", C2S_FIELD(env.horizon)),
      int_key("env.capacity", C2S_FIELD(env.capacity)),
      real_key("env.speed", C2S_FIELD(env.speed)),
      real_key("env.service_time", C2S_FIELD(env.service_time)),
      int_key("env.max_inventory", C2S_FIELD(env.max_inventory)),
      {"env.restock_half_period",
       [](RunConfig& c, const std::string& v) { c.env.restock_half_period = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.env.restock_half_period ? "true" : "false"); }},
      int_key("demand.customers_low", C2S_FIELD(demand.customers_low)),
      int_key("demand.customers_high", C2S_FIELD(demand.customers_high)),
      int_key("demand.demand_low", C2S_FIELD(demand.demand_low)),
      int_key("demand.demand_high", C2S_FIELD(demand.demand_high)),
      real_key("demand.open_offset_low", C2S_FIELD(demand.open_offset_low)),
      real_key("demand.open_offset_high", C2S_FIELD(demand.open_offset_high)),
      real_key("demand.width_low", C2S_FIELD(demand.width_low)),
      real_key("demand.width_high", C2S_FIELD(demand.width_high)),
      {"demand.quadrant_weights",
       [](RunConfig& c, const std::string& v) { c.demand.quadrant_weights = parse_weights(v); },
       [](const RunConfig& c) { return render_weights(c.demand.quadrant_weights); }},
      real_key("epsilon.start", C2S_FIELD(epsilon_start)),
      real_key("epsilon.decay", C2S_FIELD(epsilon_decay)),
      real_key("epsilon.floor", C2S_FIELD(epsilon_floor)),
      real_key("gamma", C2S_FIELD(gamma)),
      real_key("c2s.learning_rate", C2S_FIELD(c2s_learning_rate)),
      real_key("vrp.learning_rate", C2S_FIELD(vrp_learning_rate)),
      int_key("train.batch_size", C2S_FIELD(batch_size)),
      int_key("train.replay_capacity", C2S_FIELD(replay_capacity)),
      int_key("train.steps", C2S_FIELD(train_steps)),
      real_key("reward.a1", C2S_FIELD(reward.a1)),
      real_key("reward.a2", C2S_FIELD(reward.a2)),
      real_key("reward.drop_penalty", C2S_FIELD(reward.drop_penalty)),
      int_key("gae.hidden", C2S_FIELD(gae_hidden)),
      int_key("gae.graphs", C2S_FIELD(gae_graphs)),
      int_key("gae.epochs", C2S_FIELD(gae_epochs)),
      real_key("gae.learning_rate", C2S_FIELD(gae_learning_rate)),
      string_key("paths.output_dir", C2S_FIELD(output_dir)),
      string_key("paths.c2s_checkpoint", C2S_FIELD(c2s_checkpoint)),
      string_key("paths.vrp_checkpoint", C2S_FIELD(vrp_checkpoint)),
      string_key("paths.gae_checkpoint", C2S_FIELD(gae_checkpoint)),
  };
  return keys;
}

#undef C2S_FIELD

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : key_table())
    if (k.name == name) return &k;
  return nullptr;
}

// Returns an error message, empty on success.
std::string assign(RunConfig& config, const std::string& key, const std::string& value) {
  const ConfigKey* k = find_key(key);
  if (!k) return "unknown key '" + key + "'";
  try {
    k->set(config, value);
  } catch (const std::exception& e) {
    return "field '" + key + "': " + e.what();
  }
  return {};
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : key_table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

RunConfig parse_config_text(const std::string& text, const std::string& source, bool validate) {
  RunConfig config;
  std::vector<std::string> problems;
  std::istringstream is(text);
  std::string line;
  std::map<std::string, int> seen;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, lineno); !fresh) {
      problems.push_back(where + "duplicate key '" + key + "' (first on line " +
                         std::to_string(it->second) + ")");
      continue;
    }
    if (const std::string err = assign(config, key, value); !err.empty())
      problems.push_back(where + err);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  if (validate) config.validate();
  return config;
}

RunConfig parse_config(const std::string& path, bool validate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError({"cannot read config file " + path});
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path, validate);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError({"override '" + assignment + "': expected key=value"});
  const std::string err = assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  if (!err.empty()) throw ConfigError({"override: " + err});
}

std::string render_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace c2s
