#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "c2s/config.hpp"

namespace c2s {

inline constexpr const char* kMetricsSchema = "c2s-episode-metrics/1";

struct EpisodeMetrics {
  int episode = 0;
  std::uint64_t seed = 0;
  int generated = 0;
  int served = 0;
  int dropped = 0;
  int deferred = 0;  // defer decisions taken
  int open_at_end = 0;
  int trips = 0;
  int vehicles = 0;
  double served_per_trip = 0.0;
  double sum_reward = 0.0;
  double mean_distance_reward = 0.0;     // D
  double mean_trip_reward = 0.0;         // L
  double mean_utilization_reward = 0.0;  // U
  double mean_utilization = 0.0;
  double epsilon = 0.0;
  double c2s_loss = 0.0;
  double vrp_loss = 0.0;
};

// Column names in export order.
const std::vector<std::string>& metric_columns();
// Numeric view of a record in column order.
std::vector<double> metric_values(const EpisodeMetrics& m);

// Schema comment line, header row, one row per record; reals fixed with six
// decimals; LF endings.
void export_csv(std::span<const EpisodeMetrics> records, std::ostream& os);
void export_csv(std::span<const EpisodeMetrics> records, const std::string& path);
std::vector<EpisodeMetrics> parse_csv(std::istream& is);
std::vector<EpisodeMetrics> parse_csv_file(const std::string& path);

enum class GroupBy { Episode, Seed };

struct SummaryRow {
  std::int64_t group = 0;
  std::size_t count = 0;
  std::vector<double> mean;  // per metric column
  std::vector<double> stddev;  // population
};

std::vector<SummaryRow> summarize(std::span<const EpisodeMetrics> records,
                                  GroupBy by = GroupBy::Episode);
void export_summary_csv(std::span<const SummaryRow> rows, std::ostream& os);

// Flat "dotted.key = value" text. Absent keys keep their defaults; unknown
// keys and malformed values are errors reported with their line numbers.
// With validate unset the result may still be invalid; callers that apply
// overrides validate afterwards.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>",
                            bool validate = true);
RunConfig parse_config(const std::string& path, bool validate = true);
// Applies one "key=value" override on top of an existing config.
void apply_override(RunConfig& config, const std::string& assignment);
std::string render_config(const RunConfig& config);
const std::vector<std::string>& config_keys();

std::string format_fixed(double value);

}  // namespace c2s
