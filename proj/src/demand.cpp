#include "c2s/demand.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace c2s {

Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  // FNV-1a over the stream name, mixed into the seed sequence.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

void DemandParams::validate() const {
  std::vector<std::string> problems;
  if (customers_low < 0 || customers_low > customers_high)
    problems.push_back("customers per wave: need 0 <= low <= high");
  if (demand_low < 1 || demand_low > demand_high)
    problems.push_back("demand range: need 1 <= low <= high");
  if (!(open_offset_low >= 0.0 && open_offset_low <= open_offset_high))
    problems.push_back("window open offsets: need 0 <= low <= high");
  if (!(width_low > 0.0 && width_low <= width_high))
    problems.push_back("window widths: need 0 < low <= high");
  double sum = 0.0;
  bool negative = false;
  for (double w : quadrant_weights) {
    sum += w;
    negative = negative || !(w >= 0.0);
  }
  if (negative) problems.push_back("quadrant weights must be non-negative");
  if (std::abs(sum - 1.0) > 1e-9) problems.push_back("quadrant weights must sum to 1");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::pair<double, double> sample_time_window(Rng& rng, double t, double period,
                                             const DemandParams& params) {
  std::uniform_real_distribution<double> open(params.open_offset_low * period,
                                              params.open_offset_high * period);
  std::uniform_real_distribution<double> width(params.width_low * period,
                                               params.width_high * period);
  const double lo = t + open(rng);
  const double hi = lo + width(rng);
  return {lo, hi};
}

int sample_demand(Rng& rng, int low, int high) {
  return std::uniform_int_distribution<int>(low, high)(rng);
}

namespace {

// Uniform point inside quadrant q, drawn on the raw grid then normalized.
Point point_in_quadrant(int q, Rng& rng) {
  std::uniform_real_distribution<double> coord(0.0, kGridScale);
  const double sx = (q == 0 || q == 3) ? 1.0 : -1.0;
  const double sy = (q == 0 || q == 1) ? 1.0 : -1.0;
  const double rx = coord(rng);
  const double ry = coord(rng);
  return from_raw(sx * rx, sy * ry);
}

}  // namespace

Point sample_location(Rng& rng, const std::array<double, 4>& weights) {
  std::discrete_distribution<int> quadrant(weights.begin(), weights.end());
  const int q = quadrant(rng);
  return point_in_quadrant(q, rng);
}

DemandStreams DemandStreams::from_seed(std::uint64_t seed) {
  return {substream(seed, "demand.counts"), substream(seed, "demand.quadrants"),
          substream(seed, "demand.locations"), substream(seed, "demand.quantities"),
          substream(seed, "demand.windows")};
}

std::vector<Order> sample_wave(DemandStreams& streams, double t, const DemandParams& params,
                               const EnvConstants& env) {
  const int count =
      std::uniform_int_distribution<int>(params.customers_low, params.customers_high)(
          streams.counts);
  std::discrete_distribution<int> quadrant(params.quadrant_weights.begin(),
                                           params.quadrant_weights.end());
  const int demand_high = std::min(params.demand_high, env.capacity);
  const int demand_low = std::min(params.demand_low, demand_high);

  std::vector<Order> wave;
  wave.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Order o;
    o.location = point_in_quadrant(quadrant(streams.quadrants), streams.locations);
    o.demand = sample_demand(streams.demands, demand_low, demand_high);
    o.created_at = t;
    auto [lo, hi] = sample_time_window(streams.windows, t, env.wave_period, params);
    o.window_open = lo;
    o.window_close = hi;
    wave.push_back(o);
  }
  return wave;
}

}  // namespace c2s
