#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "c2s/env.hpp"
#include "c2s/rng.hpp"

namespace c2s {

struct DemandParams {
  int customers_low = 20;
  int customers_high = 40;
  int demand_low = 1;
  int demand_high = 10;
  // Fractions of T.
  double open_offset_low = 0.2;
  double open_offset_high = 0.8;
  double width_low = 0.1;
  double width_high = 2.0;
  // Quadrant order matches warehouse_location().
  std::array<double, 4> quadrant_weights{0.25, 0.25, 0.25, 0.25};

  void validate() const;
};

inline constexpr std::array<double, 4> kUniformWeights{0.25, 0.25, 0.25, 0.25};
inline constexpr std::array<double, 4> kSkewedWeights{0.4, 0.4, 0.1, 0.1};

std::pair<double, double> sample_time_window(Rng& rng, double t, double period,
                                             const DemandParams& params = {});
int sample_demand(Rng& rng, int low = 1, int high = 10);
Point sample_location(Rng& rng, const std::array<double, 4>& weights);

// Independent streams per quantity; a wave draws from all of them.
struct DemandStreams {
  Rng counts;
  Rng quadrants;
  Rng locations;
  Rng demands;
  Rng windows;

  static DemandStreams from_seed(std::uint64_t seed);
};

// Orders for the wave starting at t. Ids are left unset; World::add_order
// assigns them. Demand is clamped to the vehicle capacity.
std::vector<Order> sample_wave(DemandStreams& streams, double t, const DemandParams& params,
                               const EnvConstants& env);

}  // namespace c2s
