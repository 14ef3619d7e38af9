#pragma once

#include <cmath>

namespace c2s {

// Location on the normalized grid [-1,1] x [-1,1]. Raw coordinates on
// [-100,100] are divided by 100 before they ever reach a Point.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr double kGridScale = 100.0;

// Euclidean distance in normalized units.
inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// True when both coordinates are finite and inside the normalized grid.
bool on_grid(const Point& p);

Point from_raw(double raw_x, double raw_y);

}  // namespace c2s
