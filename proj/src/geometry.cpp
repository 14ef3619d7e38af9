#include "c2s/geometry.hpp"

namespace c2s {

bool on_grid(const Point& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::abs(p.x) <= 1.0 &&
         std::abs(p.y) <= 1.0;
}

Point from_raw(double raw_x, double raw_y) {
  return {raw_x / kGridScale, raw_y / kGridScale};
}

}  // namespace c2s
