#pragma once
// Axis-aligned boxes on the normalized 0..1000 page grid.

#include <algorithm>
#include <cstdint>

namespace david {

constexpr int kCoordMax = 1000;

struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool valid() const {
    return 0 <= x0 && x0 <= x1 && x1 <= kCoordMax && 0 <= y0 && y0 <= y1 && y1 <= kCoordMax;
  }
  // clamps into range and repairs inverted corners
  BBox clamped() const;

  long long width() const { return x1 - x0; }
  long long height() const { return y1 - y0; }
  long long area() const { return width() * height(); }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
  bool contains_point(double px, double py) const {
    return x0 <= px && px <= x1 && y0 <= py && py <= y1;
  }
  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);
BBox union_box(const BBox& a, const BBox& b);

}  // namespace david
