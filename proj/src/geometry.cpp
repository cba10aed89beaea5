#include "david/geometry.hpp"

namespace david {

BBox BBox::clamped() const {
  BBox b = *this;
  if (b.x0 > b.x1) std::swap(b.x0, b.x1);
  if (b.y0 > b.y1) std::swap(b.y0, b.y1);
  b.x0 = std::clamp(b.x0, 0, kCoordMax);
  b.x1 = std::clamp(b.x1, 0, kCoordMax);
  b.y0 = std::clamp(b.y0, 0, kCoordMax);
  b.y1 = std::clamp(b.y1, 0, kCoordMax);
  return b;
}

double iou(const BBox& a, const BBox& b) {
  long long ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  long long iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (ix <= 0 || iy <= 0) return 0.0;
  long long inter = ix * iy;
  long long uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox union_box(const BBox& a, const BBox& b) {
  return BBox{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
              std::max(a.y1, b.y1)};
}

}  // namespace david
