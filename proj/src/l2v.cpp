#include "david/l2v.hpp"

#include <algorithm>

namespace david {

RasterRGB render_l2v(int width, int height) {
  require(width > 0 && height > 0, Errc::invalid_argument, "raster size must be positive");
  RasterRGB r;
  r.width = width;
  r.height = height;
  r.px.resize(static_cast<size_t>(width) * height * 3);
  size_t i = 0;
  for (int y = 0; y < height; ++y) {
    uint8_t g = height > 1 ? static_cast<uint8_t>((255 * y) / (height - 1)) : 0;
    for (int x = 0; x < width; ++x) {
      uint8_t rr = width > 1 ? static_cast<uint8_t>((255 * x) / (width - 1)) : 0;
      r.px[i++] = rr;
      r.px[i++] = g;
      r.px[i++] = 128;
    }
  }
  return r;
}

PixelRect bbox_to_pixels(const BBox& box, int width, int height) {
  BBox b = box.clamped();
  auto lo = [](int v, int extent) {
    return std::clamp(static_cast<int>(static_cast<long long>(v) * extent / (kCoordMax + 1)),
                      0, extent - 1);
  };
  PixelRect r;
  r.x0 = lo(b.x0, width);
  r.y0 = lo(b.y0, height);
  r.x1 = std::clamp(lo(b.x1, width), r.x0, width - 1);
  r.y1 = std::clamp(lo(b.y1, height), r.y0, height - 1);
  return r;
}

std::array<double, 3> l2v_mean_channels(const RasterRGB& raster, const BBox& box) {
  PixelRect r = bbox_to_pixels(box, raster.width, raster.height);
  double s[3] = {0, 0, 0};
  long long n = 0;
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x, ++n)
      for (int c = 0; c < 3; ++c) s[c] += raster.at(x, y, c);
  return {s[0] / n, s[1] / n, s[2] / n};
}

namespace {

double category_shade(const std::string& category) {
  // stable per-category gray in [0.55, 0.90]
  uint64_t h = fnv1a64(category);
  return 0.55 + 0.35 * static_cast<double>(h % 1000) / 999.0;
}

void fill_rect(GrayRaster& g, const PixelRect& r, double v) {
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x) g.at(x, y) = v;
}

}  // namespace

GrayRaster render_page_sketch(const Document& doc, int size) {
  require(size > 0, Errc::invalid_argument, "sketch size must be positive");
  GrayRaster g;
  g.width = size;
  g.height = size;
  g.px.assign(static_cast<size_t>(size) * size, 1.0);
  for (const auto& e : doc.entities)
    fill_rect(g, bbox_to_pixels(e.bbox, size, size), category_shade(e.category));
  for (const auto& t : doc.tokens) {
    PixelRect r = bbox_to_pixels(t.bbox, size, size);
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) g.at(x, y) *= 0.4;
  }
  return g;
}

std::string raster_to_ppm(const RasterRGB& raster) {
  std::string out = "P6\n" + std::to_string(raster.width) + " " +
                    std::to_string(raster.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(raster.px.data()), raster.px.size());
  return out;
}

}  // namespace david
