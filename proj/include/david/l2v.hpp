#pragma once
// Layout-to-visual rasters. The position raster encodes page coordinates as
// colors with bit-exact integer arithmetic; the page raster is a grayscale
// sketch of entity regions and token glyph boxes for the visual encoder.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "david/document.hpp"

namespace david {

struct RasterRGB {
  int width = 0, height = 0;
  std::vector<uint8_t> px;  // row-major, 3 bytes per pixel

  uint8_t at(int x, int y, int c) const {
    return px[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

struct GrayRaster {
  int width = 0, height = 0;
  std::vector<double> px;  // row-major, 0 = black, 1 = white

  double at(int x, int y) const { return px[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
};

// pixel (x, y) -> (floor(255*x/(W-1)), floor(255*y/(H-1)), 128);
// a degenerate axis (extent 1) maps to 0
RasterRGB render_l2v(int width, int height);

// inclusive pixel rect covered by a 0..1000 bbox; never empty
struct PixelRect {
  int x0, x1, y0, y1;
};
PixelRect bbox_to_pixels(const BBox& box, int width, int height);

// mean raw channel values over the bbox region
std::array<double, 3> l2v_mean_channels(const RasterRGB& raster, const BBox& box);

// grayscale page sketch: white ground, entity regions filled with a
// per-category shade, token glyph boxes darkened on top
GrayRaster render_page_sketch(const Document& doc, int size);

std::string raster_to_ppm(const RasterRGB& raster);  // binary P6

}  // namespace david
