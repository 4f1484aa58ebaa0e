#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sempaste/types.hpp"

namespace sempaste {

// Bilinear resampling with half-pixel centers: a same-size resize is an
// exact copy. Works on any scalar plane; accumulation is double.
template <typename T>
Plane<T> resize_bilinear(const Plane<T>& src, int out_w, int out_h) {
  const int sw = static_cast<int>(src.cols());
  const int sh = static_cast<int>(src.rows());
  Plane<T> dst(out_h, out_w);
  const double sx_scale = static_cast<double>(sw) / out_w;
  const double sy_scale = static_cast<double>(sh) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy_scale - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = std::min(y0 + 1, sh - 1);
    y0 = std::max(y0, 0);
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx_scale - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = std::min(x0 + 1, sw - 1);
      x0 = std::max(x0, 0);
      double v = (1 - wy) * ((1 - wx) * src(y0, x0) + wx * src(y0, x1)) +
                 wy * ((1 - wx) * src(y1, x0) + wx * src(y1, x1));
      if constexpr (std::is_integral_v<T>) {
        dst(oy, ox) = static_cast<T>(std::llround(v));
      } else {
        dst(oy, ox) = static_cast<T>(v);
      }
    }
  }
  return dst;
}

// Nearest-neighbour resampling; output values are a subset of input values,
// so binary masks stay binary.
template <typename T>
Plane<T> resize_nearest(const Plane<T>& src, int out_w, int out_h) {
  const int sw = static_cast<int>(src.cols());
  const int sh = static_cast<int>(src.rows());
  Plane<T> dst(out_h, out_w);
  const double sx_scale = static_cast<double>(sw) / out_w;
  const double sy_scale = static_cast<double>(sh) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    int sy = std::min(static_cast<int>((oy + 0.5) * sy_scale), sh - 1);
    for (int ox = 0; ox < out_w; ++ox) {
      int sx = std::min(static_cast<int>((ox + 0.5) * sx_scale), sw - 1);
      dst(oy, ox) = src(sy, sx);
    }
  }
  return dst;
}

Image resize_bilinear(const Image& src, int out_w, int out_h);

// Tight bounding rectangle of the 1-pixels; nullopt for an all-zero mask.
std::optional<IntRect> tight_bbox(const Mask& m);

// Largest 8-connected component of (plane == value), measured by overlap
// with `roi`; returns the component restricted to roi as a roi-sized mask.
// Nullopt when no pixel of that value intersects roi.
std::optional<Mask> largest_component_in_roi(const PlaneU8& plane,
                                             std::uint8_t value,
                                             const IntRect& roi);

// Even-odd scanline rasterization at pixel centers. Polygons are flat
// [x1,y1,x2,y2,...] rings; multiple rings are ORed.
Mask rasterize_polygons(const std::vector<std::vector<double>>& polygons,
                        int width, int height);

// COCO-style run-length counts: column-major scan, first run counts zeros.
std::vector<std::uint32_t> rle_encode(const Mask& m);
Mask rle_decode(const std::vector<std::uint32_t>& counts, int width,
                int height);

// The compact char encoding used for RLE payloads in annotation files.
std::string rle_to_string(const std::vector<std::uint32_t>& counts);
std::vector<std::uint32_t> rle_from_string(const std::string& s);

// Chebyshev dilation by `radius` pixels.
Mask dilate(const Mask& m, int radius);

}  // namespace sempaste
