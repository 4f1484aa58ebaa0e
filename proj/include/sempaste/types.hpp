#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace sempaste {

// Dense pixel plane, row-major so plane(y, x) addresses pixel (x, y).
template <typename T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneU8 = Plane<std::uint8_t>;
using PlaneI32 = Plane<std::int32_t>;

// Binary mask, every value is 0 or 1.
using Mask = PlaneU8;

// 8-bit RGB image as three planes of identical shape.
struct Image {
  std::array<PlaneU8, 3> ch;

  Image() = default;
  Image(int width, int height) {
    for (auto& p : ch) p = PlaneU8::Zero(height, width);
  }

  int width() const { return static_cast<int>(ch[0].cols()); }
  int height() const { return static_cast<int>(ch[0].rows()); }
  bool empty() const { return ch[0].size() == 0; }

  static Image constant(int width, int height, std::uint8_t r, std::uint8_t g,
                        std::uint8_t b) {
    Image im;
    im.ch[0] = PlaneU8::Constant(height, width, r);
    im.ch[1] = PlaneU8::Constant(height, width, g);
    im.ch[2] = PlaneU8::Constant(height, width, b);
    return im;
  }
};

inline bool operator==(const Image& a, const Image& b) {
  return a.width() == b.width() && a.height() == b.height() &&
         (a.ch[0] == b.ch[0]).all() && (a.ch[1] == b.ch[1]).all() &&
         (a.ch[2] == b.ch[2]).all();
}

// Axis-aligned box, (x, y) top-left, in pixel units. Kept as doubles because
// COCO stores fractional boxes; rasterization rounds at the edge of use.
struct Box {
  double x = 0, y = 0, w = 0, h = 0;

  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
  double area() const { return w * h; }
};

inline bool operator==(const Box& a, const Box& b) {
  return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
}

// Integer pixel rectangle.
struct IntRect {
  int x = 0, y = 0, w = 0, h = 0;

  std::int64_t area() const {
    return static_cast<std::int64_t>(w) * static_cast<std::int64_t>(h);
  }
  bool empty() const { return w <= 0 || h <= 0; }
  int x1() const { return x + w; }  // exclusive
  int y1() const { return y + h; }
};

inline bool operator==(const IntRect& a, const IntRect& b) {
  return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
}

inline IntRect intersect(const IntRect& a, const IntRect& b) {
  int x0 = std::max(a.x, b.x);
  int y0 = std::max(a.y, b.y);
  int x1 = std::min(a.x1(), b.x1());
  int y1 = std::min(a.y1(), b.y1());
  if (x1 <= x0 || y1 <= y0) return IntRect{x0, y0, 0, 0};
  return IntRect{x0, y0, x1 - x0, y1 - y0};
}

inline IntRect to_int_rect(const Box& b) {
  int x0 = static_cast<int>(std::llround(b.x));
  int y0 = static_cast<int>(std::llround(b.y));
  int w = static_cast<int>(std::llround(b.w));
  int h = static_cast<int>(std::llround(b.h));
  return IntRect{x0, y0, w, h};
}

inline Box to_box(const IntRect& r) {
  return Box{static_cast<double>(r.x), static_cast<double>(r.y),
             static_cast<double>(r.w), static_cast<double>(r.h)};
}

// Binary mask cropped to a region of a larger frame; (x, y) is the offset of
// bits(0, 0) in frame coordinates.
struct RegionMask {
  int x = 0, y = 0;
  Mask bits;

  int width() const { return static_cast<int>(bits.cols()); }
  int height() const { return static_cast<int>(bits.rows()); }
  IntRect rect() const { return IntRect{x, y, width(), height()}; }
};

inline std::int64_t mask_area(const Mask& m) {
  return m.template cast<std::int64_t>().sum();
}

}  // namespace sempaste
