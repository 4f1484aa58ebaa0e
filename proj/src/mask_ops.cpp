#include "sempaste/mask_ops.hpp"

#include <algorithm>

#include "sempaste/errors.hpp"

namespace sempaste {

Image resize_bilinear(const Image& src, int out_w, int out_h) {
  Image out;
  for (int c = 0; c < 3; ++c)
    out.ch[c] = resize_bilinear(src.ch[c], out_w, out_h);
  return out;
}

std::optional<IntRect> tight_bbox(const Mask& m) {
  int x0 = static_cast<int>(m.cols()), y0 = static_cast<int>(m.rows());
  int x1 = -1, y1 = -1;
  for (int y = 0; y < m.rows(); ++y) {
    for (int x = 0; x < m.cols(); ++x) {
      if (m(y, x)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return std::nullopt;
  return IntRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::optional<Mask> largest_component_in_roi(const PlaneU8& plane,
                                             std::uint8_t value,
                                             const IntRect& roi) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  IntRect r = intersect(roi, IntRect{0, 0, w, h});
  if (r.empty()) return std::nullopt;

  PlaneI32 label = PlaneI32::Constant(h, w, 0);
  std::vector<std::pair<int, int>> stack;
  int next_label = 0;
  std::vector<std::int64_t> overlap;  // per label, pixels inside roi

  auto in_roi = [&](int x, int y) {
    return x >= r.x && x < r.x1() && y >= r.y && y < r.y1();
  };

  // Seed floods from roi pixels only; components not touching roi are
  // irrelevant.
  for (int sy = r.y; sy < r.y1(); ++sy) {
    for (int sx = r.x; sx < r.x1(); ++sx) {
      if (plane(sy, sx) != value || label(sy, sx) != 0) continue;
      ++next_label;
      overlap.push_back(0);
      stack.clear();
      stack.emplace_back(sx, sy);
      label(sy, sx) = next_label;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        if (in_roi(x, y)) ++overlap[next_label - 1];
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (plane(ny, nx) != value || label(ny, nx) != 0) continue;
            label(ny, nx) = next_label;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
  }

  if (next_label == 0) return std::nullopt;
  int best = static_cast<int>(
      std::max_element(overlap.begin(), overlap.end()) - overlap.begin()) + 1;
  if (overlap[best - 1] == 0) return std::nullopt;

  Mask out = Mask::Zero(r.h, r.w);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      out(y, x) = label(r.y + y, r.x + x) == best ? 1 : 0;
  return out;
}

Mask rasterize_polygons(const std::vector<std::vector<double>>& polygons,
                        int width, int height) {
  Mask out = Mask::Zero(height, width);
  std::vector<double> xs;
  for (const auto& poly : polygons) {
    const std::size_t n = poly.size() / 2;
    if (n < 3) continue;
    for (int y = 0; y < height; ++y) {
      const double py = y + 0.5;
      xs.clear();
      for (std::size_t i = 0; i < n; ++i) {
        double x0 = poly[2 * i], y0 = poly[2 * i + 1];
        double x1 = poly[2 * ((i + 1) % n)], y1 = poly[2 * ((i + 1) % n) + 1];
        if ((y0 <= py && y1 > py) || (y1 <= py && y0 > py))
          xs.push_back(x0 + (py - y0) / (y1 - y0) * (x1 - x0));
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        int xa = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
        int xb = std::min(width - 1,
                          static_cast<int>(std::floor(xs[i + 1] - 0.5)));
        for (int x = xa; x <= xb; ++x) out(y, x) = 1;
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> rle_encode(const Mask& m) {
  std::vector<std::uint32_t> counts;
  std::uint32_t run = 0;
  std::uint8_t cur = 0;
  for (int x = 0; x < m.cols(); ++x) {
    for (int y = 0; y < m.rows(); ++y) {
      std::uint8_t v = m(y, x) ? 1 : 0;
      if (v != cur) {
        counts.push_back(run);
        run = 0;
        cur = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

Mask rle_decode(const std::vector<std::uint32_t>& counts, int width,
                int height) {
  Mask out = Mask::Zero(height, width);
  std::int64_t pos = 0;
  std::uint8_t v = 0;
  const std::int64_t total = static_cast<std::int64_t>(width) * height;
  for (std::uint32_t c : counts) {
    for (std::uint32_t i = 0; i < c; ++i) {
      if (pos >= total)
        throw DataError("rle decode: counts exceed mask size");
      out(pos % height, pos / height) = v;
      ++pos;
    }
    v = !v;
  }
  if (pos != total)
    throw DataError("rle decode: counts cover " + std::to_string(pos) +
                    " of " + std::to_string(total) + " pixels");
  return out;
}

std::string rle_to_string(const std::vector<std::uint32_t>& counts) {
  // 6 bits per char, ascii 48..111, with delta coding from the third run on.
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long x = static_cast<long>(counts[i]);
    if (i > 2) x -= static_cast<long>(counts[i - 2]);
    bool more = true;
    while (more) {
      char c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      c += 48;
      s.push_back(c);
    }
  }
  return s;
}

std::vector<std::uint32_t> rle_from_string(const std::string& s) {
  std::vector<std::uint32_t> counts;
  std::size_t k = 0;
  while (k < s.size()) {
    long x = 0;
    int m = 0;
    bool more = true;
    while (more) {
      if (k >= s.size()) throw DataError("rle string: truncated run");
      char c = s[k] - 48;
      x |= static_cast<long>(c & 0x1f) << (5 * m);
      more = c & 0x20;
      ++k;
      ++m;
      if (!more && (c & 0x10)) x |= -1L << (5 * m);
    }
    if (counts.size() > 2) x += static_cast<long>(counts[counts.size() - 2]);
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

Mask dilate(const Mask& m, int radius) {
  const int h = static_cast<int>(m.rows());
  const int w = static_cast<int>(m.cols());
  Mask out = Mask::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(y, x)) continue;
      int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
      int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) out(yy, xx) = 1;
    }
  }
  return out;
}

}  // namespace sempaste
