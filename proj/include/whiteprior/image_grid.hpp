// Copyright 2026 The whiteprior Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "whiteprior/error.hpp"

namespace whiteprior {

struct PixelIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Dense row-major grid of double-precision intensities. Observations and
/// signal estimates live on [0,1]; noise and gradient grids are unbounded.
class ImageGrid {
 public:
  ImageGrid() = default;

  ImageGrid(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), pixels_(width * height, fill) {
    if (width == 0 || height == 0) {
      fail(ErrorCode::kInvalidArgument, "grid dimensions must be positive");
    }
  }

  ImageGrid(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width == 0 || height == 0) {
      fail(ErrorCode::kInvalidArgument, "grid dimensions must be positive");
    }
    if (pixels_.size() != width * height) {
      fail(ErrorCode::kPixelCountMismatch,
           "expected " + std::to_string(width * height) + " pixels, got " +
               std::to_string(pixels_.size()));
    }
  }

  /// Builds a grid from nested rows; all rows must have equal length.
  static ImageGrid from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      fail(ErrorCode::kInvalidArgument, "empty row list");
    }
    const std::size_t w = rows.front().size();
    std::vector<double> px;
    px.reserve(w * rows.size());
    for (const auto& r : rows) {
      if (r.size() != w) fail(ErrorCode::kDimensionMismatch, "ragged rows");
      px.insert(px.end(), r.begin(), r.end());
    }
    return ImageGrid(w, rows.size(), std::move(px));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double& operator()(std::size_t row, std::size_t col) {
    assert(row < height_ && col < width_);
    return pixels_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    assert(row < height_ && col < width_);
    return pixels_[row * width_ + col];
  }
  double& operator[](PixelIndex p) { return (*this)(p.row, p.col); }
  double operator[](PixelIndex p) const { return (*this)(p.row, p.col); }

  std::span<double> pixels() & noexcept { return pixels_; }
  std::span<const double> pixels() const& noexcept { return pixels_; }
  // A span into a temporary would dangle.
  std::span<const double> pixels() const&& = delete;

  bool same_shape(const ImageGrid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  ImageGrid& operator+=(const ImageGrid& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < pixels_.size(); ++i) pixels_[i] += o.pixels_[i];
    return *this;
  }
  ImageGrid& operator-=(const ImageGrid& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < pixels_.size(); ++i) pixels_[i] -= o.pixels_[i];
    return *this;
  }
  ImageGrid& operator*=(double a) {
    for (double& p : pixels_) p *= a;
    return *this;
  }
  ImageGrid& operator+=(double a) {
    for (double& p : pixels_) p += a;
    return *this;
  }

  friend ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
  friend ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
  friend ImageGrid operator*(double s, ImageGrid a) { return a *= s; }
  friend ImageGrid operator*(ImageGrid a, double s) { return a *= s; }
  friend ImageGrid operator+(ImageGrid a, double s) { return a += s; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

  void require_same_shape(const ImageGrid& o) const {
    if (!same_shape(o)) {
      fail(ErrorCode::kDimensionMismatch,
           std::to_string(width_) + "x" + std::to_string(height_) + " vs " +
               std::to_string(o.width_) + "x" + std::to_string(o.height_));
    }
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Index into the reflect-padded extension (mirror without repeating the edge
/// sample: -1 -> 1, n -> n-2).
inline std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long k = i % period;
  if (k < 0) k += period;
  if (k >= static_cast<long>(n)) k = period - k;
  return static_cast<std::size_t>(k);
}

inline bool all_finite(const ImageGrid& g) {
  return std::all_of(g.pixels().begin(), g.pixels().end(),
                     [](double v) { return std::isfinite(v); });
}

inline double dot(const ImageGrid& a, const ImageGrid& b) {
  a.require_same_shape(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.pixels()[i] * b.pixels()[i];
  return acc;
}

inline double mean(const ImageGrid& g) {
  double acc = 0.0;
  for (double v : g.pixels()) acc += v;
  return acc / static_cast<double>(g.size());
}

inline double min_value(const ImageGrid& g) {
  return *std::min_element(g.pixels().begin(), g.pixels().end());
}

inline double max_value(const ImageGrid& g) {
  return *std::max_element(g.pixels().begin(), g.pixels().end());
}

inline ImageGrid clamp01(ImageGrid g) {
  for (double& v : g.pixels()) v = std::clamp(v, 0.0, 1.0);
  return g;
}

// Forward differences with a zero trailing row/column (replicate boundary).

inline ImageGrid forward_diff_x(const ImageGrid& g) {
  ImageGrid out(g.width(), g.height());
  for (std::size_t r = 0; r < g.height(); ++r) {
    for (std::size_t c = 0; c + 1 < g.width(); ++c) {
      out(r, c) = g(r, c + 1) - g(r, c);
    }
  }
  return out;
}

inline ImageGrid forward_diff_y(const ImageGrid& g) {
  ImageGrid out(g.width(), g.height());
  for (std::size_t r = 0; r + 1 < g.height(); ++r) {
    for (std::size_t c = 0; c < g.width(); ++c) {
      out(r, c) = g(r + 1, c) - g(r, c);
    }
  }
  return out;
}

/// Exact adjoint of forward_diff_x: <Dx u, v> == <u, Dx^T v>. The trailing
/// column of `v` is ignored because Dx never writes it.
inline ImageGrid forward_diff_x_adjoint(const ImageGrid& v) {
  ImageGrid out(v.width(), v.height());
  for (std::size_t r = 0; r < v.height(); ++r) {
    for (std::size_t c = 0; c < v.width(); ++c) {
      double acc = 0.0;
      if (c >= 1) acc += v(r, c - 1);
      if (c + 1 < v.width()) acc -= v(r, c);
      out(r, c) = acc;
    }
  }
  return out;
}

inline ImageGrid forward_diff_y_adjoint(const ImageGrid& v) {
  ImageGrid out(v.width(), v.height());
  for (std::size_t r = 0; r < v.height(); ++r) {
    for (std::size_t c = 0; c < v.width(); ++c) {
      double acc = 0.0;
      if (r >= 1) acc += v(r - 1, c);
      if (r + 1 < v.height()) acc -= v(r, c);
      out(r, c) = acc;
    }
  }
  return out;
}

/// Affine map of [min, max] onto [0, 1]. A constant grid maps to 0.5.
inline ImageGrid contrast_stretch(const ImageGrid& g) {
  const double lo = min_value(g);
  const double hi = max_value(g);
  ImageGrid out(g.width(), g.height(), 0.5);
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.pixels()[i] = std::clamp((g.pixels()[i] - lo) / range, 0.0, 1.0);
  }
  return out;
}

/// 3x3 mean filter with edge-replicating borders. Accumulates offsets from
/// the centre pixel so constant regions are reproduced bit-exactly.
inline ImageGrid box_blur3(const ImageGrid& g) {
  ImageGrid out(g.width(), g.height());
  const auto h = static_cast<std::ptrdiff_t>(g.height());
  const auto w = static_cast<std::ptrdiff_t>(g.width());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double centre = g(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      double acc = 0.0;
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const auto rr = std::clamp<std::ptrdiff_t>(r + dr, 0, h - 1);
          const auto cc = std::clamp<std::ptrdiff_t>(c + dc, 0, w - 1);
          acc += g(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) - centre;
        }
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = centre + acc / 9.0;
    }
  }
  return out;
}

}  // namespace whiteprior
