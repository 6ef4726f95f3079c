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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"

namespace whiteprior {

struct SegmentationParams {
  double k_threshold = 1.2;  // tau(C) = k / |C|
  std::size_t min_size = 20;
  double presmooth_sigma = 0.8;
};

struct SegmentationLabels {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::size_t> labels;  // row-major, values in [0, cluster_count)
  std::size_t cluster_count = 0;

  std::size_t operator()(std::size_t row, std::size_t col) const {
    return labels[row * width + col];
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Both arguments must be roots. Returns the surviving root.
  std::size_t join(std::size_t a, std::size_t b, double weight) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    internal_[a] = std::max({internal_[a], internal_[b], weight});
    return a;
  }

  std::size_t size(std::size_t root) const { return size_[root]; }
  double internal(std::size_t root) const { return internal_[root]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
  std::vector<std::size_t> size_;
  std::vector<double> internal_;  // largest MST edge inside the component
};

struct GridEdge {
  double weight;
  std::size_t a;
  std::size_t b;
};

inline ImageGrid gaussian_presmooth(const ImageGrid& g, double sigma) {
  if (sigma <= 0.0) return g;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    norm += v;
  }
  for (double& v : kernel) v /= norm;

  const auto w = static_cast<std::ptrdiff_t>(g.width());
  const auto h = static_cast<std::ptrdiff_t>(g.height());
  ImageGrid tmp(g.width(), g.height());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const auto cc = std::clamp<std::ptrdiff_t>(c + i, 0, w - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               g(static_cast<std::size_t>(r), static_cast<std::size_t>(cc));
      }
      tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  ImageGrid out(g.width(), g.height());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const auto rr = std::clamp<std::ptrdiff_t>(r + i, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               tmp(static_cast<std::size_t>(rr), static_cast<std::size_t>(c));
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Graph-based segmentation on the 4-connected pixel grid. Edges are weighted
/// by absolute intensity difference after Gaussian presmoothing and processed
/// in (weight, source, target) order; two components merge when the edge does
/// not exceed min(Int(C1) + k/|C1|, Int(C2) + k/|C2|). Components smaller than
/// min_size are then absorbed along their lightest boundary edge. Labels are
/// numbered by first appearance in raster order.
inline SegmentationLabels felzenszwalb_segment(const ImageGrid& noisy,
                                               const SegmentationParams& params) {
  if (noisy.empty()) fail(ErrorCode::kInvalidArgument, "empty grid");
  if (!(params.k_threshold > 0.0) || !(params.presmooth_sigma >= 0.0) ||
      !std::isfinite(params.k_threshold) || !std::isfinite(params.presmooth_sigma)) {
    fail(ErrorCode::kInvalidArgument, "segmentation parameters out of range");
  }
  const ImageGrid smooth = detail::gaussian_presmooth(noisy, params.presmooth_sigma);
  const std::size_t w = noisy.width();
  const std::size_t h = noisy.height();

  std::vector<detail::GridEdge> edges;
  edges.reserve(2 * w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      if (c + 1 < w) edges.push_back({std::abs(smooth(r, c + 1) - smooth(r, c)), i, i + 1});
      if (r + 1 < h) edges.push_back({std::abs(smooth(r + 1, c) - smooth(r, c)), i, i + w});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const detail::GridEdge& x, const detail::GridEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  detail::DisjointSets sets(w * h);
  for (const auto& e : edges) {
    const std::size_t ra = sets.find(e.a);
    const std::size_t rb = sets.find(e.b);
    if (ra == rb) continue;
    const double ta = sets.internal(ra) + params.k_threshold / static_cast<double>(sets.size(ra));
    const double tb = sets.internal(rb) + params.k_threshold / static_cast<double>(sets.size(rb));
    if (e.weight <= std::min(ta, tb)) sets.join(ra, rb, e.weight);
  }
  for (const auto& e : edges) {
    const std::size_t ra = sets.find(e.a);
    const std::size_t rb = sets.find(e.b);
    if (ra != rb && (sets.size(ra) < params.min_size || sets.size(rb) < params.min_size)) {
      sets.join(ra, rb, e.weight);
    }
  }

  SegmentationLabels out{w, h, std::vector<std::size_t>(w * h), 0};
  std::vector<std::size_t> relabel(w * h, SIZE_MAX);
  for (std::size_t i = 0; i < w * h; ++i) {
    const std::size_t root = sets.find(i);
    if (relabel[root] == SIZE_MAX) relabel[root] = out.cluster_count++;
    out.labels[i] = relabel[root];
  }
  return out;
}

/// Replaces every pixel by the mean of its cluster.
inline ImageGrid piecewise_target(const ImageGrid& noisy, const SegmentationLabels& labels) {
  if (labels.width != noisy.width() || labels.height != noisy.height() ||
      labels.labels.size() != noisy.size()) {
    fail(ErrorCode::kDimensionMismatch, "labels do not match grid");
  }
  std::vector<double> sum(labels.cluster_count, 0.0);
  std::vector<std::size_t> count(labels.cluster_count, 0);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const std::size_t k = labels.labels[i];
    if (k >= labels.cluster_count) fail(ErrorCode::kInvalidArgument, "label out of range");
    sum[k] += noisy.pixels()[i];
    ++count[k];
  }
  ImageGrid out(noisy.width(), noisy.height());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const std::size_t k = labels.labels[i];
    out.pixels()[i] = sum[k] / static_cast<double>(count[k]);
  }
  return out;
}

}  // namespace whiteprior
