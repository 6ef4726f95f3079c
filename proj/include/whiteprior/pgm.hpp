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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"

namespace whiteprior {

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(ch)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Returns false when no digits are present at the cursor.
  bool read_uint(std::uint64_t& out) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) return false;
    out = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      out = out * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (out > (1ULL << 40)) return false;
      ++pos_;
    }
    return true;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Reads an ASCII (P2) or binary (P5) greymap and normalizes by maxval.
inline ImageGrid load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    fail(ErrorCode::kMalformedHeader, path.string() + ": missing P2/P5 magic");
  }
  const bool binary = bytes[1] == '5';
  detail::PgmReader reader(std::move(bytes));
  reader.advance(2);

  std::uint64_t width = 0, height = 0, maxval = 0;
  if (!reader.read_uint(width) || !reader.read_uint(height) ||
      !reader.read_uint(maxval)) {
    fail(ErrorCode::kMalformedHeader, path.string() + ": bad width/height/maxval");
  }
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    fail(ErrorCode::kMalformedHeader,
         path.string() + ": dimensions and maxval must be in range");
  }

  const std::size_t count = static_cast<std::size_t>(width * height);
  std::vector<double> px;
  px.reserve(count);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    const auto& raw = reader.bytes();
    if (reader.pos() >= raw.size() || !std::isspace(raw[reader.pos()])) {
      fail(ErrorCode::kMalformedHeader, path.string() + ": no raster separator");
    }
    reader.advance(1);
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const std::size_t available = raw.size() - reader.pos();
    if (available != count * bpp) {
      fail(ErrorCode::kPixelCountMismatch,
           path.string() + ": expected " + std::to_string(count * bpp) +
               " payload bytes, found " + std::to_string(available));
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = reader.pos() + i * bpp;
      std::uint32_t v = raw[at];
      if (bpp == 2) v = (v << 8) | raw[at + 1];
      if (v > maxval) fail(ErrorCode::kOutOfRange, path.string() + ": sample exceeds maxval");
      px.push_back(static_cast<double>(v) * scale);
    }
  } else {
    std::uint64_t v = 0;
    while (reader.read_uint(v)) {
      if (v > maxval) fail(ErrorCode::kOutOfRange, path.string() + ": sample exceeds maxval");
      px.push_back(static_cast<double>(v) * scale);
    }
    reader.skip_space_and_comments();
    if (reader.pos() != reader.bytes().size()) {
      fail(ErrorCode::kMalformedHeader, path.string() + ": non-numeric token in raster");
    }
    if (px.size() != count) {
      fail(ErrorCode::kPixelCountMismatch,
           path.string() + ": expected " + std::to_string(count) + " samples, found " +
               std::to_string(px.size()));
    }
  }
  return ImageGrid(static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                   std::move(px));
}

/// Sample value written for intensity `p`: round-half-up of p * maxval.
inline std::uint32_t quantize_sample(double p, std::uint32_t maxval) {
  const double v = std::floor(p * static_cast<double>(maxval) + 0.5);
  return static_cast<std::uint32_t>(std::clamp(v, 0.0, static_cast<double>(maxval)));
}

/// Grid as it reads back after a save/load round trip at `maxval`.
inline ImageGrid quantize(const ImageGrid& g, std::uint32_t maxval) {
  ImageGrid out = g;
  for (double& v : out.pixels()) {
    v = static_cast<double>(quantize_sample(v, maxval)) * (1.0 / static_cast<double>(maxval));
  }
  return out;
}

/// Writes a binary P5 greymap. Values must already lie in [0,1].
inline void save_pgm(const ImageGrid& grid, const std::filesystem::path& path,
                     std::uint32_t maxval = 255) {
  if (maxval != 255 && maxval != 65535) {
    fail(ErrorCode::kInvalidArgument, "maxval must be 255 or 65535");
  }
  for (double v : grid.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::kOutOfRange, "pixel value " + std::to_string(v) + " outside [0,1]");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kUnwritablePath, path.string());
  out << "P5\n" << grid.width() << ' ' << grid.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raster;
  raster.reserve(grid.size() * (maxval > 255 ? 2 : 1));
  for (double v : grid.pixels()) {
    const std::uint32_t q = quantize_sample(v, maxval);
    if (maxval > 255) raster.push_back(static_cast<unsigned char>(q >> 8));
    raster.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) fail(ErrorCode::kUnwritablePath, path.string());
}

}  // namespace whiteprior
