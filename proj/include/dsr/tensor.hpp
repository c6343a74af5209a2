// Copyright (c) the dsr authors
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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsr {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major array of doubles. Every extent is positive and the data
// length always equals the product of the extents.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
      throw std::invalid_argument("Tensor: data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " +
                                  shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D element access; callers are responsible for the rank.
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double min() const;
  double max() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static void validate_shape(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (std::size_t e : shape) {
      if (e == 0) {
        throw std::invalid_argument("Tensor: zero extent in shape " +
                                    shape_string(shape));
      }
    }
  }

  Shape shape_;
  std::vector<double> data_;
};

inline double Tensor::min() const {
  double m = data_.at(0);
  for (double v : data_) m = v < m ? v : m;
  return m;
}

inline double Tensor::max() const {
  double m = data_.at(0);
  for (double v : data_) m = v > m ? v : m;
  return m;
}

// Height and width of a single-channel plane stored either as [H, W] or
// [H, W, 1].
struct PlaneDims {
  std::size_t height;
  std::size_t width;
};

inline PlaneDims plane_dims(const Tensor& t) {
  if (t.empty()) throw std::invalid_argument("plane: empty tensor");
  if (t.rank() == 2) return {t.extent(0), t.extent(1)};
  if (t.rank() == 3 && t.extent(2) == 1) return {t.extent(0), t.extent(1)};
  throw std::invalid_argument("plane: expected [H,W] or [H,W,1], got " +
                              shape_string(t.shape()));
}

// Image with intensities in [0,1], stored as an [H, W, C] tensor.
class Image {
 public:
  Image() = default;

  Image(std::size_t height, std::size_t width, std::size_t channels,
        double fill = 0.0)
      : Image(Tensor({height, width, channels}, fill)) {}

  explicit Image(Tensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.rank() != 3) {
      throw std::invalid_argument("Image: pixels must be [H,W,C], got " +
                                  shape_string(pixels_.shape()));
    }
    if (channels() != 1 && channels() != 3) {
      throw std::invalid_argument("Image: channels must be 1 or 3, got " +
                                  std::to_string(channels()));
    }
    for (double v : pixels_.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("Image: pixel value outside [0,1]");
      }
    }
  }

  std::size_t height() const { return pixels_.extent(0); }
  std::size_t width() const { return pixels_.extent(1); }
  std::size_t channels() const { return pixels_.extent(2); }

  const Tensor& pixels() const { return pixels_; }

  double operator()(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels_(y, x, c);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Tensor pixels_;
};

// Single-channel image from an [H, W] plane; values must lie in [0,1].
inline Image image_from_plane(const Tensor& plane) {
  const auto [h, w] = plane_dims(plane);
  return Image(Tensor({h, w, 1}, plane.values()));
}

// Single-channel plane [H, W] viewed from a 1-channel image.
inline Tensor plane_of(const Image& image) {
  if (image.channels() != 1) {
    throw std::invalid_argument("plane_of: image has " +
                                std::to_string(image.channels()) +
                                " channels, expected 1");
  }
  return Tensor({image.height(), image.width()}, image.pixels().values());
}

}  // namespace dsr
