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

#include <gtest/gtest.h>

#include <cmath>

#include "dsr/degradations.hpp"
#include "dsr/descriptor.hpp"
#include "oracles.hpp"

namespace dsr {
namespace {

Image gray_from(const oracle::Grid& g) { return image_from_plane(oracle::from_grid(g)); }

Image flip(const Image& img, bool horizontal) {
  Tensor out(img.pixels().shape());
  const std::size_t h = img.height(), w = img.width(), c = img.channels();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k)
        out(y, x, k) = horizontal ? img(y, w - 1 - x, k) : img(h - 1 - y, x, k);
  return Image(std::move(out));
}

TEST(Grayscale, LumaWeights) {
  EXPECT_NEAR(grayscale(Image(1, 1, 3, 1.0))(0, 0), 1.0, 1e-15);
  Tensor red({1, 1, 3});
  red(0, 0, 0) = 1.0;
  EXPECT_EQ(grayscale(Image(red))(0, 0), 0.299);
  const Image px(Tensor({1, 1, 3}, {0.2, 0.4, 0.6}));
  EXPECT_NEAR(grayscale(px)(0, 0), 0.3630, 1e-15);
  const Image g(4, 4, 1, 0.3);
  EXPECT_EQ(grayscale(g), g);
}

TEST(DBlur, ConstantImageHitsCeiling) {
  EXPECT_EQ(d_blur(Image(8, 8, 1, 0.5)), 1.0 / 1e-6);
}

TEST(DBlur, Checkerboard) {
  oracle::Grid g(8, std::vector<double>(8));
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) g[y][x] = (x + y) % 2;
  // Laplacian variance 808/64 = 12.625 (frozen_values.py).
  EXPECT_NEAR(d_blur(gray_from(g)), 0.079207914518185, 1e-15);
  EXPECT_NEAR(d_blur(gray_from(g)), oracle::d_blur(g), 1e-15);
}

TEST(DBlur, TooSmall) {
  EXPECT_THROW(d_blur(Image(2, 5, 1)), std::invalid_argument);
}

TEST(DNoise, ConstantAndRamp) {
  EXPECT_EQ(d_noise(Image(6, 6, 1, 0.4)), 0.0);
  oracle::Grid ramp(8, std::vector<double>(8));
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp[y][x] = x / 7.0;
  EXPECT_NEAR(d_noise(gray_from(ramp)), 0.011904761904761925, 1e-15);
  EXPECT_NEAR(d_noise(gray_from(ramp)), oracle::d_noise(ramp), 1e-15);
}

TEST(DJpeg, ConstantBlocksAndRamp) {
  EXPECT_EQ(d_jpeg(Image(16, 16, 1, 0.6)), 0.0);

  oracle::Grid blocks(16, std::vector<double>(16));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) blocks[y][x] = ((x / 8 + y / 8) % 2) ? 0.2 : 0.0;
  EXPECT_NEAR(d_jpeg(gray_from(blocks)), 0.2, 1e-15);
  EXPECT_NEAR(d_jpeg(gray_from(blocks)), oracle::d_jpeg(blocks), 1e-15);

  oracle::Grid ramp(32, std::vector<double>(32));
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) ramp[y][x] = (x + y) / 62.0;
  EXPECT_LT(d_jpeg(gray_from(ramp)), 1e-6);
}

TEST(DJpeg, MatchesPairCountOracle) {
  Rng rng(5);
  oracle::Grid g(20, std::vector<double>(27));
  for (auto& row : g)
    for (double& v : row) v = rng.uniform();
  EXPECT_NEAR(d_jpeg(gray_from(g)), oracle::d_jpeg(g), 1e-15);
  EXPECT_THROW(d_jpeg(Image(8, 20, 1)), std::invalid_argument);
}

TEST(DEdge, ConstantStepAndNoise) {
  EXPECT_EQ(d_edge(Image(16, 16, 1, 0.5)), 0.0);
  oracle::Grid step(16, std::vector<double>(16, 0.0));
  for (auto& row : step)
    for (int x = 8; x < 16; ++x) row[x] = 1.0;
  EXPECT_EQ(d_edge(gray_from(step)), 0.125);
  EXPECT_EQ(d_edge(gray_from(step)), oracle::d_edge(step));

  // Columns follow 0,1,1,0,0,1,1,0,...: every column, the replicated borders
  // included, has left/right neighbours that differ, so every pixel has a
  // Sobel magnitude of 4.
  oracle::Grid busy(16, std::vector<double>(16));
  for (auto& row : busy)
    for (int x = 0; x < 16; ++x) row[x] = ((x + 1) / 2) % 2;
  EXPECT_EQ(d_edge(gray_from(busy)), 1.0);
  EXPECT_EQ(oracle::d_edge(busy), 1.0);

  Rng rng(8);
  oracle::Grid noise(16, std::vector<double>(16));
  for (auto& row : noise)
    for (double& v : row) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  const double e = d_edge(gray_from(noise));
  EXPECT_EQ(e, oracle::d_edge(noise));
  EXPECT_LE(e, 1.0);
}

TEST(DEdge, ThresholdIsStrict) {
  // Horizontal ramp with slope 1/32: interior columns have Sobel magnitude
  // exactly 0.25, the two replicated border columns 0.125.
  oracle::Grid ramp(8, std::vector<double>(8));
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp[y][x] = x / 32.0;
  const Image img = gray_from(ramp);
  EXPECT_EQ(sobel_magnitude(img)(3, 3), 0.25);
  EXPECT_EQ(d_edge(img, 0.25), 0.0);
  EXPECT_EQ(d_edge(img, std::nextafter(0.25, 0.0)), 0.75);
  EXPECT_EQ(d_edge(img, 0.125), 0.75);
  EXPECT_EQ(d_edge(img, std::nextafter(0.125, 0.0)), 1.0);
}

TEST(DBrightContrast, KnownValues) {
  auto bc = d_bright_contrast(Image(5, 5, 1, 0.3));
  EXPECT_NEAR(bc.brightness, 0.3, 1e-15);
  EXPECT_EQ(bc.contrast, 0.0);

  oracle::Grid half(4, std::vector<double>(4, 0.0));
  for (int y = 0; y < 2; ++y) half[y] = std::vector<double>(4, 1.0);
  bc = d_bright_contrast(gray_from(half));
  EXPECT_EQ(bc.brightness, 0.5);
  EXPECT_EQ(bc.contrast, 0.5);

  const oracle::Grid fixture = {{0.1, 0.5, 0.9, 0.3},
                                {0.2, 0.7, 0.4, 0.6},
                                {0.8, 0.0, 1.0, 0.25},
                                {0.55, 0.45, 0.35, 0.65}};
  bc = d_bright_contrast(gray_from(fixture));
  EXPECT_NEAR(bc.brightness, 0.484375, 1e-15);
  EXPECT_NEAR(bc.contrast, 0.27484015240681264, 1e-15);
}

TEST(Descriptor, ConstantImageClosedForm) {
  const auto d = descriptor(Image(16, 16, 1, 0.5));
  const DescriptorVector expected = {std::log(1.0 + 1e6), 0, 0, 0, std::log(1.5), 0};
  for (std::size_t i = 0; i < kDescriptorSize; ++i) {
    EXPECT_NEAR(d.transformed[i], expected[i], 1e-12) << kDescriptorNames[i];
  }
  EXPECT_EQ(d.transformed[kBlur], std::log1p(1e6));
  EXPECT_EQ(d.transformed[kBright], std::log1p(0.5));
}

TEST(Descriptor, ZeroRawGivesZeroTransform) {
  const auto d = DegradationDescriptor::from_raw({0, 0, 0, 0, 0, 0});
  for (double v : d.transformed) EXPECT_EQ(v, 0.0);
}

TEST(Descriptor, EqualsComposedComponentOracles) {
  for (std::size_t i : {0u, 7u, 13u}) {
    const Image img = procedural_image(i);
    const Image gray = grayscale(img);
    const auto g = oracle::to_grid(plane_of(gray));
    const auto d = descriptor(img);
    const DescriptorVector raw = {oracle::d_blur(g), oracle::d_noise(g), oracle::d_jpeg(g),
                                  oracle::d_edge(g), oracle::mean(g),
                                  std::sqrt(oracle::variance(g))};
    for (std::size_t k = 0; k < kDescriptorSize; ++k) {
      EXPECT_NEAR(d.raw[k], raw[k], 1e-12 * std::max(1.0, std::abs(raw[k])))
          << kDescriptorNames[k];
      EXPECT_NEAR(d.transformed[k], std::log(1.0 + raw[k]), 1e-12) << kDescriptorNames[k];
      EXPECT_EQ(d.transformed[k], std::log1p(d.raw[k]));
    }
  }
}

TEST(Descriptor, FlipInvariance) {
  for (std::size_t i = 0; i < 5; ++i) {
    const Image img = procedural_image(i);  // 64x64, a multiple of 8
    const auto d = descriptor(img);
    for (bool horizontal : {true, false}) {
      const auto f = descriptor(flip(img, horizontal));
      for (std::size_t k = 0; k < kDescriptorSize; ++k) {
        EXPECT_NEAR(f.raw[k], d.raw[k], 1e-12 * std::max(1.0, d.raw[k]))
            << kDescriptorNames[k];
      }
    }
  }
}

TEST(Descriptor, RangesHoldOnCorpus) {
  for (const auto& img : procedural_corpus()) {
    const auto d = descriptor(img);
    EXPECT_GE(d.raw[kEdge], 0.0);
    EXPECT_LE(d.raw[kEdge], 1.0);
    EXPECT_GE(d.raw[kBright], 0.0);
    EXPECT_LE(d.raw[kBright], 1.0);
    EXPECT_GE(d.raw[kContrast], 0.0);
    EXPECT_LE(d.raw[kContrast], 0.5);
    for (double v : d.transformed) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Descriptor, BlurAndNoiseResponses) {
  const auto corpus = procedural_corpus();
  int noisier = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Image gray = grayscale(corpus[i]);
    EXPECT_GE(d_blur(grayscale(gaussian_blur(corpus[i], 2.0))), d_blur(gray));
    Rng rng = Rng::derive(99, i);
    noisier += d_noise(grayscale(add_awgn(corpus[i], 0.1, rng))) > d_noise(gray);
  }
  EXPECT_EQ(noisier, 20);
}

}  // namespace
}  // namespace dsr
