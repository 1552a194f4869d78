// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bitedit/kernel.hpp"
#include "oracles.hpp"

namespace bitedit {
namespace {

DistanceField field_of(std::vector<int> values, int h, int w) {
  return DistanceField(h, w, std::move(values));
}

TEST(Distance, FullMaskIsZero) {
  const DistanceField d = manhattan_distance_field(EditMask(4, 5, 1));
  for (int v : d.values()) {
    EXPECT_EQ(v, 0);
  }
}

TEST(Distance, CentreOfThreeByThree) {
  EditMask m(3, 3);
  m(1, 1) = 1;
  EXPECT_EQ(manhattan_distance_field(m),
            field_of({2, 1, 2, 1, 0, 1, 2, 1, 2}, 3, 3));
}

TEST(Distance, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const EditMask m = oracle::random_mask(32, 32, t % 2 ? 0.02 : 0.2, rng);
    const DistanceField d = manhattan_distance_field(m);
    ASSERT_EQ(d, oracle::brute_distance(m)) << "mask " << t;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        if (i + 1 < 32) EXPECT_LE(std::abs(d(i, j) - d(i + 1, j)), 1);
        if (j + 1 < 32) EXPECT_LE(std::abs(d(i, j) - d(i, j + 1)), 1);
      }
  }
}

TEST(Distance, GrowingMaskNeverIncreases) {
  std::mt19937_64 rng(22);
  EditMask m = oracle::random_mask(16, 16, 0.03, rng);
  DistanceField before = manhattan_distance_field(m);
  for (int t = 0; t < 20; ++t) {
    m(static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)) = 1;
    const DistanceField after = manhattan_distance_field(m);
    for (std::size_t n = 0; n < after.size(); ++n) {
      EXPECT_LE(after.values()[n], before.values()[n]);
    }
    before = after;
  }
}

TEST(Distance, EmptyMaskFails) {
  try {
    manhattan_distance_field(EditMask(3, 3));
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("no edit region"), std::string::npos);
  }
}

TEST(LinearKernel, DefaultValues) {
  const SmoothingKernel g =
      linear_kernel(field_of({0, 1, 2, 3, 4, 5}, 1, 6), 1.0, 4.0);
  const double expected[] = {0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0};
  for (int j = 0; j < 6; ++j) EXPECT_EQ(g(0, j), expected[j]) << "d=" << j;
}

TEST(LinearKernel, DegenerateBandIsComplement) {
  std::mt19937_64 rng(23);
  const EditMask m = oracle::random_mask(8, 8, 0.2, rng);
  const SmoothingKernel g = linear_kernel(manhattan_distance_field(m), 0.0, 1.0);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(g(i, j), m(i, j) ? 0.0 : 1.0);
  const SmoothingKernel inside = linear_kernel(DistanceField(3, 3, 0), 1, 4);
  for (double v : inside.values()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(LinearKernel, BandProperties) {
  DistanceField d(1, 40);
  for (int j = 0; j < 40; ++j) d(0, j) = j;
  const SmoothingKernel narrow = linear_kernel(d, 2.0, 10.0);
  const SmoothingKernel wide = linear_kernel(d, 2.0, 20.0);
  for (int j = 0; j < 40; ++j) {
    EXPECT_GE(narrow(0, j), wide(0, j));
    EXPECT_GE(narrow(0, j), 0.0);
    EXPECT_LE(narrow(0, j), 1.0);
    if (j > 2 && j < 10) EXPECT_GT(narrow(0, j), narrow(0, j - 1));
  }
}

TEST(LinearKernel, Errors) {
  const DistanceField d(2, 2, 1);
  EXPECT_THROW(linear_kernel(d, 4.0, 4.0), std::invalid_argument);
  EXPECT_THROW(linear_kernel(d, 5.0, 4.0), std::invalid_argument);
  EXPECT_THROW(linear_kernel(d, -1.0, 4.0), std::invalid_argument);
}

TEST(GaussianKernel, Values) {
  const SmoothingKernel g = gaussian_kernel(field_of({0, 1, 2, 3, 8}, 1, 5), 1.0);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_NEAR(g(0, 1), 1.0 - std::exp(-0.5), 1e-15);
  EXPECT_NEAR(g(0, 1), 0.39347, 1e-5);
  for (int j = 1; j < 5; ++j) EXPECT_GT(g(0, j), g(0, j - 1));
  EXPECT_GT(g(0, 4), 1.0 - 1e-12);
  EXPECT_THROW(gaussian_kernel(DistanceField(1, 1), 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(DistanceField(1, 1), -2.0), std::invalid_argument);
}

TEST(AttentionMask, Threshold) {
  const FeatureMap attn(3, 3, 1, std::vector<double>(9, 0.5));
  EXPECT_EQ(mask_from_attention(attn, 0.4).foreground_count(), 9u);
  EXPECT_THROW(mask_from_attention(attn, 0.6), std::invalid_argument);
  EXPECT_THROW(mask_from_attention(attn, 0.5), std::invalid_argument);
  EXPECT_THROW(mask_from_attention(FeatureMap(2, 2, 2), -1.0),
               std::invalid_argument);
}

TEST(AttentionMask, MedianMatchesLoop) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(49);
  for (double& v : values) v = u(rng);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[24];
  const EditMask m = mask_from_attention(FeatureMap(7, 7, 1, values), median);
  std::size_t count = 0;
  for (int n = 0; n < 49; ++n) {
    EXPECT_EQ(m.values()[n] != 0, values[n] > median);
    count += values[n] > median;
  }
  EXPECT_EQ(m.foreground_count(), count);
  EXPECT_EQ(count, 24u);
}

TEST(TokenMask, AnyOverlap) {
  EXPECT_TRUE(mask_to_token_grid(EditMask(8, 8), {2, 2}, 4).empty());
  EditMask one(8, 8);
  one(5, 2) = 1;
  const EditMask t = mask_to_token_grid(one, {2, 2}, 4);
  EXPECT_EQ(t.foreground_count(), 1u);
  EXPECT_EQ(t(1, 0), 1);

  std::mt19937_64 rng(25);
  const EditMask px = oracle::random_mask(32, 16, 0.01, rng);
  const EditMask tok = mask_to_token_grid(px, {8, 4}, 4);
  for (int ti = 0; ti < 8; ++ti)
    for (int tj = 0; tj < 4; ++tj) {
      bool any = false;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) any = any || px(ti * 4 + a, tj * 4 + b);
      EXPECT_EQ(tok(ti, tj) != 0, any);
    }
  EXPECT_THROW(mask_to_token_grid(px, {4, 4}, 4), std::invalid_argument);
}

TEST(Kernel, BuildAndParse) {
  EditMask m(5, 5);
  m(2, 2) = 1;
  const SmoothingKernel lin = build_kernel(m, {});
  EXPECT_EQ(lin, linear_kernel(manhattan_distance_field(m), 1.0, 4.0));
  KernelSpec g;
  g.kind = parse_kernel_kind("gaussian");
  g.alpha = 1.5;
  EXPECT_EQ(build_kernel(m, g), gaussian_kernel(manhattan_distance_field(m), 1.5));
  EXPECT_EQ(to_string(KernelKind::linear), "linear");
  EXPECT_THROW(parse_kernel_kind("box"), std::invalid_argument);
  for (double v : lin.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(lin(2, 2), 0.0);
}

}  // namespace
}  // namespace bitedit
