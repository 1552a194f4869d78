// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace bitedit {

namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Image& a, const Image& b, const EditMask* region) {
  if (a.extent() != b.extent()) {
    throw std::invalid_argument("image sizes differ: " + to_string(a.extent()) +
                                " vs " + to_string(b.extent()));
  }
  if (a.size() == 0) throw std::invalid_argument("empty image");
  if (region && region->extent() != a.extent()) {
    throw std::invalid_argument("region " + to_string(region->extent()) +
                                " does not match image " +
                                to_string(a.extent()));
  }
}

bool inside(const EditMask* region, int i, int j) {
  return region == nullptr || (*region)(i, j) != 0;
}

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  double total = 0.0;
  for (int y = 0; y < kWindow; ++y) {
    for (int x = 0; x < kWindow; ++x) {
      const double dy = y - kHalf;
      const double dx = x - kHalf;
      w[y * kWindow + x] = std::exp(-(dx * dx + dy * dy) / (2 * kSigma * kSigma));
      total += w[y * kWindow + x];
    }
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

double mse(const Image& a, const Image& b, const EditMask* region) {
  check_pair(a, b, region);
  double sum = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < a.height(); ++i) {
    for (int j = 0; j < a.width(); ++j) {
      if (!inside(region, i, j)) continue;
      const double diff = a(i, j) - b(i, j);
      sum += diff * diff;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("metric region is empty");
  return sum / static_cast<double>(count);
}

double psnr_from_mse(double value) {
  if (!(value >= 0.0)) throw std::invalid_argument("mse must be non-negative");
  if (value < 1e-10) return kPsnrCapDb;
  return 10.0 * std::log10(1.0 / value);
}

double psnr(const Image& a, const Image& b, const EditMask* region) {
  return psnr_from_mse(mse(a, b, region));
}

double ssim(const Image& a, const Image& b, const EditMask* region) {
  check_pair(a, b, region);
  if (a.height() < kWindow || a.width() < kWindow) {
    throw std::invalid_argument("SSIM needs images of at least 11x11, got " +
                                to_string(a.extent()));
  }
  static const auto window = gaussian_window();
  double sum = 0.0;
  std::size_t count = 0;
  for (int ci = kHalf; ci + kHalf < a.height(); ++ci) {
    for (int cj = kHalf; cj + kHalf < a.width(); ++cj) {
      if (!inside(region, ci, cj)) continue;
      double mu_a = 0.0;
      double mu_b = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
          const double w = window[y * kWindow + x];
          mu_a += w * a(ci - kHalf + y, cj - kHalf + x);
          mu_b += w * b(ci - kHalf + y, cj - kHalf + x);
        }
      }
      double var_a = 0.0;
      double var_b = 0.0;
      double cov = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
          const double w = window[y * kWindow + x];
          const double da = a(ci - kHalf + y, cj - kHalf + x) - mu_a;
          const double db = b(ci - kHalf + y, cj - kHalf + x) - mu_b;
          var_a += w * da * da;
          var_b += w * db * db;
          cov += w * (da * db);
        }
      }
      sum += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
             ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++count;
    }
  }
  if (count == 0) {
    throw std::invalid_argument("no SSIM window is centred in the region");
  }
  return sum / static_cast<double>(count);
}

MetricReport evaluate(const Image& a, const Image& b, const EditMask* region,
                      std::string region_name) {
  MetricReport report;
  report.region = std::move(region_name);
  report.mse = mse(a, b, region);
  report.psnr = psnr_from_mse(report.mse);
  report.ssim = ssim(a, b, region);
  return report;
}

}  // namespace bitedit
