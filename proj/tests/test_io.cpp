// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bitedit/config.hpp"
#include "bitedit/io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace bitedit {
namespace {

// Values exactly representable in float32.
FeatureMap float_features(int h, int w, int d, std::mt19937_64& rng) {
  FeatureMap f = oracle::random_features(h, w, d, rng);
  for (double& v : f.data()) v = static_cast<float>(v);
  return f;
}

template <class T>
void round_to_float(T& t) {
  for (Eigen::Index n = 0; n < t.size(); ++n) t.data()[n] = static_cast<float>(t.data()[n]);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bitedit_io_" + name)).string();
}

TEST(Bqfm, RoundTripAndHeader) {
  std::mt19937_64 rng(71);
  const FeatureMap f = float_features(3, 5, 7, rng);
  std::stringstream buf;
  write_feature_map(buf, f);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 4 + 1 + 12 + 3 * 5 * 7 * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "BQFM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 5);
  EXPECT_EQ(read_feature_map(buf), f);
}

TEST(Bqfm, Malformed) {
  std::stringstream bad_magic("BQFX\\x01");
  EXPECT_THROW(read_feature_map(bad_magic), IoError);
  std::mt19937_64 rng(72);
  std::stringstream buf;
  write_feature_map(buf, float_features(2, 2, 2, rng));
  std::string cut = buf.str();
  cut.resize(cut.size() - 3);
  std::stringstream truncated(cut);
  EXPECT_THROW(read_feature_map(truncated), IoError);
  EXPECT_THROW(load_feature_map(temp_path("missing.bqfm")), IoError);
}

TEST(Bqtk, RoundTripAndBitOrder) {
  std::mt19937_64 rng(73);
  const TokenPyramid p =
      fixture::random_pyramid(ScaleSchedule::parse("1x1,2x3,3x3"), 5, rng);
  std::stringstream buf;
  write_pyramid(buf, p);
  // header 5 + K 4 + d 4 + 3 * 8; payload ceil(5/8) + ceil(30/8) + ceil(45/8)
  EXPECT_EQ(buf.str().size(), 5 + 8 + 24 + 1 + 4 + 6u);
  EXPECT_EQ(read_pyramid(buf), p);

  // One position, d = 3, word 0b101: first payload byte is 0b00000101.
  const TokenPyramid one(ScaleSchedule::parse("1x1"), {TokenMap({1, 1}, 3, {5})});
  std::stringstream b2;
  write_pyramid(b2, one);
  EXPECT_EQ(static_cast<unsigned char>(b2.str().back()), 0b101);
  // Two positions, d = 5: bit 5 of the stream is bit 0 of position 1.
  const TokenPyramid two(ScaleSchedule::parse("1x2"),
                         {TokenMap({1, 2}, 5, {0, 1})});
  std::stringstream b3;
  write_pyramid(b3, two);
  const std::string s = b3.str();
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 2]), 1u << 5);
  EXPECT_EQ(static_cast<unsigned char>(s.back()), 0u);
}

TEST(Bqpm, PredictorAndSidecarRoundTrip) {
  auto s = fixture::small_instance(74);
  for_each_base_tensor(s.params, [](std::string_view, auto& t) { round_to_float(t); });
  for_each_adapter_tensor(*s.params.adapter, [](std::string_view, auto& t) { round_to_float(t); });
  const std::string path = temp_path("params.bqpm");
  save_predictor(path, s.params);
  const PredictorParams back = load_predictor(path);
  EXPECT_TRUE(back == s.params);

  Adaptation a;
  a.learnable = s.prompt.learnable();
  round_to_float(a.learnable);
  a.adapter = s.params.adapter;
  const std::string side = temp_path("side.bqpm");
  save_sidecar(side, s.params.shape, a);
  const Adaptation got = load_sidecar(side, s.params.shape);
  EXPECT_EQ(got.learnable, a.learnable);
  EXPECT_TRUE(*got.adapter == *a.adapter);
  EXPECT_THROW(load_predictor(side), IoError);

  PredictorShape other = s.params.shape;
  other.width = 16;
  EXPECT_THROW(load_sidecar(side, other), std::invalid_argument);

  // A sidecar without an adapter keeps it absent.
  save_sidecar(side, s.params.shape, {a.learnable, std::nullopt});
  EXPECT_FALSE(load_sidecar(side, s.params.shape).adapter.has_value());
  std::filesystem::remove(path);
  std::filesystem::remove(side);
}

TEST(Bqep, RoundTrip) {
  std::mt19937_64 rng(75);
  const std::vector<FeatureMap> e{float_features(2, 3, 4, rng),
                                  float_features(2, 3, 4, rng)};
  std::stringstream buf;
  write_edited(buf, e);
  EXPECT_EQ(buf.str().size(), 5 + 16 + 2 * 24 * 4u);
  EXPECT_EQ(read_edited(buf), e);
  std::stringstream bad;
  EXPECT_THROW(write_edited(bad, {float_features(2, 3, 4, rng),
                                  float_features(3, 3, 4, rng)}),
               std::invalid_argument);
}

TEST(Pgm, RoundTripAndComments) {
  Image img(3, 4);
  for (int n = 0; n < 12; ++n) img.values()[n] = (n * 20) / 255.0;
  std::stringstream buf;
  write_pgm(buf, img);
  EXPECT_EQ(read_pgm(buf), img);

  std::string text = "P5\n# comment\n2 1\n# another\n255\n";
  text += static_cast<char>(0);
  text += static_cast<char>(255);
  std::stringstream with_comments(text);
  const Image two = read_pgm(with_comments);
  EXPECT_EQ(two.width(), 2);
  EXPECT_EQ(two(0, 0), 0.0);
  EXPECT_EQ(two(0, 1), 1.0);

  std::stringstream p2("P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(p2), IoError);
  std::stringstream short_data("P5\n4 4\n255\nabc");
  EXPECT_THROW(read_pgm(short_data), IoError);
}

TEST(Pgm, WriteClampsAndRounds) {
  const Image img(1, 3, std::vector<double>{-0.5, 0.5, 2.0});
  std::stringstream buf;
  write_pgm(buf, img);
  const std::string s = buf.str();
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 3]), 0);
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 2]), 128);
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 1]), 255);
}

TEST(Mask, PgmConvention) {
  EditMask m(4, 4);
  m(1, 2) = 1;
  const Image img = mask_to_image(m);
  EXPECT_EQ(img(1, 2), 0.0);
  EXPECT_EQ(img(0, 0), 1.0);
  const std::string path = temp_path("mask.pgm");
  save_mask(path, m);
  EXPECT_EQ(load_mask(path), m);
  std::filesystem::remove(path);
  const Image grey(1, 2, std::vector<double>{127 / 255.0, 128 / 255.0});
  const EditMask g = mask_from_image(grey);
  EXPECT_EQ(g(0, 0), 1);
  EXPECT_EQ(g(0, 1), 0);
}

TEST(Ppm, WritesThreeChannels) {
  const std::string path = temp_path("img.ppm");
  save_ppm(path, Image(2, 3, 1.0));
  std::ifstream in(path, std::ios::binary);
  const std::string s((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(s.substr(0, 11), "P6\n3 2\n255\n");
  EXPECT_EQ(s.size(), 11 + 18u);
  std::filesystem::remove(path);
}

TEST(Config, ParsesKnownKeys) {
  const RunConfig c = RunConfig::parse_string(
      "# comment\n"
      "schedule = 1x1,2x2,4x4\n"
      "kernel = gaussian   # inline comment\n"
      "alpha=3\n"
      "preset = paper\n"
      "stage1_iterations = 0\n"
      "mode = nar\n");
  EXPECT_EQ(c.schedule->str(), "1x1,2x2,4x4");
  EXPECT_EQ(c.kernel.kind, KernelKind::gaussian);
  EXPECT_EQ(c.kernel.alpha, 3.0);
  EXPECT_EQ(c.inversion.learning_rate, 4.6875e-5);
  EXPECT_EQ(c.inversion.stage1_iterations, 0);
  EXPECT_EQ(c.mode, EditMode::non_autoregressive);
  EXPECT_EQ(c.schedule_for({16, 16}).str(), "1x1,2x2,4x4");
  EXPECT_THROW(c.schedule_for({32, 32}), std::invalid_argument);
  EXPECT_EQ(RunConfig{}.schedule_for({64, 64}).str(),
            "1x1,2x2,4x4,6x6,8x8,12x12,16x16");
  EXPECT_EQ(RunConfig{}.instruction(), 7);
}

TEST(Config, ExplicitKeysOverridePreset) {
  const RunConfig c =
      RunConfig::parse_string("learning_rate = 0.5\npreset = paper\n");
  EXPECT_EQ(c.inversion.learning_rate, 0.5);
  EXPECT_EQ(c.inversion.beta2, 0.97);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(RunConfig::parse_string("colour = red\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("seed = 1\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("tau1 = 1\ntau1 = 2\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("tau1\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("tau1 = one\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("patch = 9\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("preset = fast\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::parse_string("beta1 = 1\n"), std::invalid_argument);
  EXPECT_THROW(RunConfig::load(temp_path("missing.cfg")), IoError);
}

}  // namespace
}  // namespace bitedit
