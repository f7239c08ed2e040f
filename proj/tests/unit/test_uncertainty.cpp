#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sbhd/errors.hpp"
#include "sbhd/synth.hpp"
#include "sbhd/uncertainty.hpp"

using namespace sbhd;

namespace {

// One-pixel-per-entry stack: safe probability of pass t at pixel i is p[i][t].
PredictionStack stack_of(const std::vector<std::vector<double>>& p) {
  PredictionStack s;
  s.image_id = "t";
  s.passes = p.front().size();
  s.rows = 1;
  s.cols = p.size();
  s.probs.assign(s.passes * s.cols * 2, 0.0);
  for (std::size_t t = 0; t < s.passes; ++t)
    for (std::size_t c = 0; c < s.cols; ++c) {
      s.probs[(t * s.cols + c) * 2 + 0] = 1.0 - p[c][t];
      s.probs[(t * s.cols + c) * 2 + 1] = p[c][t];
    }
  return s;
}

}  // namespace

TEST(Entropy, HandComputedValues) {
  const UncertaintyMap m = predictive_entropy(stack_of({{0.7, 0.7}, {0.5, 0.5}, {1.0, 1.0}, {1.0, 0.0}, {0.9, 0.5}}));
  EXPECT_NEAR(m.entropy(0, 0), 0.6108643020548935, 1e-12);
  EXPECT_NEAR(m.entropy(0, 1), std::numbers::ln2, 1e-15);
  EXPECT_EQ(m.entropy(0, 2), 0.0);
  EXPECT_NEAR(m.entropy(0, 3), std::numbers::ln2, 1e-15);  // disagreeing passes
  EXPECT_NEAR(m.entropy(0, 4), -(0.7 * std::log(0.7) + 0.3 * std::log(0.3)), 1e-12);
  EXPECT_NEAR(m.mean_safe(0, 4), 0.7, 1e-14);
  EXPECT_EQ(m.labels(0, 0), 1);
  EXPECT_EQ(m.labels(0, 1), 0);  // tie goes to unsafe
  EXPECT_EQ(m.labels(0, 2), 1);
}

TEST(Entropy, BoundedAndSymmetric) {
  SplitMix64 rng(5);
  std::vector<std::vector<double>> p(200), q(200);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int t = 0; t < 6; ++t) {
      const double v = rng.uniform();
      p[i].push_back(v);
      q[i].push_back(1.0 - v);
    }
  const UncertaintyMap a = predictive_entropy(stack_of(p)), b = predictive_entropy(stack_of(q));
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GE(a.entropy.values()[i], 0.0);
    EXPECT_LE(a.entropy.values()[i], std::numbers::ln2);
    EXPECT_NEAR(a.entropy.values()[i], b.entropy.values()[i], 1e-14);
  }
}

TEST(Entropy, RejectsBadStacks) {
  PredictionStack s = stack_of({{0.5}});
  s.probs[1] = 0.7;
  EXPECT_THROW(predictive_entropy(s), StructuralError);
  s = stack_of({{0.5}});
  s.probs[0] = -0.0001;
  s.probs[1] = 1.0001;
  EXPECT_THROW(predictive_entropy(s), StructuralError);
  s = stack_of({{0.5}});
  s.probs.push_back(0.0);
  EXPECT_THROW(predictive_entropy(s), StructuralError);
}

TEST(Threshold, PixelAndImageAveraging) {
  // Image A: 2 pixels at ln 2; image B: 1 pixel at 0 and 1 masked out.
  UncertaintyMap a = predictive_entropy(stack_of({{0.5}, {0.5}}));
  UncertaintyMap b = predictive_entropy(stack_of({{1.0}, {0.5}}));
  Grid<std::uint8_t> mask(1, 2, 1);
  mask(0, 1) = 0;
  set_valid_mask(b, mask);
  const std::vector<UncertaintyMap> maps = {a, b};
  const auto px = compute_threshold(maps, ThresholdAveraging::kPixel);
  const auto im = compute_threshold(maps, ThresholdAveraging::kImage);
  EXPECT_NEAR(px.value, 2.0 * std::numbers::ln2 / 3.0, 1e-15);
  EXPECT_NEAR(im.value, 0.5 * std::numbers::ln2, 1e-15);
  EXPECT_FALSE(px.provenance.empty());
  EXPECT_THROW(compute_threshold(std::span<const UncertaintyMap>{}), DomainError);
  set_valid_mask(b, Grid<std::uint8_t>(1, 2, 0));
  EXPECT_THROW(compute_threshold(std::vector<UncertaintyMap>{b}), DomainError);
}

TEST(Threshold, ScreensStrictlyAbove) {
  const UncertaintyMap m = predictive_entropy(stack_of({{0.7}, {0.5}, {1.0}, {0.2}}));
  UncertaintyThreshold thr{m.entropy(0, 0), "test"};
  const ScreenedLabels s = apply_threshold(m, thr);
  EXPECT_EQ(s.labels(0, 0), 1);  // equal to the threshold: kept
  EXPECT_EQ(s.labels(0, 1), kScreenedCode);
  EXPECT_EQ(s.labels(0, 2), 1);
  EXPECT_EQ(s.labels(0, 3), 0);
  EXPECT_EQ(s.screened, 1u);
  EXPECT_DOUBLE_EQ(s.screening_rate(), 0.25);
  EXPECT_THROW(apply_threshold(m, UncertaintyThreshold{1.0, ""}), DomainError);
}

TEST(Threshold, ScreeningRateFallsAsThresholdRises) {
  SplitMix64 rng(6);
  std::vector<std::vector<double>> p(500);
  for (auto& pix : p)
    for (int t = 0; t < 8; ++t) pix.push_back(rng.uniform());
  const UncertaintyMap m = predictive_entropy(stack_of(p));
  double prev = 1.0;
  for (int i = 0; i <= 20; ++i) {
    const double rate = apply_threshold(m, UncertaintyThreshold{std::numbers::ln2 * i / 20.0, ""}).screening_rate();
    EXPECT_LE(rate, prev);
    prev = rate;
  }
  EXPECT_EQ(prev, 0.0);
  EXPECT_EQ(apply_threshold(m, UncertaintyThreshold{0.0, ""}).screened,
            static_cast<std::size_t>(std::count_if(m.entropy.values().begin(), m.entropy.values().end(),
                                                   [](double h) { return h > 0.0; })));
}
