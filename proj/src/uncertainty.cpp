#include "sbhd/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sbhd/errors.hpp"

namespace sbhd {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

void PredictionStack::validate() const {
  if (passes == 0 || rows == 0 || cols == 0) throw StructuralError("prediction stack: empty dimension");
  if (probs.size() != passes * rows * cols * kClasses)
    throw StructuralError("prediction stack: " + std::to_string(probs.size()) + " values do not match shape (" +
                          std::to_string(passes) + ", " + std::to_string(rows) + ", " + std::to_string(cols) +
                          ", 2)");
  for (std::size_t i = 0; i < probs.size(); i += kClasses) {
    const double a = probs[i], b = probs[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0)
      throw StructuralError("prediction stack: probabilities must be finite and non-negative");
    if (std::abs(a + b - 1.0) > 1e-5)
      throw StructuralError("prediction stack: class probabilities do not sum to 1 at flat index " +
                            std::to_string(i / kClasses));
  }
}

double UncertaintyMap::mean_entropy() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < entropy.size(); ++i)
    if (valid.values()[i]) {
      sum += entropy.values()[i];
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

UncertaintyMap predictive_entropy(const PredictionStack& stack) {
  stack.validate();
  const std::size_t h = stack.rows, w = stack.cols;
  UncertaintyMap map;
  map.entropy = Grid<double>(h, w);
  map.mean_unsafe = Grid<double>(h, w);
  map.mean_safe = Grid<double>(h, w);
  map.labels = Grid<std::uint8_t>(h, w);
  map.valid = Grid<std::uint8_t>(h, w, 1);
  const double ln2 = std::numbers::ln2;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double unsafe = 0.0, safe = 0.0;
      for (std::size_t t = 0; t < stack.passes; ++t) {
        unsafe += stack.prob(t, r, c, 0);
        safe += stack.prob(t, r, c, 1);
      }
      const double total = unsafe + safe;
      unsafe /= total;
      safe /= total;
      map.mean_unsafe(r, c) = unsafe;
      map.mean_safe(r, c) = safe;
      map.entropy(r, c) = std::clamp(0.0 - (plogp(unsafe) + plogp(safe)), 0.0, ln2);
      map.labels(r, c) = safe > unsafe ? 1 : 0;
    }
  }
  return map;
}

void set_valid_mask(UncertaintyMap& map, const Grid<std::uint8_t>& mask) {
  if (!mask.same_shape(map.entropy)) throw StructuralError("uncertainty: validity mask shape mismatch");
  for (std::size_t i = 0; i < mask.size(); ++i) map.valid.values()[i] = mask.values()[i] ? 1 : 0;
}

UncertaintyThreshold compute_threshold(std::span<const UncertaintyMap> maps, ThresholdAveraging averaging) {
  if (maps.empty()) throw DomainError("compute_threshold: no training maps");
  double sum = 0.0;
  std::size_t pixels = 0, images = 0;
  for (const UncertaintyMap& m : maps) {
    double image_sum = 0.0;
    std::size_t image_pixels = 0;
    for (std::size_t i = 0; i < m.entropy.size(); ++i)
      if (m.valid.values()[i]) {
        image_sum += m.entropy.values()[i];
        ++image_pixels;
      }
    if (image_pixels == 0) continue;
    pixels += image_pixels;
    ++images;
    sum += averaging == ThresholdAveraging::kPixel ? image_sum : image_sum / static_cast<double>(image_pixels);
  }
  if (pixels == 0) throw DomainError("compute_threshold: training maps contain no valid pixels");
  UncertaintyThreshold thr;
  const std::string count = std::to_string(maps.size()) + " training maps";
  if (averaging == ThresholdAveraging::kPixel) {
    thr.value = sum / static_cast<double>(pixels);
    thr.provenance = "pixel-weighted mean entropy over " + std::to_string(pixels) + " valid pixels of " + count;
  } else {
    thr.value = sum / static_cast<double>(images);
    thr.provenance = "mean of per-image mean entropies over " + std::to_string(images) + " of " + count;
  }
  return thr;
}

double ScreenedLabels::screening_rate() const {
  return valid == 0 ? 0.0 : static_cast<double>(screened) / static_cast<double>(valid);
}

ScreenedLabels apply_threshold(const UncertaintyMap& map, const UncertaintyThreshold& threshold) {
  if (!(threshold.value >= 0.0 && threshold.value <= std::numbers::ln2 + 1e-15))
    throw DomainError("apply_threshold: threshold must lie in [0, ln 2]");
  ScreenedLabels out;
  out.labels = Grid<std::uint8_t>(map.rows(), map.cols(), 255);
  for (std::size_t i = 0; i < map.entropy.size(); ++i) {
    if (!map.valid.values()[i]) continue;
    ++out.valid;
    if (map.entropy.values()[i] > threshold.value) {
      out.labels.values()[i] = kScreenedCode;
      ++out.screened;
    } else {
      out.labels.values()[i] = map.labels.values()[i];
    }
  }
  return out;
}

}  // namespace sbhd
