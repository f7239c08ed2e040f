#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbhd/grid.hpp"

namespace sbhd {

/// Screened-unsafe prediction code: entropy above threshold.
inline constexpr std::uint8_t kScreenedCode = 2;

/// T stochastic softmax volumes for one image, laid out (T, H, W, 2) with
/// class order {unsafe, safe}.
struct PredictionStack {
  std::string image_id;
  std::size_t passes = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> probs;  // widened from the float32 file payload

  static constexpr std::size_t kClasses = 2;

  double prob(std::size_t t, std::size_t r, std::size_t c, std::size_t k) const {
    return probs[((t * rows + r) * cols + c) * kClasses + k];
  }
  /// Throws StructuralError on shape mismatch, negative or non-finite
  /// entries, or per-pass rows not summing to 1 within 1e-5.
  void validate() const;
};

struct UncertaintyMap {
  Grid<double> entropy;        // nats
  Grid<double> mean_unsafe;    // mean probability of class 0
  Grid<double> mean_safe;      // mean probability of class 1
  Grid<std::uint8_t> labels;   // argmax of the mean, ties -> unsafe (0)
  Grid<std::uint8_t> valid;    // 1 where the pixel takes part in statistics

  std::size_t rows() const { return entropy.rows(); }
  std::size_t cols() const { return entropy.cols(); }
  double mean_entropy() const;  // over valid pixels; 0 when none are valid
};

/// H = -Σ_k p̄_k ln p̄_k with p̄ the pass-averaged class probabilities,
/// 0 ln 0 = 0. Mean rows are renormalized to sum to 1 and H is clamped to
/// [0, ln 2]. All pixels are marked valid.
UncertaintyMap predictive_entropy(const PredictionStack& stack);

/// Restricts statistics to pixels where `mask` is nonzero.
void set_valid_mask(UncertaintyMap& map, const Grid<std::uint8_t>& mask);

enum class ThresholdAveraging { kPixel, kImage };

struct UncertaintyThreshold {
  double value = 0.0;  // nats
  std::string provenance;
};

/// Mean entropy over the valid pixels of all maps (kPixel), or the mean of
/// per-image means (kImage). Throws DomainError for an empty collection or
/// when no pixel is valid.
UncertaintyThreshold compute_threshold(std::span<const UncertaintyMap> maps,
                                       ThresholdAveraging averaging = ThresholdAveraging::kPixel);

struct ScreenedLabels {
  Grid<std::uint8_t> labels;  // 0 unsafe, 1 safe, 2 screened, 255 not valid
  std::size_t screened = 0;
  std::size_t valid = 0;
  double screening_rate() const;  // screened / valid, 0 when nothing is valid
};

/// Pixels with entropy strictly above the threshold become kScreenedCode.
ScreenedLabels apply_threshold(const UncertaintyMap& map, const UncertaintyThreshold& threshold);

}  // namespace sbhd
