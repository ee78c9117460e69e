#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "twinfeed/channel.hpp"

namespace twinfeed {

/// Midtread uniform grid shared by both ends of the feedback link: 2^bits - 1
/// levels spaced evenly over [-clip, clip], zero always included.
class QuantizerSpec {
 public:
  static constexpr int kMaxBits = 52;

  QuantizerSpec() = default;
  QuantizerSpec(int bits, double clip);

  int bits() const { return bits_; }
  double clip() const { return clip_; }
  std::int64_t level_count() const { return level_count_; }
  /// Spacing between adjacent levels; 0 for the single-level (bits=1) grid.
  double step() const { return step_; }
  /// Largest error for inputs inside [-clip, clip].
  double max_error() const { return step_ / 2.0; }

  /// Reconstruction value of level `index`, 0 <= index < level_count().
  double level(std::int64_t index) const;
  /// All levels in increasing order. Only sensible for small bit widths.
  std::vector<double> levels() const;

  bool operator==(const QuantizerSpec&) const = default;

 private:
  int bits_ = 1;
  double clip_ = 1.0;
  std::int64_t level_count_ = 1;
  std::int64_t half_ = 0;  // index of the zero level
  double step_ = 0.0;
};

QuantizerSpec build_spec(int bits, double clip);

struct ScalarQuantization {
  std::int64_t index;
  double value;
};

/// Nearest level to clamp(x, -clip, clip); ties go to the level of smaller
/// magnitude. Throws NumericError for non-finite x.
ScalarQuantization quantize_scalar(const QuantizerSpec& spec, double x);

struct MatrixQuantization {
  ChannelMatrix values;
  /// Level indices, (re, im) per entry in row-major entry order.
  std::vector<std::int64_t> indices;
  std::int64_t payload_bits = 0;
};

MatrixQuantization quantize_matrix(const QuantizerSpec& spec, const ChannelMatrix& m);

/// Rebuilds the quantized matrix from transmitted level indices.
ChannelMatrix dequantize(const QuantizerSpec& spec, std::span<const std::int64_t> indices,
                         std::size_t n_r, std::size_t n_t);

/// Linear-interpolated percentile (0..100) of |re| and |im| over all entries.
double component_percentile(std::span<const ChannelMatrix> samples, double percentile);

}  // namespace twinfeed
