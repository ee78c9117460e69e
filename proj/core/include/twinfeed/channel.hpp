#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twinfeed {

using Complex = std::complex<double>;

/// One N_r x N_t channel realization. Entries are stored row-major by
/// (rx, tx), which is also the flattening order used by the predictor.
class ChannelMatrix {
 public:
  ChannelMatrix() = default;
  ChannelMatrix(std::size_t n_r, std::size_t n_t, std::int64_t time_index = 0);
  ChannelMatrix(std::size_t n_r, std::size_t n_t, std::vector<Complex> entries,
                std::int64_t time_index = 0);

  std::size_t n_r() const { return n_r_; }
  std::size_t n_t() const { return n_t_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t time_index() const { return time_index_; }
  void set_time_index(std::int64_t t) { time_index_ = t; }

  Complex& operator()(std::size_t rx, std::size_t tx) { return entries_[rx * n_t_ + tx]; }
  const Complex& operator()(std::size_t rx, std::size_t tx) const {
    return entries_[rx * n_t_ + tx];
  }
  Complex& operator[](std::size_t i) { return entries_[i]; }
  const Complex& operator[](std::size_t i) const { return entries_[i]; }

  std::span<const Complex> entries() const { return entries_; }
  std::span<Complex> entries() { return entries_; }

  bool same_shape(const ChannelMatrix& other) const {
    return n_r_ == other.n_r_ && n_t_ == other.n_t_;
  }
  bool all_finite() const;
  double frobenius_norm_sq() const;
  /// Largest |re| or |im| over all entries.
  double max_abs_component() const;

  ChannelMatrix& operator+=(const ChannelMatrix& rhs);
  ChannelMatrix& operator-=(const ChannelMatrix& rhs);

  /// Entry values equal bit for bit (time index ignored).
  bool bitwise_equal(const ChannelMatrix& other) const;

 private:
  std::size_t n_r_ = 0;
  std::size_t n_t_ = 0;
  std::int64_t time_index_ = 0;
  std::vector<Complex> entries_;
};

ChannelMatrix operator+(ChannelMatrix lhs, const ChannelMatrix& rhs);
ChannelMatrix operator-(ChannelMatrix lhs, const ChannelMatrix& rhs);

/// Time-ordered channel samples with sampling metadata.
struct ChannelTrace {
  std::vector<ChannelMatrix> samples;
  double sample_period = 0.5e-3;  // seconds
  std::size_t n_r = 0;
  std::size_t n_t = 0;
  std::string source_tag;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const ChannelMatrix& operator[](std::size_t i) const { return samples[i]; }

  /// Throws ShapeError / NumericError / ConfigError when the trace breaks
  /// its invariants (dimension agreement, finiteness, consecutive indices).
  void validate() const;

  /// Contiguous sub-range [first, first + count), time indices preserved.
  ChannelTrace slice(std::size_t first, std::size_t count) const;
};

/// Parameters for the sum-of-sinusoids Doppler fading generator.
struct GeneratorConfig {
  std::size_t n_t = 4;
  std::size_t n_r = 1;
  std::size_t n_samples = 20000;
  double sample_period = 0.5e-3;  // seconds
  double carrier_hz = 2.18e9;
  double speed_mps = 3.0 / 3.6;
  std::size_t n_paths = 8;
  std::uint64_t seed = 1;
  /// Power of path p+1 relative to path p. 1 gives equal-power paths.
  double path_gain_decay = 0.8;
  /// Forces every arrival angle to this value (radians) instead of drawing it.
  std::optional<double> angle_override;
  /// Share arrival angles across antennas (per-antenna phases still differ),
  /// giving spatially correlated sub-channels.
  bool shared_angles = false;

  double doppler_hz() const;
  /// Throws ConfigError on non-positive dimensions or a Doppler frequency at
  /// or above the Nyquist rate of the sampling period.
  void validate() const;
};

ChannelTrace generate_trace(const GeneratorConfig& cfg);

struct TraceSplit {
  ChannelTrace train;
  ChannelTrace valid;
  ChannelTrace test;
};

/// Contiguous split: sizes floor(train_frac * n), floor(valid_frac * n),
/// remainder to test.
TraceSplit split_trace(const ChannelTrace& trace, double train_frac, double valid_frac);

/// Normalized autocorrelation |E[h(t) h*(t+lag)]| / E[|h|^2] of the
/// sub-channel (rx, tx), estimated over the whole trace.
double lag_autocorrelation(const ChannelTrace& trace, std::size_t rx, std::size_t tx,
                           std::size_t lag);

/// Time-averaged |h|^2 of one sub-channel.
double mean_power(const ChannelTrace& trace, std::size_t rx, std::size_t tx);

}  // namespace twinfeed
