#include "twinfeed/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "twinfeed/error.hpp"
#include "twinfeed/rng.hpp"

namespace twinfeed {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

ChannelMatrix::ChannelMatrix(std::size_t n_r, std::size_t n_t, std::int64_t time_index)
    : n_r_(n_r), n_t_(n_t), time_index_(time_index), entries_(n_r * n_t) {}

ChannelMatrix::ChannelMatrix(std::size_t n_r, std::size_t n_t, std::vector<Complex> entries,
                             std::int64_t time_index)
    : n_r_(n_r), n_t_(n_t), time_index_(time_index), entries_(std::move(entries)) {
  if (entries_.size() != n_r_ * n_t_) {
    throw ShapeError("channel matrix: expected " + std::to_string(n_r_ * n_t_) +
                     " entries, got " + std::to_string(entries_.size()));
  }
}

bool ChannelMatrix::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

double ChannelMatrix::frobenius_norm_sq() const {
  double acc = 0.0;
  for (const auto& z : entries_) acc += std::norm(z);
  return acc;
}

double ChannelMatrix::max_abs_component() const {
  double m = 0.0;
  for (const auto& z : entries_) m = std::max({m, std::abs(z.real()), std::abs(z.imag())});
  return m;
}

ChannelMatrix& ChannelMatrix::operator+=(const ChannelMatrix& rhs) {
  if (!same_shape(rhs)) throw ShapeError("channel matrix: shape mismatch in +");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += rhs.entries_[i];
  return *this;
}

ChannelMatrix& ChannelMatrix::operator-=(const ChannelMatrix& rhs) {
  if (!same_shape(rhs)) throw ShapeError("channel matrix: shape mismatch in -");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= rhs.entries_[i];
  return *this;
}

bool ChannelMatrix::bitwise_equal(const ChannelMatrix& other) const {
  return same_shape(other) &&
         std::memcmp(entries_.data(), other.entries_.data(), entries_.size() * sizeof(Complex)) ==
             0;
}

ChannelMatrix operator+(ChannelMatrix lhs, const ChannelMatrix& rhs) { return lhs += rhs; }
ChannelMatrix operator-(ChannelMatrix lhs, const ChannelMatrix& rhs) { return lhs -= rhs; }

void ChannelTrace::validate() const {
  if (n_r == 0 || n_t == 0) throw ShapeError("trace: antenna counts must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& m = samples[i];
    if (m.n_r() != n_r || m.n_t() != n_t) {
      throw ShapeError("trace: sample " + std::to_string(i) + " has shape " +
                       std::to_string(m.n_r()) + "x" + std::to_string(m.n_t()) + ", expected " +
                       std::to_string(n_r) + "x" + std::to_string(n_t));
    }
    if (!m.all_finite()) throw NumericError("trace: sample " + std::to_string(i) + " not finite");
    if (i > 0 && m.time_index() != samples[i - 1].time_index() + 1) {
      throw ConfigError("trace: time index not consecutive at sample " + std::to_string(i));
    }
  }
}

ChannelTrace ChannelTrace::slice(std::size_t first, std::size_t count) const {
  if (first + count > samples.size()) throw ConfigError("trace: slice out of range");
  ChannelTrace out;
  out.sample_period = sample_period;
  out.n_r = n_r;
  out.n_t = n_t;
  out.source_tag = source_tag;
  out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(first),
                     samples.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

double GeneratorConfig::doppler_hz() const { return speed_mps * carrier_hz / kSpeedOfLight; }

void GeneratorConfig::validate() const {
  if (n_t == 0 || n_r == 0) throw ConfigError("generator: n_t and n_r must be positive");
  if (n_samples == 0) throw ConfigError("generator: n_samples must be positive");
  if (n_paths == 0) throw ConfigError("generator: n_paths must be at least 1");
  if (!(sample_period > 0.0) || !std::isfinite(sample_period))
    throw ConfigError("generator: sample_period must be positive");
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
    throw ConfigError("generator: carrier_hz must be positive");
  if (!(speed_mps >= 0.0) || !std::isfinite(speed_mps))
    throw ConfigError("generator: speed_mps must be non-negative");
  if (!(path_gain_decay > 0.0) || !std::isfinite(path_gain_decay))
    throw ConfigError("generator: path_gain_decay must be positive");
  const double nyquist = 1.0 / (2.0 * sample_period);
  if (!(doppler_hz() < nyquist)) {
    throw ConfigError("generator: Doppler frequency " + std::to_string(doppler_hz()) +
                      " Hz violates Nyquist limit " + std::to_string(nyquist) + " Hz");
  }
}

ChannelTrace generate_trace(const GeneratorConfig& cfg) {
  cfg.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> amplitude(cfg.n_paths);
  double total = 0.0;
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    amplitude[p] = std::pow(cfg.path_gain_decay, static_cast<double>(p));
    total += amplitude[p];
  }
  for (auto& a : amplitude) a = std::sqrt(a / total);

  SeededRng rng(cfg.seed);
  auto draw_angle = [&] {
    const double drawn = rng.uniform(0.0, two_pi);
    return cfg.angle_override.value_or(drawn);
  };

  std::vector<double> shared(cfg.n_paths);
  if (cfg.shared_angles) {
    for (auto& theta : shared) theta = draw_angle();
  }

  const std::size_t n_sub = cfg.n_r * cfg.n_t;
  // Per sub-channel, per path: initial phase and phase advance per sample.
  std::vector<double> phase0(n_sub * cfg.n_paths);
  std::vector<double> omega(n_sub * cfg.n_paths);
  const double fd = cfg.doppler_hz();
  for (std::size_t s = 0; s < n_sub; ++s) {
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
      const double theta = cfg.shared_angles ? shared[p] : draw_angle();
      const double phi = rng.uniform(0.0, two_pi);
      phase0[s * cfg.n_paths + p] = phi;
      // cos(pi/2) evaluates to ~6e-17 in double; snap so a broadside path is
      // exactly static.
      double c = std::cos(theta);
      if (std::abs(c) < 1e-15) c = 0.0;
      omega[s * cfg.n_paths + p] = two_pi * fd * c * cfg.sample_period;
    }
  }

  ChannelTrace trace;
  trace.n_r = cfg.n_r;
  trace.n_t = cfg.n_t;
  trace.sample_period = cfg.sample_period;
  trace.source_tag = "sos-doppler seed=" + std::to_string(cfg.seed);
  trace.samples.reserve(cfg.n_samples);
  for (std::size_t t = 0; t < cfg.n_samples; ++t) {
    ChannelMatrix m(cfg.n_r, cfg.n_t, static_cast<std::int64_t>(t));
    const double tt = static_cast<double>(t);
    for (std::size_t s = 0; s < n_sub; ++s) {
      Complex acc{0.0, 0.0};
      for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        const std::size_t k = s * cfg.n_paths + p;
        acc += std::polar(amplitude[p], phase0[k] + omega[k] * tt);
      }
      m[s] = acc;
    }
    trace.samples.push_back(std::move(m));
  }
  return trace;
}

TraceSplit split_trace(const ChannelTrace& trace, double train_frac, double valid_frac) {
  if (!(train_frac > 0.0) || !(valid_frac > 0.0) || !(train_frac + valid_frac < 1.0)) {
    throw ConfigError("split: fractions must be positive and sum to less than 1");
  }
  const std::size_t n = trace.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::floor(valid_frac * static_cast<double>(n)));
  return TraceSplit{trace.slice(0, n_train), trace.slice(n_train, n_valid),
                    trace.slice(n_train + n_valid, n - n_train - n_valid)};
}

double lag_autocorrelation(const ChannelTrace& trace, std::size_t rx, std::size_t tx,
                           std::size_t lag) {
  if (lag >= trace.size()) throw ConfigError("autocorrelation: lag exceeds trace length");
  Complex cross{0.0, 0.0};
  double power = 0.0;
  for (std::size_t t = 0; t + lag < trace.size(); ++t) {
    cross += trace[t](rx, tx) * std::conj(trace[t + lag](rx, tx));
  }
  for (std::size_t t = 0; t < trace.size(); ++t) power += std::norm(trace[t](rx, tx));
  const double n_cross = static_cast<double>(trace.size() - lag);
  const double n_all = static_cast<double>(trace.size());
  if (power == 0.0) return 0.0;
  return std::abs(cross / n_cross) / (power / n_all);
}

double mean_power(const ChannelTrace& trace, std::size_t rx, std::size_t tx) {
  if (trace.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& m : trace.samples) acc += std::norm(m(rx, tx));
  return acc / static_cast<double>(trace.size());
}

}  // namespace twinfeed
