#include "twinfeed/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twinfeed/error.hpp"

namespace twinfeed {

QuantizerSpec::QuantizerSpec(int bits, double clip) : bits_(bits), clip_(clip) {
  if (bits < 1 || bits > kMaxBits) {
    throw ConfigError("quantizer: bits must be in [1, " + std::to_string(kMaxBits) + "], got " +
                      std::to_string(bits));
  }
  if (!(clip > 0.0) || !std::isfinite(clip)) {
    throw ConfigError("quantizer: clip must be positive and finite");
  }
  level_count_ = (std::int64_t{1} << bits) - 1;
  half_ = (level_count_ - 1) / 2;
  step_ = half_ > 0 ? clip_ / static_cast<double>(half_) : 0.0;
}

double QuantizerSpec::level(std::int64_t index) const {
  const std::int64_t j = index - half_;
  if (half_ == 0) return 0.0;
  // Endpoints are pinned so the grid spans exactly [-clip, clip].
  if (j == half_) return clip_;
  if (j == -half_) return -clip_;
  return static_cast<double>(j) * step_;
}

std::vector<double> QuantizerSpec::levels() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(level_count_));
  for (std::int64_t k = 0; k < level_count_; ++k) out.push_back(level(k));
  return out;
}

QuantizerSpec build_spec(int bits, double clip) { return QuantizerSpec(bits, clip); }

ScalarQuantization quantize_scalar(const QuantizerSpec& spec, double x) {
  if (!std::isfinite(x)) throw NumericError("quantizer: non-finite input");
  if (spec.level_count() == 1) return {0, 0.0};

  const double clamped = std::clamp(x, -spec.clip(), spec.clip());
  const std::int64_t half = (spec.level_count() - 1) / 2;
  const auto guess = static_cast<std::int64_t>(std::floor(clamped / spec.step())) + half;

  // x/step may land one cell off after rounding; scan the neighbourhood.
  std::int64_t best = -1;
  double best_dist = 0.0;
  for (std::int64_t k = guess - 1; k <= guess + 2; ++k) {
    if (k < 0 || k >= spec.level_count()) continue;
    const double lv = spec.level(k);
    const double dist = std::abs(clamped - lv);
    if (best < 0 || dist < best_dist ||
        (dist == best_dist && std::abs(lv) < std::abs(spec.level(best)))) {
      best = k;
      best_dist = dist;
    }
  }
  return {best, spec.level(best)};
}

MatrixQuantization quantize_matrix(const QuantizerSpec& spec, const ChannelMatrix& m) {
  MatrixQuantization out{ChannelMatrix(m.n_r(), m.n_t(), m.time_index()), {}, 0};
  out.indices.reserve(2 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto re = quantize_scalar(spec, m[i].real());
    const auto im = quantize_scalar(spec, m[i].imag());
    out.values[i] = {re.value, im.value};
    out.indices.push_back(re.index);
    out.indices.push_back(im.index);
  }
  out.payload_bits = static_cast<std::int64_t>(2 * m.size()) * spec.bits();
  return out;
}

ChannelMatrix dequantize(const QuantizerSpec& spec, std::span<const std::int64_t> indices,
                         std::size_t n_r, std::size_t n_t) {
  if (indices.size() != 2 * n_r * n_t) throw ShapeError("dequantize: index count mismatch");
  ChannelMatrix m(n_r, n_t);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto re = indices[2 * i];
    const auto im = indices[2 * i + 1];
    if (re < 0 || re >= spec.level_count() || im < 0 || im >= spec.level_count()) {
      throw ShapeError("dequantize: level index out of range");
    }
    m[i] = {spec.level(re), spec.level(im)};
  }
  return m;
}

double component_percentile(std::span<const ChannelMatrix> samples, double percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw ConfigError("percentile must be in [0, 100]");
  }
  std::vector<double> mags;
  for (const auto& m : samples) {
    for (const auto& z : m.entries()) {
      mags.push_back(std::abs(z.real()));
      mags.push_back(std::abs(z.imag()));
    }
  }
  if (mags.empty()) throw ConfigError("percentile of empty sample set");
  std::sort(mags.begin(), mags.end());
  const double pos = percentile / 100.0 * static_cast<double>(mags.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, mags.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return mags[lo] + frac * (mags[hi] - mags[lo]);
}

}  // namespace twinfeed
