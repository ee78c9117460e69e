#include "twinfeed/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "twinfeed/error.hpp"

namespace twinfeed {

namespace {

void require_pairs(std::span<const ChannelMatrix> truth, std::span<const ChannelMatrix> recovered) {
  if (truth.empty()) throw ConfigError("metrics: no steps");
  if (truth.size() != recovered.size()) {
    throw ShapeError("metrics: " + std::to_string(truth.size()) + " true vs " +
                     std::to_string(recovered.size()) + " recovered channels");
  }
}

struct Alignment {
  double inner_sq = 0.0;  // |h_rec^H h|^2
  double rec_sq = 0.0;
  double true_sq = 0.0;
};

// Returns false when the recovered vector is zero and the policy tolerates it.
bool alignment(const ChannelMatrix& truth, const ChannelMatrix& recovered, DegeneratePolicy policy,
               Alignment& out) {
  if (truth.n_r() != 1 || recovered.n_r() != 1) {
    throw ShapeError("metrics: vector channels (N_r = 1) required");
  }
  if (!truth.same_shape(recovered)) throw ShapeError("metrics: channel shapes differ");
  Complex inner{0.0, 0.0};
  for (std::size_t i = 0; i < truth.size(); ++i) inner += std::conj(recovered[i]) * truth[i];
  out.inner_sq = std::norm(inner);
  out.true_sq = truth.frobenius_norm_sq();
  out.rec_sq = recovered.frobenius_norm_sq();
  if (out.true_sq == 0.0) throw DegenerateInputError("metrics: zero-norm true channel");
  if (out.rec_sq == 0.0) {
    if (policy == DegeneratePolicy::error) {
      throw DegenerateInputError("metrics: zero-norm recovered channel");
    }
    return false;
  }
  return true;
}

template <typename F>
double mean_over(std::span<const ChannelMatrix> truth, std::span<const ChannelMatrix> recovered,
                 F&& per_step) {
  require_pairs(truth, recovered);
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += per_step(truth[i], recovered[i]);
  return acc / static_cast<double>(truth.size());
}

double to_db(double linear) {
  if (linear == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(linear);
}

}  // namespace

NmseResult nmse(std::span<const ChannelMatrix> truth, std::span<const ChannelMatrix> recovered) {
  const double linear = mean_over(truth, recovered, [](const auto& h, const auto& r) {
    if (!h.same_shape(r)) throw ShapeError("metrics: channel shapes differ");
    const double power = h.frobenius_norm_sq();
    if (power == 0.0) throw DegenerateInputError("metrics: zero-norm true channel");
    return (h - r).frobenius_norm_sq() / power;
  });
  return {linear, to_db(linear)};
}

double step_precoding_gain(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                           DegeneratePolicy policy) {
  Alignment a;
  if (!alignment(truth, recovered, policy, a)) return 0.0;
  return a.inner_sq / (a.rec_sq * a.true_sq);
}

double step_cosine_similarity(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                              DegeneratePolicy policy) {
  Alignment a;
  if (!alignment(truth, recovered, policy, a)) return 0.0;
  return std::sqrt(a.inner_sq) / (std::sqrt(a.rec_sq) * std::sqrt(a.true_sq));
}

double step_spectral_efficiency(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                                double snr_db, DegeneratePolicy policy) {
  if (!std::isfinite(snr_db)) throw ConfigError("metrics: SNR must be finite");
  Alignment a;
  if (!alignment(truth, recovered, policy, a)) return 0.0;
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double gain = a.inner_sq / a.rec_sq;  // |h^H p|^2 with unit-norm p
  return std::log2(1.0 + gain * snr / static_cast<double>(truth.n_t()));
}

double precoding_gain(std::span<const ChannelMatrix> truth,
                      std::span<const ChannelMatrix> recovered, DegeneratePolicy policy) {
  return mean_over(truth, recovered,
                   [&](const auto& h, const auto& r) { return step_precoding_gain(h, r, policy); });
}

double cosine_similarity(std::span<const ChannelMatrix> truth,
                         std::span<const ChannelMatrix> recovered, DegeneratePolicy policy) {
  return mean_over(truth, recovered, [&](const auto& h, const auto& r) {
    return step_cosine_similarity(h, r, policy);
  });
}

double spectral_efficiency(std::span<const ChannelMatrix> truth,
                           std::span<const ChannelMatrix> recovered, double snr_db,
                           DegeneratePolicy policy) {
  return mean_over(truth, recovered, [&](const auto& h, const auto& r) {
    return step_spectral_efficiency(h, r, snr_db, policy);
  });
}

MetricsRecord evaluate(std::span<const ChannelMatrix> truth,
                       std::span<const ChannelMatrix> recovered, double snr_db,
                       DegeneratePolicy policy) {
  MetricsRecord m;
  const auto e = nmse(truth, recovered);
  m.nmse_linear = e.linear;
  m.nmse_db = e.db;
  m.precoding_gain = precoding_gain(truth, recovered, policy);
  m.cosine_similarity = cosine_similarity(truth, recovered, policy);
  m.spectral_efficiency = spectral_efficiency(truth, recovered, snr_db, policy);
  m.snr_db = snr_db;
  m.n_steps = truth.size();
  return m;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace twinfeed
