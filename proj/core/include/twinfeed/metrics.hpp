#pragma once

#include <span>
#include <string>

#include "twinfeed/channel.hpp"

namespace twinfeed {

/// What to do when a recovered vector has zero norm and the beamforming
/// direction is undefined. `zero_alignment` scores such a step as fully
/// misaligned (Γ = ρ = η = 0); a zero true channel is always an error.
enum class DegeneratePolicy { error, zero_alignment };

struct NmseResult {
  double linear = 0.0;
  double db = 0.0;  // -inf when recovery is exact
};

/// Mean over steps of ||H - H_rec||_F^2 / ||H||_F^2.
NmseResult nmse(std::span<const ChannelMatrix> truth, std::span<const ChannelMatrix> recovered);

/// Per-step |h_rec^H h|^2 / (||h_rec||^2 ||h||^2). N_r must be 1.
double step_precoding_gain(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                           DegeneratePolicy policy = DegeneratePolicy::error);
/// Per-step |h_rec^H h| / (||h_rec|| ||h||). N_r must be 1.
double step_cosine_similarity(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                              DegeneratePolicy policy = DegeneratePolicy::error);
/// Per-step log2(1 + |h^H p|^2 snr / N_t) with p = h_rec / ||h_rec||.
double step_spectral_efficiency(const ChannelMatrix& truth, const ChannelMatrix& recovered,
                                double snr_db, DegeneratePolicy policy = DegeneratePolicy::error);

double precoding_gain(std::span<const ChannelMatrix> truth,
                      std::span<const ChannelMatrix> recovered,
                      DegeneratePolicy policy = DegeneratePolicy::error);
double cosine_similarity(std::span<const ChannelMatrix> truth,
                         std::span<const ChannelMatrix> recovered,
                         DegeneratePolicy policy = DegeneratePolicy::error);
double spectral_efficiency(std::span<const ChannelMatrix> truth,
                           std::span<const ChannelMatrix> recovered, double snr_db,
                           DegeneratePolicy policy = DegeneratePolicy::error);

struct MetricsRecord {
  double nmse_linear = 0.0;
  double nmse_db = 0.0;
  double precoding_gain = 0.0;
  double cosine_similarity = 0.0;
  double spectral_efficiency = 0.0;
  double snr_db = 0.0;
  std::size_t n_steps = 0;
};

MetricsRecord evaluate(std::span<const ChannelMatrix> truth,
                       std::span<const ChannelMatrix> recovered, double snr_db,
                       DegeneratePolicy policy = DegeneratePolicy::error);

/// Shortest round-tripping decimal form; infinities as "inf" / "-inf".
std::string format_number(double v);

}  // namespace twinfeed
