#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "twinfeed/error.hpp"
#include "twinfeed/metrics.hpp"
#include "twinfeed/rng.hpp"

namespace twinfeed {
namespace {

ChannelMatrix row(std::vector<Complex> v) {
  const std::size_t n = v.size();
  return ChannelMatrix(1, n, std::move(v));
}

std::vector<ChannelMatrix> random_rows(std::size_t count, std::size_t n_t, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<ChannelMatrix> out;
  for (std::size_t i = 0; i < count; ++i) {
    ChannelMatrix m(1, n_t);
    for (std::size_t k = 0; k < n_t; ++k) m[k] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    out.push_back(m);
  }
  return out;
}

TEST(Nmse, Examples) {
  const std::vector<ChannelMatrix> h{row({{1, 0}})};
  const auto half = nmse(h, std::vector<ChannelMatrix>{row({{0.5, 0}})});
  EXPECT_DOUBLE_EQ(half.linear, 0.25);
  EXPECT_NEAR(half.db, -6.0206, 1e-4);
  const auto exact = nmse(h, h);
  EXPECT_EQ(exact.linear, 0.0);
  EXPECT_TRUE(std::isinf(exact.db) && exact.db < 0);
  const auto zero = nmse(h, std::vector<ChannelMatrix>{row({{0, 0}})});
  EXPECT_DOUBLE_EQ(zero.linear, 1.0);
  EXPECT_DOUBLE_EQ(zero.db, 0.0);
}

TEST(Nmse, ErrorsAndScaling) {
  const std::vector<ChannelMatrix> zero{row({{0, 0}})};
  EXPECT_THROW(nmse(zero, zero), DegenerateInputError);
  const auto h = random_rows(10, 4, 1);
  EXPECT_THROW(nmse(h, std::span(h).first(5)), ShapeError);
  EXPECT_THROW(nmse(std::vector<ChannelMatrix>{}, std::vector<ChannelMatrix>{}), ConfigError);
  auto r = random_rows(10, 4, 2);
  const double before = nmse(h, r).linear;
  for (auto& m : r) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k] *= Complex(2.0, 0.5);
  }
  EXPECT_NE(nmse(h, r).linear, before);
}

TEST(Alignment, Examples) {
  const auto h = row({{1, 0}, {0, 0}});
  const double s = 1.0 / std::sqrt(2.0);
  const auto r = row({{s, 0}, {s, 0}});
  EXPECT_NEAR(step_precoding_gain(h, r), 0.5, 1e-15);
  EXPECT_NEAR(step_cosine_similarity(h, r), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(step_spectral_efficiency(h, r, 0.0), std::log2(1.25), 1e-15);
  EXPECT_NEAR(step_precoding_gain(h, h), 1.0, 1e-15);
  const auto orth = row({{0, 0}, {0, 1}});
  EXPECT_EQ(step_precoding_gain(h, orth), 0.0);
  EXPECT_EQ(step_cosine_similarity(h, orth), 0.0);
  EXPECT_EQ(step_spectral_efficiency(h, orth, 10.0), 0.0);
}

TEST(Alignment, PerfectCsiSpectralEfficiency) {
  const auto h = random_rows(20, 4, 3);
  const double snr = std::pow(10.0, 0.5);
  double expected = 0.0;
  for (const auto& m : h) expected += std::log2(1 + m.frobenius_norm_sq() * snr / 4.0);
  EXPECT_NEAR(spectral_efficiency(h, h, 5.0), expected / 20.0, 1e-12);
}

TEST(Alignment, GammaIsRhoSquaredPerStep) {
  const auto h = random_rows(200, 4, 4);
  const auto r = random_rows(200, 4, 5);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double rho = step_cosine_similarity(h[i], r[i]);
    EXPECT_NEAR(step_precoding_gain(h[i], r[i]), rho * rho, 1e-12);
  }
}

TEST(Alignment, ScaleInvariant) {
  const auto h = random_rows(50, 4, 6);
  auto r = random_rows(50, 4, 7);
  const auto before = evaluate(h, r, 10.0);
  for (auto& m : r) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k] *= Complex(-0.3, 1.7);
  }
  const auto after = evaluate(h, r, 10.0);
  EXPECT_NEAR(after.precoding_gain, before.precoding_gain, 1e-12);
  EXPECT_NEAR(after.cosine_similarity, before.cosine_similarity, 1e-12);
  EXPECT_NEAR(after.spectral_efficiency, before.spectral_efficiency, 1e-12);
  EXPECT_NE(after.nmse_linear, before.nmse_linear);
}

TEST(Alignment, DegenerateHandling) {
  const auto h = row({{1, 0}, {0, 1}});
  const ChannelMatrix zero(1, 2);
  EXPECT_THROW(step_precoding_gain(h, zero), DegenerateInputError);
  EXPECT_EQ(step_precoding_gain(h, zero, DegeneratePolicy::zero_alignment), 0.0);
  EXPECT_EQ(step_spectral_efficiency(h, zero, 3.0, DegeneratePolicy::zero_alignment), 0.0);
  EXPECT_THROW(step_cosine_similarity(zero, h, DegeneratePolicy::zero_alignment),
               DegenerateInputError);
  EXPECT_THROW(step_precoding_gain(ChannelMatrix(2, 2), ChannelMatrix(2, 2)), ShapeError);
}

TEST(Evaluate, Record) {
  const auto h = random_rows(30, 4, 8);
  const auto rec = evaluate(h, h, 10.0);
  EXPECT_EQ(rec.n_steps, 30u);
  EXPECT_EQ(rec.snr_db, 10.0);
  EXPECT_NEAR(rec.precoding_gain, 1.0, 1e-12);
  EXPECT_NEAR(rec.cosine_similarity, 1.0, 1e-12);
  EXPECT_TRUE(std::isinf(rec.nmse_db));
}

TEST(FormatNumber, Forms) {
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(0.25), "0.25");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(v)), v);
}

}  // namespace
}  // namespace twinfeed
