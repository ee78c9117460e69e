#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "twinfeed/error.hpp"
#include "twinfeed/quantizer.hpp"
#include "twinfeed/rng.hpp"

namespace twinfeed {
namespace {

TEST(QuantizerSpec, TwoBitGrid) {
  const auto levels = build_spec(2, 1.0).levels();
  EXPECT_EQ(levels, (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(QuantizerSpec, ThreeBitGrid) {
  const auto levels = build_spec(3, 1.0).levels();
  const double expect[] = {-1.0, -2.0 / 3, -1.0 / 3, 0.0, 1.0 / 3, 2.0 / 3, 1.0};
  ASSERT_EQ(levels.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(levels[i], expect[i], 1e-15);
  EXPECT_EQ(levels[3], 0.0);
}

TEST(QuantizerSpec, OneBitIsSingleZeroLevel) {
  const auto spec = build_spec(1, 5.0);
  EXPECT_EQ(spec.levels(), std::vector<double>{0.0});
  EXPECT_EQ(quantize_scalar(spec, 3.0).value, 0.0);
}

TEST(QuantizerSpec, SymmetricGridWithExactEndpoints) {
  for (int bits = 2; bits <= 10; ++bits) {
    const auto spec = build_spec(bits, 0.7);
    const auto levels = spec.levels();
    ASSERT_EQ(static_cast<std::int64_t>(levels.size()), (std::int64_t{1} << bits) - 1);
    EXPECT_EQ(levels.front(), -0.7);
    EXPECT_EQ(levels.back(), 0.7);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      EXPECT_EQ(levels[i], -levels[levels.size() - 1 - i]);
    }
  }
}

TEST(QuantizerSpec, InvalidArgumentsRejected) {
  EXPECT_THROW(build_spec(0, 1.0), ConfigError);
  EXPECT_THROW(build_spec(2, 0.0), ConfigError);
  EXPECT_THROW(build_spec(2, std::numeric_limits<double>::infinity()), ConfigError);
  EXPECT_THROW(build_spec(QuantizerSpec::kMaxBits + 1, 1.0), ConfigError);
}

TEST(QuantizeScalar, Examples) {
  const auto spec = build_spec(2, 1.0);
  EXPECT_EQ(quantize_scalar(spec, 0.4).value, 0.0);
  EXPECT_EQ(quantize_scalar(spec, 7.0).value, 1.0);
  EXPECT_EQ(quantize_scalar(spec, 0.5).value, 0.0);
  EXPECT_EQ(quantize_scalar(spec, -0.5).value, 0.0);
  EXPECT_EQ(quantize_scalar(spec, -7.0).value, -1.0);
  EXPECT_EQ(quantize_scalar(spec, 0.51).index, 2);
}

TEST(QuantizeScalar, NonFiniteIsNumericError) {
  const auto spec = build_spec(3, 1.0);
  EXPECT_THROW(quantize_scalar(spec, std::nan("")), NumericError);
  EXPECT_THROW(quantize_scalar(spec, std::numeric_limits<double>::infinity()), NumericError);
}

TEST(QuantizeScalar, MatchesBruteForceOnSmallGrids) {
  SeededRng rng(7);
  for (int bits = 1; bits <= 6; ++bits) {
    const auto spec = build_spec(bits, 1.3);
    const auto levels = spec.levels();
    for (int i = 0; i < 5000; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      const double c = std::clamp(x, -1.3, 1.3);
      double best = levels[0];
      for (double lv : levels) {
        const double d = std::abs(c - lv);
        const double bd = std::abs(c - best);
        if (d < bd || (d == bd && std::abs(lv) < std::abs(best))) best = lv;
      }
      ASSERT_EQ(quantize_scalar(spec, x).value, best) << "bits=" << bits << " x=" << x;
    }
  }
}

TEST(QuantizeScalar, ErrorBoundInsideRange) {
  SeededRng rng(11);
  for (int bits : {2, 5, 12, 20}) {
    const auto spec = build_spec(bits, 2.0);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      EXPECT_LE(std::abs(quantize_scalar(spec, x).value - x), spec.max_error() * (1 + 1e-12));
    }
  }
}

TEST(QuantizeMatrix, ComponentwiseExample) {
  const ChannelMatrix m(1, 1, std::vector<Complex>{{0.4, 0.9}});
  const auto q = quantize_matrix(build_spec(2, 1.0), m);
  EXPECT_EQ(q.values[0], Complex(0.0, 1.0));
  EXPECT_EQ(q.payload_bits, 4);
  EXPECT_EQ(q.indices, (std::vector<std::int64_t>{1, 2}));
}

TEST(QuantizeMatrix, ZeroPreservedForEverySpec) {
  const ChannelMatrix zero(2, 3);
  for (int bits = 1; bits <= 24; ++bits) {
    const auto q = quantize_matrix(build_spec(bits, 0.3), zero);
    EXPECT_EQ(q.values.frobenius_norm_sq(), 0.0);
    EXPECT_EQ(q.payload_bits, 2 * 6 * bits);
  }
}

TEST(QuantizeMatrix, Idempotent) {
  GeneratorConfig g;
  g.n_samples = 20;
  const auto trace = generate_trace(g);
  const auto spec = build_spec(4, 1.5);
  for (const auto& m : trace.samples) {
    const auto once = quantize_matrix(spec, m).values;
    EXPECT_TRUE(quantize_matrix(spec, once).values.bitwise_equal(once));
  }
}

TEST(QuantizeMatrix, TwentyBitsWithinGridBound) {
  GeneratorConfig g;
  g.n_samples = 100;
  const auto trace = generate_trace(g);
  double clip = 0.0;
  for (const auto& m : trace.samples) clip = std::max(clip, m.max_abs_component());
  const auto spec = build_spec(20, clip);
  const double bound = clip / static_cast<double>((1 << 20) - 2);
  for (const auto& m : trace.samples) {
    EXPECT_LE((quantize_matrix(spec, m).values - m).max_abs_component(), bound * (1 + 1e-9));
  }
}

TEST(QuantizeMatrix, MonotoneFidelityInBits) {
  SeededRng rng(3);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = rng.uniform(-1.0, 1.0);
  double previous = std::numeric_limits<double>::infinity();
  for (int bits = 1; bits <= 12; ++bits) {
    const auto spec = build_spec(bits, 1.0);
    double mse = 0.0;
    for (double x : xs) mse += std::pow(quantize_scalar(spec, x).value - x, 2);
    EXPECT_LE(mse, previous) << bits;
    previous = mse;
  }
}

TEST(Dequantize, InvertsIndices) {
  const auto spec = build_spec(5, 2.0);
  const ChannelMatrix m(1, 2, std::vector<Complex>{{0.3, -1.1}, {2.5, 0.0}});
  const auto q = quantize_matrix(spec, m);
  EXPECT_TRUE(dequantize(spec, q.indices, 1, 2).bitwise_equal(q.values));
  std::vector<std::int64_t> bad = q.indices;
  bad[0] = 31;
  EXPECT_THROW(dequantize(spec, bad, 1, 2), ShapeError);
  EXPECT_THROW(dequantize(spec, q.indices, 2, 2), ShapeError);
}

TEST(ComponentPercentile, InterpolatesLinearly) {
  std::vector<ChannelMatrix> samples;
  samples.emplace_back(1, 1, std::vector<Complex>{{1.0, -2.0}});
  samples.emplace_back(1, 1, std::vector<Complex>{{3.0, 4.0}});
  // |components| sorted: 1 2 3 4.
  EXPECT_DOUBLE_EQ(component_percentile(samples, 100.0), 4.0);
  EXPECT_DOUBLE_EQ(component_percentile(samples, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(component_percentile(samples, 50.0), 2.5);
}

}  // namespace
}  // namespace twinfeed
