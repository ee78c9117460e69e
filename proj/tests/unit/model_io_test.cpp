#include <gtest/gtest.h>

#include <filesystem>

#include "twinfeed/error.hpp"
#include "twinfeed/model_io.hpp"

namespace twinfeed {
namespace {

PredictorModel trained_model() {
  GeneratorConfig g;
  g.n_samples = 400;
  g.n_t = 2;
  const auto trace = generate_trace(g);
  PredictorConfig cfg;
  cfg.delay = 2;
  cfg.hidden_units = 5;
  cfg.epochs = 2;
  return train(cfg, trace.slice(0, 350), trace.slice(350, 50)).model;
}

TEST(ModelIo, RoundTripIsBitIdentical) {
  const auto model = trained_model();
  const auto blob = serialize_model(model);
  const auto back = deserialize_model(blob);
  EXPECT_TRUE(back.bitwise_equal(model));
  EXPECT_EQ(serialize_model(back), blob);
  EXPECT_EQ(back.config(), model.config());
}

TEST(ModelIo, ReloadedModelPredictsIdentically) {
  auto model = trained_model();
  auto copy = deserialize_model(serialize_model(model));
  const std::vector<ChannelMatrix> window(3, ChannelMatrix(1, 2, std::vector<Complex>{{0.1, 0.2}, {0.3, -0.4}}));
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(model.predict_step(window).bitwise_equal(copy.predict_step(window)));
  }
}

TEST(ModelIo, CorruptBlobsRejected) {
  const auto blob = serialize_model(trained_model());
  auto bad_magic = blob;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), ParseError);
  EXPECT_THROW(deserialize_model(std::span(blob).first(blob.size() - 1)), ParseError);
  auto extra = blob;
  extra.push_back(0);
  EXPECT_THROW(deserialize_model(extra), ParseError);
  EXPECT_THROW(deserialize_model(std::span<const std::uint8_t>{}), ParseError);
}

TEST(ModelIo, FileRoundTrip) {
  const auto model = trained_model();
  const auto path = std::filesystem::temp_directory_path() / "twinfeed_model_io_test.jrnn";
  save_model(model, path);
  EXPECT_TRUE(load_model(path).bitwise_equal(model));
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), IoError);
}

}  // namespace
}  // namespace twinfeed
