#include "twinfeed/model_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "byte_io.hpp"
#include "twinfeed/error.hpp"

namespace twinfeed {

namespace {
constexpr char kMagic[4] = {'J', 'R', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_vector(std::ostream& os, std::span<const double> v) {
  detail::put_u64(os, v.size());
  for (double x : v) detail::put_f64(os, x);
}

std::vector<double> get_vector(std::istream& is, std::size_t expected, const char* what) {
  const auto n = detail::get_u64(is, what);
  if (n != expected) throw ParseError(std::string("model: bad length for ") + what);
  std::vector<double> v(n);
  for (auto& x : v) x = detail::get_f64(is, what);
  return v;
}
}  // namespace

std::vector<std::uint8_t> serialize_model(const PredictorModel& model) {
  std::ostringstream os(std::ios::binary);
  const auto& cfg = model.config();
  const auto& shape = model.shape();
  os.write(kMagic, 4);
  detail::put_u32(os, kVersion);
  detail::put_u64(os, cfg.delay);
  detail::put_u64(os, cfg.hidden_layers);
  detail::put_u64(os, cfg.hidden_units);
  detail::put_f64(os, cfg.learn_rate);
  detail::put_u64(os, cfg.batch_size);
  detail::put_u64(os, cfg.epochs);
  detail::put_u64(os, cfg.seed);
  detail::put_f64(os, cfg.adam.beta1);
  detail::put_f64(os, cfg.adam.beta2);
  detail::put_f64(os, cfg.adam.epsilon);
  detail::put_u32(os, cfg.increment_output ? 1u : 0u);
  detail::put_u32(os, static_cast<std::uint32_t>(shape.n_r));
  detail::put_u32(os, static_cast<std::uint32_t>(shape.n_t));
  put_vector(os, model.normalization().mean);
  put_vector(os, model.normalization().stddev);
  put_vector(os, model.normalization().step_mean);
  put_vector(os, model.normalization().step_stddev);
  detail::put_u32(os, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    detail::put_u32(os, static_cast<std::uint32_t>(layer.outputs));
    detail::put_u32(os, static_cast<std::uint32_t>(layer.inputs));
    put_vector(os, layer.weights);
  }
  put_vector(os, model.recurrent_state());
  const std::string bytes = std::move(os).str();
  return {bytes.begin(), bytes.end()};
}

PredictorModel deserialize_model(std::span<const std::uint8_t> blob) {
  std::istringstream is(std::string(blob.begin(), blob.end()), std::ios::binary);
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
    throw ParseError("model: bad magic");
  }
  const auto version = detail::get_u32(is, "version");
  if (version != kVersion) throw ParseError("model: unsupported version " + std::to_string(version));

  PredictorConfig cfg;
  cfg.delay = detail::get_u64(is, "delay");
  cfg.hidden_layers = detail::get_u64(is, "hidden_layers");
  cfg.hidden_units = detail::get_u64(is, "hidden_units");
  cfg.learn_rate = detail::get_f64(is, "learn_rate");
  cfg.batch_size = detail::get_u64(is, "batch_size");
  cfg.epochs = detail::get_u64(is, "epochs");
  cfg.seed = detail::get_u64(is, "seed");
  cfg.adam.beta1 = detail::get_f64(is, "beta1");
  cfg.adam.beta2 = detail::get_f64(is, "beta2");
  cfg.adam.epsilon = detail::get_f64(is, "epsilon");
  const auto increment = detail::get_u32(is, "increment flag");
  if (increment > 1) throw ParseError("model: bad increment flag");
  cfg.increment_output = increment == 1;
  const auto n_r = detail::get_u32(is, "n_r");
  const auto n_t = detail::get_u32(is, "n_t");

  PredictorModel model;
  try {
    model = PredictorModel::initialize(cfg, n_r, n_t);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("model: invalid stored config: ") + e.what());
  }
  const std::size_t k = model.shape().output_width();
  Normalization norm;
  norm.mean = get_vector(is, k, "normalization mean");
  norm.stddev = get_vector(is, k, "normalization stddev");
  norm.step_mean = get_vector(is, k, "step mean");
  norm.step_stddev = get_vector(is, k, "step stddev");
  model.set_normalization(std::move(norm));

  const auto n_layers = detail::get_u32(is, "layer count");
  auto& layers = model.layers();
  if (n_layers != layers.size()) throw ParseError("model: layer count mismatch");
  for (auto& layer : layers) {
    const auto outputs = detail::get_u32(is, "layer outputs");
    const auto inputs = detail::get_u32(is, "layer inputs");
    if (outputs != layer.outputs || inputs != layer.inputs) {
      throw ParseError("model: layer shape mismatch");
    }
    layer.weights = get_vector(is, layer.weights.size(), "weights");
  }
  model.set_recurrent_state(get_vector(is, k, "recurrent state"));
  if (is.peek() != std::char_traits<char>::eof()) throw ParseError("model: trailing bytes");
  return model;
}

void save_model(const PredictorModel& model, const std::filesystem::path& path) {
  const auto blob = serialize_model(model);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open model file for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!os) throw IoError("failed writing model file " + path.string());
}

PredictorModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model file " + path.string());
  const std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(is)),
                                       std::istreambuf_iterator<char>());
  return deserialize_model(blob);
}

}  // namespace twinfeed
