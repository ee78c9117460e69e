#include "twinfeed/predictor.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "twinfeed/error.hpp"
#include "twinfeed/rng.hpp"

namespace twinfeed {

void PredictorConfig::validate() const {
  if (hidden_units < 1) throw ConfigError("predictor: hidden_units must be at least 1");
  if (hidden_layers < 1) throw ConfigError("predictor: hidden_layers must be at least 1");
  if (epochs < 1) throw ConfigError("predictor: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("predictor: batch_size must be at least 1");
  if (!(learn_rate > 0.0) || !std::isfinite(learn_rate))
    throw ConfigError("predictor: learn_rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0)) {
    throw ConfigError("predictor: invalid Adam constants");
  }
}

Normalization Normalization::identity(std::size_t components) {
  return {std::vector<double>(components, 0.0), std::vector<double>(components, 1.0),
          std::vector<double>(components, 0.0), std::vector<double>(components, 1.0)};
}

namespace {

// Running mean and spread of one scalar stream.
struct Welford {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  double stddev() const {
    const double sd = count > 0.0 ? std::sqrt(m2 / count) : 0.0;
    return sd > 1e-12 ? sd : 1.0;
  }
};

double component(const ChannelMatrix& h, std::size_t k, std::size_t m) {
  return k < m ? h[k].real() : h[k - m].imag();
}

}  // namespace

Normalization Normalization::fit(const ChannelTrace& trace) {
  if (trace.empty()) throw ConfigError("normalization: empty trace");
  const std::size_t m = trace.n_r * trace.n_t;
  std::vector<Welford> level(2 * m);
  std::vector<Welford> step(2 * m);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    for (std::size_t k = 0; k < 2 * m; ++k) {
      const double x = component(trace[t], k, m);
      level[k].add(x);
      if (t > 0) step[k].add(x - component(trace[t - 1], k, m));
    }
  }
  Normalization norm;
  for (std::size_t k = 0; k < 2 * m; ++k) {
    norm.mean.push_back(level[k].mean);
    norm.stddev.push_back(level[k].stddev());
    norm.step_mean.push_back(step[k].mean);
    norm.step_stddev.push_back(step[k].stddev());
  }
  return norm;
}

namespace {

double tanh_activation(double beta) { return std::tanh(beta); }

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void require_window(std::span<const ChannelMatrix> window, const NetworkShape& shape) {
  if (window.size() != shape.delay + 1) {
    throw ShapeError("predictor: window holds " + std::to_string(window.size()) +
                     " matrices, expected d+1=" + std::to_string(shape.delay + 1));
  }
  for (const auto& m : window) {
    if (m.n_r() != shape.n_r || m.n_t() != shape.n_t) {
      throw ShapeError("predictor: window matrix shape mismatch");
    }
  }
}

}  // namespace

std::vector<double> preprocess(std::span<const ChannelMatrix> window,
                               std::span<const double> recurrent, const Normalization& norm) {
  if (window.empty()) throw ShapeError("preprocess: empty window");
  const std::size_t m = window.front().size();
  for (const auto& w : window) {
    if (!w.same_shape(window.front())) throw ShapeError("preprocess: window shape mismatch");
  }
  if (recurrent.size() != 2 * m) {
    throw ShapeError("preprocess: recurrent length " + std::to_string(recurrent.size()) +
                     ", expected " + std::to_string(2 * m));
  }
  if (norm.mean.size() != 2 * m || norm.stddev.size() != 2 * m) {
    throw ShapeError("preprocess: normalization width mismatch");
  }
  const std::size_t lags = window.size();
  std::vector<double> q(2 * (lags + 1) * m);
  for (std::size_t l = 0; l < lags; ++l) {
    for (std::size_t c = 0; c < m; ++c) {
      q[l * m + c] = norm.normalize(c, window[l][c].real());
      q[lags * m + l * m + c] = norm.normalize(m + c, window[l][c].imag());
    }
  }
  const std::size_t base = 2 * lags * m;
  for (std::size_t k = 0; k < 2 * m; ++k) q[base + k] = norm.normalize(k, recurrent[k]);
  return q;
}

ChannelMatrix postprocess(std::span<const double> out, std::size_t n_r, std::size_t n_t) {
  const std::size_t m = n_r * n_t;
  if (out.size() != 2 * m) {
    throw ShapeError("postprocess: length " + std::to_string(out.size()) + ", expected " +
                     std::to_string(2 * m));
  }
  ChannelMatrix h(n_r, n_t);
  for (std::size_t c = 0; c < m; ++c) h[c] = {out[c], out[m + c]};
  return h;
}

std::vector<double> output_to_channel(std::span<const double> q, std::span<const double> y,
                                      const Normalization& norm, bool increment) {
  const std::size_t k_out = y.size();
  const std::size_t m = k_out / 2;
  if (k_out == 0 || k_out % 2 != 0 || q.size() % k_out != 0 || q.size() < 2 * k_out) {
    throw ShapeError("output_to_channel: inconsistent input and output widths");
  }
  const std::size_t lags = q.size() / k_out - 1;
  std::vector<double> out(k_out);
  for (std::size_t k = 0; k < k_out; ++k) {
    if (increment) {
      const std::size_t at = k < m ? k : lags * m + (k - m);
      const double latest = norm.denormalize(k, q[at]);
      out[k] = latest + (y[k] * norm.step_stddev[k] + norm.step_mean[k]);
    } else {
      out[k] = norm.denormalize(k, y[k]);
    }
  }
  return out;
}

std::vector<double> network_output(const std::vector<DenseLayer>& layers,
                                   std::span<const double> q, std::uint64_t* multiplies) {
  if (layers.empty()) throw ShapeError("network: no layers");
  if (q.size() != layers.front().inputs) {
    throw ShapeError("network: input length " + std::to_string(q.size()) + ", expected " +
                     std::to_string(layers.front().inputs));
  }
  std::uint64_t count = 0;
  std::vector<double> x(q.begin(), q.end());
  std::vector<double> y;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const bool hidden = l + 1 < layers.size();
    y.assign(layer.outputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = &layer.weights[o * layer.inputs];
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        acc += w[i] * x[i];
        ++count;
      }
      y[o] = hidden ? tanh_activation(acc) : acc;
    }
    x.swap(y);
  }
  if (multiplies != nullptr) *multiplies = count;
  return x;
}

PredictorModel PredictorModel::initialize(const PredictorConfig& cfg, std::size_t n_r,
                                          std::size_t n_t) {
  cfg.validate();
  if (n_r == 0 || n_t == 0) throw ConfigError("predictor: antenna counts must be positive");
  PredictorModel model;
  model.config_ = cfg;
  model.shape_ = NetworkShape{n_r, n_t, cfg.delay, cfg.hidden_layers, cfg.hidden_units};
  const std::size_t k = model.shape_.output_width();
  model.norm_ = Normalization::identity(k);
  model.recurrent_.assign(k, 0.0);

  SeededRng rng(mix_seed(cfg.seed));
  std::size_t fan_in = model.shape_.input_width();
  for (std::size_t l = 0; l <= cfg.hidden_layers; ++l) {
    const std::size_t outputs = l < cfg.hidden_layers ? cfg.hidden_units : k;
    DenseLayer layer{outputs, fan_in, std::vector<double>(outputs * fan_in)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    model.layers_.push_back(std::move(layer));
    fan_in = outputs;
  }
  return model;
}

void PredictorModel::set_normalization(Normalization norm) {
  const std::size_t k = shape_.output_width();
  if (norm.mean.size() != k || norm.stddev.size() != k || norm.step_mean.size() != k ||
      norm.step_stddev.size() != k) {
    throw ShapeError("predictor: normalization width mismatch");
  }
  norm_ = std::move(norm);
}

void PredictorModel::set_recurrent_state(std::span<const double> state) {
  if (state.size() != shape_.output_width()) {
    throw ShapeError("predictor: recurrent state length mismatch");
  }
  recurrent_.assign(state.begin(), state.end());
}

std::vector<double> PredictorModel::preprocess(std::span<const ChannelMatrix> window) const {
  require_window(window, shape_);
  return twinfeed::preprocess(window, recurrent_, norm_);
}

std::vector<double> PredictorModel::forward(std::span<const double> q) {
  auto y = output_to_channel(q, network_output(layers_, q, &last_multiplies_), norm_,
                             config_.increment_output);
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericError("predictor: non-finite output");
  }
  recurrent_ = y;
  return y;
}

ChannelMatrix PredictorModel::predict_step(std::span<const ChannelMatrix> window) {
  const auto q = preprocess(window);
  const auto y = forward(q);
  return postprocess(y, shape_.n_r, shape_.n_t);
}

bool PredictorModel::bitwise_equal(const PredictorModel& other) const {
  if (!(config_ == other.config_) || shape_.n_r != other.shape_.n_r ||
      shape_.n_t != other.shape_.n_t || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!same_bits(layers_[l].weights, other.layers_[l].weights)) return false;
  }
  return same_bits(norm_.mean, other.norm_.mean) && same_bits(norm_.stddev, other.norm_.stddev) &&
         same_bits(norm_.step_mean, other.norm_.step_mean) &&
         same_bits(norm_.step_stddev, other.norm_.step_stddev) &&
         same_bits(recurrent_, other.recurrent_);
}

std::vector<Example> build_examples(const ChannelTrace& trace, std::size_t delay,
                                    const Normalization& norm, bool increment) {
  std::vector<Example> out;
  if (trace.size() < delay + 2) return out;
  const std::size_t m = trace.n_r * trace.n_t;
  std::vector<double> recurrent(2 * m);
  out.reserve(trace.size() - delay - 1);
  for (std::size_t t = delay; t + 1 < trace.size(); ++t) {
    std::vector<ChannelMatrix> window;
    window.reserve(delay + 1);
    for (std::size_t l = 0; l <= delay; ++l) window.push_back(trace[t - l]);
    // Teacher forcing: the fed-back output is the previous target, sample t.
    for (std::size_t c = 0; c < m; ++c) {
      recurrent[c] = trace[t][c].real();
      recurrent[m + c] = trace[t][c].imag();
    }
    Example ex;
    ex.input = preprocess(window, recurrent, norm);
    ex.target.resize(2 * m);
    const std::size_t lags = delay + 1;
    for (std::size_t k = 0; k < 2 * m; ++k) {
      const double next = component(trace[t + 1], k, m);
      if (increment) {
        const std::size_t at = k < m ? k : lags * m + (k - m);
        const double latest = norm.denormalize(k, ex.input[at]);
        ex.target[k] = (next - latest - norm.step_mean[k]) / norm.step_stddev[k];
      } else {
        ex.target[k] = norm.normalize(k, next);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

// Preallocated buffers for backpropagation through the dense stack.
class Backprop {
 public:
  explicit Backprop(const std::vector<DenseLayer>& layers) {
    acts_.resize(layers.size() + 1);
    deltas_.resize(layers.size());
    acts_[0].resize(layers.front().inputs);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      acts_[l + 1].resize(layers[l].outputs);
      deltas_[l].resize(layers[l].outputs);
    }
  }

  // Accumulates d(loss)/dW into grads; returns the example's summed squared
  // error. `scale` multiplies the output error (2 / (batch * K) for MSE).
  double accumulate(const std::vector<DenseLayer>& layers, const Example& ex, double scale,
                    std::vector<std::vector<double>>& grads) {
    const std::size_t n = layers.size();
    std::copy(ex.input.begin(), ex.input.end(), acts_[0].begin());
    for (std::size_t l = 0; l < n; ++l) {
      const auto& layer = layers[l];
      const auto& x = acts_[l];
      auto& y = acts_[l + 1];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* w = &layer.weights[o * layer.inputs];
        double acc = 0.0;
        for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * x[i];
        y[o] = l + 1 < n ? tanh_activation(acc) : acc;
      }
    }

    double sq = 0.0;
    auto& out = acts_[n];
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double e = out[k] - ex.target[k];
      sq += e * e;
      deltas_[n - 1][k] = scale * e;
    }

    for (std::size_t l = n; l-- > 0;) {
      const auto& layer = layers[l];
      const auto& x = acts_[l];
      const auto& delta = deltas_[l];
      auto& g = grads[l];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta[o];
        double* gr = &g[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) gr[i] += d * x[i];
      }
      if (l == 0) break;
      auto& prev = deltas_[l - 1];
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        double acc = 0.0;
        for (std::size_t o = 0; o < layer.outputs; ++o) acc += layer.weights[o * layer.inputs + i] * delta[o];
        prev[i] = acc * (1.0 - x[i] * x[i]);  // tanh' expressed through its output
      }
    }
    return sq;
  }

 private:
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> deltas_;
};

std::vector<std::vector<double>> zero_grads(const std::vector<DenseLayer>& layers) {
  std::vector<std::vector<double>> grads;
  grads.reserve(layers.size());
  for (const auto& layer : layers) grads.emplace_back(layer.weights.size(), 0.0);
  return grads;
}

double mean_squared_error(const std::vector<DenseLayer>& layers, std::span<const Example> set) {
  if (set.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : set) {
    const auto y = network_output(layers, ex.input);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double e = y[k] - ex.target[k];
      total += e * e;
    }
  }
  return total / static_cast<double>(set.size() * set.front().target.size());
}

// Aggregate ratio sum|err|^2 / sum|target|^2: quantized targets can be the
// zero matrix, which makes per-step ratios undefined.
double nmse_db_channel_units(const std::vector<DenseLayer>& layers, const Normalization& norm,
                             bool increment, std::span<const Example> set) {
  double err = 0.0;
  double pow = 0.0;
  for (const auto& ex : set) {
    const auto pred = output_to_channel(ex.input, network_output(layers, ex.input), norm, increment);
    const auto target = output_to_channel(ex.input, ex.target, norm, increment);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      err += (pred[k] - target[k]) * (pred[k] - target[k]);
      pow += target[k] * target[k];
    }
  }
  if (!(pow > 0.0)) return 0.0;
  const double lin = err / pow;
  return lin > 0.0 ? 10.0 * std::log10(lin) : -std::numeric_limits<double>::infinity();
}

}  // namespace

LossGradient loss_and_gradient(const std::vector<DenseLayer>& layers,
                               std::span<const Example> batch) {
  if (batch.empty()) throw ConfigError("loss_and_gradient: empty batch");
  LossGradient out{0.0, zero_grads(layers)};
  Backprop bp(layers);
  const double k = static_cast<double>(batch.front().target.size());
  const double scale = 2.0 / (static_cast<double>(batch.size()) * k);
  for (const auto& ex : batch) out.loss += bp.accumulate(layers, ex, scale, out.grads);
  out.loss /= static_cast<double>(batch.size()) * k;
  return out;
}

TrainingResult train(const PredictorConfig& cfg, const ChannelTrace& train_trace,
                     const ChannelTrace& valid_trace) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  if (train_trace.size() <= cfg.delay + 1) {
    throw ConfigError("train: training trace has " + std::to_string(train_trace.size()) +
                      " samples, need more than d+1=" + std::to_string(cfg.delay + 1));
  }
  if (valid_trace.n_r != train_trace.n_r || valid_trace.n_t != train_trace.n_t) {
    throw ShapeError("train: training and validation dimensions differ");
  }

  auto model = PredictorModel::initialize(cfg, train_trace.n_r, train_trace.n_t);
  model.set_normalization(Normalization::fit(train_trace));
  const auto& norm = model.normalization();

  const auto examples = build_examples(train_trace, cfg.delay, norm, cfg.increment_output);

  // When validation continues the training segment in time, borrow the last d
  // training samples as context so every validation sample becomes a target.
  ChannelTrace valid_ctx = valid_trace;
  if (!valid_trace.empty() &&
      valid_trace[0].time_index() == train_trace.samples.back().time_index() + 1) {
    const std::size_t borrow = std::min(cfg.delay + 1, train_trace.size());
    valid_ctx.samples.insert(valid_ctx.samples.begin(),
                             train_trace.samples.end() - static_cast<std::ptrdiff_t>(borrow),
                             train_trace.samples.end());
  }
  const auto valid_examples = build_examples(valid_ctx, cfg.delay, norm, cfg.increment_output);

  auto& layers = model.layers();
  auto grads = zero_grads(layers);
  auto first_moment = zero_grads(layers);
  auto second_moment = zero_grads(layers);
  Backprop bp(layers);

  TrainingReport report;
  const double k = static_cast<double>(examples.front().target.size());
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_sq = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, examples.size());
      const double scale = 2.0 / (static_cast<double>(end - start) * k);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      double batch_sq = 0.0;
      for (std::size_t e = start; e < end; ++e) {
        batch_sq += bp.accumulate(layers, examples[e], scale, grads);
      }
      if (!std::isfinite(batch_sq)) {
        throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      epoch_sq += batch_sq;

      beta1_pow *= cfg.adam.beta1;
      beta2_pow *= cfg.adam.beta2;
      const double c1 = 1.0 - beta1_pow;
      const double c2 = 1.0 - beta2_pow;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights;
        auto& m1 = first_moment[l];
        auto& m2 = second_moment[l];
        const auto& g = grads[l];
        for (std::size_t i = 0; i < w.size(); ++i) {
          m1[i] = cfg.adam.beta1 * m1[i] + (1.0 - cfg.adam.beta1) * g[i];
          m2[i] = cfg.adam.beta2 * m2[i] + (1.0 - cfg.adam.beta2) * g[i] * g[i];
          w[i] -= cfg.learn_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.adam.epsilon);
        }
      }
    }
    const double train_mse = epoch_sq / (static_cast<double>(examples.size()) * k);
    const double valid_mse = mean_squared_error(layers, valid_examples);
    if (!std::isfinite(train_mse) || !std::isfinite(valid_mse)) {
      throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
    report.train_mse.push_back(train_mse);
    report.valid_mse.push_back(valid_mse);
  }

  for (const auto& layer : layers) {
    for (double w : layer.weights) {
      if (!std::isfinite(w)) throw TrainingError("train: non-finite weight after training");
    }
  }

  // Continue the recurrent state from the last teacher-forced step so that a
  // prediction right after training sees the state it was trained with.
  const auto& last = train_trace.samples.back();
  const std::size_t m = last.size();
  std::vector<double> state(2 * m);
  for (std::size_t c = 0; c < m; ++c) {
    state[c] = last[c].real();
    state[m + c] = last[c].imag();
  }
  model.set_recurrent_state(state);

  report.valid_nmse_db = nmse_db_channel_units(layers, norm, cfg.increment_output, valid_examples);
  report.multiplies_per_step = count_multiplies(model);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(model), std::move(report)};
}

std::uint64_t count_multiplies(const PredictorModel& model) {
  PredictorModel copy = model;
  const std::vector<double> q(copy.shape().input_width(), 0.0);
  copy.forward(q);
  return copy.last_forward_multiplies();
}

std::uint64_t formula_multiplies(const NetworkShape& shape) {
  const std::uint64_t j = shape.hidden_units;
  return j * (shape.input_width() + j + shape.output_width());
}

}  // namespace twinfeed
