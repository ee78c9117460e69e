#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "twinfeed/channel.hpp"

namespace twinfeed {

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConstants&) const = default;
};

/// Hyperparameters of the Jordan predictor. Defaults: two tanh hidden layers
/// of 20 units, Adam at 1e-4, batch 20, 100 epochs.
struct PredictorConfig {
  std::size_t delay = 4;  // d: number of past matrices besides the current one
  std::size_t hidden_layers = 2;
  std::size_t hidden_units = 20;
  double learn_rate = 1e-4;
  std::size_t batch_size = 20;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  AdamConstants adam;
  /// The network output is the standardized change from the most recent
  /// window sample instead of the next sample itself.
  bool increment_output = true;

  void validate() const;
  bool operator==(const PredictorConfig&) const = default;
};

/// Layer widths implied by the antenna counts and the delay depth.
struct NetworkShape {
  std::size_t n_r = 1;
  std::size_t n_t = 1;
  std::size_t delay = 0;
  std::size_t hidden_layers = 1;
  std::size_t hidden_units = 1;

  std::size_t subchannels() const { return n_r * n_t; }
  /// Real components of the d+1 window matrices.
  std::size_t window_width() const { return 2 * (delay + 1) * subchannels(); }
  /// External plus recurrent inputs: 2 (d+2) N_r N_t.
  std::size_t input_width() const { return 2 * (delay + 2) * subchannels(); }
  /// Real and imaginary part of every sub-channel: 2 N_r N_t.
  std::size_t output_width() const { return 2 * subchannels(); }
};

/// Dense weight stage, row-major `outputs x inputs`, no bias.
struct DenseLayer {
  std::size_t outputs = 0;
  std::size_t inputs = 0;
  std::vector<double> weights;

  double& at(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
  double at(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }
};

/// Per-component standardization over the 2 N_r N_t real components
/// (real block then imaginary block, row-major within each block).
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;
  /// Same statistics for one-step changes h(t+1) - h(t); scale the network
  /// output when it predicts increments.
  std::vector<double> step_mean;
  std::vector<double> step_stddev;

  static Normalization identity(std::size_t components);
  /// Welford estimates over every sample (and every one-step change) of the
  /// trace. Components with zero spread keep unit scale so a constant trace
  /// maps to exactly zero.
  static Normalization fit(const ChannelTrace& trace);

  double normalize(std::size_t component, double v) const {
    return (v - mean[component]) / stddev[component];
  }
  double denormalize(std::size_t component, double v) const {
    return v * stddev[component] + mean[component];
  }
};

/// Jordan recurrent network: the previous predicted output is fed back as
/// an extra input to the first hidden layer at the next step.
class PredictorModel {
 public:
  PredictorModel() = default;

  /// Weights drawn uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from the
  /// config seed; identity normalization; zero recurrent state.
  static PredictorModel initialize(const PredictorConfig& cfg, std::size_t n_r, std::size_t n_t);

  const PredictorConfig& config() const { return config_; }
  const NetworkShape& shape() const { return shape_; }
  const Normalization& normalization() const { return norm_; }
  void set_normalization(Normalization norm);

  /// Stages in order: input->hidden_1, hidden->hidden..., hidden_L->output.
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Previous predicted re/im vector in channel units, length 2 N_r N_t.
  std::span<const double> recurrent_state() const { return recurrent_; }
  void set_recurrent_state(std::span<const double> state);

  /// Builds the network input q(t) from a window (most recent first) and the
  /// current recurrent state.
  std::vector<double> preprocess(std::span<const ChannelMatrix> window) const;

  /// One forward pass on a preprocessed input. Returns the denormalized
  /// prediction and stores it as the new recurrent state.
  std::vector<double> forward(std::span<const double> q);

  /// preprocess -> forward -> postprocess.
  ChannelMatrix predict_step(std::span<const ChannelMatrix> window);

  /// Scalar multiplications performed by the weight stages of the most
  /// recent forward pass.
  std::uint64_t last_forward_multiplies() const { return last_multiplies_; }

  bool bitwise_equal(const PredictorModel& other) const;

 private:
  PredictorConfig config_;
  NetworkShape shape_;
  Normalization norm_;
  std::vector<DenseLayer> layers_;
  std::vector<double> recurrent_;
  std::uint64_t last_multiplies_ = 0;
};

/// Flattens a window (most recent first) into real parts of every matrix
/// followed by imaginary parts, standardizes them, then appends the
/// standardized recurrent vector.
std::vector<double> preprocess(std::span<const ChannelMatrix> window,
                               std::span<const double> recurrent, const Normalization& norm);

/// Inverse of the single-matrix part of preprocess (without normalization):
/// first half real parts, second half imaginary parts, row-major.
ChannelMatrix postprocess(std::span<const double> out, std::size_t n_r, std::size_t n_t);

/// Maps a normalized network output back to channel units. With
/// `increment` the most recent window sample, recovered from q, is added.
std::vector<double> output_to_channel(std::span<const double> q, std::span<const double> y,
                                      const Normalization& norm, bool increment);

/// Network evaluation in normalized units (no denormalization, no state):
/// tanh hidden layers, linear output.
std::vector<double> network_output(const std::vector<DenseLayer>& layers,
                                   std::span<const double> q, std::uint64_t* multiplies = nullptr);

struct TrainingReport {
  std::vector<double> train_mse;  // per epoch, normalized units
  std::vector<double> valid_mse;  // per epoch, normalized units
  double valid_nmse_db = 0.0;     // channel units, after the last epoch
  double wall_seconds = 0.0;
  std::uint64_t multiplies_per_step = 0;
};

struct TrainingResult {
  PredictorModel model;
  TrainingReport report;
};

/// Supervised one-step-ahead training with teacher forcing, mini-batch Adam,
/// fixed sample order. Bit-deterministic for a given build.
TrainingResult train(const PredictorConfig& cfg, const ChannelTrace& train,
                     const ChannelTrace& valid);

/// One training example in normalized units.
struct Example {
  std::vector<double> input;
  std::vector<double> target;
};

/// Teacher-forced examples: window ending at t, recurrent = sample t,
/// target = sample t+1 (or its change from sample t with `increment`).
std::vector<Example> build_examples(const ChannelTrace& trace, std::size_t delay,
                                    const Normalization& norm, bool increment);

/// Mean squared error over the batch (averaged over examples and outputs)
/// and its gradient with respect to every weight, laid out like `layers`.
struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;
};
LossGradient loss_and_gradient(const std::vector<DenseLayer>& layers,
                               std::span<const Example> batch);

/// Instrumented count: runs one forward pass on a copy of the model and
/// returns the multiplications performed by its weight stages.
std::uint64_t count_multiplies(const PredictorModel& model);

/// Closed-form count J (I + J + K) for a network with two hidden layers of J
/// units, I inputs and K outputs; counted in real multiplications.
std::uint64_t formula_multiplies(const NetworkShape& shape);

}  // namespace twinfeed
