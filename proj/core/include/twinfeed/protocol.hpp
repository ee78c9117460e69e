#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "twinfeed/channel.hpp"
#include "twinfeed/predictor.hpp"
#include "twinfeed/quantizer.hpp"

namespace twinfeed {

/// Who evaluates the hybrid-vs-conventional error comparison in switching
/// mode. `oracle` uses the error of the channel actually recovered at the
/// gNB, which needs the true channel on the network side. `ue_side` uses the
/// UE's own copy of the recovery, which cannot see a desynchronized gNB twin.
enum class SwitchDecider { oracle, ue_side };

struct ProtocolConfig {
  int quant_bits = 3;
  /// S: samples of conventional feedback collected before the twins are
  /// trained. Also the length of every later re-training window unless
  /// retrain_length overrides it.
  std::size_t init_length = 0;
  /// Tail of the initialization window held out for validation and for
  /// sizing the residual quantizer. 0 selects init_length / 9 (an 80/10 split
  /// of a trace whose last 10% is the test segment).
  std::size_t valid_length = 0;
  std::size_t retrain_length = 0;
  PredictorConfig predictor;
  /// Residual magnitude (max over components) at or below which the UE sends
  /// only the skip header.
  double skip_threshold = 0.0;
  /// Percentile of |component| used to size both quantizer clip ranges.
  double clip_percentile = 99.9;
  SwitchDecider decider = SwitchDecider::oracle;

  std::size_t effective_valid_length(std::size_t window) const;
  std::size_t effective_retrain_length() const;
  void validate() const;
};

enum class MessageKind { skip, residual, full };
enum class LinkMode { conventional, hybrid };
enum class SessionMode { conventional, hybrid, switching };

std::string_view to_string(MessageKind kind);
std::string_view to_string(LinkMode mode);
std::string_view to_string(SessionMode mode);
SessionMode parse_session_mode(std::string_view name);

struct FeedbackMessage {
  MessageKind kind = MessageKind::full;
  std::vector<std::int64_t> indices;  // empty for skip
  std::int64_t payload_bits = 0;      // header bit included where one is sent
};

/// One end of the link: a predictor twin plus its input window of the d+1
/// most recent channels (most recent first).
class TwinEndpoint {
 public:
  TwinEndpoint() = default;
  TwinEndpoint(PredictorModel model, std::vector<ChannelMatrix> window);

  ChannelMatrix predict();
  void observe(const ChannelMatrix& channel);

  PredictorModel& model() { return model_; }
  const PredictorModel& model() const { return model_; }
  const std::vector<ChannelMatrix>& window() const { return window_; }

  bool bitwise_equal(const TwinEndpoint& other) const;

 private:
  PredictorModel model_;
  std::vector<ChannelMatrix> window_;
};

/// State both ends agree on after the assessment handshake.
struct SessionContext {
  ProtocolConfig config;
  std::size_t n_r = 0;
  std::size_t n_t = 0;
  QuantizerSpec conventional;  // Q_c
  QuantizerSpec residual;      // Q_h
  std::uint64_t predictor_seed = 0;
  TwinEndpoint gnb;
  TwinEndpoint ue;
  TrainingReport training;
};

/// Assessment + initialization: sizes Q_c on the first S true channels, trains
/// both twins on the Q_c-quantized history, runs them over the validation
/// tail to size Q_h, and leaves both windows primed with the latest history.
SessionContext run_assessment(const ProtocolConfig& cfg, const ChannelTrace& init_trace);

/// Sizes Q_c only; enough for conventional sessions, which need no twins.
SessionContext conventional_context(const ProtocolConfig& cfg, const ChannelTrace& init_trace);

/// Re-trains both twins and re-sizes Q_h on a new window of true channels and
/// their fed-back (Q_c) versions. Q_c is kept.
void establish_twins(SessionContext& ctx, const ChannelTrace& truth,
                     const ChannelTrace& fed_back);

struct ConventionalStep {
  ChannelMatrix recovered;
  FeedbackMessage message;
};

/// UE quantizes its (exact) channel estimate with Q_c and feeds it all back.
ConventionalStep step_conventional(const SessionContext& ctx, const ChannelMatrix& h_true);

enum class TwinCheck { strict, tolerate };

struct HybridStep {
  ChannelMatrix recovered;     // at the gNB
  ChannelMatrix recovered_ue;  // the UE's copy of the same computation
  ChannelMatrix predicted;     // gNB twin prediction
  FeedbackMessage message;
  bool twins_in_sync = true;
};

/// UE sends Q_h(prediction - estimate) (or a skip header); the gNB subtracts
/// it from its own twin's prediction. Both ends then push their recovered
/// channel into their window. With TwinCheck::strict a prediction mismatch
/// between the twins raises ProtocolError.
HybridStep step_hybrid(SessionContext& ctx, const ChannelMatrix& h_true,
                       TwinCheck check = TwinCheck::strict);

struct StepRecord {
  std::size_t step = 0;  // 0-based index within the test segment
  std::int64_t time_index = 0;
  LinkMode mode = LinkMode::conventional;
  MessageKind kind = MessageKind::full;
  std::int64_t payload_bits = 0;
  double sq_err = 0.0;  // ||H - H_gNB||_F^2
  ChannelMatrix truth;
  ChannelMatrix recovered;
  /// ||H - Q_c(H)||_F^2, the switching threshold (switching mode only).
  std::optional<double> threshold_sq_err;
  /// Error the hybrid path produced (or would have) at this step, as seen by
  /// the configured decider (switching mode only).
  std::optional<double> hybrid_sq_err;
  bool twins_in_sync = true;
};

struct SessionLog {
  SessionMode mode = SessionMode::conventional;
  std::vector<StepRecord> records;
  std::int64_t cumulative_bits = 0;
  std::size_t retrain_count = 0;
  QuantizerSpec conventional;
  QuantizerSpec residual;
  double valid_nmse_db = 0.0;

  std::vector<ChannelMatrix> truths() const;
  std::vector<ChannelMatrix> recovered() const;
};

struct SessionHooks {
  /// Called before every test step; may mutate the context (fault injection).
  std::function<void(std::size_t step, SessionContext& ctx)> before_step;
};

/// Consumes the first S samples for assessment/initialization, then steps
/// the remaining samples in the requested mode. Conventional sessions skip
/// twin training.
SessionLog run_session(const ProtocolConfig& cfg, const ChannelTrace& trace, SessionMode mode,
                       const SessionHooks& hooks = {});

/// Steps trace samples from index ctx.config.init_length on, starting from an
/// already established context (e.g. twins shared between sessions).
SessionLog run_session(SessionContext ctx, const ChannelTrace& trace, SessionMode mode,
                       const SessionHooks& hooks = {});

/// Per-step CSV: `step,mode,kind,payload_bits,sq_err`.
void write_session_csv(const SessionLog& log, std::ostream& os);

}  // namespace twinfeed
