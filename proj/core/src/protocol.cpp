#include "twinfeed/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "twinfeed/error.hpp"
#include "twinfeed/rng.hpp"

namespace twinfeed {

namespace {

// Header bit distinguishing a skip from a residual payload.
constexpr std::int64_t kHeaderBits = 1;

std::vector<ChannelMatrix> tail_window(const ChannelTrace& trace, std::size_t end,
                                       std::size_t depth) {
  // Most recent first: trace[end-1], trace[end-2], ...
  std::vector<ChannelMatrix> window;
  window.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) window.push_back(trace[end - 1 - i]);
  return window;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::size_t ProtocolConfig::effective_valid_length(std::size_t window) const {
  return valid_length != 0 ? valid_length : window / 9;
}

std::size_t ProtocolConfig::effective_retrain_length() const {
  return retrain_length != 0 ? retrain_length : init_length;
}

void ProtocolConfig::validate() const {
  if (quant_bits < 1 || quant_bits > QuantizerSpec::kMaxBits) {
    throw ConfigError("protocol: quant_bits must be in [1, " +
                      std::to_string(QuantizerSpec::kMaxBits) + "]");
  }
  predictor.validate();
  if (!(skip_threshold >= 0.0) || !std::isfinite(skip_threshold)) {
    throw ConfigError("protocol: skip_threshold must be finite and non-negative");
  }
  if (!(clip_percentile > 0.0 && clip_percentile <= 100.0)) {
    throw ConfigError("protocol: clip_percentile must be in (0, 100]");
  }
  const std::size_t context = predictor.delay + 1;
  for (const std::size_t window : {init_length, effective_retrain_length()}) {
    const std::size_t v = effective_valid_length(window);
    if (v == 0 || v >= window || window - v <= context) {
      throw ConfigError("protocol: window of " + std::to_string(window) +
                        " samples leaves no room for training (d+1=" + std::to_string(context) +
                        ") and validation (" + std::to_string(v) + ")");
    }
  }
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::skip: return "skip";
    case MessageKind::residual: return "residual";
    case MessageKind::full: return "full";
  }
  return "?";
}

std::string_view to_string(LinkMode mode) {
  return mode == LinkMode::hybrid ? "hybrid" : "conventional";
}

std::string_view to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::conventional: return "conventional";
    case SessionMode::hybrid: return "hybrid";
    case SessionMode::switching: return "switching";
  }
  return "?";
}

SessionMode parse_session_mode(std::string_view name) {
  if (name == "conventional") return SessionMode::conventional;
  if (name == "hybrid") return SessionMode::hybrid;
  if (name == "switching") return SessionMode::switching;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected conventional, hybrid or switching)");
}

TwinEndpoint::TwinEndpoint(PredictorModel model, std::vector<ChannelMatrix> window)
    : model_(std::move(model)), window_(std::move(window)) {}

ChannelMatrix TwinEndpoint::predict() { return model_.predict_step(window_); }

void TwinEndpoint::observe(const ChannelMatrix& channel) {
  window_.pop_back();
  window_.insert(window_.begin(), channel);
}

bool TwinEndpoint::bitwise_equal(const TwinEndpoint& other) const {
  if (window_.size() != other.window_.size() || !model_.bitwise_equal(other.model_)) return false;
  for (std::size_t i = 0; i < window_.size(); ++i) {
    if (!window_[i].bitwise_equal(other.window_[i])) return false;
  }
  return true;
}

void establish_twins(SessionContext& ctx, const ChannelTrace& truth, const ChannelTrace& fed_back) {
  const auto& cfg = ctx.config;
  if (truth.size() != fed_back.size()) {
    throw ShapeError("protocol: truth and fed-back windows differ in length");
  }
  const std::size_t n = truth.size();
  const std::size_t n_valid = cfg.effective_valid_length(n);
  const std::size_t context = cfg.predictor.delay + 1;
  if (n_valid == 0 || n_valid >= n || n - n_valid <= context) {
    throw ConfigError("protocol: window of " + std::to_string(n) + " samples is too short");
  }
  const std::size_t n_train = n - n_valid;
  const auto train_part = fed_back.slice(0, n_train);
  const auto valid_part = fed_back.slice(n_train, n_valid);

  // Each end trains its own twin from the shared history.
  PredictorConfig pcfg = cfg.predictor;
  pcfg.seed = ctx.predictor_seed;
  auto gnb_result = train(pcfg, train_part, valid_part);
  auto ue_result = train(pcfg, train_part, valid_part);
  if (!gnb_result.model.bitwise_equal(ue_result.model)) {
    throw ProtocolError("protocol: twins differ after training");
  }

  ctx.gnb = TwinEndpoint(std::move(gnb_result.model), tail_window(fed_back, n_train, context));
  ctx.ue = TwinEndpoint(std::move(ue_result.model), tail_window(fed_back, n_train, context));
  ctx.training = std::move(gnb_result.report);

  // Free-running pass over the validation tail: the UE measures how far its
  // predictions land from the true channel, which sizes Q_h.
  std::vector<ChannelMatrix> residuals;
  residuals.reserve(n_valid);
  for (std::size_t t = n_train; t < n; ++t) {
    ctx.gnb.predict();
    residuals.push_back(ctx.ue.predict() - truth[t]);
    ctx.gnb.observe(fed_back[t]);
    ctx.ue.observe(fed_back[t]);
  }
  double clip = component_percentile(residuals, cfg.clip_percentile);
  if (!(clip > 0.0)) clip = ctx.conventional.clip();
  ctx.residual = build_spec(cfg.quant_bits, clip);
}

SessionContext conventional_context(const ProtocolConfig& cfg, const ChannelTrace& init_trace) {
  cfg.validate();
  init_trace.validate();
  if (init_trace.size() < cfg.init_length) {
    throw ConfigError("protocol: trace has " + std::to_string(init_trace.size()) +
                      " samples, initialization needs " + std::to_string(cfg.init_length));
  }
  SessionContext ctx;
  ctx.config = cfg;
  ctx.n_r = init_trace.n_r;
  ctx.n_t = init_trace.n_t;
  ctx.predictor_seed = mix_seed(cfg.predictor.seed);
  const auto truth = init_trace.slice(0, cfg.init_length);
  const double clip = component_percentile(truth.samples, cfg.clip_percentile);
  if (!(clip > 0.0)) {
    throw DegenerateInputError("protocol: initialization window is identically zero");
  }
  ctx.conventional = build_spec(cfg.quant_bits, clip);
  return ctx;
}

SessionContext run_assessment(const ProtocolConfig& cfg, const ChannelTrace& init_trace) {
  auto ctx = conventional_context(cfg, init_trace);
  const auto truth = init_trace.slice(0, cfg.init_length);
  ChannelTrace fed_back = truth;
  for (auto& m : fed_back.samples) {
    auto q = quantize_matrix(ctx.conventional, m);
    q.values.set_time_index(m.time_index());
    m = std::move(q.values);
  }
  establish_twins(ctx, truth, fed_back);
  return ctx;
}

ConventionalStep step_conventional(const SessionContext& ctx, const ChannelMatrix& h_true) {
  auto q = quantize_matrix(ctx.conventional, h_true);
  ConventionalStep out;
  out.recovered = dequantize(ctx.conventional, q.indices, h_true.n_r(), h_true.n_t());
  out.recovered.set_time_index(h_true.time_index());
  out.message.kind = MessageKind::full;
  out.message.payload_bits = q.payload_bits;
  out.message.indices = std::move(q.indices);
  return out;
}

HybridStep step_hybrid(SessionContext& ctx, const ChannelMatrix& h_true, TwinCheck check) {
  HybridStep out;
  const ChannelMatrix pred_ue = ctx.ue.predict();
  out.predicted = ctx.gnb.predict();
  out.twins_in_sync = out.predicted.bitwise_equal(pred_ue);
  if (!out.twins_in_sync && check == TwinCheck::strict) {
    throw ProtocolError("protocol: twin predictions diverged at time index " +
                        std::to_string(h_true.time_index()));
  }

  // UE side.
  const ChannelMatrix residual = pred_ue - h_true;
  if (residual.max_abs_component() <= ctx.config.skip_threshold) {
    out.message.kind = MessageKind::skip;
    out.message.payload_bits = kHeaderBits;
    out.recovered_ue = pred_ue;
    out.recovered = out.predicted;
  } else {
    auto q = quantize_matrix(ctx.residual, residual);
    out.message.kind = MessageKind::residual;
    out.message.payload_bits = kHeaderBits + q.payload_bits;
    out.recovered_ue = pred_ue - q.values;
    out.message.indices = std::move(q.indices);
    // gNB side: only the indices cross the link.
    out.recovered =
        out.predicted - dequantize(ctx.residual, out.message.indices, ctx.n_r, ctx.n_t);
  }
  out.recovered.set_time_index(h_true.time_index());
  out.recovered_ue.set_time_index(h_true.time_index());
  ctx.ue.observe(out.recovered_ue);
  ctx.gnb.observe(out.recovered);
  return out;
}

std::vector<ChannelMatrix> SessionLog::truths() const {
  std::vector<ChannelMatrix> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.truth);
  return out;
}

std::vector<ChannelMatrix> SessionLog::recovered() const {
  std::vector<ChannelMatrix> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.recovered);
  return out;
}

SessionLog run_session(const ProtocolConfig& cfg, const ChannelTrace& trace, SessionMode mode,
                       const SessionHooks& hooks) {
  auto ctx = mode == SessionMode::conventional ? conventional_context(cfg, trace)
                                               : run_assessment(cfg, trace);
  return run_session(std::move(ctx), trace, mode, hooks);
}

SessionLog run_session(SessionContext ctx, const ChannelTrace& trace, SessionMode mode,
                       const SessionHooks& hooks) {
  const ProtocolConfig cfg = ctx.config;
  if (trace.size() < cfg.init_length) {
    throw ConfigError("protocol: trace shorter than the initialization window");
  }
  if (mode != SessionMode::conventional && ctx.gnb.window().empty()) {
    throw ProtocolError("protocol: session context has no trained twins");
  }
  SessionLog log;
  log.mode = mode;
  log.conventional = ctx.conventional;
  log.residual = ctx.residual;
  log.valid_nmse_db = ctx.training.valid_nmse_db;

  const std::size_t retrain_length = cfg.effective_retrain_length();
  bool collecting = false;
  ChannelTrace collected_truth;
  ChannelTrace collected_fed;
  for (auto* t : {&collected_truth, &collected_fed}) {
    t->n_r = trace.n_r;
    t->n_t = trace.n_t;
    t->sample_period = trace.sample_period;
  }

  for (std::size_t i = cfg.init_length; i < trace.size(); ++i) {
    const std::size_t step = i - cfg.init_length;
    if (hooks.before_step) hooks.before_step(step, ctx);
    const ChannelMatrix& h = trace[i];

    StepRecord rec;
    rec.step = step;
    rec.time_index = h.time_index();
    rec.truth = h;

    if (mode == SessionMode::hybrid) {
      auto hs = step_hybrid(ctx, h, TwinCheck::strict);
      rec.mode = LinkMode::hybrid;
      rec.kind = hs.message.kind;
      rec.payload_bits = hs.message.payload_bits;
      rec.recovered = std::move(hs.recovered);
      rec.twins_in_sync = hs.twins_in_sync;
    } else if (mode == SessionMode::conventional || collecting) {
      auto cs = step_conventional(ctx, h);
      rec.mode = LinkMode::conventional;
      rec.kind = cs.message.kind;
      rec.payload_bits = cs.message.payload_bits;
      rec.recovered = std::move(cs.recovered);
      if (collecting) {
        rec.threshold_sq_err = (h - rec.recovered).frobenius_norm_sq();
        collected_truth.samples.push_back(h);
        collected_fed.samples.push_back(rec.recovered);
        if (collected_truth.size() == retrain_length) {
          establish_twins(ctx, collected_truth, collected_fed);
          ++log.retrain_count;
          collected_truth.samples.clear();
          collected_fed.samples.clear();
          collecting = false;
        }
      }
    } else {
      // Switching: try the hybrid path, fall back to Q_c when it does no
      // better than conventional feedback would have.
      auto hs = step_hybrid(ctx, h, TwinCheck::tolerate);
      const auto cs = step_conventional(ctx, h);
      const double threshold = (h - cs.recovered).frobenius_norm_sq();
      const ChannelMatrix& judged =
          cfg.decider == SwitchDecider::oracle ? hs.recovered : hs.recovered_ue;
      const double hybrid_err = (h - judged).frobenius_norm_sq();
      rec.threshold_sq_err = threshold;
      rec.hybrid_sq_err = hybrid_err;
      rec.twins_in_sync = hs.twins_in_sync;
      if (hybrid_err < threshold) {
        rec.mode = LinkMode::hybrid;
        rec.kind = hs.message.kind;
        rec.payload_bits = hs.message.payload_bits;
        rec.recovered = std::move(hs.recovered);
      } else {
        rec.mode = LinkMode::conventional;
        rec.kind = cs.message.kind;
        rec.payload_bits = cs.message.payload_bits;
        rec.recovered = cs.recovered;
        collecting = true;
        collected_truth.samples.push_back(h);
        collected_fed.samples.push_back(cs.recovered);
      }
    }
    rec.sq_err = (h - rec.recovered).frobenius_norm_sq();
    log.cumulative_bits += rec.payload_bits;
    log.records.push_back(std::move(rec));
  }
  return log;
}

void write_session_csv(const SessionLog& log, std::ostream& os) {
  os << "step,mode,kind,payload_bits,sq_err\n";
  for (const auto& r : log.records) {
    os << r.step << ',' << to_string(r.mode) << ',' << to_string(r.kind) << ',' << r.payload_bits
       << ',' << format_double(r.sq_err) << '\n';
  }
  if (!os) throw IoError("session log: write failed");
}

}  // namespace twinfeed
