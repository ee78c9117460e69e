// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "twinfeed/metrics.hpp"
#include "twinfeed/model_io.hpp"
#include "twinfeed/protocol.hpp"
#include "twinfeed/quantizer.hpp"
#include "twinfeed/rng.hpp"

namespace {

using namespace twinfeed;
namespace ex = twinfeed::experiment;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename... Args>
std::string fmtn(const char* f, Args... args) {
  char buf[400];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Gradient of the batch loss against central differences.
Verdict gradient_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::size_t hidden_layers : {1u, 2u}) {
    PredictorConfig cfg;
    cfg.delay = 1;
    cfg.hidden_units = 3;
    cfg.hidden_layers = hidden_layers;
    auto model = PredictorModel::initialize(cfg, 1, 2);
    auto layers = model.layers();
    SeededRng rng(2024);
    std::vector<Example> batch(8);
    for (auto& e : batch) {
      e.input.resize(model.shape().input_width());
      e.target.resize(model.shape().output_width());
      for (auto& v : e.input) v = rng.uniform(-2, 2);
      for (auto& v : e.target) v = rng.uniform(-2, 2);
    }
    const auto analytic = loss_and_gradient(layers, batch);
    const double h = 1e-5;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t w = 0; w < layers[l].weights.size(); ++w) {
        const double saved = layers[l].weights[w];
        layers[l].weights[w] = saved + h;
        const double up = loss_and_gradient(layers, batch).loss;
        layers[l].weights[w] = saved - h;
        const double down = loss_and_gradient(layers, batch).loss;
        layers[l].weights[w] = saved;
        const double numeric = (up - down) / (2 * h);
        const double a = analytic.grads[l][w];
        const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / scale);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 5.0,
          fmtn("max relative error %.3g (limit 1e-5), %.2f s", worst, secs)};
}

Verdict twin_determinism() {
  const auto t0 = Clock::now();
  int identical = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorConfig g;
    g.n_samples = 5000;
    g.seed = seed;
    const auto trace = generate_trace(g);
    ProtocolConfig p;
    p.init_length = 4500;
    p.predictor.seed = seed;
    const auto a = run_assessment(p, trace);
    const auto b = run_assessment(p, trace);
    const auto blob = serialize_model(a.gnb.model());
    if (blob == serialize_model(b.gnb.model()) && blob == serialize_model(a.ue.model()) &&
        blob == serialize_model(b.ue.model()) && a.gnb.bitwise_equal(b.ue)) {
      ++identical;
    }
  }
  const double secs = seconds_since(t0);
  return {identical == 5 && secs < 120.0,
          fmtn("%d/5 seeds bitwise identical, %.1f s", identical, secs)};
}

Verdict recovery_identity() {
  GeneratorConfig g;
  g.n_samples = 11000;
  const auto trace = generate_trace(g);
  ProtocolConfig p;
  p.quant_bits = 20;
  p.init_length = 10000;
  p.clip_percentile = 100.0;

  // Residual grid wide enough that no test residual is clipped: the range of
  // the channel itself.
  auto ctx = run_assessment(p, trace);
  const double sized_clip = ctx.residual.clip();
  ctx.residual = build_spec(p.quant_bits, ctx.conventional.clip());
  double worst = 0.0;
  double largest_residual = 0.0;
  for (std::size_t i = p.init_length; i < trace.size(); ++i) {
    const auto step = step_hybrid(ctx, trace[i]);
    worst = std::max(worst, (step.recovered - trace[i]).max_abs_component());
    largest_residual = std::max(largest_residual, (step.predicted - trace[i]).max_abs_component());
  }
  const double tightest = build_spec(p.quant_bits, largest_residual).max_error();

  const auto sized = run_session(p, trace, SessionMode::hybrid);
  double sized_worst = 0.0;
  for (const auto& r : sized.records) {
    sized_worst = std::max(sized_worst, (r.recovered - r.truth).max_abs_component());
  }
  return {worst <= 1e-9,
          fmtn("1000 steps, clip %.3g: max |recovered - true| %.3g (limit 1e-9); largest "
               "residual %.3g, so even a clip fitted to it leaves a half-step of %.3g; "
               "validation-sized clip %.3g: %.3g",
               ctx.residual.clip(), worst, largest_residual, tightest, sized_clip, sized_worst)};
}

Verdict feedback_elimination() {
  GeneratorConfig g;
  g.n_samples = 6000;
  g.speed_mps = 0.0;
  const auto trace = generate_trace(g);
  ProtocolConfig p;
  p.quant_bits = 32;
  p.init_length = 5000;
  p.skip_threshold = 1e-9;
  const auto hyb = run_session(p, trace, SessionMode::hybrid);
  const auto conv = run_session(p, trace, SessionMode::conventional);
  std::size_t skips = 0;
  for (const auto& r : hyb.records) skips += r.kind == MessageKind::skip;
  const double n = static_cast<double>(hyb.records.size());
  const double frac = static_cast<double>(skips) / n;
  const double hyb_rate = static_cast<double>(hyb.cumulative_bits) / n;
  const double conv_rate = static_cast<double>(conv.cumulative_bits) / n;
  return {frac >= 0.99 && hyb_rate < 1.1,
          fmtn("B_Q=32: %.2f%% skip, %.3f bits/step hybrid vs %.0f conventional (2*1*4*32)",
               100 * frac, hyb_rate, conv_rate)};
}

struct Sweep {
  std::vector<ex::CellOutcome> cells;
  double seconds = 0.0;

  const ex::CellOutcome& cell(int bits, SessionMode mode) const {
    for (const auto& c : cells) {
      if (c.bits == bits && c.method == mode) return c;
    }
    throw std::runtime_error("missing cell");
  }
};

Sweep default_sweep() {
  ex::ExperimentConfig cfg;
  cfg.bits = {2, 3, 4, 5, 8};
  const auto t0 = Clock::now();
  const auto trace = ex::obtain_trace(cfg);
  Sweep s;
  s.cells = ex::run_cells(cfg, trace, ex::thread_budget());
  s.seconds = seconds_since(t0);
  return s;
}

Verdict headline_trend(const Sweep& s) {
  const double c2 = s.cell(2, SessionMode::conventional).metrics[0].nmse_db;
  const double h2 = s.cell(2, SessionMode::hybrid).metrics[0].nmse_db;
  const double c8 = s.cell(8, SessionMode::conventional).metrics[0].nmse_db;
  const double h8 = s.cell(8, SessionMode::hybrid).metrics[0].nmse_db;
  const bool gain = c2 - h2 >= 3.0;
  const bool agree = std::abs(c8 - h8) <= 0.5;
  return {gain && agree && s.seconds < 300.0,
          fmtn("B_Q=2: conventional %.2f dB, hybrid %.2f dB (gain %.2f, need >= 3) %s; "
               "B_Q=8: conventional %.2f dB, hybrid %.2f dB (gap %.2f, need <= 0.5) %s; %.0f s",
               c2, h2, c2 - h2, gain ? "ok" : "FAIL", c8, h8, std::abs(c8 - h8),
               agree ? "ok" : "FAIL", s.seconds)};
}

Verdict monotone_sweep(const Sweep& s) {
  bool monotone = true;
  std::string detail;
  for (const auto mode : {SessionMode::conventional, SessionMode::hybrid}) {
    detail += std::string(to_string(mode)) + " nmse";
    const MetricsRecord* prev = nullptr;
    for (int bits = 2; bits <= 5; ++bits) {
      const auto& m = s.cell(bits, mode).metrics[0];
      detail += fmt(" %.2f", m.nmse_db);
      if (prev != nullptr) {
        monotone = monotone && m.nmse_db <= prev->nmse_db &&
                   m.precoding_gain >= prev->precoding_gain &&
                   m.cosine_similarity >= prev->cosine_similarity &&
                   m.spectral_efficiency >= prev->spectral_efficiency;
      }
      prev = &m;
    }
    detail += "; ";
  }
  double worst = 0.0;
  for (const auto& c : s.cells) {
    for (const auto& r : c.log.records) {
      const double rho = step_cosine_similarity(r.truth, r.recovered, DegeneratePolicy::zero_alignment);
      const double gamma = step_precoding_gain(r.truth, r.recovered, DegeneratePolicy::zero_alignment);
      worst = std::max(worst, std::abs(gamma - rho * rho));
    }
  }
  detail += fmt("max |Gamma - rho^2| per step %.3g", worst);
  return {monotone && worst <= 1e-12, detail};
}

Verdict complexity_counter() {
  SeededRng rng(77);
  int literal = 0;
  int two_layer = 0;
  int both_stages = 0;
  for (int i = 0; i < 10; ++i) {
    PredictorConfig cfg;
    cfg.delay = static_cast<std::size_t>(rng.uniform(0, 6));
    cfg.hidden_units = 1 + static_cast<std::size_t>(rng.uniform(0, 40));
    const auto n_r = 1 + static_cast<std::size_t>(rng.uniform(0, 2));
    const auto n_t = 1 + static_cast<std::size_t>(rng.uniform(0, 8));
    cfg.hidden_layers = 1;
    const auto one = PredictorModel::initialize(cfg, n_r, n_t);
    const auto& sh = one.shape();
    const std::uint64_t j = sh.hidden_units;
    const std::uint64_t count = count_multiplies(one);
    literal += count == j * (sh.input_width() + j + sh.output_width());
    both_stages += count == j * (sh.input_width() + sh.output_width());
    cfg.hidden_layers = 2;
    two_layer += count_multiplies(PredictorModel::initialize(cfg, n_r, n_t)) ==
                 formula_multiplies(PredictorModel::initialize(cfg, n_r, n_t).shape());
  }
  return {literal == 10,
          fmtn("one hidden layer equals J(I+J+K) in %d/10 shapes and J(I+K) in %d/10; "
               "two hidden layers equal J(I+J+K) in %d/10",
               literal, both_stages, two_layer)};
}

Verdict quantizer_oracle() {
  SeededRng rng(4242);
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  while (checked < 1000000) {
    const int bits = 1 + static_cast<int>(rng.uniform(0, 10));
    const double clip = std::exp(rng.uniform(-5, 5));
    const auto spec = build_spec(bits, clip);
    const auto levels = spec.levels();
    for (int i = 0; i < 1000; ++i, ++checked) {
      double x = 0.0;
      const double pick = rng.uniform01();
      const auto k = static_cast<std::size_t>(rng.uniform(0, static_cast<double>(levels.size())));
      if (pick < 0.2 && levels.size() > 1 && k + 1 < levels.size()) {
        x = (levels[k] + levels[k + 1]) / 2;  // midpoint tie
      } else if (pick < 0.3) {
        x = rng.uniform01() < 0.5 ? clip : -clip;
      } else if (pick < 0.4) {
        x = levels[std::min(k, levels.size() - 1)];
      } else {
        x = rng.uniform(-1.5 * clip, 1.5 * clip);
      }
      const double c = std::clamp(x, -clip, clip);
      double best = levels[0];
      for (double lv : levels) {
        const double d = std::abs(c - lv);
        const double bd = std::abs(c - best);
        if (d < bd || (d == bd && std::abs(lv) < std::abs(best))) best = lv;
      }
      if (quantize_scalar(spec, x).value != best) ++mismatches;
    }
  }
  return {mismatches == 0, fmtn("%zu inputs, %zu mismatches", checked, mismatches)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Verdict end_to_end_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "twinfeed_acceptance_e2e";
  std::filesystem::remove_all(root);
  ex::ExperimentConfig cfg;
  cfg.generator.n_samples = 8000;
  cfg.bits = {2, 3};
  cfg.snr_db = {0, 10};
  cfg.out_dir = root / "a";
  ex::cmd_run(cfg);
  cfg.out_dir = root / "b";
  ex::cmd_run(cfg);
  std::size_t files = 0;
  std::size_t differing = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    ++files;
    const auto rel = std::filesystem::relative(entry.path(), root / "a");
    if (slurp(entry.path()) != slurp(root / "b" / rel)) ++differing;
  }
  std::filesystem::remove_all(root);
  return {files > 0 && differing == 0,
          fmtn("%zu CSV files compared, %zu differ", files, differing)};
}

Verdict switching() {
  GeneratorConfig g;
  g.n_samples = 20000;
  const auto trace = generate_trace(g);
  ProtocolConfig p;
  p.init_length = 14000;
  p.retrain_length = 3000;
  const std::size_t corrupt_at = 200;
  SessionHooks hooks;
  hooks.before_step = [&](std::size_t step, SessionContext& ctx) {
    if (step == corrupt_at) {
      for (auto& w : ctx.ue.model().layers().back().weights) w = -w;
    }
  };
  const auto log = run_session(p, trace, SessionMode::switching, hooks);
  const auto& qc = log.conventional;
  const double n = static_cast<double>(2 * trace.n_r * trace.n_t);
  const double grid_bound = n * qc.max_error() * qc.max_error();

  bool late = false;
  bool bounded = true;
  std::size_t first_cross = 0;
  bool crossed = false;
  bool resumed = false;
  std::size_t hybrid_after = 0;
  for (const auto& r : log.records) {
    const bool over = r.hybrid_sq_err && *r.hybrid_sq_err >= *r.threshold_sq_err;
    if (over && r.mode != LinkMode::conventional) late = true;
    if (r.sq_err > *r.threshold_sq_err + grid_bound) bounded = false;
    if (!crossed && r.step >= corrupt_at && over) {
      crossed = true;
      first_cross = r.step;
    }
    if (crossed && r.step > first_cross && r.mode == LinkMode::hybrid) {
      resumed = true;
      ++hybrid_after;
    }
  }
  const bool pass = crossed && !late && resumed && bounded && log.retrain_count >= 1;
  return {pass, fmtn("corrupted UE twin at step %zu; error crossed the conventional error at step "
                     "%zu and that step fell back: %s; %zu retrains; %zu hybrid steps after; "
                     "every step within conventional error + grid bound: %s",
                     corrupt_at, first_cross, late ? "no" : "yes", log.retrain_count,
                     hybrid_after, bounded ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number; none runs all ten.
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  auto wanted = [&](int id) {
    return selected.empty() || std::find(selected.begin(), selected.end(), id) != selected.end();
  };
  int failures = 0;
  int ran = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    if (!wanted(id)) return;
    ++ran;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("criterion %d %s: %s (%s)\n", id, name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient oracle", gradient_oracle);
  report(2, "twin determinism", twin_determinism);
  report(3, "recovery identity", recovery_identity);
  report(4, "feedback elimination", feedback_elimination);
  Sweep sweep;
  try {
    if (wanted(5) || wanted(6)) sweep = default_sweep();
  } catch (const std::exception& e) {
    std::printf("default sweep failed: %s\n", e.what());
  }
  report(5, "headline trend", [&] { return headline_trend(sweep); });
  report(6, "monotone sweep", [&] { return monotone_sweep(sweep); });
  report(7, "complexity counter", complexity_counter);
  report(8, "quantizer oracle", quantizer_oracle);
  report(9, "end-to-end determinism", end_to_end_determinism);
  report(10, "switching", switching);
  std::printf("%d of %d criteria failed\n", failures, ran);
  return failures == 0 ? 0 : 1;
}
