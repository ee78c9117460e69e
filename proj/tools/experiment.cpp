#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "twinfeed/error.hpp"
#include "twinfeed/trace_io.hpp"

namespace twinfeed::experiment {

namespace {

using nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? at : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config: " + std::string(key) + "='" + std::string(value) + "' is not " +
                    std::string(want));
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view key, std::string_view value, F&& one) {
  std::vector<T> out;
  for (auto item : split(value, ',')) {
    if (item.empty()) bad_value(key, value, "a comma-separated list");
    out.push_back(one(key, item));
  }
  return out;
}

std::string join_numbers(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += format_number(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

// Number for JSON; infinities become the strings used in the CSV.
ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string_view decider_name(SwitchDecider d) {
  return d == SwitchDecider::oracle ? "oracle" : "ue_side";
}

[[noreturn]] void rethrow_with_context(std::exception_ptr error, const std::string& where) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(where + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(where + ": " + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(where + ": " + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(where + ": " + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

std::string cell_name(int bits, SessionMode mode) {
  return std::string(to_string(mode)) + "_b" + std::to_string(bits);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish_output(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

void make_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (bits.empty()) throw ConfigError("config: bits list is empty");
  if (snr_db.empty()) throw ConfigError("config: snr list is empty");
  if (modes.empty()) throw ConfigError("config: mode list is empty");
  for (int b : bits) {
    if (b < 1 || b > QuantizerSpec::kMaxBits) {
      throw ConfigError("config: bits value " + std::to_string(b) + " out of range [1, " +
                        std::to_string(QuantizerSpec::kMaxBits) + "]");
    }
  }
  if (!(init_fraction > 0.0 && init_fraction < 1.0)) {
    throw ConfigError("config: init_fraction must be in (0, 1)");
  }
  if (!trace_path) generator.validate();
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  auto& gen = cfg.generator;
  auto& proto = cfg.protocol;
  auto& pred = proto.predictor;
  if (key == "trace") {
    if (value.empty() || value == "none") {
      cfg.trace_path.reset();
    } else {
      cfg.trace_path = std::filesystem::path(std::string(value));
    }
  } else if (key == "n_t") {
    gen.n_t = parse_integer<std::size_t>(key, value);
  } else if (key == "n_r") {
    gen.n_r = parse_integer<std::size_t>(key, value);
  } else if (key == "n_samples") {
    gen.n_samples = parse_integer<std::size_t>(key, value);
  } else if (key == "sample_period") {
    gen.sample_period = parse_real(key, value);
  } else if (key == "carrier_hz") {
    gen.carrier_hz = parse_real(key, value);
  } else if (key == "speed_kmh") {
    gen.speed_mps = parse_real(key, value) / 3.6;
  } else if (key == "n_paths") {
    gen.n_paths = parse_integer<std::size_t>(key, value);
  } else if (key == "path_gain_decay") {
    gen.path_gain_decay = parse_real(key, value);
  } else if (key == "angle") {
    if (value == "none" || value.empty()) {
      gen.angle_override.reset();
    } else {
      gen.angle_override = parse_real(key, value);
    }
  } else if (key == "shared_angles") {
    gen.shared_angles = parse_bool(key, value);
  } else if (key == "init_fraction") {
    cfg.init_fraction = parse_real(key, value);
  } else if (key == "init_length") {
    proto.init_length = parse_integer<std::size_t>(key, value);
  } else if (key == "valid_length") {
    proto.valid_length = parse_integer<std::size_t>(key, value);
  } else if (key == "retrain_length") {
    proto.retrain_length = parse_integer<std::size_t>(key, value);
  } else if (key == "skip_threshold") {
    proto.skip_threshold = parse_real(key, value);
  } else if (key == "clip_percentile") {
    proto.clip_percentile = parse_real(key, value);
  } else if (key == "decider") {
    if (value == "oracle") {
      proto.decider = SwitchDecider::oracle;
    } else if (value == "ue_side") {
      proto.decider = SwitchDecider::ue_side;
    } else {
      bad_value(key, value, "oracle or ue_side");
    }
  } else if (key == "delay") {
    pred.delay = parse_integer<std::size_t>(key, value);
  } else if (key == "hidden_layers") {
    pred.hidden_layers = parse_integer<std::size_t>(key, value);
  } else if (key == "hidden_units") {
    pred.hidden_units = parse_integer<std::size_t>(key, value);
  } else if (key == "learn_rate") {
    pred.learn_rate = parse_real(key, value);
  } else if (key == "batch_size") {
    pred.batch_size = parse_integer<std::size_t>(key, value);
  } else if (key == "epochs") {
    pred.epochs = parse_integer<std::size_t>(key, value);
  } else if (key == "increment_output") {
    pred.increment_output = parse_bool(key, value);
  } else if (key == "bits") {
    cfg.bits = parse_list<int>(key, value, parse_integer<int>);
  } else if (key == "snr") {
    cfg.snr_db = parse_list<double>(key, value, parse_real);
  } else if (key == "mode") {
    cfg.modes = parse_list<SessionMode>(
        key, value, [](std::string_view, std::string_view v) { return parse_session_mode(v); });
  } else if (key == "out") {
    if (value.empty()) bad_value(key, value, "a directory");
    cfg.out_dir = std::filesystem::path(std::string(value));
  } else if (key == "seed") {
    cfg.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "shared_twins") {
    cfg.shared_twins = parse_bool(key, value);
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::istream& is, std::string_view origin) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(number) +
                        ": expected key = value");
    }
    try {
      apply_setting(cfg, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  return parse_config(is, path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const ExperimentConfig& cfg) {
  const auto& gen = cfg.generator;
  const auto& proto = cfg.protocol;
  const auto& pred = proto.predictor;
  std::vector<std::string> modes;
  for (auto m : cfg.modes) modes.emplace_back(to_string(m));
  std::string mode_list;
  for (const auto& m : modes) mode_list += (mode_list.empty() ? "" : ",") + m;
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {
      {"trace", cfg.trace_path ? cfg.trace_path->generic_string() : "none"},
      {"n_t", std::to_string(gen.n_t)},
      {"n_r", std::to_string(gen.n_r)},
      {"n_samples", std::to_string(gen.n_samples)},
      {"sample_period", format_number(gen.sample_period)},
      {"carrier_hz", format_number(gen.carrier_hz)},
      {"speed_kmh", format_number(gen.speed_mps * 3.6)},
      {"n_paths", std::to_string(gen.n_paths)},
      {"path_gain_decay", format_number(gen.path_gain_decay)},
      {"angle", gen.angle_override ? format_number(*gen.angle_override) : "none"},
      {"shared_angles", flag(gen.shared_angles)},
      {"init_fraction", format_number(cfg.init_fraction)},
      {"init_length", std::to_string(proto.init_length)},
      {"valid_length", std::to_string(proto.valid_length)},
      {"retrain_length", std::to_string(proto.retrain_length)},
      {"skip_threshold", format_number(proto.skip_threshold)},
      {"clip_percentile", format_number(proto.clip_percentile)},
      {"decider", std::string(decider_name(proto.decider))},
      {"delay", std::to_string(pred.delay)},
      {"hidden_layers", std::to_string(pred.hidden_layers)},
      {"hidden_units", std::to_string(pred.hidden_units)},
      {"learn_rate", format_number(pred.learn_rate)},
      {"batch_size", std::to_string(pred.batch_size)},
      {"epochs", std::to_string(pred.epochs)},
      {"increment_output", flag(pred.increment_output)},
      {"bits", join_numbers(cfg.bits)},
      {"snr", join_numbers(cfg.snr_db)},
      {"mode", mode_list},
      {"out", cfg.out_dir.generic_string()},
      {"seed", std::to_string(cfg.seed)},
      {"shared_twins", flag(cfg.shared_twins)},
  };
}

ChannelTrace obtain_trace(const ExperimentConfig& cfg) {
  if (cfg.trace_path) {
    auto trace = load_trace(*cfg.trace_path);
    trace.validate();
    return trace;
  }
  GeneratorConfig gen = cfg.generator;
  gen.seed = cfg.seed;
  return generate_trace(gen);
}

ProtocolConfig resolve_protocol(const ExperimentConfig& cfg, std::size_t trace_length) {
  ProtocolConfig proto = cfg.protocol;
  proto.predictor.seed = cfg.seed;
  if (proto.init_length == 0) {
    proto.init_length =
        static_cast<std::size_t>(std::floor(cfg.init_fraction * static_cast<double>(trace_length)));
  }
  if (proto.init_length >= trace_length) {
    throw ConfigError("config: initialization window (" + std::to_string(proto.init_length) +
                      ") leaves no test samples in a trace of " + std::to_string(trace_length));
  }
  return proto;
}

unsigned thread_budget() {
  if (const char* env = std::getenv("TWINFEED_THREADS"); env != nullptr && *env != '\0') {
    const auto n = parse_integer<unsigned>("TWINFEED_THREADS", env);
    if (n == 0) throw ConfigError("TWINFEED_THREADS must be at least 1");
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CellOutcome> run_cells(const ExperimentConfig& cfg, const ChannelTrace& trace,
                                   unsigned threads) {
  cfg.validate();
  const ProtocolConfig base = resolve_protocol(cfg, trace.size());

  std::vector<CellOutcome> cells;
  for (int b : cfg.bits) {
    for (auto mode : cfg.modes) cells.push_back(CellOutcome{b, mode, {}, {}});
  }

  std::optional<SessionContext> shared;
  const bool needs_twins = std::any_of(cfg.modes.begin(), cfg.modes.end(), [](SessionMode m) {
    return m != SessionMode::conventional;
  });
  if (cfg.shared_twins && needs_twins) {
    ProtocolConfig proto = base;
    proto.quant_bits = *std::max_element(cfg.bits.begin(), cfg.bits.end());
    try {
      shared = run_assessment(proto, trace);
    } catch (...) {
      rethrow_with_context(std::current_exception(), "shared twins");
    }
  }

  auto run_one = [&](CellOutcome& cell) {
    ProtocolConfig proto = base;
    proto.quant_bits = cell.bits;
    if (shared && cell.method != SessionMode::conventional) {
      SessionContext ctx = *shared;
      ctx.config.quant_bits = cell.bits;
      ctx.conventional = build_spec(cell.bits, shared->conventional.clip());
      ctx.residual = build_spec(cell.bits, shared->residual.clip());
      cell.log = run_session(std::move(ctx), trace, cell.method);
    } else {
      cell.log = run_session(proto, trace, cell.method);
    }
    const auto truth = cell.log.truths();
    const auto recovered = cell.log.recovered();
    for (double snr : cfg.snr_db) {
      cell.metrics.push_back(
          evaluate(truth, recovered, snr, DegeneratePolicy::zero_alignment));
    }
  };

  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        run_one(cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (errors[i]) {
      rethrow_with_context(errors[i], "cell " + cell_name(cells[i].bits, cells[i].method));
    }
  }
  return cells;
}

std::vector<ResultRow> result_rows(const std::vector<CellOutcome>& cells) {
  std::vector<ResultRow> rows;
  for (const auto& cell : cells) {
    for (const auto& m : cell.metrics) {
      rows.push_back(ResultRow{cell.bits, cell.method, m, cell.log.cumulative_bits});
    }
  }
  return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << kResultsHeader << '\n';
  for (const auto& r : rows) {
    os << r.bits << ',' << to_string(r.method) << ',' << format_number(r.metrics.nmse_db) << ','
       << format_number(r.metrics.precoding_gain) << ','
       << format_number(r.metrics.cosine_similarity) << ','
       << format_number(r.metrics.spectral_efficiency) << ',' << format_number(r.metrics.snr_db)
       << ',' << r.bits_total << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line).empty()) throw ParseError("results: no rows");
  if (trim(line) != kResultsHeader) {
    throw ParseError("results: unexpected header '" + std::string(trim(line)) + "'");
  }
  std::vector<ResultRow> rows;
  std::size_t number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    const std::string where = "results: line " + std::to_string(number);
    if (fields.size() != 8) {
      throw ParseError(where + ": expected 8 fields, got " + std::to_string(fields.size()));
    }
    auto real = [&](std::string_view f, const char* name) {
      if (f == "-inf") return -std::numeric_limits<double>::infinity();
      if (f == "inf") return std::numeric_limits<double>::infinity();
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(where + ": bad " + name + " '" + std::string(f) + "'");
      }
      return v;
    };
    ResultRow r;
    try {
      r.bits = parse_integer<int>("bits", fields[0]);
      r.method = parse_session_mode(fields[1]);
      r.bits_total = parse_integer<std::int64_t>("bits_total", fields[7]);
    } catch (const ConfigError& e) {
      throw ParseError(where + ": " + e.what());
    }
    r.metrics.nmse_db = real(fields[2], "nmse_db");
    r.metrics.nmse_linear = std::pow(10.0, r.metrics.nmse_db / 10.0);
    r.metrics.precoding_gain = real(fields[3], "gamma");
    r.metrics.cosine_similarity = real(fields[4], "rho");
    r.metrics.spectral_efficiency = real(fields[5], "eta");
    r.metrics.snr_db = real(fields[6], "snr_db");
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("results: no rows");
  return rows;
}

namespace {

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : describe(cfg)) j[k] = v;
  return j;
}

double mean_sq_err(const SessionLog& log) {
  if (log.records.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : log.records) acc += r.sq_err;
  return acc / static_cast<double>(log.records.size());
}

ordered_json cell_json(const CellOutcome& cell) {
  ordered_json j;
  j["bits"] = cell.bits;
  j["method"] = std::string(to_string(cell.method));
  j["steps"] = cell.log.records.size();
  j["cumulative_bits"] = cell.log.cumulative_bits;
  j["mean_sq_err"] = json_number(mean_sq_err(cell.log));
  j["conventional_clip"] = cell.log.conventional.clip();
  if (cell.method == SessionMode::conventional) {
    j["residual_clip"] = nullptr;
    j["valid_nmse_db"] = nullptr;
  } else {
    j["residual_clip"] = cell.log.residual.clip();
    j["valid_nmse_db"] = json_number(cell.log.valid_nmse_db);
  }
  std::size_t hybrid_steps = 0;
  std::size_t skips = 0;
  for (const auto& r : cell.log.records) {
    hybrid_steps += r.mode == LinkMode::hybrid;
    skips += r.kind == MessageKind::skip;
  }
  j["hybrid_steps"] = hybrid_steps;
  j["skip_steps"] = skips;
  j["retrain_count"] = cell.log.retrain_count;
  ordered_json metrics = ordered_json::array();
  for (const auto& m : cell.metrics) {
    metrics.push_back({{"snr_db", m.snr_db},
                       {"nmse_db", json_number(m.nmse_db)},
                       {"gamma", m.precoding_gain},
                       {"rho", m.cosine_similarity},
                       {"eta", m.spectral_efficiency}});
  }
  j["metrics"] = std::move(metrics);
  return j;
}

}  // namespace

void write_summary_json(const ExperimentConfig& cfg, const std::vector<CellOutcome>& cells,
                        std::ostream& os) {
  ordered_json j;
  j["config"] = config_json(cfg);
  ordered_json list = ordered_json::array();
  for (const auto& c : cells) list.push_back(cell_json(c));
  j["cells"] = std::move(list);
  os << j.dump(2) << '\n';
}

void write_session_json(const ExperimentConfig& cfg, const CellOutcome& cell, std::ostream& os) {
  ordered_json j;
  j["config"] = config_json(cfg);
  j["session"] = cell_json(cell);
  os << j.dump(2) << '\n';
}

GenerateSummary cmd_generate(const ExperimentConfig& cfg) {
  if (cfg.trace_path) throw ConfigError("generate: a trace file was given; nothing to generate");
  cfg.validate();
  const auto trace = obtain_trace(cfg);
  make_directory(cfg.out_dir);
  GenerateSummary s;
  s.path = cfg.out_dir / "trace.ctrc";
  save_trace(trace, s.path, TraceFormat::binary);
  s.samples = trace.size();
  s.n_r = trace.n_r;
  s.n_t = trace.n_t;
  s.lag1_autocorrelation = trace.size() > 1 ? lag_autocorrelation(trace, 0, 0, 1) : 0.0;
  return s;
}

RunSummary cmd_run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto trace = obtain_trace(cfg);
  const auto cells = run_cells(cfg, trace, thread_budget());
  const auto rows = result_rows(cells);

  make_directory(cfg.out_dir);
  make_directory(cfg.out_dir / "sessions");
  RunSummary s;
  s.results = cfg.out_dir / "results.csv";
  s.summary = cfg.out_dir / "summary.json";
  s.rows = rows.size();
  {
    auto os = open_output(s.results);
    write_results_csv(rows, os);
    finish_output(os, s.results);
  }
  {
    auto os = open_output(s.summary);
    write_summary_json(cfg, cells, os);
    finish_output(os, s.summary);
  }
  for (const auto& cell : cells) {
    const auto stem = cfg.out_dir / "sessions" / cell_name(cell.bits, cell.method);
    auto csv_path = stem;
    csv_path += ".csv";
    auto json_path = stem;
    json_path += ".json";
    auto csv = open_output(csv_path);
    write_session_csv(cell.log, csv);
    finish_output(csv, csv_path);
    auto js = open_output(json_path);
    write_session_json(cfg, cell, js);
    finish_output(js, json_path);
  }
  return s;
}

namespace {

// x value -> series name -> y value, both in first-seen order of series.
struct Table {
  std::vector<std::string> series;
  std::map<double, std::map<std::string, double>> cells;

  void put(double x, const std::string& name, double y) {
    if (std::find(series.begin(), series.end(), name) == series.end()) series.push_back(name);
    cells[x].try_emplace(name, y);
  }

  void write(const std::string& x_name, const std::filesystem::path& path) const {
    auto os = open_output(path);
    os << x_name;
    for (const auto& s : series) os << ',' << s;
    os << '\n';
    for (const auto& [x, row] : cells) {
      os << format_number(x);
      for (const auto& s : series) {
        os << ',';
        if (auto it = row.find(s); it != row.end()) os << format_number(it->second);
      }
      os << '\n';
    }
    finish_output(os, path);
  }
};

}  // namespace

std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& results_csv,
                                              const std::filesystem::path& out_dir) {
  std::ifstream is(results_csv);
  if (!is) throw IoError("cannot open results " + results_csv.string());
  const auto rows = read_results_csv(is);

  std::vector<double> snrs;
  for (const auto& r : rows) {
    if (std::find(snrs.begin(), snrs.end(), r.metrics.snr_db) == snrs.end()) {
      snrs.push_back(r.metrics.snr_db);
    }
  }
  const bool many_snr = snrs.size() > 1;

  Table nmse, eta_bits, eta_snr, rho_gamma;
  for (const auto& r : rows) {
    const std::string method(to_string(r.method));
    const double bits = r.bits;
    nmse.put(bits, method, r.metrics.nmse_db);
    eta_bits.put(bits, many_snr ? method + "@" + format_number(r.metrics.snr_db) + "dB" : method,
                 r.metrics.spectral_efficiency);
    eta_snr.put(r.metrics.snr_db, method + "_b" + std::to_string(r.bits),
                r.metrics.spectral_efficiency);
    rho_gamma.put(bits, method + "_rho", r.metrics.cosine_similarity);
    rho_gamma.put(bits, method + "_gamma", r.metrics.precoding_gain);
  }

  make_directory(out_dir);
  std::vector<std::filesystem::path> written{
      out_dir / "nmse_vs_bits.csv", out_dir / "eta_vs_bits.csv", out_dir / "eta_vs_snr.csv",
      out_dir / "rho_gamma_vs_bits.csv"};
  nmse.write("bits", written[0]);
  eta_bits.write("bits", written[1]);
  eta_snr.write("snr_db", written[2]);
  rho_gamma.write("bits", written[3]);
  return written;
}

}  // namespace twinfeed::experiment
