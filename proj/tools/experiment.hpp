#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twinfeed/channel.hpp"
#include "twinfeed/metrics.hpp"
#include "twinfeed/protocol.hpp"

namespace twinfeed::experiment {

struct ExperimentConfig {
  std::optional<std::filesystem::path> trace_path;  // overrides the generator
  GeneratorConfig generator;
  ProtocolConfig protocol;
  /// Fraction of the trace spent on initialization (train + validation); the
  /// rest is the test segment. Used when protocol.init_length is 0.
  double init_fraction = 0.9;
  std::vector<int> bits{2, 3, 4, 5};
  std::vector<double> snr_db{10.0};
  std::vector<SessionMode> modes{SessionMode::conventional, SessionMode::hybrid};
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  /// Train twins once (on history quantized at the largest swept B_Q) and
  /// reuse them in every cell instead of re-training per B_Q.
  bool shared_twins = false;

  void validate() const;
};

/// Applies one `key=value` setting. Unknown keys and malformed values raise
/// ConfigError naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` file; `#` starts a comment.
ExperimentConfig parse_config(std::istream& is, std::string_view origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Echo of every setting in a fixed order (what `apply_setting` accepts).
std::vector<std::pair<std::string, std::string>> describe(const ExperimentConfig& cfg);

ChannelTrace obtain_trace(const ExperimentConfig& cfg);

/// protocol with init_length resolved against the trace length.
ProtocolConfig resolve_protocol(const ExperimentConfig& cfg, std::size_t trace_length);

struct ResultRow {
  int bits = 0;
  SessionMode method = SessionMode::conventional;
  MetricsRecord metrics;
  std::int64_t bits_total = 0;
};

struct CellOutcome {
  int bits = 0;
  SessionMode method = SessionMode::conventional;
  SessionLog log;
  std::vector<MetricsRecord> metrics;  // one per SNR
};

/// Runs every (B_Q, mode) cell. Cells run on up to `threads` workers; the
/// returned order (bits outer, modes inner, as listed) does not depend on it.
std::vector<CellOutcome> run_cells(const ExperimentConfig& cfg, const ChannelTrace& trace,
                                   unsigned threads);

std::vector<ResultRow> result_rows(const std::vector<CellOutcome>& cells);

inline constexpr std::string_view kResultsHeader =
    "bits,method,nmse_db,gamma,rho,eta,snr_db,bits_total";

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os);
std::vector<ResultRow> read_results_csv(std::istream& is);

void write_summary_json(const ExperimentConfig& cfg, const std::vector<CellOutcome>& cells,
                        std::ostream& os);
void write_session_json(const ExperimentConfig& cfg, const CellOutcome& cell, std::ostream& os);

/// Worker count from TWINFEED_THREADS, else the hardware concurrency.
unsigned thread_budget();

struct GenerateSummary {
  std::filesystem::path path;
  std::size_t samples = 0;
  std::size_t n_r = 0;
  std::size_t n_t = 0;
  double lag1_autocorrelation = 0.0;
};

GenerateSummary cmd_generate(const ExperimentConfig& cfg);

struct RunSummary {
  std::filesystem::path results;
  std::filesystem::path summary;
  std::size_t rows = 0;
};

RunSummary cmd_run(const ExperimentConfig& cfg);

/// Writes nmse_vs_bits.csv, eta_vs_bits.csv, eta_vs_snr.csv and
/// rho_gamma_vs_bits.csv into out_dir; returns their paths.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& results_csv,
                                              const std::filesystem::path& out_dir);

}  // namespace twinfeed::experiment
