#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiment.hpp"
#include "twinfeed/error.hpp"

namespace ex = twinfeed::experiment;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kIo = 3,
  kTraining = 4,
  kProtocol = 5,
  kParse = 6,
  kNumeric = 7,
};

struct Overrides {
  std::string config;
  std::string out;
  std::string seed;
  std::string bits;
  std::string snr;
  std::string mode;
  std::string trace;
  bool shared_twins = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value configuration file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "global seed");
}

void add_sweep(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--bits", o.bits, "comma-separated quantization bits");
  cmd->add_option("--snr", o.snr, "comma-separated SNR values in dB");
  cmd->add_option("--mode", o.mode, "comma-separated modes: conventional,hybrid,switching");
  cmd->add_option("--trace", o.trace, "channel trace file instead of the generator");
  cmd->add_flag("--shared-twins", o.shared_twins, "train twins once for every B_Q cell");
}

ex::ExperimentConfig build_config(const Overrides& o) {
  auto cfg = o.config.empty() ? ex::ExperimentConfig{} : ex::load_config(o.config);
  const std::pair<const char*, const std::string*> flags[] = {
      {"out", &o.out},   {"seed", &o.seed}, {"bits", &o.bits},
      {"snr", &o.snr},   {"mode", &o.mode}, {"trace", &o.trace},
  };
  for (const auto& [key, value] : flags) {
    if (!value->empty()) ex::apply_setting(cfg, key, *value);
  }
  if (o.shared_twins) cfg.shared_twins = true;
  return cfg;
}

int report_error(const char* kind, int code, const std::exception& e) {
  std::fprintf(stderr, "twinfeed: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-predictor hybrid CSI feedback simulator"};
  app.require_subcommand(1);

  Overrides gen_opts;
  auto* gen = app.add_subcommand("generate", "write a synthetic channel trace");
  add_common(gen, gen_opts);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "sweep feedback modes over bits and SNR");
  add_common(run, run_opts);
  add_sweep(run, run_opts);

  std::string report_input = "out/results.csv";
  std::string report_out;
  auto* report = app.add_subcommand("report", "turn a results table into plot data files");
  report->add_option("results", report_input, "results CSV written by `run`");
  report->add_option("--out", report_out, "directory for the data files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) {
      const auto s = ex::cmd_generate(build_config(gen_opts));
      std::printf("wrote %s: %zu samples, %zux%zu, lag-1 autocorrelation %.6f\n",
                  s.path.string().c_str(), s.samples, s.n_r, s.n_t, s.lag1_autocorrelation);
    } else if (run->parsed()) {
      const auto s = ex::cmd_run(build_config(run_opts));
      std::printf("wrote %s (%zu rows) and %s\n", s.results.string().c_str(), s.rows,
                  s.summary.string().c_str());
    } else if (report->parsed()) {
      const std::filesystem::path input = report_input;
      const std::filesystem::path dir =
          report_out.empty() ? input.parent_path() : std::filesystem::path(report_out);
      for (const auto& p : ex::cmd_report(input, dir.empty() ? "." : dir)) {
        std::printf("wrote %s\n", p.string().c_str());
      }
    }
  } catch (const twinfeed::ConfigError& e) {
    return report_error("configuration error", kConfig, e);
  } catch (const twinfeed::IoError& e) {
    return report_error("I/O error", kIo, e);
  } catch (const twinfeed::TrainingError& e) {
    return report_error("training error", kTraining, e);
  } catch (const twinfeed::ProtocolError& e) {
    return report_error("protocol error", kProtocol, e);
  } catch (const twinfeed::ParseError& e) {
    return report_error("parse error", kParse, e);
  } catch (const twinfeed::ShapeError& e) {
    return report_error("shape error", kParse, e);
  } catch (const twinfeed::NumericError& e) {
    return report_error("numeric error", kNumeric, e);
  } catch (const twinfeed::DegenerateInputError& e) {
    return report_error("degenerate input", kNumeric, e);
  } catch (const std::exception& e) {
    return report_error("error", kUnexpected, e);
  }
  return kOk;
}
