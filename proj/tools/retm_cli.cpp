#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "retm/app/commands.hpp"
#include "retm/app/config.hpp"
#include "retm/error.hpp"
#include "retm/parallel.hpp"

namespace fs = std::filesystem;
using namespace retm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> rcond;
  std::optional<std::size_t> channel;
};

app::ExperimentConfig load(const Overrides& o) {
  auto cfg = app::load_config(o.config);
  if (o.seed) cfg.scene.seed = *o.seed;
  if (o.rcond) {
    if (!(*o.rcond > 0.0 && *o.rcond < 1.0)) throw ConfigError("--rcond: must lie in (0, 1)");
    cfg.rcond = *o.rcond;
  }
  if (o.channel) {
    if (*o.channel >= cfg.groups.q_a()) throw ConfigError("--channel: outside group A");
    cfg.eval_channel = *o.channel;
  }
  return cfg;
}

fs::path out_dir(const Overrides& o, const app::ExperimentConfig& cfg) {
  return o.out.empty() ? cfg.output_dir : fs::path(o.out);
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "run directory (default: output_dir from the config)");
  cmd->add_option("--seed", o.seed, "override the scene seed");
  cmd->add_option("--rcond", o.rcond, "pseudoinverse truncation threshold");
  cmd->add_option("--channel", o.channel, "group-A channel to output and evaluate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Relative-transfer-matrix speaker separation toolkit"};
  cli.require_subcommand(1);
  cli.fallthrough();
  int verbosity = 0;
  std::size_t jobs = 0;
  cli.add_flag("-v,--verbose", verbosity, "more logging (-v: per-bin diagnostics)");
  cli.add_option("--jobs", jobs, "worker threads (0: all cores)");

  Overrides o;
  auto* simulate = cli.add_subcommand("simulate", "render mixture, source images and training recordings");
  add_common(simulate, o);
  auto* separate = cli.add_subcommand("separate", "estimate ReTMs and separate every target");
  add_common(separate, o);
  auto* evaluate = cli.add_subcommand("evaluate", "score separated outputs against the source images");
  add_common(evaluate, o);
  auto* sweep = cli.add_subcommand("sweep", "run the configured SNR / Q_A / target-gain grid");
  add_common(sweep, o);

  auto* spectrogram = cli.add_subcommand("spectrogram", "export a magnitude spectrogram");
  std::string input, output, format = "png";
  std::size_t spec_channel = 0, window = 8192;
  double floor_db = metrics::kDefaultFloorDb;
  spectrogram->add_option("--input", input, "WAV file")->required()->check(CLI::ExistingFile);
  spectrogram->add_option("--output", output, "CSV or PNG path")->required();
  spectrogram->add_option("--channel", spec_channel, "channel to plot");
  spectrogram->add_option("--format", format, "csv or png")->check(CLI::IsMember({"csv", "png"}));
  spectrogram->add_option("--window", window, "STFT window length");
  spectrogram->add_option("--floor-db", floor_db, "lower clamp in dB");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto logger = spdlog::stderr_color_mt("retm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(verbosity >= 2 ? spdlog::level::trace
                    : verbosity == 1 ? spdlog::level::debug
                                     : spdlog::level::info);
  set_worker_count(jobs);

  try {
    if (*spectrogram) {
      const auto fmt = format == "csv" ? metrics::SpectrogramFormat::Csv : metrics::SpectrogramFormat::Png;
      app::cmd_spectrogram(input, spec_channel, output, fmt, signal::StftParams::with_window(window), floor_db);
      return kExitOk;
    }
    const auto cfg = load(o);
    const fs::path dir = out_dir(o, cfg);
    if (*simulate) {
      const auto summary = app::cmd_simulate(cfg, dir);
      spdlog::info("wrote {} files to {} (noise gain {:.6g})", summary.files.size(), dir.string(),
                   summary.noise_gain);
    } else if (*separate) {
      const auto files = app::cmd_separate(cfg, dir);
      spdlog::info("wrote {} files to {}", files.size(), dir.string());
    } else if (*evaluate) {
      const auto report = app::cmd_evaluate(cfg, dir);
      std::cout << metrics::report_table(report);
    } else if (*sweep) {
      const auto rows = app::cmd_sweep(cfg, dir);
      for (const auto& row : rows) std::cout << metrics::report_table(row.report) << "\n";
      spdlog::info("summary written to {}", (dir / "summary.csv").string());
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
