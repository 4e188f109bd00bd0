#include "retm/app/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <algorithm>
#include <mutex>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "retm/app/wav.hpp"
#include "retm/error.hpp"
#include "retm/parallel.hpp"
#include "retm/separation/retm_io.hpp"

namespace retm::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

signal::AudioBuffer read_input(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw IoError(what + " not found: " + path.string());
  return read_wav(path);
}

std::vector<std::string> speech_ids(const ExperimentConfig& config) {
  std::vector<std::string> ids;
  for (std::size_t s : config.scene.speech_indices()) ids.push_back(config.scene.sources[s].signal_id);
  return ids;
}

void log_histogram(const std::string& id, const separation::ReTMStack& stack) {
  if (!spdlog::should_log(spdlog::level::debug)) return;
  const auto diag = separation::diagnostics_json(stack);
  std::string line;
  for (const auto& h : diag["condition_histogram"])
    line += " [1e" + (h["log10_condition"].is_string() ? std::string("inf") : h["log10_condition"].dump()) +
            "]=" + h["bins"].dump();
  spdlog::debug("{}: P_BA condition histogram{}", id, line);
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

SimulateSummary cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir) {
  const Experiment exp(config);
  const auto& scene = config.scene;
  SimulateSummary summary;
  summary.noise_gain = exp.noise_gain(scene.background_snr_db);
  const double g = summary.noise_gain;

  const auto emit = [&](const fs::path& rel, const signal::AudioBuffer& buffer) {
    write_wav(out_dir / rel, buffer);
    summary.files.push_back(rel);
  };

  emit("mixture.wav", exp.mixture(g));

  json gains = json::object();
  std::size_t k = 0;
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const auto& src = scene.sources[s];
    const fs::path rel = fs::path("images") / (src.signal_id + ".wav");
    double applied = std::pow(10.0, src.gain_db / 20.0);
    if (src.role == room::SourceRole::Speech) {
      emit(rel, exp.mixture_images().speech[k++]);
    } else {
      applied *= g;
      const auto& dry = exp.signals().mixture.at(src.signal_id);
      emit(rel, exp.renderer().source_image(s, dry, config.mixture_samples()) * g);
    }
    gains[src.signal_id] = applied;
  }

  const auto ids = speech_ids(config);
  for (std::size_t t = 0; t < ids.size(); ++t)
    emit(fs::path("training") / (ids[t] + ".wav"), exp.training(t, g));

  json manifest;
  manifest["scene"] = room::scene_to_json(scene);
  manifest["config"] = config_to_json(config);
  manifest["noise_gain"] = g;
  manifest["gains"] = gains;
  manifest["seed"] = scene.seed;
  manifest["reflection_coefficient"] = exp.renderer().beta();
  manifest["training_duration_s"] = config.training_duration_s;
  manifest["mixture_duration_s"] = config.mixture_duration_s;
  manifest["targets"] = ids;
  manifest["files"] = json::array();
  for (const auto& f : summary.files) manifest["files"].push_back(f.generic_string());
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  summary.files.emplace_back("manifest.json");
  return summary;
}

std::vector<fs::path> cmd_separate(const ExperimentConfig& config, const fs::path& run_dir) {
  struct Job {
    std::string id;
    signal::AudioBuffer mixture;
    signal::AudioBuffer training;
  };
  std::vector<Job> jobs;

  if (config.recorded) {
    const auto rec = read_input(config.recorded->recording, "recording");
    for (const auto& [id, seg] : config.recorded->targets) {
      seg.validate(rec.duration_s(), config.stft, rec.sample_rate_hz());
      const auto at = [&](double t) { return static_cast<std::size_t>(std::llround(t * rec.sample_rate_hz())); };
      jobs.push_back({id, rec.slice(at(seg.t2.start_s), at(seg.t2.end_s)),
                      rec.slice(at(seg.t1.start_s), at(seg.t1.end_s))});
    }
  } else {
    const auto mixture = read_input(run_dir / "mixture.wav", "mixture");
    for (const auto& id : speech_ids(config)) {
      const fs::path p = run_dir / "training" / (id + ".wav");
      if (!fs::exists(p)) throw IoError("training recording for target '" + id + "' not found: " + p.string());
      jobs.push_back({id, mixture, read_wav(p)});
    }
  }

  std::vector<fs::path> written;
  int target_id = 0;
  for (auto& job : jobs) {
    const std::size_t channels = job.mixture.channels();
    if (job.training.channels() != channels)
      throw InvalidInput("target '" + job.id + "': training has " + std::to_string(job.training.channels()) +
                         " channels but the mixture has " + std::to_string(channels));
    try {
      config.groups.validate(channels);
    } catch (const InvalidInput& e) {
      throw InvalidInput("microphone groups do not match the " + std::to_string(channels) +
                         "-channel recording: " + e.what());
    }
    check_group_b_size(config, config.groups.q_b());
    spdlog::info("separating '{}'", job.id);
    auto result = separation::separate_speaker_detailed(job.mixture, job.training, config.groups,
                                                        separation_options(config, target_id++));
    for (const auto& w : result.retm.warnings) spdlog::warn("{}: {}", job.id, w);
    log_histogram(job.id, result.retm);

    const fs::path wav = fs::path("separated") / (job.id + ".wav");
    const fs::path bin = fs::path("retm") / (job.id + ".retm");
    const fs::path diag = fs::path("retm") / (job.id + ".json");
    write_wav(run_dir / wav, result.output);
    fs::create_directories(run_dir / "retm");
    separation::save_retm(run_dir / bin, result.retm);
    auto dj = separation::diagnostics_json(result.retm);
    dj["signal_id"] = job.id;
    write_text(run_dir / diag, dj.dump(2) + "\n");
    written.insert(written.end(), {wav, bin, diag});
  }
  return written;
}

metrics::SeparationReport cmd_evaluate(const ExperimentConfig& config, const fs::path& run_dir) {
  const auto mixture = read_input(run_dir / "mixture.wav", "mixture");
  config.groups.validate(mixture.channels());
  const std::size_t mic = config.groups.group_a.at(config.eval_channel);
  const auto ids = speech_ids(config);

  std::vector<std::vector<double>> refs;
  for (const auto& id : ids) {
    const auto image = read_input(run_dir / "images" / (id + ".wav"), "image of '" + id + "'");
    if (image.channels() != mixture.channels() || image.length() != mixture.length())
      throw InvalidInput("image of '" + id + "' does not match the mixture shape");
    const auto ch = image.channel(mic);
    refs.emplace_back(ch.begin(), ch.end());
  }

  metrics::SeparationReport report;
  report.q_a = config.groups.q_a();
  report.q_b = config.groups.q_b();
  report.snr_db = config.scene.background_snr_db;
  report.eval_channel = config.eval_channel;
  report.eval_microphone = mic;
  const auto& scene = config.scene;
  report.scene = {{"room_dims", scene.room_dims},
                  {"t60_s", scene.t60_s},
                  {"speech_sources", scene.speech_count()},
                  {"noise_sources", scene.noise_count()},
                  {"microphones", scene.microphones.size()},
                  {"sample_rate_hz", scene.sample_rate_hz},
                  {"seed", scene.seed}};
  const fs::path manifest = run_dir / "manifest.json";
  if (fs::exists(manifest)) report.scene["noise_gain"] = read_json(manifest).value("noise_gain", 1.0);

  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto est = read_input(run_dir / "separated" / (ids[k] + ".wav"), "estimate of '" + ids[k] + "'");
    if (est.channels() != 1) throw InvalidInput("estimate of '" + ids[k] + "' must be mono");
    auto m = metrics::evaluate_speaker(refs, mixture.channel(mic), est.channel(0), k, config.stft.window_len);
    m.signal_id = ids[k];
    report.speakers.push_back(std::move(m));
  }
  write_text(run_dir / "report.json", metrics::report_to_json(report).dump(2) + "\n");
  return report;
}

std::string summary_csv(const std::vector<SweepRow>& rows, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# retm sweep summary: Q_B=" << config.groups.q_b() << ", seed=" << config.seed()
      << ", eval_channel=" << config.eval_channel << ", rcond=" << config.rcond << "\n";
  out << "# snr_db,q_a,target_gain_db";
  const auto ids = speech_ids(config);
  for (const auto& id : ids)
    out << "," << id << "_unprocessed_sir_db," << id << "_output_sir_db," << id << "_output_sdr_db";
  out << "\n";
  for (const auto& row : rows) {
    out << format_metric(row.point.snr_db) << "," << row.point.q_a << "," << format_metric(row.point.target_gain_db);
    for (const auto& s : row.report.speakers)
      out << "," << format_metric(s.unprocessed_sir_db) << "," << format_metric(s.output_sir_db) << ","
          << format_metric(s.output_sdr_db);
    out << "\n";
  }
  return out.str();
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir) {
  if (config.sweep.empty()) throw ConfigError("sweep: at least one axis is required");
  const auto points = sweep_points(config);
  const std::string config_dump = config_to_json(config).dump();
  const fs::path state_path = out_dir / "sweep_state.json";

  json state;
  if (fs::exists(state_path)) {
    state = read_json(state_path);
    if (state.value("config", std::string()) != config_dump) {
      spdlog::warn("{} belongs to a different configuration; starting over", state_path.string());
      state = json();
    }
  }
  state["config"] = config_dump;
  state["points"] = points.size();

  std::vector<std::optional<metrics::SeparationReport>> reports(points.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const fs::path report = out_dir / "points" / point_label(points[i]) / "report.json";
    if (state.contains("completed") && fs::exists(report)) {
      const auto& done = state["completed"];
      if (std::find(done.begin(), done.end(), point_label(points[i])) != done.end()) {
        reports[i] = metrics::report_from_json(read_json(report));
        continue;
      }
    }
    pending.push_back(i);
  }
  if (!state.contains("completed")) state["completed"] = json::array();
  if (pending.size() < points.size())
    spdlog::info("resuming sweep: {} of {} points already done", points.size() - pending.size(), points.size());

  std::mutex state_mutex;
  const auto save_state = [&](const std::string& status) {
    state["status"] = status;
    write_text(state_path, state.dump(2) + "\n");
  };
  save_state("running");

  if (!pending.empty()) {
    std::optional<Experiment> exp;
    try {
      exp.emplace(config);
      parallel_for(pending.size(), [&](std::size_t j) {
        const std::size_t i = pending[j];
        const std::string label = point_label(points[i]);
        spdlog::info("sweep point {}", label);
        auto outcome = exp->run_point(points[i]);
        write_text(out_dir / "points" / label / "report.json",
                   metrics::report_to_json(outcome.report).dump(2) + "\n");
        std::lock_guard lock(state_mutex);
        reports[i] = std::move(outcome.report);
        state["completed"].push_back(label);
        save_state("running");
      });
    } catch (const std::exception& e) {
      std::lock_guard lock(state_mutex);
      state["error"] = e.what();
      save_state("failed");
      throw;
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) rows.push_back({points[i], *reports[i]});
  write_text(out_dir / "summary.csv", summary_csv(rows, config));
  state.erase("error");
  save_state("complete");
  return rows;
}

void cmd_spectrogram(const fs::path& input, std::size_t channel, const fs::path& output,
                     metrics::SpectrogramFormat format, const signal::StftParams& params, double floor_db) {
  const auto audio = read_input(input, "input");
  if (channel >= audio.channels())
    throw InvalidInput("channel " + std::to_string(channel) + " outside the " + std::to_string(audio.channels()) +
                       "-channel input");
  const auto mono = audio.select_channels(std::vector<std::size_t>{channel});
  metrics::export_spectrogram(signal::stft(mono, params), 0, output, format, floor_db);
}

}  // namespace retm::app
