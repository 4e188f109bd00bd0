#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "retm/room/scene.hpp"
#include "retm/room/synth_signals.hpp"
#include "retm/separation/retm.hpp"
#include "retm/signal/stft.hpp"

namespace retm::app {

// Where a source signal comes from: a WAV file or a built-in generator
// ("synth:<kind>[:<seed>]").
struct SignalSource {
  std::string spec;  // as written in the config
  std::optional<std::filesystem::path> wav;
  room::SynthKind synth = room::SynthKind::Speech;
  std::optional<std::uint64_t> synth_seed;
};

// Explicit T1/T2 intervals inside one recording, per target signal_id.
struct RecordedSegments {
  std::filesystem::path recording;
  std::map<std::string, separation::SegmentSpec> targets;
};

struct SweepAxes {
  std::vector<double> snr_db;
  std::vector<std::size_t> q_a;
  std::vector<double> target_gain_db;

  bool empty() const noexcept { return snr_db.empty() && q_a.empty() && target_gain_db.empty(); }
};

struct ExperimentConfig {
  room::SceneConfig scene;
  std::map<std::string, SignalSource> signals;
  separation::GroupAssignment groups;
  signal::StftParams stft;
  std::optional<RecordedSegments> recorded;  // empty: synthesized T1 (target muted)
  double training_duration_s = 60.0;
  double mixture_duration_s = 20.0;
  SweepAxes sweep;
  double rcond = 1e-10;
  double fallback_condition = separation::kFallbackCondition;
  std::filesystem::path output_dir = "out";
  std::size_t eval_channel = 0;  // index into group A

  std::uint64_t seed() const noexcept { return scene.seed; }
  std::size_t training_samples() const;
  std::size_t mixture_samples() const;
};

// Parses and validates. Relative paths resolve against `base_dir`; every
// failure is a ConfigError whose message starts with the JSON field path.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

SignalSource parse_signal_source(const std::string& spec, const std::filesystem::path& base_dir);

}  // namespace retm::app
