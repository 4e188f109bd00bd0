#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "retm/room/render.hpp"
#include "retm/room/scene.hpp"
#include "retm/separation/retm.hpp"
#include "retm/signal/audio_buffer.hpp"

namespace retm::metrics {

struct SpeakerMetrics {
  std::string signal_id;
  double unprocessed_sir_db = 0.0;
  // SDR of the raw mixture is not reported; this carries the table marker.
  std::string unprocessed_sdr_note = "-";
  double output_sir_db = 0.0;
  double output_sdr_db = 0.0;
  long alignment_lag = 0;
};

struct SeparationReport {
  std::vector<SpeakerMetrics> speakers;
  std::size_t q_a = 0;
  std::size_t q_b = 0;
  double snr_db = 0.0;
  std::size_t eval_channel = 0;  // index into group A
  std::size_t eval_microphone = 0;
  nlohmann::json scene;  // metadata: room, T60, counts, seed
};

struct EvaluationOptions {
  std::size_t eval_channel = 0;
  std::size_t alignment_window = 8192;  // +/- search range in samples
};

// References are the reverberant speech images at the group-A evaluation
// microphone. Unprocessed metrics use the mixture at that microphone; output
// metrics use each estimate after cross-correlation delay alignment.
// `estimates` holds one mono buffer per speech source, in scene order.
SeparationReport evaluate_scenario(const room::SceneConfig& scene, const room::RenderedScene& rendered,
                                   const std::vector<signal::AudioBuffer>& estimates,
                                   const separation::GroupAssignment& groups,
                                   const EvaluationOptions& options = {});

// Metrics for speaker `target` given the speech references at the evaluation
// microphone, the unprocessed mixture at that microphone and a mono estimate.
SpeakerMetrics evaluate_speaker(const std::vector<std::vector<double>>& references,
                                std::span<const double> mixture, std::span<const double> estimate,
                                std::size_t target, std::size_t alignment_window);

nlohmann::json report_to_json(const SeparationReport& report);
SeparationReport report_from_json(const nlohmann::json& j);

// Fixed-width table in the layout of a Unprocessed / O/P listing.
std::string report_table(const SeparationReport& report);

}  // namespace retm::metrics
