#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "retm/app/config.hpp"
#include "retm/metrics/report.hpp"
#include "retm/room/render.hpp"
#include "retm/separation/pipeline.hpp"
#include "retm/signal/audio_buffer.hpp"

namespace retm::app {

// Dry source material split into the training part (first
// training_duration_s) and the mixture part (the following
// mixture_duration_s). Mono, at the scene rate.
struct SignalSet {
  room::SignalMap training;
  room::SignalMap mixture;
};

// WAV sources are averaged to mono, decimated by an integer factor when
// needed, and zero-padded (with a warning) when too short.
SignalSet load_signals(const ExperimentConfig& config);

// Reverberant images at every microphone before SNR scaling. Noise-role
// sources are kept only as their sum.
struct ImageSet {
  std::vector<signal::AudioBuffer> speech;  // scene speech order
  signal::AudioBuffer noise;                // zeros when the scene has no noise source
};

struct SweepPoint {
  double snr_db = 0.0;
  std::size_t q_a = 0;
  double target_gain_db = 0.0;
};

// Cartesian product of the sweep axes, SNR outermost. Missing axes take the
// scene SNR, the configured Q_A and 0 dB.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);
std::string point_label(const SweepPoint& point);

struct PointOutcome {
  metrics::SeparationReport report;
  std::vector<separation::SeparationResult> separations;  // filled when kept
};

// Renders the scene once (RIRs and images for both signal parts) and then
// evaluates any number of operating points against it.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const room::SceneRenderer& renderer() const noexcept { return renderer_; }
  const SignalSet& signals() const noexcept { return signals_; }
  const ImageSet& mixture_images() const noexcept { return mixture_images_; }
  const std::vector<std::size_t>& speech_sources() const noexcept { return speech_; }

  // Joint noise gain reaching snr_db on the mixture part.
  double noise_gain(double snr_db) const;

  // All sources active, thermal noise added. `target` (speech order) is
  // scaled by target_gain_db.
  signal::AudioBuffer mixture(double noise_gain, std::size_t target = 0, double target_gain_db = 0.0) const;

  // Training recording for a speech target: every source except the target.
  signal::AudioBuffer training(std::size_t target, double noise_gain) const;

  separation::GroupAssignment groups_for(std::size_t q_a) const;

  PointOutcome run_point(const SweepPoint& point, bool keep_separations = false) const;

 private:
  signal::AudioBuffer with_thermal(signal::AudioBuffer clean, std::uint64_t stream) const;

  ExperimentConfig config_;
  room::SceneRenderer renderer_;
  std::vector<std::size_t> speech_;
  SignalSet signals_;
  ImageSet mixture_images_;
  ImageSet training_images_;
};

// Separation options derived from the config for the given target.
separation::SeparationOptions separation_options(const ExperimentConfig& config, int target_id);

// Warns when Q_B cannot span the undesired sources of the scene.
void check_group_b_size(const ExperimentConfig& config, std::size_t q_b);

}  // namespace retm::app
