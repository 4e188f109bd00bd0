#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retm/room/rir.hpp"
#include "retm/room/scene.hpp"
#include "retm/signal/audio_buffer.hpp"

namespace retm::room {

using SignalMap = std::map<std::string, signal::AudioBuffer>;

struct RenderedScene {
  signal::AudioBuffer mixture;                       // Q channels
  std::vector<signal::AudioBuffer> per_source_images;  // one Q-channel buffer per source
  std::vector<double> gains;                         // applied scale per source
  signal::AudioBuffer thermal_noise;                 // Q channels, zeros when disabled
  double noise_gain = 1.0;                           // joint gain of noise-role sources
};

// splitmix64-derived seed for an independent random stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose, std::uint64_t index);

// Gain g for all noise images so that the mean over channels of
// 10 log10(P_speech / (g^2 P_noise)) equals target_snr_db.
// Throws DegenerateInput for a zero-power channel, InvalidInput on shape mismatch.
double scale_to_snr(const signal::AudioBuffer& speech_sum, const signal::AudioBuffer& noise_sum,
                    double target_snr_db);

// White Gaussian noise per channel with variance P_channel / 10^(snr_db/10).
// snr_db = +inf returns the buffer unchanged. Deterministic for a given seed.
signal::AudioBuffer add_thermal_noise(const signal::AudioBuffer& buffer, double snr_db,
                                      std::uint64_t seed);

// Holds the scene RIRs so several signal sets and SNR points can be rendered
// without recomputing them.
class SceneRenderer {
 public:
  explicit SceneRenderer(SceneConfig scene);

  const SceneConfig& scene() const noexcept { return scene_; }
  double beta() const noexcept { return beta_; }
  const RoomImpulseResponse& rir(std::size_t source, std::size_t mic) const;

  // Reverberant image of each source at every microphone, before SNR scaling
  // (source gain_db applied). Signals are trimmed to the shortest one, or to
  // `duration` samples (zero-padded) when given.
  std::vector<signal::AudioBuffer> source_images(const SignalMap& signals,
                                                 std::optional<std::size_t> duration = {}) const;

  // Image of one source at every microphone, gain_db applied, `duration`
  // samples long (the signal is truncated or zero-padded).
  signal::AudioBuffer source_image(std::size_t source, const signal::AudioBuffer& dry,
                                   std::size_t duration) const;

  // Sums images into a mixture. `noise_gain` scales the noise-role images; a
  // muted source contributes zeros. Thermal noise uses `noise_stream` to
  // decorrelate renders that share the scene seed.
  RenderedScene compose(std::vector<signal::AudioBuffer> images, double noise_gain,
                        std::optional<std::size_t> muted_source = {},
                        std::uint64_t noise_stream = 0) const;

  // Joint noise gain meeting scene.background_snr_db on these images.
  double calibrate_noise_gain(const std::vector<signal::AudioBuffer>& images) const;

 private:
  SceneConfig scene_;
  double beta_;
  std::vector<RoomImpulseResponse> rirs_;  // source-major
};

// Full forward model: RIRs, images, noise scaling to background_snr_db and
// thermal noise at thermal_snr_db.
RenderedScene render_scene(const SceneConfig& scene, const SignalMap& signals);

}  // namespace retm::room
