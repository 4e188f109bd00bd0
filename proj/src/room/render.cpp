#include "retm/room/render.hpp"

#include <cmath>
#include <random>

#include "retm/error.hpp"
#include "retm/parallel.hpp"

namespace retm::room {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose, std::uint64_t index) {
  std::uint64_t h = splitmix64(base);
  for (char c : purpose) h = splitmix64(h ^ static_cast<unsigned char>(c));
  return splitmix64(h ^ splitmix64(index));
}

double scale_to_snr(const signal::AudioBuffer& speech_sum, const signal::AudioBuffer& noise_sum,
                    double target_snr_db) {
  if (speech_sum.channels() != noise_sum.channels() || speech_sum.length() != noise_sum.length() ||
      speech_sum.channels() == 0)
    throw InvalidInput("scale_to_snr: speech and noise buffers differ in shape");
  if (!std::isfinite(target_snr_db)) throw InvalidInput("scale_to_snr: target SNR must be finite");
  double mean_snr = 0.0;
  for (std::size_t q = 0; q < speech_sum.channels(); ++q) {
    const double ps = speech_sum.channel_power(q);
    const double pn = noise_sum.channel_power(q);
    if (pn <= 0.0)
      throw DegenerateInput("scale_to_snr: noise has zero power on channel " + std::to_string(q));
    if (ps <= 0.0)
      throw DegenerateInput("scale_to_snr: speech has zero power on channel " + std::to_string(q));
    mean_snr += 10.0 * std::log10(ps / pn);
  }
  mean_snr /= static_cast<double>(speech_sum.channels());
  return std::pow(10.0, (mean_snr - target_snr_db) / 20.0);
}

signal::AudioBuffer add_thermal_noise(const signal::AudioBuffer& buffer, double snr_db,
                                      std::uint64_t seed) {
  if (std::isnan(snr_db)) throw InvalidInput("thermal SNR must not be NaN");
  if (std::isinf(snr_db) && snr_db > 0) return buffer;
  signal::AudioBuffer out = buffer;
  for (std::size_t c = 0; c < buffer.channels(); ++c) {
    const double sigma = std::sqrt(buffer.channel_power(c) / std::pow(10.0, snr_db / 10.0));
    if (sigma == 0.0) continue;
    std::mt19937_64 rng(derive_seed(seed, "thermal", c));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& v : out.channel(c)) v += gauss(rng);
  }
  return out;
}

SceneRenderer::SceneRenderer(SceneConfig scene) : scene_(std::move(scene)) {
  scene_.validate();
  beta_ = reflection_coefficient(scene_.room_dims, scene_.t60_s);
  const std::size_t mics = scene_.microphones.size();
  rirs_.resize(scene_.sources.size() * mics);
  const double horizon = kRirHorizonFactor * scene_.t60_s;
  parallel_for(rirs_.size(), [&](std::size_t job) {
    const std::size_t s = job / mics;
    const std::size_t m = job % mics;
    auto rir = simulate_rir(scene_.room_dims, beta_, scene_.sources[s].position,
                            scene_.microphones[m], scene_.sample_rate_hz, horizon);
    rir.source_index = s;
    rir.mic_index = m;
    rirs_[job] = std::move(rir);
  });
}

const RoomImpulseResponse& SceneRenderer::rir(std::size_t source, std::size_t mic) const {
  if (source >= scene_.sources.size() || mic >= scene_.microphones.size())
    throw InvalidInput("RIR index out of range");
  return rirs_[source * scene_.microphones.size() + mic];
}

std::vector<signal::AudioBuffer> SceneRenderer::source_images(
    const SignalMap& signals, std::optional<std::size_t> duration) const {
  std::vector<const signal::AudioBuffer*> dry;
  std::size_t common = duration.value_or(std::numeric_limits<std::size_t>::max());
  for (const auto& src : scene_.sources) {
    auto it = signals.find(src.signal_id);
    if (it == signals.end()) throw InvalidInput("no signal provided for signal_id '" + src.signal_id + "'");
    const auto& buf = it->second;
    if (buf.sample_rate_hz() != scene_.sample_rate_hz)
      throw InvalidInput("signal '" + src.signal_id + "' is not at the scene sample rate");
    if (buf.channels() != 1) throw InvalidInput("signal '" + src.signal_id + "' must be mono");
    if (!duration) common = std::min(common, buf.length());
    dry.push_back(&buf);
  }
  if (common == 0) throw InvalidInput("source signals are empty");

  const std::size_t mics = scene_.microphones.size();
  std::vector<signal::AudioBuffer> images;
  images.reserve(dry.size());
  for (std::size_t s = 0; s < dry.size(); ++s)
    images.emplace_back(mics, common, scene_.sample_rate_hz);

  parallel_for(dry.size() * mics, [&](std::size_t job) {
    const std::size_t s = job / mics;
    const std::size_t m = job % mics;
    const double gain = std::pow(10.0, scene_.sources[s].gain_db / 20.0);
    std::vector<double> x(common, 0.0);
    const auto src = dry[s]->channel(0);
    const std::size_t n = std::min(common, src.size());
    for (std::size_t i = 0; i < n; ++i) x[i] = gain * src[i];
    const auto y = FftConvolver(rir(s, m).taps).apply(x, common);
    std::copy(y.begin(), y.end(), images[s].channel(m).begin());
  });
  return images;
}

signal::AudioBuffer SceneRenderer::source_image(std::size_t source, const signal::AudioBuffer& dry,
                                                std::size_t duration) const {
  if (source >= scene_.sources.size()) throw InvalidInput("source index out of range");
  const auto& spec = scene_.sources[source];
  if (dry.sample_rate_hz() != scene_.sample_rate_hz)
    throw InvalidInput("signal '" + spec.signal_id + "' is not at the scene sample rate");
  if (dry.channels() != 1) throw InvalidInput("signal '" + spec.signal_id + "' must be mono");
  if (duration == 0) throw InvalidInput("image duration must be positive");
  const std::size_t mics = scene_.microphones.size();
  signal::AudioBuffer image(mics, duration, scene_.sample_rate_hz);
  const double gain = std::pow(10.0, spec.gain_db / 20.0);
  std::vector<double> x(duration, 0.0);
  const auto src = dry.channel(0);
  const std::size_t n = std::min(duration, src.size());
  for (std::size_t i = 0; i < n; ++i) x[i] = gain * src[i];
  parallel_for(mics, [&](std::size_t m) {
    const auto y = FftConvolver(rir(source, m).taps).apply(x, duration);
    std::copy(y.begin(), y.end(), image.channel(m).begin());
  });
  return image;
}

double SceneRenderer::calibrate_noise_gain(const std::vector<signal::AudioBuffer>& images) const {
  if (images.size() != scene_.sources.size()) throw InvalidInput("one image per source is required");
  if (scene_.noise_count() == 0) return 1.0;
  const auto& first = images.front();
  signal::AudioBuffer speech(first.channels(), first.length(), first.sample_rate_hz());
  signal::AudioBuffer noise = speech;
  for (std::size_t s = 0; s < images.size(); ++s)
    (scene_.sources[s].role == SourceRole::Speech ? speech : noise) += images[s];
  return scale_to_snr(speech, noise, scene_.background_snr_db);
}

RenderedScene SceneRenderer::compose(std::vector<signal::AudioBuffer> images, double noise_gain,
                                     std::optional<std::size_t> muted_source,
                                     std::uint64_t noise_stream) const {
  if (images.size() != scene_.sources.size()) throw InvalidInput("one image per source is required");
  RenderedScene out;
  const auto& first = images.front();
  out.mixture = signal::AudioBuffer(first.channels(), first.length(), first.sample_rate_hz());
  out.gains.resize(images.size());
  out.noise_gain = noise_gain;
  for (std::size_t s = 0; s < images.size(); ++s) {
    double g = std::pow(10.0, scene_.sources[s].gain_db / 20.0);
    double applied = 1.0;
    if (scene_.sources[s].role == SourceRole::Noise) applied = noise_gain;
    if (muted_source && *muted_source == s) applied = 0.0;
    if (applied != 1.0) images[s] *= applied;
    out.gains[s] = g * applied;
    out.mixture += images[s];
  }
  const auto noisy = add_thermal_noise(out.mixture, scene_.thermal_snr_db,
                                       derive_seed(scene_.seed, "render", noise_stream));
  out.thermal_noise = noisy;
  for (std::size_t c = 0; c < noisy.channels(); ++c) {
    auto t = out.thermal_noise.channel(c);
    auto m = out.mixture.channel(c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] -= m[i];
  }
  out.mixture = noisy;
  out.per_source_images = std::move(images);
  return out;
}

RenderedScene render_scene(const SceneConfig& scene, const SignalMap& signals) {
  const SceneRenderer renderer(scene);
  auto images = renderer.source_images(signals);
  for (std::size_t s : scene.speech_indices()) {
    double total = 0.0;
    for (std::size_t c = 0; c < images[s].channels(); ++c) total += images[s].channel_power(c);
    if (total <= 0.0)
      throw DegenerateInput("speech source '" + scene.sources[s].signal_id + "' has zero power");
  }
  const double noise_gain = renderer.calibrate_noise_gain(images);
  return renderer.compose(std::move(images), noise_gain);
}

}  // namespace retm::room
