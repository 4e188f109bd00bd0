#include "retm/app/experiment.hpp"

#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "retm/app/wav.hpp"
#include "retm/error.hpp"
#include "retm/parallel.hpp"
#include "retm/signal/resample.hpp"

namespace retm::app {

namespace {

signal::AudioBuffer to_mono(const signal::AudioBuffer& in, const std::string& id) {
  if (in.channels() == 1) return in;
  spdlog::warn("signal '{}' has {} channels; averaging to mono", id, in.channels());
  signal::AudioBuffer out(1, in.length(), in.sample_rate_hz());
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t n = 0; n < in.length(); ++n) out(0, n) += in(c, n) / static_cast<double>(in.channels());
  return out;
}

signal::AudioBuffer fit_length(const signal::AudioBuffer& in, std::size_t length, const std::string& id) {
  if (in.length() >= length) return in.slice(0, length);
  spdlog::warn("signal '{}' is {:.2f} s long, zero-padding to {:.2f} s", id, in.duration_s(),
               static_cast<double>(length) / in.sample_rate_hz());
  signal::AudioBuffer out(1, length, in.sample_rate_hz());
  std::copy(in.channel(0).begin(), in.channel(0).end(), out.channel(0).begin());
  return out;
}

ImageSet render_images(const room::SceneRenderer& renderer, const room::SignalMap& dry, std::size_t length) {
  const auto& scene = renderer.scene();
  ImageSet set;
  set.noise = signal::AudioBuffer(scene.microphones.size(), length, scene.sample_rate_hz);
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    auto image = renderer.source_image(s, dry.at(scene.sources[s].signal_id), length);
    if (scene.sources[s].role == room::SourceRole::Speech)
      set.speech.push_back(std::move(image));
    else
      set.noise += image;
  }
  return set;
}

}  // namespace

SignalSet load_signals(const ExperimentConfig& config) {
  const int rate = config.scene.sample_rate_hz;
  const std::size_t n_train = config.training_samples();
  const std::size_t n_mix = config.mixture_samples();
  SignalSet set;
  for (const auto& src : config.scene.sources) {
    const std::string& id = src.signal_id;
    if (set.training.count(id)) continue;
    const auto it = config.signals.find(id);
    if (it == config.signals.end()) throw InvalidInput("no signal provided for signal_id '" + id + "'");
    signal::AudioBuffer dry;
    if (it->second.wav) {
      dry = to_mono(read_wav(*it->second.wav), id);
      if (dry.sample_rate_hz() != rate) {
        if (dry.sample_rate_hz() % rate != 0)
          throw UnsupportedRate("signal '" + id + "' is at " + std::to_string(dry.sample_rate_hz()) +
                                " Hz, not an integer multiple of " + std::to_string(rate) + " Hz");
        dry = signal::decimate(dry, dry.sample_rate_hz() / rate);
      }
    } else {
      const auto seed = it->second.synth_seed.value_or(room::derive_seed(config.seed(), "signal:" + id, 0));
      dry = room::synthesize(it->second.synth, static_cast<double>(n_train + n_mix) / rate, rate, seed);
    }
    dry = fit_length(dry, n_train + n_mix, id);
    set.training.emplace(id, dry.slice(0, n_train));
    set.mixture.emplace(id, dry.slice(n_train, n_train + n_mix));
  }
  return set;
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  const auto snrs = config.sweep.snr_db.empty() ? std::vector<double>{config.scene.background_snr_db}
                                                : config.sweep.snr_db;
  const auto qas = config.sweep.q_a.empty() ? std::vector<std::size_t>{config.groups.q_a()} : config.sweep.q_a;
  const auto gains = config.sweep.target_gain_db.empty() ? std::vector<double>{0.0} : config.sweep.target_gain_db;
  std::vector<SweepPoint> points;
  for (double snr : snrs)
    for (std::size_t q : qas)
      for (double g : gains) points.push_back({snr, q, g});
  return points;
}

std::string point_label(const SweepPoint& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "snr_%g_qa_%zu_gain_%g", p.snr_db, p.q_a, p.target_gain_db);
  return buf;
}

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)), renderer_(config_.scene), speech_(config_.scene.speech_indices()) {
  if (config_.recorded) throw InvalidInput("simulation needs synthesized segments");
  signals_ = load_signals(config_);
  spdlog::info("rendering {} sources at {} microphones", config_.scene.sources.size(),
               config_.scene.microphones.size());
  mixture_images_ = render_images(renderer_, signals_.mixture, config_.mixture_samples());
  training_images_ = render_images(renderer_, signals_.training, config_.training_samples());
  for (std::size_t k = 0; k < speech_.size(); ++k) {
    double total = 0.0;
    for (std::size_t c = 0; c < mixture_images_.speech[k].channels(); ++c)
      total += mixture_images_.speech[k].channel_power(c);
    if (total <= 0.0)
      throw DegenerateInput("speech source '" + config_.scene.sources[speech_[k]].signal_id + "' has zero power");
  }
}

double Experiment::noise_gain(double snr_db) const {
  if (config_.scene.noise_count() == 0) return 1.0;
  signal::AudioBuffer speech = mixture_images_.speech.front();
  for (std::size_t k = 1; k < mixture_images_.speech.size(); ++k) speech += mixture_images_.speech[k];
  return room::scale_to_snr(speech, mixture_images_.noise, snr_db);
}

signal::AudioBuffer Experiment::with_thermal(signal::AudioBuffer clean, std::uint64_t stream) const {
  return room::add_thermal_noise(clean, config_.scene.thermal_snr_db,
                                 room::derive_seed(config_.seed(), "render", stream));
}

signal::AudioBuffer Experiment::mixture(double noise_gain, std::size_t target, double target_gain_db) const {
  signal::AudioBuffer sum = mixture_images_.noise * noise_gain;
  for (std::size_t k = 0; k < mixture_images_.speech.size(); ++k) {
    if (k == target && target_gain_db != 0.0)
      sum += mixture_images_.speech[k] * std::pow(10.0, target_gain_db / 20.0);
    else
      sum += mixture_images_.speech[k];
  }
  return with_thermal(std::move(sum), 0);
}

signal::AudioBuffer Experiment::training(std::size_t target, double noise_gain) const {
  if (target >= training_images_.speech.size()) throw InvalidInput("target index out of range");
  signal::AudioBuffer sum = training_images_.noise * noise_gain;
  for (std::size_t k = 0; k < training_images_.speech.size(); ++k)
    if (k != target) sum += training_images_.speech[k];
  return with_thermal(std::move(sum), 1 + target);
}

separation::GroupAssignment Experiment::groups_for(std::size_t q_a) const {
  if (q_a == 0 || q_a > config_.groups.q_a()) throw InvalidInput("Q_A outside the configured group A");
  separation::GroupAssignment g;
  g.group_a.assign(config_.groups.group_a.begin(), config_.groups.group_a.begin() + static_cast<long>(q_a));
  g.group_b = config_.groups.group_b;
  return g;
}

PointOutcome Experiment::run_point(const SweepPoint& point, bool keep_separations) const {
  const double g = noise_gain(point.snr_db);
  const auto groups = groups_for(point.q_a);
  check_group_b_size(config_, groups.q_b());
  const std::size_t mic = groups.group_a.at(config_.eval_channel);

  std::vector<std::vector<double>> references;
  for (const auto& image : mixture_images_.speech) {
    const auto ch = image.channel(mic);
    references.emplace_back(ch.begin(), ch.end());
  }

  PointOutcome outcome;
  auto& report = outcome.report;
  report.q_a = groups.q_a();
  report.q_b = groups.q_b();
  report.snr_db = point.snr_db;
  report.eval_channel = config_.eval_channel;
  report.eval_microphone = mic;
  const auto& scene = config_.scene;
  report.scene = {{"room_dims", scene.room_dims},
                  {"t60_s", scene.t60_s},
                  {"speech_sources", scene.speech_count()},
                  {"noise_sources", scene.noise_count()},
                  {"microphones", scene.microphones.size()},
                  {"sample_rate_hz", scene.sample_rate_hz},
                  {"seed", scene.seed},
                  {"noise_gain", g},
                  {"target_gain_db", point.target_gain_db}};

  const signal::AudioBuffer shared = mixture(g);
  for (std::size_t k = 0; k < speech_.size(); ++k) {
    const std::string& id = scene.sources[speech_[k]].signal_id;
    const bool boosted = point.target_gain_db != 0.0;
    const signal::AudioBuffer own = boosted ? mixture(g, k, point.target_gain_db) : signal::AudioBuffer{};
    const signal::AudioBuffer& mix = boosted ? own : shared;
    auto result = separation::separate_speaker_detailed(mix, training(k, g), groups,
                                                        separation_options(config_, static_cast<int>(k)));
    for (const auto& w : result.retm.warnings) spdlog::warn("{}: {}", id, w);
    spdlog::debug("{}: {} of {} bins fell back to pass-through", id, result.retm.fallback_count(),
                  result.retm.bins());

    std::vector<std::vector<double>> refs = references;
    if (boosted)
      for (double& v : refs[k]) v *= std::pow(10.0, point.target_gain_db / 20.0);
    auto m = metrics::evaluate_speaker(refs, mix.channel(mic), result.output.channel(0), k,
                                       config_.stft.window_len);
    m.signal_id = id;
    report.speakers.push_back(std::move(m));
    if (keep_separations) outcome.separations.push_back(std::move(result));
  }
  return outcome;
}

separation::SeparationOptions separation_options(const ExperimentConfig& config, int target_id) {
  separation::SeparationOptions o;
  o.stft = config.stft;
  o.rcond = config.rcond;
  o.fallback_condition = config.fallback_condition;
  o.output_channel = config.eval_channel;
  o.target_id = target_id;
  return o;
}

void check_group_b_size(const ExperimentConfig& config, std::size_t q_b) {
  const std::size_t undesired = config.scene.sources.size() - 1;
  if (q_b < undesired)
    spdlog::warn("Q_B = {} is below the {} undesired sources; the relative transfer matrix is not "
                 "identifiable and cancellation will be partial",
                 q_b, undesired);
}

}  // namespace retm::app
