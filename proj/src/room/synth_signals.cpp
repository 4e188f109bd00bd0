#include "retm/room/synth_signals.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "retm/error.hpp"

namespace retm::room {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Direct-form-I biquad (RBJ cookbook coefficients).
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad bandpass(double fc, double q, double fs) {
    const double w = kTwoPi * fc / fs;
    const double alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0 = alpha / a0;
    f.b1 = 0.0;
    f.b2 = -alpha / a0;
    f.a1 = -2.0 * std::cos(w) / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
  }
  static Biquad lowpass(double fc, double q, double fs) {
    const double w = kTwoPi * fc / fs;
    const double alpha = std::sin(w) / (2.0 * q);
    const double c = std::cos(w);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0 = (1.0 - c) / 2.0 / a0;
    f.b1 = (1.0 - c) / a0;
    f.b2 = f.b0;
    f.a1 = -2.0 * c / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
  }
  double operator()(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

void normalize_rms(std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double rms = std::sqrt(acc / static_cast<double>(x.size()));
  if (rms > 0.0)
    for (double& v : x) v /= rms;
}

// Smoothed random gate in [0, 1]: alternating syllables and pauses.
std::vector<double> syllable_envelope(std::size_t n, double fs, std::mt19937_64& rng) {
  std::vector<double> env(n, 0.0);
  std::uniform_real_distribution<double> syllable(0.12, 0.3);
  std::uniform_real_distribution<double> gap(0.03, 0.15);
  std::uniform_real_distribution<double> level(0.4, 1.0);
  std::bernoulli_distribution long_pause(0.08);
  std::size_t pos = 0;
  while (pos < n) {
    const std::size_t len = static_cast<std::size_t>(syllable(rng) * fs);
    const double amp = level(rng);
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double phase = static_cast<double>(i) / static_cast<double>(len);
      env[pos + i] = amp * std::sin(std::numbers::pi * phase);
    }
    pos += len;
    pos += static_cast<std::size_t>((long_pause(rng) ? 0.4 : gap(rng)) * fs);
  }
  return env;
}

std::vector<double> speech_like(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto env = syllable_envelope(n, fs, rng);
  // Speaker-dependent pitch and formant layout.
  const double f0 = 100.0 + 120.0 * uni(rng);
  std::vector<Biquad> formants;
  const double base[] = {500.0, 1500.0, 2500.0, 3500.0};
  for (double f : base) formants.push_back(Biquad::bandpass(f * (0.85 + 0.3 * uni(rng)), 3.0, fs));
  Biquad tilt = Biquad::lowpass(std::min(3000.0, 0.45 * fs), 0.7, fs);

  std::vector<double> out(n);
  double phase = 0.0;
  double pitch_drift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pitch_drift = 0.9995 * pitch_drift + 0.02 * gauss(rng);
    phase += (f0 * (1.0 + 0.1 * std::tanh(pitch_drift))) / fs;
    if (phase >= 1.0) phase -= 1.0;
    // Glottal-like pulse train plus aspiration noise.
    const double excitation = (phase < 0.05 ? 1.0 : 0.0) - 0.05 + 0.3 * gauss(rng);
    double y = 0.0;
    for (auto& f : formants) y += f(excitation);
    out[i] = env[i] * (tilt(y) + 0.05 * y);
  }
  return out;
}

std::vector<double> hum(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Biquad lp = Biquad::lowpass(800.0, 0.7, fs);
  std::vector<double> phases(12);
  for (double& p : phases) p = kTwoPi * uni(rng);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double tones = 0.0;
    for (std::size_t h = 0; h < phases.size(); ++h)
      tones += std::sin(kTwoPi * 50.0 * (h + 1) * t + phases[h]) / (h + 1.0);
    out[i] = lp(gauss(rng)) + 0.03 * gauss(rng) + 0.2 * tones;
  }
  return out;
}

std::vector<double> broadband(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Biquad bp = Biquad::bandpass(std::min(2500.0, 0.3 * fs), 0.5, fs);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double wobble = 1.0 + 0.2 * std::sin(kTwoPi * 0.7 * t);
    out[i] = wobble * (bp(gauss(rng)) + 0.2 * gauss(rng));
  }
  return out;
}

std::vector<double> music(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> note(0, 24);
  Biquad lp = Biquad::lowpass(std::min(5000.0, 0.45 * fs), 0.7, fs);
  const std::size_t note_len = static_cast<std::size_t>(0.25 * fs);
  std::vector<double> out(n);
  double freq = 220.0;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t in_note = i % note_len;
    if (in_note == 0) freq = 110.0 * std::pow(2.0, note(rng) / 12.0);
    phase += freq / fs;
    if (phase >= 1.0) phase -= 1.0;
    double tone = 0.0;
    for (int h = 1; h <= 8; ++h) tone += std::sin(kTwoPi * h * phase) / h;
    const double decay = std::exp(-3.0 * static_cast<double>(in_note) / static_cast<double>(note_len));
    out[i] = decay * tone + 0.3 * lp(gauss(rng));
  }
  return out;
}

}  // namespace

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "speech") return SynthKind::Speech;
  if (name == "hum") return SynthKind::Hum;
  if (name == "broadband") return SynthKind::Broadband;
  if (name == "music") return SynthKind::Music;
  throw InvalidInput("unknown synthetic signal kind '" + name + "'");
}

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::Speech: return "speech";
    case SynthKind::Hum: return "hum";
    case SynthKind::Broadband: return "broadband";
    case SynthKind::Music: return "music";
  }
  return "unknown";
}

signal::AudioBuffer synthesize(SynthKind kind, double duration_s, int sample_rate_hz,
                               std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw InvalidInput("synthetic signal duration must be positive");
  const double fs = sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  switch (kind) {
    case SynthKind::Speech: x = speech_like(n, fs, rng); break;
    case SynthKind::Hum: x = hum(n, fs, rng); break;
    case SynthKind::Broadband: x = broadband(n, fs, rng); break;
    case SynthKind::Music: x = music(n, fs, rng); break;
  }
  normalize_rms(x);
  return signal::AudioBuffer::from_channels({x}, sample_rate_hz);
}

}  // namespace retm::room
