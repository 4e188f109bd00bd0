#include "retm/signal/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "retm/error.hpp"
#include "retm/parallel.hpp"
#include "retm/signal/fft.hpp"

namespace retm::signal {

void StftParams::validate() const {
  if (window_len < 2) throw InvalidInput("window_len must be at least 2");
  if (hop == 0 || hop > window_len) throw InvalidInput("hop must be in [1, window_len]");
  if (fft_len < window_len) throw InvalidInput("fft_len must be >= window_len");

  const auto w = analysis_window(*this);
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t n = 0; n < hop; ++n) {
    double sum = 0.0;
    for (std::size_t k = n; k < window_len; k += hop) sum += w[k] * w[k];
    lo = std::min(lo, sum);
    hi = std::max(hi, sum);
  }
  if (hi - lo > 1e-12)
    throw InvalidInput("window/hop pair is not constant-overlap-add (hop " + std::to_string(hop) +
                       ", window " + std::to_string(window_len) + ")");
}

std::vector<double> analysis_window(const StftParams& params) {
  std::vector<double> w(params.window_len);
  const double n_total = static_cast<double>(params.window_len);
  for (std::size_t n = 0; n < w.size(); ++n)
    w[n] = std::sin(std::numbers::pi * (static_cast<double>(n) + 0.5) / n_total);
  return w;
}

Spectrogram::Spectrogram(std::size_t frames, std::size_t channels, const StftParams& params,
                         int sample_rate_hz, std::size_t origin_len)
    : bins_(params.bins()), frames_(frames), channels_(channels), params_(params),
      sample_rate_hz_(sample_rate_hz), origin_len_(origin_len),
      data_(bins_ * frames * channels) {
  if (frames == 0 || channels == 0) throw InvalidInput("spectrogram needs >= 1 frame and channel");
  if (sample_rate_hz <= 0) throw InvalidInput("sample rate must be positive");
}

Spectrogram Spectrogram::select_channels(std::span<const std::size_t> indices) const {
  Spectrogram out(frames_, indices.size(), params_, sample_rate_hz_, origin_len_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= channels_)
      throw InvalidInput("channel index " + std::to_string(indices[i]) + " out of range");
    for (std::size_t t = 0; t < frames_; ++t) {
      auto src = frame(t, indices[i]);
      std::copy(src.begin(), src.end(), out.frame(t, i).begin());
    }
  }
  return out;
}

Spectrogram Spectrogram::slice_frames(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > frames_) throw InvalidInput("frame range out of bounds");
  const std::size_t n = end - begin;
  const std::size_t covered = (n - 1) * params_.hop + params_.window_len;
  Spectrogram out(n, channels_, params_, sample_rate_hz_, covered);
  for (std::size_t c = 0; c < channels_; ++c)
    for (std::size_t t = 0; t < n; ++t) {
      auto src = frame(begin + t, c);
      std::copy(src.begin(), src.end(), out.frame(t, c).begin());
    }
  return out;
}

Spectrogram& Spectrogram::operator*=(std::complex<double> gain) {
  for (auto& v : data_) v *= gain;
  return *this;
}

std::size_t frame_count(std::size_t length, const StftParams& params) {
  if (length <= params.window_len) return 1;
  return 1 + (length - params.window_len + params.hop - 1) / params.hop;
}

Spectrogram stft(const AudioBuffer& buffer, const StftParams& params) {
  params.validate();
  if (buffer.channels() == 0) throw InvalidInput("stft: buffer has no channels");
  if (buffer.length() < params.window_len)
    throw InvalidInput("stft: buffer shorter than one window (" + std::to_string(buffer.length()) +
                       " < " + std::to_string(params.window_len) + ")");

  const std::size_t frames = frame_count(buffer.length(), params);
  Spectrogram spec(frames, buffer.channels(), params, buffer.sample_rate_hz(), buffer.length());
  const auto window = analysis_window(params);
  const RealFft fft(params.fft_len);

  parallel_for(buffer.channels() * frames, [&](std::size_t job) {
    const std::size_t ch = job / frames;
    const std::size_t t = job % frames;
    const auto x = buffer.channel(ch);
    std::vector<double> frame(params.fft_len, 0.0);
    const std::size_t start = t * params.hop;
    const std::size_t avail = std::min(params.window_len, x.size() - start);
    for (std::size_t n = 0; n < avail; ++n) frame[n] = x[start + n] * window[n];
    fft.forward(frame, spec.frame(t, ch));
  });
  return spec;
}

AudioBuffer istft(const Spectrogram& spec) {
  const auto& params = spec.params();
  params.validate();
  if (spec.bins() != params.bins() || spec.frames() == 0 || spec.channels() == 0 ||
      spec.data().size() != spec.bins() * spec.frames() * spec.channels())
    throw InvalidInput("istft: spectrogram shape inconsistent with its parameters");
  const std::size_t span_len = (spec.frames() - 1) * params.hop + params.window_len;
  if (spec.origin_len() == 0 || spec.origin_len() > span_len)
    throw InvalidInput("istft: origin_len inconsistent with frame count");

  const auto window = analysis_window(params);
  std::vector<double> norm(span_len, 0.0);
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t n = 0; n < params.window_len; ++n)
      norm[t * params.hop + n] += window[n] * window[n];

  const RealFft fft(params.fft_len);
  AudioBuffer out(spec.channels(), spec.origin_len(), spec.sample_rate_hz());
  parallel_for(spec.channels(), [&](std::size_t ch) {
    std::vector<double> acc(span_len, 0.0);
    std::vector<double> frame(params.fft_len);
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      fft.inverse(spec.frame(t, ch), frame);
      const std::size_t start = t * params.hop;
      for (std::size_t n = 0; n < params.window_len; ++n) acc[start + n] += frame[n] * window[n];
    }
    auto y = out.channel(ch);
    for (std::size_t n = 0; n < y.size(); ++n) y[n] = acc[n] / norm[n];
  });
  return out;
}

MagnitudeGrid magnitude_db(const Spectrogram& spec, double floor_db) {
  MagnitudeGrid grid{spec.bins(), spec.frames(), spec.channels(), {}};
  grid.values.resize(spec.data().size());
  const auto data = spec.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double mag = std::abs(data[i]);
    const double db = mag > 0.0 ? 20.0 * std::log10(mag) : -INFINITY;
    grid.values[i] = std::max(db, floor_db);
  }
  return grid;
}

}  // namespace retm::signal
