#include "retm/signal/audio_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "retm/error.hpp"

namespace retm::signal {

AudioBuffer::AudioBuffer(std::size_t channels, std::size_t length, int sample_rate_hz)
    : channels_(channels), length_(length), sample_rate_hz_(sample_rate_hz),
      samples_(channels * length, 0.0) {
  if (sample_rate_hz <= 0) throw InvalidInput("sample rate must be positive");
}

AudioBuffer AudioBuffer::from_channels(const std::vector<std::vector<double>>& channels,
                                       int sample_rate_hz) {
  const std::size_t length = channels.empty() ? 0 : channels.front().size();
  AudioBuffer out(channels.size(), length, sample_rate_hz);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != length) throw InvalidInput("channels differ in length");
    std::copy(channels[c].begin(), channels[c].end(), out.channel(c).begin());
  }
  return out;
}

std::span<double> AudioBuffer::channel(std::size_t c) {
  if (c >= channels_) throw InvalidInput("channel index " + std::to_string(c) + " out of range");
  return {samples_.data() + c * length_, length_};
}

std::span<const double> AudioBuffer::channel(std::size_t c) const {
  if (c >= channels_) throw InvalidInput("channel index " + std::to_string(c) + " out of range");
  return {samples_.data() + c * length_, length_};
}

void AudioBuffer::check_finite() const {
  for (double v : samples_)
    if (!std::isfinite(v)) throw InvalidInput("audio buffer contains non-finite samples");
}

AudioBuffer AudioBuffer::select_channels(std::span<const std::size_t> indices) const {
  AudioBuffer out(indices.size(), length_, sample_rate_hz_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = channel(indices[i]);
    std::copy(src.begin(), src.end(), out.channel(i).begin());
  }
  return out;
}

AudioBuffer AudioBuffer::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, length_);
  if (begin > end) throw InvalidInput("slice begins after it ends");
  AudioBuffer out(channels_, end - begin, sample_rate_hz_);
  for (std::size_t c = 0; c < channels_; ++c) {
    auto src = channel(c);
    std::copy(src.begin() + begin, src.begin() + end, out.channel(c).begin());
  }
  return out;
}

AudioBuffer& AudioBuffer::operator+=(const AudioBuffer& other) {
  if (other.channels_ != channels_ || other.length_ != length_)
    throw InvalidInput("cannot add audio buffers of different shapes");
  for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += other.samples_[i];
  return *this;
}

AudioBuffer& AudioBuffer::operator*=(double gain) {
  for (double& v : samples_) v *= gain;
  return *this;
}

double AudioBuffer::channel_power(std::size_t c) const {
  auto x = channel(c);
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double AudioBuffer::max_abs() const {
  double m = 0.0;
  for (double v : samples_) m = std::max(m, std::abs(v));
  return m;
}

AudioBuffer operator+(AudioBuffer lhs, const AudioBuffer& rhs) {
  lhs += rhs;
  return lhs;
}

AudioBuffer operator*(AudioBuffer lhs, double gain) {
  lhs *= gain;
  return lhs;
}

}  // namespace retm::signal
