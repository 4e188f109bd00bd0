#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace retm::signal {

// Multichannel time-domain samples. Channels are stored contiguously, one
// after another, all with the same length.
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::size_t channels, std::size_t length, int sample_rate_hz);

  static AudioBuffer from_channels(const std::vector<std::vector<double>>& channels,
                                   int sample_rate_hz);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double duration_s() const noexcept {
    return sample_rate_hz_ > 0 ? static_cast<double>(length_) / sample_rate_hz_ : 0.0;
  }
  bool empty() const noexcept { return channels_ == 0 || length_ == 0; }

  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  double& operator()(std::size_t c, std::size_t n) { return samples_[c * length_ + n]; }
  double operator()(std::size_t c, std::size_t n) const { return samples_[c * length_ + n]; }

  // Throws InvalidInput if any sample is NaN or infinite.
  void check_finite() const;

  AudioBuffer select_channels(std::span<const std::size_t> indices) const;
  // Samples [begin, end) of every channel; end is clamped to length().
  AudioBuffer slice(std::size_t begin, std::size_t end) const;

  AudioBuffer& operator+=(const AudioBuffer& other);
  AudioBuffer& operator*=(double gain);

  // Mean-square value of one channel over its full duration.
  double channel_power(std::size_t c) const;
  double max_abs() const;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  int sample_rate_hz_ = 0;
  std::vector<double> samples_;
};

AudioBuffer operator+(AudioBuffer lhs, const AudioBuffer& rhs);
AudioBuffer operator*(AudioBuffer lhs, double gain);

}  // namespace retm::signal
