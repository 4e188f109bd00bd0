#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "retm/signal/audio_buffer.hpp"

namespace retm::signal {

enum class WindowKind { SqrtHann };

struct StftParams {
  std::size_t window_len = 8192;
  std::size_t hop = 4096;
  WindowKind window_kind = WindowKind::SqrtHann;
  std::size_t fft_len = 8192;

  // Square-root Hann at 50% overlap without zero padding.
  static StftParams with_window(std::size_t window_len) {
    return {window_len, window_len / 2, WindowKind::SqrtHann, window_len};
  }

  std::size_t bins() const noexcept { return fft_len / 2 + 1; }

  // Checks sizes and that the squared window overlap-adds to a constant
  // within 1e-12 at this hop. Throws InvalidInput.
  void validate() const;

  bool operator==(const StftParams&) const = default;
};

// Analysis (and synthesis) window of params.window_len samples.
// sqrt-Hann here is sin(pi (n + 1/2) / N): strictly positive, and its square
// overlap-adds to exactly 1 at hop N/2.
std::vector<double> analysis_window(const StftParams& params);

// Complex STFT tensor, logically [bins x frames x channels]. Stored with the
// bin index fastest, then frame, then channel.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t frames, std::size_t channels, const StftParams& params,
              int sample_rate_hz, std::size_t origin_len);

  std::size_t bins() const noexcept { return bins_; }
  std::size_t frames() const noexcept { return frames_; }
  std::size_t channels() const noexcept { return channels_; }
  const StftParams& params() const noexcept { return params_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t origin_len() const noexcept { return origin_len_; }

  std::complex<double>& operator()(std::size_t bin, std::size_t frame, std::size_t ch) {
    return data_[(ch * frames_ + frame) * bins_ + bin];
  }
  std::complex<double> operator()(std::size_t bin, std::size_t frame, std::size_t ch) const {
    return data_[(ch * frames_ + frame) * bins_ + bin];
  }

  std::span<std::complex<double>> frame(std::size_t frame, std::size_t ch) {
    return {data_.data() + (ch * frames_ + frame) * bins_, bins_};
  }
  std::span<const std::complex<double>> frame(std::size_t frame, std::size_t ch) const {
    return {data_.data() + (ch * frames_ + frame) * bins_, bins_};
  }

  std::span<std::complex<double>> data() noexcept { return data_; }
  std::span<const std::complex<double>> data() const noexcept { return data_; }

  Spectrogram select_channels(std::span<const std::size_t> indices) const;
  // Frames [begin, end); origin_len becomes the sample span those frames cover.
  Spectrogram slice_frames(std::size_t begin, std::size_t end) const;

  Spectrogram& operator*=(std::complex<double> gain);

 private:
  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  StftParams params_;
  int sample_rate_hz_ = 0;
  std::size_t origin_len_ = 0;
  std::vector<std::complex<double>> data_;
};

// Number of frames needed to cover `length` samples (tail zero-padded).
std::size_t frame_count(std::size_t length, const StftParams& params);

// One-sided STFT. Frame t covers samples [t*hop, t*hop + window_len).
Spectrogram stft(const AudioBuffer& buffer, const StftParams& params);

// Weighted overlap-add synthesis normalized by the summed squared window,
// truncated to spec.origin_len().
AudioBuffer istft(const Spectrogram& spec);

// Real tensor with the same layout as Spectrogram.
struct MagnitudeGrid {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  double operator()(std::size_t bin, std::size_t frame, std::size_t ch) const {
    return values[(ch * frames + frame) * bins + bin];
  }
};

// 20 log10 |X| clamped below at floor_db.
MagnitudeGrid magnitude_db(const Spectrogram& spec, double floor_db);

}  // namespace retm::signal
