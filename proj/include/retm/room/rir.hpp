#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "retm/room/scene.hpp"

namespace retm::room {

inline constexpr double kSpeedOfSound = 343.0;   // m/s
inline constexpr int kFractionalDelayTaps = 81;  // Hann-windowed sinc
inline constexpr double kRirHorizonFactor = 1.25;  // RIR length as a multiple of T60
inline constexpr double kRirHighpassHz = 50.0;     // DC-blocking cutoff applied to RIR taps

struct RoomImpulseResponse {
  std::vector<double> taps;
  int sample_rate_hz = 0;
  std::size_t source_index = 0;
  std::size_t mic_index = 0;
};

// Uniform wall reflection coefficient from Sabine's formula:
// alpha = 0.161 V / (S T60), beta = sqrt(1 - alpha).
// Throws InfeasibleConfig when alpha >= 1.
double reflection_coefficient(const Vec3& room_dims, double t60_s);

// Image-source RIR for a shoebox room with uniform reflection coefficient
// beta. Each image contributes beta^reflections / (4 pi d) at delay d / c
// through an 81-tap Hann-windowed sinc; images arriving after max_time_s are
// skipped. The returned vector holds ceil(max_time_s * fs) samples plus the
// kernel half-width.
// All image amplitudes are positive, so the tail carries a slowly decaying DC
// build-up; a second-order Butterworth high-pass at highpass_hz removes it
// (0 disables the filter).
RoomImpulseResponse simulate_rir(const Vec3& room_dims, double beta, const Vec3& source_pos,
                                 const Vec3& mic_pos, int sample_rate_hz, double max_time_s,
                                 double highpass_hz = kRirHighpassHz);

// Linear convolution of full length a.size() + b.size() - 1. Long inputs use
// FFT overlap-add.
std::vector<double> convolve(std::span<const double> signal, std::span<const double> kernel);
std::vector<double> convolve(std::span<const double> signal, const RoomImpulseResponse& rir);

// Overlap-add FFT convolution with a fixed kernel, reusable across signals.
class FftConvolver {
 public:
  explicit FftConvolver(std::span<const double> kernel);

  // Full convolution, or the first `out_len` samples of it.
  std::vector<double> apply(std::span<const double> signal) const;
  std::vector<double> apply(std::span<const double> signal, std::size_t out_len) const;

 private:
  std::size_t kernel_len_;
  std::size_t fft_len_;
  std::vector<std::complex<double>> kernel_spectrum_;
};

}  // namespace retm::room
