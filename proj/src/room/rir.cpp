#include "retm/room/rir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "retm/error.hpp"
#include "retm/signal/fft.hpp"

namespace retm::room {

double reflection_coefficient(const Vec3& room_dims, double t60_s) {
  const auto [lx, ly, lz] = room_dims;
  if (!(lx > 0 && ly > 0 && lz > 0)) throw InvalidInput("room dimensions must be positive");
  if (!(t60_s > 0.0)) throw InvalidInput("T60 must be positive");
  const double volume = lx * ly * lz;
  const double surface = 2.0 * (lx * ly + lx * lz + ly * lz);
  const double alpha = 0.161 * volume / (surface * t60_s);
  if (alpha >= 1.0)
    throw InfeasibleConfig("T60 of " + std::to_string(t60_s) +
                           " s is too short for the room (Sabine absorption >= 1)");
  return std::sqrt(1.0 - alpha);
}

namespace {

constexpr int kHalfTaps = kFractionalDelayTaps / 2;

// cos/sin of pi k / (kHalfTaps + 1) for k in [-kHalfTaps, kHalfTaps].
struct KernelTables {
  std::array<double, kFractionalDelayTaps> cos_k{};
  std::array<double, kFractionalDelayTaps> sin_k{};
  KernelTables() {
    for (int k = -kHalfTaps; k <= kHalfTaps; ++k) {
      const double a = std::numbers::pi * k / (kHalfTaps + 1);
      cos_k[k + kHalfTaps] = std::cos(a);
      sin_k[k + kHalfTaps] = std::sin(a);
    }
  }
};

// Adds amp * w(n - tau) * sinc(n - tau) for n = round(tau) + k.
// Uses sin(pi (k - frac)) = -(-1)^k sin(pi frac) and the angle-sum identity for
// the Hann taper, so each image costs two trig calls. frac stays in
// [-1/2, 1/2] so sin(pi frac) never cancels near an integer delay.
void add_fractional_pulse(std::vector<double>& taps, double tau, double amp,
                          const KernelTables& tables) {
  const double base = std::round(tau);
  const double frac = tau - base;
  const long origin = static_cast<long>(base);
  const long size = static_cast<long>(taps.size());
  if (frac == 0.0) {
    if (origin >= 0 && origin < size) taps[origin] += amp;
    return;
  }
  const double sin_frac = std::sin(std::numbers::pi * frac);
  const double taper_angle = std::numbers::pi * frac / (kHalfTaps + 1);
  const double cos_d = std::cos(taper_angle);
  const double sin_d = std::sin(taper_angle);
  for (int k = -kHalfTaps; k <= kHalfTaps; ++k) {
    const long n = origin + k;
    if (n < 0 || n >= size) continue;
    const double t = k - frac;
    const double sign = (k & 1) ? 1.0 : -1.0;  // -(-1)^k
    const double sinc = sign * sin_frac / (std::numbers::pi * t);
    // cos(pi t / (H+1)) = cos(a_k) cos(d) + sin(a_k) sin(d)
    const double c = tables.cos_k[k + kHalfTaps] * cos_d + tables.sin_k[k + kHalfTaps] * sin_d;
    taps[n] += amp * 0.5 * (1.0 + c) * sinc;
  }
}

// Bilinear-transform Butterworth high-pass, transposed direct form II.
void highpass_in_place(std::vector<double>& x, double cutoff_hz, double fs) {
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  const double b0 = norm, b1 = -2.0 * norm, b2 = norm;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
  double z1 = 0.0, z2 = 0.0;
  for (double& v : x) {
    const double in = v;
    const double out = b0 * in + z1;
    z1 = b1 * in - a1 * out + z2;
    z2 = b2 * in - a2 * out;
    v = out;
  }
}

}  // namespace

RoomImpulseResponse simulate_rir(const Vec3& room_dims, double beta, const Vec3& source_pos,
                                 const Vec3& mic_pos, int sample_rate_hz, double max_time_s,
                                 double highpass_hz) {
  if (sample_rate_hz <= 0) throw InvalidInput("sample rate must be positive");
  if (!(highpass_hz >= 0.0 && highpass_hz < 0.5 * sample_rate_hz))
    throw InvalidInput("high-pass cutoff must lie in [0, fs/2)");
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidInput("reflection coefficient must lie in [0, 1)");
  for (int k = 0; k < 3; ++k) {
    if (!(room_dims[k] > 0.0)) throw InvalidInput("room dimensions must be positive");
    if (!(source_pos[k] > 0.0 && source_pos[k] < room_dims[k]) ||
        !(mic_pos[k] > 0.0 && mic_pos[k] < room_dims[k]))
      throw InvalidInput("source and microphone must lie inside the room");
  }
  const double direct = distance(source_pos, mic_pos);
  if (direct <= 0.0) throw InvalidInput("source and microphone coincide");
  if (!(max_time_s > direct / kSpeedOfSound))
    throw InvalidInput("RIR horizon ends before the direct path arrives");

  static const KernelTables tables;
  const double fs = sample_rate_hz;
  const double max_dist = max_time_s * kSpeedOfSound;
  const std::size_t len = static_cast<std::size_t>(std::ceil(max_time_s * fs)) + kHalfTaps + 1;

  RoomImpulseResponse rir;
  rir.sample_rate_hz = sample_rate_hz;
  rir.taps.assign(len, 0.0);

  // Image coordinate along one axis: (1 - 2q) s + 2 m L with |m - q| + |m|
  // reflections, q in {0, 1}.
  struct AxisImage {
    double offset;  // image coordinate minus mic coordinate
    int reflections;
  };
  auto axis_images = [&](int axis) {
    const double l = room_dims[axis];
    const int order = static_cast<int>(std::ceil(max_dist / (2.0 * l))) + 1;
    std::vector<AxisImage> out;
    for (int m = -order; m <= order; ++m)
      for (int q = 0; q <= 1; ++q) {
        const double pos = (1 - 2 * q) * source_pos[axis] + 2.0 * m * l;
        const double offset = pos - mic_pos[axis];
        if (std::abs(offset) <= max_dist) out.push_back({offset, std::abs(m - q) + std::abs(m)});
      }
    return out;
  };
  const auto xs = axis_images(0);
  const auto ys = axis_images(1);
  const auto zs = axis_images(2);

  std::vector<double> beta_pow;
  auto beta_power = [&](int n) {
    while (static_cast<int>(beta_pow.size()) <= n)
      beta_pow.push_back(beta_pow.empty() ? 1.0 : beta_pow.back() * beta);
    return beta_pow[n];
  };

  const double max_dist_sq = max_dist * max_dist;
  for (const auto& ix : xs) {
    const double dx2 = ix.offset * ix.offset;
    for (const auto& iy : ys) {
      const double dxy2 = dx2 + iy.offset * iy.offset;
      if (dxy2 > max_dist_sq) continue;
      for (const auto& iz : zs) {
        const double d2 = dxy2 + iz.offset * iz.offset;
        if (d2 > max_dist_sq) continue;
        const int refl = ix.reflections + iy.reflections + iz.reflections;
        const double gain = refl == 0 ? 1.0 : beta_power(refl);
        if (gain == 0.0) continue;
        const double d = std::sqrt(d2);
        add_fractional_pulse(rir.taps, fs * d / kSpeedOfSound,
                             gain / (4.0 * std::numbers::pi * d), tables);
      }
    }
  }
  if (highpass_hz > 0.0) highpass_in_place(rir.taps, highpass_hz, fs);
  return rir;
}

FftConvolver::FftConvolver(std::span<const double> kernel) : kernel_len_(kernel.size()) {
  if (kernel.empty()) throw InvalidInput("convolution kernel is empty");
  fft_len_ = std::bit_ceil(std::max<std::size_t>(4 * kernel_len_, 1024));
  const signal::RealFft fft(fft_len_);
  std::vector<double> padded(fft_len_, 0.0);
  std::copy(kernel.begin(), kernel.end(), padded.begin());
  kernel_spectrum_.resize(fft.bins());
  fft.forward(padded, kernel_spectrum_);
}

std::vector<double> FftConvolver::apply(std::span<const double> signal) const {
  return apply(signal, signal.size() + kernel_len_ - 1);
}

std::vector<double> FftConvolver::apply(std::span<const double> signal, std::size_t out_len) const {
  if (signal.empty()) throw InvalidInput("convolution input is empty");
  out_len = std::min(out_len, signal.size() + kernel_len_ - 1);
  std::vector<double> out(out_len, 0.0);
  const signal::RealFft fft(fft_len_);
  const std::size_t block = fft_len_ - kernel_len_ + 1;
  std::vector<double> time(fft_len_);
  std::vector<std::complex<double>> freq(fft.bins());
  for (std::size_t start = 0; start < signal.size() && start < out_len; start += block) {
    const std::size_t n = std::min(block, signal.size() - start);
    std::fill(time.begin(), time.end(), 0.0);
    std::copy_n(signal.begin() + start, n, time.begin());
    fft.forward(time, freq);
    for (std::size_t k = 0; k < freq.size(); ++k) freq[k] *= kernel_spectrum_[k];
    fft.inverse(freq, time);
    const std::size_t valid = std::min(n + kernel_len_ - 1, out_len - start);
    for (std::size_t i = 0; i < valid; ++i) out[start + i] += time[i];
  }
  return out;
}

std::vector<double> convolve(std::span<const double> signal, std::span<const double> kernel) {
  if (signal.empty() || kernel.empty()) throw InvalidInput("convolution inputs must be nonempty");
  // Short kernels: direct summation is exact and cheaper.
  if (std::min(signal.size(), kernel.size()) <= 64) {
    std::vector<double> out(signal.size() + kernel.size() - 1, 0.0);
    for (std::size_t i = 0; i < signal.size(); ++i)
      for (std::size_t k = 0; k < kernel.size(); ++k) out[i + k] += signal[i] * kernel[k];
    return out;
  }
  if (kernel.size() > signal.size()) std::swap(signal, kernel);
  return FftConvolver(kernel).apply(signal);
}

std::vector<double> convolve(std::span<const double> signal, const RoomImpulseResponse& rir) {
  return convolve(signal, std::span<const double>(rir.taps));
}

}  // namespace retm::room
