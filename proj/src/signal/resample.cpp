#include "retm/signal/resample.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "retm/error.hpp"
#include "retm/parallel.hpp"

namespace retm::signal {

namespace {

std::vector<double> lowpass_kernel(int factor) {
  const int half = 48 * factor;
  const int taps = 2 * half + 1;
  const double cutoff = 0.9 * 0.5 / factor;  // cycles/sample at the input rate
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int k = 0; k < taps; ++k) {
    const double m = k - half;
    const double sinc =
        m == 0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * m) / (std::numbers::pi * m);
    const double phase = 2.0 * std::numbers::pi * k / (taps - 1);
    const double blackman = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    h[k] = sinc * blackman;
    sum += h[k];
  }
  for (double& v : h) v /= sum;  // unity DC gain
  return h;
}

}  // namespace

AudioBuffer decimate(const AudioBuffer& buffer, int factor) {
  if (factor < 1) throw InvalidInput("decimation factor must be >= 1");
  if (factor == 1) return buffer;
  if (buffer.sample_rate_hz() % factor != 0)
    throw UnsupportedRate("sample rate " + std::to_string(buffer.sample_rate_hz()) +
                          " is not divisible by " + std::to_string(factor));

  const auto h = lowpass_kernel(factor);
  const long half = static_cast<long>(h.size() / 2);
  const std::size_t out_len = (buffer.length() + factor - 1) / factor;
  AudioBuffer out(buffer.channels(), out_len, buffer.sample_rate_hz() / factor);
  parallel_for(buffer.channels(), [&](std::size_t c) {
    const auto x = buffer.channel(c);
    auto y = out.channel(c);
    const long len = static_cast<long>(x.size());
    for (std::size_t m = 0; m < out_len; ++m) {
      const long center = static_cast<long>(m) * factor;
      double acc = 0.0;
      for (long k = 0; k < static_cast<long>(h.size()); ++k) {
        const long n = center + half - k;
        if (n >= 0 && n < len) acc += h[k] * x[n];
      }
      y[m] = acc;
    }
  });
  return out;
}

}  // namespace retm::signal
