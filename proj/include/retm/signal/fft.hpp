#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace retm::signal {

// Real-input FFT of fixed size backed by FFTW. Plans are cached per size and
// shared; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // in.size() == size(), out.size() == bins(). Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // in.size() == bins(), out.size() == size(). Scaled by 1/size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

  struct Plans;

 private:
  std::size_t n_;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace retm::signal
