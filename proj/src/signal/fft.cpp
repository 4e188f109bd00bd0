#include "retm/signal/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "retm/error.hpp"

namespace retm::signal {

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

namespace {

// The FFTW planner is not thread-safe; plan creation is serialized here.
// FFTW_ESTIMATE keeps plan selection deterministic across runs.
std::shared_ptr<const RealFft::Plans> plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const RealFft::Plans>> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  auto plans = std::make_shared<RealFft::Plans>();
  const int size = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  plans->forward = fftw_plan_dft_r2c_1d(size, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans->inverse = fftw_plan_dft_c2r_1d(size, cplx, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(real);
  fftw_free(cplx);
  if (!plans->forward || !plans->inverse) throw NumericalFailure("FFTW plan creation failed");
  cache.emplace(n, plans);
  return plans;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw InvalidInput("FFT size must be at least 2");
  plans_ = plans_for(n);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != bins()) throw InvalidInput("FFT buffer size mismatch");
  std::vector<double> scratch(in.begin(), in.end());
  fftw_execute_dft_r2c(plans_->forward, scratch.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) throw InvalidInput("FFT buffer size mismatch");
  // c2r overwrites its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

}  // namespace retm::signal
