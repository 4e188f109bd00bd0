#include "retm/separation/oracle.hpp"

#include <cmath>
#include <random>

#include "retm/error.hpp"

namespace retm::separation {

namespace {

numerics::ComplexMatrix random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  numerics::ComplexMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      m(r, c) = {re, im};
    }
  return m;
}

void fill(signal::Spectrogram& spec, std::size_t bin, const numerics::ComplexMatrix& m) {
  for (Eigen::Index c = 0; c < m.rows(); ++c)
    for (Eigen::Index t = 0; t < m.cols(); ++t)
      spec(bin, static_cast<std::size_t>(t), static_cast<std::size_t>(c)) = m(c, t);
}

}  // namespace

MultiplicativeScene synth_multiplicative_scene(std::size_t sources, std::size_t q_a, std::size_t q_b,
                                               std::size_t bins, std::size_t frames,
                                               std::uint64_t seed) {
  if (sources == 0 || q_a == 0 || q_b == 0) throw InvalidInput("source and group counts must be positive");
  if (q_b < sources) throw InvalidInput("Q_B must be at least the number of sources");
  if (frames < sources) throw InvalidInput("frames must be at least the number of sources");
  if (bins < 2) throw InvalidInput("at least two bins are required");

  const std::size_t fft_len = 2 * (bins - 1);
  const signal::StftParams params{fft_len, fft_len / 2, signal::WindowKind::SqrtHann, fft_len};
  const std::size_t origin = (frames - 1) * params.hop + params.window_len;

  MultiplicativeScene scene{{}, {}, signal::Spectrogram(frames, q_a, params, 16000, origin),
                            signal::Spectrogram(frames, q_b, params, 16000, origin)};
  std::mt19937_64 rng(seed);
  const auto l = static_cast<Eigen::Index>(sources);
  for (std::size_t bin = 0; bin < bins; ++bin) {
    auto h_a = random_complex(static_cast<Eigen::Index>(q_a), l, rng);
    auto h_b = random_complex(static_cast<Eigen::Index>(q_b), l, rng);
    auto s = random_complex(l, static_cast<Eigen::Index>(frames), rng);
    fill(scene.spec_a, bin, h_a * s);
    fill(scene.spec_b, bin, h_b * s);
    scene.transfer.h_a.push_back(std::move(h_a));
    scene.transfer.h_b.push_back(std::move(h_b));
    scene.sources.push_back(std::move(s));
  }
  return scene;
}

}  // namespace retm::separation
