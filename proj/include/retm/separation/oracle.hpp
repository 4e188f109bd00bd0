#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "retm/numerics/linalg.hpp"
#include "retm/signal/stft.hpp"

namespace retm::separation {

// Per-bin acoustic transfer matrices of a synthetic scene.
struct TransferMatrixSet {
  std::vector<numerics::ComplexMatrix> h_a;  // Q_A x L per bin
  std::vector<numerics::ComplexMatrix> h_b;  // Q_B x L per bin
};

// Noiseless scene obeying the multiplicative transfer-function model exactly:
// M_A = H_A S and M_B = H_B S in every bin and frame.
struct MultiplicativeScene {
  TransferMatrixSet transfer;
  std::vector<numerics::ComplexMatrix> sources;  // L x frames per bin
  signal::Spectrogram spec_a;
  signal::Spectrogram spec_b;
};

// Draws H_A, H_B and S with i.i.d. circular complex Gaussian entries. The
// spectrograms use fft_len = 2 (bins - 1) at a nominal 16 kHz.
// Requires Q_B >= L, frames >= L, bins >= 2.
MultiplicativeScene synth_multiplicative_scene(std::size_t sources, std::size_t q_a, std::size_t q_b,
                                               std::size_t bins, std::size_t frames,
                                               std::uint64_t seed);

}  // namespace retm::separation
