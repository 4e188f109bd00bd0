#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "retm/numerics/linalg.hpp"
#include "retm/signal/stft.hpp"

namespace retm::numerics {

// Half-open frame interval [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

// Time-averaged group covariances for one frequency bin:
//   p_aa = (1/T) sum_t m_a m_a^H   [Q_A x Q_A]
//   p_ba = (1/T) sum_t m_b m_a^H   [Q_B x Q_A]
struct CovariancePair {
  ComplexMatrix p_aa;
  ComplexMatrix p_ba;
  std::size_t frame_count = 0;
};

// Gathers one bin of a spectrogram over a frame range as a
// [channels x frames] matrix.
ComplexMatrix bin_snapshot(const signal::Spectrogram& spec, std::size_t bin, FrameRange range);

// Biased (1/T) estimator, no mean removal. Sums run in frame order.
CovariancePair covariance_from_snapshots(const ComplexMatrix& snap_a, const ComplexMatrix& snap_b);

// Per-bin covariance pairs over `range`. Throws InvalidInput on mismatched
// spectrogram shapes/params or an empty or out-of-bounds range.
std::vector<CovariancePair> cross_covariance(const signal::Spectrogram& spec_a,
                                             const signal::Spectrogram& spec_b, FrameRange range);

// Shape and range checks shared with the ReTM estimator.
void check_compatible(const signal::Spectrogram& spec_a, const signal::Spectrogram& spec_b,
                      FrameRange range);

}  // namespace retm::numerics
