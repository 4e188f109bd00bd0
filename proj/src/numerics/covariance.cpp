#include "retm/numerics/covariance.hpp"

#include "retm/error.hpp"
#include "retm/parallel.hpp"

namespace retm::numerics {

void check_compatible(const signal::Spectrogram& spec_a, const signal::Spectrogram& spec_b,
                      FrameRange range) {
  if (spec_a.params() != spec_b.params() || spec_a.bins() != spec_b.bins() ||
      spec_a.frames() != spec_b.frames())
    throw InvalidInput("spectrograms of groups A and B differ in parameters or frame count");
  if (range.size() == 0) throw InvalidInput("frame range is empty");
  if (range.end > spec_a.frames()) throw InvalidInput("frame range exceeds spectrogram length");
}

ComplexMatrix bin_snapshot(const signal::Spectrogram& spec, std::size_t bin, FrameRange range) {
  ComplexMatrix snap(static_cast<Eigen::Index>(spec.channels()),
                     static_cast<Eigen::Index>(range.size()));
  for (std::size_t c = 0; c < spec.channels(); ++c)
    for (std::size_t t = 0; t < range.size(); ++t)
      snap(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = spec(bin, range.begin + t, c);
  return snap;
}

CovariancePair covariance_from_snapshots(const ComplexMatrix& snap_a, const ComplexMatrix& snap_b) {
  if (snap_a.cols() != snap_b.cols() || snap_a.cols() == 0)
    throw InvalidInput("snapshot matrices must share a nonzero frame count");
  const double inv_t = 1.0 / static_cast<double>(snap_a.cols());
  CovariancePair pair;
  pair.frame_count = static_cast<std::size_t>(snap_a.cols());
  pair.p_aa = (snap_a * snap_a.adjoint()) * inv_t;
  pair.p_ba = (snap_b * snap_a.adjoint()) * inv_t;
  // Exact Hermitian symmetry regardless of the product kernel's rounding.
  pair.p_aa = (0.5 * (pair.p_aa + pair.p_aa.adjoint())).eval();
  return pair;
}

std::vector<CovariancePair> cross_covariance(const signal::Spectrogram& spec_a,
                                             const signal::Spectrogram& spec_b, FrameRange range) {
  check_compatible(spec_a, spec_b, range);
  std::vector<CovariancePair> out(spec_a.bins());
  parallel_for(spec_a.bins(), [&](std::size_t bin) {
    out[bin] = covariance_from_snapshots(bin_snapshot(spec_a, bin, range),
                                         bin_snapshot(spec_b, bin, range));
  });
  return out;
}

}  // namespace retm::numerics
