#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "retm/numerics/covariance.hpp"
#include "retm/numerics/linalg.hpp"
#include "retm/signal/stft.hpp"

namespace retm::separation {

using numerics::ComplexMatrix;
using numerics::FrameRange;

// Disjoint microphone groups. Group B drives the prediction of the undesired
// field at group A.
struct GroupAssignment {
  std::vector<std::size_t> group_a;
  std::vector<std::size_t> group_b;

  std::size_t q_a() const noexcept { return group_a.size(); }
  std::size_t q_b() const noexcept { return group_b.size(); }

  // Throws InvalidInput unless both groups are nonempty, disjoint, free of
  // duplicates and below channel_count.
  void validate(std::size_t channel_count) const;

  // First q_a channels to A, next q_b channels to B.
  static GroupAssignment contiguous(std::size_t q_a, std::size_t q_b);
};

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const noexcept { return end_s - start_s; }
};

// T1: only the undesired sources are active. T2: mixture including the target.
struct SegmentSpec {
  TimeInterval t1;
  TimeInterval t2;

  // Checks ordering, overlap, bounds, and that T1 spans at least one window.
  void validate(double recording_duration_s, const signal::StftParams& params,
                int sample_rate_hz) const;
};

struct BinDiagnostics {
  double condition = 0.0;            // condition_number(P_BA)
  double effective_condition = 0.0;  // over the singular values kept by rcond
  std::size_t rank = 0;
  bool fallback = false;             // R forced to zero
};

// Per-bin Q_A x Q_B relative transfer matrices estimated for one target.
struct ReTMStack {
  std::vector<ComplexMatrix> matrices;
  int target_id = 0;
  std::size_t frame_count = 0;
  double rcond_used = numerics::kDefaultRcond;
  std::vector<BinDiagnostics> diagnostics;
  std::vector<std::string> warnings;

  std::size_t bins() const noexcept { return matrices.size(); }
  std::size_t q_a() const noexcept { return matrices.empty() ? 0 : matrices.front().rows(); }
  std::size_t q_b() const noexcept { return matrices.empty() ? 0 : matrices.front().cols(); }
  std::size_t fallback_count() const;
};

inline constexpr double kFallbackCondition = 1e8;

struct EstimateOptions {
  double rcond = numerics::kDefaultRcond;
  // Bins whose retained-spectrum condition number of P_BA exceeds this are
  // passed through (R = 0).
  double fallback_condition = kFallbackCondition;
  int target_id = 0;
};

// Per bin: R = P_AA pinv(P_BA) from covariances over the T1 frames.
// Requires T >= Q_A frames; warns when T < 5 max(Q_A, Q_B).
ReTMStack estimate_retm(const signal::Spectrogram& spec_a, const signal::Spectrogram& spec_b,
                        FrameRange t1_frames, const EstimateOptions& options = {});

// Per bin and frame: S = M_A - R M_B over the T2 frames. The result has Q_A
// channels and t2_frames.size() frames.
signal::Spectrogram apply_separation(const signal::Spectrogram& spec_a,
                                     const signal::Spectrogram& spec_b, const ReTMStack& retm,
                                     FrameRange t2_frames);

}  // namespace retm::separation
