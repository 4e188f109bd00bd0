#include "retm/separation/retm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "retm/error.hpp"
#include "retm/parallel.hpp"

namespace retm::separation {

void GroupAssignment::validate(std::size_t channel_count) const {
  if (group_a.empty() || group_b.empty()) throw InvalidInput("groups A and B must both be nonempty");
  std::set<std::size_t> seen;
  for (const auto* group : {&group_a, &group_b})
    for (std::size_t c : *group) {
      if (c >= channel_count)
        throw InvalidInput("group channel " + std::to_string(c) + " exceeds channel count " +
                           std::to_string(channel_count));
      if (!seen.insert(c).second)
        throw InvalidInput("channel " + std::to_string(c) + " assigned more than once");
    }
}

GroupAssignment GroupAssignment::contiguous(std::size_t q_a, std::size_t q_b) {
  GroupAssignment g;
  for (std::size_t i = 0; i < q_a; ++i) g.group_a.push_back(i);
  for (std::size_t i = 0; i < q_b; ++i) g.group_b.push_back(q_a + i);
  return g;
}

void SegmentSpec::validate(double recording_duration_s, const signal::StftParams& params,
                           int sample_rate_hz) const {
  for (const auto* seg : {&t1, &t2}) {
    if (!(seg->start_s >= 0.0) || !(seg->end_s > seg->start_s))
      throw InvalidInput("segment must be a nonempty interval starting at or after 0 s");
    if (seg->end_s > recording_duration_s + 1e-9)
      throw InvalidInput("segment extends past the end of the recording");
  }
  if (t1.start_s < t2.end_s && t2.start_s < t1.end_s) throw InvalidInput("segments T1 and T2 overlap");
  const double window_s = static_cast<double>(params.window_len) / sample_rate_hz;
  if (t1.duration_s() + 1e-12 < window_s) throw InvalidInput("T1 is shorter than one STFT window");
}

std::size_t ReTMStack::fallback_count() const {
  return static_cast<std::size_t>(
      std::count_if(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.fallback; }));
}

ReTMStack estimate_retm(const signal::Spectrogram& spec_a, const signal::Spectrogram& spec_b,
                        FrameRange t1_frames, const EstimateOptions& options) {
  numerics::check_compatible(spec_a, spec_b, t1_frames);
  const std::size_t q_a = spec_a.channels();
  const std::size_t q_b = spec_b.channels();
  const std::size_t frames = t1_frames.size();
  if (frames < q_a)
    throw InvalidInput("T1 has " + std::to_string(frames) + " frames; at least Q_A = " +
                       std::to_string(q_a) + " are required");

  ReTMStack stack;
  stack.target_id = options.target_id;
  stack.frame_count = frames;
  stack.rcond_used = options.rcond;
  if (frames < 5 * std::max(q_a, q_b))
    stack.warnings.push_back("T1 spans only " + std::to_string(frames) +
                             " frames (< 5 max(Q_A, Q_B)); covariance estimates may be unstable");

  const std::size_t bins = spec_a.bins();
  stack.matrices.resize(bins);
  stack.diagnostics.resize(bins);
  parallel_for(bins, [&](std::size_t bin) {
    const auto cov = numerics::covariance_from_snapshots(numerics::bin_snapshot(spec_a, bin, t1_frames),
                                                         numerics::bin_snapshot(spec_b, bin, t1_frames));
    numerics::PseudoinverseResult pinv;
    double condition = 0.0;
    try {
      pinv = numerics::pseudoinverse_svd(cov.p_ba, options.rcond);
      condition = numerics::condition_number(cov.p_ba);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(e.what(), static_cast<long>(bin));
    }
    auto& diag = stack.diagnostics[bin];
    diag.condition = condition;
    diag.effective_condition = pinv.effective_condition();
    diag.rank = pinv.rank;
    diag.fallback = !(diag.effective_condition <= options.fallback_condition);
    if (diag.fallback)
      stack.matrices[bin] = ComplexMatrix::Zero(static_cast<Eigen::Index>(q_a), static_cast<Eigen::Index>(q_b));
    else
      stack.matrices[bin] = cov.p_aa * pinv.inverse;
  });
  return stack;
}

signal::Spectrogram apply_separation(const signal::Spectrogram& spec_a,
                                     const signal::Spectrogram& spec_b, const ReTMStack& retm,
                                     FrameRange t2_frames) {
  numerics::check_compatible(spec_a, spec_b, t2_frames);
  const std::size_t bins = spec_a.bins();
  if (retm.bins() != bins) throw InvalidInput("ReTM bin count does not match the spectrograms");
  const auto q_a = static_cast<Eigen::Index>(spec_a.channels());
  const auto q_b = static_cast<Eigen::Index>(spec_b.channels());
  for (const auto& r : retm.matrices)
    if (r.rows() != q_a || r.cols() != q_b)
      throw InvalidInput("ReTM matrix shape does not match the group sizes");

  auto out = spec_a.slice_frames(t2_frames.begin, t2_frames.end);
  if (t2_frames.begin == 0 && t2_frames.end == spec_a.frames())
    out = spec_a;  // keeps origin_len for exact-length synthesis

  parallel_for(bins, [&](std::size_t bin) {
    const auto& r = retm.matrices[bin];
    if (r.isZero(0.0)) return;
    const auto m_b = numerics::bin_snapshot(spec_b, bin, t2_frames);
    const ComplexMatrix predicted = r * m_b;
    for (Eigen::Index c = 0; c < q_a; ++c)
      for (std::size_t t = 0; t < t2_frames.size(); ++t)
        out(bin, t, static_cast<std::size_t>(c)) -= predicted(c, static_cast<Eigen::Index>(t));
  });
  return out;
}

}  // namespace retm::separation
