#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "retm/error.hpp"
#include "retm/room/render.hpp"
#include "retm/room/synth_signals.hpp"
#include "retm/separation/oracle.hpp"
#include "retm/separation/pipeline.hpp"
#include "retm/separation/retm.hpp"
#include "retm/separation/retm_io.hpp"

using namespace retm;
using numerics::ComplexMatrix;
using separation::FrameRange;

namespace {

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

double spec_energy(const signal::Spectrogram& s) {
  double e = 0.0;
  for (auto v : s.data()) e += std::norm(v);
  return e;
}

// Spectrograms of the chosen source columns: M = H[:, cols] S[cols, :].
std::pair<signal::Spectrogram, signal::Spectrogram> observe(const separation::MultiplicativeScene& sc,
                                                            const std::vector<Eigen::Index>& cols) {
  std::vector<ComplexMatrix> a, b;
  for (std::size_t k = 0; k < sc.sources.size(); ++k) {
    ComplexMatrix ma = ComplexMatrix::Zero(sc.transfer.h_a[k].rows(), sc.sources[k].cols());
    ComplexMatrix mb = ComplexMatrix::Zero(sc.transfer.h_b[k].rows(), sc.sources[k].cols());
    for (auto c : cols) {
      ma += sc.transfer.h_a[k].col(c) * sc.sources[k].row(c);
      mb += sc.transfer.h_b[k].col(c) * sc.sources[k].row(c);
    }
    a.push_back(ma);
    b.push_back(mb);
  }
  return {oracle::spectrogram_from(a), oracle::spectrogram_from(b)};
}

ComplexMatrix bin_matrix(const signal::Spectrogram& s, std::size_t bin, FrameRange r) {
  ComplexMatrix m(static_cast<Eigen::Index>(s.channels()), static_cast<Eigen::Index>(r.size()));
  for (std::size_t c = 0; c < s.channels(); ++c)
    for (std::size_t t = r.begin; t < r.end; ++t)
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t - r.begin)) = s(bin, t, c);
  return m;
}

separation::ReTMStack zero_stack(std::size_t bins, std::size_t q_a, std::size_t q_b) {
  separation::ReTMStack st;
  st.matrices.assign(bins, ComplexMatrix::Zero(static_cast<Eigen::Index>(q_a), static_cast<Eigen::Index>(q_b)));
  return st;
}

// Small reverberant room: two talkers and a fan seen by eight microphones.
struct SmallRoom {
  room::SceneConfig scene;
  std::vector<signal::AudioBuffer> images;  // per source, 8 channels
  static constexpr int kRate = 16000;

  explicit SmallRoom(double seconds) {
    scene.room_dims = {4.0, 5.0, 2.8};
    scene.t60_s = 0.2;
    scene.sources = {{{1.2, 1.5, 1.4}, room::SourceRole::Speech, "talker_a", 0.0},
                     {{2.8, 3.6, 1.4}, room::SourceRole::Speech, "talker_b", 0.0},
                     {{3.4, 0.8, 2.2}, room::SourceRole::Noise, "fan", 0.0}};
    scene.microphones = {{1.0, 3.0, 1.1}, {1.5, 3.2, 1.5}, {2.0, 2.6, 1.2}, {2.6, 2.0, 1.6},
                         {3.1, 2.9, 1.0}, {0.7, 4.2, 1.8}, {3.5, 4.4, 1.3}, {2.2, 4.6, 2.0}};
    const room::SceneRenderer renderer(scene);
    const room::SynthKind kinds[] = {room::SynthKind::Speech, room::SynthKind::Speech, room::SynthKind::Hum};
    const auto len = static_cast<std::size_t>(seconds * kRate);
    for (std::size_t s = 0; s < 3; ++s)
      images.push_back(renderer.source_image(s, room::synthesize(kinds[s], seconds, kRate, 40 + s), len));
  }

  signal::AudioBuffer sum(const std::vector<std::size_t>& which, std::size_t begin, std::size_t end) const {
    signal::AudioBuffer out(8, end - begin, kRate);
    for (auto s : which) out += images[s].slice(begin, end);
    return out;
  }
};

double rms(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(x.size()));
}

double correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return std::abs(ab) / std::sqrt(aa * bb);
}

const separation::GroupAssignment kSmallGroups{{0, 1, 2}, {3, 4, 5, 6, 7}};

}  // namespace

TEST(EstimateRetm, NoiselessMixtureRecoversTransferRatio) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sc = separation::synth_multiplicative_scene(2, 3, 3, 9, 60, seed);
    const auto st = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 60});
    ASSERT_EQ(st.bins(), 9u);
    EXPECT_EQ(st.frame_count, 60u);
    for (std::size_t k = 0; k < st.bins(); ++k)
      EXPECT_LT(rel(st.matrices[k] * sc.transfer.h_b[k], sc.transfer.h_a[k]), 1e-8) << "bin " << k;
  }
}

TEST(EstimateRetm, SingleSourceScalarRatio) {
  const auto sc = separation::synth_multiplicative_scene(1, 1, 1, 5, 20, 9);
  const auto st = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 20});
  for (std::size_t k = 0; k < st.bins(); ++k) {
    const auto expected = sc.transfer.h_a[k](0, 0) / sc.transfer.h_b[k](0, 0);
    EXPECT_LT(std::abs(st.matrices[k](0, 0) - expected), 1e-10 * std::abs(expected));
  }
}

TEST(EstimateRetm, SilentTrainingGivesZeroMatrices) {
  const std::vector<ComplexMatrix> za(4, ComplexMatrix::Zero(2, 12)), zb(4, ComplexMatrix::Zero(3, 12));
  const auto st = separation::estimate_retm(oracle::spectrogram_from(za), oracle::spectrogram_from(zb), {0, 12});
  for (std::size_t k = 0; k < st.bins(); ++k) {
    EXPECT_EQ(st.matrices[k].norm(), 0.0);
    EXPECT_TRUE(std::isinf(st.diagnostics[k].condition));
    EXPECT_EQ(st.diagnostics[k].rank, 0u);
  }
}

TEST(EstimateRetm, ConditionDiagnosticsMatchCovariance) {
  const auto sc = separation::synth_multiplicative_scene(3, 4, 5, 5, 30, 4);
  const auto st = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 30});
  for (std::size_t k = 0; k < st.bins(); ++k) {
    const ComplexMatrix ma = bin_matrix(sc.spec_a, k, {0, 30});
    const ComplexMatrix mb = bin_matrix(sc.spec_b, k, {0, 30});
    const ComplexMatrix p_ba = mb * ma.adjoint() / 30.0;
    const Eigen::JacobiSVD<ComplexMatrix> svd(p_ba);
    const auto sv = svd.singularValues();
    // Rank 3 of a 5 x 4 matrix: the full-spectrum condition number is huge.
    EXPECT_GT(st.diagnostics[k].condition, 1e8);
    EXPECT_EQ(st.diagnostics[k].rank, 3u);
    EXPECT_NEAR(st.diagnostics[k].effective_condition, sv(0) / sv(2), 1e-6 * sv(0) / sv(2));
    EXPECT_FALSE(st.diagnostics[k].fallback);
  }
}

TEST(EstimateRetm, ShortTrainingWarnsAndTooShortThrows) {
  const auto sc = separation::synth_multiplicative_scene(2, 3, 4, 3, 30, 5);
  EXPECT_TRUE(separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 30}).warnings.empty());
  EXPECT_FALSE(separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 8}).warnings.empty());
  EXPECT_THROW(separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 2}), InvalidInput);
  EXPECT_THROW(separation::estimate_retm(sc.spec_a, sc.spec_b, {5, 5}), InvalidInput);
  EXPECT_THROW(separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 31}), InvalidInput);
}

TEST(EstimateRetm, ScaleInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sc = separation::synth_multiplicative_scene(2, 3, 4, 4, 25, 100 + trial);
    const std::complex<double> c{u(rng), u(rng)};
    auto a = sc.spec_a, b = sc.spec_b;
    a *= c;
    b *= c;
    const auto base = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 25});
    const auto scaled = separation::estimate_retm(a, b, {0, 25});
    auto b_only = sc.spec_b;
    b_only *= c;
    const auto rescaled_b = separation::estimate_retm(sc.spec_a, b_only, {0, 25});
    for (std::size_t k = 0; k < base.bins(); ++k) {
      EXPECT_LT(rel(scaled.matrices[k], base.matrices[k]), 1e-9);
      EXPECT_LT(rel(rescaled_b.matrices[k] * c, base.matrices[k]), 1e-9);
    }
  }
}

TEST(ApplySeparation, CancelsUndesiredSourcesCompletely) {
  const auto sc = separation::synth_multiplicative_scene(3, 4, 5, 9, 90, 21);
  const auto st = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 60});
  const auto out = separation::apply_separation(sc.spec_a, sc.spec_b, st, {60, 90});
  EXPECT_EQ(out.channels(), 4u);
  EXPECT_EQ(out.frames(), 30u);
  EXPECT_LE(spec_energy(out), 1e-16 * spec_energy(sc.spec_a.slice_frames(60, 90)));
}

TEST(ApplySeparation, TargetOnlyOutputIsDistortionTerm) {
  // Source 0 is the target, sources 1 and 2 are undesired.
  const auto sc = separation::synth_multiplicative_scene(3, 3, 4, 7, 50, 31);
  const auto [ta, tb] = observe(sc, {1, 2});
  const auto [xa, xb] = observe(sc, {0});
  const auto st = separation::estimate_retm(ta, tb, {0, 50});
  const auto out = separation::apply_separation(xa, xb, st, {10, 40});
  for (std::size_t k = 0; k < st.bins(); ++k) {
    const ComplexMatrix distortion = sc.transfer.h_a[k].col(0) - st.matrices[k] * sc.transfer.h_b[k].col(0);
    const ComplexMatrix expected = distortion * sc.sources[k].row(0).segment(10, 30);
    EXPECT_LT(rel(bin_matrix(out, k, {0, 30}), expected), 1e-10) << "bin " << k;
    // The target survives: the distortion term is not cancelled.
    EXPECT_GT(distortion.norm(), 1e-3);
  }
}

TEST(ApplySeparation, ZeroRetmPassesGroupAThrough) {
  const auto sc = separation::synth_multiplicative_scene(2, 3, 2, 5, 20, 41);
  const auto out = separation::apply_separation(sc.spec_a, sc.spec_b, zero_stack(5, 3, 2), {4, 16});
  const auto expected = sc.spec_a.slice_frames(4, 16);
  ASSERT_EQ(out.data().size(), expected.data().size());
  for (std::size_t i = 0; i < out.data().size(); ++i) EXPECT_EQ(out.data()[i], expected.data()[i]);
}

TEST(ApplySeparation, LinearInMixture) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto sc = separation::synth_multiplicative_scene(3, 3, 4, 5, 40, 200 + seed);
    const auto [a1, b1] = observe(sc, {0});
    const auto [a2, b2] = observe(sc, {1});
    const auto st = separation::estimate_retm(a2, b2, {0, 40});
    const auto y1 = separation::apply_separation(a1, b1, st, {0, 40});
    const auto y2 = separation::apply_separation(a2, b2, st, {0, 40});
    const auto [a, b] = observe(sc, {0, 1});
    const auto y = separation::apply_separation(a, b, st, {0, 40});
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < y.data().size(); ++i) {
      err += std::norm(y.data()[i] - y1.data()[i] - y2.data()[i]);
      ref += std::norm(y.data()[i]);
    }
    EXPECT_LT(std::sqrt(err / ref), 1e-10);
  }
}

TEST(ApplySeparation, ShapeErrors) {
  const auto sc = separation::synth_multiplicative_scene(2, 3, 2, 5, 20, 51);
  EXPECT_THROW(separation::apply_separation(sc.spec_a, sc.spec_b, zero_stack(4, 3, 2), {0, 20}), InvalidInput);
  EXPECT_THROW(separation::apply_separation(sc.spec_a, sc.spec_b, zero_stack(5, 2, 2), {0, 20}), InvalidInput);
  EXPECT_THROW(separation::apply_separation(sc.spec_a, sc.spec_b, zero_stack(5, 3, 2), {10, 21}), InvalidInput);
}

TEST(SynthMultiplicativeScene, ObeysModelAndValidates) {
  const auto sc = separation::synth_multiplicative_scene(2, 3, 4, 6, 15, 61);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_LT(rel(bin_matrix(sc.spec_a, k, {0, 15}), sc.transfer.h_a[k] * sc.sources[k]), 1e-15);
    EXPECT_LT(rel(bin_matrix(sc.spec_b, k, {0, 15}), sc.transfer.h_b[k] * sc.sources[k]), 1e-15);
  }
  const auto again = separation::synth_multiplicative_scene(2, 3, 4, 6, 15, 61);
  EXPECT_EQ(rel(again.transfer.h_a[3], sc.transfer.h_a[3]), 0.0);
  EXPECT_THROW(separation::synth_multiplicative_scene(3, 2, 2, 6, 15, 1), InvalidInput);
  EXPECT_THROW(separation::synth_multiplicative_scene(2, 2, 2, 6, 1, 1), InvalidInput);
  EXPECT_THROW(separation::synth_multiplicative_scene(1, 2, 2, 1, 5, 1), InvalidInput);
}

TEST(GroupAssignment, Validation) {
  EXPECT_NO_THROW(kSmallGroups.validate(8));
  EXPECT_THROW(kSmallGroups.validate(7), InvalidInput);
  EXPECT_THROW((separation::GroupAssignment{{0, 1}, {1, 2}}.validate(4)), InvalidInput);
  EXPECT_THROW((separation::GroupAssignment{{}, {1, 2}}.validate(4)), InvalidInput);
  const auto g = separation::GroupAssignment::contiguous(2, 3);
  EXPECT_EQ(g.group_a, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(g.group_b, (std::vector<std::size_t>{2, 3, 4}));
}

TEST(SeparateSpeaker, HeldOutUndesiredOnlyMixtureIsSuppressed) {
  // Instantaneous mixing satisfies the per-bin multiplicative model, so the
  // held-out undesired-only frames should cancel. Training on the first 16 s,
  // mixture from the following 4 s, target silent.
  const int fs = 16000;
  const std::size_t len = 20 * fs, split = 16 * fs;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  signal::AudioBuffer all(8, len, fs);
  const room::SynthKind kinds[] = {room::SynthKind::Speech, room::SynthKind::Broadband};
  for (std::size_t s = 0; s < 2; ++s) {
    const auto x = room::synthesize(kinds[s], 20.0, fs, 60 + s);
    for (std::size_t m = 0; m < 8; ++m) {
      const double gain = g(rng);
      for (std::size_t i = 0; i < len; ++i) all.channel(m)[i] += gain * x.channel(0)[i];
    }
  }
  const auto out = separation::separate_speaker(all.slice(split, len), all.slice(0, split), kSmallGroups,
                                                signal::StftParams::with_window(4096));
  ASSERT_EQ(out.channels(), 1u);
  ASSERT_EQ(out.length(), len - split);
  EXPECT_LE(rms(out.channel(0)), 0.05 * rms(all.slice(split, len).channel(0)));
}

TEST(SeparateSpeaker, SilentTrainingPassesThrough) {
  const SmallRoom room(3.0);
  const auto mixture = room.sum({0}, 0, 3 * SmallRoom::kRate);
  const signal::AudioBuffer silence(8, 3 * SmallRoom::kRate, SmallRoom::kRate);
  const auto out = separation::separate_speaker(mixture, silence, kSmallGroups,
                                                signal::StftParams::with_window(1024), numerics::kDefaultRcond, 1);
  const auto ref = mixture.channel(1);
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(out.channel(0)[i] - ref[i]));
  EXPECT_LT(err, 1e-10 * *std::max_element(ref.begin(), ref.end()));
}

TEST(SeparateSpeaker, Errors) {
  const auto mix = oracle::random_buffer(8, 8192, 1);
  const auto params = signal::StftParams::with_window(512);
  EXPECT_THROW(separation::separate_speaker(mix, mix, kSmallGroups, params, numerics::kDefaultRcond, 3),
               InvalidInput);
  EXPECT_THROW(separation::separate_speaker(mix, oracle::random_buffer(7, 8192, 2), kSmallGroups, params),
               InvalidInput);
  EXPECT_THROW(separation::separate_speaker(mix, oracle::random_buffer(8, 8192, 2, 8000), kSmallGroups, params),
               InvalidInput);
}

TEST(SeparateAll, MatchesPerSpeakerAndFindsOwnTarget) {
  const SmallRoom room(20.0);
  const auto params = signal::StftParams::with_window(4096);
  const std::size_t split = 16 * SmallRoom::kRate, end = 20 * SmallRoom::kRate;
  const auto mixture = room.sum({0, 1, 2}, split, end);
  const std::vector<signal::AudioBuffer> training{room.sum({1, 2}, 0, split), room.sum({0, 2}, 0, split)};
  const auto outs = separation::separate_all(mixture, training, kSmallGroups, params);
  ASSERT_EQ(outs.size(), 2u);

  const auto single = separation::separate_speaker(mixture, training[0], kSmallGroups, params);
  const auto one = separation::separate_all(mixture, {training[0]}, kSmallGroups, params);
  ASSERT_EQ(one.size(), 1u);
  for (std::size_t i = 0; i < single.length(); ++i) ASSERT_EQ(one[0].channel(0)[i], single.channel(0)[i]);

  for (std::size_t target = 0; target < 2; ++target) {
    std::vector<double> corr;
    for (std::size_t s = 0; s < 3; ++s)
      corr.push_back(correlation(outs[target].channel(0), room.images[s].slice(split, end).channel(0)));
    EXPECT_EQ(std::max_element(corr.begin(), corr.end()) - corr.begin(), static_cast<long>(target))
        << corr[0] << " " << corr[1] << " " << corr[2];
  }
  EXPECT_THROW(separation::separate_all(mixture, {}, kSmallGroups, params), InvalidInput);
}

TEST(RetmIo, RoundTripAndDiagnostics) {
  const auto sc = separation::synth_multiplicative_scene(2, 3, 4, 6, 30, 71);
  separation::EstimateOptions opts;
  opts.target_id = 3;
  auto st = separation::estimate_retm(sc.spec_a, sc.spec_b, {0, 30}, opts);
  std::stringstream buf;
  separation::write_retm(buf, st);
  EXPECT_EQ(buf.str().size(), 4 + 4 * 4 + 8 + 4 + 6 * 3 * 4 * 8u);
  EXPECT_EQ(buf.str().substr(0, 4), "RETM");
  const auto back = separation::read_retm(buf);
  EXPECT_EQ(back.target_id, 3);
  EXPECT_EQ(back.rcond_used, st.rcond_used);
  ASSERT_EQ(back.bins(), st.bins());
  for (std::size_t k = 0; k < st.bins(); ++k) EXPECT_LT(rel(back.matrices[k], st.matrices[k]), 1e-6);

  const auto dir = std::filesystem::temp_directory_path() / "retm_io_test";
  std::filesystem::create_directories(dir);
  separation::save_retm(dir / "r.retm", st);
  EXPECT_EQ(separation::load_retm(dir / "r.retm").bins(), 6u);
  EXPECT_THROW(separation::load_retm(dir / "missing.retm"), IoError);

  std::stringstream bad("RETX0000");
  EXPECT_THROW(separation::read_retm(bad), IoError);
  std::stringstream truncated(buf.str().substr(0, 40));
  EXPECT_THROW(separation::read_retm(truncated), IoError);

  const std::vector<ComplexMatrix> z(3, ComplexMatrix::Zero(2, 10));
  const auto zero = separation::estimate_retm(oracle::spectrogram_from(z), oracle::spectrogram_from(z), {0, 10});
  const auto j = separation::diagnostics_json(zero);
  EXPECT_EQ(j["per_bin"][0]["condition"], "inf");
  EXPECT_EQ(j["bins"], 3);
  EXPECT_EQ(j["frame_count"], 10);
  EXPECT_EQ(j["condition_histogram"][0]["log10_condition"], "inf");
  EXPECT_EQ(j["condition_histogram"][0]["bins"], 3);
}
