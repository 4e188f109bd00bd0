#include <gtest/gtest.h>

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "retm/error.hpp"
#include "retm/metrics/bss.hpp"
#include "retm/metrics/report.hpp"
#include "retm/metrics/spectrogram_export.hpp"
#include "retm/room/render.hpp"
#include "retm/room/synth_signals.hpp"

using namespace retm;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(const std::vector<double>& x) { return std::sqrt(oracle::energy(x)); }

std::vector<double> sinusoid(std::size_t n, double cycles, bool sine) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * cycles * static_cast<double>(k) / static_cast<double>(n);
    x[k] = std::sqrt(2.0 / static_cast<double>(n)) * (sine ? std::sin(a) : std::cos(a));
  }
  return x;
}

std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "retm_metrics_test";
  fs::create_directories(dir);
  return dir / name;
}

// Two talkers and one noise source, rendered at 16 kHz.
room::RenderedScene two_talker_render(room::SceneConfig& scene) {
  scene.room_dims = {5.0, 4.0, 3.0};
  scene.t60_s = 0.3;
  scene.sources = {{{1.0, 1.0, 1.5}, room::SourceRole::Speech, "a", 0.0},
                   {{4.0, 3.0, 1.5}, room::SourceRole::Speech, "b", 0.0},
                   {{2.5, 3.5, 2.0}, room::SourceRole::Noise, "n", 0.0}};
  scene.microphones = {{2.0, 2.0, 1.2}, {3.0, 2.0, 1.4}, {2.5, 1.5, 1.6}};
  scene.background_snr_db = 10.0;
  room::SignalMap sig{{"a", room::synthesize(room::SynthKind::Speech, 1.5, 16000, 1)},
                      {"b", room::synthesize(room::SynthKind::Speech, 1.5, 16000, 2)},
                      {"n", room::synthesize(room::SynthKind::Broadband, 1.5, 16000, 3)}};
  return room::render_scene(scene, sig);
}

signal::AudioBuffer mono(std::span<const double> x) {
  signal::AudioBuffer b(1, x.size(), 16000);
  std::copy(x.begin(), x.end(), b.channel(0).begin());
  return b;
}

const separation::GroupAssignment kGroups{{1, 0}, {2}};

}  // namespace

TEST(BssDecompose, EstimateEqualToTarget) {
  std::mt19937_64 rng(1);
  const std::vector<std::vector<double>> refs{gaussian(300, rng), gaussian(300, rng)};
  const auto d = metrics::bss_decompose(refs[1], refs, 1);
  EXPECT_LE(norm(d.e_interf), 1e-12);
  EXPECT_LE(norm(d.e_artif), 1e-12);
  const auto m = metrics::sir_sdr(d);
  EXPECT_EQ(m.sir_db, kInf);
  EXPECT_EQ(m.sdr_db, kInf);
}

TEST(BssDecompose, OrthonormalReferencesWithInterferer) {
  const auto r1 = sinusoid(1000, 5, false), r2 = sinusoid(1000, 11, true);
  std::vector<double> est(1000);
  for (std::size_t k = 0; k < est.size(); ++k) est[k] = r1[k] + 0.1 * r2[k];
  const auto d = metrics::bss_decompose(est, {r1, r2}, 0);
  EXPECT_NEAR(norm(d.s_target), 1.0, 1e-12);
  EXPECT_NEAR(norm(d.e_interf), 0.1, 1e-12);
  EXPECT_LE(norm(d.e_artif), 1e-12);
  const auto m = metrics::sir_sdr(d);
  EXPECT_NEAR(m.sir_db, 20.0, 1e-9);
  EXPECT_NEAR(m.sdr_db, 20.0, 1e-9);
}

TEST(BssDecompose, ScaledTargetIsAbsorbed) {
  std::mt19937_64 rng(2);
  const auto r = gaussian(400, rng);
  std::vector<double> est(r);
  for (double& v : est) v *= 0.5;
  const auto d = metrics::bss_decompose(est, {r, gaussian(400, rng)}, 0);
  for (std::size_t k = 0; k < est.size(); ++k) EXPECT_NEAR(d.s_target[k], est[k], 1e-12);
  EXPECT_LE(norm(d.e_interf) + norm(d.e_artif), 1e-12);
}

TEST(BssDecompose, InvariantsOnRandomCases) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 100 + 13 * (i % 9), count = 1 + i % 3;
    std::vector<std::vector<double>> refs;
    for (std::size_t r = 0; r < count; ++r) refs.push_back(gaussian(n, rng));
    // Estimate length differs from the references half of the time.
    const auto est = gaussian(n + (i % 2 ? 17 : 0), rng);
    const auto d = metrics::bss_decompose(est, refs, i % count);
    ASSERT_EQ(d.s_target.size(), n);
    const double scale = oracle::energy(est);
    double st_ei = 0, st_ea = 0, ei_ea = 0;
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_NEAR(d.s_target[k] + d.e_interf[k] + d.e_artif[k], est[k], 1e-10);
      st_ei += d.s_target[k] * d.e_interf[k];
      st_ea += d.s_target[k] * d.e_artif[k];
      ei_ea += d.e_interf[k] * d.e_artif[k];
    }
    EXPECT_LE(std::abs(st_ei) / scale, 1e-12);
    EXPECT_LE(std::abs(st_ea) / scale, 1e-12);
    EXPECT_LE(std::abs(ei_ea) / scale, 1e-12);
    for (const auto& r : refs) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += r[k] * d.e_artif[k];
      EXPECT_LE(std::abs(dot) / scale, 1e-12);
    }
  }
}

TEST(BssDecompose, ScaleInvarianceOfMetrics) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 20; ++i) {
    const std::vector<std::vector<double>> refs{gaussian(256, rng), gaussian(256, rng), gaussian(256, rng)};
    auto est = gaussian(256, rng);
    for (std::size_t k = 0; k < est.size(); ++k) est[k] += 2.0 * refs[0][k];
    const auto base = metrics::sir_sdr(metrics::bss_decompose(est, refs, 0));
    double k = u(rng);
    if (k == 0.0) k = 1.0;
    for (double& v : est) v *= k;
    const auto scaled = metrics::sir_sdr(metrics::bss_decompose(est, refs, 0));
    EXPECT_NEAR(scaled.sir_db, base.sir_db, 1e-9);
    EXPECT_NEAR(scaled.sdr_db, base.sdr_db, 1e-9);
  }
}

TEST(BssDecompose, OrthogonalEstimateGivesMinusInfinity) {
  // Disjoint supports keep the inner product exactly zero.
  std::mt19937_64 rng(7);
  auto r1 = gaussian(512, rng), r2 = gaussian(512, rng);
  std::fill(r1.begin() + 256, r1.end(), 0.0);
  std::fill(r2.begin(), r2.begin() + 256, 0.0);
  const auto m = metrics::sir_sdr(metrics::bss_decompose(r2, {r1, r2}, 0));
  EXPECT_EQ(m.sir_db, -kInf);
  EXPECT_EQ(m.sdr_db, -kInf);
}

TEST(BssDecompose, DegenerateReferences) {
  std::mt19937_64 rng(5);
  const auto r = gaussian(100, rng);
  auto twice = r;
  for (double& v : twice) v *= 2.0;
  EXPECT_THROW(metrics::bss_decompose(r, {r, twice}, 0), DegenerateReference);
  EXPECT_THROW(metrics::bss_decompose(r, {r, std::vector<double>(100, 0.0)}, 0), DegenerateReference);
  EXPECT_THROW(metrics::bss_decompose(r, {r}, 1), InvalidInput);
  EXPECT_THROW(metrics::bss_decompose(r, {r, gaussian(99, rng)}, 0), InvalidInput);
}

TEST(Alignment, RecoversShift) {
  std::mt19937_64 rng(6);
  const auto ref = gaussian(2000, rng);
  for (long lag : {-37L, 0L, 5L, 120L}) {
    std::vector<double> est(2000, 0.0);
    for (long n = 0; n < 2000; ++n)
      if (n - lag >= 0 && n - lag < 2000) est[n] = ref[n - lag];
    EXPECT_EQ(metrics::best_alignment_lag(est, ref, 200), lag);
    const auto back = metrics::apply_lag(est, lag, 2000);
    for (long n = 300; n < 1700; ++n) ASSERT_EQ(back[n], ref[n]);
  }
}

TEST(EvaluateScenario, PerfectAndIdentityEstimates) {
  room::SceneConfig scene;
  const auto r = two_talker_render(scene);
  const std::size_t mic = kGroups.group_a[0];

  std::vector<signal::AudioBuffer> perfect, identity;
  for (std::size_t s : {0u, 1u}) perfect.push_back(mono(r.per_source_images[s].channel(mic)));
  for (int s = 0; s < 2; ++s) identity.push_back(mono(r.mixture.channel(mic)));

  const auto best = metrics::evaluate_scenario(scene, r, perfect, kGroups);
  ASSERT_EQ(best.speakers.size(), 2u);
  EXPECT_EQ(best.eval_microphone, mic);
  for (const auto& s : best.speakers) {
    EXPECT_EQ(s.output_sir_db, kInf);
    EXPECT_GT(s.output_sir_db, s.unprocessed_sir_db);
    EXPECT_EQ(s.alignment_lag, 0);
  }

  const auto same = metrics::evaluate_scenario(scene, r, identity, kGroups);
  for (const auto& s : same.speakers) EXPECT_NEAR(s.output_sir_db, s.unprocessed_sir_db, 0.01);
  EXPECT_EQ(same.speakers[0].signal_id, "a");

  // An oracle estimate with mild sensor noise still beats the mixture.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1e-3);
  auto noisy = perfect;
  for (auto& b : noisy)
    for (double& v : b.channel(0)) v += g(rng);
  for (const auto& s : metrics::evaluate_scenario(scene, r, noisy, kGroups).speakers)
    EXPECT_GT(s.output_sir_db, s.unprocessed_sir_db);

  EXPECT_THROW(metrics::evaluate_scenario(scene, r, {perfect[0]}, kGroups), InvalidInput);
}

TEST(EvaluateScenario, DelayedEstimateIsAligned) {
  room::SceneConfig scene;
  const auto r = two_talker_render(scene);
  const auto ref = r.per_source_images[1].channel(kGroups.group_a[0]);
  std::vector<double> late(ref.size(), 0.0);
  std::copy(ref.begin(), ref.end() - 64, late.begin() + 64);
  const std::vector<signal::AudioBuffer> est{mono(r.per_source_images[0].channel(kGroups.group_a[0])), mono(late)};
  metrics::EvaluationOptions opts;
  opts.alignment_window = 256;
  const auto rep = metrics::evaluate_scenario(scene, r, est, kGroups, opts);
  EXPECT_EQ(rep.speakers[1].alignment_lag, 64);
  EXPECT_GT(rep.speakers[1].output_sir_db, 40.0);
}

TEST(Report, JsonRoundTripAndTable) {
  room::SceneConfig scene;
  const auto r = two_talker_render(scene);
  std::vector<signal::AudioBuffer> est;
  for (std::size_t s : {0u, 1u}) est.push_back(mono(r.per_source_images[s].channel(1)));
  const auto rep = metrics::evaluate_scenario(scene, r, est, kGroups);
  const auto j = metrics::report_to_json(rep);
  EXPECT_EQ(j["speakers"][0]["output_sir_db"], "inf");
  const auto back = metrics::report_from_json(j);
  ASSERT_EQ(back.speakers.size(), 2u);
  EXPECT_EQ(back.speakers[1].signal_id, "b");
  EXPECT_EQ(back.speakers[1].output_sir_db, kInf);
  EXPECT_DOUBLE_EQ(back.speakers[0].unprocessed_sir_db, rep.speakers[0].unprocessed_sir_db);
  EXPECT_EQ(back.q_a, 2u);
  EXPECT_EQ(back.q_b, 1u);
  EXPECT_EQ(metrics::report_to_json(back), j);
  const auto table = metrics::report_table(rep);
  EXPECT_NE(table.find("Unprocessed"), std::string::npos);
  EXPECT_NE(table.find("O/P"), std::string::npos);
}

TEST(SpectrogramExport, TinyCsvGrid) {
  signal::Spectrogram s(2, 1, signal::StftParams::with_window(2), 16000, 3);
  s(0, 0, 0) = 1.0;
  s(1, 0, 0) = {0.0, 10.0};
  s(0, 1, 0) = 0.0;
  s(1, 1, 0) = 0.1;
  const auto path = scratch("tiny.csv");
  metrics::export_spectrogram(s, 0, path, metrics::SpectrogramFormat::Csv);
  std::ifstream in(path);
  std::string line;
  int header = 0, body = 0;
  while (std::getline(in, line)) {
    if (line.rfind('#', 0) == 0) {
      ++header;
    } else if (!line.empty()) {
      ++body;
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 1) << line;
    }
  }
  EXPECT_GE(header, 1);
  EXPECT_EQ(body, 2);
  const auto csv = metrics::read_magnitude_csv(path);
  ASSERT_EQ(csv.rows.size(), 2u);
  EXPECT_NEAR(csv.rows[0][0], 0.0, 1e-6);
  EXPECT_NEAR(csv.rows[1][0], 20.0, 1e-6);
  EXPECT_NEAR(csv.rows[0][1], metrics::kDefaultFloorDb, 1e-6);
  EXPECT_NEAR(csv.rows[1][1], -20.0, 1e-6);
  EXPECT_NEAR(csv.frequency_hz[1], 8000.0, 1e-9);
}

TEST(SpectrogramExport, CsvRoundTrip) {
  const auto x = oracle::random_buffer(2, 4000, 12);
  const auto spec = signal::stft(x, signal::StftParams::with_window(256));
  const auto path = scratch("round.csv");
  metrics::export_spectrogram(spec, 1, path, metrics::SpectrogramFormat::Csv, -90.0);
  const auto csv = metrics::read_magnitude_csv(path);
  const auto grid = signal::magnitude_db(spec, -90.0);
  ASSERT_EQ(csv.rows.size(), spec.bins());
  ASSERT_EQ(csv.time_s.size(), spec.frames());
  for (std::size_t k = 0; k < spec.bins(); ++k)
    for (std::size_t t = 0; t < spec.frames(); ++t) ASSERT_NEAR(csv.rows[k][t], grid(k, t, 1), 1e-6);
}

TEST(SpectrogramExport, SilentPngIsUniform) {
  const signal::Spectrogram zero(6, 1, signal::StftParams::with_window(16), 16000, 56);
  const auto path = scratch("silent.png");
  metrics::export_spectrogram(zero, 0, path, metrics::SpectrogramFormat::Png);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  ASSERT_TRUE(png_image_begin_read_from_file(&image, path.c_str()));
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  ASSERT_TRUE(png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr));
  EXPECT_EQ(image.width, 6u);
  EXPECT_EQ(image.height, 9u);
  for (auto p : pixels) EXPECT_EQ(p, pixels.front());
}

TEST(SpectrogramExport, Errors) {
  const signal::Spectrogram zero(2, 1, signal::StftParams::with_window(16), 16000, 24);
  EXPECT_THROW(metrics::export_spectrogram(zero, 1, scratch("x.csv"), metrics::SpectrogramFormat::Csv),
               InvalidInput);
  EXPECT_THROW(metrics::export_spectrogram(zero, 0, "/proc/no/such/dir/x.csv", metrics::SpectrogramFormat::Csv),
               IoError);
}
