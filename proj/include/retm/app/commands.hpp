#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "retm/app/config.hpp"
#include "retm/app/experiment.hpp"
#include "retm/metrics/report.hpp"
#include "retm/metrics/spectrogram_export.hpp"

namespace retm::app {

// Run directory layout shared by the commands:
//   mixture.wav, images/<id>.wav, training/<id>.wav, manifest.json   (simulate)
//   separated/<id>.wav, retm/<id>.retm, retm/<id>.json               (separate)
//   report.json                                                      (evaluate)
struct SimulateSummary {
  std::vector<std::filesystem::path> files;
  double noise_gain = 1.0;
};

SimulateSummary cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Target ids come from the scene speech sources (synthesized segments) or
// from the recorded segment table.
std::vector<std::filesystem::path> cmd_separate(const ExperimentConfig& config,
                                                const std::filesystem::path& run_dir);

metrics::SeparationReport cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& run_dir);

struct SweepRow {
  SweepPoint point;
  metrics::SeparationReport report;
};

// Runs every sweep point, reusing the rendered scene. Each point writes
// points/<label>/report.json; sweep_state.json records progress so an
// interrupted sweep resumes with the missing points only. summary.csv holds
// one row per point.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

std::string summary_csv(const std::vector<SweepRow>& rows, const ExperimentConfig& config);

void cmd_spectrogram(const std::filesystem::path& input, std::size_t channel,
                     const std::filesystem::path& output, metrics::SpectrogramFormat format,
                     const signal::StftParams& params, double floor_db = metrics::kDefaultFloorDb);

}  // namespace retm::app
