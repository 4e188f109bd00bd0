#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "retm/signal/stft.hpp"

namespace retm::metrics {

enum class SpectrogramFormat { Csv, Png };

inline constexpr double kDefaultFloorDb = -120.0;

// Writes magnitude_db of one channel. CSV: `#` header lines with the
// frequency and time axes, then one row per bin, one column per frame.
// PNG: 8-bit grayscale, time on x, frequency increasing upward.
// Throws InvalidInput for a bad channel, IoError when the file cannot be written.
void export_spectrogram(const signal::Spectrogram& spec, std::size_t channel,
                        const std::filesystem::path& path, SpectrogramFormat format,
                        double floor_db = kDefaultFloorDb);

struct MagnitudeCsv {
  std::vector<double> frequency_hz;
  std::vector<double> time_s;
  std::vector<std::vector<double>> rows;  // [bin][frame]
};

MagnitudeCsv read_magnitude_csv(const std::filesystem::path& path);

}  // namespace retm::metrics
