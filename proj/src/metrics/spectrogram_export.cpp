#include "retm/metrics/spectrogram_export.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "retm/error.hpp"

namespace retm::metrics {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_csv(const signal::MagnitudeGrid& grid, const signal::Spectrogram& spec, std::size_t channel,
               const std::filesystem::path& path, double floor_db) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const double fs = spec.sample_rate_hz();
  const auto& p = spec.params();
  out << "# magnitude_db bins=" << grid.bins << " frames=" << grid.frames << " channel=" << channel
      << " floor_db=" << fmt(floor_db) << "\n";
  out << "# frequency_hz";
  for (std::size_t b = 0; b < grid.bins; ++b)
    out << ',' << fmt(static_cast<double>(b) * fs / static_cast<double>(p.fft_len));
  out << "\n# time_s";
  for (std::size_t t = 0; t < grid.frames; ++t)
    out << ',' << fmt((static_cast<double>(t * p.hop) + 0.5 * static_cast<double>(p.window_len)) / fs);
  out << '\n';
  for (std::size_t b = 0; b < grid.bins; ++b) {
    for (std::size_t t = 0; t < grid.frames; ++t) {
      if (t) out << ',';
      out << fmt(grid(b, t, channel));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_png(const signal::MagnitudeGrid& grid, std::size_t channel,
               const std::filesystem::path& path, double floor_db) {
  double top = floor_db;
  for (std::size_t b = 0; b < grid.bins; ++b)
    for (std::size_t t = 0; t < grid.frames; ++t) top = std::max(top, grid(b, t, channel));
  const double range = top - floor_db;

  std::unique_ptr<FILE, decltype(&std::fclose)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  const auto width = static_cast<png_uint_32>(grid.frames);
  const auto height = static_cast<png_uint_32>(grid.bins);
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(width);
  for (png_uint_32 y = 0; y < height; ++y) {
    const std::size_t bin = grid.bins - 1 - y;  // high frequencies at the top
    for (png_uint_32 x = 0; x < width; ++x) {
      const double level = range > 0.0 ? (grid(bin, x, channel) - floor_db) / range : 0.0;
      row[x] = static_cast<png_byte>(std::lround(255.0 * std::clamp(level, 0.0, 1.0)));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

void export_spectrogram(const signal::Spectrogram& spec, std::size_t channel,
                        const std::filesystem::path& path, SpectrogramFormat format, double floor_db) {
  if (channel >= spec.channels()) throw InvalidInput("spectrogram channel out of range");
  if (!std::isfinite(floor_db)) throw InvalidInput("floor_db must be finite");
  const auto grid = signal::magnitude_db(spec, floor_db);
  if (format == SpectrogramFormat::Csv)
    write_csv(grid, spec, channel, path, floor_db);
  else
    write_png(grid, channel, path, floor_db);
}

MagnitudeCsv read_magnitude_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  MagnitudeCsv csv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      const auto key = line.substr(2, comma - 2);
      const auto values = parse_row(line.substr(comma + 1));
      if (key == "frequency_hz") csv.frequency_hz = values;
      if (key == "time_s") csv.time_s = values;
      continue;
    }
    csv.rows.push_back(parse_row(line));
  }
  return csv;
}

}  // namespace retm::metrics
