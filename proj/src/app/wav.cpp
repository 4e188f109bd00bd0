#include "retm/app/wav.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "retm/error.hpp"

namespace retm::app {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

double decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t u = le32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

}  // namespace

signal::AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto bad = [&](const std::string& why) { return IoError(path.string() + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw bad("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t avail = std::min(size, bytes.size() - pos - 8);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw bad("truncated fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      block_align = le16(chunk + 20);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible) {
        if (avail < 40) throw bad("truncated extensible fmt chunk");
        format = le16(chunk + 32);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos += 8 + size + (size & 1);
  }
  if (channels == 0 || rate == 0) throw bad("missing or invalid fmt chunk");
  if (!data) throw bad("missing data chunk");
  const bool ok = (format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) ||
                  (format == kFormatFloat && (bits == 32 || bits == 64));
  if (!ok) throw bad("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");
  const std::size_t width = bits / 8;
  if (block_align != width * channels) throw bad("inconsistent block alignment");
  if (rate > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) throw bad("sample rate out of range");

  const std::size_t frames = data_size / block_align;
  signal::AudioBuffer out(channels, frames, static_cast<int>(rate));
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels; ++c)
      out(c, n) = decode_sample(data + n * block_align + c * width, format, bits);
  out.check_finite();
  return out;
}

void write_wav(const std::filesystem::path& path, const signal::AudioBuffer& buffer) {
  if (buffer.channels() == 0) throw InvalidInput("cannot write a WAV file without channels");
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(buffer.channels()) * buffer.length() * 4;
  if (data_bytes > 0xFFFFFFFFull - 36) throw IoError("audio too long for a RIFF file: " + path.string());

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, static_cast<std::uint32_t>(36 + data_bytes));
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, kFormatFloat);
  put16(out, static_cast<std::uint16_t>(buffer.channels()));
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz()));
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz() * 4 * buffer.channels()));
  put16(out, static_cast<std::uint16_t>(4 * buffer.channels()));
  put16(out, 32);
  out += "data";
  put32(out, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t n = 0; n < buffer.length(); ++n)
    for (std::size_t c = 0; c < buffer.channels(); ++c) {
      const float f = static_cast<float>(buffer(c, n));
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put32(out, u);
    }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

}  // namespace retm::app
