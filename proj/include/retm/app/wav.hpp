#pragma once

#include <filesystem>

#include "retm/signal/audio_buffer.hpp"

namespace retm::app {

// Reads RIFF/WAVE files: PCM 8/16/24/32-bit and IEEE float 32/64-bit, plain or
// WAVE_FORMAT_EXTENSIBLE. Integer samples are normalized to [-1, 1).
signal::AudioBuffer read_wav(const std::filesystem::path& path);

// Writes 32-bit IEEE float little-endian WAV. Parent directories are created.
void write_wav(const std::filesystem::path& path, const signal::AudioBuffer& buffer);

}  // namespace retm::app
