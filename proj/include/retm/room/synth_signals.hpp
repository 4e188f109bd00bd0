#pragma once

#include <cstdint>
#include <string>

#include "retm/signal/audio_buffer.hpp"

namespace retm::room {

// Stand-in source material for self-contained simulations. All generators
// return mono buffers normalized to unit RMS.
enum class SynthKind {
  Speech,     // spectrally tilted, formant-shaped noise with syllabic gating
  Hum,        // air-conditioner style: low-passed broadband plus mains harmonics
  Broadband,  // vacuum-cleaner style: band-passed noise with slow wobble
  Music,      // harmonic note sequence over a soft noise floor
};

SynthKind synth_kind_from_string(const std::string& name);
std::string to_string(SynthKind kind);

signal::AudioBuffer synthesize(SynthKind kind, double duration_s, int sample_rate_hz,
                               std::uint64_t seed);

}  // namespace retm::room
