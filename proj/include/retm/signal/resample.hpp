#pragma once

#include "retm/signal/audio_buffer.hpp"

namespace retm::signal {

// Integer-factor downsampling: zero-phase Blackman-windowed-sinc low-pass with
// cutoff at 90% of the output Nyquist, then every factor-th sample.
// Output length is ceil(length / factor). Throws UnsupportedRate when the
// input rate is not divisible by factor.
AudioBuffer decimate(const AudioBuffer& buffer, int factor);

}  // namespace retm::signal
