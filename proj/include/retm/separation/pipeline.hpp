#pragma once

#include <cstddef>
#include <vector>

#include "retm/separation/retm.hpp"
#include "retm/signal/audio_buffer.hpp"
#include "retm/signal/stft.hpp"

namespace retm::separation {

struct SeparationOptions {
  signal::StftParams stft;
  double rcond = numerics::kDefaultRcond;
  double fallback_condition = kFallbackCondition;
  std::size_t output_channel = 0;  // index into group A
  int target_id = 0;
};

struct SeparationResult {
  signal::AudioBuffer output;        // mono estimate at output_channel
  signal::AudioBuffer group_a_output;  // all Q_A copies
  ReTMStack retm;
};

// STFT both recordings, estimate R on all training frames, apply it to all
// mixture frames, resynthesize. `training` must contain every source except
// the target; `mixture` is the recording to separate.
SeparationResult separate_speaker_detailed(const signal::AudioBuffer& mixture,
                                           const signal::AudioBuffer& training,
                                           const GroupAssignment& groups,
                                           const SeparationOptions& options);

signal::AudioBuffer separate_speaker(const signal::AudioBuffer& mixture,
                                     const signal::AudioBuffer& training,
                                     const GroupAssignment& groups,
                                     const signal::StftParams& params,
                                     double rcond = numerics::kDefaultRcond,
                                     std::size_t output_channel = 0);

// One mono estimate per training recording, in input order.
std::vector<signal::AudioBuffer> separate_all(const signal::AudioBuffer& mixture,
                                              const std::vector<signal::AudioBuffer>& per_target_training,
                                              const GroupAssignment& groups,
                                              const signal::StftParams& params,
                                              double rcond = numerics::kDefaultRcond,
                                              std::size_t output_channel = 0);

}  // namespace retm::separation
