#include "retm/separation/pipeline.hpp"

#include <string>

#include "retm/error.hpp"

namespace retm::separation {

SeparationResult separate_speaker_detailed(const signal::AudioBuffer& mixture,
                                           const signal::AudioBuffer& training,
                                           const GroupAssignment& groups,
                                           const SeparationOptions& options) {
  if (mixture.channels() != training.channels())
    throw InvalidInput("mixture and training recordings differ in channel count");
  if (mixture.sample_rate_hz() != training.sample_rate_hz())
    throw InvalidInput("mixture and training recordings differ in sample rate");
  groups.validate(mixture.channels());
  if (options.output_channel >= groups.q_a())
    throw InvalidInput("output channel " + std::to_string(options.output_channel) +
                       " is outside group A (size " + std::to_string(groups.q_a()) + ")");

  SeparationResult result;
  {
    const auto train_a = signal::stft(training.select_channels(groups.group_a), options.stft);
    const auto train_b = signal::stft(training.select_channels(groups.group_b), options.stft);
    EstimateOptions est;
    est.rcond = options.rcond;
    est.fallback_condition = options.fallback_condition;
    est.target_id = options.target_id;
    result.retm = estimate_retm(train_a, train_b, {0, train_a.frames()}, est);
  }
  const auto mix_a = signal::stft(mixture.select_channels(groups.group_a), options.stft);
  const auto mix_b = signal::stft(mixture.select_channels(groups.group_b), options.stft);
  const auto separated = apply_separation(mix_a, mix_b, result.retm, {0, mix_a.frames()});
  result.group_a_output = signal::istft(separated);
  const std::size_t channel[] = {options.output_channel};
  result.output = result.group_a_output.select_channels(channel);
  return result;
}

signal::AudioBuffer separate_speaker(const signal::AudioBuffer& mixture,
                                     const signal::AudioBuffer& training,
                                     const GroupAssignment& groups,
                                     const signal::StftParams& params, double rcond,
                                     std::size_t output_channel) {
  SeparationOptions options;
  options.stft = params;
  options.rcond = rcond;
  options.output_channel = output_channel;
  return separate_speaker_detailed(mixture, training, groups, options).output;
}

std::vector<signal::AudioBuffer> separate_all(const signal::AudioBuffer& mixture,
                                              const std::vector<signal::AudioBuffer>& per_target_training,
                                              const GroupAssignment& groups,
                                              const signal::StftParams& params, double rcond,
                                              std::size_t output_channel) {
  if (per_target_training.empty()) throw InvalidInput("separate_all needs at least one training recording");
  std::vector<signal::AudioBuffer> out;
  out.reserve(per_target_training.size());
  for (const auto& training : per_target_training)
    out.push_back(separate_speaker(mixture, training, groups, params, rcond, output_channel));
  return out;
}

}  // namespace retm::separation
