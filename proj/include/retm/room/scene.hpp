#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace retm::room {

using Vec3 = std::array<double, 3>;

enum class SourceRole { Speech, Noise };

struct SourceSpec {
  Vec3 position{};
  SourceRole role = SourceRole::Speech;
  std::string signal_id;
  // Level applied to the dry signal before rendering.
  double gain_db = 0.0;
};

inline constexpr double kThermalDisabled = std::numeric_limits<double>::infinity();
inline constexpr double kWallMargin = 0.1;
inline constexpr double kMinSourceMicDistance = 0.05;

struct SceneConfig {
  Vec3 room_dims{6.0, 7.0, 3.0};
  double t60_s = 0.5;
  std::vector<SourceSpec> sources;
  std::vector<Vec3> microphones;
  int sample_rate_hz = 16000;
  double background_snr_db = -15.0;
  double thermal_snr_db = 60.0;  // kThermalDisabled turns the sensor noise off
  std::uint64_t seed = 1;

  std::size_t speech_count() const;
  std::size_t noise_count() const;
  std::vector<std::size_t> speech_indices() const;

  // Throws InvalidInput naming the offending field.
  void validate() const;
};

double distance(const Vec3& a, const Vec3& b);

// JSON field names match the struct members. thermal_snr_db accepts null or
// "inf" for the disabled sentinel; gain_db is optional.
SceneConfig scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneConfig& scene);

}  // namespace retm::room
