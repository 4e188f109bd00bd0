#include "retm/room/scene.hpp"

#include <cmath>

#include "retm/error.hpp"

namespace retm::room {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::size_t SceneConfig::speech_count() const {
  std::size_t n = 0;
  for (const auto& s : sources) n += s.role == SourceRole::Speech;
  return n;
}

std::size_t SceneConfig::noise_count() const { return sources.size() - speech_count(); }

std::vector<std::size_t> SceneConfig::speech_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].role == SourceRole::Speech) out.push_back(i);
  return out;
}

namespace {

void check_inside(const Vec3& dims, const Vec3& p, const std::string& field) {
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(p[k]) || p[k] < kWallMargin || p[k] > dims[k] - kWallMargin)
      throw InvalidInput(field + ": position must be at least 0.1 m inside every wall");
  }
}

}  // namespace

void SceneConfig::validate() const {
  for (int k = 0; k < 3; ++k)
    if (!(room_dims[k] > 2 * kWallMargin)) throw InvalidInput("room_dims: dimensions must exceed 0.2 m");
  if (!(t60_s > 0.0) || !std::isfinite(t60_s)) throw InvalidInput("t60_s: must be positive");
  if (sample_rate_hz <= 0) throw InvalidInput("sample_rate_hz: must be positive");
  if (speech_count() == 0) throw InvalidInput("sources: at least one speech source is required");
  if (microphones.empty()) throw InvalidInput("microphones: at least one microphone is required");
  if (!std::isfinite(background_snr_db)) throw InvalidInput("background_snr_db: must be finite");
  if (std::isnan(thermal_snr_db)) throw InvalidInput("thermal_snr_db: must not be NaN");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string field = "sources[" + std::to_string(i) + "]";
    check_inside(room_dims, sources[i].position, field + ".position");
    if (sources[i].signal_id.empty()) throw InvalidInput(field + ".signal_id: must not be empty");
    if (!std::isfinite(sources[i].gain_db)) throw InvalidInput(field + ".gain_db: must be finite");
  }
  for (std::size_t m = 0; m < microphones.size(); ++m) {
    const std::string field = "microphones[" + std::to_string(m) + "]";
    check_inside(room_dims, microphones[m], field);
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (distance(microphones[m], sources[i].position) < kMinSourceMicDistance)
        throw InvalidInput(field + ": coincides with sources[" + std::to_string(i) + "]");
  }
}

namespace {

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput(field + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw InvalidInput(path + key + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput(path + key + ": wrong type");
  }
}

}  // namespace

SceneConfig scene_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("scene: expected an object");
  SceneConfig s;
  s.room_dims = vec3_from_json(j.value("room_dims", nlohmann::json()), "room_dims");
  s.t60_s = required<double>(j, "t60_s", "");
  s.sample_rate_hz = j.value("sample_rate_hz", 16000);
  s.background_snr_db = required<double>(j, "background_snr_db", "");
  if (j.contains("thermal_snr_db")) {
    const auto& t = j["thermal_snr_db"];
    if (t.is_null() || (t.is_string() && t.get<std::string>() == "inf"))
      s.thermal_snr_db = kThermalDisabled;
    else if (t.is_number())
      s.thermal_snr_db = t.get<double>();
    else
      throw InvalidInput("thermal_snr_db: expected a number, null or \"inf\"");
  }
  s.seed = j.value("seed", std::uint64_t{1});

  if (!j.contains("sources") || !j["sources"].is_array()) throw InvalidInput("sources: expected a list");
  for (std::size_t i = 0; i < j["sources"].size(); ++i) {
    const auto& js = j["sources"][i];
    const std::string path = "sources[" + std::to_string(i) + "].";
    SourceSpec src;
    src.position = vec3_from_json(js.value("position", nlohmann::json()), path + "position");
    const auto role = required<std::string>(js, "role", path);
    if (role == "speech")
      src.role = SourceRole::Speech;
    else if (role == "noise")
      src.role = SourceRole::Noise;
    else
      throw InvalidInput(path + "role: expected \"speech\" or \"noise\"");
    src.signal_id = required<std::string>(js, "signal_id", path);
    src.gain_db = js.value("gain_db", 0.0);
    s.sources.push_back(std::move(src));
  }
  if (!j.contains("microphones") || !j["microphones"].is_array())
    throw InvalidInput("microphones: expected a list");
  for (std::size_t m = 0; m < j["microphones"].size(); ++m)
    s.microphones.push_back(vec3_from_json(j["microphones"][m], "microphones[" + std::to_string(m) + "]"));
  s.validate();
  return s;
}

nlohmann::json scene_to_json(const SceneConfig& scene) {
  nlohmann::json j;
  j["room_dims"] = scene.room_dims;
  j["t60_s"] = scene.t60_s;
  j["sample_rate_hz"] = scene.sample_rate_hz;
  j["background_snr_db"] = scene.background_snr_db;
  j["thermal_snr_db"] = std::isinf(scene.thermal_snr_db) ? nlohmann::json("inf")
                                                         : nlohmann::json(scene.thermal_snr_db);
  j["seed"] = scene.seed;
  j["sources"] = nlohmann::json::array();
  for (const auto& s : scene.sources)
    j["sources"].push_back({{"position", s.position},
                            {"role", s.role == SourceRole::Speech ? "speech" : "noise"},
                            {"signal_id", s.signal_id},
                            {"gain_db", s.gain_db}});
  j["microphones"] = scene.microphones;
  return j;
}

}  // namespace retm::room
