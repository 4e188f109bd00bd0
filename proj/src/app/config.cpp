#include "retm/app/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "retm/error.hpp"

namespace retm::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

template <typename T>
T get(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(path, "unexpected value " + j.dump());
  }
}

double positive(const json& j, const std::string& path) {
  const double v = get<double>(j, path);
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be a positive number");
  return v;
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "must be a non-negative integer");
  return j.get<std::size_t>();
}

std::vector<std::size_t> index_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of channel indices");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(count(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

separation::TimeInterval interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "must be [start_s, end_s]");
  return {get<double>(j[0], path + "[0]"), get<double>(j[1], path + "[1]")};
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

json interval_json(const separation::TimeInterval& t) { return json::array({t.start_s, t.end_s}); }

}  // namespace

std::size_t ExperimentConfig::training_samples() const {
  return static_cast<std::size_t>(std::llround(training_duration_s * scene.sample_rate_hz));
}

std::size_t ExperimentConfig::mixture_samples() const {
  return static_cast<std::size_t>(std::llround(mixture_duration_s * scene.sample_rate_hz));
}

SignalSource parse_signal_source(const std::string& spec, const fs::path& base_dir) {
  SignalSource src;
  src.spec = spec;
  if (spec.rfind("synth:", 0) == 0) {
    const std::string rest = spec.substr(6);
    const auto colon = rest.find(':');
    src.synth = room::synth_kind_from_string(rest.substr(0, colon));
    if (colon != std::string::npos) {
      const std::string seed = rest.substr(colon + 1);
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(seed, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != seed.size() || seed.empty()) throw InvalidInput("bad generator seed '" + seed + "'");
      src.synth_seed = v;
    }
    return src;
  }
  src.wav = resolve(spec, base_dir);
  return src;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) fail("<root>", "config must be a JSON object");
  static const std::set<std::string> known = {
      "scene", "signals", "groups", "stft", "segments", "training_duration_s", "mixture_duration_s",
      "sweep", "rcond", "fallback_condition", "output_dir", "seed", "eval_channel"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) fail(key, "unknown field");

  ExperimentConfig cfg;

  if (!j.contains("scene")) fail("scene", "missing");
  try {
    const json& s = j.at("scene");
    if (s.is_string()) {
      const fs::path p = resolve(s.get<std::string>(), base_dir);
      std::ifstream in(p);
      if (!in) fail("scene", "cannot open " + p.string());
      cfg.scene = room::scene_from_json(json::parse(in));
    } else {
      cfg.scene = room::scene_from_json(s);
    }
    if (j.contains("seed")) cfg.scene.seed = get<std::uint64_t>(j.at("seed"), "seed");
    cfg.scene.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail("scene", e.what());
  }

  const std::size_t mics = cfg.scene.microphones.size();
  if (j.contains("groups")) {
    const json& g = j.at("groups");
    if (g.contains("group_a") || g.contains("group_b")) {
      if (!g.contains("group_a") || !g.contains("group_b")) fail("groups", "needs both group_a and group_b");
      cfg.groups.group_a = index_list(g.at("group_a"), "groups.group_a");
      cfg.groups.group_b = index_list(g.at("group_b"), "groups.group_b");
    } else if (g.contains("q_a") && g.contains("q_b")) {
      cfg.groups = separation::GroupAssignment::contiguous(count(g.at("q_a"), "groups.q_a"),
                                                           count(g.at("q_b"), "groups.q_b"));
    } else {
      fail("groups", "expected {group_a, group_b} or {q_a, q_b}");
    }
  } else {
    if (mics < 2) fail("groups", "at least two microphones are needed");
    const std::size_t q_a = std::max<std::size_t>(1, std::min<std::size_t>(10, mics / 2));
    cfg.groups = separation::GroupAssignment::contiguous(q_a, mics - q_a);
  }
  try {
    cfg.groups.validate(mics);
  } catch (const Error& e) {
    fail("groups", e.what());
  }

  if (j.contains("stft")) {
    const json& s = j.at("stft");
    const std::size_t n = s.contains("window_len") ? count(s.at("window_len"), "stft.window_len") : 8192;
    cfg.stft = signal::StftParams::with_window(n);
    if (s.contains("hop")) cfg.stft.hop = count(s.at("hop"), "stft.hop");
    if (s.contains("fft_len")) cfg.stft.fft_len = count(s.at("fft_len"), "stft.fft_len");
    if (s.contains("window") && s.at("window") != "sqrt-hann") fail("stft.window", "only \"sqrt-hann\" is supported");
  }
  try {
    cfg.stft.validate();
  } catch (const Error& e) {
    fail("stft", e.what());
  }

  if (j.contains("training_duration_s"))
    cfg.training_duration_s = positive(j.at("training_duration_s"), "training_duration_s");
  if (j.contains("mixture_duration_s"))
    cfg.mixture_duration_s = positive(j.at("mixture_duration_s"), "mixture_duration_s");
  if (j.contains("rcond")) {
    cfg.rcond = get<double>(j.at("rcond"), "rcond");
    if (!(cfg.rcond > 0.0 && cfg.rcond < 1.0)) fail("rcond", "must lie in (0, 1)");
  }
  if (j.contains("fallback_condition"))
    cfg.fallback_condition = positive(j.at("fallback_condition"), "fallback_condition");
  if (j.contains("output_dir")) cfg.output_dir = get<std::string>(j.at("output_dir"), "output_dir");
  if (j.contains("eval_channel")) cfg.eval_channel = count(j.at("eval_channel"), "eval_channel");
  if (cfg.eval_channel >= cfg.groups.q_a()) fail("eval_channel", "outside group A");

  if (!j.contains("signals") || !j.at("signals").is_object()) fail("signals", "missing signal manifest");
  for (const auto& [id, value] : j.at("signals").items()) {
    const std::string path = "signals." + id;
    if (!value.is_string()) fail(path, "must be a WAV path or \"synth:<kind>[:<seed>]\"");
    try {
      cfg.signals[id] = parse_signal_source(value.get<std::string>(), base_dir);
    } catch (const Error& e) {
      fail(path, e.what());
    }
    if (cfg.signals[id].wav && !fs::exists(*cfg.signals[id].wav))
      fail(path, "file not found: " + cfg.signals[id].wav->string());
  }

  if (j.contains("segments")) {
    const json& s = j.at("segments");
    if (s.is_string()) {
      if (s.get<std::string>() != "synthesized") fail("segments", "expected \"synthesized\" or an object");
    } else if (s.is_object()) {
      RecordedSegments rec;
      if (!s.contains("recording")) fail("segments.recording", "missing");
      rec.recording = resolve(get<std::string>(s.at("recording"), "segments.recording"), base_dir);
      if (!fs::exists(rec.recording)) fail("segments.recording", "file not found: " + rec.recording.string());
      if (!s.contains("targets") || !s.at("targets").is_object()) fail("segments.targets", "missing");
      for (const auto& [id, t] : s.at("targets").items()) {
        const std::string path = "segments.targets." + id;
        if (!t.contains("t1") || !t.contains("t2")) fail(path, "needs t1 and t2");
        rec.targets[id] = {interval(t.at("t1"), path + ".t1"), interval(t.at("t2"), path + ".t2")};
      }
      if (rec.targets.empty()) fail("segments.targets", "at least one target is required");
      cfg.recorded = std::move(rec);
    } else {
      fail("segments", "expected \"synthesized\" or an object");
    }
  }

  if (!cfg.recorded) {
    for (const auto& src : cfg.scene.sources)
      if (!cfg.signals.count(src.signal_id))
        fail("signals." + src.signal_id, "scene source has no signal entry");
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_object()) fail("sweep", "must be an object");
    for (const auto& [key, value] : s.items()) {
      const std::string path = "sweep." + key;
      if (!value.is_array() || value.empty()) fail(path, "must be a non-empty array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string ip = path + "[" + std::to_string(i) + "]";
        if (key == "snr_db") {
          cfg.sweep.snr_db.push_back(get<double>(value[i], ip));
          if (!std::isfinite(cfg.sweep.snr_db.back())) fail(ip, "must be finite");
        } else if (key == "q_a") {
          const std::size_t q = count(value[i], ip);
          if (q == 0 || q > cfg.groups.q_a()) fail(ip, "must lie in [1, " + std::to_string(cfg.groups.q_a()) + "]");
          if (cfg.eval_channel >= q) fail(ip, "smaller than eval_channel + 1");
          cfg.sweep.q_a.push_back(q);
        } else if (key == "target_gain_db") {
          cfg.sweep.target_gain_db.push_back(get<double>(value[i], ip));
        } else {
          fail(path, "unknown sweep axis");
        }
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scene"] = room::scene_to_json(cfg.scene);
  j["signals"] = json::object();
  for (const auto& [id, src] : cfg.signals) j["signals"][id] = src.spec;
  j["groups"] = {{"group_a", cfg.groups.group_a}, {"group_b", cfg.groups.group_b}};
  j["stft"] = {{"window_len", cfg.stft.window_len}, {"hop", cfg.stft.hop}, {"fft_len", cfg.stft.fft_len},
               {"window", "sqrt-hann"}};
  if (cfg.recorded) {
    json targets = json::object();
    for (const auto& [id, s] : cfg.recorded->targets)
      targets[id] = {{"t1", interval_json(s.t1)}, {"t2", interval_json(s.t2)}};
    j["segments"] = {{"recording", cfg.recorded->recording.string()}, {"targets", targets}};
  } else {
    j["segments"] = "synthesized";
  }
  j["training_duration_s"] = cfg.training_duration_s;
  j["mixture_duration_s"] = cfg.mixture_duration_s;
  json sweep = json::object();
  if (!cfg.sweep.snr_db.empty()) sweep["snr_db"] = cfg.sweep.snr_db;
  if (!cfg.sweep.q_a.empty()) sweep["q_a"] = cfg.sweep.q_a;
  if (!cfg.sweep.target_gain_db.empty()) sweep["target_gain_db"] = cfg.sweep.target_gain_db;
  j["sweep"] = sweep;
  j["rcond"] = cfg.rcond;
  j["fallback_condition"] = cfg.fallback_condition;
  j["output_dir"] = cfg.output_dir.string();
  j["seed"] = cfg.scene.seed;
  j["eval_channel"] = cfg.eval_channel;
  return j;
}

}  // namespace retm::app
