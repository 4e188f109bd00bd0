#include "retm/metrics/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "retm/error.hpp"
#include "retm/metrics/bss.hpp"

namespace retm::metrics {

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

nlohmann::json db_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double db_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InvalidInput("unexpected metric value '" + s + "'");
  }
  return j.get<double>();
}

std::string format_db(double v) {
  char buf[32];
  if (std::isinf(v))
    std::snprintf(buf, sizeof buf, "%s", v > 0 ? "+inf" : "-inf");
  else
    std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

SeparationReport evaluate_scenario(const room::SceneConfig& scene, const room::RenderedScene& rendered,
                                   const std::vector<signal::AudioBuffer>& estimates,
                                   const separation::GroupAssignment& groups,
                                   const EvaluationOptions& options) {
  const auto speech = scene.speech_indices();
  if (estimates.size() != speech.size())
    throw InvalidInput("expected " + std::to_string(speech.size()) + " estimates, got " +
                       std::to_string(estimates.size()));
  if (rendered.per_source_images.size() != scene.sources.size())
    throw InvalidInput("rendered scene does not carry one image per source");
  if (options.eval_channel >= groups.q_a()) throw InvalidInput("evaluation channel outside group A");
  const std::size_t mic = groups.group_a[options.eval_channel];
  if (mic >= rendered.mixture.channels()) throw InvalidInput("evaluation microphone out of range");

  std::vector<std::vector<double>> references;
  for (std::size_t s : speech) references.push_back(to_vector(rendered.per_source_images[s].channel(mic)));
  const auto mixture = rendered.mixture.channel(mic);

  SeparationReport report;
  report.q_a = groups.q_a();
  report.q_b = groups.q_b();
  report.snr_db = scene.background_snr_db;
  report.eval_channel = options.eval_channel;
  report.eval_microphone = mic;
  report.scene = {{"room_dims", scene.room_dims},
                  {"t60_s", scene.t60_s},
                  {"speech_sources", scene.speech_count()},
                  {"noise_sources", scene.noise_count()},
                  {"microphones", scene.microphones.size()},
                  {"sample_rate_hz", scene.sample_rate_hz},
                  {"seed", scene.seed}};

  for (std::size_t k = 0; k < speech.size(); ++k) {
    if (estimates[k].channels() != 1) throw InvalidInput("estimates must be mono");
    auto m = evaluate_speaker(references, mixture, estimates[k].channel(0), k, options.alignment_window);
    m.signal_id = scene.sources[speech[k]].signal_id;
    report.speakers.push_back(std::move(m));
  }
  return report;
}

SpeakerMetrics evaluate_speaker(const std::vector<std::vector<double>>& references,
                                std::span<const double> mixture, std::span<const double> estimate,
                                std::size_t target, std::size_t alignment_window) {
  if (target >= references.size()) throw InvalidInput("target index outside the reference list");
  SpeakerMetrics m;
  m.unprocessed_sir_db = sir_sdr(bss_decompose(mixture, references, target)).sir_db;
  m.alignment_lag = best_alignment_lag(estimate, references[target], alignment_window);
  const auto aligned = apply_lag(estimate, m.alignment_lag, references[target].size());
  const auto out = sir_sdr(bss_decompose(aligned, references, target));
  m.output_sir_db = out.sir_db;
  m.output_sdr_db = out.sdr_db;
  return m;
}

nlohmann::json report_to_json(const SeparationReport& report) {
  nlohmann::json j;
  j["q_a"] = report.q_a;
  j["q_b"] = report.q_b;
  j["snr_db"] = report.snr_db;
  j["eval_channel"] = report.eval_channel;
  j["eval_microphone"] = report.eval_microphone;
  j["scene"] = report.scene;
  j["speakers"] = nlohmann::json::array();
  for (const auto& s : report.speakers)
    j["speakers"].push_back({{"signal_id", s.signal_id},
                             {"unprocessed_sir_db", db_json(s.unprocessed_sir_db)},
                             {"unprocessed_sdr_db", s.unprocessed_sdr_note},
                             {"output_sir_db", db_json(s.output_sir_db)},
                             {"output_sdr_db", db_json(s.output_sdr_db)},
                             {"alignment_lag", s.alignment_lag}});
  return j;
}

SeparationReport report_from_json(const nlohmann::json& j) {
  SeparationReport r;
  r.q_a = j.at("q_a").get<std::size_t>();
  r.q_b = j.at("q_b").get<std::size_t>();
  r.snr_db = j.at("snr_db").get<double>();
  r.eval_channel = j.at("eval_channel").get<std::size_t>();
  r.eval_microphone = j.value("eval_microphone", std::size_t{0});
  r.scene = j.value("scene", nlohmann::json::object());
  for (const auto& s : j.at("speakers")) {
    SpeakerMetrics m;
    m.signal_id = s.at("signal_id").get<std::string>();
    m.unprocessed_sir_db = db_from_json(s.at("unprocessed_sir_db"));
    m.unprocessed_sdr_note = s.value("unprocessed_sdr_db", std::string("-"));
    m.output_sir_db = db_from_json(s.at("output_sir_db"));
    m.output_sdr_db = db_from_json(s.at("output_sdr_db"));
    m.alignment_lag = s.value("alignment_lag", 0L);
    r.speakers.push_back(std::move(m));
  }
  return r;
}

std::string report_table(const SeparationReport& report) {
  std::ostringstream out;
  out << "Q_A = " << report.q_a << ", Q_B = " << report.q_b << ", SNR = " << format_db(report.snr_db)
      << " dB, evaluated at group-A channel " << report.eval_channel << " (mic "
      << report.eval_microphone << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-12s %10s %10s\n", "Speaker", "", "SIR (dB)", "SDR (dB)");
  out << line;
  for (const auto& s : report.speakers) {
    std::snprintf(line, sizeof line, "%-12s %-12s %10s %10s\n", s.signal_id.c_str(), "Unprocessed",
                  format_db(s.unprocessed_sir_db).c_str(), s.unprocessed_sdr_note.c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-12s %-12s %10s %10s\n", "", "O/P", format_db(s.output_sir_db).c_str(),
                  format_db(s.output_sdr_db).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace retm::metrics
