#include "retm/separation/retm_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "retm/error.hpp"

namespace retm::separation {

namespace {

constexpr char kMagic[4] = {'R', 'E', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IoError("truncated ReTM container");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

nlohmann::json finite_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

void write_retm(std::ostream& out, const ReTMStack& stack) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.bins()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.q_a()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.q_b()));
  put_le<double>(out, stack.rcond_used);
  put_le<std::int32_t>(out, stack.target_id);
  for (const auto& m : stack.matrices)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        put_le<float>(out, static_cast<float>(m(r, c).real()));
        put_le<float>(out, static_cast<float>(m(r, c).imag()));
      }
  if (!out) throw IoError("failed to write ReTM container");
}

ReTMStack read_retm(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a ReTM container");
  if (get_le<std::uint32_t>(in) != kVersion) throw IoError("unsupported ReTM container version");
  const auto bins = get_le<std::uint32_t>(in);
  const auto q_a = get_le<std::uint32_t>(in);
  const auto q_b = get_le<std::uint32_t>(in);
  ReTMStack stack;
  stack.rcond_used = get_le<double>(in);
  stack.target_id = get_le<std::int32_t>(in);
  stack.matrices.reserve(bins);
  for (std::uint32_t b = 0; b < bins; ++b) {
    ComplexMatrix m(q_a, q_b);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const float re = get_le<float>(in);
        const float im = get_le<float>(in);
        m(r, c) = {re, im};
      }
    stack.matrices.push_back(std::move(m));
  }
  return stack;
}

void save_retm(const std::filesystem::path& path, const ReTMStack& stack) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_retm(out, stack);
}

ReTMStack load_retm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_retm(in);
}

nlohmann::json diagnostics_json(const ReTMStack& stack) {
  nlohmann::json j;
  j["target_id"] = stack.target_id;
  j["bins"] = stack.bins();
  j["q_a"] = stack.q_a();
  j["q_b"] = stack.q_b();
  j["frame_count"] = stack.frame_count;
  j["rcond"] = stack.rcond_used;
  j["fallback_bins"] = stack.fallback_count();
  j["warnings"] = stack.warnings;

  auto& per_bin = j["per_bin"] = nlohmann::json::array();
  std::map<int, std::size_t> histogram;
  for (const auto& d : stack.diagnostics) {
    per_bin.push_back({{"condition", finite_or_inf(d.condition)},
                       {"effective_condition", finite_or_inf(d.effective_condition)},
                       {"rank", d.rank},
                       {"fallback", d.fallback}});
    const int decade = std::isfinite(d.condition) ? static_cast<int>(std::floor(std::log10(d.condition))) : 99;
    ++histogram[decade];
  }
  auto& hist = j["condition_histogram"] = nlohmann::json::array();
  for (const auto& [decade, count] : histogram)
    hist.push_back({{"log10_condition", decade == 99 ? nlohmann::json("inf") : nlohmann::json(decade)},
                    {"bins", count}});
  return j;
}

}  // namespace retm::separation
