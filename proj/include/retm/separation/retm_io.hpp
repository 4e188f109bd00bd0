#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "retm/separation/retm.hpp"

namespace retm::separation {

// Binary container, little-endian:
//   "RETM" | u32 version (1) | u32 bins | u32 Q_A | u32 Q_B | f64 rcond | i32 target_id
//   then per bin a row-major Q_A x Q_B matrix of complex64 (f32 re, f32 im).
void write_retm(std::ostream& out, const ReTMStack& stack);
ReTMStack read_retm(std::istream& in);

void save_retm(const std::filesystem::path& path, const ReTMStack& stack);
ReTMStack load_retm(const std::filesystem::path& path);

// Sidecar: frame count, rcond, warnings, per-bin condition numbers, fallback
// flags and a log10 condition-number histogram. Infinite values are written
// as the string "inf".
nlohmann::json diagnostics_json(const ReTMStack& stack);

}  // namespace retm::separation
