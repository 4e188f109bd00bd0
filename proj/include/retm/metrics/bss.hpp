#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace retm::metrics {

// Orthogonal decomposition of an estimate against reference signals:
// estimate = s_target + e_interf + e_artif.
struct BssDecomposition {
  std::vector<double> s_target;
  std::vector<double> e_interf;
  std::vector<double> e_artif;
};

inline constexpr double kMaxGramCondition = 1e10;

// s_target: projection onto the target reference. e_interf: projection onto
// span(all references) minus s_target. e_artif: the rest. The estimate is
// truncated or zero-padded to the reference length.
// Throws DegenerateReference for zero or linearly dependent references.
BssDecomposition bss_decompose(std::span<const double> estimate,
                               const std::vector<std::vector<double>>& references,
                               std::size_t target_index);

struct SirSdr {
  double sir_db = 0.0;
  double sdr_db = 0.0;
};

// SIR = 10 log10(|s|^2 / |e_interf|^2), SDR = 10 log10(|s|^2 / |e_interf + e_artif|^2).
// Zero denominators give +inf; a zero target component gives -inf.
SirSdr sir_sdr(const BssDecomposition& decomposition);

// Lag (in samples, within +/- max_lag) maximizing the cross-correlation
// sum_n estimate[n + lag] * reference[n].
long best_alignment_lag(std::span<const double> estimate, std::span<const double> reference,
                        std::size_t max_lag);

// Shifts `estimate` so that estimate[n + lag] lands at index n; gaps are zero.
std::vector<double> apply_lag(std::span<const double> estimate, long lag, std::size_t length);

}  // namespace retm::metrics
