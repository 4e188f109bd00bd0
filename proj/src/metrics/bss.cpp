#include "retm/metrics/bss.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "retm/error.hpp"
#include "retm/signal/fft.hpp"

namespace retm::metrics {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double energy(std::span<const double> a) { return dot(a, a); }

}  // namespace

BssDecomposition bss_decompose(std::span<const double> estimate,
                               const std::vector<std::vector<double>>& references,
                               std::size_t target_index) {
  if (references.empty() || target_index >= references.size())
    throw InvalidInput("target index outside the reference list");
  const std::size_t n = references.front().size();
  for (const auto& r : references) {
    if (r.size() != n) throw InvalidInput("references differ in length");
    if (energy(r) <= 0.0) throw DegenerateReference("reference signal has zero energy");
  }
  const std::size_t k = references.size();
  Eigen::MatrixXd gram(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) gram(i, j) = gram(j, i) = dot(references[i], references[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > kMaxGramCondition)
    throw DegenerateReference("references are linearly dependent");

  std::vector<double> e(n, 0.0);
  std::copy_n(estimate.begin(), std::min(n, estimate.size()), e.begin());

  const auto& target = references[target_index];
  const double target_energy = gram(target_index, target_index);
  const double coef = dot(e, target) / target_energy;

  BssDecomposition out;
  out.s_target.resize(n);
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.s_target[i] = coef * target[i];
    residual[i] = e[i] - out.s_target[i];
  }

  // Interferers orthogonalized against the target; projecting the residual
  // onto their span equals P_all(e) - P_target(e).
  out.e_interf.assign(n, 0.0);
  if (k > 1) {
    std::vector<std::vector<double>> others;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == target_index) continue;
      const double c = gram(j, target_index) / target_energy;
      std::vector<double> o(n);
      for (std::size_t i = 0; i < n; ++i) o[i] = references[j][i] - c * target[i];
      others.push_back(std::move(o));
    }
    const std::size_t m = others.size();
    Eigen::MatrixXd g(m, m);
    Eigen::VectorXd rhs(m);
    for (std::size_t a = 0; a < m; ++a) {
      rhs(a) = dot(others[a], residual);
      for (std::size_t b = a; b < m; ++b) g(a, b) = g(b, a) = dot(others[a], others[b]);
    }
    const Eigen::VectorXd c = g.ldlt().solve(rhs);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t i = 0; i < n; ++i) out.e_interf[i] += c(a) * others[a][i];
  }
  out.e_artif.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.e_artif[i] = residual[i] - out.e_interf[i];
  return out;
}

SirSdr sir_sdr(const BssDecomposition& d) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double target = energy(d.s_target);
  if (target <= 0.0) return {-inf, -inf};
  const double interf = energy(d.e_interf);
  double distortion = 0.0;
  for (std::size_t i = 0; i < d.e_interf.size(); ++i) {
    const double v = d.e_interf[i] + d.e_artif[i];
    distortion += v * v;
  }
  SirSdr out;
  out.sir_db = interf > 0.0 ? 10.0 * std::log10(target / interf) : inf;
  out.sdr_db = distortion > 0.0 ? 10.0 * std::log10(target / distortion) : inf;
  return out;
}

long best_alignment_lag(std::span<const double> estimate, std::span<const double> reference,
                        std::size_t max_lag) {
  if (estimate.empty() || reference.empty()) return 0;
  const std::size_t len = std::bit_ceil(estimate.size() + reference.size());
  const signal::RealFft fft(len);
  std::vector<double> a(len, 0.0);
  std::vector<double> b(len, 0.0);
  std::copy(estimate.begin(), estimate.end(), a.begin());
  std::copy(reference.begin(), reference.end(), b.begin());
  std::vector<std::complex<double>> fa(fft.bins());
  std::vector<std::complex<double>> fb(fft.bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= std::conj(fb[i]);
  fft.inverse(fa, a);  // a[lag mod len] = sum_n est[n + lag] ref[n]

  long best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  // Visit 0, +1, -1, +2, ... so ties resolve to the smallest |lag|.
  for (long step = 0; step <= static_cast<long>(2 * max_lag); ++step) {
    const long lag = (step % 2 == 1) ? (step + 1) / 2 : -(step / 2);
    const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : len - static_cast<std::size_t>(-lag);
    if (a[idx] > best_value) {
      best_value = a[idx];
      best = lag;
    }
  }
  return best;
}

std::vector<double> apply_lag(std::span<const double> estimate, long lag, std::size_t length) {
  std::vector<double> out(length, 0.0);
  for (std::size_t n = 0; n < length; ++n) {
    const long src = static_cast<long>(n) + lag;
    if (src >= 0 && src < static_cast<long>(estimate.size())) out[n] = estimate[src];
  }
  return out;
}

}  // namespace retm::metrics
