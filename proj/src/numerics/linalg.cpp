#include "retm/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retm/error.hpp"

namespace retm::numerics {

namespace {

Eigen::JacobiSVD<ComplexMatrix> checked_svd(const ComplexMatrix& m, unsigned options) {
  if (m.size() == 0) throw InvalidInput("matrix is empty");
  if (!m.allFinite()) throw NumericalFailure("matrix has non-finite entries");
  Eigen::JacobiSVD<ComplexMatrix> svd(m, options);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
  return svd;
}

}  // namespace

double PseudoinverseResult::effective_condition() const {
  if (rank == 0) return std::numeric_limits<double>::infinity();
  return sigma_max / sigma_kept;
}

PseudoinverseResult pseudoinverse_svd(const ComplexMatrix& m, double rcond) {
  if (!(rcond > 0.0 && rcond < 1.0)) throw InvalidInput("rcond must lie in (0, 1)");
  const auto svd = checked_svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();

  PseudoinverseResult result;
  result.sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  result.sigma_min = sigma.size() > 0 ? sigma(sigma.size() - 1) : 0.0;
  const double cutoff = rcond * result.sigma_max;

  Eigen::VectorXd inv_sigma = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) {
      inv_sigma(i) = 1.0 / sigma(i);
      result.sigma_kept = sigma(i);
      ++result.rank;
    }
  }
  result.inverse = svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().adjoint();
  return result;
}

double condition_number(const ComplexMatrix& m) {
  const auto svd = checked_svd(m, 0);
  const auto& sigma = svd.singularValues();
  const double smax = sigma(0);
  const double smin = sigma(sigma.size() - 1);
  const double tiny = smax * std::numeric_limits<double>::epsilon() *
                      static_cast<double>(std::max(m.rows(), m.cols()));
  if (smax == 0.0 || smin <= tiny) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace retm::numerics
