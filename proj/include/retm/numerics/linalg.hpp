#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace retm::numerics {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kDefaultRcond = 1e-10;

struct PseudoinverseResult {
  ComplexMatrix inverse;     // cols x rows
  std::size_t rank = 0;      // singular values kept
  double sigma_max = 0.0;
  double sigma_min = 0.0;    // smallest of the min(rows, cols) singular values
  double sigma_kept = 0.0;   // smallest kept singular value, 0 when rank == 0

  // sigma_max / sigma_kept over the retained spectrum; +inf when rank == 0.
  double effective_condition() const;
};

// Moore-Penrose inverse via SVD. Singular values below rcond * sigma_max are
// treated as zero. Throws InvalidInput for empty input or rcond outside (0, 1),
// NumericalFailure for non-finite entries or SVD failure.
PseudoinverseResult pseudoinverse_svd(const ComplexMatrix& m, double rcond = kDefaultRcond);

inline ComplexMatrix pseudoinverse(const ComplexMatrix& m, double rcond = kDefaultRcond) {
  return pseudoinverse_svd(m, rcond).inverse;
}

// sigma_max / sigma_min. Returns +inf when sigma_min is zero at working
// precision (below sigma_max * eps * max(rows, cols)).
double condition_number(const ComplexMatrix& m);

}  // namespace retm::numerics
