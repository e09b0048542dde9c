#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vemstokes {

using SparseMatrix = Eigen::SparseMatrix<double>;

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IterationError : public std::runtime_error {
 public:
  IterationError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

struct EigsOptions {
  int k = 4;
  double shift = 0.0;
  int block_size = 3;
  /// Ritz vectors kept across restarts; 0 picks max(2k, k + 8).
  int buffer = 0;
  int max_restarts = 100;
  double tolerance = 1e-10;
  std::uint64_t seed = 1;
};

/// Side condition c^T x = 0 for a pencil whose matrices share the null
/// vector z (A z = B z = 0) with c^T z != 0. The shifted matrix is made
/// invertible by adding 1 to the diagonal entry `pin` (z[pin] != 0) and
/// every solve is corrected back onto {c^T x = 0}; this replaces a dense
/// bordered Lagrange multiplier row.
struct LinearConstraint {
  Eigen::VectorXd weights;  // c
  Eigen::VectorXd null_vector;  // z
  int pin = 0;
};

struct EigsResult {
  std::vector<double> values;        // ascending
  Eigen::MatrixXd vectors;           // B-orthonormal columns
  std::vector<double> ritz_residuals;  // ||Op y - theta y||_B / |theta|
  int operator_applications = 0;
};

/// Shift-invert block Krylov eigensolver for the symmetric pencil
/// A x = lambda B x with B positive semidefinite. Factors A - shift * B once
/// and runs a thick-restarted Rayleigh-Ritz iteration on
/// x -> (A - shift B)^{-1} B x in the B semi-inner product. Infinite
/// eigenvalues (the kernel of B) are filtered out.
EigsResult shift_invert_eigs(const SparseMatrix& a, const SparseMatrix& b, const EigsOptions& options,
                             const LinearConstraint* constraint = nullptr);

}  // namespace vemstokes
