#include "vemstokes/eigensolver.hpp"

#ifdef VEMSTOKES_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace vemstokes {

namespace {

class Factorization {
 public:
  explicit Factorization(const SparseMatrix& m) {
#ifdef VEMSTOKES_HAVE_UMFPACK
    lu_.compute(m);
#else
    lu_.analyzePattern(m);
    lu_.factorize(m);
#endif
    if (lu_.info() != Eigen::Success) throw SingularSystemError("factorization of the shifted pencil failed");
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd x = lu_.solve(rhs);
    if (!x.allFinite()) throw SingularSystemError("shifted pencil is numerically singular");
    return x;
  }

 private:
#ifdef VEMSTOKES_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu_;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
#endif
};

Eigen::MatrixXd random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  return x;
}

Eigen::MatrixXd append_cols(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() == 0 ? b.rows() : a.rows(), a.cols() + b.cols());
  if (a.cols() > 0) out.leftCols(a.cols()) = a;
  if (b.cols() > 0) out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

EigsResult shift_invert_eigs(const SparseMatrix& a, const SparseMatrix& b, const EigsOptions& options,
                             const LinearConstraint* constraint) {
  if (options.k < 1) throw std::invalid_argument("number of eigenvalues must be positive");
  if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols())
    throw std::invalid_argument("pencil matrices must be square and of equal size");

  const Eigen::Index n = a.rows();
  const int k = options.k;
  const int keep = options.buffer > 0 ? std::max(options.buffer, k) : std::max(2 * k, k + 8);
  const int bs = std::max(1, options.block_size);
  const int max_basis = 2 * keep + 2 * bs;

  SparseMatrix shifted = a - options.shift * b;
  double cz = 0.0;
  if (constraint) {
    if (constraint->weights.size() != n || constraint->null_vector.size() != n || constraint->pin < 0 ||
        constraint->pin >= n || constraint->null_vector[constraint->pin] == 0.0)
      throw std::invalid_argument("invalid linear constraint");
    cz = constraint->weights.dot(constraint->null_vector);
    if (cz == 0.0) throw std::invalid_argument("constraint weights annihilate the null vector");
    shifted.coeffRef(constraint->pin, constraint->pin) += 1.0;
  }
  shifted.makeCompressed();
  const Factorization factorization(shifted);

  EigsResult result;
  auto op = [&](const Eigen::MatrixXd& x) {
    result.operator_applications += static_cast<int>(x.cols());
    Eigen::MatrixXd y = factorization.solve(b * x);
    // The pinned solve is exact up to a multiple of z; remove it.
    if (constraint)
      y -= constraint->null_vector * ((constraint->weights.transpose() * y) / cz);
    return y;
  };

  Eigen::MatrixXd V(n, 0), W(n, 0), BV(n, 0), T(0, 0);

  // B-orthonormalizes the columns of x against V and each other (two passes
  // of classical Gram-Schmidt); near-dependent columns are dropped.
  auto orthonormalize = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd accepted(n, 0);
    Eigen::MatrixXd accepted_b(n, 0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::VectorXd v = x.col(j);
      const double norm0 = std::sqrt(std::max(0.0, v.dot(b * v)));
      if (!(norm0 > 0.0)) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (V.cols() > 0) v -= V * (BV.transpose() * v);
        if (accepted.cols() > 0) v -= accepted * (accepted_b.transpose() * v);
      }
      const Eigen::VectorXd bv = b * v;
      const double norm = std::sqrt(std::max(0.0, v.dot(bv)));
      if (norm <= 1e-10 * norm0) continue;
      accepted = append_cols(accepted, v / norm);
      accepted_b = append_cols(accepted_b, bv / norm);
    }
    return accepted;
  };

  std::mt19937_64 rng(options.seed);
  Eigen::MatrixXd pending = orthonormalize(op(random_block(n, bs, rng)));

  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;
  std::vector<int> order;
  std::vector<double> residuals;
  int wanted = 0;

  for (int restart = 0;; ++restart) {
    bool exhausted = false;
    while (V.cols() < max_basis) {
      if (pending.cols() == 0) {
        pending = orthonormalize(op(random_block(n, bs, rng)));
        if (pending.cols() == 0) {
          exhausted = true;
          break;
        }
      }
      const Eigen::MatrixXd wx = op(pending);
      const Eigen::MatrixXd bx = b * pending;
      const Eigen::Index m = V.cols();
      const Eigen::Index p = pending.cols();
      Eigen::MatrixXd grown(m + p, m + p);
      if (m > 0) {
        grown.topLeftCorner(m, m) = T;
        grown.topRightCorner(m, p) = BV.transpose() * wx;
        grown.bottomLeftCorner(p, m) = bx.transpose() * W;
      }
      grown.bottomRightCorner(p, p) = bx.transpose() * wx;
      T = std::move(grown);
      V = append_cols(V, pending);
      W = append_cols(W, wx);
      BV = append_cols(BV, bx);
      pending = orthonormalize(wx);
    }

    // Rayleigh-Ritz on the B-orthonormal basis.
    const Eigen::MatrixXd sym = 0.5 * (T + T.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    theta = eig.eigenvalues();
    ritz = eig.eigenvectors();
    order.resize(theta.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(theta[i]) > std::abs(theta[j]); });
    const double theta_max = theta.size() > 0 ? std::abs(theta[order[0]]) : 0.0;
    // Infinite eigenvalues of the pencil map to theta = 0.
    std::erase_if(order, [&](int i) { return std::abs(theta[i]) <= 1e-13 * theta_max; });

    wanted = std::min<int>(k, static_cast<int>(order.size()));
    residuals.assign(wanted, 0.0);
    bool converged = wanted == k;
    for (int w = 0; w < wanted; ++w) {
      const int i = order[w];
      const Eigen::VectorXd r = W * ritz.col(i) - theta[i] * (V * ritz.col(i));
      residuals[w] = std::sqrt(std::max(0.0, r.dot(b * r))) / std::abs(theta[i]);
      if (residuals[w] > options.tolerance) converged = false;
    }
    if (converged || (exhausted && wanted > 0)) break;
    if (exhausted || restart >= options.max_restarts) {
      std::ostringstream msg;
      msg << "shift-invert iteration did not converge after " << restart << " restarts; residuals:";
      for (double r : residuals) msg << ' ' << r;
      throw IterationError(msg.str(), residuals);
    }

    // Thick restart: keep the dominant Ritz vectors. The pending block still
    // spans their residual directions.
    const int kept = std::min<int>(keep, static_cast<int>(order.size()));
    Eigen::MatrixXd select(V.cols(), kept);
    Eigen::VectorXd kept_theta(kept);
    for (int w = 0; w < kept; ++w) {
      select.col(w) = ritz.col(order[w]);
      kept_theta[w] = theta[order[w]];
    }
    V = V * select;
    W = W * select;
    BV = BV * select;
    T = kept_theta.asDiagonal();
    // Re-orthogonalize the pending block against the compressed basis.
    pending = orthonormalize(pending);
  }

  // Purified eigenvectors x = Op(y) / theta.
  std::vector<std::pair<double, Eigen::VectorXd>> pairs;
  std::vector<double> pair_residuals;
  for (int w = 0; w < wanted; ++w) {
    const int i = order[w];
    Eigen::VectorXd x = W * ritz.col(i) / theta[i];
    const double norm = std::sqrt(std::max(0.0, x.dot(b * x)));
    if (norm > 0) x /= norm;
    pairs.emplace_back(options.shift + 1.0 / theta[i], std::move(x));
    pair_residuals.push_back(residuals[w]);
  }
  std::vector<int> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return pairs[i].first < pairs[j].first; });
  result.vectors.resize(n, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    result.values.push_back(pairs[idx[c]].first);
    result.vectors.col(static_cast<Eigen::Index>(c)) = pairs[idx[c]].second;
    result.ritz_residuals.push_back(pair_residuals[idx[c]]);
  }
  return result;
}

}  // namespace vemstokes
