#include "equinash/linalg.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace equinash {

Mat matrix_exp(const Mat& A, double t) {
  if (!A.allFinite() || !std::isfinite(t)) {
    throw std::invalid_argument("matrix_exp: non-finite input");
  }
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("matrix_exp: matrix must be square");
  }
  return (t * A).exp();
}

double operator_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  return A.jacobiSvd().singularValues()(0);
}

double sym_min_eigenvalue(const Mat& A) {
  Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Mat& A, double tol) {
  if (A.rows() != A.cols()) return false;
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool is_psd(const Mat& A, double tol) {
  return is_symmetric(A, tol) && sym_min_eigenvalue(A) >= -tol;
}

bool is_pd(const Mat& A, double tol) {
  return is_symmetric(A, tol) && sym_min_eigenvalue(A) > tol;
}

Mat psd_sqrt(const Mat& A) {
  Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

OuStep discretize_ou(const Mat& kappa, const Mat& sigma, double dt) {
  const int n = static_cast<int>(kappa.rows());
  const Mat S = sigma * sigma.transpose();

  OuStep out;
  out.F = matrix_exp(kappa, -dt);

  // Van Loan block exponential: with M = [[-kappa, S], [0, kappa^T]],
  // exp(M dt) = [[A, G], [0, D]] where A = e^{-kappa dt} and
  // G = \int_0^dt e^{-kappa(dt-s)} S e^{kappa^T s} ds = Q e^{kappa^T dt},
  // so the exact step covariance is Q = G A^T.
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -kappa;
  M.topRightCorner(n, n) = S;
  M.bottomRightCorner(n, n) = kappa.transpose();
  Mat E = matrix_exp(M, dt);
  Mat G = E.topRightCorner(n, n);
  Mat Q = G * out.F.transpose();
  Q = 0.5 * (Q + Q.transpose());
  out.Q = Q;
  out.Q_sqrt = psd_sqrt(Q);
  return out;
}

}  // namespace equinash
