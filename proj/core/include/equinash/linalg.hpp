#pragma once

#include <Eigen/Dense>

namespace equinash {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// e^{tA} by scaling-and-squaring (Eigen's Pade implementation).
// Throws std::invalid_argument on non-finite input.
Mat matrix_exp(const Mat& A, double t = 1.0);

// Largest singular value.
double operator_norm(const Mat& A);

// Smallest eigenvalue of the symmetrized matrix (A + A^T)/2.
double sym_min_eigenvalue(const Mat& A);

bool is_symmetric(const Mat& A, double tol = 1e-10);
bool is_psd(const Mat& A, double tol = 1e-10);
bool is_pd(const Mat& A, double tol = 1e-10);

// Symmetric square root with negative eigenvalues clamped to zero, so it
// also accepts rank-deficient covariance matrices.
Mat psd_sqrt(const Mat& A);

// Exact one-step discretization of dX = -kappa (X - theta) dt + sigma dW:
//   X' = theta + F (X - theta) + w,   w ~ N(0, Q),   F = exp(-kappa dt).
// Q is read off the Van Loan block exponential of [[-kappa, sigma sigma^T],
// [0, kappa^T]].
struct OuStep {
  Mat F;
  Mat Q;
  Mat Q_sqrt;
};
OuStep discretize_ou(const Mat& kappa, const Mat& sigma, double dt);

}  // namespace equinash
