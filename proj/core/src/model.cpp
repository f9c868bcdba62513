#include "equinash/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace equinash {

namespace {

constexpr double kTol = 1e-10;

void check_shape(ValidationReport& rep, const std::string& name, const Mat& M,
                 int rows, int cols) {
  ValidationIssue is{name + " shape", true, 0.0, ""};
  if (M.rows() != rows || M.cols() != cols) {
    is.pass = false;
    is.magnitude = 1.0;
    std::ostringstream os;
    os << "expected " << rows << "x" << cols << ", got " << M.rows() << "x"
       << M.cols();
    is.detail = os.str();
  }
  rep.issues.push_back(is);
}

void check_pd(ValidationReport& rep, const std::string& name, const Mat& M) {
  ValidationIssue is{name + " positive definite", true, 0.0, ""};
  if (!is_symmetric(M, kTol)) {
    is.pass = false;
    is.magnitude = (M - M.transpose()).cwiseAbs().maxCoeff();
    is.detail = "not symmetric";
  } else {
    const double lam = sym_min_eigenvalue(M);
    if (!(lam > kTol)) {
      is.pass = false;
      is.magnitude = std::max(0.0, kTol - lam);
      is.detail = name + " not positive definite";
    }
  }
  rep.issues.push_back(is);
}

void check_psd(ValidationReport& rep, const std::string& name, const Mat& M) {
  ValidationIssue is{name + " positive semi-definite", true, 0.0, ""};
  if (!is_symmetric(M, kTol)) {
    is.pass = false;
    is.magnitude = (M - M.transpose()).cwiseAbs().maxCoeff();
    is.detail = "not symmetric";
  } else {
    const double lam = sym_min_eigenvalue(M);
    if (lam < -kTol) {
      is.pass = false;
      is.magnitude = -lam;
      is.detail = name + " not positive semi-definite";
    }
  }
  rep.issues.push_back(is);
}

void check_finite(ValidationReport& rep, const std::string& name, const Mat& M) {
  ValidationIssue is{name + " finite", M.allFinite(), M.allFinite() ? 0.0 : 1.0,
                     ""};
  rep.issues.push_back(is);
}

}  // namespace

ModelParams ModelParams::with_impact_scale(double scale) const {
  ModelParams out = *this;
  out.h = scale * h;
  return out;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& is : issues) {
    if (!is.pass) {
      os << "[fail] " << is.name;
      if (!is.detail.empty()) os << " (" << is.detail << ")";
      os << " magnitude=" << is.magnitude << "; ";
    }
  }
  const std::string s = os.str();
  return s.empty() ? "all checks passed" : s;
}

ValidationReport validate_params(const ModelParams& prm) {
  ValidationReport rep;
  const int K = prm.K;

  {
    ValidationIssue is{"dimensions", prm.K >= 1 && prm.D >= 1,
                       prm.K >= 1 && prm.D >= 1 ? 0.0 : 1.0, "K, D >= 1"};
    rep.issues.push_back(is);
  }
  {
    ValidationIssue is{"horizon", prm.T > 0.0, prm.T > 0.0 ? 0.0 : 1.0,
                       "T > 0"};
    rep.issues.push_back(is);
  }

  check_shape(rep, "a", prm.a, K, K);
  check_shape(rep, "b", prm.b, K, K);
  check_shape(rep, "h", prm.h, K, K);
  check_shape(rep, "p", prm.p, K, K);
  check_shape(rep, "phi", prm.phi, K, K);
  check_shape(rep, "psi", prm.psi, K, K);
  check_shape(rep, "r_B", prm.rB, K, K);
  check_shape(rep, "r_I", prm.rI, K, K);
  check_shape(rep, "sigma", prm.sigma, K, prm.D);
  for (const auto& is : rep.issues) {
    if (!is.pass) {
      rep.pass = false;
      return rep;  // shape errors make the remaining checks meaningless
    }
  }

  check_pd(rep, "a", prm.a);
  check_pd(rep, "b", prm.b);
  check_psd(rep, "h", prm.h);
  check_psd(rep, "p", prm.p);
  check_psd(rep, "phi", prm.phi);
  check_psd(rep, "psi", prm.psi);
  check_psd(rep, "r_B", prm.rB);
  check_psd(rep, "r_I", prm.rI);

  {
    ValidationIssue is{"p,h commute", true, 0.0, ""};
    const double m = operator_norm(prm.p * prm.h - prm.h * prm.p);
    if (m > kTol) {
      is.pass = false;
      is.magnitude = m;
      is.detail = "p,h do not commute";
    }
    rep.issues.push_back(is);
  }
  check_psd(rep, "phi - h/2", Mat(prm.phi - 0.5 * prm.h));
  check_finite(rep, "sigma", prm.sigma);

  {
    ValidationIssue is{"initial states finite", true, 0.0, ""};
    const bool ok = prm.q_B0.allFinite() && prm.q_I0.allFinite() &&
                    prm.y0.allFinite() && prm.z0.allFinite() &&
                    std::isfinite(prm.x_B0) && std::isfinite(prm.x_I0) &&
                    prm.q_B0.size() == K && prm.q_I0.size() == K &&
                    prm.y0.size() == K && prm.z0.size() == K;
    is.pass = ok;
    is.magnitude = ok ? 0.0 : 1.0;
    rep.issues.push_back(is);
  }

  // Signal block: mean reversion stable, covariances PSD.
  {
    ValidationIssue is{"signal kappa stable", true, 0.0, ""};
    if (prm.signal.kappa.rows() != K || prm.signal.kappa.cols() != K) {
      is.pass = false;
      is.magnitude = 1.0;
      is.detail = "kappa shape";
    } else {
      const double re_min =
          prm.signal.kappa.eigenvalues().real().minCoeff();
      if (re_min < -kTol) {
        is.pass = false;
        is.magnitude = -re_min;
        is.detail = "kappa eigenvalue with negative real part";
      }
    }
    rep.issues.push_back(is);
  }
  check_psd(rep, "sigma_alpha", prm.signal.sigma_alpha);
  check_psd(rep, "alpha0_var", prm.signal.alpha0_var);
  {
    ValidationIssue is{"signal vectors", true, 0.0, ""};
    const bool ok = prm.signal.theta.size() == K &&
                    prm.signal.alpha0_mean.size() == K &&
                    prm.signal.theta.allFinite() &&
                    prm.signal.alpha0_mean.allFinite();
    is.pass = ok;
    is.magnitude = ok ? 0.0 : 1.0;
    rep.issues.push_back(is);
  }

  for (const auto& is : rep.issues) rep.pass = rep.pass && is.pass;
  return rep;
}

void require_valid(const ModelParams& params) {
  const auto rep = validate_params(params);
  if (!rep.pass) {
    throw std::invalid_argument("invalid model parameters: " + rep.summary());
  }
}

double contraction_constant(const ModelParams& prm) {
  require_valid(prm);

  const double na_inv = operator_norm(Mat(prm.a.inverse()));
  const double nb_inv = operator_norm(Mat(prm.b.inverse()));
  const double nh = operator_norm(prm.h);
  const double np = operator_norm(prm.p);
  const double nphi = operator_norm(prm.phi);
  const double npsi = operator_norm(prm.psi);
  const double nrB = operator_norm(prm.rB);
  const double nrI = operator_norm(prm.rI);

  const double e1 = na_inv * na_inv * (2.0 * nphi + nh) * (2.0 * nphi + nh) +
                    0.5 * (nb_inv * nb_inv + 1.0) * nh * nh + 1.0;
  const double e2 =
      na_inv * na_inv * (2.0 * nphi + 2.0 * nh) * (2.0 * nphi + 2.0 * nh) +
      4.0 * nb_inv * nb_inv * npsi * npsi + 1.5;
  const double e3 = 0.5 * np * np * (na_inv * na_inv + nb_inv * nb_inv);
  const double e4 = 0.5 * na_inv * na_inv * (nh * np + 2.0 * nrB) *
                    (nh * np + 2.0 * nrB);
  const double e5 = 2.0 * nb_inv * nb_inv * nrI * nrI;

  const double bracket = std::max({e1, e2, e3, e4, e5});
  return prm.T * prm.T * bracket;
}

}  // namespace equinash
