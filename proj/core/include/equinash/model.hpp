#pragma once

#include <string>
#include <vector>

#include "equinash/linalg.hpp"

namespace equinash {

// Latent drift signal: Ornstein-Uhlenbeck with mean reversion kappa, long-run
// mean theta and volatility sigma_alpha; Gaussian initial condition.
struct SignalParams {
  Mat kappa;        // K x K
  Vec theta;        // K
  Mat sigma_alpha;  // K x K
  Vec alpha0_mean;  // K
  Mat alpha0_var;   // K x K, PSD
};

// All market and game constants. Matrices are K x K unless noted.
struct ModelParams {
  int K = 1;  // asset count
  int D = 1;  // Brownian dimension
  double T = 1.0;

  Mat a, b;      // instantaneous transaction costs (positive definite)
  Mat h, p;      // transient impact feed and decay (PSD, commuting)
  Mat phi, psi;  // terminal inventory penalties (PSD)
  Mat rB, rI;    // running inventory penalties (PSD)

  Vec q_B0, q_I0;  // initial inventories
  double x_B0 = 0.0, x_I0 = 0.0;
  Vec y0;  // initial transient impact
  Vec z0;  // initial unimpacted price
  Mat sigma;  // K x D price diffusion

  SignalParams signal;

  // Convenience: identical parameters with the impact feed rescaled so that
  // h_new = scale * h. Used by the impact-strength expansion studies.
  ModelParams with_impact_scale(double scale) const;
};

struct ValidationIssue {
  std::string name;
  bool pass = true;
  double magnitude = 0.0;  // measured violation (0 when passing)
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool pass = true;

  std::string summary() const;
};

// Checks every structural invariant (symmetry, definiteness, p/h commutation,
// phi - h/2 PSD, finiteness, signal stability) and reports each with the
// measured violation magnitude. Never throws; the report carries failures.
ValidationReport validate_params(const ModelParams& params);

// Throws std::invalid_argument with the report summary when invalid.
void require_valid(const ModelParams& params);

// Time-scaled bound for the joint best-response map: T^2 times the largest of
// five operator-norm expressions in the model constants. The map is a
// contraction when this is below one.
double contraction_constant(const ModelParams& params);

}  // namespace equinash
