#pragma once

#include <array>

#include "equinash/filtering.hpp"

namespace equinash {

// The quintuple the joint best-response map acts on. nu and Y are
// observation-adapted, eta/QB/QI are full-information processes.
struct StateBundle {
  PathArray nu, eta, Y, QB, QI;
};

StateBundle zero_bundle(const ModelParams& params, const PathEnsemble& ens);

double bundle_norm(const StateBundle& b, double dt);
double bundle_distance(const StateBundle& x, const StateBundle& y, double dt);

// Everything the map needs besides the bundle. The projection context is
// shared across solves on the same ensemble so the conditional-expectation
// surrogate is one fixed linear operator.
struct PhiContext {
  const ModelParams* params = nullptr;
  const PathEnsemble* ens = nullptr;
  const ProjectionContext* proj = nullptr;

  // grid precomputations
  Mat step_decay;                 // e^{-p dt}
  std::vector<Vec> decay_y;       // e^{-t_k p} y0
  std::vector<Mat> signal_tail;   // sum_{j>=k} e^{-kappa (t_j - t_k)} dt
  std::vector<double> theta_tail; // (Nq - k) dt
  Mat half_a_inv, half_b_inv;
  Mat two_phi_minus_h;
  double contraction_c = 0.0;
};

PhiContext make_phi_context(const ModelParams& params, const PathEnsemble& ens,
                            const ProjectionContext& proj);

// One sweep of the joint best-response map. The broker component projects its
// pathwise target onto the observation features; the trader component uses
// the exact conditional of the signal and realized path values of the other
// processes; the forward components integrate the input rates.
StateBundle apply_best_response(const PhiContext& ctx, const StateBundle& in);

struct ConvergenceTrace {
  struct Row {
    int iteration = 0;
    double delta = 0.0;
    std::array<double, 5> component{};  // nu, eta, Y, QB, QI
  };
  std::vector<Row> rows;
  bool converged = false;
  bool within_guarantee = false;  // contraction constant < 1
  double contraction_c = 0.0;
  double final_residual = 0.0;
  double fitted_ratio = 0.0;  // geometric fit of successive deltas
};

// Iterates the map from the zero bundle until the bundle distance falls
// below tol. Proceeds with a warning when the contraction bound is >= 1.
std::pair<StateBundle, ConvergenceTrace> solve_picard(const PhiContext& ctx,
                                                      double tol, int max_iter);

struct ContractionProbeReport {
  std::vector<double> ratios;  // squared-norm ratios per random pair
  double max_ratio = 0.0;
  double contraction_c = 0.0;
  double slack = 0.05;
  bool pass = false;
};

// Measures ||Phi(x) - Phi(y)||^2 / ||x - y||^2 over random adapted bundle
// pairs and compares against the theoretical constant plus slack.
ContractionProbeReport contraction_probe(const PhiContext& ctx, int n_pairs,
                                         uint64_t seed, double slack = 0.05);

struct FbsdeResiduals {
  // terminal conditions, ensemble norms and the SEs of those norms
  double z_terminal = 0.0, z_terminal_se = 0.0;
  double eta_terminal = 0.0, eta_terminal_se = 0.0;
  double nu_terminal = 0.0, nu_terminal_se = 0.0;
  // backward lines: nu, eta, Z, eta_hat, QB_hat, QI_hat; each residual is the
  // ensemble norm of the accumulated (projected increment - drift dt) gap
  std::array<double, 6> drift_residual{};
  std::array<double, 6> drift_se{};
  std::array<double, 6> drift_scale{};  // norm of the line's total variation
  bool all_finite = true;
};

// Builds the observation-projected processes and the auxiliary decay-adjusted
// conditional process Z, then checks the terminal conditions and per-line
// drift consistency of the backward system at a converged bundle.
FbsdeResiduals fbsde_consistency_check(const PhiContext& ctx,
                                       const StateBundle& bundle,
                                       bool converged);

// Trace CSV: iteration, delta, per-component delta.
void write_trace_csv(const std::string& file, const ConvergenceTrace& tr);

// Strategy CSV: path, t, nu_1..K, eta_1..K.
void write_strategy_csv(const std::string& file, const TimeGrid& grid,
                        const PathArray& nu, const PathArray& eta);

}  // namespace equinash
