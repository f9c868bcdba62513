#pragma once

#include "equinash/market.hpp"

namespace equinash {

struct CriterionValue {
  double mean = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

// Penalized expected wealth of each agent, evaluated in running-cost form so
// no martingale term has to be simulated. The terminal-marking variants
// evaluate the original definition and exist as an independent route.
//
// The broker rate must carry the observation tag, the trader rate the
// full-information tag; a mismatch throws.
CriterionValue evaluate_trader_criterion(const ModelParams& params,
                                         const PathEnsemble& ens,
                                         const TaggedStrategy& nu,
                                         const TaggedStrategy& eta);
CriterionValue evaluate_broker_criterion(const ModelParams& params,
                                         const PathEnsemble& ens,
                                         const TaggedStrategy& nu,
                                         const TaggedStrategy& eta);
CriterionValue evaluate_trader_criterion_terminal(const ModelParams& params,
                                                  const PathEnsemble& ens,
                                                  const TaggedStrategy& nu,
                                                  const TaggedStrategy& eta);
CriterionValue evaluate_broker_criterion_terminal(const ModelParams& params,
                                                  const PathEnsemble& ens,
                                                  const TaggedStrategy& nu,
                                                  const TaggedStrategy& eta);

struct GateauxReport {
  double pairing = 0.0;       // <DJ, direction>
  double pairing_se = 0.0;
  double fd_value = 0.0;      // central finite difference on the criterion
  double fd_epsilon = 0.0;
  double direction_norm = 0.0;
};

// Directional derivative of the trader criterion in its own strategy along
// kappa (full-information tagged), with a common-random-numbers finite
// difference cross-check.
GateauxReport gateaux_trader(const ModelParams& params, const PathEnsemble& ens,
                             const TaggedStrategy& nu, const TaggedStrategy& eta,
                             const TaggedStrategy& kappa, double fd_eps = 1e-4);

// Same for the broker criterion along zeta (observation tagged).
GateauxReport gateaux_broker(const ModelParams& params, const PathEnsemble& ens,
                             const TaggedStrategy& nu, const TaggedStrategy& eta,
                             const TaggedStrategy& zeta, double fd_eps = 1e-4);

struct ConcavityPoint {
  double rho = 0.0;
  double chord_gap = 0.0;   // J(blend) - rho J(x) - (1-rho) J(y)
  double gap_se = 0.0;
  double quadratic_gap = 0.0;  // direct evaluation of the quadratic terms
};

struct ConcavityReport {
  std::vector<ConcavityPoint> points;
  bool pass = true;  // chord_gap >= -3 se everywhere
};

// Chord check of concavity of the trader criterion in eta (x, y candidates),
// holding nu fixed. quadratic_gap evaluates the exact decomposition of the
// gap into its positive quadratic pieces on the same paths.
ConcavityReport concavity_probe_trader(const ModelParams& params,
                                       const PathEnsemble& ens,
                                       const TaggedStrategy& nu,
                                       const TaggedStrategy& eta_x,
                                       const TaggedStrategy& eta_y,
                                       const std::vector<double>& rhos);

ConcavityReport concavity_probe_broker(const ModelParams& params,
                                       const PathEnsemble& ens,
                                       const TaggedStrategy& eta,
                                       const TaggedStrategy& nu_x,
                                       const TaggedStrategy& nu_y,
                                       const std::vector<double>& rhos);

}  // namespace equinash
