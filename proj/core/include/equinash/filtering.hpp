#pragma once

#include <memory>
#include <string>
#include <vector>

#include "equinash/market.hpp"

namespace equinash {

// Conditional law of the signal given prices observed up to each node.
// The covariance recursion is path-independent; means are per path.
struct KalmanResult {
  PathArray mean;                   // K per node, E[alpha_k | z_0..z_k]
  std::vector<Mat> cov;             // per node
  PathArray innovation;             // K per quadrature node, dz_k - mean_k dt
  std::vector<Mat> innovation_cov;  // per quadrature node
};

KalmanResult kalman_filter(const ModelParams& params, const TimeGrid& grid,
                           const PathArray& z);

// Sample autocorrelations of the normalized innovations of one path.
std::vector<double> innovation_autocorrelation(const KalmanResult& kal,
                                               int path, int max_lag);

struct ProjectionReport {
  bool ridge_used = false;
  int degenerate_columns = 0;  // near-constant columns dropped per fit
};

// Cross-sectional least squares realization of conditional expectations.
//
// Features are exogenous per node: observation set (z, filtered signal, its
// impact-weighted and plain running integrals, detrended price integral) and
// full-information set (adds the signal itself and its integrals), each with
// an intercept and all degree-2 monomials. Rank-deficient designs fall back
// to a small ridge and are flagged. The feature map is fixed per ensemble, so
// projection is a linear operator on targets.
class ProjectionContext {
 public:
  ProjectionContext(const ModelParams& params, const PathEnsemble& ens,
                    const KalmanResult& kalman, double ridge = 1e-8);
  ~ProjectionContext();

  ProjectionContext(const ProjectionContext&) = delete;
  ProjectionContext& operator=(const ProjectionContext&) = delete;

  // Fitted values of the per-node regression of target on the feature set.
  PathArray project(const PathArray& target, Filtration f) const;

  // Same with caller-supplied extra feature series appended (degree 1).
  PathArray project_with_extra(const PathArray& target, Filtration f,
                               const std::vector<const PathArray*>& extra) const;

  int feature_count(Filtration f) const;
  const ProjectionReport& last_report() const;

  const PathArray& kalman_mean() const;

  // Random adapted field: linear blend of the standardized features with
  // N(0,1) coefficients, optionally passed through tanh. Unit H2 norm.
  PathArray random_adapted_field(Filtration f, uint64_t seed, uint64_t index,
                                 bool nonlinear, double dt) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// project(target) via a context; the observation-filtration surrogate for
// conditional expectations.
PathArray project_onto_observation(const ProjectionContext& ctx,
                                   const PathArray& target);

struct ParticleFilterResult {
  Eigen::MatrixXd mean;  // n_nodes x K
  Eigen::MatrixXd se;    // n_nodes x K, asymptotic MC standard errors
  double min_ess_fraction = 1.0;
  bool degenerate_fallback = false;  // resample-every-step engaged
};

// Bootstrap particle filter for one path; independent oracle for the Kalman
// mean. Systematic resampling at ESS < 50%; ESS < 1% switches to
// resample-every-step and flags the run.
ParticleFilterResult particle_filter_oracle(const ModelParams& params,
                                            const TimeGrid& grid,
                                            const PathEnsemble& ens, int path,
                                            int n_particles, uint64_t seed);

// Per-node cross-path diagnostics: t, cov entries, innovation mean/variance.
void write_filter_diagnostics_csv(const std::string& file, const TimeGrid& grid,
                                  const ModelParams& params,
                                  const KalmanResult& kal);

}  // namespace equinash
