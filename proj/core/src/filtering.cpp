#include "equinash/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "equinash/csvio.hpp"
#include "equinash/rng.hpp"
#include "equinash/threading.hpp"

namespace equinash {

// ---------------------------------------------------------------- Kalman ----

KalmanResult kalman_filter(const ModelParams& prm, const TimeGrid& grid,
                           const PathArray& z) {
  const int K = prm.K, N = grid.n_nodes();
  if (z.dim() != K || z.n_nodes() != N) {
    throw std::invalid_argument("kalman_filter: shape mismatch");
  }
  const double dt = grid.dt;
  const Mat R = prm.sigma * prm.sigma.transpose() * dt;
  if (sym_min_eigenvalue(R) <= 0.0) {
    throw std::invalid_argument(
        "kalman_filter: singular innovation covariance (sigma sigma^T dt)");
  }
  const OuStep ou = discretize_ou(prm.signal.kappa, prm.signal.sigma_alpha, dt);

  KalmanResult out;
  out.mean = PathArray(z.n_paths(), N, K);
  out.innovation = PathArray(z.n_paths(), N, K);
  out.cov.resize(N);
  out.innovation_cov.resize(N);

  // Covariance pass is path independent.
  std::vector<Mat> gain(N);
  Mat P = prm.signal.alpha0_var;
  for (int k = 0; k < N; ++k) {
    out.cov[k] = P;
    if (k + 1 >= N) break;
    const Mat S = P * (dt * dt) + R;
    out.innovation_cov[k] = S;
    const Mat G = P * dt * S.inverse();
    gain[k] = G;
    const Mat Ppost = P - G * dt * P;
    P = ou.F * Ppost * ou.F.transpose() + ou.Q;
    P = 0.5 * (P + P.transpose());
  }

  parallel_for(z.n_paths(), [&](std::size_t p0, std::size_t p1) {
    Vec m(K), e(K), dz(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      m = prm.signal.alpha0_mean;
      for (int k = 0; k < N; ++k) {
        for (int c = 0; c < K; ++c) out.mean.at(p, k, c) = m(c);
        if (k + 1 >= N) break;
        for (int c = 0; c < K; ++c)
          dz(c) = z.at(p, k + 1, c) - z.at(p, k, c);
        e = dz - m * dt;
        for (int c = 0; c < K; ++c) out.innovation.at(p, k, c) = e(c);
        m = prm.signal.theta +
            ou.F * ((m + gain[k] * e) - prm.signal.theta);
      }
    }
  });
  return out;
}

std::vector<double> innovation_autocorrelation(const KalmanResult& kal,
                                               int path, int max_lag) {
  const int Nq = kal.innovation.n_nodes() - 1;
  const int K = kal.innovation.dim();
  // Whitened scalar series: first component of S^{-1/2} e_k.
  std::vector<double> s(Nq, 0.0);
  for (int k = 0; k < Nq; ++k) {
    Eigen::SelfAdjointEigenSolver<Mat> es(kal.innovation_cov[k]);
    Mat W = es.operatorInverseSqrt();
    Vec e(K);
    for (int c = 0; c < K; ++c) e(c) = kal.innovation.at(path, k, c);
    s[k] = (W * e)(0);
  }
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / Nq;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  std::vector<double> rho(max_lag + 1, 0.0);
  rho[0] = 1.0;
  for (int lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (int k = lag; k < Nq; ++k) c += (s[k] - mean) * (s[k - lag] - mean);
    rho[lag] = var > 0 ? c / var : 0.0;
  }
  return rho;
}

// ------------------------------------------------------------ projection ----

namespace {

struct NodeDesign {
  std::vector<int> base_kept;          // indices into the base column list
  std::vector<double> base_mean, base_inv_std;
  struct Product {
    int i, j;  // indices into base_kept
    double mean, inv_std;
  };
  std::vector<Product> products;
  int n_cols = 1;  // intercept + kept base + kept products
  Eigen::LDLT<Mat> gram;
  bool ridge_used = false;
};

constexpr double kDegenerateStd = 1e-12;

}  // namespace

struct ProjectionContext::Impl {
  int n_paths = 0, n_nodes = 0;
  double dt = 0.0;
  double ridge = 1e-8;

  std::vector<PathArray> base_obs;   // each dim K
  std::vector<PathArray> base_full;  // obs columns first, then extra
  const PathArray* kal_mean = nullptr;
  PathArray kal_mean_store;

  std::vector<NodeDesign> design_obs;
  std::vector<NodeDesign> design_full;
  mutable std::mutex full_mutex;
  mutable bool full_built = false;

  mutable ProjectionReport report;

  int base_count(Filtration f) const {
    return static_cast<int>(f == Filtration::Observation ? base_obs.size()
                                                         : base_full.size());
  }
  const std::vector<PathArray>& base(Filtration f) const {
    return f == Filtration::Observation ? base_obs : base_full;
  }
  std::vector<NodeDesign>& designs(Filtration f) const {
    return const_cast<std::vector<NodeDesign>&>(
        f == Filtration::Observation ? design_obs : design_full);
  }

  void build_designs(Filtration f);
  void ensure_full() const;

  // Materialize the standardized design matrix of one node.
  void materialize(Filtration f, int node, Mat& X,
                   const std::vector<const PathArray*>* extra) const;
};

void ProjectionContext::Impl::materialize(
    Filtration f, int node, Mat& X,
    const std::vector<const PathArray*>* extra) const {
  const auto& cols = base(f);
  const auto& d = designs(f)[static_cast<std::size_t>(node)];
  const int nb = static_cast<int>(d.base_kept.size());
  const int np = static_cast<int>(d.products.size());
  const int ne = extra ? static_cast<int>(extra->size()) : 0;
  X.resize(n_paths, 1 + nb + np + ne);
  X.col(0).setOnes();
  // base columns come flattened over (array, component)
  const int K = cols.empty() ? 1 : cols[0].dim();
  for (int b = 0; b < nb; ++b) {
    const int flat = d.base_kept[b];
    const PathArray& arr = cols[flat / K];
    const int comp = flat % K;
    for (int p = 0; p < n_paths; ++p) {
      X(p, 1 + b) = (arr.at(p, node, comp) - d.base_mean[b]) * d.base_inv_std[b];
    }
  }
  for (int q = 0; q < np; ++q) {
    const auto& pr = d.products[q];
    for (int p = 0; p < n_paths; ++p) {
      const double v = X(p, 1 + pr.i) * X(p, 1 + pr.j);
      X(p, 1 + nb + q) = (v - pr.mean) * pr.inv_std;
    }
  }
  if (extra) {
    for (int e = 0; e < ne; ++e) {
      const PathArray& arr = *(*extra)[e];
      for (int p = 0; p < n_paths; ++p) X(p, 1 + nb + np + e) = arr.at(p, node, 0);
    }
  }
}

void ProjectionContext::Impl::build_designs(Filtration f) {
  const auto& cols = base(f);
  auto& ds = designs(f);
  ds.resize(n_nodes);
  const int K = cols.empty() ? 1 : cols[0].dim();
  const int n_base_flat = static_cast<int>(cols.size()) * K;

  parallel_for(n_nodes, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t kk = k0; kk < k1; ++kk) {
      const int k = static_cast<int>(kk);
      NodeDesign& d = ds[kk];
      // first pass: base column moments
      for (int flat = 0; flat < n_base_flat; ++flat) {
        const PathArray& arr = cols[flat / K];
        const int comp = flat % K;
        double s = 0.0, ss = 0.0;
        for (int p = 0; p < n_paths; ++p) s += arr.at(p, k, comp);
        const double mean = s / n_paths;
        for (int p = 0; p < n_paths; ++p) {
          const double dv = arr.at(p, k, comp) - mean;
          ss += dv * dv;
        }
        const double sd = std::sqrt(ss / std::max(1, n_paths - 1));
        if (sd > kDegenerateStd * (1.0 + std::abs(mean))) {
          d.base_kept.push_back(flat);
          d.base_mean.push_back(mean);
          d.base_inv_std.push_back(1.0 / sd);
        }
      }
      const int nb = static_cast<int>(d.base_kept.size());
      // second pass: product column moments on standardized base
      Mat Xb(n_paths, nb);
      for (int b = 0; b < nb; ++b) {
        const int flat = d.base_kept[b];
        const PathArray& arr = cols[flat / K];
        const int comp = flat % K;
        for (int p = 0; p < n_paths; ++p) {
          Xb(p, b) = (arr.at(p, k, comp) - d.base_mean[b]) * d.base_inv_std[b];
        }
      }
      for (int i = 0; i < nb; ++i) {
        for (int j = i; j < nb; ++j) {
          double s = 0.0, ss = 0.0;
          for (int p = 0; p < n_paths; ++p) s += Xb(p, i) * Xb(p, j);
          const double mean = s / n_paths;
          for (int p = 0; p < n_paths; ++p) {
            const double dv = Xb(p, i) * Xb(p, j) - mean;
            ss += dv * dv;
          }
          const double sd = std::sqrt(ss / std::max(1, n_paths - 1));
          if (sd > kDegenerateStd * (1.0 + std::abs(mean))) {
            d.products.push_back({i, j, mean, 1.0 / sd});
          }
        }
      }
      d.n_cols = 1 + nb + static_cast<int>(d.products.size());

      Mat X;
      materialize(f, k, X, nullptr);
      Mat G = X.transpose() * X;
      d.gram.compute(G);
      const Vec piv = d.gram.vectorD().cwiseAbs();
      const double pmax = piv.maxCoeff();
      if (d.gram.info() != Eigen::Success ||
          piv.minCoeff() <= 1e-12 * std::max(1.0, pmax)) {
        const double lam = ridge * (G.trace() / d.n_cols + 1.0);
        G += lam * Mat::Identity(d.n_cols, d.n_cols);
        d.gram.compute(G);
        d.ridge_used = true;
      }
    }
  });
}

void ProjectionContext::Impl::ensure_full() const {
  std::lock_guard<std::mutex> lock(full_mutex);
  if (full_built) return;
  const_cast<Impl*>(this)->build_designs(Filtration::Full);
  full_built = true;
}

ProjectionContext::ProjectionContext(const ModelParams& prm,
                                     const PathEnsemble& ens,
                                     const KalmanResult& kalman, double ridge)
    : impl_(std::make_unique<Impl>()) {
  impl_->n_paths = ens.n_paths;
  impl_->n_nodes = ens.grid.n_nodes();
  impl_->dt = ens.grid.dt;
  impl_->ridge = ridge;
  impl_->kal_mean_store = kalman.mean;
  impl_->kal_mean = &impl_->kal_mean_store;

  const Mat Edt = matrix_exp(prm.p, -ens.grid.dt);

  // detrended price level z - z0
  PathArray zd(ens.n_paths, impl_->n_nodes, prm.K);
  for (int p = 0; p < ens.n_paths; ++p) {
    for (int k = 0; k < impl_->n_nodes; ++k) {
      for (int c = 0; c < prm.K; ++c) {
        zd.at(p, k, c) = ens.z.at(p, k, c) - prm.z0(c);
      }
    }
  }

  impl_->base_obs.push_back(ens.z);
  impl_->base_obs.push_back(kalman.mean);
  impl_->base_obs.push_back(decay_convolution(kalman.mean, Edt, ens.grid.dt));
  impl_->base_obs.push_back(cumulative_integral(kalman.mean, ens.grid.dt));
  impl_->base_obs.push_back(cumulative_integral(zd, ens.grid.dt));

  impl_->base_full = impl_->base_obs;
  impl_->base_full.push_back(ens.alpha);
  impl_->base_full.push_back(decay_convolution(ens.alpha, Edt, ens.grid.dt));
  impl_->base_full.push_back(cumulative_integral(ens.alpha, ens.grid.dt));

  impl_->build_designs(Filtration::Observation);

  // 10x-paths-per-feature guidance; the full set is the larger one.
  const int worst =
      1 + static_cast<int>(impl_->base_full.size()) * prm.K * (1 + 1) +
      (static_cast<int>(impl_->base_full.size()) * prm.K *
       (static_cast<int>(impl_->base_full.size()) * prm.K + 1)) /
          2;
  if (ens.n_paths < 10 * worst) {
    throw std::invalid_argument(
        "ProjectionContext: fewer than 10 paths per feature column");
  }
}

ProjectionContext::~ProjectionContext() = default;

int ProjectionContext::feature_count(Filtration f) const {
  if (f == Filtration::Full) impl_->ensure_full();
  int m = 0;
  for (const auto& d : impl_->designs(f)) m = std::max(m, d.n_cols);
  return m;
}

const ProjectionReport& ProjectionContext::last_report() const {
  return impl_->report;
}

const PathArray& ProjectionContext::kalman_mean() const {
  return *impl_->kal_mean;
}

PathArray ProjectionContext::project_with_extra(
    const PathArray& target, Filtration f,
    const std::vector<const PathArray*>& extra) const {
  if (f == Filtration::Full) impl_->ensure_full();
  if (target.n_paths() != impl_->n_paths ||
      target.n_nodes() != impl_->n_nodes) {
    throw std::invalid_argument("project: target shape mismatch");
  }
  const int K = target.dim();
  PathArray out(target.n_paths(), target.n_nodes(), K);
  bool any_ridge = false;
  int degenerate = 0;

  const bool use_extra = !extra.empty();
  parallel_for(impl_->n_nodes, [&](std::size_t k0, std::size_t k1) {
    Mat X;
    for (std::size_t kk = k0; kk < k1; ++kk) {
      const int k = static_cast<int>(kk);
      const NodeDesign& d = impl_->designs(f)[kk];
      impl_->materialize(f, k, X, use_extra ? &extra : nullptr);

      Eigen::LDLT<Mat> local;
      const Eigen::LDLT<Mat>* fac = &d.gram;
      if (use_extra) {
        Mat G = X.transpose() * X;
        local.compute(G);
        const Vec piv = local.vectorD().cwiseAbs();
        if (local.info() != Eigen::Success ||
            piv.minCoeff() <= 1e-12 * std::max(1.0, piv.maxCoeff())) {
          const double lam = impl_->ridge * (G.trace() / G.cols() + 1.0);
          G += lam * Mat::Identity(G.cols(), G.cols());
          local.compute(G);
        }
        fac = &local;
      }

      Vec y(impl_->n_paths), rhs, coef, fit;
      for (int c = 0; c < K; ++c) {
        for (int p = 0; p < impl_->n_paths; ++p) y(p) = target.at(p, k, c);
        rhs = X.transpose() * y;
        coef = fac->solve(rhs);
        fit = X * coef;
        for (int p = 0; p < impl_->n_paths; ++p) out.at(p, k, c) = fit(p);
      }
    }
  });

  for (const auto& d : impl_->designs(f)) {
    any_ridge = any_ridge || d.ridge_used;
    degenerate += (feature_count(f) - d.n_cols);
  }
  impl_->report.ridge_used = any_ridge;
  impl_->report.degenerate_columns = degenerate;
  return out;
}

PathArray ProjectionContext::project(const PathArray& target,
                                     Filtration f) const {
  return project_with_extra(target, f, {});
}

PathArray project_onto_observation(const ProjectionContext& ctx,
                                   const PathArray& target) {
  return ctx.project(target, Filtration::Observation);
}

PathArray ProjectionContext::random_adapted_field(Filtration f, uint64_t seed,
                                                  uint64_t index,
                                                  bool nonlinear,
                                                  double dt) const {
  if (f == Filtration::Full) impl_->ensure_full();
  const auto& cols = impl_->base(f);
  const int K = cols.empty() ? 1 : cols[0].dim();
  const int n_flat = static_cast<int>(cols.size()) * K;

  const NormalStream coeffs(mix_seed(seed, 0xF1E1Dull),
                            static_cast<uint32_t>(index), 0);
  std::vector<double> c(n_flat + 1);
  for (int i = 0; i <= n_flat; ++i) c[i] = coeffs(i);

  PathArray out(impl_->n_paths, impl_->n_nodes, K);
  parallel_for(impl_->n_paths, [&](std::size_t p0, std::size_t p1) {
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      for (int k = 0; k < impl_->n_nodes; ++k) {
        const NodeDesign& d = impl_->designs(f)[static_cast<std::size_t>(k)];
        for (int comp = 0; comp < K; ++comp) {
          double v = 0.5 * c[n_flat];
          for (std::size_t b = 0; b < d.base_kept.size(); ++b) {
            const int flat = d.base_kept[b];
            if (flat % K != comp && K > 1) continue;
            const PathArray& arr = cols[flat / K];
            const double x =
                (arr.at(p, k, flat % K) - d.base_mean[b]) * d.base_inv_std[b];
            v += c[flat] * x;
          }
          out.at(p, k, comp) = nonlinear ? std::tanh(v) : v;
        }
      }
    }
  });

  const auto nrm = h2_norm_with_se(out, dt);
  if (nrm.value > 1e-14) scale_in_place(out, 1.0 / nrm.value);
  return out;
}

// ------------------------------------------------------- particle filter ----

ParticleFilterResult particle_filter_oracle(const ModelParams& prm,
                                            const TimeGrid& grid,
                                            const PathEnsemble& ens, int path,
                                            int n_particles, uint64_t seed) {
  const int K = prm.K, N = grid.n_nodes();
  if (n_particles < 2) {
    throw std::invalid_argument("particle_filter_oracle: need >= 2 particles");
  }
  const double dt = grid.dt;
  const Mat R = prm.sigma * prm.sigma.transpose() * dt;
  const Mat Rinv = R.inverse();
  const OuStep ou = discretize_ou(prm.signal.kappa, prm.signal.sigma_alpha, dt);
  const Mat a0_sqrt = psd_sqrt(prm.signal.alpha0_var);

  const uint64_t seed_init = mix_seed(seed, 0xA0);
  const uint64_t seed_prop = mix_seed(seed, 0xA1);
  const uint64_t seed_resamp = mix_seed(seed, 0xA2);

  Eigen::MatrixXd particles(n_particles, K);
  for (int i = 0; i < n_particles; ++i) {
    const NormalStream g(seed_init, static_cast<uint32_t>(i), 0);
    Vec xi(K);
    for (int c = 0; c < K; ++c) xi(c) = g(c);
    particles.row(i) = (prm.signal.alpha0_mean + a0_sqrt * xi).transpose();
  }
  std::vector<double> logw(n_particles, -std::log(double(n_particles)));

  ParticleFilterResult out;
  out.mean = Eigen::MatrixXd::Zero(N, K);
  out.se = Eigen::MatrixXd::Zero(N, K);

  auto ess_fraction = [&](const std::vector<double>& w) {
    double s2 = 0.0;
    for (double v : w) s2 += v * v;
    return 1.0 / (s2 * n_particles);
  };

  bool always_resample = false;
  std::vector<double> w(n_particles);
  std::vector<int> idx(n_particles);
  Eigen::MatrixXd scratch(n_particles, K);

  for (int k = 0; k < N; ++k) {
    // normalized weights
    const double wmax = *std::max_element(logw.begin(), logw.end());
    double tot = 0.0;
    for (int i = 0; i < n_particles; ++i) {
      w[i] = std::exp(logw[i] - wmax);
      tot += w[i];
    }
    for (int i = 0; i < n_particles; ++i) w[i] /= tot;

    // estimate at node k (prior to assimilating dz_k)
    for (int c = 0; c < K; ++c) {
      double m = 0.0;
      for (int i = 0; i < n_particles; ++i) m += w[i] * particles(i, c);
      double v = 0.0;
      for (int i = 0; i < n_particles; ++i) {
        const double d = particles(i, c) - m;
        v += w[i] * d * d;
      }
      const double ess = ess_fraction(w) * n_particles;
      out.mean(k, c) = m;
      out.se(k, c) = std::sqrt(v / std::max(1.0, ess));
    }
    if (k + 1 >= N) break;

    // weight by the price increment likelihood
    Vec dz(K);
    for (int c = 0; c < K; ++c) dz(c) = ens.z.at(path, k + 1, c) - ens.z.at(path, k, c);
    for (int i = 0; i < n_particles; ++i) {
      Vec e = dz - particles.row(i).transpose() * dt;
      logw[i] += -0.5 * e.dot(Rinv * e);
    }
    const double wmax2 = *std::max_element(logw.begin(), logw.end());
    double tot2 = 0.0;
    for (int i = 0; i < n_particles; ++i) {
      w[i] = std::exp(logw[i] - wmax2);
      tot2 += w[i];
    }
    for (int i = 0; i < n_particles; ++i) w[i] /= tot2;

    const double ef = ess_fraction(w);
    out.min_ess_fraction = std::min(out.min_ess_fraction, ef);
    if (ef < 0.01) {
      always_resample = true;
      out.degenerate_fallback = true;
    }
    if (ef < 0.5 || always_resample) {
      // systematic resampling, one uniform per resample event
      const auto blk = Philox4x32::block(
          seed_resamp, {static_cast<uint32_t>(k), 0, 0, 0});
      const double u = uniform_from_bits(blk[0], blk[1]);
      double cum = w[0];
      int j = 0;
      for (int i = 0; i < n_particles; ++i) {
        const double pos = (i + u) / n_particles;
        while (pos > cum && j + 1 < n_particles) cum += w[++j];
        idx[i] = j;
      }
      for (int i = 0; i < n_particles; ++i) scratch.row(i) = particles.row(idx[i]);
      particles.swap(scratch);
      std::fill(logw.begin(), logw.end(), -std::log(double(n_particles)));
    } else {
      for (int i = 0; i < n_particles; ++i) logw[i] = std::log(w[i]);
    }

    // exact OU propagation
    for (int i = 0; i < n_particles; ++i) {
      const NormalStream g(seed_prop, static_cast<uint32_t>(i), 0);
      Vec xi(K);
      for (int c = 0; c < K; ++c)
        xi(c) = g(static_cast<uint64_t>(k) * K + c);
      particles.row(i) =
          (prm.signal.theta + ou.F * (particles.row(i).transpose() - prm.signal.theta) +
           ou.Q_sqrt * xi)
              .transpose();
    }
  }
  return out;
}

void write_filter_diagnostics_csv(const std::string& file, const TimeGrid& grid,
                                  const ModelParams& prm,
                                  const KalmanResult& kal) {
  CsvWriter csv(file);
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= prm.K; ++i)
    for (int j = 1; j <= prm.K; ++j)
      header.push_back("cov_" + std::to_string(i) + std::to_string(j));
  for (int i = 1; i <= prm.K; ++i)
    header.push_back("innov_mean_" + std::to_string(i));
  for (int i = 1; i <= prm.K; ++i)
    header.push_back("innov_var_" + std::to_string(i));
  csv.write_header(header);

  const int n_paths = kal.innovation.n_paths();
  for (int k = 0; k < grid.n_nodes(); ++k) {
    csv.begin_row();
    csv.field(grid.times[k]);
    for (int i = 0; i < prm.K; ++i)
      for (int j = 0; j < prm.K; ++j) csv.field(kal.cov[k](i, j));
    for (int c = 0; c < prm.K; ++c) {
      double m = 0.0;
      if (k + 1 < grid.n_nodes()) {
        for (int p = 0; p < n_paths; ++p) m += kal.innovation.at(p, k, c);
        m /= n_paths;
      }
      csv.field(m);
    }
    for (int c = 0; c < prm.K; ++c) {
      double m = 0.0, v = 0.0;
      if (k + 1 < grid.n_nodes()) {
        for (int p = 0; p < n_paths; ++p) m += kal.innovation.at(p, k, c);
        m /= n_paths;
        for (int p = 0; p < n_paths; ++p) {
          const double d = kal.innovation.at(p, k, c) - m;
          v += d * d;
        }
        v /= std::max(1, n_paths - 1);
      }
      csv.field(v);
    }
    csv.end_row();
  }
}

}  // namespace equinash
