#include "equinash/market.hpp"

#include <cmath>
#include <stdexcept>

#include "equinash/csvio.hpp"
#include "equinash/rng.hpp"
#include "equinash/threading.hpp"

namespace equinash {

namespace {
// Substream tags for the per-path counter-based draws.
constexpr uint32_t kStreamBrownian = 0;
constexpr uint32_t kStreamSignal = 1;
constexpr uint32_t kStreamSignalInit = 2;
}  // namespace

PathEnsemble simulate_signal_and_price(const ModelParams& prm,
                                       const TimeGrid& grid, int n_paths,
                                       uint64_t seed) {
  require_valid(prm);
  if (n_paths < 1) throw std::invalid_argument("simulate: n_paths must be >= 1");

  const int K = prm.K, D = prm.D, N = grid.n_nodes();
  const double dt = grid.dt, sq_dt = std::sqrt(grid.dt);

  PathEnsemble ens;
  ens.grid = grid;
  ens.n_paths = n_paths;
  ens.seed = seed;
  ens.K = K;
  ens.D = D;
  ens.dW = PathArray(n_paths, N, D);
  ens.alpha = PathArray(n_paths, N, K);
  ens.z = PathArray(n_paths, N, K);

  const OuStep ou = discretize_ou(prm.signal.kappa, prm.signal.sigma_alpha, dt);
  const Mat a0_sqrt = psd_sqrt(prm.signal.alpha0_var);

  parallel_for(n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec xi(std::max(K, D)), a(K), zv(K), w(D);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      const NormalStream gw(seed, static_cast<uint32_t>(p), kStreamBrownian);
      const NormalStream ga(seed, static_cast<uint32_t>(p), kStreamSignal);
      const NormalStream g0(seed, static_cast<uint32_t>(p), kStreamSignalInit);

      for (int c = 0; c < K; ++c) xi(c) = g0(c);
      a = prm.signal.alpha0_mean + a0_sqrt * xi.head(K);
      zv = prm.z0;

      for (int k = 0; k < N; ++k) {
        for (int c = 0; c < K; ++c) ens.alpha.at(p, k, c) = a(c);
        for (int c = 0; c < K; ++c) ens.z.at(p, k, c) = zv(c);
        if (k + 1 >= N) break;

        for (int d = 0; d < D; ++d) {
          w(d) = sq_dt * gw(static_cast<uint64_t>(k) * D + d);
          ens.dW.at(p, k, d) = w(d);
        }
        zv += a * dt + prm.sigma * w;

        for (int c = 0; c < K; ++c)
          xi(c) = ga(static_cast<uint64_t>(k) * K + c);
        a = prm.signal.theta + ou.F * (a - prm.signal.theta) +
            ou.Q_sqrt * xi.head(K);
      }
    }
  });

  if (!ens.alpha.all_finite() || !ens.z.all_finite()) {
    throw std::runtime_error("simulate: non-finite draw");
  }
  return ens;
}

PathArray propagate_transient_impact(const ModelParams& prm,
                                     const TimeGrid& grid,
                                     const PathArray& nu) {
  if (nu.dim() != prm.K || nu.n_nodes() != grid.n_nodes()) {
    throw std::invalid_argument("propagate_transient_impact: shape mismatch");
  }
  if (!nu.all_finite()) {
    throw std::invalid_argument("propagate_transient_impact: non-finite rate");
  }
  const Mat Edt = matrix_exp(prm.p, -grid.dt);

  // hn_j = h nu_j, then Y = e^{-tp} y0 + conv(hn).
  PathArray hn(nu.n_paths(), nu.n_nodes(), nu.dim());
  const int K = prm.K;
  parallel_for(nu.n_paths(), [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) {
      for (int k = 0; k < nu.n_nodes(); ++k) {
        const double* x = nu.node(static_cast<int>(p), k);
        double* o = hn.node(static_cast<int>(p), k);
        for (int i = 0; i < K; ++i) {
          double s = 0.0;
          for (int j = 0; j < K; ++j) s += prm.h(i, j) * x[j];
          o[i] = s;
        }
      }
    }
  });

  PathArray Y = decay_convolution(hn, Edt, grid.dt);

  // homogeneous part, deterministic per node
  std::vector<Vec> hom(grid.n_nodes());
  for (int k = 0; k < grid.n_nodes(); ++k) {
    hom[k] = matrix_exp(prm.p, -grid.times[k]) * prm.y0;
  }
  parallel_for(Y.n_paths(), [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) {
      for (int k = 0; k < Y.n_nodes(); ++k) {
        double* o = Y.node(static_cast<int>(p), k);
        for (int i = 0; i < K; ++i) o[i] += hom[k](i);
      }
    }
  });
  return Y;
}

CashInventory propagate_inventories_and_cash(const ModelParams& prm,
                                             const TimeGrid& grid,
                                             const PathArray& nu,
                                             const PathArray& eta,
                                             const PathArray& z,
                                             const PathArray& Y) {
  if (!nu.same_shape(eta) || !nu.same_shape(z) || !nu.same_shape(Y)) {
    throw std::invalid_argument("propagate_inventories_and_cash: shape mismatch");
  }
  const int K = prm.K, N = grid.n_nodes();
  const double dt = grid.dt;

  CashInventory ci;
  ci.QB = PathArray(nu.n_paths(), N, K);
  ci.QI = PathArray(nu.n_paths(), N, K);
  ci.XB = PathArray(nu.n_paths(), N, 1);
  ci.XI = PathArray(nu.n_paths(), N, 1);

  parallel_for(nu.n_paths(), [&](std::size_t p0, std::size_t p1) {
    Vec qb(K), qi(K), s(K), nv(K), ev(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      qb = prm.q_B0;
      qi = prm.q_I0;
      double xb = prm.x_B0, xi_cash = prm.x_I0;
      for (int k = 0; k < N; ++k) {
        for (int c = 0; c < K; ++c) ci.QB.at(p, k, c) = qb(c);
        for (int c = 0; c < K; ++c) ci.QI.at(p, k, c) = qi(c);
        ci.XB.at(p, k, 0) = xb;
        ci.XI.at(p, k, 0) = xi_cash;
        if (k + 1 >= N) break;
        for (int c = 0; c < K; ++c) {
          nv(c) = nu.at(p, k, c);
          ev(c) = eta.at(p, k, c);
          s(c) = Y.at(p, k, c) + z.at(p, k, c);
        }
        const double broker_trade = (s + prm.a * nv).dot(nv);
        const double client_trade = (s + prm.b * ev).dot(ev);
        qb += (nv - ev) * dt;
        qi += ev * dt;
        xb += (-broker_trade + client_trade) * dt;
        xi_cash += -client_trade * dt;
      }
    }
  });
  return ci;
}

void write_ensemble_csv(const std::string& file, const PathEnsemble& ens,
                        const PathArray& Y, const CashInventory& ci) {
  CsvWriter csv(file);
  std::vector<std::string> header{"path", "t"};
  auto add_block = [&](const std::string& base, int n) {
    for (int c = 1; c <= n; ++c) header.push_back(base + "_" + std::to_string(c));
  };
  add_block("alpha", ens.K);
  add_block("z", ens.K);
  add_block("Y", ens.K);
  add_block("S", ens.K);
  add_block("Q_B", ens.K);
  add_block("Q_I", ens.K);
  header.push_back("X_B");
  header.push_back("X_I");
  csv.write_header(header);

  for (int p = 0; p < ens.n_paths; ++p) {
    for (int k = 0; k < ens.grid.n_nodes(); ++k) {
      csv.begin_row();
      csv.field(static_cast<long long>(p));
      csv.field(ens.grid.times[k]);
      for (int c = 0; c < ens.K; ++c) csv.field(ens.alpha.at(p, k, c));
      for (int c = 0; c < ens.K; ++c) csv.field(ens.z.at(p, k, c));
      for (int c = 0; c < ens.K; ++c) csv.field(Y.at(p, k, c));
      for (int c = 0; c < ens.K; ++c)
        csv.field(Y.at(p, k, c) + ens.z.at(p, k, c));
      for (int c = 0; c < ens.K; ++c) csv.field(ci.QB.at(p, k, c));
      for (int c = 0; c < ens.K; ++c) csv.field(ci.QI.at(p, k, c));
      csv.field(ci.XB.at(p, k, 0));
      csv.field(ci.XI.at(p, k, 0));
      csv.end_row();
    }
  }
}

}  // namespace equinash
