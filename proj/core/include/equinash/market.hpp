#pragma once

#include <cstdint>
#include <string>

#include "equinash/model.hpp"
#include "equinash/paths.hpp"

namespace equinash {

// Exogenous randomness of a path ensemble: Brownian increments, latent drift
// signal and the unimpacted price. Regeneration with the same seed is
// bit-identical, each path draws from its own counter-based stream.
struct PathEnsemble {
  TimeGrid grid;
  int n_paths = 0;
  uint64_t seed = 0;
  int K = 1, D = 1;

  PathArray dW;     // D components; node k holds the increment over [t_k, t_{k+1})
  PathArray alpha;  // K, exact OU transitions
  PathArray z;      // K, z_{k+1} = z_k + alpha_k dt + sigma dW_k
};

PathEnsemble simulate_signal_and_price(const ModelParams& params,
                                       const TimeGrid& grid, int n_paths,
                                       uint64_t seed);

// Transient displacement driven by the broker rate:
// Y_k = e^{-t_k p} y0 + sum_{j<k} e^{(t_j - t_k) p} h nu_j dt.
PathArray propagate_transient_impact(const ModelParams& params,
                                     const TimeGrid& grid, const PathArray& nu);

struct CashInventory {
  PathArray QB, QI;  // K components
  PathArray XB, XI;  // scalar
};

// Euler recursions for inventories and cash at midprice S = Y + z.
CashInventory propagate_inventories_and_cash(const ModelParams& params,
                                             const TimeGrid& grid,
                                             const PathArray& nu,
                                             const PathArray& eta,
                                             const PathArray& z,
                                             const PathArray& Y);

// One row per (path, node): path, t, alpha, z, Y, S, Q_B, Q_I, X_B, X_I.
void write_ensemble_csv(const std::string& file, const PathEnsemble& ens,
                        const PathArray& Y, const CashInventory& ci);

}  // namespace equinash
