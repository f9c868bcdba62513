#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "equinash/linalg.hpp"

namespace equinash {

// Uniform grid t_0 = 0 < ... < t_N = T, dt = T / n_steps.
struct TimeGrid {
  double T = 0.0;
  int n_steps = 0;
  double dt = 0.0;
  std::vector<double> times;

  static TimeGrid make(double T, int n_steps);
  int n_nodes() const { return n_steps + 1; }
};

// Dense (path, node, component) array; node-major within a path.
class PathArray {
 public:
  PathArray() = default;
  PathArray(int n_paths, int n_nodes, int dim)
      : n_paths_(n_paths), n_nodes_(n_nodes), dim_(dim),
        data_(static_cast<std::size_t>(n_paths) * n_nodes * dim, 0.0) {}

  int n_paths() const { return n_paths_; }
  int n_nodes() const { return n_nodes_; }
  int dim() const { return dim_; }

  double& at(int p, int n, int k) { return data_[idx(p, n, k)]; }
  double at(int p, int n, int k) const { return data_[idx(p, n, k)]; }

  double* node(int p, int n) { return data_.data() + idx(p, n, 0); }
  const double* node(int p, int n) const { return data_.data() + idx(p, n, 0); }

  bool same_shape(const PathArray& o) const {
    return n_paths_ == o.n_paths_ && n_nodes_ == o.n_nodes_ && dim_ == o.dim_;
  }
  bool all_finite() const;

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t idx(int p, int n, int k) const {
    return (static_cast<std::size_t>(p) * n_nodes_ + n) * dim_ + k;
  }
  int n_paths_ = 0, n_nodes_ = 0, dim_ = 0;
  std::vector<double> data_;
};

enum class Filtration { Observation, Full };

struct TaggedStrategy {
  PathArray values;
  Filtration tag = Filtration::Full;
};

// Broker rate is observation-adapted, trader rate is full-information.
struct StrategyPair {
  TaggedStrategy nu{{}, Filtration::Observation};
  TaggedStrategy eta{{}, Filtration::Full};
};

// ---- grid operators (left-endpoint quadrature throughout) ----

// cum(x)_k = sum_{j<k} x_j dt
PathArray cumulative_integral(const PathArray& x, double dt);

// tail(x)_k = sum_{j=k}^{Nq-1} x_j dt with Nq = n_nodes - 1 cell left-endpoints.
PathArray tail_integral(const PathArray& x, double dt);

// conv(x)_k = sum_{j<k} e^{(t_j - t_k) p} x_j dt, via the one-step recursion
// I_{k+1} = E (I_k + x_k dt) with E = e^{-p dt}.
PathArray decay_convolution(const PathArray& x, const Mat& step_decay, double dt);

// kern(x)_k = sum_{j>=k} e^{(t_k - t_j) p} P x_j dt (suffix recursion).
PathArray decay_kernel_tail(const PathArray& x, const Mat& step_decay,
                            const Mat& P, double dt);

// a*x + b*y, elementwise.
PathArray axpby(double a, const PathArray& x, double b, const PathArray& y);
void scale_in_place(PathArray& x, double a);

// ---- deterministic reductions ----

// Per-path squared H2 load: v_p = sum_{k<N_quad} |x_{p,k}|^2 dt, where
// N_quad = n_nodes - 1 (the terminal node carries no quadrature weight).
std::vector<double> h2_sq_per_path(const PathArray& x, double dt);

struct NormWithSE {
  double value = 0.0;       // sqrt(mean of per-path squared loads)
  double std_error = 0.0;   // delta-method SE of the norm estimate
};
NormWithSE h2_norm_with_se(const PathArray& x, double dt);

// Serial mean/SE over a vector of per-path statistics (fixed order).
struct MeanWithSE {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanWithSE mean_with_se(const std::vector<double>& v);

}  // namespace equinash
