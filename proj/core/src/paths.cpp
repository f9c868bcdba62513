#include "equinash/paths.hpp"

#include <cmath>

#include "equinash/threading.hpp"

namespace equinash {

TimeGrid TimeGrid::make(double T, int n_steps) {
  if (!(T > 0.0) || n_steps < 1) {
    throw std::invalid_argument("TimeGrid: need T > 0 and n_steps >= 1");
  }
  TimeGrid g;
  g.T = T;
  g.n_steps = n_steps;
  g.dt = T / n_steps;
  g.times.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) g.times[k] = T * k / n_steps;
  g.times.back() = T;  // exact endpoint
  return g;
}

bool PathArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

// Row-major K x K copy for tight inner loops.
std::vector<double> dense_copy(const Mat& M) {
  std::vector<double> out(M.rows() * M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) out[i * M.cols() + j] = M(i, j);
  return out;
}

inline void matvec(const std::vector<double>& M, int K, const double* x,
                   double* y) {
  for (int i = 0; i < K; ++i) {
    double s = 0.0;
    for (int j = 0; j < K; ++j) s += M[i * K + j] * x[j];
    y[i] = s;
  }
}

}  // namespace

PathArray cumulative_integral(const PathArray& x, double dt) {
  PathArray out(x.n_paths(), x.n_nodes(), x.dim());
  const int N = x.n_nodes(), K = x.dim();
  parallel_for(x.n_paths(), [&](std::size_t p0, std::size_t p1) {
    std::vector<double> acc(K);
    for (std::size_t p = p0; p < p1; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int k = 0; k < N; ++k) {
        double* o = out.node(static_cast<int>(p), k);
        const double* xi = x.node(static_cast<int>(p), k);
        for (int c = 0; c < K; ++c) o[c] = acc[c];
        for (int c = 0; c < K; ++c) acc[c] += xi[c] * dt;
      }
    }
  });
  return out;
}

PathArray tail_integral(const PathArray& x, double dt) {
  PathArray out(x.n_paths(), x.n_nodes(), x.dim());
  const int N = x.n_nodes(), K = x.dim();
  parallel_for(x.n_paths(), [&](std::size_t p0, std::size_t p1) {
    std::vector<double> acc(K);
    for (std::size_t p = p0; p < p1; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int k = N - 1; k >= 0; --k) {
        double* o = out.node(static_cast<int>(p), k);
        if (k < N - 1) {
          const double* xi = x.node(static_cast<int>(p), k);
          for (int c = 0; c < K; ++c) acc[c] += xi[c] * dt;
        }
        for (int c = 0; c < K; ++c) o[c] = acc[c];
      }
    }
  });
  return out;
}

PathArray decay_convolution(const PathArray& x, const Mat& step_decay,
                            double dt) {
  PathArray out(x.n_paths(), x.n_nodes(), x.dim());
  const int N = x.n_nodes(), K = x.dim();
  const auto E = dense_copy(step_decay);
  parallel_for(x.n_paths(), [&](std::size_t p0, std::size_t p1) {
    std::vector<double> acc(K), tmp(K);
    for (std::size_t p = p0; p < p1; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int k = 0; k < N; ++k) {
        double* o = out.node(static_cast<int>(p), k);
        for (int c = 0; c < K; ++c) o[c] = acc[c];
        if (k + 1 < N) {
          const double* xi = x.node(static_cast<int>(p), k);
          for (int c = 0; c < K; ++c) acc[c] += xi[c] * dt;
          matvec(E, K, acc.data(), tmp.data());
          std::swap(acc, tmp);
        }
      }
    }
  });
  return out;
}

PathArray decay_kernel_tail(const PathArray& x, const Mat& step_decay,
                            const Mat& P, double dt) {
  PathArray out(x.n_paths(), x.n_nodes(), x.dim());
  const int N = x.n_nodes(), K = x.dim();
  const auto E = dense_copy(step_decay);
  const auto Pm = dense_copy(P);
  parallel_for(x.n_paths(), [&](std::size_t p0, std::size_t p1) {
    std::vector<double> acc(K), tmp(K), px(K);
    for (std::size_t p = p0; p < p1; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int k = N - 1; k >= 0; --k) {
        double* o = out.node(static_cast<int>(p), k);
        if (k < N - 1) {
          // acc <- P x_k dt + E acc
          matvec(E, K, acc.data(), tmp.data());
          matvec(Pm, K, x.node(static_cast<int>(p), k), px.data());
          for (int c = 0; c < K; ++c) acc[c] = px[c] * dt + tmp[c];
        }
        for (int c = 0; c < K; ++c) o[c] = acc[c];
      }
    }
  });
  return out;
}

PathArray axpby(double a, const PathArray& x, double b, const PathArray& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("axpby: shape mismatch");
  PathArray out(x.n_paths(), x.n_nodes(), x.dim());
  const std::size_t n = x.raw().size();
  const double* xd = x.raw().data();
  const double* yd = y.raw().data();
  double* od = out.raw().data();
  parallel_for(n, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) od[i] = a * xd[i] + b * yd[i];
  });
  return out;
}

void scale_in_place(PathArray& x, double a) {
  for (double& v : x.raw()) v *= a;
}

std::vector<double> h2_sq_per_path(const PathArray& x, double dt) {
  std::vector<double> v(x.n_paths(), 0.0);
  const int Nq = x.n_nodes() - 1, K = x.dim();
  parallel_for(x.n_paths(), [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) {
      double s = 0.0;
      for (int k = 0; k < Nq; ++k) {
        const double* xi = x.node(static_cast<int>(p), k);
        for (int c = 0; c < K; ++c) s += xi[c] * xi[c];
      }
      v[p] = s * dt;
    }
  });
  return v;
}

MeanWithSE mean_with_se(const std::vector<double>& v) {
  MeanWithSE out;
  const std::size_t n = v.size();
  if (n == 0) return out;
  double s = 0.0;
  for (double x : v) s += x;  // fixed order
  out.mean = s / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : v) {
      const double d = x - out.mean;
      ss += d * d;
    }
    out.std_error = std::sqrt(ss / (static_cast<double>(n) - 1.0) /
                              static_cast<double>(n));
  }
  return out;
}

NormWithSE h2_norm_with_se(const PathArray& x, double dt) {
  const auto v = h2_sq_per_path(x, dt);
  const auto m = mean_with_se(v);
  NormWithSE out;
  out.value = std::sqrt(std::max(0.0, m.mean));
  out.std_error =
      out.value > 1e-300 ? m.std_error / (2.0 * out.value) : std::sqrt(m.std_error);
  return out;
}

}  // namespace equinash
