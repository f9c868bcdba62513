#include "equinash/criteria.hpp"

#include <cmath>
#include <stdexcept>

#include "equinash/threading.hpp"

namespace equinash {

namespace {

void require_tags(const TaggedStrategy& nu, const TaggedStrategy& eta) {
  if (nu.tag != Filtration::Observation) {
    throw std::invalid_argument(
        "filtration tag violation: broker rate must be observation-adapted");
  }
  if (eta.tag != Filtration::Full) {
    throw std::invalid_argument(
        "filtration tag violation: trader rate must be full-information");
  }
}

struct Derived {
  PathArray Y;
  CashInventory ci;
};

Derived derive(const ModelParams& prm, const PathEnsemble& ens,
               const PathArray& nu, const PathArray& eta) {
  Derived d;
  d.Y = propagate_transient_impact(prm, ens.grid, nu);
  d.ci = propagate_inventories_and_cash(prm, ens.grid, nu, eta, ens.z, d.Y);
  return d;
}

// Per-path running-cost value of the trader criterion.
std::vector<double> trader_values(const ModelParams& prm,
                                  const PathEnsemble& ens, const PathArray& nu,
                                  const PathArray& eta) {
  const Derived d = derive(prm, ens, nu, eta);
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;
  const Vec S0 = prm.y0 + prm.z0;
  const double head = prm.x_I0 + (S0 - prm.psi * prm.q_I0).dot(prm.q_I0);

  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), n(K), y(K), al(K), qi(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = eta.at(p, k, c);
          n(c) = nu.at(p, k, c);
          y(c) = d.Y.at(p, k, c);
          al(c) = ens.alpha.at(p, k, c);
          qi(c) = d.ci.QI.at(p, k, c);
        }
        const Vec lin = al + prm.h * n - prm.p * y - 2.0 * (prm.psi * e) -
                        prm.rI * qi;
        acc += (-e.dot(prm.b * e) + lin.dot(qi)) * dt;
      }
      v[pp] = head + acc;
    }
  });
  return v;
}

std::vector<double> broker_values(const ModelParams& prm,
                                  const PathEnsemble& ens, const PathArray& nu,
                                  const PathArray& eta) {
  const Derived d = derive(prm, ens, nu, eta);
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;
  const Vec S0 = prm.y0 + prm.z0;
  const double head = prm.x_B0 + (S0 - prm.phi * prm.q_B0).dot(prm.q_B0);

  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), n(K), y(K), al(K), qb(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = eta.at(p, k, c);
          n(c) = nu.at(p, k, c);
          y(c) = d.Y.at(p, k, c);
          al(c) = ens.alpha.at(p, k, c);
          qb(c) = d.ci.QB.at(p, k, c);
        }
        const Vec lin = al + (prm.h - 2.0 * prm.phi) * n - prm.p * y +
                        2.0 * (prm.phi * e) - prm.rB * qb;
        acc += (-n.dot(prm.a * n) + e.dot(prm.b * e) + lin.dot(qb)) * dt;
      }
      v[pp] = head + acc;
    }
  });
  return v;
}

CriterionValue reduce(const std::vector<double>& v) {
  const auto m = mean_with_se(v);
  return {m.mean, m.std_error, static_cast<int>(v.size())};
}

}  // namespace

CriterionValue evaluate_trader_criterion(const ModelParams& prm,
                                         const PathEnsemble& ens,
                                         const TaggedStrategy& nu,
                                         const TaggedStrategy& eta) {
  require_tags(nu, eta);
  return reduce(trader_values(prm, ens, nu.values, eta.values));
}

CriterionValue evaluate_broker_criterion(const ModelParams& prm,
                                         const PathEnsemble& ens,
                                         const TaggedStrategy& nu,
                                         const TaggedStrategy& eta) {
  require_tags(nu, eta);
  return reduce(broker_values(prm, ens, nu.values, eta.values));
}

CriterionValue evaluate_trader_criterion_terminal(const ModelParams& prm,
                                                  const PathEnsemble& ens,
                                                  const TaggedStrategy& nu,
                                                  const TaggedStrategy& eta) {
  require_tags(nu, eta);
  const Derived d = derive(prm, ens, nu.values, eta.values);
  const int K = prm.K, N = ens.grid.n_nodes(), Nq = N - 1;
  const double dt = ens.grid.dt;
  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec qiT(K), sT(K), qi(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      for (int c = 0; c < K; ++c) {
        qiT(c) = d.ci.QI.at(p, N - 1, c);
        sT(c) = d.Y.at(p, N - 1, c) + ens.z.at(p, N - 1, c);
      }
      double run = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) qi(c) = d.ci.QI.at(p, k, c);
        run += qi.dot(prm.rI * qi) * dt;
      }
      v[pp] = d.ci.XI.at(p, N - 1, 0) + (sT - prm.psi * qiT).dot(qiT) - run;
    }
  });
  return reduce(v);
}

CriterionValue evaluate_broker_criterion_terminal(const ModelParams& prm,
                                                  const PathEnsemble& ens,
                                                  const TaggedStrategy& nu,
                                                  const TaggedStrategy& eta) {
  require_tags(nu, eta);
  const Derived d = derive(prm, ens, nu.values, eta.values);
  const int K = prm.K, N = ens.grid.n_nodes(), Nq = N - 1;
  const double dt = ens.grid.dt;
  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec qbT(K), sT(K), qb(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      for (int c = 0; c < K; ++c) {
        qbT(c) = d.ci.QB.at(p, N - 1, c);
        sT(c) = d.Y.at(p, N - 1, c) + ens.z.at(p, N - 1, c);
      }
      double run = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) qb(c) = d.ci.QB.at(p, k, c);
        run += qb.dot(prm.rB * qb) * dt;
      }
      v[pp] = d.ci.XB.at(p, N - 1, 0) + (sT - prm.phi * qbT).dot(qbT) - run;
    }
  });
  return reduce(v);
}

GateauxReport gateaux_trader(const ModelParams& prm, const PathEnsemble& ens,
                             const TaggedStrategy& nu, const TaggedStrategy& eta,
                             const TaggedStrategy& kappa, double fd_eps) {
  require_tags(nu, eta);
  if (kappa.tag != Filtration::Full) {
    throw std::invalid_argument(
        "filtration tag violation: trader direction must be full-information");
  }
  const Derived d = derive(prm, ens, nu.values, eta.values);
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;

  // integrand of the tail: alpha + h nu - p Y - 2 psi eta - 2 rI QI
  PathArray g(ens.n_paths, ens.grid.n_nodes(), K);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), n(K), y(K), al(K), qi(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      for (int k = 0; k < ens.grid.n_nodes(); ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = eta.values.at(p, k, c);
          n(c) = nu.values.at(p, k, c);
          y(c) = d.Y.at(p, k, c);
          al(c) = ens.alpha.at(p, k, c);
          qi(c) = d.ci.QI.at(p, k, c);
        }
        const Vec lin = al + prm.h * n - prm.p * y - 2.0 * (prm.psi * e) -
                        2.0 * (prm.rI * qi);
        for (int c = 0; c < K; ++c) g.at(p, k, c) = lin(c);
      }
    }
  });
  const PathArray tail = tail_integral(g, dt);

  std::vector<double> vals(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), qi(K), kap(K), t(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = eta.values.at(p, k, c);
          qi(c) = d.ci.QI.at(p, k, c);
          kap(c) = kappa.values.at(p, k, c);
          t(c) = tail.at(p, k, c);
        }
        const Vec integrand = -2.0 * (prm.b * e) - 2.0 * (prm.psi * qi) + t;
        acc += kap.dot(integrand) * dt;
      }
      vals[pp] = acc;
    }
  });
  const auto m = mean_with_se(vals);

  GateauxReport rep;
  rep.pairing = m.mean;
  rep.pairing_se = m.std_error;
  rep.fd_epsilon = fd_eps;
  rep.direction_norm = h2_norm_with_se(kappa.values, dt).value;

  const PathArray up = axpby(1.0, eta.values, fd_eps, kappa.values);
  const PathArray dn = axpby(1.0, eta.values, -fd_eps, kappa.values);
  const auto ju = mean_with_se(trader_values(prm, ens, nu.values, up));
  const auto jd = mean_with_se(trader_values(prm, ens, nu.values, dn));
  rep.fd_value = (ju.mean - jd.mean) / (2.0 * fd_eps);
  return rep;
}

GateauxReport gateaux_broker(const ModelParams& prm, const PathEnsemble& ens,
                             const TaggedStrategy& nu, const TaggedStrategy& eta,
                             const TaggedStrategy& zeta, double fd_eps) {
  require_tags(nu, eta);
  if (zeta.tag != Filtration::Observation) {
    throw std::invalid_argument(
        "filtration tag violation: broker direction must be observation-adapted");
  }
  const Derived d = derive(prm, ens, nu.values, eta.values);
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;
  const Mat two_phi_minus_h = 2.0 * prm.phi - prm.h;
  const Mat Edt = matrix_exp(prm.p, -dt);

  PathArray g(ens.n_paths, ens.grid.n_nodes(), K);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), n(K), y(K), al(K), qb(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      for (int k = 0; k < ens.grid.n_nodes(); ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = eta.values.at(p, k, c);
          n(c) = nu.values.at(p, k, c);
          y(c) = d.Y.at(p, k, c);
          al(c) = ens.alpha.at(p, k, c);
          qb(c) = d.ci.QB.at(p, k, c);
        }
        const Vec lin = al + 2.0 * (prm.phi * e) - two_phi_minus_h * n -
                        prm.p * y - 2.0 * (prm.rB * qb);
        for (int c = 0; c < K; ++c) g.at(p, k, c) = lin(c);
      }
    }
  });
  const PathArray tail = tail_integral(g, dt);
  // - h * sum_{j>=k} e^{(t_k - t_j) p} p QB_j dt
  const PathArray kern = decay_kernel_tail(d.ci.QB, Edt, prm.p, dt);

  std::vector<double> vals(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec n(K), qb(K), z(K), t(K), kv(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          n(c) = nu.values.at(p, k, c);
          qb(c) = d.ci.QB.at(p, k, c);
          z(c) = zeta.values.at(p, k, c);
          t(c) = tail.at(p, k, c);
          kv(c) = kern.at(p, k, c);
        }
        const Vec integrand =
            -2.0 * (prm.a * n) - two_phi_minus_h * qb + t - prm.h * kv;
        acc += z.dot(integrand) * dt;
      }
      vals[pp] = acc;
    }
  });
  const auto m = mean_with_se(vals);

  GateauxReport rep;
  rep.pairing = m.mean;
  rep.pairing_se = m.std_error;
  rep.fd_epsilon = fd_eps;
  rep.direction_norm = h2_norm_with_se(zeta.values, dt).value;

  const PathArray up = axpby(1.0, nu.values, fd_eps, zeta.values);
  const PathArray dn = axpby(1.0, nu.values, -fd_eps, zeta.values);
  const auto ju = mean_with_se(broker_values(prm, ens, up, eta.values));
  const auto jd = mean_with_se(broker_values(prm, ens, dn, eta.values));
  rep.fd_value = (ju.mean - jd.mean) / (2.0 * fd_eps);
  return rep;
}

namespace {

double quadratic_gap_trader(const ModelParams& prm, const PathEnsemble& ens,
                            const PathArray& ex, const PathArray& ey,
                            double rho) {
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;
  const PathArray de = axpby(1.0, ex, -1.0, ey);
  const PathArray dq = cumulative_integral(de, dt);
  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec e(K), q(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          e(c) = de.at(p, k, c);
          q(c) = dq.at(p, k, c);
        }
        acc += (e.dot(prm.b * e) + 2.0 * e.dot(prm.psi * q) +
                q.dot(prm.rI * q)) *
               dt;
      }
      v[pp] = acc;
    }
  });
  return rho * (1.0 - rho) * mean_with_se(v).mean;
}

double quadratic_gap_broker(const ModelParams& prm, const PathEnsemble& ens,
                            const PathArray& nx, const PathArray& ny,
                            double rho) {
  const int K = prm.K, Nq = ens.grid.n_nodes() - 1;
  const double dt = ens.grid.dt;
  const Mat Edt = matrix_exp(prm.p, -dt);
  const Mat two_phi_minus_h = 2.0 * prm.phi - prm.h;
  const PathArray dn = axpby(1.0, nx, -1.0, ny);
  const PathArray dq = cumulative_integral(dn, dt);

  // hY-difference: conv of h dn
  PathArray hdn(dn.n_paths(), dn.n_nodes(), K);
  for (int p = 0; p < dn.n_paths(); ++p)
    for (int k = 0; k < dn.n_nodes(); ++k)
      for (int i = 0; i < K; ++i) {
        double s = 0.0;
        for (int j = 0; j < K; ++j) s += prm.h(i, j) * dn.at(p, k, j);
        hdn.at(p, k, i) = s;
      }
  const PathArray dY = decay_convolution(hdn, Edt, dt);

  std::vector<double> v(ens.n_paths, 0.0);
  parallel_for(ens.n_paths, [&](std::size_t p0, std::size_t p1) {
    Vec n(K), q(K), y(K);
    for (std::size_t pp = p0; pp < p1; ++pp) {
      const int p = static_cast<int>(pp);
      double acc = 0.0;
      for (int k = 0; k < Nq; ++k) {
        for (int c = 0; c < K; ++c) {
          n(c) = dn.at(p, k, c);
          q(c) = dq.at(p, k, c);
          y(c) = dY.at(p, k, c);
        }
        acc += (n.dot(prm.a * n) + n.dot(two_phi_minus_h * q) +
                y.dot(prm.p * q) + q.dot(prm.rB * q)) *
               dt;
      }
      v[pp] = acc;
    }
  });
  return rho * (1.0 - rho) * mean_with_se(v).mean;
}

}  // namespace

ConcavityReport concavity_probe_trader(const ModelParams& prm,
                                       const PathEnsemble& ens,
                                       const TaggedStrategy& nu,
                                       const TaggedStrategy& eta_x,
                                       const TaggedStrategy& eta_y,
                                       const std::vector<double>& rhos) {
  require_tags(nu, eta_x);
  require_tags(nu, eta_y);
  const auto vx = trader_values(prm, ens, nu.values, eta_x.values);
  const auto vy = trader_values(prm, ens, nu.values, eta_y.values);

  ConcavityReport rep;
  for (double rho : rhos) {
    const PathArray blend = axpby(rho, eta_x.values, 1.0 - rho, eta_y.values);
    const auto vb = trader_values(prm, ens, nu.values, blend);
    std::vector<double> gap(vb.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
      gap[i] = vb[i] - rho * vx[i] - (1.0 - rho) * vy[i];
    }
    const auto m = mean_with_se(gap);
    ConcavityPoint pt;
    pt.rho = rho;
    pt.chord_gap = m.mean;
    pt.gap_se = m.std_error;
    pt.quadratic_gap =
        quadratic_gap_trader(prm, ens, eta_x.values, eta_y.values, rho);
    rep.points.push_back(pt);
    rep.pass = rep.pass && (pt.chord_gap >= -3.0 * pt.gap_se);
  }
  return rep;
}

ConcavityReport concavity_probe_broker(const ModelParams& prm,
                                       const PathEnsemble& ens,
                                       const TaggedStrategy& eta,
                                       const TaggedStrategy& nu_x,
                                       const TaggedStrategy& nu_y,
                                       const std::vector<double>& rhos) {
  require_tags(nu_x, eta);
  require_tags(nu_y, eta);
  const auto vx = broker_values(prm, ens, nu_x.values, eta.values);
  const auto vy = broker_values(prm, ens, nu_y.values, eta.values);

  ConcavityReport rep;
  for (double rho : rhos) {
    const PathArray blend = axpby(rho, nu_x.values, 1.0 - rho, nu_y.values);
    const auto vb = broker_values(prm, ens, blend, eta.values);
    std::vector<double> gap(vb.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
      gap[i] = vb[i] - rho * vx[i] - (1.0 - rho) * vy[i];
    }
    const auto m = mean_with_se(gap);
    ConcavityPoint pt;
    pt.rho = rho;
    pt.chord_gap = m.mean;
    pt.gap_se = m.std_error;
    pt.quadratic_gap =
        quadratic_gap_broker(prm, ens, nu_x.values, nu_y.values, rho);
    rep.points.push_back(pt);
    rep.pass = rep.pass && (pt.chord_gap >= -3.0 * pt.gap_se);
  }
  return rep;
}

}  // namespace equinash
