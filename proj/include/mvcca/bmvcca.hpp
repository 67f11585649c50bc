/*
 * mvcca: probabilistic canonical correlation analysis for matrix data.
 *
 * Copyright 2026 The mvcca authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvcca/baselines.hpp"
#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"
#include "mvcca/matvar.hpp"
#include "mvcca/trace.hpp"

namespace mvcca {

/// Two-sided model X^j = L^j Z R^j' + noise^j with a shared d1 x d2 latent
/// matrix and separable per-view noise covariances.
struct BmvccaModel {
  Eigen::MatrixXd l1, l2;          // m_j x d1
  Eigen::MatrixXd r1, r2;          // n_j x d2
  Eigen::MatrixXd psi_l1, psi_l2;  // m_j x m_j, PSD, trace normalized to m_j
  Eigen::MatrixXd psi_r1, psi_r2;  // n_j x n_j, PSD
  Eigen::MatrixXd mean1, mean2;
  int d1 = 0;
  int d2 = 0;
};

/// Variational family q(Z_n) = MN(C_n, O, S): per-sample mean matrices with
/// shared column and row covariance factors.
struct VariationalState {
  std::vector<Eigen::MatrixXd> c;  // each d1 x d2
  Eigen::MatrixXd o;               // d1 x d1, SPD
  Eigen::MatrixXd s;               // d2 x d2, SPD
};

namespace detail {

struct BmvccaViewOps {
  Eigen::MatrixXd psi_l_inv, psi_r_inv;
  double log_det_psi_l = 0.0, log_det_psi_r = 0.0;
  Eigen::MatrixXd kl;            // L' Psi_L^-1 L   (d1 x d1)
  Eigen::MatrixXd kr;            // R' Psi_R^-1 R   (d2 x d2)
  Eigen::MatrixXd lt_psi_inv;    // L' Psi_L^-1     (d1 x m)
  Eigen::MatrixXd psi_inv_r;     // Psi_R^-1 R      (n x d2)
};

inline BmvccaViewOps make_view_ops(const Eigen::MatrixXd& l, const Eigen::MatrixXd& r,
                                   const Eigen::MatrixXd& psi_l, const Eigen::MatrixXd& psi_r,
                                   const SpdPolicy& policy, const std::string& tag) {
  BmvccaViewOps ops;
  SpdFactor fl(psi_l, policy, tag + ": Psi_L");
  SpdFactor fr(psi_r, policy, tag + ": Psi_R");
  ops.psi_l_inv = fl.inverse();
  ops.psi_r_inv = fr.inverse();
  ops.log_det_psi_l = fl.log_det();
  ops.log_det_psi_r = fr.log_det();
  ops.lt_psi_inv = l.transpose() * ops.psi_l_inv;
  ops.psi_inv_r = ops.psi_r_inv * r;
  ops.kl = symmetrized(ops.lt_psi_inv * l);
  ops.kr = symmetrized(r.transpose() * ops.psi_inv_r);
  return ops;
}

inline void check_pair_dims(const BmvccaModel& model, const PairedMatrixDataset& pairs) {
  require(pairs.m1() == model.l1.rows() && pairs.n1() == model.r1.rows() &&
              pairs.m2() == model.l2.rows() && pairs.n2() == model.r2.rows(),
          "bmvcca: dataset dimensions must match the model");
}

inline void check_state_dims(const BmvccaModel& model, const VariationalState& state) {
  require(state.o.rows() == model.d1 && state.o.cols() == model.d1 &&
              state.s.rows() == model.d2 && state.s.cols() == model.d2,
          "bmvcca: variational covariance dimensions must match the model");
  for (const auto& c : state.c)
    require(c.rows() == model.d1 && c.cols() == model.d2,
            "bmvcca: variational mean dimensions must match the model");
}

}  // namespace detail

/// Factors the shared posterior-mean system of the variational E-step once
/// and solves it for individual pairs. The system does not depend on O or S,
/// so the same operator also serves probabilistic projection at test time.
class CnSolver {
 public:
  CnSolver(const BmvccaModel& model, const SpdPolicy& policy)
      : d1_(model.d1),
        d2_(model.d2),
        ops1_(detail::make_view_ops(model.l1, model.r1, model.psi_l1, model.psi_r1, policy,
                                    "bmvcca view 1")),
        ops2_(detail::make_view_ops(model.l2, model.r2, model.psi_l2, model.psi_r2, policy,
                                    "bmvcca view 2")) {
    Eigen::MatrixXd h = kron(ops1_.kr, ops1_.kl) + kron(ops2_.kr, ops2_.kl);
    h.diagonal().array() += 1.0;
    system_.emplace(h, policy, "bmvcca: posterior-mean system");
  }

  /// Posterior mean for a pair of centered views; pass nullopt for an absent
  /// view (mean imputation: it contributes no evidence).
  Eigen::MatrixXd solve(const std::optional<Eigen::MatrixXd>& x1c,
                        const std::optional<Eigen::MatrixXd>& x2c) const {
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(d1_, d2_);
    if (x1c) rhs += ops1_.lt_psi_inv * (*x1c) * ops1_.psi_inv_r;
    if (x2c) rhs += ops2_.lt_psi_inv * (*x2c) * ops2_.psi_inv_r;
    return unvec(system_->solve(vec(rhs)), d1_, d2_);
  }

  const detail::BmvccaViewOps& ops(int view) const { return view == 1 ? ops1_ : ops2_; }

 private:
  int d1_, d2_;
  detail::BmvccaViewOps ops1_, ops2_;
  std::optional<SpdFactor> system_;
};

/// Entropy of one q(Z_n); the O/S log-determinants are shared across samples.
inline double variational_entropy(const VariationalState& state, const SpdPolicy& policy = {}) {
  const double d1 = static_cast<double>(state.o.rows());
  const double d2 = static_cast<double>(state.s.rows());
  SpdFactor fo(state.o, policy, "variational_entropy: O");
  SpdFactor fs(state.s, policy, "variational_entropy: S");
  return 0.5 * (d1 * d2 * (1.0 + k_ln_2pi) + d1 * fs.log_det() + d2 * fo.log_det());
}

/// Variational E-step: closed-form updates of O then S (each using the
/// freshest other), then the per-sample means through the shared linear
/// system.
inline VariationalState variational_e_step(const BmvccaModel& model,
                                           const PairedMatrixDataset& pairs,
                                           const VariationalState& state,
                                           const SpdPolicy& policy = {}) {
  detail::check_pair_dims(model, pairs);
  detail::check_state_dims(model, state);
  const double d1 = static_cast<double>(model.d1);
  const double d2 = static_cast<double>(model.d2);
  CnSolver solver(model, policy);
  const auto& ops1 = solver.ops(1);
  const auto& ops2 = solver.ops(2);

  const Eigen::MatrixXd o_precision =
      ((ops1.kr * state.s).trace() * ops1.kl + (ops2.kr * state.s).trace() * ops2.kl +
       state.s.trace() * Eigen::MatrixXd::Identity(model.d1, model.d1)) /
      d2;
  const Eigen::MatrixXd o_new =
      SpdFactor(o_precision, policy, "variational_e_step: O precision").inverse();

  const Eigen::MatrixXd s_precision =
      ((ops1.kl * o_new).trace() * ops1.kr + (ops2.kl * o_new).trace() * ops2.kr +
       o_new.trace() * Eigen::MatrixXd::Identity(model.d2, model.d2)) /
      d1;
  const Eigen::MatrixXd s_new =
      SpdFactor(s_precision, policy, "variational_e_step: S precision").inverse();

  VariationalState out;
  out.o = o_new;
  out.s = s_new;
  out.c.resize(pairs.n());
  for (int i = 0; i < pairs.n(); ++i)
    out.c[i] = solver.solve(pairs.centered1(i), pairs.centered2(i));
  return out;
}

/// Variational M-step: per view, updates Psi_L, Psi_R, L, R in order, each
/// the exact maximizer of the bound given everything already updated; the
/// noise scale gauge is then fixed by normalizing tr(Psi_L) = m with the
/// inverse scale absorbed into Psi_R.
inline BmvccaModel variational_m_step(const BmvccaModel& model, const PairedMatrixDataset& pairs,
                                      const VariationalState& state,
                                      const SpdPolicy& policy = {}) {
  detail::check_pair_dims(model, pairs);
  detail::check_state_dims(model, state);
  require(static_cast<int>(state.c.size()) == pairs.n(),
          "variational_m_step: state must carry one mean per pair");
  const int n = pairs.n();
  const double dn = static_cast<double>(n);
  BmvccaModel out = model;

  auto update_view = [&](Eigen::MatrixXd& l, Eigen::MatrixXd& r, Eigen::MatrixXd& psi_l,
                         Eigen::MatrixXd& psi_r, auto centered, const std::string& tag) {
    const double mj = static_cast<double>(l.rows());
    const double nj = static_cast<double>(r.rows());
    std::vector<Eigen::MatrixXd> resid(n);
    for (int i = 0; i < n; ++i) resid[i] = centered(i) - l * state.c[i] * r.transpose();

    // Psi_L
    Eigen::MatrixXd psi_r_inv = SpdFactor(psi_r, policy, tag + ": Psi_R").inverse();
    double a = (symmetrized(r.transpose() * psi_r_inv * r) * state.s).trace();
    Eigen::MatrixXd p_l = Eigen::MatrixXd::Zero(l.rows(), l.rows());
    for (int i = 0; i < n; ++i) p_l += resid[i] * psi_r_inv * resid[i].transpose();
    psi_l = floor_psd(p_l / (dn * nj) + (a / nj) * (l * state.o * l.transpose()));

    // Psi_R with the fresh Psi_L
    Eigen::MatrixXd psi_l_inv = SpdFactor(psi_l, policy, tag + ": Psi_L").inverse();
    double b = (symmetrized(l.transpose() * psi_l_inv * l) * state.o).trace();
    Eigen::MatrixXd p_r = Eigen::MatrixXd::Zero(r.rows(), r.rows());
    for (int i = 0; i < n; ++i) p_r += resid[i].transpose() * psi_l_inv * resid[i];
    psi_r = floor_psd(p_r / (dn * mj) + (b / mj) * (r * state.s * r.transpose()));

    // L with both fresh noise covariances
    psi_r_inv = SpdFactor(psi_r, policy, tag + ": Psi_R").inverse();
    const Eigen::MatrixXd kr = symmetrized(r.transpose() * psi_r_inv * r);
    a = (kr * state.s).trace();
    Eigen::MatrixXd l_num = Eigen::MatrixXd::Zero(l.rows(), model.d1);
    Eigen::MatrixXd l_den = dn * a * state.o;
    const Eigen::MatrixXd psi_inv_r = psi_r_inv * r;
    for (int i = 0; i < n; ++i) {
      l_num += centered(i) * psi_inv_r * state.c[i].transpose();
      l_den += state.c[i] * kr * state.c[i].transpose();
    }
    l = SpdFactor(symmetrized(l_den), policy, tag + ": L-update system")
            .solve(Eigen::MatrixXd(l_num.transpose()))
            .transpose();

    // R with the fresh L
    const Eigen::MatrixXd kl = symmetrized(l.transpose() * psi_l_inv * l);
    b = (kl * state.o).trace();
    Eigen::MatrixXd r_num = Eigen::MatrixXd::Zero(r.rows(), model.d2);
    Eigen::MatrixXd r_den = dn * b * state.s;
    const Eigen::MatrixXd lt_psi_inv = l.transpose() * psi_l_inv;
    for (int i = 0; i < n; ++i) {
      r_num += centered(i).transpose() * lt_psi_inv.transpose() * state.c[i];
      r_den += state.c[i].transpose() * kl * state.c[i];
    }
    r = SpdFactor(symmetrized(r_den), policy, tag + ": R-update system")
            .solve(Eigen::MatrixXd(r_num.transpose()))
            .transpose();

    // Gauge: tr(Psi_L) = m_j, inverse scale into Psi_R (likelihood invariant).
    const double scale = psi_l.trace() / mj;
    if (scale > 0.0) {
      psi_l /= scale;
      psi_r *= scale;
    }
  };

  update_view(out.l1, out.r1, out.psi_l1, out.psi_r1,
              [&](int i) { return pairs.centered1(i); }, "variational_m_step view 1");
  update_view(out.l2, out.r2, out.psi_l2, out.psi_r2,
              [&](int i) { return pairs.centered2(i); }, "variational_m_step view 2");
  return out;
}

/// Evidence lower bound of the model at the given variational state, in
/// closed form.
inline double lower_bound(const BmvccaModel& model, const PairedMatrixDataset& pairs,
                          const VariationalState& state, const SpdPolicy& policy = {}) {
  detail::check_pair_dims(model, pairs);
  detail::check_state_dims(model, state);
  require(static_cast<int>(state.c.size()) == pairs.n(),
          "lower_bound: state must carry one mean per pair");
  const int n = pairs.n();
  const double dn = static_cast<double>(n);
  const double d1 = static_cast<double>(model.d1);
  const double d2 = static_cast<double>(model.d2);

  double total = 0.0;
  auto add_view = [&](const Eigen::MatrixXd& l, const Eigen::MatrixXd& r,
                      const Eigen::MatrixXd& psi_l, const Eigen::MatrixXd& psi_r,
                      auto centered, const std::string& tag) {
    const auto ops = detail::make_view_ops(l, r, psi_l, psi_r, policy, tag);
    const double mj = static_cast<double>(l.rows());
    const double nj = static_cast<double>(r.rows());
    const double a = (ops.kr * state.s).trace();
    const double b = (ops.kl * state.o).trace();
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd resid = centered(i) - l * state.c[i] * r.transpose();
      quad += (ops.psi_l_inv * resid).cwiseProduct(Eigen::MatrixXd(resid * ops.psi_r_inv)).sum();
    }
    total += -0.5 * (dn * (mj * nj * k_ln_2pi + nj * ops.log_det_psi_l +
                           mj * ops.log_det_psi_r + a * b) +
                     quad);
  };
  add_view(model.l1, model.r1, model.psi_l1, model.psi_r1,
           [&](int i) { return pairs.centered1(i); }, "lower_bound view 1");
  add_view(model.l2, model.r2, model.psi_l2, model.psi_r2,
           [&](int i) { return pairs.centered2(i); }, "lower_bound view 2");

  double c_sq = 0.0;
  for (const auto& c : state.c) c_sq += c.squaredNorm();
  total += -0.5 * (dn * d1 * d2 * k_ln_2pi + c_sq + dn * state.o.trace() * state.s.trace());
  total += dn * variational_entropy(state, policy);
  return total;
}

struct BmvccaFitResult {
  BmvccaModel model;
  VariationalState state;
  FitTrace trace;
};

/// Variational EM fit. L and R start from a 2DCCA fit, all noise covariances
/// from the identity, and q from MN(0, I, I). Alternates E and M steps until
/// the relative lower-bound change drops below tol; a final E-step leaves the
/// returned state consistent with the returned model. The seed is recorded
/// but the procedure is deterministic.
inline BmvccaFitResult bmvcca_fit(const PairedMatrixDataset& pairs, int d1, int d2,
                                  int max_iters = 300, double tol = 1e-7,
                                  std::uint64_t seed = 0, const SpdPolicy& policy = {}) {
  (void)seed;
  require(pairs.n() >= 2, "bmvcca_fit: need at least two pairs");
  require(d1 >= 1 && d1 <= std::min(pairs.m1(), pairs.m2()),
          "bmvcca_fit: d1 must be in [1, min(m1, m2)]");
  require(d2 >= 1 && d2 <= std::min(pairs.n1(), pairs.n2()),
          "bmvcca_fit: d2 must be in [1, min(n1, n2)]");
  require(max_iters >= 1, "bmvcca_fit: max_iters must be positive");

  const TdccaModel init = tdcca_fit(pairs, d1, d2, 200, 1e-6, policy).model;
  BmvccaModel model;
  model.d1 = d1;
  model.d2 = d2;
  model.l1 = init.l1;
  model.l2 = init.l2;
  model.r1 = init.r1;
  model.r2 = init.r2;
  model.psi_l1 = Eigen::MatrixXd::Identity(pairs.m1(), pairs.m1());
  model.psi_l2 = Eigen::MatrixXd::Identity(pairs.m2(), pairs.m2());
  model.psi_r1 = Eigen::MatrixXd::Identity(pairs.n1(), pairs.n1());
  model.psi_r2 = Eigen::MatrixXd::Identity(pairs.n2(), pairs.n2());
  model.mean1 = pairs.mean1;
  model.mean2 = pairs.mean2;

  VariationalState state;
  state.o = Eigen::MatrixXd::Identity(d1, d1);
  state.s = Eigen::MatrixXd::Identity(d2, d2);
  state.c.assign(pairs.n(), Eigen::MatrixXd::Zero(d1, d2));

  FitTrace trace;
  double prev = 0.0;
  bool have_prev = false;
  for (int iter = 1; iter <= max_iters; ++iter) {
    state = variational_e_step(model, pairs, state, policy);
    BmvccaModel next = variational_m_step(model, pairs, state, policy);
    const double bound = lower_bound(next, pairs, state, policy);
    if (!std::isfinite(bound))
      throw NumericalError("bmvcca_fit: lower bound is not finite at iteration " +
                           std::to_string(iter));
    TraceRow row;
    row.iteration = iter;
    row.objective = bound;
    row.deltas = {{"delta_L1", (next.l1 - model.l1).norm()},
                  {"delta_L2", (next.l2 - model.l2).norm()},
                  {"delta_R1", (next.r1 - model.r1).norm()},
                  {"delta_R2", (next.r2 - model.r2).norm()}};
    trace.rows.push_back(row);
    model = next;
    const bool converged =
        have_prev && std::abs(bound - prev) / std::max(1.0, std::abs(prev)) < tol;
    prev = bound;
    have_prev = true;
    if (converged) break;
  }
  state = variational_e_step(model, pairs, state, policy);
  return {model, state, trace};
}

}  // namespace mvcca
