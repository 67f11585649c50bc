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

#include <cstdint>
#include <optional>
#include <random>

#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"
#include "mvcca/matvar.hpp"
#include "mvcca/rng.hpp"
#include "mvcca/trace.hpp"

namespace mvcca {

/// One-sided model on row-concatenated views: X = Z R' + noise, where
/// X = [X1, X2] is m x (n1 + n2), R stacks the per-view right projections and
/// the row-noise covariance is block-diagonal per view.
struct UmvccaModel {
  Eigen::MatrixXd r;       // (n1 + n2) x d2, view-1 rows on top
  Eigen::MatrixXd psi_r1;  // n1 x n1, PSD
  Eigen::MatrixXd psi_r2;  // n2 x n2, PSD
  Eigen::MatrixXd mean1;   // m x n1
  Eigen::MatrixXd mean2;   // m x n2
  int m = 0;
  int d2 = 0;

  Eigen::Index n1() const { return psi_r1.rows(); }
  Eigen::Index n2() const { return psi_r2.rows(); }
};

struct UmvccaFitResult {
  UmvccaModel model;
  FitTrace trace;
};

namespace detail {

inline Eigen::MatrixXd umvcca_psi_inv(const UmvccaModel& model, const SpdPolicy& policy) {
  SpdFactor f1(model.psi_r1, policy, "umvcca: Psi_R1");
  SpdFactor f2(model.psi_r2, policy, "umvcca: Psi_R2");
  return block_diag(f1.inverse(), f2.inverse());
}

inline double umvcca_loglik_from_scatter(const UmvccaModel& model,
                                         const Eigen::MatrixXd& scatter, double n,
                                         const SpdPolicy& policy) {
  const double m = static_cast<double>(model.m);
  const double p = static_cast<double>(scatter.rows());
  const Eigen::MatrixXd row_cov =
      symmetrized(model.r * model.r.transpose() + block_diag(model.psi_r1, model.psi_r2));
  SpdFactor fv(row_cov, policy, "umvcca_loglik: R R' + Psi_R");
  return -0.5 * n * (m * p * k_ln_2pi + m * fv.log_det() + (fv.solve(scatter)).trace());
}

}  // namespace detail

/// Marginal log-likelihood: each centered concatenated sample is matrix-normal
/// with identity column covariance and row covariance R R' + Psi_R.
inline double umvcca_loglik(const UmvccaModel& model, const PairedMatrixDataset& pairs,
                            const SpdPolicy& policy = {}) {
  require(pairs.m1() == model.m && pairs.m2() == model.m &&
              pairs.n1() == model.n1() && pairs.n2() == model.n2(),
          "umvcca_loglik: dataset dimensions must match the model");
  const Eigen::Index p = model.n1() + model.n2();
  const double n = static_cast<double>(pairs.n());
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < pairs.n(); ++i) {
    Eigen::MatrixXd xc(model.m, p);
    xc.leftCols(model.n1()) = pairs.view1[i] - model.mean1;
    xc.rightCols(model.n2()) = pairs.view2[i] - model.mean2;
    scatter += xc.transpose() * xc;
  }
  scatter /= n;
  return detail::umvcca_loglik_from_scatter(model, scatter, n, policy);
}

/// EM fit. R starts from seeded uniform(0,1) entries and Psi_R from the
/// identity (`init` overrides the starting point when supplied). Each
/// iteration applies the exact M-step maximizers and then keeps only the
/// per-view diagonal blocks of the noise update (the constrained maximizer
/// under the block-diagonal model), so the log-likelihood never decreases.
/// Stops on relative log-likelihood change.
inline UmvccaFitResult umvcca_fit(const PairedMatrixDataset& pairs, int d2,
                                  int max_iters = 500, double tol = 1e-7,
                                  std::uint64_t seed = 0, const SpdPolicy& policy = {},
                                  const UmvccaModel* init = nullptr) {
  require(pairs.m1() == pairs.m2(),
          "umvcca_fit: the two views must share their row count");
  require(pairs.n() >= 2, "umvcca_fit: need at least two pairs");
  const Eigen::Index n1 = pairs.n1(), n2 = pairs.n2(), p = n1 + n2;
  require(d2 >= 1 && d2 <= p, "umvcca_fit: d2 must be in [1, n1 + n2]");
  require(max_iters >= 1, "umvcca_fit: max_iters must be positive");
  const double n = static_cast<double>(pairs.n());
  const double m = static_cast<double>(pairs.m1());

  UmvccaModel model;
  model.m = static_cast<int>(pairs.m1());
  model.d2 = d2;
  model.mean1 = pairs.mean1;
  model.mean2 = pairs.mean2;
  if (init) {
    require(init->r.rows() == p && init->r.cols() == d2 && init->psi_r1.rows() == n1 &&
                init->psi_r2.rows() == n2,
            "umvcca_fit: init dimensions must match");
    model.r = init->r;
    model.psi_r1 = init->psi_r1;
    model.psi_r2 = init->psi_r2;
  } else {
    std::mt19937_64 rng(seed);
    model.r = uniform_matrix(p, d2, rng);
    model.psi_r1 = Eigen::MatrixXd::Identity(n1, n1);
    model.psi_r2 = Eigen::MatrixXd::Identity(n2, n2);
  }

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < pairs.n(); ++i) {
    Eigen::MatrixXd xc(model.m, p);
    xc.leftCols(n1) = pairs.centered1(i);
    xc.rightCols(n2) = pairs.centered2(i);
    scatter += xc.transpose() * xc;
  }
  scatter /= n;

  FitTrace trace;
  double prev = detail::umvcca_loglik_from_scatter(model, scatter, n, policy);
  for (int iter = 1; iter <= max_iters; ++iter) {
    const Eigen::MatrixXd psi_inv = detail::umvcca_psi_inv(model, policy);
    const Eigen::MatrixXd s = SpdFactor(
        Eigen::MatrixXd(Eigen::MatrixXd::Identity(d2, d2) +
                        model.r.transpose() * psi_inv * model.r),
        policy, "umvcca_fit: posterior precision").inverse();
    const Eigen::MatrixXd b = scatter * (psi_inv * model.r * s);  // p x d2
    const Eigen::MatrixXd g = symmetrized(
        m * s + s * model.r.transpose() * psi_inv * b);
    SpdFactor fg(g, policy, "umvcca_fit: latent second moment");
    const Eigen::MatrixXd r_new = fg.solve(Eigen::MatrixXd(b.transpose())).transpose();
    const Eigen::MatrixXd psi_full =
        symmetrized((scatter - b * fg.solve(Eigen::MatrixXd(b.transpose()))) / m);
    const double delta_r = (r_new - model.r).norm();
    model.r = r_new;
    model.psi_r1 = symmetrized(psi_full.topLeftCorner(n1, n1));
    model.psi_r2 = symmetrized(psi_full.bottomRightCorner(n2, n2));

    const double loglik = detail::umvcca_loglik_from_scatter(model, scatter, n, policy);
    trace.rows.push_back({iter, loglik, {{"delta_R", delta_r}}});
    const double change = std::abs(loglik - prev) / std::max(1.0, std::abs(prev));
    prev = loglik;
    if (change < tol) break;
  }
  return {model, trace};
}

/// Posterior mean of Z given the present views: X_c Psi_R^-1 R S with
/// S = (R' Psi_R^-1 R + I)^-1. An absent view is imputed by its training mean
/// and contributes zero columns after centering.
inline Eigen::MatrixXd umvcca_posterior_mean(const UmvccaModel& model,
                                             const std::optional<Eigen::MatrixXd>& x1,
                                             const std::optional<Eigen::MatrixXd>& x2,
                                             const SpdPolicy& policy = {}) {
  require(x1.has_value() || x2.has_value(), "umvcca_posterior_mean: need at least one view");
  if (x1)
    require(x1->rows() == model.m && x1->cols() == model.n1(),
            "umvcca_posterior_mean: X1 dimension mismatch");
  if (x2)
    require(x2->rows() == model.m && x2->cols() == model.n2(),
            "umvcca_posterior_mean: X2 dimension mismatch");
  Eigen::MatrixXd xc = Eigen::MatrixXd::Zero(model.m, model.n1() + model.n2());
  if (x1) xc.leftCols(model.n1()) = *x1 - model.mean1;
  if (x2) xc.rightCols(model.n2()) = *x2 - model.mean2;
  const Eigen::MatrixXd psi_inv = detail::umvcca_psi_inv(model, policy);
  const Eigen::MatrixXd s = SpdFactor(
      Eigen::MatrixXd(Eigen::MatrixXd::Identity(model.d2, model.d2) +
                      model.r.transpose() * psi_inv * model.r),
      policy, "umvcca_posterior_mean: posterior precision").inverse();
  return xc * (psi_inv * model.r * s);
}

}  // namespace mvcca
