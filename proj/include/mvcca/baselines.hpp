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
#include <string>
#include <vector>

#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"
#include "mvcca/matvar.hpp"
#include "mvcca/rng.hpp"
#include "mvcca/trace.hpp"

namespace mvcca {

// ---------------------------------------------------------------------------
// Classical CCA on vector views.
// ---------------------------------------------------------------------------

struct CcaModel {
  Eigen::MatrixXd w1;            // m1 x d
  Eigen::MatrixXd w2;            // m2 x d
  Eigen::VectorXd correlations;  // d, descending, in [0, 1]
  Eigen::VectorXd mean1;
  Eigen::VectorXd mean2;
};

namespace detail {

// Samples as columns, centered; also returns the mean.
inline Eigen::MatrixXd centered_data_matrix(const std::vector<Eigen::VectorXd>& xs,
                                            Eigen::VectorXd& mean) {
  const Eigen::Index dim = xs[0].size();
  for (const auto& x : xs)
    require(x.size() == dim, "all samples of a view must share their dimension");
  Eigen::MatrixXd d(dim, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) d.col(static_cast<Eigen::Index>(i)) = xs[i];
  mean = d.rowwise().mean();
  d.colwise() -= mean;
  return d;
}

}  // namespace detail

/// Canonical directions of two paired vector views, top d pairs. Directions
/// are normalized to unit projected training variance (1/N convention);
/// correlations are the square roots of the generalized eigenvalues.
inline CcaModel cca_fit(const std::vector<Eigen::VectorXd>& view1,
                        const std::vector<Eigen::VectorXd>& view2, int d,
                        const SpdPolicy& policy = {}) {
  require(view1.size() == view2.size(), "cca_fit: views must contain the same sample count");
  require(view1.size() >= 2, "cca_fit: need at least two samples");
  const double n = static_cast<double>(view1.size());
  CcaModel model;
  const Eigen::MatrixXd d1 = detail::centered_data_matrix(view1, model.mean1);
  const Eigen::MatrixXd d2 = detail::centered_data_matrix(view2, model.mean2);
  const Eigen::Index m1 = d1.rows(), m2 = d2.rows();
  require(d >= 1 && d <= std::min(m1, m2), "cca_fit: d must be in [1, min(m1, m2)]");
  const Eigen::MatrixXd c11 = d1 * d1.transpose() / n;
  const Eigen::MatrixXd c22 = d2 * d2.transpose() / n;
  const Eigen::MatrixXd c12 = d1 * d2.transpose() / n;

  SpdFactor f22(c22, policy, "cca_fit: view-2 autocovariance");
  const auto g1 = sym_geig(symmetrized(c12 * f22.solve(Eigen::MatrixXd(c12.transpose()))), c11,
                           policy, "cca_fit: view-1 autocovariance");
  SpdFactor f11(c11, policy, "cca_fit: view-1 autocovariance");
  const auto g2 = sym_geig(symmetrized(c12.transpose() * f11.solve(c12)), c22, policy,
                           "cca_fit: view-2 autocovariance");

  model.w1 = g1.eigenvectors.leftCols(d);
  model.w2 = g2.eigenvectors.leftCols(d);
  model.correlations =
      g1.eigenvalues.head(d).cwiseMax(0.0).cwiseMin(1.0).cwiseSqrt();
  return model;
}

/// W_view' (x - mean_view).
inline Eigen::VectorXd cca_project(const CcaModel& model, const Eigen::VectorXd& x, int view) {
  require(view == 1 || view == 2, "cca_project: view must be 1 or 2");
  const Eigen::MatrixXd& w = view == 1 ? model.w1 : model.w2;
  const Eigen::VectorXd& mean = view == 1 ? model.mean1 : model.mean2;
  require(x.size() == mean.size(), "cca_project: x dimension must match the view");
  return w.transpose() * (x - mean);
}

// ---------------------------------------------------------------------------
// 2DCCA: alternating generalized eigenproblems on matrix views.
// ---------------------------------------------------------------------------

struct TdccaModel {
  Eigen::MatrixXd l1, l2;  // m_j x d1
  Eigen::MatrixXd r1, r2;  // n_j x d2
  Eigen::MatrixXd mean1, mean2;
};

struct TdccaFitResult {
  TdccaModel model;
  FitTrace trace;
};

namespace detail {

// Split the stacked eigenvectors of the coupled eigenproblem into per-view
// blocks and rescale each block to unit variance under its autocovariance.
inline void split_coupled_eigenvectors(const Eigen::MatrixXd& stacked, Eigen::Index rows1,
                                       const Eigen::MatrixXd& s11, const Eigen::MatrixXd& s22,
                                       Eigen::MatrixXd& out1, Eigen::MatrixXd& out2) {
  out1 = stacked.topRows(rows1);
  out2 = stacked.bottomRows(stacked.rows() - rows1);
  for (Eigen::Index c = 0; c < stacked.cols(); ++c) {
    const double v1 = out1.col(c).dot(s11 * out1.col(c));
    const double v2 = out2.col(c).dot(s22 * out2.col(c));
    if (v1 > 1e-30) out1.col(c) /= std::sqrt(v1);
    if (v2 > 1e-30) out2.col(c) /= std::sqrt(v2);
  }
}

}  // namespace detail

/// Alternates the left and right coupled eigenproblems until all four
/// projection matrices move less than tol in Frobenius norm. The right
/// projections start from the leading columns of the identity.
inline TdccaFitResult tdcca_fit(const PairedMatrixDataset& pairs, int d1, int d2,
                                int max_iters = 200, double tol = 1e-6,
                                const SpdPolicy& policy = {}) {
  require(pairs.n() >= 2, "tdcca_fit: need at least two pairs");
  const Eigen::Index m1 = pairs.m1(), n1 = pairs.n1(), m2 = pairs.m2(), n2 = pairs.n2();
  require(d1 >= 1 && d1 <= std::min(m1, m2), "tdcca_fit: d1 must be in [1, min(m1, m2)]");
  require(d2 >= 1 && d2 <= std::min(n1, n2), "tdcca_fit: d2 must be in [1, min(n1, n2)]");
  require(max_iters >= 1, "tdcca_fit: max_iters must be positive");
  const int n = pairs.n();
  const double dn = static_cast<double>(n);
  // Small-sample scatters are rank deficient and rely on the jitter as
  // Tikhonov regularization; only a factorization failure is fatal here.
  const SpdPolicy scatter_policy{policy.jitter, 1e300};

  std::vector<Eigen::MatrixXd> a1(n), a2(n);
  for (int i = 0; i < n; ++i) {
    a1[i] = pairs.centered1(i);
    a2[i] = pairs.centered2(i);
  }

  TdccaModel model;
  model.mean1 = pairs.mean1;
  model.mean2 = pairs.mean2;
  model.r1 = Eigen::MatrixXd::Identity(n1, d2);
  model.r2 = Eigen::MatrixXd::Identity(n2, d2);
  model.l1 = Eigen::MatrixXd::Zero(m1, d1);
  model.l2 = Eigen::MatrixXd::Zero(m2, d1);

  FitTrace trace;
  for (int iter = 1; iter <= max_iters; ++iter) {
    TdccaModel prev = model;

    // Left step: row-side scatters under the current right projections.
    Eigen::MatrixXd s11 = Eigen::MatrixXd::Zero(m1, m1);
    Eigen::MatrixXd s22 = Eigen::MatrixXd::Zero(m2, m2);
    Eigen::MatrixXd s12 = Eigen::MatrixXd::Zero(m1, m2);
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd t1 = a1[i] * model.r1;
      const Eigen::MatrixXd t2 = a2[i] * model.r2;
      s11 += t1 * t1.transpose();
      s22 += t2 * t2.transpose();
      s12 += t1 * t2.transpose();
    }
    s11 /= dn;
    s22 /= dn;
    s12 /= dn;
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(m1 + m2, m1 + m2);
    coupling.topRightCorner(m1, m2) = s12;
    coupling.bottomLeftCorner(m2, m1) = s12.transpose();
    const auto gl = sym_geig(coupling, block_diag(s11, s22), scatter_policy,
                             "tdcca_fit: left-step autocovariance");
    detail::split_coupled_eigenvectors(gl.eigenvectors.leftCols(d1), m1, s11, s22, model.l1,
                                       model.l2);
    const double objective = gl.eigenvalues(0);

    // Right step: column-side scatters under the fresh left projections.
    Eigen::MatrixXd t11 = Eigen::MatrixXd::Zero(n1, n1);
    Eigen::MatrixXd t22 = Eigen::MatrixXd::Zero(n2, n2);
    Eigen::MatrixXd t12 = Eigen::MatrixXd::Zero(n1, n2);
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd u1 = a1[i].transpose() * model.l1;
      const Eigen::MatrixXd u2 = a2[i].transpose() * model.l2;
      t11 += u1 * u1.transpose();
      t22 += u2 * u2.transpose();
      t12 += u1 * u2.transpose();
    }
    t11 /= dn;
    t22 /= dn;
    t12 /= dn;
    Eigen::MatrixXd coupling_r = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    coupling_r.topRightCorner(n1, n2) = t12;
    coupling_r.bottomLeftCorner(n2, n1) = t12.transpose();
    const auto gr = sym_geig(coupling_r, block_diag(t11, t22), scatter_policy,
                             "tdcca_fit: right-step autocovariance");
    detail::split_coupled_eigenvectors(gr.eigenvectors.leftCols(d2), n1, t11, t22, model.r1,
                                       model.r2);

    TraceRow row;
    row.iteration = iter;
    row.objective = objective;
    row.deltas = {{"delta_L1", (model.l1 - prev.l1).norm()},
                  {"delta_L2", (model.l2 - prev.l2).norm()},
                  {"delta_R1", (model.r1 - prev.r1).norm()},
                  {"delta_R2", (model.r2 - prev.r2).norm()}};
    trace.rows.push_back(row);
    double max_delta = 0.0;
    for (const auto& [name, value] : row.deltas) max_delta = std::max(max_delta, value);
    if (iter > 1 && max_delta < tol) break;
  }
  return {model, trace};
}

/// L_view' (X - mean_view) R_view.
inline Eigen::MatrixXd tdcca_project(const TdccaModel& model, const Eigen::MatrixXd& x,
                                     int view) {
  require(view == 1 || view == 2, "tdcca_project: view must be 1 or 2");
  const Eigen::MatrixXd& l = view == 1 ? model.l1 : model.l2;
  const Eigen::MatrixXd& r = view == 1 ? model.r1 : model.r2;
  const Eigen::MatrixXd& mean = view == 1 ? model.mean1 : model.mean2;
  require(x.rows() == mean.rows() && x.cols() == mean.cols(),
          "tdcca_project: X dimensions must match the view");
  return l.transpose() * (x - mean) * r;
}

// ---------------------------------------------------------------------------
// PCCA: probabilistic CCA on vector views (closed-form ML and EM).
// ---------------------------------------------------------------------------

struct PccaModel {
  Eigen::MatrixXd w1;    // m1 x d
  Eigen::MatrixXd w2;    // m2 x d
  Eigen::MatrixXd psi1;  // m1 x m1, PSD
  Eigen::MatrixXd psi2;  // m2 x m2, PSD
  Eigen::VectorXd mean1;
  Eigen::VectorXd mean2;
};

struct PccaFitResult {
  PccaModel model;
  FitTrace trace;
};

/// Closed-form maximum likelihood fit: loadings span the canonical directions
/// scaled by the square roots of the canonical correlations (the symmetric
/// split of the correlation factor), noise is the covariance residual.
inline PccaModel pcca_fit_ml(const std::vector<Eigen::VectorXd>& view1,
                             const std::vector<Eigen::VectorXd>& view2, int d,
                             const SpdPolicy& policy = {}) {
  require(view1.size() == view2.size(), "pcca_fit_ml: views must contain the same sample count");
  require(view1.size() >= 2, "pcca_fit_ml: need at least two samples");
  const double n = static_cast<double>(view1.size());
  PccaModel model;
  const Eigen::MatrixXd d1 = detail::centered_data_matrix(view1, model.mean1);
  const Eigen::MatrixXd d2 = detail::centered_data_matrix(view2, model.mean2);
  const Eigen::Index m1 = d1.rows(), m2 = d2.rows();
  require(d >= 1 && d <= std::min(m1, m2), "pcca_fit_ml: d must be in [1, min(m1, m2)]");
  const Eigen::MatrixXd c11 = d1 * d1.transpose() / n;
  const Eigen::MatrixXd c22 = d2 * d2.transpose() / n;
  const Eigen::MatrixXd c12 = d1 * d2.transpose() / n;

  SpdFactor f22(c22, policy, "pcca_fit_ml: view-2 autocovariance");
  const auto g1 = sym_geig(symmetrized(c12 * f22.solve(Eigen::MatrixXd(c12.transpose()))), c11,
                           policy, "pcca_fit_ml: view-1 autocovariance");
  SpdFactor f11(c11, policy, "pcca_fit_ml: view-1 autocovariance");
  const auto g2 = sym_geig(symmetrized(c12.transpose() * f11.solve(c12)), c22, policy,
                           "pcca_fit_ml: view-2 autocovariance");

  const Eigen::VectorXd rho = g1.eigenvalues.head(d).cwiseMax(0.0).cwiseMin(1.0).cwiseSqrt();
  const Eigen::VectorXd scale = rho.cwiseSqrt();  // C_d^{1/2}
  model.w1 = c11 * g1.eigenvectors.leftCols(d) * scale.asDiagonal();
  model.w2 = c22 * g2.eigenvectors.leftCols(d) * scale.asDiagonal();
  model.psi1 = floor_psd(c11 - model.w1 * model.w1.transpose());
  model.psi2 = floor_psd(c22 - model.w2 * model.w2.transpose());
  return model;
}

namespace detail {

// Observed-data log-likelihood of the stacked factor model, computed through
// the Woodbury identity so only the per-view noise blocks are factored.
inline double pcca_loglik(const Eigen::MatrixXd& w, const Eigen::MatrixXd& psi1,
                          const Eigen::MatrixXd& psi2, const Eigen::MatrixXd& sigma_tilde,
                          double n, const SpdPolicy& policy) {
  const Eigen::Index m = w.rows();
  SpdFactor f1(psi1, policy, "pcca: Psi1");
  SpdFactor f2(psi2, policy, "pcca: Psi2");
  const Eigen::MatrixXd psi_inv = block_diag(f1.inverse(), f2.inverse());
  const Eigen::MatrixXd wt_psi_inv = w.transpose() * psi_inv;  // d x m
  const Eigen::MatrixXd m_inv =
      Eigen::MatrixXd::Identity(w.cols(), w.cols()) + wt_psi_inv * w;
  SpdFactor fm(m_inv, policy, "pcca: posterior precision");
  const double log_det_sigma = f1.log_det() + f2.log_det() + fm.log_det();
  const Eigen::MatrixXd b = wt_psi_inv * sigma_tilde;  // d x m
  const double trace_term = (psi_inv * sigma_tilde).trace() -
                            (fm.solve(b) * wt_psi_inv.transpose()).trace();
  return -0.5 * n * (static_cast<double>(m) * k_ln_2pi + log_det_sigma + trace_term);
}

}  // namespace detail

/// EM fit of the stacked factor model. The loadings start from seeded
/// uniform(0,1) entries and the noise from the identity; the noise covariance
/// is kept block-diagonal per view after every update (the constrained M-step
/// maximizer is exactly the diagonal blocks of the unconstrained update).
/// `init` overrides the starting point when supplied.
inline PccaFitResult pcca_fit_em(const std::vector<Eigen::VectorXd>& view1,
                                 const std::vector<Eigen::VectorXd>& view2, int d,
                                 int max_iters = 500, double tol = 1e-8,
                                 std::uint64_t seed = 0, const SpdPolicy& policy = {},
                                 const PccaModel* init = nullptr) {
  require(view1.size() == view2.size(), "pcca_fit_em: views must contain the same sample count");
  require(view1.size() >= 2, "pcca_fit_em: need at least two samples");
  require(max_iters >= 1, "pcca_fit_em: max_iters must be positive");
  const double n = static_cast<double>(view1.size());
  PccaModel model;
  const Eigen::MatrixXd d1 = detail::centered_data_matrix(view1, model.mean1);
  const Eigen::MatrixXd d2 = detail::centered_data_matrix(view2, model.mean2);
  const Eigen::Index m1 = d1.rows(), m2 = d2.rows(), m = m1 + m2;
  require(d >= 1 && d <= std::min(m1, m2), "pcca_fit_em: d must be in [1, min(m1, m2)]");

  Eigen::MatrixXd stacked(m, d1.cols());
  stacked.topRows(m1) = d1;
  stacked.bottomRows(m2) = d2;
  const Eigen::MatrixXd sigma_tilde = stacked * stacked.transpose() / n;

  Eigen::MatrixXd w;
  if (init) {
    require(init->w1.rows() == m1 && init->w2.rows() == m2 && init->w1.cols() == d &&
                init->w2.cols() == d,
            "pcca_fit_em: init dimensions must match");
    w.resize(m, d);
    w.topRows(m1) = init->w1;
    w.bottomRows(m2) = init->w2;
    model.psi1 = init->psi1;
    model.psi2 = init->psi2;
  } else {
    std::mt19937_64 rng(seed);
    w = uniform_matrix(m, d, rng);
    model.psi1 = Eigen::MatrixXd::Identity(m1, m1);
    model.psi2 = Eigen::MatrixXd::Identity(m2, m2);
  }

  FitTrace trace;
  double prev = detail::pcca_loglik(w, model.psi1, model.psi2, sigma_tilde, n, policy);
  for (int iter = 1; iter <= max_iters; ++iter) {
    SpdFactor f1(model.psi1, policy, "pcca_fit_em: Psi1");
    SpdFactor f2(model.psi2, policy, "pcca_fit_em: Psi2");
    const Eigen::MatrixXd psi_inv = block_diag(f1.inverse(), f2.inverse());
    const Eigen::MatrixXd m_post = SpdFactor(
        Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) + w.transpose() * psi_inv * w), policy,
        "pcca_fit_em: posterior precision").inverse();
    // Sufficient statistics, normalized by the sample count.
    const Eigen::MatrixXd xz = sigma_tilde * psi_inv * w * m_post;              // m x d
    const Eigen::MatrixXd zz = m_post + m_post * w.transpose() * psi_inv * xz;  // d x d
    SpdFactor fzz(zz, policy, "pcca_fit_em: latent second moment");
    w = fzz.solve(Eigen::MatrixXd(xz.transpose())).transpose();
    const Eigen::MatrixXd psi_full = symmetrized(sigma_tilde - xz * fzz.solve(Eigen::MatrixXd(xz.transpose())));
    model.psi1 = symmetrized(psi_full.topLeftCorner(m1, m1));
    model.psi2 = symmetrized(psi_full.bottomRightCorner(m2, m2));

    const double loglik = detail::pcca_loglik(w, model.psi1, model.psi2, sigma_tilde, n, policy);
    trace.rows.push_back({iter, loglik, {}});
    const double change = std::abs(loglik - prev) / std::max(1.0, std::abs(prev));
    prev = loglik;
    if (change < tol) break;
  }
  model.w1 = w.topRows(m1);
  model.w2 = w.bottomRows(m2);
  return {model, trace};
}

/// Posterior mean of the latent given the present views; an absent view is
/// imputed by its training mean and so contributes zero evidence after
/// centering.
inline Eigen::VectorXd pcca_posterior_mean(const PccaModel& model,
                                           const std::optional<Eigen::VectorXd>& x1,
                                           const std::optional<Eigen::VectorXd>& x2,
                                           const SpdPolicy& policy = {}) {
  require(x1.has_value() || x2.has_value(), "pcca_posterior_mean: need at least one view");
  const Eigen::Index m1 = model.mean1.size(), m2 = model.mean2.size();
  const Eigen::Index d = model.w1.cols();
  if (x1) require(x1->size() == m1, "pcca_posterior_mean: x1 dimension mismatch");
  if (x2) require(x2->size() == m2, "pcca_posterior_mean: x2 dimension mismatch");
  Eigen::VectorXd xc = Eigen::VectorXd::Zero(m1 + m2);
  if (x1) xc.head(m1) = *x1 - model.mean1;
  if (x2) xc.tail(m2) = *x2 - model.mean2;
  Eigen::MatrixXd w(m1 + m2, d);
  w.topRows(m1) = model.w1;
  w.bottomRows(m2) = model.w2;
  SpdFactor f1(model.psi1, policy, "pcca_posterior_mean: Psi1");
  SpdFactor f2(model.psi2, policy, "pcca_posterior_mean: Psi2");
  const Eigen::MatrixXd psi_inv = block_diag(f1.inverse(), f2.inverse());
  const Eigen::MatrixXd m_post = SpdFactor(
      Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) + w.transpose() * psi_inv * w), policy,
      "pcca_posterior_mean: posterior precision").inverse();
  return m_post * (w.transpose() * (psi_inv * xc));
}

}  // namespace mvcca
