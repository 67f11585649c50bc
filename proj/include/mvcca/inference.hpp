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

#include <optional>
#include <string>
#include <vector>

#include "mvcca/bmvcca.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"

namespace mvcca {

enum class ModelKind { cca, pcca, tdcca, umvcca, bmvcca };
enum class SourceView { view1 = 1, view2 = 2, both = 3 };

/// Low-dimensional representation of an observation (a matrix for the matrix
/// models, a column for the vector models), tagged with its provenance.
struct SubspaceCode {
  Eigen::MatrixXd values;
  SourceView source_view = SourceView::both;
  ModelKind model_kind = ModelKind::bmvcca;
};

/// Projected training set with labels; latent_means carries the per-item
/// variational means when the probabilistic test criterion is in use.
struct LabeledGallery {
  std::vector<SubspaceCode> codes;
  std::vector<std::string> labels;
  std::vector<Eigen::MatrixXd> latent_means;
};

/// Posterior-mean code of a pair under a fitted bilateral model: one E-step
/// mean computation at the fitted parameters.
inline SubspaceCode project_pair(const BmvccaModel& model, const Eigen::MatrixXd& x1,
                                 const Eigen::MatrixXd& x2, const SpdPolicy& policy = {}) {
  require(x1.rows() == model.mean1.rows() && x1.cols() == model.mean1.cols(),
          "project_pair: X1 dimensions must match the model");
  require(x2.rows() == model.mean2.rows() && x2.cols() == model.mean2.cols(),
          "project_pair: X2 dimensions must match the model");
  CnSolver solver(model, policy);
  return {solver.solve(x1 - model.mean1, x2 - model.mean2), SourceView::both,
          ModelKind::bmvcca};
}

/// Single-view code: the absent view is imputed by its training mean, so it
/// contributes zero evidence while its precision term remains. Identical to
/// project_pair with the other view set to its mean.
inline SubspaceCode project_single(const BmvccaModel& model, const Eigen::MatrixXd& x, int view,
                                   const SpdPolicy& policy = {}) {
  require(view == 1 || view == 2, "project_single: view must be 1 or 2");
  const Eigen::MatrixXd& mean = view == 1 ? model.mean1 : model.mean2;
  require(x.rows() == mean.rows() && x.cols() == mean.cols(),
          "project_single: X dimensions must match the view");
  CnSolver solver(model, policy);
  Eigen::MatrixXd code = view == 1 ? solver.solve(x - model.mean1, std::nullopt)
                                   : solver.solve(std::nullopt, x - model.mean2);
  return {std::move(code), view == 1 ? SourceView::view1 : SourceView::view2,
          ModelKind::bmvcca};
}

/// L^j C R^j' + mean^j.
inline Eigen::MatrixXd reconstruct(const BmvccaModel& model, const SubspaceCode& code,
                                   int view) {
  require(view == 1 || view == 2, "reconstruct: view must be 1 or 2");
  require(code.values.rows() == model.d1 && code.values.cols() == model.d2,
          "reconstruct: code dimensions must match the model");
  const Eigen::MatrixXd& l = view == 1 ? model.l1 : model.l2;
  const Eigen::MatrixXd& r = view == 1 ? model.r1 : model.r2;
  const Eigen::MatrixXd& mean = view == 1 ? model.mean1 : model.mean2;
  return l * code.values * r.transpose() + mean;
}

/// Nearest neighbour on flattened codes under Euclidean distance; ties go to
/// the lowest gallery index.
inline std::string classify_nn(const LabeledGallery& gallery, const SubspaceCode& probe) {
  require(!gallery.codes.empty(), "classify_nn: gallery must not be empty");
  require(gallery.codes.size() == gallery.labels.size(),
          "classify_nn: gallery codes and labels must align");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gallery.codes.size(); ++i) {
    const auto& code = gallery.codes[i];
    require(code.values.size() == probe.values.size(),
            "classify_nn: code dimensions must match the probe");
    const double dist = (vec(code.values) - vec(probe.values)).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return gallery.labels[best];
}

/// The n-varying part of E_q[ln P(X^j | Z_n)]: the expected residual
/// quadratic form, negated. Normalizers and the shared variance term are
/// constant in n and dropped; the argmax is unchanged.
inline double ptest_score(const BmvccaModel& model, const Eigen::MatrixXd& latent_mean,
                          const Eigen::MatrixXd& x, int view, const SpdPolicy& policy = {}) {
  require(view == 1 || view == 2, "ptest_score: view must be 1 or 2");
  require(latent_mean.rows() == model.d1 && latent_mean.cols() == model.d2,
          "ptest_score: latent mean dimensions must match the model");
  const Eigen::MatrixXd& l = view == 1 ? model.l1 : model.l2;
  const Eigen::MatrixXd& r = view == 1 ? model.r1 : model.r2;
  const Eigen::MatrixXd& mean = view == 1 ? model.mean1 : model.mean2;
  const Eigen::MatrixXd& psi_l = view == 1 ? model.psi_l1 : model.psi_l2;
  const Eigen::MatrixXd& psi_r = view == 1 ? model.psi_r1 : model.psi_r2;
  require(x.rows() == mean.rows() && x.cols() == mean.cols(),
          "ptest_score: X dimensions must match the view");
  SpdFactor fl(psi_l, policy, "ptest_score: Psi_L");
  SpdFactor fr(psi_r, policy, "ptest_score: Psi_R");
  const Eigen::MatrixXd resid = (x - mean) - l * latent_mean * r.transpose();
  const double quad =
      fl.solve(resid).cwiseProduct(Eigen::MatrixXd(fr.solve(Eigen::MatrixXd(resid.transpose())).transpose())).sum();
  return -0.5 * quad;
}

/// Probabilistic test: the label of the gallery latent maximizing the
/// expected conditional log-likelihood of the probe. Ties go to the lowest
/// gallery index.
inline std::string classify_ptest(const BmvccaModel& model,
                                  const std::vector<Eigen::MatrixXd>& gallery_latents,
                                  const std::vector<std::string>& labels,
                                  const Eigen::MatrixXd& x, int view,
                                  const SpdPolicy& policy = {}) {
  require(!gallery_latents.empty(), "classify_ptest: gallery must not be empty");
  require(gallery_latents.size() == labels.size(),
          "classify_ptest: gallery latents and labels must align");
  require(view == 1 || view == 2, "classify_ptest: view must be 1 or 2");
  const Eigen::MatrixXd& l = view == 1 ? model.l1 : model.l2;
  const Eigen::MatrixXd& r = view == 1 ? model.r1 : model.r2;
  const Eigen::MatrixXd& mean = view == 1 ? model.mean1 : model.mean2;
  const Eigen::MatrixXd& psi_l = view == 1 ? model.psi_l1 : model.psi_l2;
  const Eigen::MatrixXd& psi_r = view == 1 ? model.psi_r1 : model.psi_r2;
  require(x.rows() == mean.rows() && x.cols() == mean.cols(),
          "classify_ptest: X dimensions must match the view");
  SpdFactor fl(psi_l, policy, "classify_ptest: Psi_L");
  SpdFactor fr(psi_r, policy, "classify_ptest: Psi_R");
  const Eigen::MatrixXd xc = x - mean;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gallery_latents.size(); ++i) {
    require(gallery_latents[i].rows() == model.d1 && gallery_latents[i].cols() == model.d2,
            "classify_ptest: latent mean dimensions must match the model");
    const Eigen::MatrixXd resid = xc - l * gallery_latents[i] * r.transpose();
    const double quad =
        fl.solve(resid).cwiseProduct(Eigen::MatrixXd(fr.solve(Eigen::MatrixXd(resid.transpose())).transpose())).sum();
    const double score = -0.5 * quad;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return labels[best];
}

}  // namespace mvcca
