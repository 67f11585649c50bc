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
#include <Eigen/Eigenvalues>

#include <vector>

#include "mvcca/errors.hpp"

namespace mvcca {

/// Per-view PCA pre-projection used by the harness before the vector models
/// when the feature dimension exceeds the sample count.
struct PcaBasis {
  Eigen::MatrixXd components;  // dim x k, orthonormal columns
  Eigen::VectorXd mean;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    require(x.size() == mean.size(), "PcaBasis: input dimension mismatch");
    return components.transpose() * (x - mean);
  }
};

inline PcaBasis fit_pca(const std::vector<Eigen::VectorXd>& xs, int k) {
  require(!xs.empty(), "fit_pca: need at least one sample");
  const Eigen::Index dim = xs[0].size();
  require(k >= 1 && k <= dim, "fit_pca: k must be in [1, dim]");
  PcaBasis basis;
  basis.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : xs) {
    require(x.size() == dim, "fit_pca: all samples must share their dimension");
    basis.mean += x;
  }
  basis.mean /= static_cast<double>(xs.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& x : xs) {
    const Eigen::VectorXd c = x - basis.mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(xs.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("fit_pca: eigensolver did not converge");
  // Leading k eigenvectors, descending.
  basis.components.resize(dim, k);
  for (int j = 0; j < k; ++j) basis.components.col(j) = es.eigenvectors().col(dim - 1 - j);
  return basis;
}

}  // namespace mvcca
