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
#include <numbers>
#include <random>

#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"
#include "mvcca/rng.hpp"

namespace mvcca {

inline const double k_ln_2pi = std::log(2.0 * std::numbers::pi);

/// Matrix-variate normal MN(mean, col_cov, row_cov). col_cov (m x m) couples
/// the rows of a sample, row_cov (n x n) couples the columns, and with
/// column-stacking vec, vec(X) ~ N(vec(mean), row_cov (x) col_cov).
struct MatrixNormalParams {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd col_cov;
  Eigen::MatrixXd row_cov;
};

inline void validate(const MatrixNormalParams& p) {
  require(p.col_cov.rows() == p.col_cov.cols() && p.col_cov.rows() == p.mean.rows(),
          "MatrixNormalParams: col_cov must be square with the mean's row count");
  require(p.row_cov.rows() == p.row_cov.cols() && p.row_cov.rows() == p.mean.cols(),
          "MatrixNormalParams: row_cov must be square with the mean's column count");
  require_symmetric(p.col_cov, 1e-12, "MatrixNormalParams: col_cov");
  require_symmetric(p.row_cov, 1e-12, "MatrixNormalParams: row_cov");
}

/// Log of the matrix-normal density at X.
inline double log_density(const Eigen::MatrixXd& x, const MatrixNormalParams& p,
                          const SpdPolicy& policy = {}) {
  validate(p);
  require(x.rows() == p.mean.rows() && x.cols() == p.mean.cols(),
          "log_density: X dimensions must match the mean");
  const double m = static_cast<double>(p.mean.rows());
  const double n = static_cast<double>(p.mean.cols());
  SpdFactor col(p.col_cov, policy, "col_cov");
  SpdFactor row(p.row_cov, policy, "row_cov");
  const Eigen::MatrixXd delta = x - p.mean;
  // tr(col^-1 delta row^-1 delta')
  const double quad =
      col.solve(delta).cwiseProduct(Eigen::MatrixXd(row.solve(Eigen::MatrixXd(delta.transpose())).transpose())).sum();
  return -0.5 * (m * n * k_ln_2pi + n * col.log_det() + m * row.log_det() + quad);
}

/// One draw, deterministic per seed: X = mean + A E B' with A A' = col_cov,
/// B B' = row_cov and E i.i.d. standard normal.
inline Eigen::MatrixXd sample(const MatrixNormalParams& p, std::uint64_t seed,
                              const SpdPolicy& policy = {}) {
  validate(p);
  SpdFactor col(p.col_cov, policy, "col_cov");
  SpdFactor row(p.row_cov, policy, "row_cov");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd e = gaussian_matrix(p.mean.rows(), p.mean.cols(), rng);
  return p.mean + col.matrix_l() * e * row.matrix_l().transpose();
}

struct VecNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Equivalent vector Gaussian of the matrix normal under column-stacking vec.
inline VecNormal to_vec_normal(const MatrixNormalParams& p) {
  validate(p);
  return {vec(p.mean), kron(p.row_cov, p.col_cov)};
}

}  // namespace mvcca
