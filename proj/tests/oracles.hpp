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

// Test-only oracles, kept independent of the library's implementation paths:
// dense conditioning goes through LU/LDLT on explicitly built joint
// covariances, Kronecker products through the double loop.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracles {

inline Eigen::MatrixXd kron_loop(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::VectorXd vec_colwise(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) v(k++) = m(i, j);
  return v;
}

// Multivariate normal log-density through an LDLT on the dense covariance.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& cov) {
  const Eigen::Index k = x.size();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(ldlt.solve(d));
  const double log_det = ldlt.vectorD().array().log().sum();
  return -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

// E[a | b = bv] for a jointly Gaussian (a, b) with zero mean, from the cross
// and marginal covariance blocks.
inline Eigen::VectorXd gaussian_conditional_mean(const Eigen::MatrixXd& cov_ab,
                                                 const Eigen::MatrixXd& cov_bb,
                                                 const Eigen::VectorXd& bv) {
  return cov_ab * cov_bb.ldlt().solve(bv);
}

// SPD matrix with eigenvalues in [lo, hi]: controlled conditioning keeps the
// oracle comparisons insensitive to jitter.
inline Eigen::MatrixXd random_spd(Eigen::Index k, std::mt19937_64& rng, double lo = 0.3,
                                  double hi = 3.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) g(i, j) = normal(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(k);
  for (Eigen::Index i = 0; i < k; ++i) ev(i) = unif(rng);
  return q * ev.asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) g(i, j) = normal(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * normal(rng);
  return m;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  return ac.dot(bc) / (ac.norm() * bc.norm());
}

// Golden-section maximizer of a unimodal scalar function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-10) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Principal angles between the column spans of two matrices, in radians.
inline Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd qa =
      Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
      Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb =
      Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
      Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  Eigen::VectorXd angles = svd.singularValues();
  for (Eigen::Index i = 0; i < angles.size(); ++i)
    angles(i) = std::acos(std::clamp(angles(i), -1.0, 1.0));
  return angles;
}

}  // namespace oracles
