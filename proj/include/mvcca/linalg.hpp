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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mvcca/errors.hpp"

namespace mvcca {

/// Controls every symmetric positive definite factorization in the library.
/// `jitter` is added to the diagonal, scaled by the mean diagonal magnitude of
/// the matrix being factored; a solve is refused when the estimated condition
/// number of the jittered matrix exceeds `max_condition`.
struct SpdPolicy {
  double jitter = 1e-9;
  double max_condition = 1e9;
};

inline double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

inline bool is_symmetric(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, max_abs(a));
  const Eigen::MatrixXd diff = a - a.transpose();
  return max_abs(diff) <= tol * scale;
}

inline void require_symmetric(const Eigen::MatrixXd& a, double tol,
                              const std::string& name) {
  require(a.rows() == a.cols(), name + " must be square");
  require(is_symmetric(a, tol), name + " must be symmetric within " + std::to_string(tol));
}

/// Cholesky factorization of a symmetric matrix after policy jitter, with a
/// condition gate. All covariance inversions in the library go through this.
class SpdFactor {
 public:
  SpdFactor(const Eigen::MatrixXd& a, const SpdPolicy& policy, const std::string& name) {
    require(a.rows() == a.cols(), name + " must be square");
    require(policy.jitter >= 0.0, "SpdPolicy.jitter must be non-negative");
    require(policy.max_condition > 1.0, "SpdPolicy.max_condition must exceed 1");
    dim_ = a.rows();
    Eigen::MatrixXd work = symmetrized(a);
    jitter_ = dim_ > 0 ? policy.jitter * work.diagonal().cwiseAbs().mean() : 0.0;
    work.diagonal().array() += jitter_;
    llt_.compute(work);
    if (llt_.info() != Eigen::Success)
      throw NumericalError(name + " is not positive definite after jitter " +
                           std::to_string(jitter_));
    const double rcond = llt_.rcond();
    if (!(rcond > 0.0) || 1.0 / rcond > policy.max_condition)
      throw NumericalError(name + " is effectively singular after jitter (condition estimate " +
                           std::to_string(rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity()) +
                           " exceeds " + std::to_string(policy.max_condition) + ")");
    log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  Eigen::Index dim() const { return dim_; }
  double log_det() const { return log_det_; }
  double applied_jitter() const { return jitter_; }
  Eigen::MatrixXd matrix_l() const { return llt_.matrixL(); }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }

  Eigen::MatrixXd inverse() const {
    return symmetrized(llt_.solve(Eigen::MatrixXd::Identity(dim_, dim_)));
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::Index dim_ = 0;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

/// (A + jitter I)^-1 through a symmetric factorization; the result is
/// symmetrized before returning.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const SpdPolicy& policy = {}) {
  require_symmetric(a, 1e-10, "spd_inverse: input");
  return SpdFactor(a, policy, "spd_inverse: input").inverse();
}

struct SymGeigResult {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns; v'Bv = 1, largest-|entry| positive
};

/// Generalized symmetric eigenproblem A v = lambda B v with B positive
/// definite under the policy. Solved by whitening with the Cholesky factor of
/// B. Eigenvalues come back descending and each eigenvector is flipped so its
/// largest-magnitude entry is positive.
inline SymGeigResult sym_geig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const SpdPolicy& policy = {},
                              const std::string& b_name = "sym_geig: B") {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          "sym_geig: A and B must be square with matching sizes");
  require_symmetric(a, 1e-10, "sym_geig: A");
  SpdFactor bf(b, policy, b_name);
  const Eigen::MatrixXd l = bf.matrix_l();
  Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(symmetrized(a));
  c = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(c.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(c));
  if (es.info() != Eigen::Success) throw NumericalError("sym_geig: eigensolver did not converge");
  const Eigen::Index k = a.rows();
  const Eigen::MatrixXd back = l.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  SymGeigResult out;
  out.eigenvalues.resize(k);
  out.eigenvectors.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.eigenvalues(i) = es.eigenvalues()(k - 1 - i);
    Eigen::VectorXd v = back.col(k - 1 - i);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    out.eigenvectors.col(i) = v;
  }
  return out;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return Eigen::kroneckerProduct(a, b);
}

/// Column-stacking vec operator.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  require(v.size() == rows * cols, "unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

/// Clamp negative eigenvalues to zero. Covariance updates are nonnegative in
/// exact arithmetic; this removes roundoff-scale violations.
inline Eigen::MatrixXd floor_psd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(a));
  if (es.eigenvalues().minCoeff() >= 0.0) return symmetrized(a);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return symmetrized(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

inline Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace mvcca
