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
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "mvcca/matvar.hpp"
#include "mvcca/synth.hpp"
#include "mvcca/umvcca.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

mvcca::UmvccaModel random_model(int m, int n1, int n2, int d2, std::mt19937_64& rng) {
  mvcca::UmvccaModel model;
  model.m = m;
  model.d2 = d2;
  model.r = oracles::random_matrix(n1 + n2, d2, rng);
  model.psi_r1 = oracles::random_spd(n1, rng);
  model.psi_r2 = oracles::random_spd(n2, rng);
  model.mean1 = oracles::random_matrix(m, n1, rng);
  model.mean2 = oracles::random_matrix(m, n2, rng);
  return model;
}

}  // namespace

TEST_CASE("umvcca_fit rejects mismatched row counts", "[umvcca]") {
  std::mt19937_64 rng(1);
  std::vector<MatrixXd> view1, view2;
  for (int i = 0; i < 4; ++i) {
    view1.push_back(oracles::random_matrix(3, 2, rng));
    view2.push_back(oracles::random_matrix(4, 2, rng));
  }
  const auto data = mvcca::make_paired_dataset(view1, view2);
  CHECK_THROWS_AS(mvcca::umvcca_fit(data, 1), mvcca::StructuralError);
}

TEST_CASE("umvcca_fit is monotone in log-likelihood and deterministic", "[umvcca]") {
  const auto [data, truth] = mvcca::generate_right_only(6, 5, 4, 2, 60, 0.2, 11);
  const auto fit_a = mvcca::umvcca_fit(data, 2, 100, 1e-9, 3);
  const auto fit_b = mvcca::umvcca_fit(data, 2, 100, 1e-9, 3);
  CHECK((fit_a.model.r - fit_b.model.r).cwiseAbs().maxCoeff() == 0.0);
  CHECK((fit_a.model.psi_r1 - fit_b.model.psi_r1).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(fit_a.trace.rows.size() >= 2);
  for (std::size_t i = 1; i < fit_a.trace.rows.size(); ++i) {
    const double prev = fit_a.trace.rows[i - 1].objective;
    CHECK(fit_a.trace.rows[i].objective >= prev - 1e-8 * std::abs(prev));
  }
  const auto fit_c = mvcca::umvcca_fit(data, 2, 100, 1e-9, 4);
  CHECK((fit_a.model.r - fit_c.model.r).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("umvcca recovers the planted right projections", "[umvcca]") {
  // Reduced-size variant of the one-sided synthetic setup.
  const auto [data, truth] = mvcca::generate_right_only(16, 16, 16, 1, 400, 0.1, 21);
  const auto fit = mvcca::umvcca_fit(data, 1, 300, 1e-9, 5);
  const VectorXd learned1 = fit.model.r.topRows(16).col(0);
  const VectorXd learned2 = fit.model.r.bottomRows(16).col(0);
  CHECK(mvcca::alignment_cosine(learned1, truth.r1.col(0)) > 0.95);
  CHECK(mvcca::alignment_cosine(learned2, truth.r2.col(0)) > 0.95);
}

TEST_CASE("posterior S is symmetric with eigenvalues in (0, 1]", "[umvcca]") {
  const auto [data, truth] = mvcca::generate_right_only(5, 4, 3, 2, 50, 0.3, 31);
  const auto fit = mvcca::umvcca_fit(data, 2, 60, 1e-9, 7);
  const MatrixXd psi_inv = mvcca::block_diag(mvcca::spd_inverse(fit.model.psi_r1),
                                             mvcca::spd_inverse(fit.model.psi_r2));
  const MatrixXd s = mvcca::spd_inverse(
      MatrixXd(MatrixXd::Identity(2, 2) + fit.model.r.transpose() * psi_inv * fit.model.r));
  CHECK(mvcca::max_abs(s - s.transpose()) < 1e-10);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
}

TEST_CASE("umvcca_posterior_mean special cases", "[umvcca]") {
  std::mt19937_64 rng(41);
  const auto model = random_model(4, 3, 2, 2, rng);
  CHECK(mvcca::umvcca_posterior_mean(model, model.mean1, model.mean2).norm() == 0.0);
  CHECK(mvcca::umvcca_posterior_mean(model, model.mean1, std::nullopt).norm() == 0.0);

  auto zero = model;
  zero.r.setZero();
  const MatrixXd x1 = oracles::random_matrix(4, 3, rng);
  CHECK(mvcca::umvcca_posterior_mean(zero, x1, std::nullopt).norm() == 0.0);

  CHECK_THROWS_AS(mvcca::umvcca_posterior_mean(model, std::nullopt, std::nullopt),
                  mvcca::StructuralError);
  CHECK_THROWS_AS(mvcca::umvcca_posterior_mean(model, oracles::random_matrix(5, 3, rng),
                                               std::nullopt),
                  mvcca::StructuralError);
}

TEST_CASE("umvcca_posterior_mean matches per-row Gaussian conditioning", "[umvcca]") {
  std::mt19937_64 rng(43);
  const mvcca::SpdPolicy exact{0.0, 1e12};
  const auto model = random_model(5, 3, 2, 1, rng);
  const MatrixXd psi = mvcca::block_diag(model.psi_r1, model.psi_r2);
  const MatrixXd cov_xx = model.r * model.r.transpose() + psi;
  const MatrixXd cov_zx = model.r.transpose();  // z row vs x row

  const MatrixXd x1 = oracles::random_matrix(5, 3, rng);
  const MatrixXd x2 = oracles::random_matrix(5, 2, rng);
  const MatrixXd got = mvcca::umvcca_posterior_mean(model, x1, x2, exact);
  MatrixXd xc(5, 5);
  xc.leftCols(3) = x1 - model.mean1;
  xc.rightCols(2) = x2 - model.mean2;
  // Rows of Z are independent given the matching rows of X.
  for (int row = 0; row < 5; ++row) {
    const VectorXd want =
        oracles::gaussian_conditional_mean(cov_zx, cov_xx, xc.row(row).transpose());
    CHECK(std::abs(got(row, 0) - want(0)) < 1e-8);
  }
}

TEST_CASE("umvcca_loglik special cases and oracles", "[umvcca]") {
  std::mt19937_64 rng(47);
  // R = 0, Psi = I, X at the means: -(m (n1+n2) / 2) ln 2pi per sample.
  mvcca::UmvccaModel flat;
  flat.m = 3;
  flat.d2 = 1;
  flat.r = MatrixXd::Zero(4, 1);
  flat.psi_r1 = MatrixXd::Identity(2, 2);
  flat.psi_r2 = MatrixXd::Identity(2, 2);
  flat.mean1 = oracles::random_matrix(3, 2, rng);
  flat.mean2 = oracles::random_matrix(3, 2, rng);
  std::vector<MatrixXd> v1(2, flat.mean1), v2(2, flat.mean2);
  auto data = mvcca::make_paired_dataset(v1, v2);
  const mvcca::SpdPolicy exact{0.0, 1e12};
  CHECK(mvcca::umvcca_loglik(flat, data, exact) ==
        Catch::Approx(2.0 * (-0.5 * 3 * 4 * mvcca::k_ln_2pi)).margin(1e-9));

  // Scalar views: univariate normals with variance r^2 + psi per entry pair.
  mvcca::UmvccaModel scalar;
  scalar.m = 1;
  scalar.d2 = 1;
  scalar.r = MatrixXd::Constant(2, 1, 0.8);
  scalar.r(1, 0) = -0.3;
  scalar.psi_r1 = MatrixXd::Constant(1, 1, 0.5);
  scalar.psi_r2 = MatrixXd::Constant(1, 1, 1.5);
  scalar.mean1 = MatrixXd::Zero(1, 1);
  scalar.mean2 = MatrixXd::Zero(1, 1);
  std::vector<MatrixXd> s1{MatrixXd::Constant(1, 1, 0.7), MatrixXd::Constant(1, 1, -0.9)};
  std::vector<MatrixXd> s2{MatrixXd::Constant(1, 1, -0.2), MatrixXd::Constant(1, 1, 0.4)};
  auto sdata = mvcca::make_paired_dataset(s1, s2);
  sdata.mean1.setZero();
  sdata.mean2.setZero();
  double want = 0.0;
  const MatrixXd cov = scalar.r * scalar.r.transpose() +
                       mvcca::block_diag(scalar.psi_r1, scalar.psi_r2);
  for (int i = 0; i < 2; ++i) {
    VectorXd x(2);
    x << s1[i](0, 0), s2[i](0, 0);
    want += oracles::mvn_logpdf(x, VectorXd::Zero(2), cov);
  }
  CHECK(mvcca::umvcca_loglik(scalar, sdata, exact) == Catch::Approx(want).margin(1e-10));

  // Small case against the vec-Gaussian oracle on the concatenation.
  const auto model = random_model(2, 2, 1, 1, rng);
  const MatrixXd x1 = oracles::random_matrix(2, 2, rng);
  const MatrixXd x2 = oracles::random_matrix(2, 1, rng);
  auto one = mvcca::make_paired_dataset({x1}, {x2});
  one.mean1 = model.mean1;
  one.mean2 = model.mean2;
  MatrixXd xc(2, 3);
  xc.leftCols(2) = x1 - model.mean1;
  xc.rightCols(1) = x2 - model.mean2;
  const MatrixXd row_cov =
      model.r * model.r.transpose() + mvcca::block_diag(model.psi_r1, model.psi_r2);
  const double oracle = oracles::mvn_logpdf(
      oracles::vec_colwise(xc), VectorXd::Zero(6),
      oracles::kron_loop(row_cov, MatrixXd::Identity(2, 2)));
  CHECK(mvcca::umvcca_loglik(model, one, exact) == Catch::Approx(oracle).margin(1e-9));
}

TEST_CASE("scaling the data scales posterior-mean reconstructions", "[umvcca]") {
  // The EM map is equivariant under (X, R, Psi) -> (cX, cR, c^2 Psi), so the
  // fits are paired through the scaling bijection; the per-view scale gauge
  // of the model makes unpaired refits land elsewhere on the flat manifold.
  const double c = 2.0;
  const auto [data, truth] = mvcca::generate_right_only(3, 2, 2, 1, 60, 0.2, 53);
  std::vector<MatrixXd> v1s, v2s;
  for (int i = 0; i < data.n(); ++i) {
    v1s.push_back(c * data.view1[i]);
    v2s.push_back(c * data.view2[i]);
  }
  const auto scaled = mvcca::make_paired_dataset(v1s, v2s);
  const auto fit = mvcca::umvcca_fit(data, 1, 400, 0.0, 9);

  std::mt19937_64 rng(9);
  mvcca::UmvccaModel init;
  init.m = 3;
  init.d2 = 1;
  init.r = c * mvcca::uniform_matrix(4, 1, rng);  // same seed-9 draw, scaled
  init.psi_r1 = c * c * MatrixXd::Identity(2, 2);
  init.psi_r2 = c * c * MatrixXd::Identity(2, 2);
  init.mean1 = scaled.mean1;
  init.mean2 = scaled.mean2;
  const auto fit_scaled = mvcca::umvcca_fit(scaled, 1, 400, 0.0, 9, {}, &init);

  for (int i = 0; i < 5; ++i) {
    const MatrixXd recon =
        mvcca::umvcca_posterior_mean(fit.model, data.view1[i], data.view2[i]) *
        fit.model.r.transpose();
    const MatrixXd recon_scaled =
        mvcca::umvcca_posterior_mean(fit_scaled.model, scaled.view1[i], scaled.view2[i]) *
        fit_scaled.model.r.transpose();
    CHECK((recon_scaled - c * recon).norm() / std::max(1.0, (c * recon).norm()) < 1e-6);
  }
}
