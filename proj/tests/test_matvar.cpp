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

#include "mvcca/matvar.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mvcca::MatrixNormalParams;

namespace {
// Zero jitter so the factored matrices equal the oracle's inputs exactly.
const mvcca::SpdPolicy exact{0.0, 1e12};

MatrixNormalParams random_params(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
  return {oracles::random_matrix(m, n, rng), oracles::random_spd(m, rng),
          oracles::random_spd(n, rng)};
}
}  // namespace

TEST_CASE("log_density of the univariate standard normal at its mode", "[matvar]") {
  MatrixNormalParams p{MatrixXd::Zero(1, 1), MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1)};
  CHECK(mvcca::log_density(MatrixXd::Zero(1, 1), p, exact) ==
        Catch::Approx(-0.91893853320467274).margin(1e-10));
}

TEST_CASE("log_density at the mean drops the trace term", "[matvar]") {
  std::mt19937_64 rng(3);
  for (auto [m, n] : {std::pair<int, int>{1, 3}, {3, 2}, {4, 4}}) {
    const auto p = random_params(m, n, rng);
    Eigen::LDLT<MatrixXd> lc(p.col_cov), lr(p.row_cov);
    const double expected =
        -0.5 * (m * n * mvcca::k_ln_2pi + n * lc.vectorD().array().log().sum() +
                m * lr.vectorD().array().log().sum());
    CHECK(mvcca::log_density(p.mean, p, exact) == Catch::Approx(expected).margin(1e-9));
  }
}

TEST_CASE("log_density equals the vec-Gaussian oracle", "[matvar]") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index m = dim(rng), n = dim(rng);
    const auto p = random_params(m, n, rng);
    const MatrixXd x = oracles::random_matrix(m, n, rng);
    const double got = mvcca::log_density(x, p, exact);
    const double want = oracles::mvn_logpdf(
        oracles::vec_colwise(x), oracles::vec_colwise(p.mean),
        oracles::kron_loop(p.row_cov, p.col_cov));
    CHECK(std::abs(got - want) < 1e-10);
  }
}

TEST_CASE("sample is deterministic per seed", "[matvar]") {
  std::mt19937_64 rng(9);
  const auto p = random_params(3, 2, rng);
  const MatrixXd a = mvcca::sample(p, 1234);
  const MatrixXd b = mvcca::sample(p, 1234);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  const MatrixXd c = mvcca::sample(p, 1235);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sample moments match the parameters", "[matvar]") {
  std::mt19937_64 rng(17);
  MatrixNormalParams p{MatrixXd::Zero(2, 2), oracles::random_spd(2, rng),
                       oracles::random_spd(2, rng)};
  const int n = 50000;
  VectorXd mean_acc = VectorXd::Zero(4);
  MatrixXd second = MatrixXd::Zero(4, 4);
  for (int i = 0; i < n; ++i) {
    const VectorXd v = mvcca::vec(mvcca::sample(p, 1000 + static_cast<std::uint64_t>(i)));
    mean_acc += v;
    second += v * v.transpose();
  }
  mean_acc /= n;
  const MatrixXd cov = second / n - mean_acc * mean_acc.transpose();
  CHECK(mean_acc.cwiseAbs().maxCoeff() < 0.02);
  const MatrixXd want = oracles::kron_loop(p.row_cov, p.col_cov);
  CHECK((cov - want).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("to_vec_normal special cases and oracle", "[matvar]") {
  MatrixNormalParams eye{MatrixXd::Zero(2, 3), MatrixXd::Identity(2, 2),
                         MatrixXd::Identity(3, 3)};
  const auto vn = mvcca::to_vec_normal(eye);
  CHECK((vn.cov - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-15);

  MatrixNormalParams scalar{MatrixXd::Zero(1, 1), 2.0 * MatrixXd::Identity(1, 1),
                            3.0 * MatrixXd::Identity(1, 1)};
  CHECK(mvcca::to_vec_normal(scalar).cov(0, 0) == Catch::Approx(6.0).margin(1e-15));

  std::mt19937_64 rng(21);
  MatrixNormalParams p = random_params(2, 2, rng);
  const auto got = mvcca::to_vec_normal(p);
  CHECK((got.cov - oracles::kron_loop(p.row_cov, p.col_cov)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((got.mean - oracles::vec_colwise(p.mean)).norm() == 0.0);
}

TEST_CASE("matvar rejects malformed inputs", "[matvar]") {
  std::mt19937_64 rng(25);
  const auto p = random_params(2, 3, rng);
  CHECK_THROWS_AS(mvcca::log_density(MatrixXd::Zero(3, 2), p), mvcca::StructuralError);

  MatrixNormalParams bad = p;
  bad.col_cov(0, 1) += 1.0;  // asymmetric
  CHECK_THROWS_AS(mvcca::log_density(p.mean, bad), mvcca::StructuralError);

  MatrixNormalParams indef = p;
  indef.col_cov = -MatrixXd::Identity(2, 2);
  CHECK_THROWS_WITH(mvcca::log_density(p.mean, indef),
                    Catch::Matchers::ContainsSubstring("col_cov"));

  MatrixNormalParams indef_row = p;
  indef_row.row_cov = -MatrixXd::Identity(3, 3);
  CHECK_THROWS_WITH(mvcca::log_density(p.mean, indef_row),
                    Catch::Matchers::ContainsSubstring("row_cov"));
}

TEST_CASE("derive_seed gives distinct stable streams", "[matvar]") {
  CHECK(mvcca::derive_seed(42, 0) != mvcca::derive_seed(42, 1));
  CHECK(mvcca::derive_seed(42, 0) != mvcca::derive_seed(43, 0));
  CHECK(mvcca::derive_seed(42, 7) == mvcca::derive_seed(42, 7));
}
