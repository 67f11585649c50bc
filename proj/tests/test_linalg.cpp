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

#include "mvcca/linalg.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
const mvcca::SpdPolicy no_jitter{0.0, 1e12};
}

TEST_CASE("spd_inverse basics", "[linalg]") {
  CHECK((mvcca::spd_inverse(MatrixXd::Identity(3, 3), no_jitter) - MatrixXd::Identity(3, 3))
            .norm() < 1e-14);

  MatrixXd d(2, 2);
  d << 2, 0, 0, 4;
  const MatrixXd inv = mvcca::spd_inverse(d, no_jitter);
  CHECK(inv(0, 0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(inv(1, 1) == Catch::Approx(0.25).margin(1e-15));
  CHECK(inv(0, 1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("spd_inverse residual and involution on random SPD matrices", "[linalg]") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd a = oracles::random_spd(3, rng);
    const MatrixXd inv = mvcca::spd_inverse(a);
    CHECK((a * inv - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(mvcca::max_abs(inv - inv.transpose()) < 1e-10);
    const MatrixXd twice = mvcca::spd_inverse(mvcca::spd_inverse(a, no_jitter), no_jitter);
    CHECK((twice - a).norm() / a.norm() < 1e-6);
  }
}

TEST_CASE("SpdFactor rejects bad inputs", "[linalg]") {
  MatrixXd indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(mvcca::spd_inverse(indefinite), mvcca::NumericalError);

  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(mvcca::spd_inverse(asym), mvcca::StructuralError);

  // Exactly singular: always refused via the policy condition gate, with or
  // without jitter.
  MatrixXd singular = MatrixXd::Ones(4, 4);
  CHECK_THROWS_AS(mvcca::spd_inverse(singular, no_jitter), mvcca::NumericalError);
  CHECK_THROWS_AS(mvcca::spd_inverse(singular, mvcca::SpdPolicy{}), mvcca::NumericalError);
  CHECK_THROWS_WITH(mvcca::spd_inverse(singular, mvcca::SpdPolicy{}),
                    Catch::Matchers::ContainsSubstring("singular"));

  CHECK_THROWS_AS(mvcca::SpdFactor(MatrixXd::Identity(2, 2), mvcca::SpdPolicy{-1.0, 1e9}, "x"),
                  mvcca::StructuralError);
  CHECK_THROWS_AS(mvcca::SpdFactor(MatrixXd::Identity(2, 2), mvcca::SpdPolicy{0.0, 0.5}, "x"),
                  mvcca::StructuralError);
}

TEST_CASE("sym_geig reduces to the standard problem for B = I", "[linalg]") {
  std::mt19937_64 rng(7);
  const MatrixXd a = oracles::random_spd(4, rng, 0.2, 5.0);
  const auto g = mvcca::sym_geig(a, MatrixXd::Identity(4, 4), no_jitter);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  for (int i = 0; i < 4; ++i)
    CHECK(g.eigenvalues(i) == Catch::Approx(es.eigenvalues()(3 - i)).margin(1e-10));
  for (int i = 0; i < 4; ++i) {
    const VectorXd v = g.eigenvectors.col(i);
    CHECK((a * v - g.eigenvalues(i) * v).norm() < 1e-8 * a.norm());
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    CHECK(v(imax) > 0.0);
  }
}

TEST_CASE("sym_geig diagonal and A = B cases", "[linalg]") {
  MatrixXd a(2, 2), b(2, 2);
  a << 2, 0, 0, 1;
  b << 1, 0, 0, 2;
  const auto g = mvcca::sym_geig(a, b, no_jitter);
  CHECK(g.eigenvalues(0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(g.eigenvalues(1) == Catch::Approx(0.5).margin(1e-12));

  std::mt19937_64 rng(13);
  const MatrixXd s = oracles::random_spd(3, rng);
  const auto gid = mvcca::sym_geig(s, s, no_jitter);
  for (int i = 0; i < 3; ++i) CHECK(gid.eigenvalues(i) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("sym_geig residual and B-normalization on random pencils", "[linalg]") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd a = mvcca::symmetrized(oracles::random_matrix(4, 4, rng));
    const MatrixXd b = oracles::random_spd(4, rng);
    const auto g = mvcca::sym_geig(a, b, no_jitter);
    for (int i = 0; i < 4; ++i) {
      const VectorXd v = g.eigenvectors.col(i);
      CHECK((a * v - g.eigenvalues(i) * (b * v)).norm() <= 1e-8 * std::max(1.0, a.norm()));
      CHECK(v.dot(b * v) == Catch::Approx(1.0).margin(1e-8));
    }
    for (int i = 1; i < 4; ++i) CHECK(g.eigenvalues(i - 1) >= g.eigenvalues(i));
  }
}

TEST_CASE("sym_geig spectrum is invariant under congruence", "[linalg]") {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd a = mvcca::symmetrized(oracles::random_matrix(3, 3, rng));
    const MatrixXd b = oracles::random_spd(3, rng);
    // Orthogonal base plus a modest perturbation keeps T comfortably invertible.
    const MatrixXd t =
        oracles::random_orthogonal(3, rng) + 0.2 * oracles::random_matrix(3, 3, rng);
    const auto g1 = mvcca::sym_geig(a, b, no_jitter);
    const auto g2 = mvcca::sym_geig(mvcca::symmetrized(t.transpose() * a * t),
                                    mvcca::symmetrized(t.transpose() * b * t), no_jitter);
    for (int i = 0; i < 3; ++i) {
      const double scale = std::max(1.0, std::abs(g1.eigenvalues(i)));
      CHECK(std::abs(g1.eigenvalues(i) - g2.eigenvalues(i)) / scale < 1e-6);
    }
  }
}

TEST_CASE("kron matches the double-loop oracle", "[linalg]") {
  std::mt19937_64 rng(41);
  const MatrixXd a = oracles::random_matrix(2, 3, rng);
  const MatrixXd b = oracles::random_matrix(3, 2, rng);
  CHECK((mvcca::kron(a, b) - oracles::kron_loop(a, b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("vec and unvec are column-stacking inverses", "[linalg]") {
  std::mt19937_64 rng(43);
  const MatrixXd m = oracles::random_matrix(3, 4, rng);
  const VectorXd v = mvcca::vec(m);
  CHECK((v - oracles::vec_colwise(m)).norm() == 0.0);
  CHECK((mvcca::unvec(v, 3, 4) - m).norm() == 0.0);
}

TEST_CASE("floor_psd clips negative eigenvalues only", "[linalg]") {
  MatrixXd a(2, 2);
  a << 1, 0, 0, -0.5;
  const MatrixXd f = mvcca::floor_psd(a);
  CHECK(f(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(f(1, 1) == Catch::Approx(0.0).margin(1e-12));
  std::mt19937_64 rng(47);
  const MatrixXd spd = oracles::random_spd(3, rng);
  CHECK((mvcca::floor_psd(spd) - spd).norm() < 1e-12);
}
