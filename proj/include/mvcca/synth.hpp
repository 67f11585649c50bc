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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/rng.hpp"

namespace mvcca {

enum class LoadingLaw { uniform01 };

/// Recipe for a synthetic two-view dataset: X^j = L^j Z R^j' + noise with
/// uniform(0,1) loadings, standard matrix-normal latents and isotropic
/// matrix-normal noise MN(0, noise_scale I, noise_scale I). When class_count
/// is positive, each class shifts the latent mean by a fixed seeded offset.
struct SynthSpec {
  int m1 = 0, n1 = 0, m2 = 0, n2 = 0;
  int d1 = 1, d2 = 1;
  int n_samples = 0;
  double noise_scale = 0.1;
  LoadingLaw loading_law = LoadingLaw::uniform01;
  std::uint64_t seed = 0;
  int class_count = 0;
};

struct GroundTruth {
  Eigen::MatrixXd l1, l2, r1, r2;
  std::vector<Eigen::MatrixXd> z;
  std::vector<std::string> labels;
  std::vector<Eigen::MatrixXd> class_offsets;
};

namespace detail {

// Frobenius norm of the per-class latent offsets; calibrated once so the
// frozen 20-class fixture classifies well above chance under the nearest
// neighbour rule.
inline constexpr double k_class_offset_norm = 10.0;

}  // namespace detail

/// Deterministic per seed. Loadings, latents, noise and class offsets draw
/// from independent derived streams, and latents/noise use per-sample derived
/// seeds, so datasets of different sizes share their common prefix.
inline std::pair<PairedMatrixDataset, GroundTruth> generate(const SynthSpec& spec) {
  require(spec.m1 > 0 && spec.n1 > 0 && spec.m2 > 0 && spec.n2 > 0,
          "generate: view dimensions must be positive");
  require(spec.d1 >= 1 && spec.d1 <= std::min(spec.m1, spec.m2),
          "generate: d1 must be in [1, min(m1, m2)]");
  require(spec.d2 >= 1 && spec.d2 <= std::min(spec.n1, spec.n2),
          "generate: d2 must be in [1, min(n1, n2)]");
  require(spec.n_samples >= 1, "generate: n_samples must be positive");
  require(spec.noise_scale >= 0.0, "generate: noise_scale must be non-negative");
  require(spec.class_count >= 0, "generate: class_count must be non-negative");

  GroundTruth truth;
  {
    std::mt19937_64 rng(derive_seed(spec.seed, 0));
    truth.l1 = uniform_matrix(spec.m1, spec.d1, rng);
    truth.l2 = uniform_matrix(spec.m2, spec.d1, rng);
    truth.r1 = uniform_matrix(spec.n1, spec.d2, rng);
    truth.r2 = uniform_matrix(spec.n2, spec.d2, rng);
  }
  if (spec.class_count > 0) {
    std::mt19937_64 rng(derive_seed(spec.seed, 3));
    truth.class_offsets.reserve(spec.class_count);
    for (int c = 0; c < spec.class_count; ++c) {
      Eigen::MatrixXd offset = gaussian_matrix(spec.d1, spec.d2, rng);
      offset *= detail::k_class_offset_norm / offset.norm();
      truth.class_offsets.push_back(std::move(offset));
    }
  }

  const std::uint64_t latent_seed = derive_seed(spec.seed, 1);
  const std::uint64_t noise_seed = derive_seed(spec.seed, 2);
  std::vector<Eigen::MatrixXd> view1(spec.n_samples), view2(spec.n_samples);
  truth.z.resize(spec.n_samples);
  std::vector<std::string> labels;
  for (int i = 0; i < spec.n_samples; ++i) {
    std::mt19937_64 zrng(derive_seed(latent_seed, static_cast<std::uint64_t>(i)));
    Eigen::MatrixXd z = gaussian_matrix(spec.d1, spec.d2, zrng);
    if (spec.class_count > 0) {
      const int label = i % spec.class_count;
      z += truth.class_offsets[label];
      labels.push_back("class" + std::to_string(label));
    }
    std::mt19937_64 nrng(derive_seed(noise_seed, static_cast<std::uint64_t>(i)));
    // chol(sigma I) E chol(sigma I)' = sigma E
    view1[i] = truth.l1 * z * truth.r1.transpose() +
               spec.noise_scale * gaussian_matrix(spec.m1, spec.n1, nrng);
    view2[i] = truth.l2 * z * truth.r2.transpose() +
               spec.noise_scale * gaussian_matrix(spec.m2, spec.n2, nrng);
    truth.z[i] = std::move(z);
  }
  truth.labels = labels;
  return {make_paired_dataset(std::move(view1), std::move(view2), std::move(labels)), std::move(truth)};
}

/// One-sided variant: X^j = Z R^j' + noise with Z of size m x d2 and
/// uniform(0,1) right projections. Same stream layout as generate().
inline std::pair<PairedMatrixDataset, GroundTruth> generate_right_only(
    int m, int n1, int n2, int d2, int n_samples, double noise_scale, std::uint64_t seed) {
  require(m > 0 && n1 > 0 && n2 > 0, "generate_right_only: dimensions must be positive");
  require(d2 >= 1 && d2 <= std::min(n1, n2),
          "generate_right_only: d2 must be in [1, min(n1, n2)]");
  require(n_samples >= 1, "generate_right_only: n_samples must be positive");
  require(noise_scale >= 0.0, "generate_right_only: noise_scale must be non-negative");

  GroundTruth truth;
  {
    std::mt19937_64 rng(derive_seed(seed, 0));
    truth.r1 = uniform_matrix(n1, d2, rng);
    truth.r2 = uniform_matrix(n2, d2, rng);
  }
  const std::uint64_t latent_seed = derive_seed(seed, 1);
  const std::uint64_t noise_seed = derive_seed(seed, 2);
  std::vector<Eigen::MatrixXd> view1(n_samples), view2(n_samples);
  truth.z.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    std::mt19937_64 zrng(derive_seed(latent_seed, static_cast<std::uint64_t>(i)));
    Eigen::MatrixXd z = gaussian_matrix(m, d2, zrng);
    std::mt19937_64 nrng(derive_seed(noise_seed, static_cast<std::uint64_t>(i)));
    view1[i] = z * truth.r1.transpose() + noise_scale * gaussian_matrix(m, n1, nrng);
    view2[i] = z * truth.r2.transpose() + noise_scale * gaussian_matrix(m, n2, nrng);
    truth.z[i] = std::move(z);
  }
  return {make_paired_dataset(std::move(view1), std::move(view2)), std::move(truth)};
}

/// Sign- and scale-normalized distance between an estimated and a true
/// sequence of scalar latents: both sequences are normalized to unit
/// Euclidean norm and the smaller distance over the two signs of the estimate
/// is returned. Only defined for 1 x 1 latents.
inline double recovery_error(const std::vector<Eigen::MatrixXd>& estimates,
                             const std::vector<Eigen::MatrixXd>& truth) {
  require(estimates.size() == truth.size(),
          "recovery_error: sequences must have the same length");
  require(!estimates.empty(), "recovery_error: sequences must not be empty");
  const Eigen::Index count = static_cast<Eigen::Index>(estimates.size());
  Eigen::VectorXd e(count), t(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    require(estimates[i].size() == 1 && truth[i].size() == 1,
            "recovery_error: only defined for 1x1 latents");
    e(i) = estimates[i](0, 0);
    t(i) = truth[i](0, 0);
  }
  const double en = e.norm(), tn = t.norm();
  require(en > 0.0 && tn > 0.0, "recovery_error: sequences must have nonzero norm");
  e /= en;
  t /= tn;
  return std::min((e - t).norm(), (e + t).norm());
}

/// |u'v| / (|u| |v|).
inline double alignment_cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  require(u.size() == v.size(), "alignment_cosine: vectors must have the same length");
  const double un = u.norm(), vn = v.norm();
  require(un > 0.0 && vn > 0.0, "alignment_cosine: vectors must have nonzero norm");
  return std::abs(u.dot(v)) / (un * vn);
}

}  // namespace mvcca
