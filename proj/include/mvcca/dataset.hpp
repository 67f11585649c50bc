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

#include <string>
#include <utility>
#include <vector>

#include "mvcca/errors.hpp"

namespace mvcca {

/// N aligned matrix observations from two views, with per-view training means.
/// ids and labels are optional (empty or length N). Consumers center lazily.
struct PairedMatrixDataset {
  std::vector<Eigen::MatrixXd> view1;
  std::vector<Eigen::MatrixXd> view2;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  Eigen::MatrixXd mean1;
  Eigen::MatrixXd mean2;

  int n() const { return static_cast<int>(view1.size()); }
  Eigen::Index m1() const { return mean1.rows(); }
  Eigen::Index n1() const { return mean1.cols(); }
  Eigen::Index m2() const { return mean2.rows(); }
  Eigen::Index n2() const { return mean2.cols(); }

  Eigen::MatrixXd centered1(int i) const { return view1[i] - mean1; }
  Eigen::MatrixXd centered2(int i) const { return view2[i] - mean2; }
};

inline PairedMatrixDataset make_paired_dataset(std::vector<Eigen::MatrixXd> view1,
                                               std::vector<Eigen::MatrixXd> view2,
                                               std::vector<std::string> labels = {},
                                               std::vector<std::string> ids = {}) {
  require(!view1.empty(), "dataset must contain at least one pair");
  require(view1.size() == view2.size(), "views must contain the same number of samples");
  require(labels.empty() || labels.size() == view1.size(),
          "labels must be empty or match the sample count");
  require(ids.empty() || ids.size() == view1.size(),
          "ids must be empty or match the sample count");
  for (std::size_t i = 1; i < view1.size(); ++i) {
    require(view1[i].rows() == view1[0].rows() && view1[i].cols() == view1[0].cols(),
            "all view1 matrices must share dimensions");
    require(view2[i].rows() == view2[0].rows() && view2[i].cols() == view2[0].cols(),
            "all view2 matrices must share dimensions");
  }
  PairedMatrixDataset out;
  out.mean1 = Eigen::MatrixXd::Zero(view1[0].rows(), view1[0].cols());
  out.mean2 = Eigen::MatrixXd::Zero(view2[0].rows(), view2[0].cols());
  for (std::size_t i = 0; i < view1.size(); ++i) {
    out.mean1 += view1[i];
    out.mean2 += view2[i];
  }
  out.mean1 /= static_cast<double>(view1.size());
  out.mean2 /= static_cast<double>(view2.size());
  out.view1 = std::move(view1);
  out.view2 = std::move(view2);
  out.labels = std::move(labels);
  out.ids = std::move(ids);
  return out;
}

}  // namespace mvcca
