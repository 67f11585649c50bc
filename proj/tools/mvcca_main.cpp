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

// mvcca command line: dataset generation, model fitting, probabilistic
// projection, reconstruction, classification, evaluation, and the synthetic
// reproduction studies. Exit codes: 0 success, 2 usage/structural error,
// 3 numerical error.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mvcca/baselines.hpp"
#include "mvcca/bmvcca.hpp"
#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/inference.hpp"
#include "mvcca/io.hpp"
#include "mvcca/pca.hpp"
#include "mvcca/synth.hpp"
#include "mvcca/umvcca.hpp"

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<VectorXd> view_vectors(const mvcca::PairedMatrixDataset& data, int view) {
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i)
    out.push_back(mvcca::vec(view == 1 ? data.view1[i] : data.view2[i]));
  return out;
}

MatrixXd vector_as_column(const VectorXd& v) { return v; }

// ---------------------------------------------------------------------------
// Model archive <-> typed models.
// ---------------------------------------------------------------------------

struct LoadedModel {
  std::string kind;
  std::optional<mvcca::CcaModel> cca;
  std::optional<mvcca::PccaModel> pcca;
  std::optional<mvcca::TdccaModel> tdcca;
  std::optional<mvcca::UmvccaModel> umvcca;
  std::optional<mvcca::BmvccaModel> bmvcca;
  std::optional<mvcca::PcaBasis> pca1, pca2;

  // Vectorize and optionally PCA-project one raw matrix observation.
  VectorXd reduce(const MatrixXd& x, int view) const {
    const VectorXd v = mvcca::vec(x);
    const auto& basis = view == 1 ? pca1 : pca2;
    return basis ? basis->apply(v) : v;
  }

  int feature_count() const {
    if (kind == "cca") return static_cast<int>(cca->w1.cols());
    if (kind == "pcca") return static_cast<int>(pcca->w1.cols());
    if (kind == "2dcca") return static_cast<int>(tdcca->l1.cols() * tdcca->r1.cols());
    if (kind == "umvcca") return umvcca->m * umvcca->d2;
    return bmvcca->d1 * bmvcca->d2;
  }

  // Gallery code for a training pair: all available train information.
  // The vector-view and 2DCCA models project the view opposite the probe
  // (cross-view matching); the probabilistic models condition on both views.
  MatrixXd gallery_code(const MatrixXd& x1, const MatrixXd& x2, int probe_view,
                        const mvcca::SpdPolicy& policy) const {
    const int other = probe_view == 1 ? 2 : 1;
    if (kind == "cca")
      return vector_as_column(
          mvcca::cca_project(*cca, reduce(other == 1 ? x1 : x2, other), other));
    if (kind == "pcca")
      return vector_as_column(mvcca::pcca_posterior_mean(*pcca, reduce(x1, 1), reduce(x2, 2), policy));
    if (kind == "2dcca") return mvcca::tdcca_project(*tdcca, other == 1 ? x1 : x2, other);
    if (kind == "umvcca") return mvcca::umvcca_posterior_mean(*umvcca, x1, x2, policy);
    return mvcca::project_pair(*bmvcca, x1, x2, policy).values;
  }

  MatrixXd probe_code(const MatrixXd& x, int view, const mvcca::SpdPolicy& policy) const {
    if (kind == "cca") return vector_as_column(mvcca::cca_project(*cca, reduce(x, view), view));
    if (kind == "pcca") {
      const std::optional<VectorXd> x1 =
          view == 1 ? std::optional<VectorXd>(reduce(x, 1)) : std::nullopt;
      const std::optional<VectorXd> x2 =
          view == 2 ? std::optional<VectorXd>(reduce(x, 2)) : std::nullopt;
      return vector_as_column(mvcca::pcca_posterior_mean(*pcca, x1, x2, policy));
    }
    if (kind == "2dcca") return mvcca::tdcca_project(*tdcca, x, view);
    if (kind == "umvcca") {
      const std::optional<MatrixXd> x1 = view == 1 ? std::optional<MatrixXd>(x) : std::nullopt;
      const std::optional<MatrixXd> x2 = view == 2 ? std::optional<MatrixXd>(x) : std::nullopt;
      return mvcca::umvcca_posterior_mean(*umvcca, x1, x2, policy);
    }
    return mvcca::project_single(*bmvcca, x, view, policy).values;
  }
};

void put_pca(mvcca::ModelArchive& archive, const std::optional<mvcca::PcaBasis>& pca1,
             const std::optional<mvcca::PcaBasis>& pca2) {
  if (pca1) {
    archive.matrices["pca1_components"] = pca1->components;
    archive.matrices["pca1_mean"] = pca1->mean;
  }
  if (pca2) {
    archive.matrices["pca2_components"] = pca2->components;
    archive.matrices["pca2_mean"] = pca2->mean;
  }
}

LoadedModel from_archive(const mvcca::ModelArchive& a) {
  LoadedModel m;
  m.kind = a.model_kind;
  auto vec_of = [&](const std::string& name) -> VectorXd { return a.matrix(name).col(0); };
  if (a.matrices.count("pca1_components"))
    m.pca1 = mvcca::PcaBasis{a.matrix("pca1_components"), vec_of("pca1_mean")};
  if (a.matrices.count("pca2_components"))
    m.pca2 = mvcca::PcaBasis{a.matrix("pca2_components"), vec_of("pca2_mean")};
  if (a.model_kind == "cca") {
    m.cca = mvcca::CcaModel{a.matrix("w1"), a.matrix("w2"), vec_of("correlations"),
                            vec_of("mean1"), vec_of("mean2")};
    mvcca::require(m.cca->w1.cols() == m.cca->w2.cols() &&
                       m.cca->w1.cols() == m.cca->correlations.size() &&
                       m.cca->w1.rows() == m.cca->mean1.size() &&
                       m.cca->w2.rows() == m.cca->mean2.size(),
                   "model archive: inconsistent cca dimensions");
  } else if (a.model_kind == "pcca") {
    m.pcca = mvcca::PccaModel{a.matrix("w1"),   a.matrix("w2"),   a.matrix("psi1"),
                              a.matrix("psi2"), vec_of("mean1"), vec_of("mean2")};
    mvcca::require(m.pcca->w1.cols() == m.pcca->w2.cols() &&
                       m.pcca->psi1.rows() == m.pcca->w1.rows() &&
                       m.pcca->psi2.rows() == m.pcca->w2.rows() &&
                       m.pcca->mean1.size() == m.pcca->w1.rows() &&
                       m.pcca->mean2.size() == m.pcca->w2.rows(),
                   "model archive: inconsistent pcca dimensions");
  } else if (a.model_kind == "2dcca") {
    m.tdcca = mvcca::TdccaModel{a.matrix("l1"), a.matrix("l2"),    a.matrix("r1"),
                                a.matrix("r2"), a.matrix("mean1"), a.matrix("mean2")};
    mvcca::require(m.tdcca->l1.cols() == m.tdcca->l2.cols() &&
                       m.tdcca->r1.cols() == m.tdcca->r2.cols() &&
                       m.tdcca->mean1.rows() == m.tdcca->l1.rows() &&
                       m.tdcca->mean1.cols() == m.tdcca->r1.rows() &&
                       m.tdcca->mean2.rows() == m.tdcca->l2.rows() &&
                       m.tdcca->mean2.cols() == m.tdcca->r2.rows(),
                   "model archive: inconsistent 2dcca dimensions");
  } else if (a.model_kind == "umvcca") {
    m.umvcca = mvcca::UmvccaModel{a.matrix("r"),     a.matrix("psi_r1"), a.matrix("psi_r2"),
                                  a.matrix("mean1"), a.matrix("mean2"),
                                  a.scalars.at("m").get<int>(), a.scalars.at("d2").get<int>()};
    mvcca::require(m.umvcca->r.rows() == m.umvcca->n1() + m.umvcca->n2() &&
                       m.umvcca->r.cols() == m.umvcca->d2 &&
                       m.umvcca->mean1.rows() == m.umvcca->m &&
                       m.umvcca->mean2.rows() == m.umvcca->m &&
                       m.umvcca->mean1.cols() == m.umvcca->n1() &&
                       m.umvcca->mean2.cols() == m.umvcca->n2(),
                   "model archive: inconsistent umvcca dimensions");
  } else if (a.model_kind == "bmvcca") {
    m.bmvcca = mvcca::BmvccaModel{a.matrix("l1"),     a.matrix("l2"),     a.matrix("r1"),
                                  a.matrix("r2"),     a.matrix("psi_l1"), a.matrix("psi_l2"),
                                  a.matrix("psi_r1"), a.matrix("psi_r2"), a.matrix("mean1"),
                                  a.matrix("mean2"),  a.scalars.at("d1").get<int>(),
                                  a.scalars.at("d2").get<int>()};
    mvcca::require(m.bmvcca->l1.cols() == m.bmvcca->d1 && m.bmvcca->r1.cols() == m.bmvcca->d2 &&
                       m.bmvcca->l2.cols() == m.bmvcca->d1 && m.bmvcca->r2.cols() == m.bmvcca->d2 &&
                       m.bmvcca->mean1.rows() == m.bmvcca->l1.rows() &&
                       m.bmvcca->mean1.cols() == m.bmvcca->r1.rows() &&
                       m.bmvcca->mean2.rows() == m.bmvcca->l2.rows() &&
                       m.bmvcca->mean2.cols() == m.bmvcca->r2.rows(),
                   "model archive: inconsistent bmvcca dimensions");
  } else {
    throw mvcca::StructuralError("unknown model_kind '" + a.model_kind + "'");
  }
  return m;
}

// ---------------------------------------------------------------------------
// synth-gen
// ---------------------------------------------------------------------------

struct SynthGenArgs {
  std::string out;
  int m1 = 32, n1 = 32, m2 = 32, n2 = 32, d1 = 15, d2 = 15;
  int n_samples = 1000;
  double noise = 0.1;
  std::uint64_t seed = 0;
  int classes = 0;
};

void run_synth_gen(const SynthGenArgs& args) {
  mvcca::SynthSpec spec;
  spec.m1 = args.m1;
  spec.n1 = args.n1;
  spec.m2 = args.m2;
  spec.n2 = args.n2;
  spec.d1 = args.d1;
  spec.d2 = args.d2;
  spec.n_samples = args.n_samples;
  spec.noise_scale = args.noise;
  spec.seed = args.seed;
  spec.class_count = args.classes;
  const auto [data, truth] = mvcca::generate(spec);

  const fs::path out(args.out);
  fs::create_directories(out / "truth");
  mvcca::DatasetManifest manifest;
  for (int i = 0; i < data.n(); ++i) {
    const std::string id = "s" + std::to_string(i);
    mvcca::write_csv_matrix(out / (id + "_v1.csv"), data.view1[i]);
    mvcca::write_csv_matrix(out / (id + "_v2.csv"), data.view2[i]);
    mvcca::write_csv_matrix(out / "truth" / ("z_" + id + ".csv"), truth.z[i]);
    manifest.pairs.push_back({id, id + "_v1.csv", id + "_v2.csv",
                              data.labels.empty() ? "" : data.labels[i]});
  }
  mvcca::write_csv_matrix(out / "truth" / "l1.csv", truth.l1);
  mvcca::write_csv_matrix(out / "truth" / "l2.csv", truth.l2);
  mvcca::write_csv_matrix(out / "truth" / "r1.csv", truth.r1);
  mvcca::write_csv_matrix(out / "truth" / "r2.csv", truth.r2);
  mvcca::save_manifest(out / "manifest.json", manifest);
  std::cout << "wrote " << data.n() << " pairs under " << out.string() << "\n";
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string model;
  std::string out;
  std::string trace;
  int d1 = 1, d2 = 1;
  int max_iters = 0;  // 0: per-model default
  double tol = 0.0;   // 0: per-model default
  std::uint64_t seed = 0;
  double jitter = 1e-9;
  std::string pca_pre = "none";
  int features = 0;
};

void run_fit(const FitArgs& args) {
  const mvcca::SpdPolicy policy{args.jitter, mvcca::SpdPolicy{}.max_condition};
  const auto data = mvcca::load_dataset(args.data);

  std::optional<mvcca::PcaBasis> pca1, pca2;
  int pca_k = 0;
  if (args.pca_pre != "none") {
    if (args.model != "cca" && args.model != "pcca")
      throw mvcca::StructuralError("--pca-pre applies to the vector models (cca, pcca) only");
    try {
      pca_k = std::stoi(args.pca_pre);
    } catch (const std::exception&) {
      throw mvcca::StructuralError("--pca-pre expects an integer or 'none', got '" +
                                   args.pca_pre + "'");
    }
  }

  mvcca::ModelArchive archive;
  archive.model_kind = args.model;
  mvcca::FitTrace trace;
  double final_objective = 0.0;
  int iterations = 0;

  auto defaulted = [](int v, int dflt) { return v > 0 ? v : dflt; };
  auto defaulted_tol = [](double v, double dflt) { return v > 0 ? v : dflt; };

  if (args.model == "cca" || args.model == "pcca") {
    auto v1 = view_vectors(data, 1);
    auto v2 = view_vectors(data, 2);
    if (pca_k > 0) {
      pca1 = mvcca::fit_pca(v1, pca_k);
      pca2 = mvcca::fit_pca(v2, pca_k);
      for (auto& x : v1) x = pca1->apply(x);
      for (auto& x : v2) x = pca2->apply(x);
    }
    if (args.model == "cca") {
      const auto model = mvcca::cca_fit(v1, v2, args.d1, policy);
      archive.matrices = {{"w1", model.w1},
                          {"w2", model.w2},
                          {"correlations", model.correlations},
                          {"mean1", model.mean1},
                          {"mean2", model.mean2}};
      archive.scalars["d"] = args.d1;
      final_objective = model.correlations.sum();
      trace.rows.push_back({1, final_objective, {}});
      iterations = 1;
    } else {
      const int iters = defaulted(args.max_iters, 500);
      const double tol = defaulted_tol(args.tol, 1e-8);
      mvcca::PccaModel model;
      if (args.max_iters == -1) {
        model = mvcca::pcca_fit_ml(v1, v2, args.d1, policy);
        trace.rows.push_back({1, 0.0, {}});
      } else {
        auto fit = mvcca::pcca_fit_em(v1, v2, args.d1, iters, tol, args.seed, policy);
        model = fit.model;
        trace = fit.trace;
      }
      archive.matrices = {{"w1", model.w1},     {"w2", model.w2},    {"psi1", model.psi1},
                          {"psi2", model.psi2}, {"mean1", model.mean1}, {"mean2", model.mean2}};
      archive.scalars["d"] = args.d1;
      iterations = static_cast<int>(trace.rows.size());
      final_objective = trace.rows.empty() ? 0.0 : trace.rows.back().objective;
    }
    put_pca(archive, pca1, pca2);
  } else if (args.model == "2dcca") {
    const auto fit = mvcca::tdcca_fit(data, args.d1, args.d2, defaulted(args.max_iters, 200),
                                      defaulted_tol(args.tol, 1e-6), policy);
    archive.matrices = {{"l1", fit.model.l1}, {"l2", fit.model.l2},
                        {"r1", fit.model.r1}, {"r2", fit.model.r2},
                        {"mean1", fit.model.mean1}, {"mean2", fit.model.mean2}};
    archive.scalars["d1"] = args.d1;
    archive.scalars["d2"] = args.d2;
    trace = fit.trace;
    iterations = static_cast<int>(trace.rows.size());
    final_objective = trace.rows.empty() ? 0.0 : trace.rows.back().objective;
  } else if (args.model == "umvcca") {
    int d2 = args.d2;
    if (args.features > 0) {
      // Feature budget: the subspace has m rows per latent column.
      d2 = std::max(1, static_cast<int>(std::lround(
                           static_cast<double>(args.features) /
                           static_cast<double>(data.m1()))));
    }
    const auto fit = mvcca::umvcca_fit(data, d2, defaulted(args.max_iters, 500),
                                       defaulted_tol(args.tol, 1e-7), args.seed, policy);
    archive.matrices = {{"r", fit.model.r},
                        {"psi_r1", fit.model.psi_r1},
                        {"psi_r2", fit.model.psi_r2},
                        {"mean1", fit.model.mean1},
                        {"mean2", fit.model.mean2}};
    archive.scalars["m"] = fit.model.m;
    archive.scalars["d2"] = d2;
    trace = fit.trace;
    iterations = static_cast<int>(trace.rows.size());
    final_objective = trace.rows.empty() ? 0.0 : trace.rows.back().objective;
  } else if (args.model == "bmvcca") {
    const auto fit = mvcca::bmvcca_fit(data, args.d1, args.d2, defaulted(args.max_iters, 300),
                                       defaulted_tol(args.tol, 1e-7), args.seed, policy);
    archive.matrices = {{"l1", fit.model.l1},         {"l2", fit.model.l2},
                        {"r1", fit.model.r1},         {"r2", fit.model.r2},
                        {"psi_l1", fit.model.psi_l1}, {"psi_l2", fit.model.psi_l2},
                        {"psi_r1", fit.model.psi_r1}, {"psi_r2", fit.model.psi_r2},
                        {"mean1", fit.model.mean1},   {"mean2", fit.model.mean2},
                        {"o", fit.state.o},           {"s", fit.state.s}};
    archive.scalars["d1"] = args.d1;
    archive.scalars["d2"] = args.d2;
    trace = fit.trace;
    iterations = static_cast<int>(trace.rows.size());
    final_objective = trace.rows.empty() ? 0.0 : trace.rows.back().objective;
  } else {
    throw mvcca::StructuralError("unknown model '" + args.model + "'");
  }

  archive.fit["seed"] = args.seed;
  archive.fit["iterations"] = iterations;
  archive.fit["final_objective"] = final_objective;
  mvcca::save_model(args.out, archive);
  const std::string trace_path = args.trace.empty() ? args.out + ".trace.csv" : args.trace;
  mvcca::write_trace_csv(trace_path, trace);
  std::cout << "fit " << args.model << ": " << iterations << " iterations, objective "
            << final_objective << "\n";
}

// ---------------------------------------------------------------------------
// project / reconstruct
// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string model, data, out, view = "both";
  double jitter = 1e-9;
};

void run_project(const ProjectArgs& args) {
  const mvcca::SpdPolicy policy{args.jitter, mvcca::SpdPolicy{}.max_condition};
  const auto model = from_archive(mvcca::load_model(args.model));
  const auto data = mvcca::load_dataset(args.data);
  fs::create_directories(args.out);
  const bool both = args.view == "both";
  if (!both && args.view != "1" && args.view != "2")
    throw mvcca::StructuralError("--view must be 1, 2 or both");
  if (both && (model.kind == "cca" || model.kind == "2dcca"))
    throw mvcca::StructuralError("--view both is not defined for " + model.kind +
                                 "; project one view at a time");
  const int view = both ? 0 : (args.view == "1" ? 1 : 2);
  for (int i = 0; i < data.n(); ++i) {
    const std::string id = data.ids.empty() ? "s" + std::to_string(i) : data.ids[i];
    MatrixXd code;
    if (both)
      code = model.gallery_code(data.view1[i], data.view2[i], 2, policy);
    else
      code = model.probe_code(view == 1 ? data.view1[i] : data.view2[i], view, policy);
    mvcca::write_csv_matrix(fs::path(args.out) / (id + ".csv"), code);
  }
  std::cout << "projected " << data.n() << " items into " << args.out << "\n";
}

struct ReconstructArgs {
  std::string model, codes, out;
  int view = 1;
};

void run_reconstruct(const ReconstructArgs& args) {
  const auto model = from_archive(mvcca::load_model(args.model));
  if (model.kind != "bmvcca")
    throw mvcca::StructuralError("reconstruct requires a bmvcca model");
  fs::create_directories(args.out);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(args.codes))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  if (files.empty()) throw mvcca::StructuralError("no code files under " + args.codes);
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const mvcca::SubspaceCode code{mvcca::read_csv_matrix(f), mvcca::SourceView::both,
                                   mvcca::ModelKind::bmvcca};
    mvcca::write_csv_matrix(fs::path(args.out) / f.filename(),
                            mvcca::reconstruct(*model.bmvcca, code, args.view));
  }
  std::cout << "reconstructed " << files.size() << " items into " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// classify / eval
// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string model, train, probe, criterion = "nn";
  int view = 1;
  double jitter = 1e-9;
};

struct Gallery {
  std::vector<MatrixXd> codes;
  std::vector<MatrixXd> latents;  // bmvcca ptest only
  std::vector<std::string> labels;
};

Gallery build_gallery(const LoadedModel& model, const mvcca::PairedMatrixDataset& train,
                      int probe_view, const std::string& criterion,
                      const mvcca::SpdPolicy& policy) {
  mvcca::require(!train.labels.empty(), "training manifest must carry labels");
  if (criterion == "ptest" && model.kind != "bmvcca")
    throw mvcca::StructuralError("ptest is defined for bmvcca models only");
  Gallery gallery;
  gallery.labels = train.labels;
  for (int i = 0; i < train.n(); ++i) {
    if (criterion == "ptest")
      gallery.latents.push_back(
          mvcca::project_pair(*model.bmvcca, train.view1[i], train.view2[i], policy).values);
    else
      gallery.codes.push_back(
          model.gallery_code(train.view1[i], train.view2[i], probe_view, policy));
  }
  return gallery;
}

std::string classify_one(const LoadedModel& model, const Gallery& gallery, const MatrixXd& probe,
                         int view, const std::string& criterion,
                         const mvcca::SpdPolicy& policy) {
  if (criterion == "ptest")
    return mvcca::classify_ptest(*model.bmvcca, gallery.latents, gallery.labels, probe, view,
                                 policy);
  mvcca::LabeledGallery lg;
  lg.labels = gallery.labels;
  for (const auto& code : gallery.codes)
    lg.codes.push_back({code, mvcca::SourceView::both, mvcca::ModelKind::bmvcca});
  const mvcca::SubspaceCode probe_code{model.probe_code(probe, view, policy),
                                       view == 1 ? mvcca::SourceView::view1
                                                 : mvcca::SourceView::view2,
                                       mvcca::ModelKind::bmvcca};
  return mvcca::classify_nn(lg, probe_code);
}

void run_classify(const ClassifyArgs& args) {
  const mvcca::SpdPolicy policy{args.jitter, mvcca::SpdPolicy{}.max_condition};
  if (args.criterion != "nn" && args.criterion != "ptest")
    throw mvcca::StructuralError("--criterion must be nn or ptest");
  const auto model = from_archive(mvcca::load_model(args.model));
  const auto train = mvcca::load_dataset(args.train);
  const auto gallery = build_gallery(model, train, args.view, args.criterion, policy);
  const MatrixXd probe = mvcca::read_csv_matrix(args.probe);
  std::cout << classify_one(model, gallery, probe, args.view, args.criterion, policy) << "\n";
}

struct EvalArgs {
  std::string model, train, test, out, criterion = "nn";
  int view = 1;
  double jitter = 1e-9;
};

void run_eval(const EvalArgs& args) {
  const mvcca::SpdPolicy policy{args.jitter, mvcca::SpdPolicy{}.max_condition};
  if (args.criterion != "nn" && args.criterion != "ptest")
    throw mvcca::StructuralError("--criterion must be nn or ptest");
  const auto model = from_archive(mvcca::load_model(args.model));
  const auto train = mvcca::load_dataset(args.train);
  const auto test = mvcca::load_dataset(args.test);
  mvcca::require(!test.labels.empty(), "test manifest must carry labels");
  const auto gallery = build_gallery(model, train, args.view, args.criterion, policy);

  mvcca::EvalMetrics metrics;
  metrics.criterion = args.criterion;
  metrics.feature_count = model.feature_count();
  for (int i = 0; i < test.n(); ++i) {
    const MatrixXd& probe = args.view == 1 ? test.view1[i] : test.view2[i];
    const std::string predicted =
        classify_one(model, gallery, probe, args.view, args.criterion, policy);
    auto& counts = metrics.per_class[test.labels[i]];
    ++counts.first;
    ++metrics.n_total;
    if (predicted != test.labels[i]) {
      ++counts.second;
      ++metrics.n_errors;
    }
  }
  mvcca::write_metrics_json(args.out, metrics);
  std::cout << "error_rate " << metrics.error_rate() << " (" << metrics.n_errors << "/"
            << metrics.n_total << ")\n";
}

// ---------------------------------------------------------------------------
// repro commands
// ---------------------------------------------------------------------------

struct Fig1Args {
  std::string out;
  std::uint64_t seed = 7;
  int m = 32, d = 15, n_samples = 1000, max_iters = 100;
  double noise = 0.01, tol = 1e-9;
};

void run_fig1(const Fig1Args& args) {
  mvcca::SynthSpec spec;
  spec.m1 = spec.n1 = spec.m2 = spec.n2 = args.m;
  spec.d1 = spec.d2 = args.d;
  spec.n_samples = args.n_samples;
  spec.noise_scale = args.noise;
  spec.seed = args.seed;
  const auto [data, truth] = mvcca::generate(spec);
  const auto fit = mvcca::bmvcca_fit(data, args.d, args.d, args.max_iters, args.tol, args.seed);
  mvcca::write_trace_csv(args.out, fit.trace);
  double final_delta = 0.0;
  for (const auto& [name, value] : fit.trace.rows.back().deltas)
    final_delta = std::max(final_delta, value);
  std::cout << "iterations " << fit.trace.rows.size() << ", final max delta " << final_delta
            << "\n";
}

struct Fig23Args {
  std::string out;
  std::uint64_t seed = 7;
  int m = 32, max_iters = 30;
  double noise = 0.1;
  std::vector<int> sizes{10, 50, 100, 200, 500, 1000};
};

void run_fig23(const Fig23Args& args) {
  std::string csv = "n_samples,iteration,recovery_error\n";
  for (const int n : args.sizes) {
    mvcca::require(n >= 2, "--sizes entries must be at least 2");
    mvcca::SynthSpec spec;
    spec.m1 = spec.n1 = spec.m2 = spec.n2 = args.m;
    spec.d1 = spec.d2 = 1;
    spec.n_samples = n;
    spec.noise_scale = args.noise;
    spec.seed = args.seed;
    const auto [data, truth] = mvcca::generate(spec);

    const auto init = mvcca::tdcca_fit(data, 1, 1).model;
    mvcca::BmvccaModel model;
    model.d1 = model.d2 = 1;
    model.l1 = init.l1;
    model.l2 = init.l2;
    model.r1 = init.r1;
    model.r2 = init.r2;
    model.psi_l1 = MatrixXd::Identity(args.m, args.m);
    model.psi_l2 = MatrixXd::Identity(args.m, args.m);
    model.psi_r1 = MatrixXd::Identity(args.m, args.m);
    model.psi_r2 = MatrixXd::Identity(args.m, args.m);
    model.mean1 = data.mean1;
    model.mean2 = data.mean2;
    mvcca::VariationalState state;
    state.o = MatrixXd::Identity(1, 1);
    state.s = MatrixXd::Identity(1, 1);
    state.c.assign(data.n(), MatrixXd::Zero(1, 1));

    // Per-iteration C_n are the posterior-mean estimates consistent with the
    // current parameters: E, M, then a fresh E at the updated model.
    state = mvcca::variational_e_step(model, data, state);
    for (int iter = 1; iter <= args.max_iters; ++iter) {
      model = mvcca::variational_m_step(model, data, state);
      state = mvcca::variational_e_step(model, data, state);
      csv += std::to_string(n) + "," + std::to_string(iter) + "," +
             mvcca::format_double(mvcca::recovery_error(state.c, truth.z)) + "\n";
    }
    std::cout << "n=" << n
              << " final recovery_error=" << mvcca::recovery_error(state.c, truth.z) << "\n";
  }
  mvcca::atomic_write_file(args.out, csv);
}

struct Fig4Args {
  std::string out;
  std::uint64_t seed = 7;
  int m = 32, n = 32, n_samples = 1000, max_iters = 500;
  double noise = 0.1, tol = 1e-7;
};

void run_fig4(const Fig4Args& args) {
  const auto [data, truth] =
      mvcca::generate_right_only(args.m, args.n, args.n, 1, args.n_samples, args.noise,
                                 args.seed);
  const auto fit = mvcca::umvcca_fit(data, 1, args.max_iters, args.tol, args.seed);
  const VectorXd learned1 = fit.model.r.topRows(args.n).col(0);
  const VectorXd learned2 = fit.model.r.bottomRows(args.n).col(0);
  std::string csv = "index,r1_true,r1_learned,r2_true,r2_learned\n";
  for (int i = 0; i < args.n; ++i)
    csv += std::to_string(i + 1) + "," + mvcca::format_double(truth.r1(i, 0)) + "," +
           mvcca::format_double(learned1(i)) + "," + mvcca::format_double(truth.r2(i, 0)) +
           "," + mvcca::format_double(learned2(i)) + "\n";
  mvcca::atomic_write_file(args.out, csv);
  std::cout << "cosine view1 " << mvcca::alignment_cosine(learned1, truth.r1.col(0))
            << ", view2 " << mvcca::alignment_cosine(learned2, truth.r2.col(0)) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic CCA for matrix-valued two-view data"};
  app.require_subcommand(1);

  SynthGenArgs synth_args;
  auto* synth = app.add_subcommand("synth-gen", "generate a synthetic paired dataset");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--m1", synth_args.m1)->check(CLI::PositiveNumber);
  synth->add_option("--n1", synth_args.n1)->check(CLI::PositiveNumber);
  synth->add_option("--m2", synth_args.m2)->check(CLI::PositiveNumber);
  synth->add_option("--n2", synth_args.n2)->check(CLI::PositiveNumber);
  synth->add_option("--d1", synth_args.d1)->check(CLI::PositiveNumber);
  synth->add_option("--d2", synth_args.d2)->check(CLI::PositiveNumber);
  synth->add_option("--n", synth_args.n_samples, "sample count")->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_args.noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_args.seed);
  synth->add_option("--classes", synth_args.classes)->check(CLI::NonNegativeNumber);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a model to a paired dataset");
  fit->add_option("--data", fit_args.data, "dataset manifest")->required();
  fit->add_option("--model", fit_args.model)
      ->required()
      ->check(CLI::IsMember({"cca", "pcca", "2dcca", "umvcca", "bmvcca"}));
  fit->add_option("--out", fit_args.out, "model archive path")->required();
  fit->add_option("--trace", fit_args.trace, "trace CSV path (default: <out>.trace.csv)");
  fit->add_option("--d1", fit_args.d1, "latent dimension (rows; the latent dimension d for cca/pcca)")
      ->check(CLI::PositiveNumber);
  fit->add_option("--d2", fit_args.d2, "latent dimension (columns)")->check(CLI::PositiveNumber);
  fit->add_option("--max-iters", fit_args.max_iters,
                  "iteration cap (0: model default; -1 with pcca: closed-form ML)");
  fit->add_option("--tol", fit_args.tol, "relative objective-change tolerance (0: model default)");
  fit->add_option("--seed", fit_args.seed);
  fit->add_option("--jitter", fit_args.jitter)->check(CLI::NonNegativeNumber);
  fit->add_option("--pca-pre", fit_args.pca_pre, "PCA pre-projection dimension or 'none'");
  fit->add_option("--features", fit_args.features,
                  "umvcca: pick d2 to approximate this feature budget (m x d2)");

  ProjectArgs project_args;
  auto* project = app.add_subcommand("project", "write subspace codes for a dataset");
  project->add_option("--model", project_args.model)->required();
  project->add_option("--data", project_args.data)->required();
  project->add_option("--out", project_args.out, "output directory")->required();
  project->add_option("--view", project_args.view, "1, 2 or both");
  project->add_option("--jitter", project_args.jitter)->check(CLI::NonNegativeNumber);

  ReconstructArgs reconstruct_args;
  auto* reconstruct = app.add_subcommand("reconstruct", "map code files back to view space");
  reconstruct->add_option("--model", reconstruct_args.model)->required();
  reconstruct->add_option("--codes", reconstruct_args.codes, "directory of code CSVs")->required();
  reconstruct->add_option("--out", reconstruct_args.out)->required();
  reconstruct->add_option("--view", reconstruct_args.view)->check(CLI::Range(1, 2));

  ClassifyArgs classify_args;
  auto* classify = app.add_subcommand("classify", "label one probe matrix");
  classify->add_option("--model", classify_args.model)->required();
  classify->add_option("--train", classify_args.train, "labeled training manifest")->required();
  classify->add_option("--probe", classify_args.probe, "probe matrix CSV")->required();
  classify->add_option("--view", classify_args.view)->check(CLI::Range(1, 2));
  classify->add_option("--criterion", classify_args.criterion)
      ->check(CLI::IsMember({"nn", "ptest"}));
  classify->add_option("--jitter", classify_args.jitter)->check(CLI::NonNegativeNumber);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "classify a labeled test set and write metrics");
  eval->add_option("--model", eval_args.model)->required();
  eval->add_option("--train", eval_args.train)->required();
  eval->add_option("--test", eval_args.test)->required();
  eval->add_option("--out", eval_args.out, "metrics JSON path")->required();
  eval->add_option("--view", eval_args.view)->check(CLI::Range(1, 2));
  eval->add_option("--criterion", eval_args.criterion)->check(CLI::IsMember({"nn", "ptest"}));
  eval->add_option("--jitter", eval_args.jitter)->check(CLI::NonNegativeNumber);

  Fig1Args fig1_args;
  auto* fig1 = app.add_subcommand(
      "repro-fig1", "bilateral fit on synthetic data; successive-iterate deltas to CSV");
  fig1->add_option("--out", fig1_args.out)->required();
  fig1->add_option("--seed", fig1_args.seed);
  fig1->add_option("--m", fig1_args.m, "square view side length")->check(CLI::PositiveNumber);
  fig1->add_option("--d", fig1_args.d, "latent side length")->check(CLI::PositiveNumber);
  fig1->add_option("--n", fig1_args.n_samples)->check(CLI::PositiveNumber);
  fig1->add_option("--noise", fig1_args.noise)->check(CLI::NonNegativeNumber);
  fig1->add_option("--max-iters", fig1_args.max_iters)->check(CLI::PositiveNumber);
  fig1->add_option("--tol", fig1_args.tol)->check(CLI::NonNegativeNumber);

  Fig23Args fig23_args;
  auto* fig23 = app.add_subcommand(
      "repro-fig23", "scalar-latent recovery error per iteration and sample count");
  fig23->add_option("--out", fig23_args.out)->required();
  fig23->add_option("--seed", fig23_args.seed);
  fig23->add_option("--m", fig23_args.m)->check(CLI::PositiveNumber);
  fig23->add_option("--noise", fig23_args.noise)->check(CLI::NonNegativeNumber);
  fig23->add_option("--max-iters", fig23_args.max_iters)->check(CLI::PositiveNumber);
  fig23->add_option("--sizes", fig23_args.sizes, "training sizes to sweep")
      ->delimiter(',');

  Fig4Args fig4_args;
  auto* fig4 = app.add_subcommand(
      "repro-fig4", "one-sided fit: true versus learned right projections");
  fig4->add_option("--out", fig4_args.out)->required();
  fig4->add_option("--seed", fig4_args.seed);
  fig4->add_option("--m", fig4_args.m)->check(CLI::PositiveNumber);
  fig4->add_option("--n", fig4_args.n)->check(CLI::PositiveNumber);
  fig4->add_option("--n-samples", fig4_args.n_samples)->check(CLI::PositiveNumber);
  fig4->add_option("--noise", fig4_args.noise)->check(CLI::NonNegativeNumber);
  fig4->add_option("--max-iters", fig4_args.max_iters)->check(CLI::PositiveNumber);
  fig4->add_option("--tol", fig4_args.tol)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
    if (*synth) run_synth_gen(synth_args);
    if (*fit) run_fit(fit_args);
    if (*project) run_project(project_args);
    if (*reconstruct) run_reconstruct(reconstruct_args);
    if (*classify) run_classify(classify_args);
    if (*eval) run_eval(eval_args);
    if (*fig1) run_fig1(fig1_args);
    if (*fig23) run_fig23(fig23_args);
    if (*fig4) run_fig4(fig4_args);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mvcca::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mvcca::StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
