// Copyright 2026 The ebstop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ebs/problems.hpp"

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ebs/mlp.hpp"
#include "ebs/numerics.hpp"

namespace {

using ebs::RngStream;
using ebs::SpectrumKind;
using ebs::SpectrumShape;

TEST_CASE("make_spectrum shapes") {
  SpectrumKind uni;
  uni.shape = SpectrumShape::kUniform;
  uni.eig_min = 0.1;
  uni.eig_max = 10.0;
  const Eigen::VectorXd u = ebs::make_spectrum(5, uni);
  REQUIRE(u[0] == Catch::Approx(0.1));
  REQUIRE(u[4] == Catch::Approx(10.0));
  for (int i = 1; i < 5; ++i)
    REQUIRE(u[i] - u[i - 1] == Catch::Approx(9.9 / 4.0));

  SpectrumKind expo;
  expo.shape = SpectrumShape::kExponential;
  expo.eig_min = 0.01;
  expo.eig_max = 10.0;
  const Eigen::VectorXd e = ebs::make_spectrum(7, expo);
  REQUIRE(e[0] == Catch::Approx(0.01));
  REQUIRE(e[6] == Catch::Approx(10.0));
  for (int i = 1; i < 7; ++i)
    REQUIRE(e[i] / e[i - 1] == Catch::Approx(e[1] / e[0]).epsilon(1e-12));

  SpectrumKind st;
  st.shape = SpectrumShape::kStructured;
  st.eig_min = 0.1;
  st.eig_max = 10.0;
  st.n_large = 3;
  const Eigen::VectorXd s = ebs::make_spectrum(10, st);
  REQUIRE((s.array() == 10.0).count() == 3);
  REQUIRE((s.array() == 0.1).count() == 7);
  REQUIRE(s[0] == 0.1);   // sorted ascending
  REQUIRE(s[9] == 10.0);

  const Eigen::VectorXd one = ebs::make_spectrum(1, expo);
  REQUIRE(one[0] == 0.01);

  SpectrumKind bad = st;
  bad.n_large = 10;
  REQUIRE_THROWS_AS(ebs::make_spectrum(10, bad), std::invalid_argument);
  bad.n_large = 0;
  REQUIRE_THROWS_AS(ebs::make_spectrum(10, bad), std::invalid_argument);
  SpectrumKind neg = uni;
  neg.eig_min = 0.0;
  REQUIRE_THROWS_AS(ebs::make_spectrum(3, neg), std::invalid_argument);
  REQUIRE_THROWS_AS(ebs::make_spectrum(0, uni), std::invalid_argument);
}

TEST_CASE("make_quadratic satisfies its algebraic identities") {
  RngStream rng(101, 0);
  SpectrumKind kind;
  kind.shape = SpectrumShape::kExponential;
  kind.eig_min = 0.2;
  kind.eig_max = 5.0;
  const int dim = 24;
  const double noise = 3.0;
  const ebs::QuadraticProblem q = ebs::make_quadratic(dim, kind, noise, rng);

  REQUIRE(q.dim == dim);
  REQUIRE((q.hessian - q.hessian.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  // The Hessian's eigenvalues must reproduce the requested spectrum.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.hessian);
  const Eigen::VectorXd spec = ebs::make_spectrum(dim, kind);
  REQUIRE((es.eigenvalues() - spec).cwiseAbs().maxCoeff() < 1e-9);

  // noise_diag is the exact diagonal of B (noise I) B' = noise B B'.
  const Eigen::MatrixXd cov = noise * q.hessian * q.hessian.transpose();
  REQUIRE((q.noise_diag - cov.diagonal()).cwiseAbs().maxCoeff() <
          1e-10 * cov.diagonal().maxCoeff());
  REQUIRE((q.noise_diag.array() > 0.0).all());

  REQUIRE((q.shift_grad - q.hessian * q.shift).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(q.minimizer.cwiseAbs().maxCoeff() == 0.0);

  // The shift has the advertised scale: squared norm ~ noise * dim.
  REQUIRE(q.shift.squaredNorm() > 0.1 * noise * dim);
  REQUIRE(q.shift.squaredNorm() < 4.0 * noise * dim);
}

TEST_CASE("quad_losses_and_grads against naive formulas") {
  RngStream rng(102, 0);
  SpectrumKind kind;
  const ebs::QuadraticProblem q = ebs::make_quadratic(10, kind, 2.0, rng);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd w = ebs::gaussian_vector(10, 0.0, 2.0, rng);
    const ebs::QuadEval e = ebs::quad_losses_and_grads(q, w);
    const Eigen::VectorXd d = w - q.minimizer;
    const double test_naive = 0.5 * d.dot(q.hessian * d);
    const Eigen::VectorXd ds = d + q.shift;
    const double train_naive = 0.5 * ds.dot(q.hessian * ds);
    REQUIRE(e.test_loss == Catch::Approx(test_naive).epsilon(1e-12));
    REQUIRE(e.train_loss == Catch::Approx(train_naive).epsilon(1e-12));
    REQUIRE((e.test_grad - q.hessian * d).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((e.train_grad - q.hessian * ds).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("quadratic training loss vanishes at the empirical minimizer") {
  RngStream rng(103, 0);
  SpectrumKind kind;
  const ebs::QuadraticProblem q = ebs::make_quadratic(8, kind, 1.5, rng);
  const Eigen::VectorXd w_emp = q.minimizer - q.shift;
  const ebs::QuadEval e = ebs::quad_losses_and_grads(q, w_emp);
  REQUIRE(std::abs(e.train_loss) < 1e-20);
  REQUIRE(e.train_grad.cwiseAbs().maxCoeff() < 1e-14);
  // Test loss at the true minimizer is exactly zero.
  REQUIRE(ebs::quad_losses_and_grads(q, q.minimizer).test_loss == 0.0);
}

TEST_CASE("QuadraticObjective interface consistency") {
  RngStream rng(104, 0);
  SpectrumKind kind;
  ebs::QuadraticInit init;
  init.init_scale = 2.0;
  const ebs::QuadraticObjective p(ebs::make_quadratic(12, kind, 2.0, rng),
                                  init);
  REQUIRE(p.name() == "quadratic");
  REQUIRE(p.dim() == 12);
  REQUIRE(p.train_size() == 0);
  REQUIRE(p.analytic_noise());
  REQUIRE_FALSE(p.has_validation());

  RngStream rng2(9, 1);
  const Eigen::VectorXd w = p.initial_point(rng2);
  const Eigen::VectorXd g = p.full_gradient(w);
  const auto [train, test] = p.losses_with_gradient(w, g);
  REQUIRE(train == Catch::Approx(p.train_loss(w)).epsilon(1e-12));
  REQUIRE(test == Catch::Approx(p.test_loss(w)).epsilon(1e-12));

  const auto inputs = ebs::quad_criterion_inputs(p.quadratic(), w);
  REQUIRE((inputs.first - g).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((inputs.second - p.criterion_noise()).cwiseAbs().maxCoeff() == 0.0);

  // Per-sample access is not available on the analytic problem.
  Eigen::VectorXd scratch(12);
  REQUIRE_THROWS_AS(p.sample_loss_grad(w, 0, scratch), std::logic_error);
  REQUIRE_THROWS_AS(p.validation_loss(w), std::logic_error);
}

TEST_CASE("QuadraticObjective counterexample start is deterministic") {
  RngStream rng(105, 0);
  SpectrumKind kind;
  ebs::QuadraticInit init;
  init.counterexample = true;
  init.counter_scale = 3.0;
  const ebs::QuadraticObjective p(ebs::make_quadratic(6, kind, 2.0, rng),
                                  init);
  RngStream unused(1, 1);
  const Eigen::VectorXd w0 = p.initial_point(unused);
  const Eigen::VectorXd expected =
      p.quadratic().minimizer - 3.0 * p.quadratic().shift;
  REQUIRE((w0 - expected).cwiseAbs().maxCoeff() == 0.0);
  // No randomness may be consumed for the deterministic start.
  RngStream fresh(1, 1);
  REQUIRE(unused.next_u64() == fresh.next_u64());
}

TEST_CASE("fourier_features layout and values") {
  const Eigen::VectorXd at0 = ebs::fourier_features(0.0);
  REQUIRE(at0.size() == 50);
  REQUIRE(at0[0] == 1.0);
  REQUIRE(at0[1] == 0.0);
  for (int j = 1; j <= 24; ++j) {
    REQUIRE(at0[2 * j] == 0.0);       // sin(0)
    REQUIRE(at0[2 * j + 1] == 1.0);   // cos(0)
  }
  const double x = 0.37;
  const Eigen::VectorXd phi = ebs::fourier_features(x);
  REQUIRE(phi[1] == x);
  REQUIRE(phi[2] == Catch::Approx(std::sin(x)).margin(1e-15));
  REQUIRE(phi[48] == Catch::Approx(std::sin(24 * x)).margin(1e-15));
  REQUIRE(phi[49] == Catch::Approx(std::cos(24 * x)).margin(1e-15));
}

TEST_CASE("make_fourier_toy splits and generative model") {
  RngStream rng(106, 0);
  const ebs::SupervisedDataset d = ebs::make_fourier_toy(20, 10, 0.0, rng, 30);
  REQUIRE(d.size() == 60);
  REQUIRE(d.feature_dim() == 50);
  REQUIRE(d.train_idx.size() == 20);
  REQUIRE(d.val_idx.size() == 10);
  REQUIRE(d.test_idx.size() == 30);
  REQUIRE(d.train_idx.front() == 0);
  REQUIRE(d.val_idx.front() == 20);
  REQUIRE(d.test_idx.front() == 30);
  // Without observation noise the target is exactly the linear ground truth
  // in the x stored at feature column 1.
  for (int i = 0; i < 60; ++i) {
    const double x = d.features(i, 1);
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    REQUIRE(d.targets[i] == Catch::Approx(1.5 * x + 0.5).margin(1e-12));
    REQUIRE(d.features(i, 0) == 1.0);
  }
}

TEST_CASE("fourier toy can memorize nearly all of its noisy targets") {
  // With 20 training rows and 50 features the model has enough capacity to
  // fit almost every direction of the noisy targets; that memorization
  // capacity is what makes the problem overfit. The sinusoid features on
  // [0, 1) are extremely ill conditioned, so the double-precision rank falls
  // one or two short of 20 and a small residual remains.
  RngStream rng(107, 0);
  const ebs::SupervisedDataset d = ebs::make_fourier_toy(20, 0, 0.5, rng, 50);
  Eigen::MatrixXd a(20, 50);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    a.row(i) = d.features.row(d.train_idx[static_cast<std::size_t>(i)]);
    y[i] = d.targets[d.train_idx[static_cast<std::size_t>(i)]];
  }
  const auto svd = a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
  REQUIRE(svd.rank() >= 18);
  const Eigen::VectorXd w = svd.solve(y);
  REQUIRE((a * w - y).squaredNorm() <= 0.05 * y.squaredNorm());
}

TEST_CASE("poly2_expand layout") {
  Eigen::VectorXd x(2);
  x << 2.0, 3.0;
  const Eigen::VectorXd e = ebs::poly2_expand(x);
  REQUIRE(e.size() == 6);
  REQUIRE(e[0] == 1.0);
  REQUIRE(e[1] == 2.0);
  REQUIRE(e[2] == 3.0);
  REQUIRE(e[3] == 4.0);   // x0 x0
  REQUIRE(e[4] == 6.0);   // x0 x1
  REQUIRE(e[5] == 9.0);   // x1 x1
  REQUIRE(ebs::poly2_dim(30) == 496);
  REQUIRE(ebs::poly2_dim(2) == 6);
}

TEST_CASE("logreg_per_sample_grad matches the sigmoid form") {
  RngStream rng(108, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd w = ebs::gaussian_vector(5, 0.0, 1.0, rng);
    const Eigen::VectorXd x = ebs::gaussian_vector(5, 0.0, 1.0, rng);
    const double y = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    const auto [loss, grad] = ebs::logreg_per_sample_grad(w, x, y);
    const double z = w.dot(x);
    const double sigma = 1.0 / (1.0 + std::exp(-z));
    const double naive = y == 1.0 ? -std::log(sigma) : -std::log(1.0 - sigma);
    REQUIRE(loss == Catch::Approx(naive).margin(1e-12));
    REQUIRE((grad - (sigma - y) * x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("logreg_per_sample_grad is stable at extreme logits") {
  Eigen::VectorXd w(1), x(1);
  w << 1000.0;
  x << 1.0;
  const auto [l1, g1] = ebs::logreg_per_sample_grad(w, x, 0.0);
  REQUIRE(std::isfinite(l1));
  REQUIRE(l1 == Catch::Approx(1000.0));  // -log(1 - sigma) ~ z for large z
  REQUIRE(g1[0] == Catch::Approx(1.0));
  const auto [l2, g2] = ebs::logreg_per_sample_grad(w, x, 1.0);
  REQUIRE(l2 >= 0.0);
  REQUIRE(l2 < 1e-300);  // essentially zero loss, never negative
  REQUIRE(std::abs(g2[0]) < 1e-300);

  REQUIRE_THROWS_AS(ebs::logreg_per_sample_grad(w, x, 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      ebs::logreg_per_sample_grad(w, Eigen::VectorXd::Ones(2), 1.0),
      std::invalid_argument);
}

TEST_CASE("load_wdbc splits, standardization and determinism") {
  RngStream rng(109, 0);
  const ebs::SupervisedDataset d = ebs::load_wdbc("data/wdbc.data", 60, rng);
  REQUIRE(d.size() == 569);
  REQUIRE(d.feature_dim() == 30);
  REQUIRE(d.test_idx.size() == 369);
  REQUIRE(d.val_idx.size() == 60);
  REQUIRE(d.train_idx.size() == 140);

  // Label counts of the canonical data: 212 malignant, 357 benign.
  const auto malignant = (d.targets.array() == 1.0).count();
  REQUIRE(malignant == 212);
  REQUIRE((d.targets.array() == 0.0).count() == 357);

  // Standardization is fitted on the training split only.
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(30);
  for (int i : d.train_idx) mean += d.features.row(i);
  mean /= static_cast<double>(d.train_idx.size());
  REQUIRE(mean.cwiseAbs().maxCoeff() < 1e-12);
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(30);
  for (int i : d.train_idx) var += (d.features.row(i) - mean).cwiseAbs2();
  var /= static_cast<double>(d.train_idx.size()) - 1.0;
  REQUIRE((var.array() - 1.0).abs().maxCoeff() < 1e-12);

  // Same seed, same splits; the RNG fully determines the permutation.
  RngStream rng2(109, 0);
  const ebs::SupervisedDataset d2 = ebs::load_wdbc("data/wdbc.data", 60, rng2);
  REQUIRE(d2.train_idx == d.train_idx);
  REQUIRE(d2.test_idx == d.test_idx);
}

TEST_CASE("load_wdbc nests validation inside a fixed pool") {
  // Growing the validation split must leave the test split untouched and
  // only move rows from train to validation.
  RngStream r1(110, 0);
  const ebs::SupervisedDataset a = ebs::load_wdbc("data/wdbc.data", 0, r1);
  RngStream r2(110, 0);
  const ebs::SupervisedDataset b = ebs::load_wdbc("data/wdbc.data", 60, r2);
  REQUIRE(a.val_idx.empty());
  REQUIRE(a.train_idx.size() == 200);
  REQUIRE(a.test_idx == b.test_idx);
  // b's validation and train rows together are exactly a's train rows.
  std::set<int> pool_a(a.train_idx.begin(), a.train_idx.end());
  std::set<int> pool_b(b.train_idx.begin(), b.train_idx.end());
  pool_b.insert(b.val_idx.begin(), b.val_idx.end());
  REQUIRE(pool_a == pool_b);
}

TEST_CASE("load_wdbc rejects malformed files") {
  const std::string dir = "build";
  const std::string good_row =
      "1,M," + []() {
        std::string s;
        for (int i = 0; i < 30; ++i) s += (i ? ",1.5" : std::string("1.5"));
        return s;
      }();

  const auto write_file = [&](const std::string& name,
                              const std::string& content) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    out << content;
    return path;
  };

  RngStream rng(1, 0);
  REQUIRE_THROWS_AS(ebs::load_wdbc("no/such/file.data", 0, rng),
                    std::invalid_argument);

  const std::string short_cols = write_file("wdbc_short.tmp", "1,M,2.0\n");
  REQUIRE_THROWS_WITH(ebs::load_wdbc(short_cols, 0, rng),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("columns"));

  std::string bad_field = good_row;
  bad_field.replace(bad_field.find("1.5"), 3, "abc");
  const std::string bad_num = write_file("wdbc_badnum.tmp", bad_field + "\n");
  REQUIRE_THROWS_WITH(ebs::load_wdbc(bad_num, 0, rng),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("abc"));

  std::string bad_label = good_row;
  bad_label[2] = 'X';
  const std::string bad_lab = write_file("wdbc_badlab.tmp", bad_label + "\n");
  REQUIRE_THROWS_WITH(ebs::load_wdbc(bad_lab, 0, rng),
                      Catch::Matchers::ContainsSubstring("M or B"));

  // Too few rows for the fixed 200-sample pool.
  std::string few;
  for (int i = 0; i < 50; ++i) few += good_row + "\n";
  const std::string few_path = write_file("wdbc_few.tmp", few);
  REQUIRE_THROWS_AS(ebs::load_wdbc(few_path, 0, rng), std::invalid_argument);

  RngStream rng3(1, 0);
  REQUIRE_THROWS_AS(ebs::load_wdbc("data/wdbc.data", 199, rng3),
                    std::invalid_argument);

  std::remove((dir + "/wdbc_short.tmp").c_str());
  std::remove((dir + "/wdbc_badnum.tmp").c_str());
  std::remove((dir + "/wdbc_badlab.tmp").c_str());
  std::remove((dir + "/wdbc_few.tmp").c_str());
}

TEST_CASE("make_blobs geometry and labels") {
  RngStream rng(111, 0);
  const int train = 600, val = 30, test = 90;
  const ebs::SupervisedDataset d =
      ebs::make_blobs(3, 2, train, val, test, 1.0, rng);
  REQUIRE(d.size() == train + val + test);
  REQUIRE(d.feature_dim() == 2);
  REQUIRE(d.train_idx.size() == 600);

  // Round-robin class assignment.
  for (int i = 0; i < d.size(); ++i)
    REQUIRE(d.targets[i] == static_cast<double>(i % 3));

  // Class-conditional means recover the circle-of-radius-2 centers.
  for (int c = 0; c < 3; ++c) {
    Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
    int count = 0;
    for (int i : d.train_idx) {
      if (d.targets[i] == c) {
        acc += d.features.row(i);
        ++count;
      }
    }
    acc /= count;
    const double theta = 2.0 * std::numbers::pi * c / 3.0;
    REQUIRE(std::abs(acc[0] - 2.0 * std::cos(theta)) < 0.35);
    REQUIRE(std::abs(acc[1] - 2.0 * std::sin(theta)) < 0.35);
  }

  // One-dimensional fallback puts centers on a line.
  RngStream rng1(112, 0);
  const ebs::SupervisedDataset line = ebs::make_blobs(2, 1, 400, 0, 40, 0.5,
                                                      rng1);
  double m0 = 0.0, m1 = 0.0;
  int c0 = 0, c1 = 0;
  for (int i : line.train_idx) {
    if (line.targets[i] == 0.0) {
      m0 += line.features(i, 0);
      ++c0;
    } else {
      m1 += line.features(i, 0);
      ++c1;
    }
  }
  REQUIRE(std::abs(m0 / c0 + 2.0) < 0.25);
  REQUIRE(std::abs(m1 / c1 - 2.0) < 0.25);

  REQUIRE_THROWS_AS(ebs::make_blobs(1, 2, 10, 0, 10, 1.0, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ebs::make_blobs(3, 2, 10, 0, 10, 0.0, rng),
                    std::invalid_argument);
}

TEST_CASE("LeastSquaresProblem means losses over splits") {
  RngStream rng(113, 0);
  const ebs::SupervisedDataset data = ebs::make_fourier_toy(8, 4, 0.3, rng, 6);
  const ebs::LeastSquaresProblem p(data, "fourier");
  REQUIRE(p.name() == "fourier");
  REQUIRE(p.dim() == 50);
  REQUIRE(p.train_size() == 8);
  REQUIRE(p.has_validation());

  const Eigen::VectorXd w = ebs::gaussian_vector(50, 0.0, 0.3, rng);
  double train_oracle = 0.0;
  for (int i : data.train_idx) {
    const double r = data.features.row(i).dot(w) - data.targets[i];
    train_oracle += 0.5 * r * r;
  }
  train_oracle /= 8.0;
  REQUIRE(p.train_loss(w) == Catch::Approx(train_oracle).epsilon(1e-12));

  // sample_loss_grad indexes into the training split.
  Eigen::VectorXd g(50);
  const double l0 = p.sample_loss_grad(w, 2, g);
  const int row = data.train_idx[2];
  const double r = data.features.row(row).dot(w) - data.targets[row];
  REQUIRE(l0 == Catch::Approx(0.5 * r * r).epsilon(1e-12));
  REQUIRE((g - r * data.features.row(row).transpose()).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE_THROWS_AS(p.sample_loss_grad(w, 8, g), std::out_of_range);
}

TEST_CASE("LogisticProblem expansion and parameter groups") {
  RngStream rng(114, 0);
  ebs::SupervisedDataset data;
  const int n = 12, d = 4;
  data.features.resize(n, d);
  data.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) data.features(i, c) = rng.next_gaussian();
    data.targets[i] = i % 2;
    (i < 8 ? data.train_idx : data.test_idx).push_back(i);
  }

  const ebs::LogisticProblem plain(data, false);
  REQUIRE(plain.dim() == 4);
  REQUIRE(plain.parameter_groups().group_count() == 1);

  const ebs::LogisticProblem expanded(data, true, "poly");
  REQUIRE(expanded.dim() == ebs::poly2_dim(4));
  const ebs::Partition groups = expanded.parameter_groups();
  REQUIRE(groups.group_count() == 2);
  REQUIRE(groups.label(0) == "bias");
  REQUIRE(groups.label(1) == "weights");
  REQUIRE(groups.group(0) == std::vector<int>{0});
  REQUIRE(static_cast<int>(groups.group(1).size()) == expanded.dim() - 1);

  // Expanded features agree with poly2_expand of the raw rows.
  const Eigen::VectorXd raw = data.features.row(5).transpose();
  const Eigen::VectorXd exp_row = expanded.data().features.row(5).transpose();
  REQUIRE((exp_row - ebs::poly2_expand(raw)).cwiseAbs().maxCoeff() == 0.0);

  ebs::SupervisedDataset bad = data;
  bad.targets[0] = 2.0;
  REQUIRE_THROWS_AS(ebs::LogisticProblem(bad, false), std::invalid_argument);
}

TEST_CASE("MlpArchitecture layout") {
  const ebs::MlpArchitecture arch({2, 16, 16, 3});
  REQUIRE(arch.layer_count() == 3);
  REQUIRE(arch.inputs() == 2);
  REQUIRE(arch.outputs() == 3);
  REQUIRE(arch.param_count() == 371);  // 2*16+16 + 16*16+16 + 16*3+3

  const ebs::Partition groups = arch.parameter_groups();
  REQUIRE(groups.group_count() == 6);
  REQUIRE(groups.label(0) == "W1");
  REQUIRE(groups.label(1) == "b1");
  REQUIRE(groups.label(4) == "W3");
  REQUIRE(groups.label(5) == "b3");
  REQUIRE(groups.group(0).size() == 32);
  REQUIRE(groups.group(1).size() == 16);
  REQUIRE(groups.group(5).size() == 3);

  REQUIRE_THROWS_AS(ebs::MlpArchitecture({5}), std::invalid_argument);
  REQUIRE_THROWS_AS(ebs::MlpArchitecture({5, 0, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(ebs::MlpArchitecture({5, 4, 1}), std::invalid_argument);
}

TEST_CASE("mlp loss at zero parameters is log(classes)") {
  // All-zero weights and biases give identical logits, so the softmax is
  // uniform and the cross entropy is exactly log(n_classes).
  const ebs::MlpArchitecture arch({4, 8, 3});
  const Eigen::VectorXd params = Eigen::VectorXd::Zero(arch.param_count());
  Eigen::VectorXd x(4);
  x << 1.0, -2.0, 0.5, 3.0;
  Eigen::VectorXd grad;
  const double loss = ebs::mlp_loss_grad(arch, params, x, 1, &grad);
  REQUIRE(loss == Catch::Approx(std::log(3.0)).margin(1e-14));
}

TEST_CASE("MlpProblem initialization and adapters") {
  RngStream rng(115, 0);
  const ebs::SupervisedDataset data = ebs::make_blobs(3, 2, 60, 6, 12, 1.0,
                                                      rng);
  const ebs::MlpProblem p(ebs::MlpArchitecture({2, 16, 16, 3}), data);
  REQUIRE(p.name() == "mlp");
  REQUIRE(p.dim() == 371);
  REQUIRE(p.train_size() == 60);
  REQUIRE(p.has_validation());
  REQUIRE(p.parameter_groups().group_count() == 6);

  RngStream init_rng(7, 1);
  const Eigen::VectorXd w0 = p.initial_point(init_rng);
  const ebs::MlpArchitecture arch({2, 16, 16, 3});
  // Biases start at exactly zero.
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int fan_in = arch.layer_sizes[static_cast<std::size_t>(l)];
    const int fan_out = arch.layer_sizes[static_cast<std::size_t>(l) + 1];
    const int b0 = arch.bias_offset(l);
    for (int k = 0; k < fan_out; ++k) REQUIRE(w0[b0 + k] == 0.0);
    (void)fan_in;
  }
  // He-scaled weights: the largest block has enough entries for a loose
  // standard deviation check around sqrt(2 / 16) = 0.354.
  const int w2_begin = arch.weight_offset(1);
  const Eigen::VectorXd w2 = w0.segment(w2_begin, 256);
  const double sd = std::sqrt(w2.squaredNorm() / 256.0);
  REQUIRE(sd > 0.25);
  REQUIRE(sd < 0.46);

  // Mismatched input width is rejected.
  REQUIRE_THROWS_AS(
      ebs::MlpProblem(ebs::MlpArchitecture({3, 4, 3}), data),
      std::invalid_argument);
  // Non-integer class targets are rejected.
  ebs::SupervisedDataset bad = data;
  bad.targets[0] = 0.5;
  REQUIRE_THROWS_AS(
      ebs::MlpProblem(ebs::MlpArchitecture({2, 4, 3}), bad),
      std::invalid_argument);
}

}  // namespace
