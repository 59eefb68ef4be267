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

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebs/numerics.hpp"
#include "ebs/problem.hpp"
#include "ebs/stopping.hpp"

namespace ebs {

// Row-major storage so per-sample feature rows are contiguous.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Synthetic quadratic
// ---------------------------------------------------------------------------

enum class SpectrumShape { kUniform, kExponential, kStructured };

struct SpectrumKind {
  SpectrumShape shape = SpectrumShape::kExponential;
  double eig_min = 0.1;
  double eig_max = 10.0;
  int n_large = 20;  // structured shape only
};

// Eigenvalue spectrum, sorted ascending, all entries positive.
//   uniform:     evenly spaced on [eig_min, eig_max]
//   exponential: geometric progression from eig_min to eig_max
//   structured:  n_large copies of eig_max on a floor of eig_min
inline Eigen::VectorXd make_spectrum(int dim, const SpectrumKind& kind) {
  if (dim < 1) throw std::invalid_argument("make_spectrum: dim must be >= 1");
  if (!(kind.eig_min > 0.0) || !(kind.eig_max >= kind.eig_min))
    throw std::invalid_argument("make_spectrum: need 0 < eig_min <= eig_max");
  Eigen::VectorXd eig(dim);
  switch (kind.shape) {
    case SpectrumShape::kUniform:
      eig = Eigen::VectorXd::LinSpaced(dim, kind.eig_min, kind.eig_max);
      break;
    case SpectrumShape::kExponential: {
      if (dim == 1) {
        eig[0] = kind.eig_min;
        break;
      }
      const double ratio = kind.eig_max / kind.eig_min;
      for (int i = 0; i < dim; ++i)
        eig[i] = kind.eig_min *
                 std::pow(ratio, static_cast<double>(i) /
                                     static_cast<double>(dim - 1));
      break;
    }
    case SpectrumShape::kStructured: {
      if (kind.n_large < 1 || kind.n_large >= dim)
        throw std::invalid_argument(
            "make_spectrum: structured needs 1 <= n_large < dim");
      for (int i = 0; i < dim; ++i)
        eig[i] = (i < dim - kind.n_large) ? kind.eig_min : kind.eig_max;
      break;
    }
  }
  return eig;
}

// Rotated quadratic with an additive empirical shift:
//   true loss       L(w)   = 1/2 (w - w*)' B (w - w*),  B = R diag(eig) R'
//   training loss   L_D(w) = 1/2 (w - w* + shift)' B (w - w* + shift)
// where shift ~ N(0, noise_scale I) models the finite-dataset perturbation.
// The training gradient B(w - w*) + B shift therefore differs from the true
// gradient by B shift, whose per-coordinate variance diag(B noise_scale B')
// is stored exactly in noise_diag.
struct QuadraticProblem {
  int dim = 0;
  Eigen::MatrixXd rotation;     // R, Haar orthogonal
  Eigen::VectorXd eigenvalues;  // ascending, positive
  Eigen::VectorXd minimizer;    // w*, minimizer of the true loss
  Eigen::VectorXd shift;        // empirical minimizer is w* - shift
  double noise_scale = 0.0;
  Eigen::MatrixXd hessian;      // B
  Eigen::VectorXd shift_grad;   // B shift
  Eigen::VectorXd noise_diag;   // diag(B noise_scale B'), computed exactly
};

// Draw order from `rng`: the rotation's dim^2 Gaussian entries, then the
// dim-dimensional shift.
inline QuadraticProblem make_quadratic(int dim, const SpectrumKind& kind,
                                       double noise_scale, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("make_quadratic: dim must be >= 1");
  if (!(noise_scale > 0.0))
    throw std::invalid_argument("make_quadratic: noise_scale must be > 0");
  QuadraticProblem q;
  q.dim = dim;
  q.rotation = haar_orthogonal(dim, rng);
  q.eigenvalues = make_spectrum(dim, kind);
  q.minimizer = Eigen::VectorXd::Zero(dim);
  q.shift = gaussian_vector(dim, 0.0, std::sqrt(noise_scale), rng);
  q.noise_scale = noise_scale;
  q.hessian = q.rotation * q.eigenvalues.asDiagonal() * q.rotation.transpose();
  q.shift_grad = q.hessian * q.shift;
  q.noise_diag = noise_scale * q.hessian.rowwise().squaredNorm();
  return q;
}

struct QuadEval {
  double train_loss;  // empirical loss L_D
  double test_loss;   // true loss L
  Eigen::VectorXd train_grad;
  Eigen::VectorXd test_grad;
};

// One Hessian product evaluates everything: both gradients differ by the
// cached B shift and both losses are half inner products with w offsets.
inline QuadEval quad_losses_and_grads(const QuadraticProblem& q,
                                      const Eigen::VectorXd& w) {
  if (w.size() != q.dim)
    throw std::invalid_argument("quad_losses_and_grads: dimension mismatch");
  QuadEval e;
  const Eigen::VectorXd d = w - q.minimizer;
  e.test_grad = q.hessian * d;
  e.train_grad = e.test_grad + q.shift_grad;
  e.test_loss = 0.5 * d.dot(e.test_grad);
  e.train_loss = 0.5 * (d + q.shift).dot(e.train_grad);
  return e;
}

// Inputs for the stopping criterion: the observed (training) gradient and
// the exact per-coordinate variance of its noise. The variance is already
// that of the full-dataset gradient, so use effective sample size 1.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> quad_criterion_inputs(
    const QuadraticProblem& q, const Eigen::VectorXd& w) {
  if (w.size() != q.dim)
    throw std::invalid_argument("quad_criterion_inputs: dimension mismatch");
  return {q.hessian * (w - q.minimizer) + q.shift_grad, q.noise_diag};
}

// How quadratic runs pick their starting point.
struct QuadraticInit {
  bool counterexample = false;
  // Gaussian init: w* + N(0, init_scale^2 I).
  double init_scale = 3.1622776601683795;  // sqrt(10), matches default noise
  // Counterexample init: w* - counter_scale * shift, which approaches the
  // empirical minimizer from the far side so the training gradient shrinks
  // while the true loss only decreases.
  double counter_scale = 3.0;
};

class QuadraticObjective final : public Problem {
 public:
  QuadraticObjective(QuadraticProblem q, QuadraticInit init = {})
      : q_(std::move(q)), init_(init) {}

  std::string name() const override { return "quadratic"; }
  int dim() const override { return q_.dim; }
  int train_size() const override { return 0; }
  bool analytic_noise() const override { return true; }

  double train_loss(const Eigen::VectorXd& w) const override {
    return quad_losses_and_grads(q_, w).train_loss;
  }
  double test_loss(const Eigen::VectorXd& w) const override {
    return quad_losses_and_grads(q_, w).test_loss;
  }

  Eigen::VectorXd full_gradient(const Eigen::VectorXd& w) const override {
    return q_.hessian * (w - q_.minimizer) + q_.shift_grad;
  }
  const Eigen::VectorXd& criterion_noise() const override {
    return q_.noise_diag;
  }

  std::pair<double, double> losses_with_gradient(
      const Eigen::VectorXd& w, const Eigen::VectorXd& grad) const override {
    const double train = 0.5 * (w - q_.minimizer + q_.shift).dot(grad);
    const Eigen::VectorXd test_grad = grad - q_.shift_grad;
    const double test = 0.5 * (w - q_.minimizer).dot(test_grad);
    return {train, test};
  }

  Eigen::VectorXd initial_point(RngStream& rng) const override {
    if (init_.counterexample)
      return q_.minimizer - init_.counter_scale * q_.shift;
    return q_.minimizer + gaussian_vector(q_.dim, 0.0, init_.init_scale, rng);
  }

  const QuadraticProblem& quadratic() const { return q_; }

 private:
  QuadraticProblem q_;
  QuadraticInit init_;
};

// ---------------------------------------------------------------------------
// Supervised datasets
// ---------------------------------------------------------------------------

struct SupervisedDataset {
  RowMatrix features;       // one row per sample
  Eigen::VectorXd targets;  // regression target or class id as double
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> test_idx;

  int size() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  // The three splits must partition the row set exactly.
  void validate() const {
    if (features.rows() != targets.size())
      throw std::invalid_argument("SupervisedDataset: row/target mismatch");
    std::vector<char> seen(static_cast<std::size_t>(size()), 0);
    std::size_t covered = 0;
    for (const auto* split : {&train_idx, &val_idx, &test_idx}) {
      for (int idx : *split) {
        if (idx < 0 || idx >= size())
          throw std::invalid_argument("SupervisedDataset: index out of range");
        if (seen[static_cast<std::size_t>(idx)])
          throw std::invalid_argument("SupervisedDataset: overlapping splits");
        seen[static_cast<std::size_t>(idx)] = 1;
        ++covered;
      }
    }
    if (covered != static_cast<std::size_t>(size()))
      throw std::invalid_argument(
          "SupervisedDataset: splits do not cover all rows");
  }
};

// ---------------------------------------------------------------------------
// Fourier regression toy
// ---------------------------------------------------------------------------

inline constexpr int kFourierWaves = 24;
inline constexpr int kFourierFeatureDim = 2 + 2 * kFourierWaves;  // 50
inline constexpr double kFourierSlope = 1.5;
inline constexpr double kFourierIntercept = 0.5;

// Feature map [1, x, sin(j x), cos(j x)] for j = 1..24.
inline Eigen::VectorXd fourier_features(double x) {
  Eigen::VectorXd phi(kFourierFeatureDim);
  phi[0] = 1.0;
  phi[1] = x;
  for (int j = 1; j <= kFourierWaves; ++j) {
    phi[2 * j] = std::sin(j * x);
    phi[2 * j + 1] = std::cos(j * x);
  }
  return phi;
}

// Small linear ground truth observed through the rich Fourier feature map:
// x uniform on [0, 1), y = 1.5 x + 0.5 + N(0, noise_std^2). With far more
// features than training points the model can interpolate the noise, which
// is the failure mode early stopping must catch. Rows are drawn train split
// first, then validation, then test, one (x, noise) pair per sample.
inline SupervisedDataset make_fourier_toy(int n_train, int n_val,
                                          double noise_std, RngStream& rng,
                                          int n_test = 2000) {
  if (n_train < 1 || n_val < 0 || n_test < 1)
    throw std::invalid_argument("make_fourier_toy: bad split sizes");
  if (noise_std < 0.0)
    throw std::invalid_argument("make_fourier_toy: negative noise_std");
  const int n = n_train + n_val + n_test;
  SupervisedDataset d;
  d.features.resize(n, kFourierFeatureDim);
  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_unit();
    const double eps = rng.next_gaussian();
    d.features.row(i) = fourier_features(x).transpose();
    d.targets[i] = kFourierSlope * x + kFourierIntercept + noise_std * eps;
  }
  for (int i = 0; i < n_train; ++i) d.train_idx.push_back(i);
  for (int i = 0; i < n_val; ++i) d.val_idx.push_back(n_train + i);
  for (int i = 0; i < n_test; ++i) d.test_idx.push_back(n_train + n_val + i);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Degree-2 polynomial expansion
// ---------------------------------------------------------------------------

// [1] ++ [x_i] ++ [x_i * x_j for i <= j]; dimension 1 + d + d(d+1)/2.
inline Eigen::VectorXd poly2_expand(const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd out(1 + d + d * (d + 1) / 2);
  int pos = 0;
  out[pos++] = 1.0;
  for (int i = 0; i < d; ++i) out[pos++] = x[i];
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) out[pos++] = x[i] * x[j];
  return out;
}

inline int poly2_dim(int d) { return 1 + d + d * (d + 1) / 2; }

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

// Binary cross entropy of one sample with label y in {0, 1}, evaluated in
// the overflow-safe form max(z,0) - z y + log(1 + exp(-|z|)).
inline std::pair<double, Eigen::VectorXd> logreg_per_sample_grad(
    const Eigen::VectorXd& w, const Eigen::VectorXd& x, double y) {
  if (w.size() != x.size())
    throw std::invalid_argument("logreg_per_sample_grad: dimension mismatch");
  if (y != 0.0 && y != 1.0)
    throw std::invalid_argument("logreg_per_sample_grad: label must be 0 or 1");
  const double z = w.dot(x);
  const double loss =
      std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  const double sigma = 1.0 / (1.0 + std::exp(-z));
  return {loss, (sigma - y) * x};
}

// ---------------------------------------------------------------------------
// Breast-cancer diagnosis data (the canonical 32-column CSV layout:
// id, M/B diagnosis, 30 real-valued features)
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_csv_double(const std::string& field, int line_no,
                               int col_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("load_wdbc: line " + std::to_string(line_no) +
                                ", column " + std::to_string(col_no) +
                                ": cannot parse '" + field + "' as a number");
  return value;
}

}  // namespace detail

// Loads the diagnosis dataset and prepares it for training:
//   - labels: M (malignant) -> 1, B (benign) -> 0
//   - a seeded shuffle fixes a held-out test split of size n - 200; the
//     remaining 200-sample pool yields val_size validation rows, the rest
//     train. Nesting the splits this way keeps the test split identical
//     across different validation sizes for the same seed.
//   - features are standardized with mean and sample standard deviation of
//     the training split only (applied to every row, before any expansion).
inline SupervisedDataset load_wdbc(const std::string& path, int val_size,
                                   RngStream& rng) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("load_wdbc: cannot open '" + path + "'");
  std::vector<std::array<double, 30>> rows;
  std::vector<double> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 32)
      throw std::invalid_argument(
          "load_wdbc: line " + std::to_string(line_no) + ": expected 32 " +
          "columns, found " + std::to_string(fields.size()));
    if (fields[1] == "M")
      labels.push_back(1.0);
    else if (fields[1] == "B")
      labels.push_back(0.0);
    else
      throw std::invalid_argument("load_wdbc: line " + std::to_string(line_no) +
                                  ": diagnosis must be M or B, found '" +
                                  fields[1] + "'");
    std::array<double, 30> feat{};
    for (int c = 0; c < 30; ++c)
      feat[static_cast<std::size_t>(c)] =
          detail::parse_csv_double(fields[static_cast<std::size_t>(c) + 2],
                                   line_no, c + 3);
    rows.push_back(feat);
  }
  const int n = static_cast<int>(rows.size());
  constexpr int kPool = 200;
  if (n < kPool + 2)
    throw std::invalid_argument("load_wdbc: need at least " +
                                std::to_string(kPool + 2) + " rows, found " +
                                std::to_string(n));
  if (val_size < 0 || val_size > kPool - 2)
    throw std::invalid_argument("load_wdbc: val_size must be in [0, " +
                                std::to_string(kPool - 2) + "]");

  SupervisedDataset d;
  d.features.resize(n, 30);
  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 30; ++c)
      d.features(i, c) = rows[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(c)];
    d.targets[i] = labels[static_cast<std::size_t>(i)];
  }

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  const int n_test = n - kPool;
  d.test_idx.assign(perm.begin(), perm.begin() + n_test);
  d.val_idx.assign(perm.begin() + n_test, perm.begin() + n_test + val_size);
  d.train_idx.assign(perm.begin() + n_test + val_size, perm.end());
  d.validate();

  const auto n_tr = static_cast<double>(d.train_idx.size());
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(30);
  for (int i : d.train_idx) mean += d.features.row(i);
  mean /= n_tr;
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(30);
  for (int i : d.train_idx)
    sq += (d.features.row(i) - mean).cwiseAbs2();
  const Eigen::RowVectorXd stddev = (sq / (n_tr - 1.0)).cwiseSqrt();
  for (int c = 0; c < 30; ++c) {
    if (!(stddev[c] > 0.0))
      throw std::invalid_argument(
          "load_wdbc: feature " + std::to_string(c) +
          " is constant on the training split, cannot standardize");
  }
  d.features = (d.features.rowwise() - mean).array().rowwise() /
               stddev.array();
  return d;
}

// ---------------------------------------------------------------------------
// Gaussian blob classification data
// ---------------------------------------------------------------------------

// Balanced synthetic classification set: class centers sit on a circle of
// radius 2 in the first two feature dimensions (spread along a line when
// dim == 1), samples are center + N(0, noise_std^2 I). Classes are assigned
// round robin; rows are drawn train, then validation, then test.
inline SupervisedDataset make_blobs(int n_classes, int dim, int n_train,
                                    int n_val, int n_test, double noise_std,
                                    RngStream& rng) {
  if (n_classes < 2)
    throw std::invalid_argument("make_blobs: need at least 2 classes");
  if (dim < 1) throw std::invalid_argument("make_blobs: dim must be >= 1");
  if (n_train < 1 || n_val < 0 || n_test < 1)
    throw std::invalid_argument("make_blobs: bad split sizes");
  if (!(noise_std > 0.0))
    throw std::invalid_argument("make_blobs: noise_std must be > 0");
  RowMatrix centers = RowMatrix::Zero(n_classes, dim);
  constexpr double kRadius = 2.0;
  for (int c = 0; c < n_classes; ++c) {
    if (dim == 1) {
      centers(c, 0) = kRadius * (2.0 * c - (n_classes - 1));
    } else {
      const double theta = 2.0 * std::numbers::pi * c / n_classes;
      centers(c, 0) = kRadius * std::cos(theta);
      centers(c, 1) = kRadius * std::sin(theta);
    }
  }
  const int n = n_train + n_val + n_test;
  SupervisedDataset d;
  d.features.resize(n, dim);
  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % n_classes;
    for (int k = 0; k < dim; ++k)
      d.features(i, k) = centers(c, k) + noise_std * rng.next_gaussian();
    d.targets[i] = c;
  }
  for (int i = 0; i < n_train; ++i) d.train_idx.push_back(i);
  for (int i = 0; i < n_val; ++i) d.val_idx.push_back(n_train + i);
  for (int i = 0; i < n_test; ++i) d.test_idx.push_back(n_train + n_val + i);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Problem adapters over SupervisedDataset
// ---------------------------------------------------------------------------

// Common split-mean loss plumbing for sample-based problems.
class DatasetProblem : public Problem {
 public:
  explicit DatasetProblem(SupervisedDataset data) : data_(std::move(data)) {
    data_.validate();
  }

  int train_size() const override {
    return static_cast<int>(data_.train_idx.size());
  }
  bool has_validation() const override { return !data_.val_idx.empty(); }

  double train_loss(const Eigen::VectorXd& w) const override {
    return split_loss(w, data_.train_idx);
  }
  double test_loss(const Eigen::VectorXd& w) const override {
    return split_loss(w, data_.test_idx);
  }
  double validation_loss(const Eigen::VectorXd& w) const override {
    if (data_.val_idx.empty())
      throw std::logic_error(name() + ": no validation split");
    return split_loss(w, data_.val_idx);
  }

  double sample_loss_grad(const Eigen::VectorXd& w, int sample,
                          Eigen::VectorXd& grad_out) const override {
    return row_loss_grad(w, data_.train_idx.at(static_cast<std::size_t>(sample)),
                         &grad_out);
  }

  const SupervisedDataset& data() const { return data_; }

 protected:
  // Loss of dataset row `row`; fills *grad_out when non-null.
  virtual double row_loss_grad(const Eigen::VectorXd& w, int row,
                               Eigen::VectorXd* grad_out) const = 0;

  double split_loss(const Eigen::VectorXd& w,
                    const std::vector<int>& idx) const {
    if (idx.empty()) throw std::logic_error(name() + ": empty split");
    double acc = 0.0;
    for (int row : idx) acc += row_loss_grad(w, row, nullptr);
    return acc / static_cast<double>(idx.size());
  }

  SupervisedDataset data_;
};

// Mean squared error linear regression, loss 1/2 (w'x - y)^2 per sample.
class LeastSquaresProblem final : public DatasetProblem {
 public:
  explicit LeastSquaresProblem(SupervisedDataset data, std::string name =
                                   "least_squares")
      : DatasetProblem(std::move(data)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  int dim() const override { return data_.feature_dim(); }

 protected:
  double row_loss_grad(const Eigen::VectorXd& w, int row,
                       Eigen::VectorXd* grad_out) const override {
    const double r = data_.features.row(row).dot(w) - data_.targets[row];
    if (grad_out) *grad_out = r * data_.features.row(row).transpose();
    return 0.5 * r * r;
  }

  std::string name_;
};

// Binary logistic regression. With expand_poly2 the raw features pass
// through poly2_expand once at construction and the parameters fall into
// two groups, the bias (constant feature) and everything else.
class LogisticProblem final : public DatasetProblem {
 public:
  explicit LogisticProblem(SupervisedDataset data, bool expand_poly2 = false,
                           std::string name = "logistic")
      : DatasetProblem(std::move(data)),
        expanded_(expand_poly2),
        name_(std::move(name)) {
    for (Eigen::Index i = 0; i < data_.targets.size(); ++i) {
      if (data_.targets[i] != 0.0 && data_.targets[i] != 1.0)
        throw std::invalid_argument(name_ + ": labels must be 0 or 1");
    }
    if (expanded_) {
      const int n = data_.size();
      RowMatrix big(n, poly2_dim(data_.feature_dim()));
      for (int i = 0; i < n; ++i)
        big.row(i) = poly2_expand(d_row(i)).transpose();
      data_.features = std::move(big);
    }
  }

  std::string name() const override { return name_; }
  int dim() const override { return data_.feature_dim(); }

  Partition parameter_groups() const override {
    if (!expanded_) return Partition::single(dim());
    std::vector<int> bias{0};
    std::vector<int> weights;
    for (int k = 1; k < dim(); ++k) weights.push_back(k);
    return Partition(dim(), {std::move(bias), std::move(weights)},
                     {"bias", "weights"});
  }

 protected:
  double row_loss_grad(const Eigen::VectorXd& w, int row,
                       Eigen::VectorXd* grad_out) const override {
    const double y = data_.targets[row];
    const double z = data_.features.row(row).dot(w);
    if (grad_out) {
      const double sigma = 1.0 / (1.0 + std::exp(-z));
      *grad_out = (sigma - y) * data_.features.row(row).transpose();
    }
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }

 private:
  Eigen::VectorXd d_row(int i) const {
    return data_.features.row(i).transpose();
  }

  bool expanded_;
  std::string name_;
};

}  // namespace ebs
