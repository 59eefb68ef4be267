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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ebs {

class InsufficientSamplesError : public std::runtime_error {
 public:
  explicit InsufficientSamplesError(const std::string& what)
      : std::runtime_error(what) {}
};

// Streaming per-coordinate mean and unbiased variance of sample gradients
// (Welford's algorithm). One pass, no gradient matrix is materialized.
class GradMoments {
 public:
  explicit GradMoments(Eigen::Index dim)
      : mean_(Eigen::ArrayXd::Zero(dim)), m2_(Eigen::ArrayXd::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("GradMoments: dim must be >= 1");
  }

  void accumulate(const Eigen::VectorXd& sample_grad) {
    if (sample_grad.size() != mean_.size())
      throw std::invalid_argument("GradMoments: dimension mismatch");
    ++count_;
    const Eigen::ArrayXd delta = sample_grad.array() - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (sample_grad.array() - mean_);
  }

  // Combines two partial accumulations (Chan et al. pairwise update). The
  // result depends on the merge tree shape at roundoff level, so callers that
  // need reproducibility must fix that shape.
  void merge(const GradMoments& other) {
    if (other.mean_.size() != mean_.size())
      throw std::invalid_argument("GradMoments: dimension mismatch");
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const Eigen::ArrayXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / (na + nb));
    m2_ += other.m2_ + delta.square() * (na * nb / (na + nb));
    count_ += other.count_;
  }

  void reset() {
    count_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

  long count() const { return count_; }
  Eigen::Index dim() const { return mean_.size(); }

  // Running mean; valid once at least one sample was seen.
  Eigen::VectorXd mean() const {
    if (count_ < 1)
      throw InsufficientSamplesError("GradMoments::mean: no samples");
    return mean_.matrix();
  }

  struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // unbiased, divisor count - 1
  };

  Moments finalize() const {
    if (count_ < 2)
      throw InsufficientSamplesError(
          "GradMoments::finalize: need at least 2 samples, have " +
          std::to_string(count_));
    return Moments{mean_.matrix(),
                   (m2_ / static_cast<double>(count_ - 1)).matrix()};
  }

 private:
  long count_ = 0;
  Eigen::ArrayXd mean_;
  Eigen::ArrayXd m2_;
};

// Exponential moving average with an explicit warm-up initial value instead
// of bias correction: value <- beta * value + (1 - beta) * v. Works for
// scalars (V = double) and per-coordinate arrays (V = Eigen::ArrayXd).
template <typename V>
class EmaSmoother {
 public:
  EmaSmoother(double beta, V initial) : beta_(beta), value_(std::move(initial)) {
    if (!(beta >= 0.0 && beta < 1.0))
      throw std::invalid_argument("EmaSmoother: beta must be in [0, 1)");
  }

  const V& update(const V& v) {
    value_ = beta_ * value_ + (1.0 - beta_) * v;
    return value_;
  }

  const V& value() const { return value_; }
  double beta() const { return beta_; }

 private:
  double beta_;
  V value_;
};

// Per-coordinate signal-to-noise fractions
//   f(k) = sample_size * mean_grad(k)^2 / var_hat(k),
// the quantity the evidence-based criterion averages. Degenerate coordinates
// (variance below eps_var) are mapped to 0 when the mean gradient is exactly
// zero (a converged, noiseless coordinate) and to `saturation` otherwise
// (clear signal with no measured noise), so downstream logic never divides
// by zero on deterministic problems.
inline Eigen::ArrayXd snr_fractions(const Eigen::VectorXd& mean_grad,
                                    const Eigen::VectorXd& var_hat,
                                    double sample_size,
                                    double eps_var = 1e-300,
                                    double saturation = 1e12) {
  if (mean_grad.size() != var_hat.size())
    throw std::invalid_argument("snr_fractions: dimension mismatch");
  if (sample_size <= 0.0)
    throw std::invalid_argument("snr_fractions: sample_size must be > 0");
  Eigen::ArrayXd f(mean_grad.size());
  for (Eigen::Index k = 0; k < mean_grad.size(); ++k) {
    const double g = mean_grad[k];
    const double v = var_hat[k];
    if (v < eps_var) {
      f[k] = (g == 0.0) ? 0.0 : saturation;
    } else {
      f[k] = sample_size * g * g / v;
    }
  }
  return f;
}

}  // namespace ebs
