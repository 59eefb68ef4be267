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
#include <utility>

#include <Eigen/Dense>

#include "ebs/numerics.hpp"
#include "ebs/stopping.hpp"

namespace ebs {

// Training objective as seen by the optimizer loop. Two families implement
// it: sample-based problems expose per-sample gradients for mini-batching
// and variance estimation, analytic problems (train_size() == 0) expose the
// full gradient plus a closed-form gradient-noise variance directly.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;

  // Number of samples available for batching; 0 for analytic problems.
  virtual int train_size() const = 0;

  // Loss and gradient of one training sample, sample in [0, train_size()).
  virtual double sample_loss_grad(const Eigen::VectorXd& w, int sample,
                                  Eigen::VectorXd& grad_out) const {
    (void)w;
    (void)sample;
    (void)grad_out;
    throw std::logic_error(name() + ": per-sample gradients not available");
  }

  virtual double train_loss(const Eigen::VectorXd& w) const = 0;
  virtual double test_loss(const Eigen::VectorXd& w) const = 0;

  virtual bool has_validation() const { return false; }
  virtual double validation_loss(const Eigen::VectorXd& w) const {
    (void)w;
    throw std::logic_error(name() + ": no validation split");
  }

  // Analytic-noise interface. When analytic_noise() is true the loop uses
  // full_gradient() for steps and criterion_noise() as the per-coordinate
  // variance of the observed gradient (already scaled to the full dataset,
  // so the criterion's effective sample size is 1).
  virtual bool analytic_noise() const { return false; }
  virtual Eigen::VectorXd full_gradient(const Eigen::VectorXd& w) const {
    (void)w;
    throw std::logic_error(name() + ": no analytic gradient");
  }
  virtual const Eigen::VectorXd& criterion_noise() const {
    throw std::logic_error(name() + ": no analytic gradient noise");
  }

  // Train and test loss, given the already-computed training gradient at w.
  // Problems where the losses fall out of the gradient algebra override this
  // to avoid recomputation; the default just evaluates both losses.
  virtual std::pair<double, double> losses_with_gradient(
      const Eigen::VectorXd& w, const Eigen::VectorXd& grad) const {
    (void)grad;
    return {train_loss(w), test_loss(w)};
  }

  // Natural parameter grouping for per-subgroup stopping criteria.
  virtual Partition parameter_groups() const { return Partition::single(dim()); }

  virtual Eigen::VectorXd initial_point(RngStream& rng) const {
    (void)rng;
    return Eigen::VectorXd::Zero(dim());
  }
};

}  // namespace ebs
