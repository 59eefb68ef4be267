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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebs/grad_stats.hpp"

namespace ebs {

class InvalidVarianceError : public std::runtime_error {
 public:
  explicit InvalidVarianceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Disjoint cover of parameter indices {0..dim-1} by named groups. Used to
// evaluate the stopping criterion per parameter subgroup (e.g. one group per
// weight matrix and bias vector of a network).
class Partition {
 public:
  Partition(int dim, std::vector<std::vector<int>> groups,
            std::vector<std::string> labels = {})
      : dim_(dim), groups_(std::move(groups)), labels_(std::move(labels)) {
    if (dim < 1) throw std::invalid_argument("Partition: dim must be >= 1");
    if (groups_.empty())
      throw std::invalid_argument("Partition: needs at least one group");
    if (!labels_.empty() && labels_.size() != groups_.size())
      throw std::invalid_argument("Partition: label count mismatch");
    std::vector<char> seen(static_cast<std::size_t>(dim), 0);
    std::size_t covered = 0;
    for (const auto& g : groups_) {
      if (g.empty())
        throw std::invalid_argument("Partition: empty group");
      for (int idx : g) {
        if (idx < 0 || idx >= dim)
          throw std::invalid_argument("Partition: index out of range: " +
                                      std::to_string(idx));
        if (seen[static_cast<std::size_t>(idx)])
          throw std::invalid_argument("Partition: duplicate index: " +
                                      std::to_string(idx));
        seen[static_cast<std::size_t>(idx)] = 1;
        ++covered;
      }
    }
    if (covered != static_cast<std::size_t>(dim))
      throw std::invalid_argument("Partition: indices do not cover all of dim");
    if (labels_.empty()) {
      labels_.reserve(groups_.size());
      for (std::size_t i = 0; i < groups_.size(); ++i)
        labels_.push_back("g" + std::to_string(i));
    }
  }

  // The trivial whole-model partition.
  static Partition single(int dim) {
    std::vector<int> all(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) all[static_cast<std::size_t>(i)] = i;
    return Partition(dim, {std::move(all)}, {"all"});
  }

  int dim() const { return dim_; }
  int group_count() const { return static_cast<int>(groups_.size()); }
  const std::vector<int>& group(int i) const {
    return groups_.at(static_cast<std::size_t>(i));
  }
  const std::string& label(int i) const {
    return labels_.at(static_cast<std::size_t>(i));
  }

 private:
  int dim_;
  std::vector<std::vector<int>> groups_;
  std::vector<std::string> labels_;
};

namespace detail {

inline void check_variance(const Eigen::VectorXd& var_hat, const char* where) {
  for (Eigen::Index k = 0; k < var_hat.size(); ++k) {
    if (!(var_hat[k] > 0.0))
      throw InvalidVarianceError(std::string(where) +
                                 ": variance must be positive at coordinate " +
                                 std::to_string(k));
  }
}

}  // namespace detail

// Log density of the observed mean gradient under the hypothesis that the
// true gradient is zero and the observed one is pure sampling noise:
//   sum_k log N(mean_grad(k); 0, var_hat(k) / dataset_size).
// Sums left to right in coordinate order.
inline double log_evidence(const Eigen::VectorXd& mean_grad,
                           const Eigen::VectorXd& var_hat,
                           double dataset_size) {
  if (mean_grad.size() != var_hat.size())
    throw std::invalid_argument("log_evidence: dimension mismatch");
  if (dataset_size <= 0.0)
    throw std::invalid_argument("log_evidence: dataset_size must be > 0");
  detail::check_variance(var_hat, "log_evidence");
  const double two_pi = 2.0 * std::numbers::pi;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < mean_grad.size(); ++k) {
    const double scaled_var = var_hat[k] / dataset_size;
    sum += -0.5 * std::log(two_pi * scaled_var) -
           0.5 * mean_grad[k] * mean_grad[k] / scaled_var;
  }
  return sum;
}

// Expectation of log_evidence when the zero-gradient hypothesis is true,
// i.e. when mean_grad(k) ~ N(0, var_hat(k) / dataset_size): each coordinate
// contributes -0.5 * log(2 pi var/M) - 0.5.
inline double expected_log_evidence(const Eigen::VectorXd& var_hat,
                                    double dataset_size) {
  if (dataset_size <= 0.0)
    throw std::invalid_argument(
        "expected_log_evidence: dataset_size must be > 0");
  detail::check_variance(var_hat, "expected_log_evidence");
  const double two_pi = 2.0 * std::numbers::pi;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < var_hat.size(); ++k) {
    sum += -0.5 * std::log(two_pi * var_hat[k] / dataset_size) - 0.5;
  }
  return sum;
}

// Criterion value from precomputed signal-to-noise fractions: 1 - mean(f).
// Positive means the observed gradient is less surprising than a typical
// pure-noise gradient, i.e. learning has stopped being evidence-driven.
inline double criterion_from_fractions(const Eigen::ArrayXd& f) {
  if (f.size() < 1)
    throw std::invalid_argument("criterion_from_fractions: empty input");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) sum += f[k];
  return 1.0 - sum / static_cast<double>(f.size());
}

// Whole-model criterion, the normalized gap between the log evidence and its
// expectation:
//   1 - (1/D) sum_k sample_size * mean_grad(k)^2 / var_hat(k)
//     = (2/D) * (log_evidence - expected_log_evidence).
// Always <= 1, with equality iff the mean gradient vanishes.
inline double eb_criterion(const Eigen::VectorXd& mean_grad,
                           const Eigen::VectorXd& var_hat,
                           double sample_size) {
  if (mean_grad.size() != var_hat.size())
    throw std::invalid_argument("eb_criterion: dimension mismatch");
  if (mean_grad.size() < 1)
    throw std::invalid_argument("eb_criterion: empty input");
  detail::check_variance(var_hat, "eb_criterion");
  return criterion_from_fractions(
      snr_fractions(mean_grad, var_hat, sample_size));
}

struct GroupedCriterion {
  Eigen::VectorXd per_group;
  double combined = 0.0;  // unweighted mean over groups
};

// Grouped criterion from precomputed fractions. Each group is scored as
// 1 - mean of its fractions and groups are weighted equally regardless of
// size. Group sums run in ascending index order, so with the trivial
// single-group partition the combined value is bitwise identical to
// criterion_from_fractions.
inline GroupedCriterion grouped_criterion_from_fractions(
    const Eigen::ArrayXd& f, const Partition& partition) {
  if (f.size() != partition.dim())
    throw std::invalid_argument(
        "grouped_criterion_from_fractions: dimension mismatch");
  const int n = partition.group_count();
  Eigen::VectorXd per_group(n);
  for (int i = 0; i < n; ++i) {
    const auto& idx = partition.group(i);
    double sum = 0.0;
    for (int k : idx) sum += f[k];
    per_group[i] = 1.0 - sum / static_cast<double>(idx.size());
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += per_group[i];
  return GroupedCriterion{std::move(per_group), acc / static_cast<double>(n)};
}

inline GroupedCriterion eb_criterion_grouped(const Eigen::VectorXd& mean_grad,
                                             const Eigen::VectorXd& var_hat,
                                             double sample_size,
                                             const Partition& partition) {
  if (mean_grad.size() != var_hat.size())
    throw std::invalid_argument("eb_criterion_grouped: dimension mismatch");
  detail::check_variance(var_hat, "eb_criterion_grouped");
  return grouped_criterion_from_fractions(
      snr_fractions(mean_grad, var_hat, sample_size), partition);
}

struct StopDecision {
  bool stop;
  double combined;  // mean over groups of the smoothed criterion
};

// Smoothed evidence-based stopping state. Each group's raw criterion value is
// smoothed with an exponential moving average started at `warmup` (negative,
// so a minimum number of updates must pass before any stop); the run stops
// when the mean of the smoothed values reaches zero. The decision is
// terminal: once reached, later updates cannot unstop it.
class EbState {
 public:
  // stop_at_boundary: stop when the smoothed mean is >= 0 (default). When
  // false, require strictly > 0 instead.
  EbState(int group_count, double beta, double warmup = -9.0,
          bool stop_at_boundary = true)
      : beta_(beta),
        stop_at_boundary_(stop_at_boundary),
        smoothed_(Eigen::ArrayXd::Constant(group_count, warmup)) {
    if (group_count < 1)
      throw std::invalid_argument("EbState: group_count must be >= 1");
    if (!(beta >= 0.0 && beta < 1.0))
      throw std::invalid_argument("EbState: beta must be in [0, 1)");
  }

  StopDecision update_and_decide(const Eigen::VectorXd& per_group) {
    if (per_group.size() != smoothed_.size())
      throw std::invalid_argument("EbState: group count mismatch");
    if (stopped_) return StopDecision{true, combined_};
    smoothed_ = beta_ * smoothed_ + (1.0 - beta_) * per_group.array();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < smoothed_.size(); ++i) acc += smoothed_[i];
    combined_ = acc / static_cast<double>(smoothed_.size());
    stopped_ = stop_at_boundary_ ? (combined_ >= 0.0) : (combined_ > 0.0);
    return StopDecision{stopped_, combined_};
  }

  bool stopped() const { return stopped_; }
  double combined() const { return combined_; }
  const Eigen::ArrayXd& smoothed() const { return smoothed_; }
  double beta() const { return beta_; }

 private:
  double beta_;
  bool stop_at_boundary_;
  bool stopped_ = false;
  double combined_ = 0.0;
  Eigen::ArrayXd smoothed_;
};

enum class MaskMode {
  // Deactivation is permanent: a coordinate whose smoothed fraction falls
  // below the threshold never trains again.
  kGreedy,
  // Coordinates toggle with the sign of their smoothed per-coordinate
  // criterion and may reactivate.
  kNonGreedy,
};

// Per-coordinate on/off mask driven by signal-to-noise fractions.
//
// Greedy mode smooths f directly (warm start f_warmup, well above the
// threshold) and switches a coordinate off for good once the smoothed value
// drops below `threshold`. Non-greedy mode smooths the per-coordinate
// criterion 1 - f starting from 1 - f_warmup and keeps a coordinate active
// while that smoothed value is <= 0.
class ElementMask {
 public:
  ElementMask(Eigen::Index dim, MaskMode mode, double beta,
              double threshold = 1.0, double f_warmup = 10.0)
      : mode_(mode),
        beta_(beta),
        threshold_(threshold),
        active_(Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(dim, true)),
        smoothed_(mode == MaskMode::kGreedy
                      ? Eigen::ArrayXd::Constant(dim, f_warmup)
                      : Eigen::ArrayXd::Constant(dim, 1.0 - f_warmup)) {
    if (dim < 1) throw std::invalid_argument("ElementMask: dim must be >= 1");
    if (!(beta >= 0.0 && beta < 1.0))
      throw std::invalid_argument("ElementMask: beta must be in [0, 1)");
  }

  void update(const Eigen::ArrayXd& f) {
    if (f.size() != smoothed_.size())
      throw std::invalid_argument("ElementMask: dimension mismatch");
    if (mode_ == MaskMode::kGreedy) {
      smoothed_ = beta_ * smoothed_ + (1.0 - beta_) * f;
      for (Eigen::Index k = 0; k < smoothed_.size(); ++k)
        active_[k] = active_[k] && smoothed_[k] >= threshold_;
    } else {
      smoothed_ = beta_ * smoothed_ + (1.0 - beta_) * (1.0 - f);
      for (Eigen::Index k = 0; k < smoothed_.size(); ++k)
        active_[k] = smoothed_[k] <= 0.0;
    }
  }

  MaskMode mode() const { return mode_; }
  Eigen::Index dim() const { return smoothed_.size(); }
  bool active(Eigen::Index k) const { return active_[k]; }
  const Eigen::Array<bool, Eigen::Dynamic, 1>& active() const {
    return active_;
  }
  // Smoothed f in greedy mode, smoothed per-coordinate criterion otherwise.
  const Eigen::ArrayXd& smoothed() const { return smoothed_; }

  Eigen::Index active_count() const {
    Eigen::Index n = 0;
    for (Eigen::Index k = 0; k < active_.size(); ++k)
      if (active_[k]) ++n;
    return n;
  }

  double off_fraction() const {
    return static_cast<double>(dim() - active_count()) /
           static_cast<double>(dim());
  }

  double off_fraction(const std::vector<int>& group) const {
    if (group.empty())
      throw std::invalid_argument("ElementMask: empty group");
    Eigen::Index off = 0;
    for (int k : group)
      if (!active_[k]) ++off;
    return static_cast<double>(off) / static_cast<double>(group.size());
  }

 private:
  MaskMode mode_;
  double beta_;
  double threshold_;
  Eigen::Array<bool, Eigen::Dynamic, 1> active_;
  Eigen::ArrayXd smoothed_;
};

// Fraction of coordinates an RMSprop-style rescaling has effectively switched
// off: coordinates whose inverse root second moment 1/sqrt(v(k)), normalized
// by the largest such value, falls strictly below `threshold`.
inline double off_fraction_rmsprop(const Eigen::VectorXd& v, double threshold) {
  if (v.size() < 1)
    throw std::invalid_argument("off_fraction_rmsprop: empty input");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument(
        "off_fraction_rmsprop: threshold must be in (0, 1)");
  detail::check_variance(v, "off_fraction_rmsprop");
  double z_max = 0.0;
  Eigen::ArrayXd z(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    z[k] = 1.0 / std::sqrt(v[k]);
    if (z[k] > z_max) z_max = z[k];
  }
  Eigen::Index off = 0;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (z[k] / z_max < threshold) ++off;
  return static_cast<double>(off) / static_cast<double>(z.size());
}

// Classic early stopping on a held-out validation loss: stop after `patience`
// consecutive evaluations without improvement over the running best. Also
// records the full evaluation history so the hindsight-optimal stopping point
// can be reported afterwards.
class ValidationStopper {
 public:
  struct Entry {
    long step;
    double loss;
  };

  ValidationStopper(int patience, int eval_interval)
      : patience_(patience), eval_interval_(eval_interval) {
    if (patience < 1)
      throw std::invalid_argument("ValidationStopper: patience must be >= 1");
    if (eval_interval < 1)
      throw std::invalid_argument(
          "ValidationStopper: eval_interval must be >= 1");
  }

  // Steps must be strictly increasing across calls. Returns true when the
  // patience budget is exhausted.
  bool update(long step, double val_loss) {
    if (!history_.empty() && step <= history_.back().step)
      throw std::invalid_argument(
          "ValidationStopper: steps must be strictly increasing");
    if (std::isnan(val_loss))
      throw std::invalid_argument("ValidationStopper: NaN validation loss");
    history_.push_back(Entry{step, val_loss});
    if (history_.size() == 1 || val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_step_ = step;
      evals_since_best_ = 0;
    } else {
      ++evals_since_best_;
    }
    return evals_since_best_ >= patience_;
  }

  int patience() const { return patience_; }
  int eval_interval() const { return eval_interval_; }
  const std::vector<Entry>& history() const { return history_; }

  // Earliest evaluation achieving the minimum recorded loss.
  long best_step() const {
    if (history_.empty())
      throw std::logic_error("ValidationStopper: no evaluations yet");
    return best_step_;
  }
  double best_loss() const {
    if (history_.empty())
      throw std::logic_error("ValidationStopper: no evaluations yet");
    return best_loss_;
  }

 private:
  int patience_;
  int eval_interval_;
  int evals_since_best_ = 0;
  long best_step_ = 0;
  double best_loss_ = 0.0;
  std::vector<Entry> history_;
};

}  // namespace ebs
