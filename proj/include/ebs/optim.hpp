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

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebs/grad_stats.hpp"
#include "ebs/numerics.hpp"
#include "ebs/problem.hpp"
#include "ebs/stopping.hpp"

namespace ebs {

// Raised when a training loss or gradient turns non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, const std::string& what)
      : std::runtime_error("diverged at step " + std::to_string(step) + ": " +
                           what),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

enum class OptimizerKind {
  kGd,
  kSgd,
  kRmsprop,
  kMaskedSgdGreedy,
  kMaskedSgdNonGreedy,
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kGd;
  double learning_rate = 0.01;
  int batch_size = 0;  // mini-batch size for SGD variants; 0 means full batch
  double rmsprop_gamma = 0.95;
  double rmsprop_epsilon = 1e-8;
  double mask_beta = 0.99;
  double mask_threshold = 1.0;
  double mask_f_warmup = 10.0;
  double rmsprop_off_threshold = 0.1;  // logging threshold, not a step control
};

// Plain gradient descent update w - lr * grad.
inline Eigen::VectorXd gd_step(const Eigen::VectorXd& w,
                               const Eigen::VectorXd& grad, double lr) {
  if (w.size() != grad.size())
    throw std::invalid_argument("gd_step: dimension mismatch");
  return w - lr * grad;
}

// Gradient step that freezes masked-off coordinates at their current value
// (frozen, not zeroed). With an all-active mask this is exactly gd_step.
inline Eigen::VectorXd masked_sgd_step(const Eigen::VectorXd& w,
                                       const Eigen::VectorXd& grad,
                                       const ElementMask& mask, double lr) {
  if (w.size() != grad.size() || w.size() != mask.dim())
    throw std::invalid_argument("masked_sgd_step: dimension mismatch");
  Eigen::VectorXd out = w;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (mask.active(k)) out[k] = w[k] - lr * grad[k];
  return out;
}

// RMSprop update:
//   v' = gamma * v + (1 - gamma) * grad^2
//   w' = w - lr * grad / (sqrt(v') + eps)
// Returns the new iterate and second-moment estimate.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> rmsprop_step(
    const Eigen::VectorXd& w, const Eigen::VectorXd& grad,
    const Eigen::VectorXd& v, double lr, double gamma, double eps) {
  if (w.size() != grad.size() || w.size() != v.size())
    throw std::invalid_argument("rmsprop_step: dimension mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("rmsprop_step: gamma must be in [0, 1)");
  if (eps < 0.0) throw std::invalid_argument("rmsprop_step: eps must be >= 0");
  Eigen::VectorXd v_new(v.size());
  Eigen::VectorXd w_new(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    v_new[k] = gamma * v[k] + (1.0 - gamma) * grad[k] * grad[k];
    w_new[k] = w[k] - lr * grad[k] / (std::sqrt(v_new[k]) + eps);
  }
  return {std::move(w_new), std::move(v_new)};
}

// Accumulates per-sample gradients of `batch` into `moments` and takes a
// plain gradient step with their mean. Returns (new iterate, batch mean
// loss).
inline std::pair<Eigen::VectorXd, double> sgd_step(
    const Eigen::VectorXd& w, const std::vector<int>& batch,
    const Problem& problem, double lr, GradMoments& moments) {
  if (batch.empty()) throw std::invalid_argument("sgd_step: empty batch");
  moments.reset();
  Eigen::VectorXd g(w.size());
  double loss = 0.0;
  for (int sample : batch) {
    loss += problem.sample_loss_grad(w, sample, g);
    moments.accumulate(g);
  }
  return {gd_step(w, moments.mean(), lr),
          loss / static_cast<double>(batch.size())};
}

enum class StopperKind { kNone, kEb, kValidation };

struct StopperConfig {
  StopperKind kind = StopperKind::kEb;
  double eb_beta = 0.99;
  double eb_warmup = -9.0;
  bool eb_grouped = false;  // evaluate per parameter group instead of globally
  bool eb_stop_at_boundary = true;
  int patience = 10;
  int eval_interval = 1;
};

enum class StopReason { kMaxSteps, kEbCriterion, kValidationPatience };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kMaxSteps: return "max_steps";
    case StopReason::kEbCriterion: return "stop_eb";
    case StopReason::kValidationPatience: return "stop_validation";
  }
  return "unknown";
}

// One logged snapshot. `step` counts optimizer updates already applied to
// the recorded iterate. Optional quantities are empty / NaN when the run
// configuration does not produce them.
struct TrainRecord {
  long step = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd criterion_groups;  // raw per-group criterion values
  double criterion_smoothed = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd off_fraction_groups;
  double off_fraction = std::numeric_limits<double>::quiet_NaN();
  std::string event;  // "", "stop_eb", "stop_validation", "max_steps"
};

struct RunSummary {
  StopReason reason = StopReason::kMaxSteps;
  long stop_step = 0;
  double train_loss_at_stop = std::numeric_limits<double>::quiet_NaN();
  double test_loss_at_stop = std::numeric_limits<double>::quiet_NaN();
  double criterion_at_stop = std::numeric_limits<double>::quiet_NaN();
  long hindsight_best_step = 0;  // earliest logged step minimizing test loss
  double hindsight_best_test_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;  // kept in memory only, never serialized
  std::vector<TrainRecord> records;
};

struct TrainOptions {
  long max_steps = 10000;
  // 0 selects a default: every step up to dimension 1000, every 10th above.
  long log_interval = 0;
};

using RecordSink = std::function<void(const TrainRecord&)>;

namespace detail {

inline void check_finite(const Eigen::VectorXd& v, long step,
                         const char* what) {
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k]))
      throw DivergenceError(step, std::string(what) + " has a non-finite entry");
}

}  // namespace detail

// Runs the optimizer from w0 until the configured stopper fires or
// max_steps updates have been applied, whichever comes first.
//
// Each iteration evaluates the gradient (and, when a criterion or mask
// needs it, the per-sample variance) at the current iterate, feeds the
// stopper and mask, logs, and only then steps; the reported stop point is
// therefore the iterate whose gradient triggered the stop. Mini-batches are
// drawn uniformly without replacement from `batch_rng`; a batch covering
// the whole training set keeps the natural sample order and consumes no
// randomness, so SGD with batch_size == train size reproduces GD exactly.
inline RunSummary train_loop(const Problem& problem, const OptimizerConfig& opt,
                             const StopperConfig& stop,
                             const TrainOptions& options,
                             const Eigen::VectorXd& w0, RngStream batch_rng,
                             const RecordSink& sink = {}) {
  const int dim = problem.dim();
  if (w0.size() != dim)
    throw std::invalid_argument("train_loop: w0 dimension mismatch");
  if (options.max_steps < 1)
    throw std::invalid_argument("train_loop: max_steps must be >= 1");

  const bool analytic = problem.analytic_noise();
  const bool masked = opt.kind == OptimizerKind::kMaskedSgdGreedy ||
                      opt.kind == OptimizerKind::kMaskedSgdNonGreedy;
  const bool uses_eb = stop.kind == StopperKind::kEb;
  const bool uses_fractions = uses_eb || masked;
  const int train_n = problem.train_size();

  if (analytic) {
    if (opt.kind != OptimizerKind::kGd && opt.kind != OptimizerKind::kRmsprop)
      throw std::invalid_argument(
          "train_loop: analytic problems support only gd or rmsprop");
  } else {
    if (train_n < 1)
      throw std::invalid_argument("train_loop: problem has no training data");
  }
  if (uses_eb && opt.kind == OptimizerKind::kRmsprop)
    throw std::invalid_argument(
        "train_loop: the evidence criterion assumes plain gradient steps; "
        "rmsprop runs must use stopper none or validation");
  if (stop.kind == StopperKind::kValidation && !problem.has_validation())
    throw std::invalid_argument(
        "train_loop: validation stopper needs a validation split");

  int batch_size = train_n;
  if (!analytic) {
    const bool batched = opt.kind == OptimizerKind::kSgd || masked;
    if (batched && opt.batch_size != 0) batch_size = opt.batch_size;
    if (batch_size < 1 || batch_size > train_n)
      throw std::invalid_argument("train_loop: batch_size must be in [1, " +
                                  std::to_string(train_n) + "]");
    if (uses_fractions && batch_size < 2)
      throw std::invalid_argument(
          "train_loop: variance estimation needs batch_size >= 2");
  }

  const long log_interval =
      options.log_interval > 0 ? options.log_interval : (dim <= 1000 ? 1 : 10);

  const Partition eb_partition = (uses_eb && stop.eb_grouped)
                                     ? problem.parameter_groups()
                                     : Partition::single(dim);
  const Partition mask_partition =
      masked ? problem.parameter_groups() : Partition::single(dim);

  std::optional<EbState> eb_state;
  if (uses_eb)
    eb_state.emplace(eb_partition.group_count(), stop.eb_beta, stop.eb_warmup,
                     stop.eb_stop_at_boundary);
  std::optional<ElementMask> mask;
  if (masked)
    mask.emplace(dim,
                 opt.kind == OptimizerKind::kMaskedSgdGreedy
                     ? MaskMode::kGreedy
                     : MaskMode::kNonGreedy,
                 opt.mask_beta, opt.mask_threshold, opt.mask_f_warmup);
  std::optional<ValidationStopper> val_stop;
  if (stop.kind == StopperKind::kValidation)
    val_stop.emplace(stop.patience, stop.eval_interval);

  GradMoments moments(dim);
  std::vector<int> pool;
  if (!analytic) {
    pool.resize(static_cast<std::size_t>(train_n));
    for (int i = 0; i < train_n; ++i) pool[static_cast<std::size_t>(i)] = i;
  }

  Eigen::VectorXd w = w0;
  Eigen::VectorXd v_rms;
  if (opt.kind == OptimizerKind::kRmsprop) v_rms = Eigen::VectorXd::Zero(dim);

  RunSummary summary;
  const auto t_begin = std::chrono::steady_clock::now();

  Eigen::VectorXd step_grad(dim);
  Eigen::VectorXd sample_grad(dim);

  for (long t = 0;; ++t) {
    // Gradient and, if needed, noise statistics at the current iterate.
    double batch_loss = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd crit_var;
    double effective_size = 1.0;
    if (analytic) {
      step_grad = problem.full_gradient(w);
      if (uses_fractions) crit_var = problem.criterion_noise();
    } else {
      if (batch_size == train_n) {
        // Full batch in natural order; no randomness consumed.
      } else {
        for (int i = 0; i < batch_size; ++i) {
          const auto j = i + static_cast<int>(batch_rng.next_below(
                                 static_cast<std::uint64_t>(train_n - i)));
          std::swap(pool[static_cast<std::size_t>(i)],
                    pool[static_cast<std::size_t>(j)]);
        }
      }
      double loss_acc = 0.0;
      moments.reset();
      for (int i = 0; i < batch_size; ++i) {
        const int sample = (batch_size == train_n)
                               ? i
                               : pool[static_cast<std::size_t>(i)];
        loss_acc += problem.sample_loss_grad(w, sample, sample_grad);
        moments.accumulate(sample_grad);
      }
      batch_loss = loss_acc / static_cast<double>(batch_size);
      if (!std::isfinite(batch_loss))
        throw DivergenceError(t, "batch loss is non-finite");
      if (uses_fractions) {
        auto m = moments.finalize();
        step_grad = std::move(m.mean);
        crit_var = std::move(m.variance);
      } else {
        step_grad = moments.mean();
      }
      effective_size = static_cast<double>(batch_size);
    }
    detail::check_finite(step_grad, t, "gradient");

    // Criterion, stopper and mask updates for the current iterate.
    bool stopping = false;
    GroupedCriterion grouped;
    Eigen::ArrayXd fractions;
    if (uses_fractions) {
      fractions = snr_fractions(step_grad, crit_var, effective_size);
      if (uses_eb) {
        grouped = grouped_criterion_from_fractions(fractions, eb_partition);
        const StopDecision dec = eb_state->update_and_decide(grouped.per_group);
        if (dec.stop) {
          stopping = true;
          summary.reason = StopReason::kEbCriterion;
        }
      }
      if (mask) mask->update(fractions);
    }
    if (val_stop && t % val_stop->eval_interval() == 0) {
      const double vl = problem.validation_loss(w);
      if (!std::isfinite(vl)) throw DivergenceError(t, "validation loss");
      if (val_stop->update(t, vl) && !stopping) {
        stopping = true;
        summary.reason = StopReason::kValidationPatience;
      }
    }
    const bool at_horizon = t == options.max_steps;
    if (at_horizon && !stopping) summary.reason = StopReason::kMaxSteps;

    // Snapshot before stepping, so records describe the pre-step iterate.
    if (t % log_interval == 0 || stopping || at_horizon) {
      TrainRecord rec;
      rec.step = t;
      if (analytic) {
        const auto losses = problem.losses_with_gradient(w, step_grad);
        rec.train_loss = losses.first;
        rec.test_loss = losses.second;
      } else {
        rec.train_loss = problem.train_loss(w);
        rec.test_loss = problem.test_loss(w);
      }
      if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.test_loss))
        throw DivergenceError(t, "logged loss is non-finite");
      if (problem.has_validation()) rec.val_loss = problem.validation_loss(w);
      if (uses_eb) {
        rec.criterion_groups = grouped.per_group;
        rec.criterion_smoothed = eb_state->combined();
      }
      if (mask) {
        rec.off_fraction = mask->off_fraction();
        rec.off_fraction_groups.resize(mask_partition.group_count());
        for (int gi = 0; gi < mask_partition.group_count(); ++gi)
          rec.off_fraction_groups[gi] =
              mask->off_fraction(mask_partition.group(gi));
      }
      if (opt.kind == OptimizerKind::kRmsprop && t > 0 &&
          (v_rms.array() > 0.0).all())
        rec.off_fraction =
            off_fraction_rmsprop(v_rms, opt.rmsprop_off_threshold);
      if (stopping || at_horizon) rec.event = to_string(summary.reason);
      if (sink) sink(rec);
      summary.records.push_back(std::move(rec));
    }

    if (stopping || at_horizon) {
      summary.stop_step = t;
      break;
    }

    // Apply the update.
    switch (opt.kind) {
      case OptimizerKind::kGd:
      case OptimizerKind::kSgd:
        w = gd_step(w, step_grad, opt.learning_rate);
        break;
      case OptimizerKind::kRmsprop: {
        auto next = rmsprop_step(w, step_grad, v_rms, opt.learning_rate,
                                 opt.rmsprop_gamma, opt.rmsprop_epsilon);
        w = std::move(next.first);
        v_rms = std::move(next.second);
        break;
      }
      case OptimizerKind::kMaskedSgdGreedy:
      case OptimizerKind::kMaskedSgdNonGreedy:
        w = masked_sgd_step(w, step_grad, *mask, opt.learning_rate);
        break;
    }
  }

  const auto& last = summary.records.back();
  summary.train_loss_at_stop = last.train_loss;
  summary.test_loss_at_stop = last.test_loss;
  if (uses_eb) summary.criterion_at_stop = eb_state->combined();
  summary.hindsight_best_step = summary.records.front().step;
  summary.hindsight_best_test_loss = summary.records.front().test_loss;
  for (const auto& rec : summary.records) {
    if (rec.test_loss < summary.hindsight_best_test_loss) {
      summary.hindsight_best_test_loss = rec.test_loss;
      summary.hindsight_best_step = rec.step;
    }
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return summary;
}

}  // namespace ebs
