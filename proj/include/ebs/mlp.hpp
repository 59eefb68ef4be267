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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebs/numerics.hpp"
#include "ebs/problems.hpp"

namespace ebs {

// Fully connected ReLU network with a softmax cross-entropy head.
//
// Parameters live in one flat vector laid out layer by layer, weight matrix
// (column-major) before bias: [W1, b1, W2, b2, ...]. parameter_groups()
// mirrors that layout with one group per weight matrix and one per bias
// vector, so gradients line up with the partition by construction.
struct MlpArchitecture {
  std::vector<int> layer_sizes;  // input, hidden..., output

  explicit MlpArchitecture(std::vector<int> sizes)
      : layer_sizes(std::move(sizes)) {
    if (layer_sizes.size() < 2)
      throw std::invalid_argument(
          "MlpArchitecture: need at least input and output layers");
    for (int s : layer_sizes)
      if (s < 1)
        throw std::invalid_argument("MlpArchitecture: layer sizes must be >= 1");
    if (layer_sizes.back() < 2)
      throw std::invalid_argument(
          "MlpArchitecture: softmax output needs >= 2 classes");
  }

  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int inputs() const { return layer_sizes.front(); }
  int outputs() const { return layer_sizes.back(); }

  int weight_offset(int layer) const {
    int off = 0;
    for (int l = 0; l < layer; ++l)
      off += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
    return off;
  }
  int bias_offset(int layer) const {
    return weight_offset(layer) + layer_sizes[layer + 1] * layer_sizes[layer];
  }
  int param_count() const { return weight_offset(layer_count()); }

  Partition parameter_groups() const {
    std::vector<std::vector<int>> groups;
    std::vector<std::string> labels;
    for (int l = 0; l < layer_count(); ++l) {
      const int w_off = weight_offset(l);
      const int w_len = layer_sizes[l + 1] * layer_sizes[l];
      std::vector<int> w_group(static_cast<std::size_t>(w_len));
      for (int k = 0; k < w_len; ++k)
        w_group[static_cast<std::size_t>(k)] = w_off + k;
      groups.push_back(std::move(w_group));
      labels.push_back("W" + std::to_string(l + 1));
      const int b_off = bias_offset(l);
      std::vector<int> b_group(static_cast<std::size_t>(layer_sizes[l + 1]));
      for (int k = 0; k < layer_sizes[l + 1]; ++k)
        b_group[static_cast<std::size_t>(k)] = b_off + k;
      groups.push_back(std::move(b_group));
      labels.push_back("b" + std::to_string(l + 1));
    }
    return Partition(param_count(), std::move(groups), std::move(labels));
  }
};

// Loss (and gradient, when grad_out is non-null) of one sample under the
// network: hidden layers apply ReLU, the head is softmax cross entropy
// evaluated through a log-sum-exp shifted by the max logit. Backpropagation
// is written out directly against the flat layout above.
inline double mlp_loss_grad(const MlpArchitecture& arch,
                            const Eigen::VectorXd& params,
                            const Eigen::VectorXd& x, int label,
                            Eigen::VectorXd* grad_out) {
  if (params.size() != arch.param_count())
    throw std::invalid_argument("mlp_loss_grad: parameter size mismatch");
  if (x.size() != arch.inputs())
    throw std::invalid_argument("mlp_loss_grad: input size mismatch");
  if (label < 0 || label >= arch.outputs())
    throw std::invalid_argument("mlp_loss_grad: label out of range");

  const int layers = arch.layer_count();
  std::vector<Eigen::VectorXd> activations(static_cast<std::size_t>(layers) + 1);
  std::vector<Eigen::VectorXd> pre(static_cast<std::size_t>(layers));
  activations[0] = x;
  for (int l = 0; l < layers; ++l) {
    const Eigen::Map<const Eigen::MatrixXd> w(
        params.data() + arch.weight_offset(l), arch.layer_sizes[l + 1],
        arch.layer_sizes[l]);
    const Eigen::Map<const Eigen::VectorXd> b(params.data() + arch.bias_offset(l),
                                              arch.layer_sizes[l + 1]);
    pre[static_cast<std::size_t>(l)] =
        w * activations[static_cast<std::size_t>(l)] + b;
    if (l + 1 < layers) {
      activations[static_cast<std::size_t>(l) + 1] =
          pre[static_cast<std::size_t>(l)].cwiseMax(0.0);
    } else {
      activations[static_cast<std::size_t>(l) + 1] =
          pre[static_cast<std::size_t>(l)];
    }
  }

  const Eigen::VectorXd& logits = activations[static_cast<std::size_t>(layers)];
  const double z_max = logits.maxCoeff();
  const double lse =
      z_max + std::log((logits.array() - z_max).exp().sum());
  const double loss = lse - logits[label];
  if (!grad_out) return loss;

  grad_out->resize(arch.param_count());
  Eigen::VectorXd delta = (logits.array() - lse).exp().matrix();
  delta[label] -= 1.0;
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd> gw(grad_out->data() + arch.weight_offset(l),
                                   arch.layer_sizes[l + 1], arch.layer_sizes[l]);
    Eigen::Map<Eigen::VectorXd> gb(grad_out->data() + arch.bias_offset(l),
                                   arch.layer_sizes[l + 1]);
    gw = delta * activations[static_cast<std::size_t>(l)].transpose();
    gb = delta;
    if (l > 0) {
      const Eigen::Map<const Eigen::MatrixXd> w(
          params.data() + arch.weight_offset(l), arch.layer_sizes[l + 1],
          arch.layer_sizes[l]);
      delta = (w.transpose() * delta).array() *
              (pre[static_cast<std::size_t>(l) - 1].array() > 0.0).cast<double>();
    }
  }
  return loss;
}

inline std::pair<double, Eigen::VectorXd> mlp_forward_backward(
    const MlpArchitecture& arch, const Eigen::VectorXd& params,
    const Eigen::VectorXd& x, int label) {
  Eigen::VectorXd grad;
  const double loss = mlp_loss_grad(arch, params, x, label, &grad);
  return {loss, std::move(grad)};
}

// Multi-class classification over a SupervisedDataset whose targets are
// integer class ids stored as doubles.
class MlpProblem final : public DatasetProblem {
 public:
  MlpProblem(MlpArchitecture arch, SupervisedDataset data)
      : DatasetProblem(std::move(data)), arch_(std::move(arch)) {
    if (data_.feature_dim() != arch_.inputs())
      throw std::invalid_argument("MlpProblem: feature/input size mismatch");
    for (Eigen::Index i = 0; i < data_.targets.size(); ++i) {
      const double t = data_.targets[i];
      if (t != std::floor(t) || t < 0.0 || t >= arch_.outputs())
        throw std::invalid_argument("MlpProblem: target is not a valid class");
    }
  }

  std::string name() const override { return "mlp"; }
  int dim() const override { return arch_.param_count(); }
  Partition parameter_groups() const override {
    return arch_.parameter_groups();
  }

  // He-scaled Gaussian weights (std sqrt(2 / fan_in)), zero biases. Weight
  // entries are drawn in flat-layout order.
  Eigen::VectorXd initial_point(RngStream& rng) const override {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(arch_.param_count());
    for (int l = 0; l < arch_.layer_count(); ++l) {
      const double stddev = std::sqrt(2.0 / arch_.layer_sizes[l]);
      const int off = arch_.weight_offset(l);
      const int len = arch_.layer_sizes[l + 1] * arch_.layer_sizes[l];
      for (int k = 0; k < len; ++k)
        w[off + k] = stddev * rng.next_gaussian();
    }
    return w;
  }

  const MlpArchitecture& architecture() const { return arch_; }

 protected:
  double row_loss_grad(const Eigen::VectorXd& w, int row,
                       Eigen::VectorXd* grad_out) const override {
    return mlp_loss_grad(arch_, w, data_.features.row(row).transpose(),
                         static_cast<int>(data_.targets[row]), grad_out);
  }

 private:
  MlpArchitecture arch_;
};

}  // namespace ebs
