/*
 * Copyright 2026 The AMI Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense two-layer "chosen neuron" model: v(x) = h . relu(W x [+ b]),
// s(x) = sigmoid(v(x)), with analytic gradients and a small optimizer.

#ifndef AMI_LAB_TENSOR_CORE_H_
#define AMI_LAB_TENSOR_CORE_H_

#include <cstdint>

#include "Eigen/Core"
#include "absl/status/statusor.h"

namespace ami_lab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;

// A d-dimensional data point (an embedding).
using SampleVector = Vector;

// Weights of the planted neuron: r first-layer rows and the second-layer
// vector h. The bias is off unless `use_bias` is set.
struct ChosenNeuronParams {
  Matrix w;     // r x d
  Vector h;     // r
  Vector bias;  // r, all zero when unused
  bool use_bias = false;

  int neurons() const { return static_cast<int>(w.rows()); }
  int dim() const { return static_cast<int>(w.cols()); }
};

struct GradientBundle {
  Matrix dw;
  Vector dh;
  Vector dbias;
  double loss = 0.0;
};

// Rows of `x` are samples; `y` holds binary labels.
struct LabeledBatch {
  Matrix x;
  Vector y;

  int size() const { return static_cast<int>(x.rows()); }
};

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 300;
  Optimizer optimizer = Optimizer::kAdam;
  uint64_t seed = 0;
  // Loss weight of label-1 samples. Values <= 0 select the label balance
  // (#negatives / #positives) of the training batch.
  double positive_weight = 0.0;
  // Stop once the weighted loss drops to this value (0 disables).
  double target_loss = 0.0;
};

// Uniform in [-1/sqrt(d), 1/sqrt(d)] for W and [-1/sqrt(r), 1/sqrt(r)] for h.
ChosenNeuronParams InitializeParams(int r, int d, uint64_t seed,
                                    bool use_bias = false);

absl::Status ValidateParams(const ChosenNeuronParams& params);

// Pre-sigmoid value h . relu(Wx).
absl::StatusOr<double> NeuronValue(const ChosenNeuronParams& params,
                                   const SampleVector& x);
absl::StatusOr<double> NeuronForward(const ChosenNeuronParams& params,
                                     const SampleVector& x);

// Unchecked batch evaluation; one value per row of `x`.
Vector NeuronValues(const ChosenNeuronParams& params, const Matrix& x);

double Sigmoid(double v);

// Weighted mean binary cross-entropy of sigmoid(v(x)) against the labels,
// with exact gradients. Label-1 rows carry `positive_weight`.
absl::StatusOr<GradientBundle> LossAndGradients(
    const ChosenNeuronParams& params, const LabeledBatch& batch,
    double positive_weight);

// Full-batch training for cfg.epochs optimizer steps (fewer if
// cfg.target_loss is reached). Non-finite loss aborts with the epoch index.
absl::StatusOr<ChosenNeuronParams> TrainChosenNeuron(
    const ChosenNeuronParams& init, const LabeledBatch& dataset,
    const TrainConfig& cfg, double* final_loss = nullptr);

// The gradient a client reports for its batch. The chosen neuron feeds a
// ReLU and a sigmoid cross-entropy with pseudo-label 1, so its gradient is
// exactly zero unless some sample has v(x) > 0.
absl::StatusOr<GradientBundle> ClientGradient(const ChosenNeuronParams& params,
                                              const Matrix& batch);

}  // namespace ami_lab

#endif  // AMI_LAB_TENSOR_CORE_H_
