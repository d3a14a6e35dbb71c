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

#include "ami_lab/tensor_core.h"

#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/seeds.h"

namespace ami_lab {
namespace {

// log(1 + exp(v)) without overflow.
double Softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

absl::Status CheckDims(const ChosenNeuronParams& params, Eigen::Index cols) {
  if (cols != params.w.cols()) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape error: sample dimension ", cols,
                     " does not match weight columns ", params.w.cols()));
  }
  return absl::OkStatus();
}

// Z = X W^T (+ bias), the first-layer pre-activations, one row per sample.
Matrix PreActivations(const ChosenNeuronParams& params, const Matrix& x) {
  Matrix z = x * params.w.transpose();
  if (params.use_bias) z.rowwise() += params.bias.transpose();
  return z;
}

// Backpropagates per-sample dL/dv through h . relu(z).
void Backprop(const ChosenNeuronParams& params, const Matrix& x,
              const Matrix& z, const Vector& dv, GradientBundle& out) {
  const Matrix a = z.cwiseMax(0.0);
  out.dh = a.transpose() * dv;
  Matrix dz = dv * params.h.transpose();
  dz = (z.array() > 0.0).select(dz, 0.0);
  out.dw = dz.transpose() * x;
  if (params.use_bias) {
    out.dbias = dz.colwise().sum().transpose();
  } else {
    out.dbias = Vector::Zero(params.h.size());
  }
}

}  // namespace

double Sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

ChosenNeuronParams InitializeParams(int r, int d, uint64_t seed,
                                    bool use_bias) {
  Rng rng(seed);
  std::uniform_real_distribution<double> w_dist(-1.0 / std::sqrt(d),
                                                1.0 / std::sqrt(d));
  std::uniform_real_distribution<double> h_dist(-1.0 / std::sqrt(r),
                                                1.0 / std::sqrt(r));
  ChosenNeuronParams params;
  params.w.resize(r, d);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < d; ++j) params.w(i, j) = w_dist(rng);
  }
  params.h.resize(r);
  for (int i = 0; i < r; ++i) params.h(i) = h_dist(rng);
  params.bias = Vector::Zero(r);
  params.use_bias = use_bias;
  return params;
}

absl::Status ValidateParams(const ChosenNeuronParams& params) {
  if (params.w.rows() < 1 || params.w.cols() < 1) {
    return absl::InvalidArgumentError("shape error: empty weight matrix");
  }
  if (params.h.size() != params.w.rows() ||
      params.bias.size() != params.w.rows()) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape error: h has ", params.h.size(), " entries, bias ",
                     params.bias.size(), ", W has ", params.w.rows(), " rows"));
  }
  if (!params.w.allFinite() || !params.h.allFinite() ||
      !params.bias.allFinite()) {
    return absl::InvalidArgumentError("non-finite parameter");
  }
  return absl::OkStatus();
}

Vector NeuronValues(const ChosenNeuronParams& params, const Matrix& x) {
  return PreActivations(params, x).cwiseMax(0.0) * params.h;
}

absl::StatusOr<double> NeuronValue(const ChosenNeuronParams& params,
                                   const SampleVector& x) {
  if (absl::Status s = CheckDims(params, x.size()); !s.ok()) return s;
  if (params.h.size() != params.w.rows()) {
    return absl::InvalidArgumentError("shape error: h does not match W rows");
  }
  Vector z = params.w * x;
  if (params.use_bias) z += params.bias;
  return params.h.dot(z.cwiseMax(0.0));
}

absl::StatusOr<double> NeuronForward(const ChosenNeuronParams& params,
                                     const SampleVector& x) {
  absl::StatusOr<double> v = NeuronValue(params, x);
  if (!v.ok()) return v.status();
  return Sigmoid(*v);
}

absl::StatusOr<GradientBundle> LossAndGradients(
    const ChosenNeuronParams& params, const LabeledBatch& batch,
    double positive_weight) {
  if (batch.size() == 0) {
    return absl::InvalidArgumentError("usage error: empty batch");
  }
  if (batch.y.size() != batch.x.rows()) {
    return absl::InvalidArgumentError("shape error: label count mismatch");
  }
  if (absl::Status s = CheckDims(params, batch.x.cols()); !s.ok()) return s;
  if (!(positive_weight > 0.0)) {
    return absl::InvalidArgumentError("positive_weight must be > 0");
  }
  const int n = batch.size();
  Vector weights(n);
  double total_weight = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = batch.y(i);
    if (y != 0.0 && y != 1.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("usage error: label ", y, " at row ", i,
                       " is not binary"));
    }
    weights(i) = y == 1.0 ? positive_weight : 1.0;
    total_weight += weights(i);
  }

  const Matrix z = PreActivations(params, batch.x);
  const Vector v = z.cwiseMax(0.0) * params.h;
  GradientBundle out;
  Vector dv(n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    loss += weights(i) * (Softplus(v(i)) - batch.y(i) * v(i));
    dv(i) = weights(i) * (Sigmoid(v(i)) - batch.y(i)) / total_weight;
  }
  out.loss = loss / total_weight;
  Backprop(params, batch.x, z, dv, out);
  return out;
}

absl::StatusOr<ChosenNeuronParams> TrainChosenNeuron(
    const ChosenNeuronParams& init, const LabeledBatch& dataset,
    const TrainConfig& cfg, double* final_loss) {
  if (absl::Status s = ValidateParams(init); !s.ok()) return s;
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
    return absl::InvalidArgumentError("learning rate must lie in (0, 1]");
  }
  if (cfg.epochs < 0) {
    return absl::InvalidArgumentError("epochs must be non-negative");
  }
  const Eigen::Index positives = (dataset.y.array() == 1.0).count();
  const Eigen::Index negatives = dataset.size() - positives;
  if (positives < 1 || negatives < 1) {
    return absl::InvalidArgumentError(
        "usage error: training needs at least one positive and one negative");
  }
  const double pos_weight =
      cfg.positive_weight > 0.0
          ? cfg.positive_weight
          : static_cast<double>(negatives) / static_cast<double>(positives);

  ChosenNeuronParams params = init;
  const bool adam = cfg.optimizer == Optimizer::kAdam;
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  Matrix m_w = Matrix::Zero(params.w.rows(), params.w.cols());
  Matrix v_w = m_w;
  Vector m_h = Vector::Zero(params.h.size());
  Vector v_h = m_h;
  Vector m_b = m_h;
  Vector v_b = m_h;
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  double loss = std::numeric_limits<double>::quiet_NaN();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    absl::StatusOr<GradientBundle> grads =
        LossAndGradients(params, dataset, pos_weight);
    if (!grads.ok()) return grads.status();
    loss = grads->loss;
    if (!std::isfinite(loss)) {
      return absl::AbortedError(
          absl::StrCat("training diverged at epoch ", epoch));
    }
    if (cfg.target_loss > 0.0 && loss <= cfg.target_loss) break;
    if (adam) {
      beta1_power *= kBeta1;
      beta2_power *= kBeta2;
      const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_power) /
                          (1.0 - beta1_power);
      m_w = kBeta1 * m_w + (1.0 - kBeta1) * grads->dw;
      v_w = kBeta2 * v_w + (1.0 - kBeta2) * grads->dw.cwiseAbs2();
      params.w.array() -=
          step * m_w.array() / (v_w.array().sqrt() + kAdamEps);
      m_h = kBeta1 * m_h + (1.0 - kBeta1) * grads->dh;
      v_h = kBeta2 * v_h + (1.0 - kBeta2) * grads->dh.cwiseAbs2();
      params.h.array() -=
          step * m_h.array() / (v_h.array().sqrt() + kAdamEps);
      if (params.use_bias) {
        m_b = kBeta1 * m_b + (1.0 - kBeta1) * grads->dbias;
        v_b = kBeta2 * v_b + (1.0 - kBeta2) * grads->dbias.cwiseAbs2();
        params.bias.array() -=
            step * m_b.array() / (v_b.array().sqrt() + kAdamEps);
      }
    } else {
      params.w -= cfg.learning_rate * grads->dw;
      params.h -= cfg.learning_rate * grads->dh;
      if (params.use_bias) params.bias -= cfg.learning_rate * grads->dbias;
    }
  }
  if (final_loss != nullptr) {
    absl::StatusOr<GradientBundle> last =
        LossAndGradients(params, dataset, pos_weight);
    if (!last.ok()) return last.status();
    if (!std::isfinite(last->loss)) {
      return absl::AbortedError(
          absl::StrCat("training diverged at epoch ", cfg.epochs));
    }
    *final_loss = last->loss;
  }
  return params;
}

absl::StatusOr<GradientBundle> ClientGradient(const ChosenNeuronParams& params,
                                              const Matrix& batch) {
  if (batch.rows() == 0) {
    return absl::InvalidArgumentError("usage error: empty client batch");
  }
  if (absl::Status s = CheckDims(params, batch.cols()); !s.ok()) return s;
  const int n = static_cast<int>(batch.rows());
  const Matrix z = PreActivations(params, batch);
  const Vector v = z.cwiseMax(0.0) * params.h;
  GradientBundle out;
  Vector dv = Vector::Zero(n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = std::max(v(i), 0.0);
    loss += Softplus(u) - u;
    // d/dv of -log sigmoid(relu(v)); relu'(0) is taken as 0.
    if (v(i) > 0.0) dv(i) = (Sigmoid(u) - 1.0) / n;
  }
  out.loss = loss / n;
  Backprop(params, batch, z, dv, out);
  return out;
}

}  // namespace ami_lab
