// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "mimo_doa/array_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mimo_doa {

// ---- real/imaginary stacking --------------------------------------------

/// [Re(Y); Im(Y)], shape (2 * rows) x cols.
Eigen::MatrixXd stack_real_imag(const Eigen::MatrixXcd &data);
Eigen::MatrixXd stack_real_imag(const SnapshotBlock &block);

/// Inverse of stack_real_imag. Row count must be even.
Eigen::MatrixXcd unstack_real_imag(const Eigen::MatrixXd &stacked);

// ---- min-max normalization ----------------------------------------------

/// Per-feature range, one entry per row of the data it was fitted on.
struct MinMaxStats {
    Eigen::VectorXd min;
    Eigen::VectorXd max;

    Eigen::Index size() const { return min.size(); }
    bool operator==(const MinMaxStats &o) const { return min == o.min && max == o.max; }
};

/// Range of every row over all columns. Needs at least one column.
MinMaxStats minmax_fit(const Eigen::MatrixXd &data);

/// (x - min) / (max - min). Constant features map to 0; values outside the
/// fitted range are not clamped.
Eigen::MatrixXd minmax_apply(const Eigen::MatrixXd &data, const MinMaxStats &stats);

/// x * (max - min) + min. Constant features map back to min.
Eigen::MatrixXd minmax_invert(const Eigen::MatrixXd &data, const MinMaxStats &stats);

// ---- network ------------------------------------------------------------

enum class OutputActivation : std::uint8_t { linear = 0, relu = 1 };

const char *to_string(OutputActivation a);
OutputActivation parse_output_activation(const std::string &s);

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

/// Fully connected ReLU network with normalization statistics attached.
///
/// layer_dims lists the width of every layer including input and output, e.g.
/// {2L, 2L, 2L, 2H, 2H} for the low-to-high emulator.
struct MlpModel {
    std::vector<int> layer_dims;
    std::vector<DenseLayer> layers;
    OutputActivation output_activation = OutputActivation::linear;
    MinMaxStats norm_in;
    MinMaxStats norm_out;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    std::size_t parameter_count() const;
    void validate() const;
};

/// Default emulator widths for a low/high pair: {2L, 2L, 2L, 2H, 2H}.
std::vector<int> emulator_layer_dims(const ArrayConfig &low, const ArrayConfig &high);

/// He-style uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
/// Normalization stats are set to identity (min 0, max 1).
MlpModel make_mlp(const std::vector<int> &layer_dims, OutputActivation output, std::uint64_t seed);

/// Per-layer affine outputs (pre) and activations (post). post of the last layer is the network output.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
};

struct ForwardResult {
    Eigen::VectorXd output;
    ForwardCache cache;
};

/// Single sample forward pass in normalized space.
ForwardResult mlp_forward(const MlpModel &model, const Eigen::VectorXd &input);

/// Column-batched forward pass in normalized space.
Eigen::MatrixXd mlp_forward_batch(const MlpModel &model, const Eigen::MatrixXd &inputs,
                                  ForwardCache *cache = nullptr);

struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
    double loss = 0.0;  // objective value for the batch
};

/// Objective for one sample: ||output - target||^2 / (2 * D), D = output width.
/// Batch gradient is the mean of the per-sample gradients.
double mlp_loss(const MlpModel &model, const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets);

Gradients mlp_backward(const MlpModel &model, const Eigen::VectorXd &input, const Eigen::VectorXd &target);
Gradients mlp_backward_batch(const MlpModel &model, const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets);

// ---- Adam ---------------------------------------------------------------

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::vector<Eigen::MatrixXd> m_weight, v_weight;
    std::vector<Eigen::VectorXd> m_bias, v_bias;
    std::int64_t step = 0;

    static OptimizerState zeros_like(const MlpModel &model);
};

/// One bias-corrected Adam update in place. Throws TrainingError on a non-finite gradient.
void adam_step(OptimizerState &state, MlpModel &model, const Gradients &grads, const AdamParams &adam);

// ---- training -----------------------------------------------------------

/// Paired training samples, one column per sample.
struct Dataset {
    Eigen::MatrixXd inputs;          // 2L x S
    Eigen::MatrixXd targets;         // 2H x S
    std::vector<float> snr_db;       // S labels

    Eigen::Index size() const { return inputs.cols(); }
};

struct TrainConfig {
    int epochs = 150;
    int batch_size = 120;
    AdamParams adam;
    double train_fraction = 0.6;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    OutputActivation output_activation = OutputActivation::linear;
    std::uint64_t seed = 1;

    void validate() const;
};

struct LossHistory {
    double initial_train = 0.0;
    double initial_val = 0.0;
    std::vector<double> train;  // MSE in normalized space after each epoch
    std::vector<double> val;
    int best_epoch = -1;        // 0-based; -1 if no validation data (last epoch kept)
};

struct TrainResult {
    MlpModel model;
    LossHistory history;
};

/// Contiguous split of sample indices: [0, n_train) train, then val, then test.
struct SplitIndices {
    Eigen::Index train_end = 0;
    Eigen::Index val_end = 0;
    Eigen::Index total = 0;
};
SplitIndices split_indices(Eigen::Index total, const TrainConfig &cfg);

/// Fits normalization on the training split, runs Adam over seeded shuffled
/// minibatches and returns the weights of the best validation epoch.
TrainResult train(const Dataset &data, const TrainConfig &cfg);

/// Low-array block to emulated high-array block. Columns are processed independently.
SnapshotBlock predict(const MlpModel &model, const SnapshotBlock &low, const ArrayConfig &high);

// ---- model file ---------------------------------------------------------

void save_model(const MlpModel &model, const std::filesystem::path &path);
MlpModel load_model(const std::filesystem::path &path);

} // namespace mimo_doa
