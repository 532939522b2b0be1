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

#include "mimo_doa/neural_emulator.hpp"

#include "mimo_doa/error.hpp"
#include "mimo_doa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mimo_doa {

Eigen::MatrixXd stack_real_imag(const Eigen::MatrixXcd &data) {
    Eigen::MatrixXd out(2 * data.rows(), data.cols());
    out.topRows(data.rows()) = data.real();
    out.bottomRows(data.rows()) = data.imag();
    return out;
}

Eigen::MatrixXd stack_real_imag(const SnapshotBlock &block) { return stack_real_imag(block.data); }

Eigen::MatrixXcd unstack_real_imag(const Eigen::MatrixXd &stacked) {
    require(stacked.rows() % 2 == 0, "stacked real/imag data must have an even row count");
    const Eigen::Index n = stacked.rows() / 2;
    Eigen::MatrixXcd out(n, stacked.cols());
    out.real() = stacked.topRows(n);
    out.imag() = stacked.bottomRows(n);
    return out;
}

MinMaxStats minmax_fit(const Eigen::MatrixXd &data) {
    require(data.cols() >= 1, "min-max fit needs at least one sample");
    return {data.rowwise().minCoeff(), data.rowwise().maxCoeff()};
}

Eigen::MatrixXd minmax_apply(const Eigen::MatrixXd &data, const MinMaxStats &stats) {
    require(stats.size() == data.rows(), "normalization stats do not match the feature count");
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index f = 0; f < data.rows(); ++f) {
        const double span = stats.max[f] - stats.min[f];
        if (span > 0.0) {
            out.row(f) = (data.row(f).array() - stats.min[f]) / span;
        } else {
            out.row(f).setZero();
        }
    }
    return out;
}

Eigen::MatrixXd minmax_invert(const Eigen::MatrixXd &data, const MinMaxStats &stats) {
    require(stats.size() == data.rows(), "normalization stats do not match the feature count");
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index f = 0; f < data.rows(); ++f) {
        const double span = stats.max[f] - stats.min[f];
        out.row(f) = data.row(f).array() * span + stats.min[f];
    }
    return out;
}

const char *to_string(OutputActivation a) { return a == OutputActivation::relu ? "relu" : "linear"; }

OutputActivation parse_output_activation(const std::string &s) {
    if (s == "linear") {
        return OutputActivation::linear;
    }
    if (s == "relu") {
        return OutputActivation::relu;
    }
    throw DomainError("unknown output activation '" + s + "' (expected linear or relu)");
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers) {
        n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    }
    return n;
}

void MlpModel::validate() const {
    require(layer_dims.size() >= 2, "network needs at least an input and an output layer");
    require(layers.size() + 1 == layer_dims.size(), "layer list does not match layer_dims");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto &l = layers[i];
        require(l.weight.rows() == layer_dims[i + 1] && l.weight.cols() == layer_dims[i] &&
                    l.bias.size() == layer_dims[i + 1],
                "layer " + std::to_string(i) + " has inconsistent dimensions");
        require(l.weight.allFinite() && l.bias.allFinite(), "layer " + std::to_string(i) + " has non-finite parameters");
    }
    require(norm_in.size() == input_dim() && norm_out.size() == output_dim(),
            "normalization stats do not match network input/output widths");
    require((norm_in.max.array() >= norm_in.min.array()).all() && (norm_out.max.array() >= norm_out.min.array()).all(),
            "normalization stats must satisfy max >= min");
}

std::vector<int> emulator_layer_dims(const ArrayConfig &low, const ArrayConfig &high) {
    const int in = 2 * low.virtual_size();
    const int out = 2 * high.virtual_size();
    return {in, in, in, out, out};
}

MlpModel make_mlp(const std::vector<int> &layer_dims, OutputActivation output, std::uint64_t seed) {
    require(layer_dims.size() >= 2, "network needs at least an input and an output layer");
    for (int d : layer_dims) {
        require(d >= 1, "layer widths must be positive");
    }
    MlpModel model;
    model.layer_dims = layer_dims;
    model.output_activation = output;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const double limit = std::sqrt(6.0 / layer_dims[i]);
        std::uniform_real_distribution<double> uni(-limit, limit);
        DenseLayer layer;
        layer.weight.resize(layer_dims[i + 1], layer_dims[i]);
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                layer.weight(r, c) = uni(rng);
            }
        }
        layer.bias = Eigen::VectorXd::Zero(layer_dims[i + 1]);
        model.layers.push_back(std::move(layer));
    }
    model.norm_in = {Eigen::VectorXd::Zero(layer_dims.front()), Eigen::VectorXd::Ones(layer_dims.front())};
    model.norm_out = {Eigen::VectorXd::Zero(layer_dims.back()), Eigen::VectorXd::Ones(layer_dims.back())};
    return model;
}

namespace {

bool relu_at(const MlpModel &model, std::size_t layer) {
    return layer + 1 < model.layers.size() || model.output_activation == OutputActivation::relu;
}

void check_batch(const MlpModel &model, const Eigen::MatrixXd &inputs) {
    require(inputs.rows() == model.input_dim(), "input width " + std::to_string(inputs.rows()) +
                                                    " does not match network input " +
                                                    std::to_string(model.input_dim()));
}

} // namespace

Eigen::MatrixXd mlp_forward_batch(const MlpModel &model, const Eigen::MatrixXd &inputs, ForwardCache *cache) {
    check_batch(model, inputs);
    if (cache) {
        cache->pre.clear();
        cache->post.clear();
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto &l = model.layers[i];
        Eigen::MatrixXd z = l.weight * a;
        z.colwise() += l.bias;
        a = relu_at(model, i) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
        if (cache) {
            cache->pre.push_back(std::move(z));
            cache->post.push_back(a);
        }
    }
    return a;
}

ForwardResult mlp_forward(const MlpModel &model, const Eigen::VectorXd &input) {
    ForwardResult r;
    r.output = mlp_forward_batch(model, input, &r.cache);
    return r;
}

double mlp_loss(const MlpModel &model, const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets) {
    const Eigen::MatrixXd out = mlp_forward_batch(model, inputs);
    require(targets.rows() == out.rows() && targets.cols() == out.cols(), "target shape does not match output");
    return (out - targets).squaredNorm() / (2.0 * static_cast<double>(out.rows()) * static_cast<double>(out.cols()));
}

Gradients mlp_backward_batch(const MlpModel &model, const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets) {
    ForwardCache cache;
    const Eigen::MatrixXd out = mlp_forward_batch(model, inputs, &cache);
    require(targets.rows() == out.rows() && targets.cols() == out.cols(), "target shape does not match output");
    const double scale = 1.0 / (static_cast<double>(out.rows()) * static_cast<double>(out.cols()));

    Gradients g;
    const std::size_t n = model.layers.size();
    g.weight.resize(n);
    g.bias.resize(n);
    const Eigen::MatrixXd diff = out - targets;
    g.loss = 0.5 * diff.squaredNorm() * scale;

    Eigen::MatrixXd delta = diff * scale;
    for (std::size_t i = n; i-- > 0;) {
        if (relu_at(model, i)) {
            delta = delta.cwiseProduct((cache.pre[i].array() > 0.0).cast<double>().matrix());
        }
        const Eigen::MatrixXd &prev = i == 0 ? inputs : cache.post[i - 1];
        g.weight[i] = delta * prev.transpose();
        g.bias[i] = delta.rowwise().sum();
        if (i > 0) {
            delta = model.layers[i].weight.transpose() * delta;
        }
    }
    return g;
}

Gradients mlp_backward(const MlpModel &model, const Eigen::VectorXd &input, const Eigen::VectorXd &target) {
    return mlp_backward_batch(model, input, target);
}

OptimizerState OptimizerState::zeros_like(const MlpModel &model) {
    OptimizerState s;
    for (const auto &l : model.layers) {
        s.m_weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        s.v_weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        s.m_bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        s.v_bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return s;
}

namespace {

template <typename P, typename G>
void adam_update(P &param, P &m, P &v, const G &grad, const AdamParams &adam, double c1, double c2) {
    m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
    v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
    param.array() -= adam.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
}

} // namespace

void adam_step(OptimizerState &state, MlpModel &model, const Gradients &grads, const AdamParams &adam) {
    const std::size_t n = model.layers.size();
    require(grads.weight.size() == n && grads.bias.size() == n && state.m_weight.size() == n,
            "optimizer state and gradients must match the network layers");
    for (std::size_t i = 0; i < n; ++i) {
        require(grads.weight[i].rows() == model.layers[i].weight.rows() &&
                    grads.weight[i].cols() == model.layers[i].weight.cols() &&
                    grads.bias[i].size() == model.layers[i].bias.size(),
                "gradient shape mismatch at layer " + std::to_string(i));
        if (!grads.weight[i].allFinite() || !grads.bias[i].allFinite()) {
            throw TrainingError("non-finite gradient at layer " + std::to_string(i) + " (step " +
                                std::to_string(state.step + 1) + ")");
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
        adam_update(model.layers[i].weight, state.m_weight[i], state.v_weight[i], grads.weight[i], adam, c1, c2);
        adam_update(model.layers[i].bias, state.m_bias[i], state.v_bias[i], grads.bias[i], adam, c1, c2);
    }
}

void TrainConfig::validate() const {
    require(epochs >= 1, "epochs must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(train_fraction > 0.0 && val_fraction >= 0.0 && test_fraction >= 0.0,
            "split fractions must be non-negative with a positive training share");
    require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) < 1e-9, "split fractions must sum to 1");
    require(adam.lr > 0.0 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
                adam.epsilon > 0.0,
            "invalid Adam hyperparameters");
}

SplitIndices split_indices(Eigen::Index total, const TrainConfig &cfg) {
    SplitIndices s;
    s.total = total;
    s.train_end = static_cast<Eigen::Index>(std::llround(cfg.train_fraction * static_cast<double>(total)));
    s.val_end = std::min(total, s.train_end + static_cast<Eigen::Index>(
                                                  std::llround(cfg.val_fraction * static_cast<double>(total))));
    if (cfg.test_fraction == 0.0) {
        s.val_end = total;
    }
    return s;
}

namespace {

double mse_of(const MlpModel &model, const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets) {
    if (inputs.cols() == 0) {
        return 0.0;
    }
    return 2.0 * mlp_loss(model, inputs, targets);
}

} // namespace

TrainResult train(const Dataset &data, const TrainConfig &cfg) {
    cfg.validate();
    require(data.targets.cols() == data.size(), "dataset inputs and targets differ in sample count");
    require(data.size() >= cfg.batch_size, "dataset has fewer samples (" + std::to_string(data.size()) +
                                               ") than one batch (" + std::to_string(cfg.batch_size) + ")");

    const SplitIndices split = split_indices(data.size(), cfg);
    require(split.train_end >= 1, "training split is empty");
    const Eigen::Index n_train = split.train_end;
    const Eigen::Index n_val = split.val_end - split.train_end;

    TrainResult result;
    MlpModel &model = result.model;
    const int in = static_cast<int>(data.inputs.rows());
    const int out = static_cast<int>(data.targets.rows());
    model = make_mlp({in, in, in, out, out}, cfg.output_activation, derive_seed(cfg.seed, {0}));
    model.norm_in = minmax_fit(data.inputs.leftCols(n_train));
    model.norm_out = minmax_fit(data.targets.leftCols(n_train));

    const Eigen::MatrixXd x_train = minmax_apply(data.inputs.leftCols(n_train), model.norm_in);
    const Eigen::MatrixXd t_train = minmax_apply(data.targets.leftCols(n_train), model.norm_out);
    const Eigen::MatrixXd x_val = minmax_apply(data.inputs.middleCols(n_train, n_val), model.norm_in);
    const Eigen::MatrixXd t_val = minmax_apply(data.targets.middleCols(n_train, n_val), model.norm_out);

    LossHistory &hist = result.history;
    hist.initial_train = mse_of(model, x_train, t_train);
    hist.initial_val = mse_of(model, x_val, t_val);

    OptimizerState state = OptimizerState::zeros_like(model);
    Rng rng(derive_seed(cfg.seed, {1}));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    MlpModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                order.begin() + static_cast<std::ptrdiff_t>(stop));
            const Eigen::MatrixXd xb = x_train(Eigen::all, idx);
            const Eigen::MatrixXd tb = t_train(Eigen::all, idx);
            const Gradients g = mlp_backward_batch(model, xb, tb);
            if (!std::isfinite(g.loss)) {
                throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(start / static_cast<std::size_t>(cfg.batch_size) + 1) +
                                    "; try a smaller learning rate");
            }
            adam_step(state, model, g, cfg.adam);
        }
        const double tr = mse_of(model, x_train, t_train);
        const double va = mse_of(model, x_val, t_val);
        if (!std::isfinite(tr) || !std::isfinite(va)) {
            throw TrainingError("loss became non-finite after epoch " + std::to_string(epoch + 1));
        }
        hist.train.push_back(tr);
        hist.val.push_back(va);
        if (n_val > 0 && va < best_val) {
            best_val = va;
            best = model;
            hist.best_epoch = epoch;
        }
    }
    if (n_val > 0) {
        model = std::move(best);
    }
    return result;
}

SnapshotBlock predict(const MlpModel &model, const SnapshotBlock &low, const ArrayConfig &high) {
    require(2 * low.data.rows() == model.input_dim(),
            "low block has " + std::to_string(low.data.rows()) + " rows, model expects " +
                std::to_string(model.input_dim() / 2));
    require(2 * high.virtual_size() == model.output_dim(),
            "high array has " + std::to_string(high.virtual_size()) + " elements, model emits " +
                std::to_string(model.output_dim() / 2));
    const Eigen::MatrixXd x = minmax_apply(stack_real_imag(low.data), model.norm_in);
    const Eigen::MatrixXd y = minmax_invert(mlp_forward_batch(model, x), model.norm_out);
    SnapshotBlock out;
    out.data = unstack_real_imag(y);
    out.snr_db = low.snr_db;
    out.array = high;
    return out;
}

} // namespace mimo_doa
