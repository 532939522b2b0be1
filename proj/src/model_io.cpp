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

#include "mimo_doa/binary_io.hpp"
#include "mimo_doa/neural_emulator.hpp"

// Model file layout (all integers and floats little-endian):
//
//   8 bytes   magic "MDOAMLP\0"
//   u32       format version (1)
//   u32       number of layer widths W, then W x u32 widths
//   u8        output activation (0 linear, 1 relu)
//   input  stats: width_0 x (f64 min, f64 max)
//   output stats: width_last x (f64 min, f64 max)
//   per layer: weight (out x in, row-major f64), bias (out x f64)

namespace mimo_doa {

namespace {

constexpr std::string_view kModelMagic{"MDOAMLP\0", 8};
constexpr std::uint32_t kModelVersion = 1;

void write_stats(binary::Writer &w, const MinMaxStats &s) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        w.f64(s.min[i]);
        w.f64(s.max[i]);
    }
}

MinMaxStats read_stats(binary::Reader &r, Eigen::Index n) {
    MinMaxStats s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        s.min[i] = r.f64();
        s.max[i] = r.f64();
    }
    return s;
}

} // namespace

void save_model(const MlpModel &model, const std::filesystem::path &path) {
    model.validate();
    binary::Writer w(path);
    w.bytes(kModelMagic);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.layer_dims.size()));
    for (int d : model.layer_dims) {
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u8(static_cast<std::uint8_t>(model.output_activation));
    write_stats(w, model.norm_in);
    write_stats(w, model.norm_out);
    for (const auto &l : model.layers) {
        w.matrix_row_major(l.weight);
        w.vector(l.bias);
    }
    w.close();
}

MlpModel load_model(const std::filesystem::path &path) {
    binary::Reader r(path);
    r.expect(kModelMagic);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) {
        throw IoError(path.string() + ": unsupported model format version " + std::to_string(version));
    }
    const std::uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 64) {
        throw IoError(path.string() + ": implausible layer count " + std::to_string(n_dims));
    }
    MlpModel model;
    for (std::uint32_t i = 0; i < n_dims; ++i) {
        const std::uint32_t d = r.u32();
        if (d == 0 || d > (1U << 20)) {
            throw IoError(path.string() + ": implausible layer width " + std::to_string(d));
        }
        model.layer_dims.push_back(static_cast<int>(d));
    }
    const std::uint8_t act = r.u8();
    if (act > 1) {
        throw IoError(path.string() + ": unknown output activation flag " + std::to_string(act));
    }
    model.output_activation = static_cast<OutputActivation>(act);
    model.norm_in = read_stats(r, model.layer_dims.front());
    model.norm_out = read_stats(r, model.layer_dims.back());
    for (std::size_t i = 0; i + 1 < model.layer_dims.size(); ++i) {
        DenseLayer l;
        l.weight = r.matrix_row_major(model.layer_dims[i + 1], model.layer_dims[i]);
        l.bias = r.vector(model.layer_dims[i + 1]);
        model.layers.push_back(std::move(l));
    }
    r.expect_end();
    try {
        model.validate();
    } catch (const DomainError &e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return model;
}

} // namespace mimo_doa
