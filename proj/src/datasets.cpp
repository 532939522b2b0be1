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
#include "mimo_doa/experiment.hpp"
#include "mimo_doa/rng.hpp"

#include <cmath>

namespace mimo_doa {

namespace {

// Top-level seed tags, one per independent stream family.
enum SeedTag : std::uint64_t { kTrainScenes = 1, kTrainNoise = 2, kTestScenes = 3, kTestNoise = 4 };

constexpr std::string_view kDatasetMagic{"MDOADSET", 8};
constexpr std::string_view kSceneMagic{"MDOASCNE", 8};
constexpr std::uint32_t kFileVersion = 1;

std::uint64_t snr_key(double snr_db) { return static_cast<std::uint64_t>(std::llround(snr_db * 1000.0)); }

void add_noise(Eigen::Ref<Eigen::MatrixXcd> block, double sigma2, Rng &rng) {
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            block(r, c) += complex_normal(rng, sigma2);
        }
    }
}

} // namespace

std::vector<TrainingSetSpec> training_sets(const ExperimentConfig &cfg) {
    std::vector<TrainingSetSpec> sets;
    int index = 0;
    for (double snr : cfg.snr_train_db) {
        sets.push_back({single_set_id(snr), {snr}, cfg.samples_per_set, index++});
    }
    sets.push_back({kMixedLargeId, cfg.snr_train_db, cfg.mixed_large, index++});
    sets.push_back({kMixedSmallId, cfg.snr_train_db, cfg.mixed_small, index++});
    return sets;
}

Dataset generate_training_set(const ExperimentConfig &cfg, int range_index, const TrainingSetSpec &set) {
    require(range_index >= 0 && range_index < static_cast<int>(cfg.ranges.size()), "range index out of bounds");
    require(!set.snrs_db.empty() && set.samples >= 1, "training set needs SNRs and a positive sample count");
    const AngleRange range = cfg.ranges[static_cast<std::size_t>(range_index)];
    const int total = set.samples;
    const int per_scene = cfg.pulses_per_scene;
    const auto ri = static_cast<std::uint64_t>(range_index);
    const auto si = static_cast<std::uint64_t>(set.index);

    Dataset data;
    data.inputs.resize(2 * cfg.low.virtual_size(), total);
    data.targets.resize(2 * cfg.high.virtual_size(), total);
    data.snr_db.resize(static_cast<std::size_t>(total));

    const std::size_t n_snr = set.snrs_db.size();
    for (int start = 0, block = 0; start < total; start += per_scene, ++block) {
        const int pulses = std::min(per_scene, total - start);
        const auto b = static_cast<std::uint64_t>(block);
        const TargetScene scene = draw_scene(range, cfg.targets, cfg.min_sep_deg, pulses,
                                             derive_seed(cfg.seed, {kTrainScenes, ri, si, b}));
        Eigen::MatrixXcd low = noiseless_observation(scene, cfg.low);
        Eigen::MatrixXcd high = noiseless_observation(scene, cfg.high);
        Rng rng(derive_seed(cfg.seed, {kTrainNoise, ri, si, b}));
        for (int p = 0; p < pulses; ++p) {
            const int s = start + p;
            // mixed pools cycle through their SNRs so every SNR gets an equal share
            const double snr = set.snrs_db[static_cast<std::size_t>(s) % n_snr];
            const double sigma2 = snr_to_noise_var(snr);
            add_noise(low.col(p), sigma2, rng);
            add_noise(high.col(p), sigma2, rng);
            data.snr_db[static_cast<std::size_t>(s)] = static_cast<float>(snr);
        }
        data.inputs.middleCols(start, pulses) = stack_real_imag(low);
        data.targets.middleCols(start, pulses) = stack_real_imag(high);
    }
    return data;
}

TestSet generate_test_set(const ExperimentConfig &cfg, int range_index, double snr_db) {
    require(range_index >= 0 && range_index < static_cast<int>(cfg.ranges.size()), "range index out of bounds");
    const int q_trials = cfg.trials();
    require(q_trials >= 1, "test set needs at least one trial (test_samples >= snapshots)");
    const AngleRange range = cfg.ranges[static_cast<std::size_t>(range_index)];
    const int ns = cfg.snapshots;
    const auto ri = static_cast<std::uint64_t>(range_index);

    TestSet t;
    t.snr_db = snr_db;
    t.low.resize(cfg.low.virtual_size(), static_cast<Eigen::Index>(q_trials) * ns);
    t.high.resize(cfg.high.virtual_size(), static_cast<Eigen::Index>(q_trials) * ns);
    for (int q = 0; q < q_trials; ++q) {
        const auto qi = static_cast<std::uint64_t>(q);
        TargetScene scene =
            draw_scene(range, cfg.targets, cfg.min_sep_deg, ns, derive_seed(cfg.seed, {kTestScenes, ri, qi}));
        auto [low, high] = synthesize_pair(scene, cfg.low, cfg.high, snr_db,
                                           derive_seed(cfg.seed, {kTestNoise, ri, qi, snr_key(snr_db)}));
        t.low.middleCols(static_cast<Eigen::Index>(q) * ns, ns) = low.data;
        t.high.middleCols(static_cast<Eigen::Index>(q) * ns, ns) = high.data;
        t.scenes.push_back(std::move(scene));
    }
    return t;
}

Eigen::MatrixXcd high_reference(const ExperimentConfig &cfg, int range_index, const TestSet &tests, double snr_db) {
    const int ns = cfg.snapshots;
    const auto ri = static_cast<std::uint64_t>(range_index);
    Eigen::MatrixXcd out(cfg.high.virtual_size(), static_cast<Eigen::Index>(tests.scenes.size()) * ns);
    for (std::size_t q = 0; q < tests.scenes.size(); ++q) {
        // same stream as the high half of synthesize_pair
        const std::uint64_t pair_seed = derive_seed(cfg.seed, {kTestNoise, ri, q, snr_key(snr_db)});
        out.middleCols(static_cast<Eigen::Index>(q) * ns, ns) =
            synthesize(tests.scenes[q], cfg.high, snr_db, derive_seed(pair_seed, {1})).data;
    }
    return out;
}

void save_dataset(const Dataset &data, const std::filesystem::path &path) {
    require(data.targets.cols() == data.size() && data.snr_db.size() == static_cast<std::size_t>(data.size()),
            "dataset columns and labels must agree");
    binary::Writer w(path);
    w.bytes(kDatasetMagic);
    w.u32(kFileVersion);
    w.u64(static_cast<std::uint64_t>(data.size()));
    w.u32(static_cast<std::uint32_t>(data.inputs.rows()));
    w.u32(static_cast<std::uint32_t>(data.targets.rows()));
    for (float s : data.snr_db) {
        w.f32(s);
    }
    w.matrix_row_major(data.inputs);
    w.matrix_row_major(data.targets);
    w.close();
}

Dataset load_dataset(const std::filesystem::path &path) {
    binary::Reader r(path);
    r.expect(kDatasetMagic);
    if (const auto v = r.u32(); v != kFileVersion) {
        throw IoError(path.string() + ": unsupported dataset format version " + std::to_string(v));
    }
    const std::uint64_t samples = r.u64();
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const auto file_size = std::filesystem::file_size(path);
    const std::uint64_t expected = 8 + 4 + 8 + 4 + 4 + samples * 4 + samples * 8 * (std::uint64_t{in} + out);
    if (file_size != expected) {
        throw IoError(path.string() + ": size " + std::to_string(file_size) + " does not match header (" +
                      std::to_string(expected) + " bytes expected)");
    }
    Dataset d;
    const auto s = static_cast<Eigen::Index>(samples);
    d.snr_db.resize(samples);
    for (auto &x : d.snr_db) {
        x = r.f32();
    }
    d.inputs = r.matrix_row_major(in, s);
    d.targets = r.matrix_row_major(out, s);
    return d;
}

void save_test_set(const TestSet &tests, const std::filesystem::path &dataset_path,
                   const std::filesystem::path &scene_path) {
    require(!tests.scenes.empty(), "test set has no trials");
    Dataset d;
    d.inputs = stack_real_imag(tests.low);
    d.targets = stack_real_imag(tests.high);
    d.snr_db.assign(static_cast<std::size_t>(tests.low.cols()), static_cast<float>(tests.snr_db));
    save_dataset(d, dataset_path);

    // scene file: magic, version, f64 snr, u32 Q, u32 K, u32 Ns, then per trial
    // K angles (rad) and the K x Ns RCS matrix as row-major (re, im) pairs
    const auto k = static_cast<std::uint32_t>(tests.scenes.front().target_count());
    const auto ns = static_cast<std::uint32_t>(tests.scenes.front().pulse_count());
    binary::Writer w(scene_path);
    w.bytes(kSceneMagic);
    w.u32(kFileVersion);
    w.f64(tests.snr_db);
    w.u32(static_cast<std::uint32_t>(tests.scenes.size()));
    w.u32(k);
    w.u32(ns);
    for (const auto &sc : tests.scenes) {
        require(static_cast<std::uint32_t>(sc.target_count()) == k &&
                    static_cast<std::uint32_t>(sc.pulse_count()) == ns,
                "all test scenes must share K and Ns");
        for (double a : sc.angles_rad) {
            w.f64(a);
        }
        for (Eigen::Index i = 0; i < sc.rcs.rows(); ++i) {
            for (Eigen::Index j = 0; j < sc.rcs.cols(); ++j) {
                w.f64(sc.rcs(i, j).real());
                w.f64(sc.rcs(i, j).imag());
            }
        }
    }
    w.close();
}

TestSet load_test_set(const std::filesystem::path &dataset_path, const std::filesystem::path &scene_path) {
    const Dataset d = load_dataset(dataset_path);
    TestSet t;
    t.low = unstack_real_imag(d.inputs);
    t.high = unstack_real_imag(d.targets);

    binary::Reader r(scene_path);
    r.expect(kSceneMagic);
    if (const auto v = r.u32(); v != kFileVersion) {
        throw IoError(scene_path.string() + ": unsupported scene format version " + std::to_string(v));
    }
    t.snr_db = r.f64();
    const std::uint32_t q = r.u32();
    const std::uint32_t k = r.u32();
    const std::uint32_t ns = r.u32();
    if (static_cast<std::uint64_t>(q) * ns != static_cast<std::uint64_t>(t.low.cols())) {
        throw IoError(scene_path.string() + ": trial layout does not match " + dataset_path.string());
    }
    for (std::uint32_t i = 0; i < q; ++i) {
        TargetScene sc;
        for (std::uint32_t j = 0; j < k; ++j) {
            sc.angles_rad.push_back(r.f64());
        }
        sc.rcs.resize(k, ns);
        for (std::uint32_t a = 0; a < k; ++a) {
            for (std::uint32_t b = 0; b < ns; ++b) {
                const double re = r.f64();
                const double im = r.f64();
                sc.rcs(a, b) = {re, im};
            }
        }
        t.scenes.push_back(std::move(sc));
    }
    r.expect_end();
    return t;
}

} // namespace mimo_doa
