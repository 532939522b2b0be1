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

#include "mimo_doa/array_model.hpp"

#include "mimo_doa/error.hpp"
#include "mimo_doa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mimo_doa {

namespace {

void require_angle(double theta_rad) {
    if (!(std::abs(theta_rad) < std::numbers::pi / 2.0)) {
        throw DomainError("steering angle must lie strictly inside (-90, 90) degrees, got " +
                          std::to_string(rad_to_deg(theta_rad)));
    }
}

Eigen::VectorXcd ula_response(double theta_rad, int count, double spacing) {
    require_angle(theta_rad);
    const double phase = 2.0 * std::numbers::pi * spacing * std::sin(theta_rad);
    Eigen::VectorXcd a(count);
    for (int i = 0; i < count; ++i) {
        a[i] = std::polar(1.0, phase * i);
    }
    return a;
}

void check_identifiable(int k, const ArrayConfig &cfg, const char *which) {
    if (k > cfg.max_identifiable_targets()) {
        throw DomainError(std::string(which) + " array (" + std::to_string(cfg.tx_count) + "x" +
                          std::to_string(cfg.rx_count) + ") can identify at most " +
                          std::to_string(cfg.max_identifiable_targets()) + " targets, scene has " +
                          std::to_string(k));
    }
}

} // namespace

int ArrayConfig::max_identifiable_targets() const {
    // K_max < 2MN/3
    const int mn2 = 2 * virtual_size();
    return (mn2 % 3 == 0) ? mn2 / 3 - 1 : mn2 / 3;
}

void ArrayConfig::validate() const {
    require(tx_count >= 1, "tx_count must be >= 1");
    require(rx_count >= 1, "rx_count must be >= 1");
    require(spacing_wavelengths > 0.0, "spacing_wavelengths must be positive");
}

Eigen::VectorXcd steering_tx(double theta_rad, const ArrayConfig &cfg) {
    cfg.validate();
    return ula_response(theta_rad, cfg.tx_count, cfg.spacing_wavelengths);
}

Eigen::VectorXcd steering_rx(double theta_rad, const ArrayConfig &cfg) {
    cfg.validate();
    return ula_response(theta_rad, cfg.rx_count, cfg.spacing_wavelengths);
}

Eigen::VectorXcd virtual_steering(double theta_rad, const ArrayConfig &cfg) {
    const Eigen::VectorXcd at = steering_tx(theta_rad, cfg);
    const Eigen::VectorXcd ar = steering_rx(theta_rad, cfg);
    Eigen::VectorXcd v(cfg.virtual_size());
    for (int m = 0; m < cfg.tx_count; ++m) {
        v.segment(m * cfg.rx_count, cfg.rx_count) = at[m] * ar;
    }
    return v;
}

Eigen::MatrixXcd steering_matrix(std::span<const double> angles_rad, const ArrayConfig &cfg) {
    require(!angles_rad.empty(), "steering_matrix needs at least one angle");
    Eigen::MatrixXcd a(cfg.virtual_size(), static_cast<Eigen::Index>(angles_rad.size()));
    for (std::size_t k = 0; k < angles_rad.size(); ++k) {
        a.col(static_cast<Eigen::Index>(k)) = virtual_steering(angles_rad[k], cfg);
    }
    return a;
}

Eigen::MatrixXcd draw_rcs(int k, int pulses, std::uint64_t seed) {
    require(k >= 1 && pulses >= 1, "draw_rcs needs k >= 1 and pulses >= 1");
    Rng rng(seed);
    Eigen::MatrixXcd x(k, pulses);
    // column-major fill: pulse by pulse
    for (int p = 0; p < pulses; ++p) {
        for (int i = 0; i < k; ++i) {
            x(i, p) = complex_normal(rng);
        }
    }
    return x;
}

TargetScene draw_scene(AngleRange range_deg, int k, double min_sep_deg, int pulses, std::uint64_t seed,
                       long rejection_cap) {
    require(k >= 1, "draw_scene needs k >= 1");
    require(pulses >= 1, "draw_scene needs pulses >= 1");
    require(min_sep_deg >= 0.0, "minimum separation must be non-negative");
    require(range_deg.hi_deg >= range_deg.lo_deg, "angle range must satisfy lo <= hi");
    require(range_deg.lo_deg > -90.0 && range_deg.hi_deg < 90.0, "angle range must lie inside (-90, 90) degrees");
    if (range_deg.span() < (k - 1) * min_sep_deg) {
        throw DomainError("cannot place " + std::to_string(k) + " targets " + std::to_string(min_sep_deg) +
                          " deg apart in a " + std::to_string(range_deg.span()) + " deg range");
    }

    Rng rng(derive_seed(seed, {0}));
    std::uniform_real_distribution<double> uni(range_deg.lo_deg, range_deg.hi_deg);
    std::vector<double> deg(static_cast<std::size_t>(k));
    for (long attempt = 0;; ++attempt) {
        if (attempt >= rejection_cap) {
            throw DomainError("scene sampling exceeded " + std::to_string(rejection_cap) +
                              " rejections; separation constraint is practically infeasible");
        }
        for (double &d : deg) {
            d = uni(rng);
        }
        std::sort(deg.begin(), deg.end());
        bool ok = true;
        for (int i = 1; i < k && ok; ++i) {
            ok = deg[i] - deg[i - 1] >= min_sep_deg;
        }
        if (ok) {
            break;
        }
    }

    TargetScene scene;
    scene.angles_rad.reserve(deg.size());
    for (double d : deg) {
        scene.angles_rad.push_back(deg_to_rad(d));
    }
    scene.rcs = draw_rcs(k, pulses, derive_seed(seed, {1}));
    return scene;
}

double snr_to_noise_var(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

Eigen::MatrixXcd noiseless_observation(const TargetScene &scene, const ArrayConfig &cfg) {
    cfg.validate();
    require(scene.rcs.rows() == scene.target_count(), "scene RCS must have one row per target");
    if (scene.target_count() == 0) {
        return Eigen::MatrixXcd::Zero(cfg.virtual_size(), scene.pulse_count());
    }
    return steering_matrix(scene.angles_rad, cfg) * scene.rcs;
}

SnapshotBlock synthesize(const TargetScene &scene, const ArrayConfig &cfg, double snr_db, std::uint64_t seed) {
    SnapshotBlock block;
    block.array = cfg;
    block.snr_db = snr_db;
    block.data = noiseless_observation(scene, cfg);
    const double sigma2 = snr_to_noise_var(snr_db);
    if (sigma2 > 0.0) {
        Rng rng(seed);
        const Eigen::Index rows = block.data.rows();
        for (Eigen::Index p = 0; p < block.data.cols(); ++p) {
            for (Eigen::Index r = 0; r < rows; ++r) {
                block.data(r, p) += complex_normal(rng, sigma2);
            }
        }
    }
    return block;
}

std::pair<SnapshotBlock, SnapshotBlock> synthesize_pair(const TargetScene &scene, const ArrayConfig &low,
                                                        const ArrayConfig &high, double snr_db,
                                                        std::uint64_t seed) {
    check_identifiable(scene.target_count(), low, "low");
    check_identifiable(scene.target_count(), high, "high");
    return {synthesize(scene, low, snr_db, derive_seed(seed, {0})),
            synthesize(scene, high, snr_db, derive_seed(seed, {1}))};
}

} // namespace mimo_doa
