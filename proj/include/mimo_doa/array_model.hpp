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

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mimo_doa {

/// Uniform linear TX/RX setup of a co-located MIMO radar.
///
/// The virtual array after matched filtering has tx_count * rx_count elements.
/// Element spacing is given in wavelengths; half-wavelength spacing is the default.
struct ArrayConfig {
    int tx_count = 1;
    int rx_count = 1;
    double spacing_wavelengths = 0.5;

    int virtual_size() const { return tx_count * rx_count; }

    /// Largest K strictly below the identifiability limit 2MN/3.
    int max_identifiable_targets() const;

    void validate() const;

    bool operator==(const ArrayConfig &) const = default;
};

/// Closed interval of directions in degrees.
struct AngleRange {
    double lo_deg = 0.0;
    double hi_deg = 0.0;

    double span() const { return hi_deg - lo_deg; }
    bool operator==(const AngleRange &) const = default;
};

/// Point targets with per-pulse complex reflectivities (Swerling II).
struct TargetScene {
    std::vector<double> angles_rad;  // K directions
    Eigen::MatrixXcd rcs;            // K x P

    int target_count() const { return static_cast<int>(angles_rad.size()); }
    int pulse_count() const { return static_cast<int>(rcs.cols()); }
};

/// Virtual-array observations, one column per pulse.
struct SnapshotBlock {
    Eigen::MatrixXcd data;  // (M*N) x P
    double snr_db = 0.0;
    ArrayConfig array;
};

Eigen::VectorXcd steering_tx(double theta_rad, const ArrayConfig &cfg);
Eigen::VectorXcd steering_rx(double theta_rad, const ArrayConfig &cfg);

/// a_t(theta) kron a_r(theta). Element m * N + n is a_t[m] * a_r[n].
Eigen::VectorXcd virtual_steering(double theta_rad, const ArrayConfig &cfg);

/// Columns are virtual_steering of each angle.
Eigen::MatrixXcd steering_matrix(std::span<const double> angles_rad, const ArrayConfig &cfg);

/// Unit-power i.i.d. CN(0,1) reflectivities, K x P.
Eigen::MatrixXcd draw_rcs(int k, int pulses, std::uint64_t seed);

inline constexpr long kDefaultRejectionCap = 1'000'000;

/// Draws k directions uniformly in range_deg with pairwise separation at least
/// min_sep_deg (rejection sampling), sorted ascending, plus a fresh RCS matrix.
TargetScene draw_scene(AngleRange range_deg, int k, double min_sep_deg, int pulses, std::uint64_t seed,
                       long rejection_cap = kDefaultRejectionCap);

/// sigma^2 = 10^(-snr_db / 10) for unit-power targets.
double snr_to_noise_var(double snr_db);

/// Y = A(theta) X + N for one array. Noise is i.i.d. CN(0, sigma^2).
SnapshotBlock synthesize(const TargetScene &scene, const ArrayConfig &cfg, double snr_db, std::uint64_t seed);

/// Same as synthesize but without noise.
Eigen::MatrixXcd noiseless_observation(const TargetScene &scene, const ArrayConfig &cfg);

/// Low and high blocks sharing angles and RCS, with independent noise draws.
std::pair<SnapshotBlock, SnapshotBlock> synthesize_pair(const TargetScene &scene, const ArrayConfig &low,
                                                        const ArrayConfig &high, double snr_db,
                                                        std::uint64_t seed);

constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

} // namespace mimo_doa
