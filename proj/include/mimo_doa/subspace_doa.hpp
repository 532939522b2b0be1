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

#include <vector>

namespace mimo_doa {

struct CovarianceEstimate {
    Eigen::MatrixXcd matrix;
    int snapshots_used = 0;
};

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
struct EigenStructure {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXcd eigenvectors;
};

struct AngleGrid {
    double lo_deg = -90.0;
    double hi_deg = 90.0;
    double step_deg = 0.1;

    std::vector<double> points() const;
};

/// Default search grid for a target range: padded by 5 degrees, 0.1 degree step,
/// clipped to stay inside (-90, 90).
AngleGrid search_grid_for(AngleRange range, double pad_deg = 5.0, double step_deg = 0.1);

struct SpectrumResult {
    std::vector<double> grid_deg;
    std::vector<double> values;
};

struct PeakPick {
    std::vector<double> angles_deg;  // ascending
    bool degenerate = false;         // fewer than k strict local maxima were found
};

/// Half-open range of pulse columns [first, first + count).
struct PulseWindow {
    Eigen::Index first = 0;
    Eigen::Index count = 0;
};

CovarianceEstimate sample_covariance(const Eigen::MatrixXcd &data, PulseWindow window);
CovarianceEstimate sample_covariance(const SnapshotBlock &block, PulseWindow window);

/// Hermitian eigendecomposition. Rejects inputs whose anti-Hermitian part exceeds
/// 1e-10 of the Frobenius norm.
EigenStructure hermitian_eig(const CovarianceEstimate &cov);

/// Eigenvectors of the MN - k smallest eigenvalues.
Eigen::MatrixXcd noise_subspace(const EigenStructure &eig, int k);

inline constexpr double kSpectrumFloor = 1e-12;

/// Virtual steering vectors for every grid angle, built once and reused across trials.
struct SteeringGrid {
    std::vector<double> grid_deg;
    Eigen::MatrixXcd vectors;  // (M*N) x t
};

SteeringGrid make_steering_grid(const ArrayConfig &cfg, const AngleGrid &grid);

/// P(theta) = 1 / max(v^H Un Un^H v, 1e-12) over the grid.
SpectrumResult music_spectrum(const Eigen::MatrixXcd &noise_basis, const ArrayConfig &cfg, const AngleGrid &grid);
SpectrumResult music_spectrum(const Eigen::MatrixXcd &noise_basis, const SteeringGrid &steering);

PeakPick pick_peaks(const SpectrumResult &spectrum, int k);

/// Covariance -> eigenvectors -> spectrum -> k peaks.
PeakPick music_estimate(const CovarianceEstimate &cov, const ArrayConfig &cfg, int k, const AngleGrid &grid);
PeakPick music_estimate(const CovarianceEstimate &cov, const SteeringGrid &steering, int k);

/// Mean squared DOA error in rad^2. Inputs in degrees, one row per trial.
/// Each row is sorted before pairing, so the result does not depend on target order.
double doa_mse(const std::vector<std::vector<double>> &estimates_deg,
               const std::vector<std::vector<double>> &truths_deg);

} // namespace mimo_doa
