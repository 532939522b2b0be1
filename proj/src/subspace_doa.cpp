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

#include "mimo_doa/subspace_doa.hpp"

#include "mimo_doa/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mimo_doa {

std::vector<double> AngleGrid::points() const {
    require(step_deg > 0.0, "grid step must be positive");
    require(hi_deg >= lo_deg, "grid must satisfy lo <= hi");
    const auto n = static_cast<std::size_t>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9)) + 1;
    std::vector<double> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = lo_deg + static_cast<double>(i) * step_deg;
    }
    return pts;
}

AngleGrid search_grid_for(AngleRange range, double pad_deg, double step_deg) {
    AngleGrid g;
    g.lo_deg = std::max(range.lo_deg - pad_deg, -89.9);
    g.hi_deg = std::min(range.hi_deg + pad_deg, 89.9);
    g.step_deg = step_deg;
    return g;
}

CovarianceEstimate sample_covariance(const Eigen::MatrixXcd &data, PulseWindow window) {
    require(window.count >= 1, "covariance window must contain at least one snapshot");
    require(window.first >= 0 && window.first + window.count <= data.cols(),
            "covariance window exceeds the available pulses");
    const auto y = data.middleCols(window.first, window.count);
    Eigen::MatrixXcd r = (y * y.adjoint()) / static_cast<double>(window.count);
    CovarianceEstimate cov;
    cov.matrix = (r + r.adjoint()) * 0.5;
    cov.snapshots_used = static_cast<int>(window.count);
    return cov;
}

CovarianceEstimate sample_covariance(const SnapshotBlock &block, PulseWindow window) {
    return sample_covariance(block.data, window);
}

EigenStructure hermitian_eig(const CovarianceEstimate &cov) {
    const Eigen::MatrixXcd &r = cov.matrix;
    require(r.rows() == r.cols() && r.rows() > 0, "eigendecomposition needs a non-empty square matrix");
    const double norm = r.norm();
    if ((r - r.adjoint()).norm() > 1e-10 * std::max(norm, 1e-300)) {
        throw DomainError("matrix is not Hermitian within tolerance");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(r);
    if (solver.info() != Eigen::Success) {
        throw DomainError("Hermitian eigensolver did not converge");
    }
    // Eigen returns ascending order
    EigenStructure eig;
    eig.eigenvalues = solver.eigenvalues().reverse();
    eig.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return eig;
}

Eigen::MatrixXcd noise_subspace(const EigenStructure &eig, int k) {
    const auto n = static_cast<int>(eig.eigenvalues.size());
    if (k < 1 || k >= n) {
        throw DomainError("noise subspace needs 1 <= k < " + std::to_string(n) + ", got k=" + std::to_string(k));
    }
    return eig.eigenvectors.rightCols(n - k);
}

SteeringGrid make_steering_grid(const ArrayConfig &cfg, const AngleGrid &grid) {
    SteeringGrid sg;
    sg.grid_deg = grid.points();
    std::vector<double> rad(sg.grid_deg.size());
    std::transform(sg.grid_deg.begin(), sg.grid_deg.end(), rad.begin(), deg_to_rad);
    sg.vectors = steering_matrix(rad, cfg);
    return sg;
}

SpectrumResult music_spectrum(const Eigen::MatrixXcd &noise_basis, const SteeringGrid &steering) {
    require(noise_basis.cols() >= 1, "noise subspace is empty");
    require(noise_basis.rows() == steering.vectors.rows(),
            "noise subspace row count must match the virtual array size");
    const Eigen::MatrixXcd proj = noise_basis.adjoint() * steering.vectors;
    SpectrumResult out;
    out.grid_deg = steering.grid_deg;
    out.values.resize(out.grid_deg.size());
    for (Eigen::Index i = 0; i < proj.cols(); ++i) {
        out.values[static_cast<std::size_t>(i)] = 1.0 / std::max(proj.col(i).squaredNorm(), kSpectrumFloor);
    }
    return out;
}

SpectrumResult music_spectrum(const Eigen::MatrixXcd &noise_basis, const ArrayConfig &cfg, const AngleGrid &grid) {
    return music_spectrum(noise_basis, make_steering_grid(cfg, grid));
}

PeakPick pick_peaks(const SpectrumResult &spectrum, int k) {
    require(k > 0, "number of peaks must be positive");
    const auto &v = spectrum.values;
    const std::size_t n = v.size();
    require(n == spectrum.grid_deg.size(), "spectrum grid and values differ in length");
    require(static_cast<std::size_t>(k) <= n, "more peaks requested than grid points");

    // Strict local maxima. A flat top bounded by lower neighbours counts once, at its lowest angle.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(v[i] > v[i - 1])) {
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) {
            ++j;
        }
        if (j + 1 < n && v[j + 1] < v[i]) {
            peaks.push_back(i);
        }
        i = j;
    }

    auto by_value = [&](std::size_t a, std::size_t b) { return v[a] != v[b] ? v[a] > v[b] : a < b; };
    std::stable_sort(peaks.begin(), peaks.end(), by_value);

    PeakPick out;
    std::vector<std::size_t> chosen(peaks.begin(), peaks.begin() + std::min<std::size_t>(peaks.size(), k));
    if (chosen.size() < static_cast<std::size_t>(k)) {
        out.degenerate = true;
        std::vector<std::size_t> rest(n);
        std::iota(rest.begin(), rest.end(), std::size_t{0});
        std::stable_sort(rest.begin(), rest.end(), by_value);
        for (std::size_t idx : rest) {
            if (chosen.size() == static_cast<std::size_t>(k)) {
                break;
            }
            if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) {
                chosen.push_back(idx);
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t idx : chosen) {
        out.angles_deg.push_back(spectrum.grid_deg[idx]);
    }
    return out;
}

PeakPick music_estimate(const CovarianceEstimate &cov, const ArrayConfig &cfg, int k, const AngleGrid &grid) {
    const EigenStructure eig = hermitian_eig(cov);
    return pick_peaks(music_spectrum(noise_subspace(eig, k), cfg, grid), k);
}

PeakPick music_estimate(const CovarianceEstimate &cov, const SteeringGrid &steering, int k) {
    const EigenStructure eig = hermitian_eig(cov);
    return pick_peaks(music_spectrum(noise_subspace(eig, k), steering), k);
}

double doa_mse(const std::vector<std::vector<double>> &estimates_deg,
               const std::vector<std::vector<double>> &truths_deg) {
    require(estimates_deg.size() == truths_deg.size(), "estimate and truth trial counts differ");
    require(!estimates_deg.empty(), "doa_mse needs at least one trial");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t q = 0; q < estimates_deg.size(); ++q) {
        std::vector<double> est = estimates_deg[q];
        std::vector<double> tru = truths_deg[q];
        require(est.size() == tru.size() && !est.empty(),
                "trial " + std::to_string(q) + " has mismatched or empty target lists");
        std::sort(est.begin(), est.end());
        std::sort(tru.begin(), tru.end());
        for (std::size_t i = 0; i < est.size(); ++i) {
            const double e = deg_to_rad(est[i] - tru[i]);
            sum += e * e;
        }
        count += est.size();
    }
    return sum / static_cast<double>(count);
}

} // namespace mimo_doa
