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

// Test-only reference implementations that do not share code paths with the library.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

/// Virtual steering vector built element by element from the phase formula.
inline Eigen::VectorXcd steering(double theta, int m_tx, int n_rx, double d = 0.5) {
    Eigen::VectorXcd v(m_tx * n_rx);
    for (int m = 0; m < m_tx; ++m) {
        for (int n = 0; n < n_rx; ++n) {
            v[m * n_rx + n] = std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * d * (m + n) * std::sin(theta)));
        }
    }
    return v;
}

/// MUSIC pseudospectrum of a noiseless scene with the noise projector formed from
/// the true steering matrix, P = I - A (A^H A)^-1 A^H, instead of an eigendecomposition.
inline std::vector<double> projector_spectrum(const std::vector<double> &angles_rad, int m_tx, int n_rx,
                                              const std::vector<double> &grid_deg, double floor = 1e-12) {
    const int mn = m_tx * n_rx;
    Eigen::MatrixXcd a(mn, static_cast<Eigen::Index>(angles_rad.size()));
    for (std::size_t k = 0; k < angles_rad.size(); ++k) {
        a.col(static_cast<Eigen::Index>(k)) = steering(angles_rad[k], m_tx, n_rx);
    }
    const Eigen::MatrixXcd p =
        Eigen::MatrixXcd::Identity(mn, mn) - a * (a.adjoint() * a).inverse() * a.adjoint();
    std::vector<double> out;
    for (double g : grid_deg) {
        const Eigen::VectorXcd v = steering(g * std::numbers::pi / 180.0, m_tx, n_rx);
        const double denom = std::real((v.adjoint() * p * v)(0, 0));
        out.push_back(1.0 / std::max(denom, floor));
    }
    return out;
}

/// Naive per-neuron forward pass: out_i = act(sum_j W_ij x_j + b_i), layer by layer.
inline std::vector<double> naive_forward(const std::vector<Eigen::MatrixXd> &weights,
                                         const std::vector<Eigen::VectorXd> &biases, std::vector<double> x,
                                         bool relu_output) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        std::vector<double> y(static_cast<std::size_t>(weights[l].rows()));
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i) {
            double acc = biases[l][i];
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) {
                acc += weights[l](i, j) * x[static_cast<std::size_t>(j)];
            }
            const bool relu = l + 1 < weights.size() || relu_output;
            y[static_cast<std::size_t>(i)] = relu ? std::max(acc, 0.0) : acc;
        }
        x = std::move(y);
    }
    return x;
}

/// Deterministic CRB written as a sum over snapshots of diag(x_t)^H D^H P D diag(x_t).
inline Eigen::MatrixXd crb_by_snapshot_sum(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &d,
                                           const Eigen::MatrixXcd &x, double sigma2) {
    const Eigen::Index mn = a.rows();
    const Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(mn, mn) - a * (a.adjoint() * a).inverse() * a.adjoint();
    const Eigen::MatrixXcd h = d.adjoint() * p * d;
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
        const Eigen::MatrixXcd xt = x.col(t).asDiagonal();
        fisher += (xt.adjoint() * h * xt).real();
    }
    return (sigma2 / 2.0) * fisher.inverse();
}

} // namespace oracle
