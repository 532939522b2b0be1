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

#include "mimo_doa/metrics.hpp"

#include "mimo_doa/error.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace mimo_doa {

double cov_error(const CovarianceEstimate &reference, const CovarianceEstimate &predicted) {
    require(reference.matrix.rows() == predicted.matrix.rows() && reference.matrix.cols() == predicted.matrix.cols(),
            "covariance matrices differ in size");
    const double ref = reference.matrix.norm();
    require(ref > 0.0, "reference covariance has zero norm");
    return (reference.matrix - predicted.matrix).norm() / ref;
}

double cov_error_offset(const CovarianceEstimate &offset_reference, const CovarianceEstimate &predicted) {
    return cov_error(offset_reference, predicted);
}

Eigen::VectorXcd steering_derivative(double theta_rad, const ArrayConfig &cfg) {
    const Eigen::VectorXcd v = virtual_steering(theta_rad, cfg);
    const double rate = 2.0 * std::numbers::pi * cfg.spacing_wavelengths * std::cos(theta_rad);
    Eigen::VectorXcd d(v.size());
    for (int m = 0; m < cfg.tx_count; ++m) {
        for (int n = 0; n < cfg.rx_count; ++n) {
            const int i = m * cfg.rx_count + n;
            d[i] = std::complex<double>(0.0, rate * (m + n)) * v[i];
        }
    }
    return d;
}

CrbResult crb(std::span<const double> angles_rad, const Eigen::MatrixXcd &x, double sigma2, const ArrayConfig &cfg) {
    const auto k = static_cast<Eigen::Index>(angles_rad.size());
    require(k >= 1, "CRB needs at least one target");
    require(x.rows() == k && x.cols() >= 1, "RCS realization must be K x Ns with Ns >= 1");
    require(sigma2 > 0.0, "CRB needs a positive noise variance");
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            require(angles_rad[static_cast<std::size_t>(i)] != angles_rad[static_cast<std::size_t>(j)],
                    "CRB needs distinct target angles");
        }
    }

    const Eigen::MatrixXcd a = steering_matrix(angles_rad, cfg);
    Eigen::MatrixXcd d(a.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        d.col(i) = steering_derivative(angles_rad[static_cast<std::size_t>(i)], cfg);
    }

    const Eigen::MatrixXcd gram = a.adjoint() * a;
    const Eigen::FullPivLU<Eigen::MatrixXcd> gram_lu(gram);
    if (gram_lu.rank() < k) {
        throw DomainError("steering matrix is rank deficient; scene is degenerate");
    }
    const Eigen::MatrixXcd p_perp_d = d - a * gram_lu.solve(a.adjoint() * d);
    const Eigen::MatrixXcd h = d.adjoint() * p_perp_d;
    const double ns = static_cast<double>(x.cols());
    const Eigen::MatrixXcd source_cov = (x * x.adjoint()) / ns;

    const Eigen::MatrixXd fisher = h.cwiseProduct(source_cov.transpose()).real();
    Eigen::FullPivLU<Eigen::MatrixXd> fisher_lu(fisher);
    fisher_lu.setThreshold(1e-12);
    if (fisher_lu.rank() < k) {
        throw DomainError("Fisher information is singular; scene is degenerate");
    }

    CrbResult out;
    out.matrix = (sigma2 / (2.0 * ns)) * fisher_lu.inverse();
    out.diagonal_rad2 = out.matrix.diagonal();
    return out;
}

} // namespace mimo_doa
