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
#include "mimo_doa/subspace_doa.hpp"

#include <Eigen/Dense>

#include <span>

namespace mimo_doa {

/// Relative Frobenius error ||R_ref - R_pre||_F / ||R_ref||_F.
double cov_error(const CovarianceEstimate &reference, const CovarianceEstimate &predicted);

/// Same formula as cov_error, with the reference taken at a higher SNR
/// than the prediction. Kept separate so call sites read as the quantity they report.
double cov_error_offset(const CovarianceEstimate &offset_reference, const CovarianceEstimate &predicted);

/// d v(theta) / d theta. Element m * N + n is j 2 pi (d/lambda) (m + n) cos(theta) v[m * N + n].
Eigen::VectorXcd steering_derivative(double theta_rad, const ArrayConfig &cfg);

struct CrbResult {
    Eigen::MatrixXd matrix;        // K x K, rad^2
    Eigen::VectorXd diagonal_rad2; // per-target bound

    double mean_diagonal() const { return diagonal_rad2.mean(); }
};

/// Deterministic-signal CRB for the virtual array:
///
///   CRB = sigma^2 / (2 Ns) * { Re[ (D^H P_perp D) .* Phat^T ] }^-1
///
/// with D = [dv(theta_1), ..., dv(theta_K)], P_perp = I - A (A^H A)^-1 A^H and
/// Phat = X X^H / Ns the sample source covariance of the RCS realization x (K x Ns).
CrbResult crb(std::span<const double> angles_rad, const Eigen::MatrixXcd &x, double sigma2, const ArrayConfig &cfg);

} // namespace mimo_doa
