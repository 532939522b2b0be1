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

#include <doctest.h>

#include "mimo_doa/array_model.hpp"
#include "mimo_doa/error.hpp"
#include "mimo_doa/metrics.hpp"
#include "mimo_doa/rng.hpp"
#include "oracles/reference.hpp"

#include <cmath>
#include <numbers>

using namespace mimo_doa;
using cd = std::complex<double>;

namespace {

CovarianceEstimate cov_of(const Eigen::MatrixXcd &m) { return {m, 1}; }

Eigen::MatrixXcd random_complex(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXcd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = complex_normal(rng);
    }
    return m;
}

} // namespace

TEST_CASE("cov_error basic values") {
    const Eigen::MatrixXcd r = random_complex(4, 4, 1);
    CHECK(cov_error(cov_of(r), cov_of(r)) == 0.0);
    CHECK(cov_error(cov_of(r), cov_of(Eigen::MatrixXcd::Zero(4, 4))) == doctest::Approx(1.0));
    CHECK(cov_error(cov_of(r), cov_of(2.0 * r)) == doctest::Approx(1.0));
    CHECK(cov_error(cov_of(r), cov_of(1.5 * r)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(cov_error(cov_of(Eigen::MatrixXcd::Zero(4, 4)), cov_of(r)), DomainError);
    CHECK_THROWS_AS(cov_error(cov_of(r), cov_of(Eigen::MatrixXcd::Zero(3, 3))), DomainError);

    const Eigen::MatrixXcd p = random_complex(4, 4, 2);
    CHECK(cov_error(cov_of(r), cov_of(p)) >= 0.0);
    CHECK(cov_error_offset(cov_of(r), cov_of(p)) == cov_error(cov_of(r), cov_of(p)));
}

TEST_CASE("cov_error_offset at 0 dB offset equals cov_error") {
    const ArrayConfig cfg{3, 3, 0.5};
    const TargetScene scene = draw_scene({0.0, 25.0}, 2, 5.0, 80, 4);
    const SnapshotBlock high = synthesize(scene, cfg, 5.0, 9);
    const SnapshotBlock same = synthesize(scene, cfg, 5.0 + 0.0, 9);
    const SnapshotBlock pred = synthesize(scene, cfg, 0.0, 10);
    const auto r_high = sample_covariance(high, {0, 80});
    const auto r_ref = sample_covariance(same, {0, 80});
    const auto r_pred = sample_covariance(pred, {0, 80});
    CHECK(cov_error_offset(r_ref, r_pred) == cov_error(r_high, r_pred));
}

TEST_CASE("steering_derivative analytic values") {
    const Eigen::VectorXcd d = steering_derivative(0.0, {2, 2, 0.5});
    const double pi = std::numbers::pi;
    REQUIRE(d.size() == 4);
    CHECK(std::abs(d[0]) == 0.0);
    CHECK(std::abs(d[1] - cd(0.0, pi)) < 1e-15);
    CHECK(std::abs(d[2] - cd(0.0, pi)) < 1e-15);
    CHECK(std::abs(d[3] - cd(0.0, 2.0 * pi)) < 1e-15);
}

TEST_CASE("steering_derivative matches finite differences") {
    const double h = 1e-7;
    for (const ArrayConfig cfg : {ArrayConfig{4, 4, 0.5}, ArrayConfig{3, 5, 0.5}, ArrayConfig{8, 8, 0.4}}) {
        for (double deg : {-60.0, -17.5, 0.0, 12.3, 44.0, 70.0}) {
            const double th = deg_to_rad(deg);
            const Eigen::VectorXcd d = steering_derivative(th, cfg);
            const Eigen::VectorXcd fd = (oracle::steering(th + h, cfg.tx_count, cfg.rx_count, cfg.spacing_wavelengths) -
                                         oracle::steering(th - h, cfg.tx_count, cfg.rx_count, cfg.spacing_wavelengths)) /
                                        (2 * h);
            CHECK((d - fd).cwiseAbs().maxCoeff() < 1e-6);
            CHECK(std::abs(d[0]) == 0.0);
        }
    }
}

TEST_CASE("crb scales linearly in sigma^2") {
    const ArrayConfig cfg{4, 4, 0.5};
    const std::vector<double> angles{deg_to_rad(3.0), deg_to_rad(11.0), deg_to_rad(20.0)};
    const Eigen::MatrixXcd x = draw_rcs(3, 150, 12);
    const CrbResult a = crb(angles, x, 0.1, cfg);
    for (double c : {2.0, 0.5, 10.0, 1e-3}) {
        const CrbResult b = crb(angles, x, c * 0.1, cfg);
        CHECK(((b.matrix - c * a.matrix).array().abs() <= 1e-12 * (c * a.matrix).array().abs().maxCoeff()).all());
    }
    CHECK((a.diagonal_rad2.array() > 0.0).all());
    CHECK(a.mean_diagonal() == doctest::Approx(a.diagonal_rad2.mean()));
}

TEST_CASE("crb single target hand value") {
    // M = N = 2, theta = 0, |x_t| = 1: D^H P D = 6 pi^2 - 16 pi^2 / 4 = 2 pi^2
    const int ns = 40;
    Eigen::MatrixXcd x(1, ns);
    for (int t = 0; t < ns; ++t) {
        x(0, t) = std::polar(1.0, 0.3 * t);
    }
    const std::vector<double> angles{0.0};
    const double sigma2 = 0.7;
    const CrbResult r = crb(angles, x, sigma2, {2, 2, 0.5});
    const double pi = std::numbers::pi;
    CHECK(r.diagonal_rad2[0] == doctest::Approx(sigma2 / (4.0 * pi * pi * ns)).epsilon(1e-12));
}

TEST_CASE("crb matches the snapshot-sum oracle") {
    for (int trial = 0; trial < 6; ++trial) {
        const ArrayConfig cfg = trial % 2 == 0 ? ArrayConfig{4, 4, 0.5} : ArrayConfig{3, 3, 0.5};
        const int k = 1 + trial % 4;
        const TargetScene scene = draw_scene({-30.0, 30.0}, k, 5.0, 64, 100 + trial);
        Eigen::MatrixXcd a(cfg.virtual_size(), k), d(cfg.virtual_size(), k);
        for (int i = 0; i < k; ++i) {
            a.col(i) = oracle::steering(scene.angles_rad[i], cfg.tx_count, cfg.rx_count);
            d.col(i) = steering_derivative(scene.angles_rad[i], cfg);
        }
        const double sigma2 = snr_to_noise_var(-4.0 + 3.0 * trial);
        const Eigen::MatrixXd ref = oracle::crb_by_snapshot_sum(a, d, scene.rcs, sigma2);
        const CrbResult r = crb(scene.angles_rad, scene.rcs, sigma2, cfg);
        CHECK((r.matrix - ref).norm() <= 1e-9 * ref.norm());
    }
}

TEST_CASE("crb rejects degenerate input") {
    const ArrayConfig cfg{2, 2, 0.5};
    const Eigen::MatrixXcd x = draw_rcs(2, 10, 1);
    const std::vector<double> same{0.1, 0.1};
    CHECK_THROWS_AS(crb(same, x, 1.0, cfg), DomainError);
    const std::vector<double> ok{0.1, 0.4};
    CHECK_THROWS_AS(crb(ok, x, 0.0, cfg), DomainError);
    CHECK_THROWS_AS(crb(ok, draw_rcs(3, 10, 1), 1.0, cfg), DomainError);
}
