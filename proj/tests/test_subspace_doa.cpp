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

#include "mimo_doa/error.hpp"
#include "mimo_doa/rng.hpp"
#include "mimo_doa/subspace_doa.hpp"
#include "oracles/jacobi_eig.hpp"
#include "oracles/reference.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace mimo_doa;
using cd = std::complex<double>;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

CovarianceEstimate noiseless_cov(const std::vector<double> &deg, const ArrayConfig &cfg, int ns, std::uint64_t seed) {
    TargetScene s;
    for (double d : deg) {
        s.angles_rad.push_back(deg_to_rad(d));
    }
    s.rcs = draw_rcs(static_cast<int>(deg.size()), ns, seed);
    return sample_covariance(synthesize(s, cfg, kInf, 0), {0, ns});
}
} // namespace

TEST_CASE("sample_covariance: outer product and validation") {
    Eigen::MatrixXcd y(2, 1);
    y << cd(1, 0), cd(0, 1);
    const auto c = sample_covariance(y, {0, 1});
    CHECK(c.snapshots_used == 1);
    CHECK(std::abs(c.matrix(0, 0) - cd(1, 0)) < 1e-15);
    CHECK(std::abs(c.matrix(0, 1) - cd(0, -1)) < 1e-15);
    CHECK(std::abs(c.matrix(1, 0) - cd(0, 1)) < 1e-15);
    CHECK(std::abs(c.matrix(1, 1) - cd(1, 0)) < 1e-15);
    CHECK_THROWS_AS(sample_covariance(y, {0, 0}), DomainError);
    CHECK_THROWS_AS(sample_covariance(y, {1, 1}), DomainError);
}

TEST_CASE("sample_covariance: noiseless single target is rank one") {
    const auto c = noiseless_cov({17.0}, ArrayConfig{3, 3, 0.5}, 4, 1);
    const auto eig = hermitian_eig(c);
    CHECK(eig.eigenvalues[1] / eig.eigenvalues[0] < 1e-10);
}

TEST_CASE("sample_covariance: white noise converges to sigma^2 I") {
    const ArrayConfig cfg{2, 2, 0.5};
    TargetScene none;
    none.rcs.resize(0, 100000);
    const double snr = -3.0;
    const double sigma2 = snr_to_noise_var(snr);
    const auto block = synthesize(none, cfg, snr, 8);
    const auto c = sample_covariance(block, {0, 100000});
    double max_off = 0.0;
    for (int i = 0; i < 4; ++i) {
        CHECK(c.matrix(i, i).real() == doctest::Approx(sigma2).epsilon(0.02));
        for (int j = 0; j < 4; ++j) {
            if (i != j) {
                max_off = std::max(max_off, std::abs(c.matrix(i, j)));
            }
        }
    }
    CHECK(max_off < 0.05 * sigma2);
}

TEST_CASE("hermitian_eig: simple matrices") {
    CovarianceEstimate id{Eigen::MatrixXcd::Identity(3, 3), 1};
    const auto e = hermitian_eig(id);
    for (int i = 0; i < 3; ++i) {
        CHECK(e.eigenvalues[i] == doctest::Approx(1.0));
    }
    CHECK((e.eigenvectors.adjoint() * e.eigenvectors - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);

    CovarianceEstimate d{Eigen::MatrixXcd::Zero(2, 2), 1};
    d.matrix(0, 0) = 3.0;
    d.matrix(1, 1) = 1.0;
    const auto e2 = hermitian_eig(d);
    CHECK(e2.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(e2.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(std::abs(e2.eigenvectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e2.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
    CovarianceEstimate bad{Eigen::MatrixXcd::Zero(2, 2), 1};
    bad.matrix(0, 1) = cd(1.0, 0.0);
    CHECK_THROWS_AS(hermitian_eig(bad), DomainError);
}

TEST_CASE("hermitian_eig matches the Jacobi oracle on random 8x8 matrices") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXcd r = oracle::random_hermitian(8, rng);
        const auto eig = hermitian_eig({r, 1});
        const auto ref = oracle::hermitian_eigenvalues(r);
        const double scale = std::abs(ref.front()) + std::abs(ref.back());
        for (int i = 0; i < 8; ++i) {
            CHECK(std::abs(eig.eigenvalues[i] - ref[static_cast<std::size_t>(i)]) / scale < 1e-8);
        }
        for (int i = 1; i < 8; ++i) {
            CHECK(eig.eigenvalues[i] <= eig.eigenvalues[i - 1]);
        }
        const Eigen::MatrixXcd recon =
            eig.eigenvectors * eig.eigenvalues.cast<cd>().asDiagonal() * eig.eigenvectors.adjoint();
        CHECK((recon - r).norm() / r.norm() < 1e-8);
        CHECK((eig.eigenvectors.adjoint() * eig.eigenvectors - Eigen::MatrixXcd::Identity(8, 8)).norm() < 1e-8);
    }
}

TEST_CASE("noise_subspace shapes and orthogonality") {
    const ArrayConfig cfg{2, 2, 0.5};
    const auto eig = hermitian_eig(noiseless_cov({5.0}, cfg, 3, 2));
    CHECK(noise_subspace(eig, 1).cols() == 3);
    CHECK_THROWS_AS(noise_subspace(eig, 4), DomainError);
    CHECK_THROWS_AS(noise_subspace(eig, 0), DomainError);
    const auto last = noise_subspace(eig, 3);
    REQUIRE(last.cols() == 1);
    CHECK((last.col(0) - eig.eigenvectors.col(3)).norm() == 0.0);

    const ArrayConfig big{4, 4, 0.5};
    const std::vector<double> deg{-20.0, 31.0};
    const auto un = noise_subspace(hermitian_eig(noiseless_cov(deg, big, 10, 3)), 2);
    for (double d : deg) {
        const Eigen::VectorXcd v = virtual_steering(deg_to_rad(d), big);
        CHECK((un.adjoint() * v).norm() < 1e-8);
    }
}

TEST_CASE("music_spectrum: noiseless single target peaks at the truth") {
    const ArrayConfig cfg{3, 3, 0.5};
    const auto un = noise_subspace(hermitian_eig(noiseless_cov({10.0}, cfg, 4, 5)), 1);
    const AngleGrid grid{-30.0, 30.0, 0.1};
    const auto spec = music_spectrum(un, cfg, grid);
    REQUIRE(spec.values.size() == 601);
    const auto best = std::max_element(spec.values.begin(), spec.values.end()) - spec.values.begin();
    CHECK(spec.grid_deg[static_cast<std::size_t>(best)] == doctest::Approx(10.0));
    // on-grid truth: the projection is numerically zero and hits the clamp
    CHECK(spec.values[static_cast<std::size_t>(best)] > 1e8);
    for (double v : spec.values) {
        CHECK(v > 0.0);
    }

    // brute-force oracle built from the steering projector
    const auto ref = oracle::projector_spectrum({deg_to_rad(10.0)}, 3, 3, spec.grid_deg);
    const auto ref_best = std::max_element(ref.begin(), ref.end()) - ref.begin();
    CHECK(ref_best == best);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (std::abs(spec.grid_deg[i] - 10.0) > 1.0) {
            CHECK(spec.values[i] == doctest::Approx(ref[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("music_spectrum: precondition errors") {
    const ArrayConfig cfg{2, 2, 0.5};
    CHECK_THROWS_AS(music_spectrum(Eigen::MatrixXcd(4, 0), cfg, {0.0, 10.0, 1.0}), DomainError);
    CHECK_THROWS_AS(music_spectrum(Eigen::MatrixXcd::Identity(4, 1), cfg, {0.0, 10.0, 0.0}), DomainError);
    CHECK_THROWS_AS(music_spectrum(Eigen::MatrixXcd::Identity(3, 1), cfg, {0.0, 10.0, 1.0}), DomainError);
}

TEST_CASE("pick_peaks") {
    SpectrumResult s{{0.0, 1.0, 2.0, 3.0, 4.0}, {1.0, 5.0, 1.0, 9.0, 1.0}};
    const auto two = pick_peaks(s, 2);
    CHECK_FALSE(two.degenerate);
    REQUIRE(two.angles_deg.size() == 2);
    CHECK(two.angles_deg[0] == 1.0);
    CHECK(two.angles_deg[1] == 3.0);
    const auto one = pick_peaks(s, 1);
    CHECK(one.angles_deg == std::vector<double>{3.0});

    SpectrumResult mono{{0.0, 1.0, 2.0, 3.0}, {1.0, 2.0, 3.0, 4.0}};
    const auto m = pick_peaks(mono, 1);
    CHECK(m.degenerate);
    CHECK(m.angles_deg == std::vector<double>{3.0});

    // fewer peaks than requested: the fill comes from the largest remaining values
    const auto filled = pick_peaks(s, 3);
    CHECK(filled.degenerate);
    CHECK(filled.angles_deg == std::vector<double>{0.0, 1.0, 3.0});

    // equal peak heights: the lower angle wins
    SpectrumResult tie{{0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 2.0, 1.0, 2.0, 0.0}};
    CHECK(pick_peaks(tie, 1).angles_deg == std::vector<double>{1.0});

    // flat-topped peak counts once, at its lowest angle
    SpectrumResult flat{{0.0, 1.0, 2.0, 3.0}, {0.0, 2.0, 2.0, 0.0}};
    const auto f = pick_peaks(flat, 1);
    CHECK_FALSE(f.degenerate);
    CHECK(f.angles_deg == std::vector<double>{1.0});

    CHECK_THROWS_AS(pick_peaks(s, 0), DomainError);
}

TEST_CASE("MUSIC recovers a noiseless four-target scene") {
    const ArrayConfig cfg{8, 8, 0.5};
    const AngleGrid grid = search_grid_for({20.0, 45.0});
    CHECK(grid.lo_deg == 15.0);
    CHECK(grid.hi_deg == 50.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TargetScene scene = draw_scene({20.0, 45.0}, 4, 5.0, 150, seed);
        const auto block = synthesize(scene, cfg, kInf, 0);
        const auto pick = music_estimate(sample_covariance(block, {0, 150}), cfg, 4, grid);
        CHECK_FALSE(pick.degenerate);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(pick.angles_deg[k] - rad_to_deg(scene.angles_rad[k])) <= 0.05 + 1e-9);
        }
    }
}

TEST_CASE("doa_mse") {
    const std::vector<std::vector<double>> truth{{1.0, 5.0}, {-3.0, 10.0}};
    CHECK(doa_mse(truth, truth) == 0.0);
    const std::vector<std::vector<double>> off{{2.0, 6.0}, {-2.0, 11.0}};
    const double one_deg = std::pow(std::numbers::pi / 180.0, 2);
    CHECK(doa_mse(off, truth) == doctest::Approx(one_deg).epsilon(1e-12));
    CHECK(one_deg == doctest::Approx(3.0462e-4).epsilon(1e-4));
    const std::vector<std::vector<double>> permuted{{5.0, 1.0}, {10.0, -3.0}};
    CHECK(doa_mse(permuted, truth) == 0.0);
    CHECK_THROWS_AS(doa_mse({{1.0}}, truth), DomainError);
    CHECK_THROWS_AS(doa_mse({{1.0}, {2.0}}, truth), DomainError);
}

TEST_CASE("doa_mse is invariant to per-trial permutations") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(-60.0, 60.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::vector<double>> est(5, std::vector<double>(4));
        std::vector<std::vector<double>> tru(5, std::vector<double>(4));
        for (int q = 0; q < 5; ++q) {
            for (int k = 0; k < 4; ++k) {
                est[q][k] = u(rng);
                tru[q][k] = u(rng);
            }
        }
        const double base = doa_mse(est, tru);
        auto est2 = est;
        auto tru2 = tru;
        for (int q = 0; q < 5; ++q) {
            std::shuffle(est2[q].begin(), est2[q].end(), rng);
            std::shuffle(tru2[q].begin(), tru2[q].end(), rng);
        }
        CHECK(doa_mse(est2, tru2) == base);
    }
}
