// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - cell-free massive MIMO downlink simulator with asynchronous reception
// Copyright (C) 2026 cfmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
// except in compliance with the License. You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software distributed under the
// License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
// either express or implied. See the License for the specific language governing permissions
// and limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "cfmimo/chanest.hpp"
#include "test_util.hpp"

using namespace cfmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("round-robin pilot assignment", "[chanest]")
{
    PilotPlan plan = assign_pilots(7, 3);
    REQUIRE(plan.tau_p == 3);
    REQUIRE(plan.pilot_instant == std::vector<std::size_t>{1, 2, 3, 1, 2, 3, 1});
    REQUIRE(plan.copilot[0] == std::vector<std::size_t>{0, 3, 6});
    REQUIRE(plan.copilot[4] == std::vector<std::size_t>{1, 4});
    for (std::size_t k = 0; k < 7; ++k)
    {
        REQUIRE(std::is_sorted(plan.copilot[k].begin(), plan.copilot[k].end()));
        REQUIRE(std::count(plan.copilot[k].begin(), plan.copilot[k].end(), k) == 1);
    }

    // Enough pilots for everyone: singleton groups.
    PilotPlan lone = assign_pilots(3, 8);
    for (std::size_t k = 0; k < 3; ++k)
        REQUIRE(lone.copilot[k] == std::vector<std::size_t>{k});

    REQUIRE_THROWS_AS(assign_pilots(0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(assign_pilots(4, 0), std::invalid_argument);
}

namespace {

// Two terminals sharing one pilot over two nodes, random correlation.
struct Fixture {
    std::size_t L = 2, K = 2, N = 3;
    PilotPlan plan = assign_pilots(2, 1);
    std::vector<double> powers{0.8, 1.7};
    double noise = 0.3;
    PhaseParams phase;
    std::vector<arma::cx_mat> R;

    explicit Fixture(std::uint64_t seed)
    {
        phase.sigma2_ap = 0.02;
        phase.sigma2_ue = 0.01;
        RngStream rng(seed);
        for (std::size_t i = 0; i < K * L; ++i)
            R.push_back(cfmimo::test::random_psd(N, rng.uniform(1.0, 4.0), rng));
    }

    EstimationStats stats() const
    {
        return build_estimation_stats(R, L, K, N, plan, powers, noise, phase);
    }
};

} // namespace

TEST_CASE("psi inverts the pilot observation covariance", "[chanest]")
{
    Fixture fx(101);
    EstimationStats stats = fx.stats();
    for (std::size_t k = 0; k < fx.K; ++k)
        for (std::size_t l = 0; l < fx.L; ++l)
        {
            arma::cx_mat cov(fx.N, fx.N, arma::fill::zeros);
            for (std::size_t i : fx.plan.copilot[k])
                cov += fx.powers[i] * fx.R[i * fx.L + l];
            cov += fx.noise * arma::eye<arma::cx_mat>(fx.N, fx.N);
            arma::cx_mat prod = stats.psi_at(k, l) * cov;
            REQUIRE(arma::norm(prod - arma::eye<arma::cx_mat>(fx.N, fx.N), "fro") < 1e-10);
        }
}

TEST_CASE("pilot decay follows the estimation gap", "[chanest]")
{
    PhaseParams phase;
    phase.sigma2_ap = 0.004;
    phase.sigma2_ue = 0.001;
    std::vector<arma::cx_mat> R(6, arma::cx_mat(arma::eye<arma::cx_mat>(2, 2)));
    PilotPlan plan = assign_pilots(3, 3); // instants 1, 2, 3; lambda = 4
    EstimationStats stats =
        build_estimation_stats(R, 2, 3, 2, plan, {1.0, 1.0, 1.0}, 0.1, phase);

    REQUIRE(stats.lambda == 4);
    for (std::size_t k = 0; k < 3; ++k)
    {
        double gap = double(stats.lambda - plan.pilot_instant[k]);
        REQUIRE_THAT(stats.decay[k],
                     WithinRel(std::exp(-gap * (phase.sigma2_ap + phase.sigma2_ue)), 1e-14));
    }
    // The earliest pilot decays the most.
    REQUIRE(stats.decay[0] < stats.decay[2]);
}

TEST_CASE("scalar statistics match the closed form", "[chanest]")
{
    // Single terminal, identity correlation scaled by beta: every matrix is
    // diagonal and the estimate covariance has the textbook scalar value.
    const double beta = 2.5, p = 1.4, noise = 0.6;
    PhaseParams phase;
    phase.sigma2_ap = 0.03;
    phase.sigma2_ue = 0.02;
    std::vector<arma::cx_mat> R{beta * arma::eye<arma::cx_mat>(2, 2)};
    PilotPlan plan = assign_pilots(1, 1);
    EstimationStats stats = build_estimation_stats(R, 1, 1, 2, plan, {p}, noise, phase);

    double decay = std::exp(-1.0 * (phase.sigma2_ap + phase.sigma2_ue));
    double q_scalar = p * decay * beta * beta / (p * beta + noise);
    REQUIRE_THAT(stats.q_at(0, 0)(0, 0).real(), WithinRel(q_scalar, 1e-13));
    REQUIRE_THAT(std::abs(stats.q_at(0, 0)(0, 1)), WithinAbs(0.0, 1e-15));
}

TEST_CASE("diagonal cross statistic is the estimate covariance, bit for bit", "[chanest]")
{
    Fixture fx(103);
    EstimationStats stats = fx.stats();
    for (std::size_t k = 0; k < fx.K; ++k)
    {
        const auto &group = fx.plan.copilot[k];
        auto j = std::size_t(std::find(group.begin(), group.end(), k) - group.begin());
        for (std::size_t l = 0; l < fx.L; ++l)
            REQUIRE(cfmimo::test::bitwise_equal(stats.qbar_at(k, j, l), stats.q_at(k, l)));
    }
}

TEST_CASE("estimate covariance never exceeds the channel covariance", "[chanest]")
{
    RngStream rng(107);
    for (int trial = 0; trial < 100; ++trial)
    {
        std::size_t n = 1 + (rng.next_u64() % 4);
        std::vector<arma::cx_mat> R;
        R.push_back(cfmimo::test::random_psd(n, rng.uniform(0.5, 5.0), rng));
        R.push_back(cfmimo::test::random_psd(n, rng.uniform(0.5, 5.0), rng));
        PhaseParams phase;
        phase.sigma2_ap = rng.uniform(0.0, 0.1);
        phase.sigma2_ue = rng.uniform(0.0, 0.1);
        std::vector<double> powers{rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
        EstimationStats stats = build_estimation_stats(R, 1, 2, n, assign_pilots(2, 1), powers,
                                                       rng.uniform(0.05, 1.0), phase);
        for (std::size_t k = 0; k < 2; ++k)
        {
            arma::vec ev = arma::eig_sym(arma::cx_mat(R[k] - stats.q_at(k, 0)));
            REQUIRE(ev.min() > -1e-10 * arma::trace(arma::real(R[k])));
        }
    }
}

TEST_CASE("received pilots have the predicted covariance", "[chanest]")
{
    Fixture fx(109);
    const std::size_t draws = 100000;
    DelayPhases delays = unit_delay_phases(fx.L, fx.K);
    delays.theta(0, 0) = std::polar(1.0, 0.4);
    delays.theta(1, 1) = std::polar(1.0, -1.3);

    RngStream rng(211);
    std::vector<arma::cx_mat> chol(fx.K * fx.L);
    for (std::size_t i = 0; i < chol.size(); ++i)
        chol[i] = arma::chol(fx.R[i], "lower");

    arma::cx_mat cov(fx.N, fx.N, arma::fill::zeros);
    const std::size_t l_probe = 1, t_probe = 0;
    for (std::size_t d = 0; d < draws; ++d)
    {
        std::vector<arma::cx_vec> channels(fx.K * fx.L);
        for (std::size_t i = 0; i < channels.size(); ++i)
            channels[i] = chol[i] * rng.cnormal_vec(fx.N);
        PhasePath paths = sample_phase_paths(fx.phase, fx.L, fx.K, fx.plan.tau_p + 1, rng);
        auto z = received_pilot(fx.plan, fx.powers, fx.noise, delays, paths, channels, fx.L,
                                fx.N, rng);
        arma::cx_vec obs = z[l_probe].col(t_probe);
        cov += obs * obs.t();
    }
    cov /= double(draws);

    // Unit-modulus rotations drop out of the covariance.
    arma::cx_mat expected(fx.N, fx.N, arma::fill::zeros);
    for (std::size_t i : fx.plan.copilot[0])
        expected += fx.powers[i] * fx.R[i * fx.L + l_probe];
    expected += fx.noise * arma::eye<arma::cx_mat>(fx.N, fx.N);

    REQUIRE(arma::norm(cov - expected, "fro") < 0.02 * arma::norm(expected, "fro"));
}

TEST_CASE("estimate and error covariances converge to the statistics", "[chanest]")
{
    Fixture fx(113);
    const std::size_t draws = 100000;
    const std::size_t k_probe = 1, l_probe = 0;
    RngStream geo(219);
    DelayPhases delays = random_delay_phases(fx.L, fx.K, geo);
    EstimationStats stats = fx.stats();

    std::vector<arma::cx_mat> chol(fx.K * fx.L);
    for (std::size_t i = 0; i < chol.size(); ++i)
        chol[i] = arma::chol(fx.R[i], "lower");

    RngStream rng(223);
    arma::cx_mat est_cov(fx.N, fx.N, arma::fill::zeros);
    arma::cx_mat err_cov(fx.N, fx.N, arma::fill::zeros);
    arma::cx_mat cross(fx.N, fx.N, arma::fill::zeros);
    for (std::size_t d = 0; d < draws; ++d)
    {
        std::vector<arma::cx_vec> channels(fx.K * fx.L);
        for (std::size_t i = 0; i < channels.size(); ++i)
            channels[i] = chol[i] * rng.cnormal_vec(fx.N);
        PhasePath paths = sample_phase_paths(fx.phase, fx.L, fx.K, fx.plan.tau_p + 1, rng);
        auto z = received_pilot(fx.plan, fx.powers, fx.noise, delays, paths, channels, fx.L,
                                fx.N, rng);

        arma::cx_vec obs = z[l_probe].col(fx.plan.pilot_instant[k_probe] - 1);
        // The estimator returns the delay-derotated channel; re-rotating by
        // theta gives the estimate of the combined channel itself.
        arma::cx_vec est =
            delays.theta(l_probe, k_probe) *
            mmse_estimate(obs, stats, k_probe, l_probe, delays.theta(l_probe, k_probe));
        arma::cx_vec truth = effective_channel(
            channels[k_probe * fx.L + l_probe], delays.theta(l_probe, k_probe),
            paths.ue(k_probe, stats.lambda), paths.ap(l_probe, stats.lambda));
        arma::cx_vec err = truth - est;

        est_cov += est * est.t();
        err_cov += err * err.t();
        cross += est * err.t();
    }
    est_cov /= double(draws);
    err_cov /= double(draws);
    cross /= double(draws);

    const arma::cx_mat &r = fx.R[k_probe * fx.L + l_probe];
    const arma::cx_mat &q = stats.q_at(k_probe, l_probe);
    REQUIRE(arma::norm(est_cov - q, "fro") < 0.02 * arma::norm(r, "fro"));
    REQUIRE(arma::norm(err_cov - (r - q), "fro") < 0.02 * arma::norm(r, "fro"));
    // The estimate is uncorrelated with its error.
    REQUIRE(arma::norm(cross, "fro") < 0.02 * arma::norm(r, "fro"));
}

TEST_CASE("mmse estimate is the gain matrix applied to the observation", "[chanest]")
{
    Fixture fx(127);
    EstimationStats stats = fx.stats();
    RngStream rng(229);
    arma::cx_vec obs = rng.cnormal_vec(fx.N);
    std::complex<double> theta = std::polar(1.0, 0.9);

    arma::cx_vec est = mmse_estimate(obs, stats, 0, 1, theta);
    arma::cx_vec expected = std::conj(theta) * (stats.est_gain[0 * fx.L + 1] * obs);
    REQUIRE(arma::norm(est - expected, "fro") < 1e-14 * arma::norm(expected, "fro"));
}

TEST_CASE("normalized estimation error", "[chanest]")
{
    // Unit-gain link at linear SNR 1000 with one pilot and no phase noise:
    // the error is exactly 1/(SNR + 1) of the channel power.
    PhaseParams ideal;
    std::vector<arma::cx_mat> R{arma::eye<arma::cx_mat>(2, 2)};
    EstimationStats stats =
        build_estimation_stats(R, 1, 1, 2, assign_pilots(1, 1), {1000.0}, 1.0, ideal);
    REQUIRE_THAT(nmse(R[0], stats.q_at(0, 0)), WithinRel(1.0 - 1000.0 / 1001.0, 1e-12));

    REQUIRE(nmse(R[0], R[0]) == 0.0);
    REQUIRE(nmse(R[0], arma::cx_mat(2, 2, arma::fill::zeros)) == 1.0);
    REQUIRE(nmse(R[0], arma::cx_mat((1.0 + 1e-12) * R[0])) == 0.0);
    REQUIRE_THROWS_AS(nmse(arma::cx_mat(2, 2, arma::fill::zeros), R[0]), std::domain_error);
    REQUIRE_THROWS_AS(nmse(R[0], arma::cx_mat(1.5 * R[0])), std::runtime_error);
}

TEST_CASE("estimation error grows with the phase-increment variance", "[chanest]")
{
    Fixture fx(131);
    double last = -1.0;
    for (double sigma : {0.0, 1e-4, 1e-3, 1e-2, 1e-1})
    {
        PhaseParams phase = fx.phase;
        phase.sigma2_ap = sigma;
        phase.sigma2_ue = sigma;
        EstimationStats stats =
            build_estimation_stats(fx.R, fx.L, fx.K, fx.N, fx.plan, fx.powers, fx.noise, phase);
        double value = nmse(fx.R[0], stats.q_at(0, 0));
        REQUIRE(value > last);
        REQUIRE(value >= 0.0);
        REQUIRE(value <= 1.0);
        last = value;
    }
}

TEST_CASE("estimation statistics validate their inputs", "[chanest]")
{
    Fixture fx(137);
    REQUIRE_THROWS_AS(build_estimation_stats(fx.R, fx.L, fx.K + 1, fx.N, fx.plan, fx.powers,
                                             fx.noise, fx.phase),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        build_estimation_stats(fx.R, fx.L, fx.K, fx.N, fx.plan, {0.8}, fx.noise, fx.phase),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        build_estimation_stats(fx.R, fx.L, fx.K, fx.N, fx.plan, fx.powers, 0.0, fx.phase),
        std::invalid_argument);
}
