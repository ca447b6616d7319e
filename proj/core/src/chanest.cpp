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

#include "cfmimo/chanest.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cfmimo {

PilotPlan assign_pilots(std::size_t K, std::size_t tau_p)
{
    if (K == 0)
        throw std::invalid_argument("assign_pilots: need at least one UE");
    if (tau_p == 0)
        throw std::invalid_argument("assign_pilots: tau_p must be at least 1");

    PilotPlan plan;
    plan.tau_p = tau_p;
    plan.pilot_instant.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        plan.pilot_instant[k] = (k % tau_p) + 1;

    plan.copilot.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < K; ++i)
            if (plan.pilot_instant[i] == plan.pilot_instant[k])
                plan.copilot[k].push_back(i);
    return plan;
}

namespace {

double pilot_decay(const PilotPlan &plan, const PhaseParams &phase, std::size_t k)
{
    std::size_t lambda = plan.tau_p + 1;
    double gap = double(lambda - plan.pilot_instant[k]);
    return std::exp(-gap * (phase.sigma2_ap + phase.sigma2_ue));
}

arma::cx_mat observation_covariance(const std::vector<arma::cx_mat> &R, std::size_t L,
                                    const PilotPlan &plan,
                                    const std::vector<double> &pilot_power_w, double noise_w,
                                    std::size_t k, std::size_t l)
{
    std::size_t n = R[k * L + l].n_rows;
    arma::cx_mat sum(n, n, arma::fill::zeros);
    for (std::size_t i : plan.copilot[k])
        sum += pilot_power_w[i] * R[i * L + l];
    sum += noise_w * arma::cx_mat(arma::eye<arma::mat>(n, n), arma::zeros<arma::mat>(n, n));
    return sum;
}

} // namespace

arma::cx_mat psi_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                        const std::vector<double> &pilot_power_w, double noise_w, std::size_t k,
                        std::size_t l)
{
    arma::cx_mat cov = observation_covariance(R, L, plan, pilot_power_w, noise_w, k, l);
    double rc = arma::rcond(cov);
    if (!(rc > 1e-14))
        throw std::runtime_error("psi_matrix: observation covariance numerically singular at (k=" +
                                 std::to_string(k) + ", l=" + std::to_string(l) + ")");
    return arma::inv_sympd(cov);
}

arma::cx_mat q_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                      const std::vector<double> &pilot_power_w, double noise_w,
                      const PhaseParams &phase, std::size_t k, std::size_t l)
{
    return qbar_matrix(R, L, plan, pilot_power_w, noise_w, phase, k, k, l);
}

arma::cx_mat qbar_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                         const std::vector<double> &pilot_power_w, double noise_w,
                         const PhaseParams &phase, std::size_t k, std::size_t i, std::size_t l)
{
    if (plan.pilot_instant[i] != plan.pilot_instant[k])
        throw std::invalid_argument("qbar_matrix: UEs " + std::to_string(k) + " and " +
                                    std::to_string(i) + " do not share a pilot");
    // For i == k the power factor is exactly p_k, so the diagonal case
    // reproduces q_matrix bit for bit.
    double power = (i == k) ? pilot_power_w[k] : std::sqrt(pilot_power_w[k] * pilot_power_w[i]);
    double scale = power * pilot_decay(plan, phase, k);
    arma::cx_mat psi = psi_matrix(R, L, plan, pilot_power_w, noise_w, k, l);
    return scale * (R[i * L + l] * psi * R[k * L + l]);
}

EstimationStats build_estimation_stats(const std::vector<arma::cx_mat> &R, std::size_t L,
                                       std::size_t K, std::size_t N, const PilotPlan &plan,
                                       const std::vector<double> &pilot_power_w, double noise_w,
                                       const PhaseParams &phase)
{
    if (R.size() != K * L)
        throw std::invalid_argument("build_estimation_stats: R must hold K * L matrices");
    if (pilot_power_w.size() != K)
        throw std::invalid_argument("build_estimation_stats: need one pilot power per UE");
    for (double p : pilot_power_w)
        if (!(p >= 0.0))
            throw std::invalid_argument("build_estimation_stats: pilot powers must be nonnegative");
    if (!(noise_w > 0.0))
        throw std::invalid_argument("build_estimation_stats: noise power must be positive");
    phase.validate();

    EstimationStats stats;
    stats.L = L;
    stats.K = K;
    stats.N = N;
    stats.lambda = plan.tau_p + 1;
    stats.plan = plan;
    stats.pilot_power_w = pilot_power_w;
    stats.noise_w = noise_w;

    stats.decay.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        stats.decay[k] = pilot_decay(plan, phase, k);

    stats.psi.resize(K * L);
    stats.q.resize(K * L);
    stats.est_gain.resize(K * L);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l)
        {
            arma::cx_mat psi = psi_matrix(R, L, plan, pilot_power_w, noise_w, k, l);
            stats.psi[k * L + l] = psi;
            stats.q[k * L + l] =
                (pilot_power_w[k] * stats.decay[k]) * (R[k * L + l] * psi * R[k * L + l]);
            stats.est_gain[k * L + l] =
                std::sqrt(pilot_power_w[k] * stats.decay[k]) * (R[k * L + l] * psi);
        }

    stats.qbar_offset.resize(K);
    for (std::size_t k = 0; k < K; ++k)
    {
        stats.qbar_offset[k] = stats.qbar.size();
        const auto &group = plan.copilot[k];
        for (std::size_t j = 0; j < group.size(); ++j)
            for (std::size_t l = 0; l < L; ++l)
            {
                std::size_t i = group[j];
                double power = (i == k) ? pilot_power_w[k]
                                        : std::sqrt(pilot_power_w[k] * pilot_power_w[i]);
                stats.qbar.push_back((power * stats.decay[k]) *
                                     (R[i * L + l] * stats.psi[k * L + l] * R[k * L + l]));
            }
    }

    return stats;
}

std::vector<arma::cx_mat> received_pilot(const PilotPlan &plan,
                                         const std::vector<double> &pilot_power_w, double noise_w,
                                         const DelayPhases &delays, const PhasePath &paths,
                                         const std::vector<arma::cx_vec> &channels, std::size_t L,
                                         std::size_t N, RngStream &rng)
{
    std::size_t K = plan.pilot_instant.size();
    double noise_scale = std::sqrt(noise_w);

    std::vector<arma::cx_mat> z(L);
    for (std::size_t l = 0; l < L; ++l)
    {
        z[l].set_size(N, plan.tau_p);
        for (std::size_t t = 0; t < plan.tau_p; ++t)
            z[l].col(t) = noise_scale * rng.cnormal_vec(N);
    }

    for (std::size_t k = 0; k < K; ++k)
    {
        std::size_t t = plan.pilot_instant[k]; // 1-based instant
        double amp = std::sqrt(pilot_power_w[k]);
        for (std::size_t l = 0; l < L; ++l)
        {
            double angle = paths.ue(k, t) + paths.ap(l, t);
            std::complex<double> rotation(std::cos(angle), std::sin(angle));
            z[l].col(t - 1) += (amp * delays.theta(l, k) * rotation) * channels[k * L + l];
        }
    }
    return z;
}

arma::cx_vec mmse_estimate(const arma::cx_vec &observation, const EstimationStats &stats,
                           std::size_t k, std::size_t l, std::complex<double> theta_kl)
{
    return std::conj(theta_kl) * (stats.est_gain[k * stats.L + l] * observation);
}

double nmse(const arma::cx_mat &R, const arma::cx_mat &Q)
{
    double tr_r = arma::trace(arma::real(R));
    if (!(tr_r > 0.0))
        throw std::domain_error("nmse: trace(R) must be positive");

    double value = (tr_r - arma::trace(arma::real(Q))) / tr_r;
    if (value < -1e-10 || value > 1.0 + 1e-10)
        throw std::runtime_error("nmse: value " + std::to_string(value) +
                                 " outside [0, 1] beyond tolerance");
    return std::clamp(value, 0.0, 1.0);
}

} // namespace cfmimo
