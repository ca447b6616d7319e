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

#ifndef CFMIMO_CHANEST_HPP
#define CFMIMO_CHANEST_HPP

#include <cstddef>
#include <vector>

#include <armadillo>

#include "cfmimo/phase.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

// Time-multiplexed pilots: UE k transmits alone at instant pilot_instant[k]
// (1-based, within 1..tau_p). UEs sharing an instant contaminate each
// other; copilot[k] lists them, including k itself.
struct PilotPlan {
    std::size_t tau_p = 0;
    std::vector<std::size_t> pilot_instant;
    std::vector<std::vector<std::size_t>> copilot;
};

// Round-robin assignment: UE k gets instant (k mod tau_p) + 1.
PilotPlan assign_pilots(std::size_t K, std::size_t tau_p);

// Second-order estimation statistics for every link, evaluated at the
// estimation instant lambda = tau_p + 1. Matrices are indexed
// (k, l) -> k * L + l; qbar is indexed (k, j, l) with j the position of
// the interfering UE inside copilot[k].
struct EstimationStats {
    std::size_t L = 0, K = 0, N = 0;
    std::size_t lambda = 0;
    PilotPlan plan;
    std::vector<double> pilot_power_w; // per UE
    double noise_w = 0.0;
    std::vector<double> decay;         // e^{-(lambda - t_k)(sigma2_ap + sigma2_ue)}
    std::vector<arma::cx_mat> psi;     // inverse pilot-observation covariance
    std::vector<arma::cx_mat> q;       // estimate covariance
    std::vector<arma::cx_mat> qbar;    // cross statistics, copilot links only
    std::vector<std::size_t> qbar_offset; // per-UE start into qbar (group sizes may differ)
    std::vector<arma::cx_mat> est_gain; // sqrt(p_k decay_k) R Psi, applied to the observation

    const arma::cx_mat &psi_at(std::size_t k, std::size_t l) const { return psi[k * L + l]; }
    const arma::cx_mat &q_at(std::size_t k, std::size_t l) const { return q[k * L + l]; }
    const arma::cx_mat &qbar_at(std::size_t k, std::size_t j, std::size_t l) const
    {
        return qbar[qbar_offset[k] + j * L + l];
    }
};

// Inverse covariance of the pilot observation for UE k at AP l:
// (sum over copilot i of p_i R_il + noise I)^-1. Throws when the sum is
// numerically singular.
arma::cx_mat psi_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                        const std::vector<double> &pilot_power_w, double noise_w, std::size_t k,
                        std::size_t l);

// Estimate covariance p_k decay_k R_kl Psi_kl R_kl.
arma::cx_mat q_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                      const std::vector<double> &pilot_power_w, double noise_w,
                      const PhaseParams &phase, std::size_t k, std::size_t l);

// Cross statistic sqrt(p_k p_i) decay_k R_il Psi_kl R_kl for copilot UE i.
arma::cx_mat qbar_matrix(const std::vector<arma::cx_mat> &R, std::size_t L, const PilotPlan &plan,
                         const std::vector<double> &pilot_power_w, double noise_w,
                         const PhaseParams &phase, std::size_t k, std::size_t i, std::size_t l);

EstimationStats build_estimation_stats(const std::vector<arma::cx_mat> &R, std::size_t L,
                                       std::size_t K, std::size_t N, const PilotPlan &plan,
                                       const std::vector<double> &pilot_power_w, double noise_w,
                                       const PhaseParams &phase);

// Pilot-phase observations z_l[t], one N-vector per AP and pilot instant,
// stored as an N x tau_p matrix per AP. Channels are indexed (k, l).
std::vector<arma::cx_mat> received_pilot(const PilotPlan &plan,
                                         const std::vector<double> &pilot_power_w, double noise_w,
                                         const DelayPhases &delays, const PhasePath &paths,
                                         const std::vector<arma::cx_vec> &channels, std::size_t L,
                                         std::size_t N, RngStream &rng);

// MMSE estimate of the combined channel at instant lambda from the pilot
// observation of UE k at AP l.
arma::cx_vec mmse_estimate(const arma::cx_vec &observation, const EstimationStats &stats,
                           std::size_t k, std::size_t l, std::complex<double> theta_kl);

// Normalized estimation error trace(R - Q) / trace(R), clamped to [0, 1]
// after a small-tolerance sanity check.
double nmse(const arma::cx_mat &R, const arma::cx_mat &Q);

} // namespace cfmimo

#endif
