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

#include "cfmimo/phase.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfmimo {

void PhaseParams::validate() const
{
    if (sigma2_ap < 0.0 || sigma2_ue < 0.0)
        throw std::invalid_argument("phase: increment variances must be nonnegative");
    if (!(carrier_hz > 0.0))
        throw std::invalid_argument("phase.f_c_hz must be positive");
    if (!(symbol_s > 0.0))
        throw std::invalid_argument("phase: symbol time must be positive");
}

double variance_from_oscillator(double osc_const_s, double carrier_hz, double symbol_s)
{
    if (osc_const_s < 0.0)
        throw std::invalid_argument("phase: oscillator constant must be nonnegative");
    if (!(carrier_hz > 0.0) || !(symbol_s > 0.0))
        throw std::invalid_argument("phase: carrier and symbol time must be positive");
    double two_pi_fc = 2.0 * std::numbers::pi * carrier_hz;
    return two_pi_fc * two_pi_fc * osc_const_s * symbol_s;
}

std::complex<double> delay_phase(double delta_t_s, double symbol_s)
{
    if (!(symbol_s > 0.0))
        throw std::invalid_argument("phase: symbol time must be positive");
    double turns = std::fmod(delta_t_s / symbol_s, 1.0);
    double angle = -2.0 * std::numbers::pi * turns;
    return {std::cos(angle), std::sin(angle)};
}

DelayPhases delay_phases_from_scene(const NetworkScene &scene, double symbol_s)
{
    DelayPhases phases;
    phases.theta.set_size(scene.delta_t.n_rows, scene.delta_t.n_cols);
    for (std::size_t l = 0; l < scene.delta_t.n_rows; ++l)
        for (std::size_t k = 0; k < scene.delta_t.n_cols; ++k)
            phases.theta(l, k) = delay_phase(scene.delta_t(l, k), symbol_s);
    return phases;
}

DelayPhases unit_delay_phases(std::size_t L, std::size_t K)
{
    DelayPhases phases;
    phases.theta.set_size(L, K);
    phases.theta.fill(std::complex<double>(1.0, 0.0));
    return phases;
}

DelayPhases random_delay_phases(std::size_t L, std::size_t K, RngStream &rng)
{
    DelayPhases phases;
    phases.theta.set_size(L, K);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t k = 0; k < K; ++k)
        {
            double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            phases.theta(l, k) = std::complex<double>(std::cos(angle), std::sin(angle));
        }
    return phases;
}

namespace {

void fill_walks(arma::mat &walks, double sigma2, RngStream &rng)
{
    double stddev = std::sqrt(sigma2);
    for (std::size_t row = 0; row < walks.n_rows; ++row)
    {
        walks(row, 0) = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t n = 1; n < walks.n_cols; ++n)
            walks(row, n) = walks(row, n - 1) + rng.normal(stddev);
    }
}

} // namespace

PhasePath sample_phase_paths(const PhaseParams &params, std::size_t L, std::size_t K,
                             std::size_t tau_c, RngStream &rng)
{
    params.validate();

    PhasePath path;
    path.ue.set_size(K, tau_c + 1);
    path.ap.set_size(L, tau_c + 1);
    fill_walks(path.ue, params.sigma2_ue, rng);
    fill_walks(path.ap, params.sigma2_ap, rng);
    return path;
}

double theta_mean(std::size_t gap, const PhaseParams &params)
{
    return std::exp(-0.5 * double(gap) * (params.sigma2_ap + params.sigma2_ue));
}

double eta(std::size_t gap, double sigma2) { return std::exp(-double(gap) * sigma2); }

arma::cx_vec effective_channel(const arma::cx_vec &h, std::complex<double> theta, double phase_ue,
                               double phase_ap)
{
    double angle = phase_ue + phase_ap;
    std::complex<double> rotation(std::cos(angle), std::sin(angle));
    return (theta * rotation) * h;
}

} // namespace cfmimo
