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

#ifndef CFMIMO_PHASE_HPP
#define CFMIMO_PHASE_HPP

#include <complex>
#include <cstddef>

#include <armadillo>

#include "cfmimo/netmodel.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

// Oscillator and timing parameters shared by all links. Phase-increment
// variances are in rad^2 per symbol; carrier and symbol time are kept here
// because the variances derive from them when oscillator constants are
// given instead.
struct PhaseParams {
    double sigma2_ap = 0.0;      // rad^2 per symbol, AP oscillators
    double sigma2_ue = 0.0;      // rad^2 per symbol, UE oscillators
    double carrier_hz = 2.0e9;   // f_c
    double symbol_s = 5.0e-8;    // T_s

    void validate() const;
};

// Wiener phase-increment variance 4 pi^2 f_c^2 c T_s for oscillator
// constant c (in seconds).
double variance_from_oscillator(double osc_const_s, double carrier_hz, double symbol_s);

// Unit phasor exp(-j 2 pi dt / T_s). The ratio is reduced modulo one
// before the angle is formed, so large multi-symbol delays keep full
// precision.
std::complex<double> delay_phase(double delta_t_s, double symbol_s);

// Per-link delay phasors theta, L x K.
struct DelayPhases {
    arma::cx_mat theta;
};

DelayPhases delay_phases_from_scene(const NetworkScene &scene, double symbol_s);
DelayPhases unit_delay_phases(std::size_t L, std::size_t K);
DelayPhases random_delay_phases(std::size_t L, std::size_t K, RngStream &rng);

// Oscillator phase trajectories over one coherence block. Column n holds
// the phases at instant n; column 0 is the initial phase, drawn uniformly
// on [0, 2 pi).
struct PhasePath {
    arma::mat ue; // K x (tau_c + 1)
    arma::mat ap; // L x (tau_c + 1)
};

PhasePath sample_phase_paths(const PhaseParams &params, std::size_t L, std::size_t K,
                             std::size_t tau_c, RngStream &rng);

// E{ exp(j (phase at n+gap minus phase at n)) } for the compound AP+UE
// walk: exp(-gap/2 (sigma2_ap + sigma2_ue)).
double theta_mean(std::size_t gap, const PhaseParams &params);

// Single-walk coherence decay exp(-gap * sigma2).
double eta(std::size_t gap, double sigma2);

// Combined channel at one instant: theta * exp(j(phi_ue + phi_ap)) * h.
arma::cx_vec effective_channel(const arma::cx_vec &h, std::complex<double> theta, double phase_ue,
                               double phase_ap);

} // namespace cfmimo

#endif
