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

#ifndef CFMIMO_NETMODEL_HPP
#define CFMIMO_NETMODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <armadillo>

#include "cfmimo/rng.hpp"

namespace cfmimo {

// Empirical reference loss of the three-slope model, in dB, for carrier
// frequency in MHz and antenna heights in meters. Valid for the macro
// parameters this model was fitted for; the default heights are 15 m (AP)
// and 1.65 m (UE).
double three_slope_reference_loss_db(double freq_mhz, double ap_height_m = 15.0,
                                     double ue_height_m = 1.65);

// Distance-dependent large-scale fading. Distances below d0 see constant
// loss, between d0 and d1 a 20 dB/decade slope, beyond d1 a 35 dB/decade
// slope; the breakpoint terms make the curve continuous at d0 and d1.
struct PathlossParams {
    double d0_m = 10.0;
    double d1_m = 50.0;
    double ref_loss_db = 141.46457300396514; // three_slope_reference_loss_db(2000.0)
    double shadow_std_db = 0.0;              // 0 disables shadow fading
    double min_dist_m = 1.0;                 // distance floor

    void validate() const;
};

double three_slope_pathloss_db(double dist_m, const PathlossParams &params);
double three_slope_beta(double dist_m, const PathlossParams &params);

enum class CorrelationKind {
    ScaledIdentity,  // R = beta * I
    LocalScattering, // Gaussian angular spread around the AP-UE azimuth
};

struct CorrelationModel {
    CorrelationKind kind = CorrelationKind::ScaledIdentity;
    double angular_std_rad = 0.0; // local scattering only
};

// N x N spatial correlation matrix with trace(R) = N * beta, for a
// half-wavelength uniform linear array. The local-scattering variant
// integrates the steering outer product over a Gaussian angle distribution
// centered at nominal_angle_rad and projects the result onto the PSD cone.
arma::cx_mat correlation_matrix(double beta, std::size_t n_antennas, const CorrelationModel &model,
                                double nominal_angle_rad = 0.0);

struct SceneConfig {
    std::size_t L = 100; // access points
    std::size_t K = 20;  // user terminals
    std::size_t N = 2;   // antennas per access point
    double side_m = 500.0;
    bool wrap_around = false;
    PathlossParams pathloss;
    CorrelationModel correlation;

    void validate() const;
};

// One random network layout together with its large-scale statistics.
// Correlation matrices are indexed (k, l) -> k * L + l.
struct NetworkScene {
    SceneConfig cfg;
    arma::mat ap_pos;  // L x 2
    arma::mat ue_pos;  // K x 2
    arma::mat dist;    // L x K, floored at min_dist_m
    arma::mat beta;    // L x K, linear channel gain
    arma::mat delta_t; // L x K, differential propagation delay in seconds
    std::vector<arma::cx_mat> R;

    const arma::cx_mat &corr(std::size_t k, std::size_t l) const { return R[k * cfg.L + l]; }
};

NetworkScene generate_scene(const SceneConfig &cfg, RngStream &rng);

// Differential delays from a distance matrix: each UE's nearest AP is the
// timing reference, so the per-UE minimum is exactly zero.
arma::mat delay_offsets(const arma::mat &dist_m);

std::string scene_to_json(const NetworkScene &scene);
NetworkScene scene_from_json(const std::string &text);

} // namespace cfmimo

#endif
