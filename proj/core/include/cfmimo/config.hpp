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

#ifndef CFMIMO_CONFIG_HPP
#define CFMIMO_CONFIG_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfmimo/netmodel.hpp"
#include "cfmimo/phase.hpp"

namespace cfmimo {

// Experiment-specific knobs. Sweep axes are phase-increment variances in
// dB (10 log10 of rad^2 per symbol).

struct Fig1Config {
    bool fixed_snr = true; // equalize per-link pilot SNR instead of using geometry
    double snr_db = 30.0;
    std::vector<std::size_t> tau_p_list{5, 10, 20};
    double db_min = -40.0;
    double db_max = 0.0;
    double db_step = 2.5;
};

struct Fig2Config {
    double sigma2_db = -30.0; // oscillator-only case, both ends
    std::size_t mc_scenes = 1;
    std::size_t mc_trials = 1000; // full-block instants make trials costly
};

struct Fig3Config {
    double db_min = -50.0;
    double db_max = -20.0;
    double db_step = 5.0;
};

struct Fig4Config {
    std::vector<double> ap_db{-50.0, -35.0, -20.0};
    std::vector<double> ue_db{-50.0, -35.0, -20.0};
    // (number of APs, antennas per AP); total antennas stay comparable
    std::vector<std::array<std::size_t, 2>> settings{{100, 2}, {200, 4}};
};

struct ValidateConfig {
    double tol_rel = 0.03;
    std::size_t n_ap = 10;
    std::size_t n_ue = 4;
    std::size_t n_antennas = 2;
    std::size_t tau_p = 2;
    std::size_t tau_c = 50;
    double sigma2_ap_db = -30.0;
    double sigma2_ue_db = -30.0;
    std::vector<std::size_t> instants; // empty: {lambda, lambda + 10, tau_c}
};

// How the phase-increment variances were specified; the canonical form
// echoes the same representation so reparsing is exact.
enum class PhaseInput {
    Zero,        // no variance keys given
    VariancesDb, // sigma2_ap_db / sigma2_ue_db
    Oscillator,  // c_ap / c_ue constants
};

// Fully resolved run settings. dB and dBm inputs are converted here, once;
// everything downstream works in linear units. The boundary-unit inputs
// are kept verbatim so the canonical JSON form uses the input schema: it
// parses back to bit-identical settings, which is what lets an output file
// embed the exact configuration that produced it.
struct ExperimentConfig {
    SceneConfig scene;
    PhaseParams phase;
    std::size_t tau_p = 10;
    std::size_t tau_c = 200;
    double pilot_power_w = 0.0;
    double down_power_w = 0.0;
    double pilot_noise_w = 0.0;
    double down_noise_w = 0.0;
    std::size_t mc_trials = 20000;
    std::size_t mc_batch_count = 20;
    std::vector<std::size_t> mc_instants; // empty: mcsim default
    std::size_t num_scenes = 0;           // 0: per-experiment default
    std::string out_dir = "out";

    Fig1Config fig1;
    Fig2Config fig2;
    Fig3Config fig3;
    Fig4Config fig4;
    ValidateConfig validation;

    // Boundary-unit echoes of the inputs behind the linear fields above.
    double pilot_dbm = 23.0;
    double down_dbm = 23.0;
    double pilot_noise_dbm = -96.0;
    double down_noise_dbm = -96.0;
    double bandwidth_hz = 2.0e7;
    PhaseInput phase_input = PhaseInput::Zero;
    double sigma2_ap_db_in = 0.0, sigma2_ue_db_in = 0.0;
    bool sigma2_ap_db_given = false, sigma2_ue_db_given = false;
    double c_ap_in = 0.0, c_ue_in = 0.0;
    bool c_ap_given = false, c_ue_given = false;
    double angular_std_deg = 10.0;

    std::string resolved_json;
    std::uint64_t hash() const;

    std::size_t scenes_or(std::size_t experiment_default) const
    {
        return num_scenes > 0 ? num_scenes : experiment_default;
    }
};

// Builds the default configuration; equivalent to parsing "{}".
ExperimentConfig default_config();

// Parses JSON text. Every key is optional and defaults are filled in;
// unknown keys raise std::invalid_argument naming the offending path, as
// do mutually exclusive phase forms (variances in dB vs oscillator
// constants) given together.
ExperimentConfig parse_config(const std::string &json_text);

ExperimentConfig load_config_file(const std::string &path);

// Canonical JSON form of a configuration, in the same schema parse_config
// accepts. parse_config(render_config(cfg)) reproduces cfg exactly, so
// outputs embed this string and a rerun from it is bit-identical. Call it
// again after mutating a parsed config (e.g. command line overrides) to
// refresh cfg.resolved_json.
std::string render_config(const ExperimentConfig &cfg);

} // namespace cfmimo

#endif
