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

#ifndef CFMIMO_EXPERIMENT_HPP
#define CFMIMO_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/mcsim.hpp"
#include "cfmimo/sedf.hpp"

namespace cfmimo {

// One tabular result: CSV rows (cells preformatted with round-trip float
// formatting, so reruns are byte-comparable) plus a JSON metadata sidecar
// embedding the resolved configuration.
struct FigureData {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::string meta_json;
};

std::string figure_csv(const FigureData &data);

// Writes <name>.csv and <name>.meta.json under out_dir, creating the
// directory if needed.
void write_figure_data(const FigureData &data, const std::string &out_dir);

// Assembles the complete evaluation scenario for one sampled layout:
// network scene, delay phases (geometric or unit), pilot plan, and
// estimation statistics.
SeScenario make_scenario(const SceneConfig &scene_cfg, const PhaseParams &phase,
                         std::size_t tau_p, std::size_t tau_c, double pilot_power_w,
                         double pilot_noise_w, double down_power_w, double down_noise_w,
                         bool geometric_delays, RngStream &rng);

// Estimation-error sweep over the phase-increment variance, one curve per
// pilot length. Columns: sigma2_db, tau_p, nmse_mean, nmse_p05, nmse_p95.
FigureData run_nmse_sweep(const ExperimentConfig &cfg, std::uint64_t seed);

// Per-UE spectral-efficiency CDF for the ideal, oscillator-only, and
// delay-only cases (delay-aware precoding), closed form across all scenes
// plus a simulated overlay on the first mc_scenes layouts.
// Columns: case, source, scene, ue, se, cdf.
FigureData run_se_cdf(const ExperimentConfig &cfg, std::uint64_t seed);

// Sum spectral efficiency against the common phase-increment variance for
// the three transmission strategies. Columns: sigma2_db, mode, precoder,
// sum_se.
FigureData run_sum_se_sweep(const ExperimentConfig &cfg, std::uint64_t seed);

// Sum spectral efficiency on the (AP variance, UE variance) grid for each
// (n_ap, n_antennas) setting, layout-averaged. Columns: n_ap, n_antennas,
// sigma2_ap_db, sigma2_ue_db, sum_se.
FigureData run_phase_grid(const ExperimentConfig &cfg, std::uint64_t seed);

// Closed form against simulation on the desk-scale scenario for all three
// strategies. corrupt is a test hook: "numerator" skews the closed-form
// values by 1.5x so the suite must report failure; empty disables it.
struct ValidationRun {
    std::vector<ValidationReport> reports;
    int exit_code = 0; // 0 pass, 2 fail, 3 inconclusive
    std::string json;
};

ValidationRun run_validation(const ExperimentConfig &cfg, std::uint64_t seed,
                             const std::string &corrupt = "");

} // namespace cfmimo

#endif
