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

#ifndef CFMIMO_MCSIM_HPP
#define CFMIMO_MCSIM_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <armadillo>

#include "cfmimo/sedf.hpp"

namespace cfmimo {

// Simulation controls. Instants must lie in [lambda, tau_c]; an empty list
// selects {lambda, midpoint, tau_c}. Trials are split into batch_count
// contiguous batches: each batch accumulates serially in trial order and
// batches merge in index order, so results are bit-stable for a given seed
// no matter how many threads run. The batch estimates double as the
// standard-error measure for the assembled SINR.
struct McConfig {
    std::size_t trials = 20000;
    std::uint64_t seed = 1;
    std::vector<std::size_t> instants;
    Precoder precoder = Precoder::DelayUsed;
    // Keep per-AP resolution of the desired-signal and interference terms.
    // Required for the non-coherent assembly and for term-level checks;
    // turn off for long instant grids to keep the accumulators small.
    bool resolve_per_ap = true;
    std::size_t batch_count = 20;
};

// Inner products g_kl[n]^H sqrt(mu_l) v_il of one fading/phase/noise
// realization, indexed (k, i, l, instant).
struct McRealization {
    std::size_t K = 0, L = 0;
    std::vector<std::size_t> instants;
    std::vector<std::complex<double>> inner;

    std::complex<double> at(std::size_t k, std::size_t i, std::size_t l, std::size_t n_idx) const
    {
        return inner[((k * K + i) * L + l) * instants.size() + n_idx];
    }
};

McRealization simulate_realization(const SeScenario &scenario, const McConfig &cfg,
                                   std::size_t trial_index);

// Accumulated sufficient statistics: first and second moments of the
// desired-signal terms, the coherent cross sums, and the per-link powers,
// kept per batch plus merged totals.
struct McSamples {
    std::size_t K = 0, L = 0;
    std::size_t trials = 0;
    std::vector<std::size_t> instants;
    Precoder precoder = Precoder::DelayUsed;
    bool per_ap = true;
    double p_down_w = 0.0, noise_down_w = 0.0;
    std::uint64_t scenario_hash = 0;

    // ds dimensions: (k, l, n) when per_ap, else (k, 0, n) summed over APs
    std::size_t ds_l_dim = 1;
    std::vector<std::complex<double>> ds_sum;
    std::vector<double> ds_sq;
    std::vector<double> co_sum, co_sq; // (k, i, n): |sum_l inner|^2 moments
    std::vector<double> nc_sum, nc_sq; // (k, i): sum_l |inner|^2 moments
    std::vector<double> nc_ap_sum;     // (k, i, l), only when per_ap

    struct Batch {
        std::size_t trials = 0;
        std::vector<std::complex<double>> ds_sum;
        std::vector<double> ds_sq;
        std::vector<double> co_sum, co_sq;
        std::vector<double> nc_sum, nc_sq;
        std::vector<double> nc_ap_sum;
    };
    std::vector<Batch> batches;

    std::size_t ds_index(std::size_t k, std::size_t l, std::size_t n_idx) const
    {
        return (k * ds_l_dim + l) * instants.size() + n_idx;
    }
    std::size_t co_index(std::size_t k, std::size_t i, std::size_t n_idx) const
    {
        return (k * K + i) * instants.size() + n_idx;
    }
};

McSamples run_trials(const SeScenario &scenario, const McConfig &cfg);

// Sample-mean estimates and the SINR values assembled from them for one
// transmission mode. Standard errors for the term means come from the
// second moments; the SINR standard error is the spread of the per-batch
// assemblies. Entries whose interference residual turned negative under
// sampling noise are flagged rather than silently clamped.
struct McEstimate {
    TxMode mode = TxMode::Coherent;
    Precoder precoder = Precoder::DelayUsed;
    std::size_t K = 0, L = 0;
    std::size_t trials = 0;
    std::vector<std::size_t> instants;
    std::uint64_t scenario_hash = 0;

    std::size_t ds_l_dim = 1;
    std::vector<std::complex<double>> ds_mean; // (k, l, n) or (k, 0, n)
    std::vector<double> ds_stderr;
    std::vector<double> int_mean, int_stderr; // coherent: (k, i, n); noncoherent: (k, i)
    std::vector<double> int_nc_ap_mean;       // (k, i, l), only when resolved

    arma::mat sinr;        // K x |instants|
    arma::mat sinr_stderr; // batch-means spread
    arma::umat flagged;    // negative denominator under sampling noise

    std::size_t ds_index(std::size_t k, std::size_t l, std::size_t n_idx) const
    {
        return (k * ds_l_dim + l) * instants.size() + n_idx;
    }
};

McEstimate estimate_sinr(const McSamples &samples, TxMode mode);

struct ValidationEntry {
    std::size_t ue = 0;
    std::size_t instant = 0;
    std::string mode;
    double closed = 0.0;
    double mc = 0.0;
    double stderr_mc = 0.0;
    double rel_err = 0.0;
    bool pass = false;
    bool wide_ci = false;
    bool flagged = false;
};

struct ValidationReport {
    double tol_rel = 0.0;
    std::uint64_t scenario_hash = 0;
    std::size_t trials = 0;
    bool pass = false;
    bool inconclusive = false;
    std::vector<ValidationEntry> entries;
};

// Compares closed-form SINRs against the simulated estimate at the
// estimate's instants. An entry passes when |closed - mc| stays within
// tol_rel * closed + 3 * stderr; wide confidence intervals and flagged
// estimates make the outcome inconclusive instead of failed. Throws if
// the two sides were built from different scenarios.
ValidationReport validate(const SeResult &closed, const McEstimate &mc, double tol_rel);

std::string validation_report_to_json(const ValidationReport &report);

} // namespace cfmimo

#endif
