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

#ifndef CFMIMO_SEDF_HPP
#define CFMIMO_SEDF_HPP

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include <armadillo>

#include "cfmimo/chanest.hpp"
#include "cfmimo/phase.hpp"

namespace cfmimo {

// Maximum-ratio precoding flavor: DelayUsed derotates each link by its
// delay phasor before transmission, DelayForgotten sends the raw estimate.
enum class Precoder {
    DelayUsed,
    DelayForgotten,
};

// Coherent: all APs beamform a common symbol per UE. NonCoherent: each AP
// sends its own copy and the UE combines them successively; the precoder
// flavor is irrelevant there.
enum class TxMode {
    Coherent,
    NonCoherent,
};

const char *to_string(Precoder p);
const char *to_string(TxMode m);

// Everything the downlink spectral-efficiency expressions consume.
// Estimation statistics must have been built with the same phase params.
struct SeScenario {
    std::size_t L = 0, K = 0, N = 0;
    std::size_t tau_c = 0;
    std::size_t lambda = 0; // first downlink instant, tau_p + 1
    EstimationStats stats;
    std::vector<arma::cx_mat> R;
    DelayPhases delays;
    PhaseParams phase;
    double p_down_w = 0.0;
    double noise_down_w = 0.0;

    void validate() const;
    std::uint64_t hash() const;
};

// Per-AP power normalization 1 / sum_k trace(Q_kl). APs whose statistics
// are all zero would need infinite scaling; they get mu = 0 instead, which
// removes them from every downlink sum.
std::vector<double> mu_normalization(const EstimationStats &stats);

struct SinrBreakdown {
    double numerator = 0.0;
    double interference = 0.0; // residual after subtracting the numerator
    double denominator = 0.0;
    double sinr = 0.0;
};

// Precomputes the per-UE aggregates of the closed-form SINR expressions so
// per-instant evaluation is O(1). All three expression families share the
// same accumulation passes; the shared terms are therefore bit-identical
// across modes, which the exact-identity tests rely on.
class SinrEvaluator {
  public:
    explicit SinrEvaluator(const SeScenario &scenario);

    double sinr(TxMode mode, Precoder precoder, std::size_t k, std::size_t n) const;
    SinrBreakdown breakdown(TxMode mode, Precoder precoder, std::size_t k, std::size_t n) const;

    // Closed-form per-interferer term (mu-weighted, without the downlink
    // power factor), for comparison against simulated cross products.
    double interference_term(TxMode mode, Precoder precoder, std::size_t k, std::size_t i,
                             std::size_t n) const;

    const std::vector<double> &mu() const { return mu_; }

  private:
    const SeScenario &scn;
    std::vector<double> mu_, sqrt_mu;
    std::vector<double> tq;        // (k, l): trace(Q_kl)
    std::vector<double> tqr_agg;   // (k, i): sum_l mu_l trace(Q_il R_kl)
    std::vector<double> s1;        // per k, with downlink power applied
    std::vector<std::vector<double>> b;   // per (k, copilot j)
    std::vector<std::vector<double>> cdu; // coherent copilot pileup, delay-used
    std::vector<std::vector<double>> cdf; // coherent copilot pileup, delay-forgotten
    std::vector<double> sum_b, sum_cdu, sum_cdf;
    std::vector<double> alpha_du;               // sum_l sqrt(mu) trace(Q_kl)
    std::vector<std::complex<double>> alpha_df; // delay-weighted variant
    std::vector<double> e_nc;                   // sum_l mu trace(Q_kl)^2

    SinrBreakdown coherent_du(std::size_t k, std::size_t n) const;
    SinrBreakdown coherent_df(std::size_t k, std::size_t n) const;
    SinrBreakdown noncoherent(std::size_t k, std::size_t n) const;
};

double sinr_coherent_du(std::size_t k, std::size_t n, const SeScenario &scenario);
double sinr_coherent_df(std::size_t k, std::size_t n, const SeScenario &scenario);
double sinr_noncoherent(std::size_t k, std::size_t n, const SeScenario &scenario);

// (1 / tau_c) sum over the path of log2(1 + sinr); the path covers
// instants lambda..tau_c.
double se_from_sinr(const std::vector<double> &sinr_path, std::size_t tau_c);

// Large-array limit 1 / (1/(eta_ap eta_ue) + 1/eta_ue + a) at instant n.
double asymptotic_sinr(std::size_t n, const SeScenario &scenario, double a);

struct SeResult {
    TxMode mode = TxMode::Coherent;
    Precoder precoder = Precoder::DelayUsed;
    std::size_t lambda = 0, tau_c = 0;
    arma::mat sinr;         // K x (tau_c - lambda + 1)
    std::vector<double> se; // per UE
    std::uint64_t scenario_hash = 0;

    double sinr_at(std::size_t k, std::size_t n) const { return sinr(k, n - lambda); }
};

SeResult evaluate_se(const SeScenario &scenario, TxMode mode, Precoder precoder);

// CSV rows "ue,mode,precoder,n,sinr,se" with one row per UE and instant.
void write_se_result_csv(std::ostream &out, const std::vector<SeResult> &results);

} // namespace cfmimo

#endif
