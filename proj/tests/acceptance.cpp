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

// Release gate: seven end-to-end checks, one pass/fail line each. The
// process exit code is the number of failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <armadillo>

#include "cfmimo/chanest.hpp"
#include "cfmimo/common.hpp"
#include "cfmimo/experiment.hpp"
#include "cfmimo/mcsim.hpp"
#include "cfmimo/phase.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/sedf.hpp"
#include "test_util.hpp"

namespace {

using namespace cfmimo;
using cfmimo::test::bitwise_equal;
using cfmimo::test::desk_scenario;

// Pinned acceptance tolerances.
constexpr double mc_rel_tol = 0.03;            // simulation agreement band
constexpr double cov_rel_tol = 0.02;           // covariance Frobenius band
constexpr std::size_t cov_draws = 100000;
constexpr double phasor_rel_tol = 0.01;        // phasor-mean agreement
constexpr std::size_t phasor_samples = 100000;
constexpr double corner_tol_pp = 10.0;         // percentage-point window
constexpr double validation_budget_s = 300.0;
constexpr double grid_budget_s = 900.0;

struct Gate {
    int failures = 0;

    void report(int index, bool pass, const std::string &detail)
    {
        std::printf("criterion %d: %s - %s\n", index, pass ? "PASS" : "FAIL", detail.c_str());
        if (!pass)
            ++failures;
    }
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// 1. Closed-form SINRs for all three strategies match an independent
// Monte Carlo estimate on the reference desk scenario within the relative
// band plus three standard errors, at every checked instant.
void criterion_1(Gate &gate)
{
    ExperimentConfig cfg = default_config();
    cfg.validation.tol_rel = mc_rel_tol;

    const auto start = std::chrono::steady_clock::now();
    ValidationRun run = run_validation(cfg, 9001);
    const double secs = seconds_since(start);

    // Every point must land inside band + 3 sigma. A wide confidence
    // interval (tiny SINR whose relative band is below the reachable
    // standard error at this trial count) keeps the CLI verdict cautious
    // but does not contradict the agreement statement itself.
    double max_rel = 0.0;
    std::size_t wide = 0;
    bool all_within = true;
    for (const auto &report : run.reports)
        for (const auto &e : report.entries)
        {
            all_within = all_within && e.pass && !e.flagged;
            wide += e.wide_ci ? 1 : 0;
            max_rel = std::max(max_rel, e.rel_err);
        }
    const bool pass =
        run.exit_code != 2 && all_within && secs < validation_budget_s;
    gate.report(1, pass,
                "closed form vs simulation, 3 strategies x " +
                    std::to_string(run.reports.front().entries.size()) +
                    " points all within band + 3 sigma, max rel err " + fmt(max_rel) + ", " +
                    std::to_string(wide) + " wide-CI points, " + fmt(secs) + " s (limit " +
                    fmt(validation_budget_s) + ")");
}

// 2. Exact identities, compared on raw storage with zero tolerance.
void criterion_2(Gate &gate)
{
    SeScenario scn = desk_scenario(6, 3, 2, 2, 30, 1.5e-3, 2.5e-3, 2102);

    RngStream regen(2101);
    SeScenario other = scn;
    other.delays = random_delay_phases(scn.L, scn.K, regen);
    const bool delay_free =
        bitwise_equal(evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed).sinr,
                      evaluate_se(other, TxMode::Coherent, Precoder::DelayUsed).sinr) &&
        bitwise_equal(evaluate_se(scn, TxMode::NonCoherent, Precoder::DelayUsed).sinr,
                      evaluate_se(other, TxMode::NonCoherent, Precoder::DelayUsed).sinr) &&
        bitwise_equal(evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed).se,
                      evaluate_se(other, TxMode::Coherent, Precoder::DelayUsed).se);

    SeScenario unit = desk_scenario(5, 3, 2, 2, 25, 1e-3, 1e-3, 2103, false);
    const bool df_collapses =
        bitwise_equal(evaluate_se(unit, TxMode::Coherent, Precoder::DelayUsed).sinr,
                      evaluate_se(unit, TxMode::Coherent, Precoder::DelayForgotten).sinr);

    SeScenario single = desk_scenario(1, 2, 3, 1, 20, 2e-3, 1e-3, 2104);
    SeResult sdu = evaluate_se(single, TxMode::Coherent, Precoder::DelayUsed);
    SeResult sdf = evaluate_se(single, TxMode::Coherent, Precoder::DelayForgotten);
    SeResult snc = evaluate_se(single, TxMode::NonCoherent, Precoder::DelayUsed);
    const bool single_ap = bitwise_equal(sdu.sinr, sdf.sinr) &&
                           bitwise_equal(sdu.sinr, snc.sinr) && bitwise_equal(sdu.se, snc.se);

    bool self_cross = true;
    for (std::size_t k = 0; k < scn.K; ++k)
    {
        const auto &group = scn.stats.plan.copilot[k];
        const std::size_t j = static_cast<std::size_t>(
            std::find(group.begin(), group.end(), k) - group.begin());
        for (std::size_t l = 0; l < scn.L; ++l)
            self_cross =
                self_cross && bitwise_equal(scn.stats.qbar_at(k, j, l), scn.stats.q_at(k, l));
    }

    const bool pass = delay_free && df_collapses && single_ap && self_cross;
    gate.report(2, pass,
                std::string("bitwise identities: delay-free DU/NC ") +
                    (delay_free ? "ok" : "BROKEN") + ", unit-phasor DF=DU " +
                    (df_collapses ? "ok" : "BROKEN") + ", single-AP collapse " +
                    (single_ap ? "ok" : "BROKEN") + ", self cross-statistic " +
                    (self_cross ? "ok" : "BROKEN"));
}

// 3. Sampled estimate/error covariances converge to the closed-form
// second-order statistics; the estimation-error sweep stays in [0, 1] and
// never improves as the phase variance grows.
void criterion_3(Gate &gate)
{
    SeScenario scn = desk_scenario(3, 4, 2, 2, 20, 1e-3, 2e-3, 3101);
    const std::size_t k = 1, l = 0;
    const std::complex<double> theta = scn.delays.theta(l, k);
    const std::size_t t_k = scn.stats.plan.pilot_instant[k];

    std::vector<arma::cx_mat> factor(scn.K * scn.L);
    for (std::size_t i = 0; i < scn.K; ++i)
        for (std::size_t a = 0; a < scn.L; ++a)
            factor[i * scn.L + a] = arma::chol(scn.R[i * scn.L + a], "lower");

    RngStream rng = RngStream::derive(3102, {0xc3});
    arma::cx_mat est_cov(scn.N, scn.N, arma::fill::zeros);
    arma::cx_mat err_cov(scn.N, scn.N, arma::fill::zeros);
    std::vector<arma::cx_vec> h(scn.K * scn.L);
    for (std::size_t d = 0; d < cov_draws; ++d)
    {
        for (std::size_t i = 0; i < scn.K; ++i)
            for (std::size_t a = 0; a < scn.L; ++a)
                h[i * scn.L + a] = factor[i * scn.L + a] * rng.cnormal_vec(scn.N);
        PhasePath paths = sample_phase_paths(scn.phase, scn.L, scn.K, scn.tau_c, rng);
        std::vector<arma::cx_mat> z =
            received_pilot(scn.stats.plan, scn.stats.pilot_power_w, scn.stats.noise_w,
                           scn.delays, paths, h, scn.L, scn.N, rng);
        // Re-rotate the delay-derotated estimate into the combined channel.
        arma::cx_vec est = theta * mmse_estimate(z[l].col(t_k - 1), scn.stats, k, l, theta);
        arma::cx_vec truth = effective_channel(h[k * scn.L + l], theta, paths.ue(k, scn.lambda),
                                               paths.ap(l, scn.lambda));
        est_cov += est * est.t();
        arma::cx_vec err = est - truth;
        err_cov += err * err.t();
    }
    est_cov /= static_cast<double>(cov_draws);
    err_cov /= static_cast<double>(cov_draws);

    const arma::cx_mat &Q = scn.stats.q_at(k, l);
    const arma::cx_mat expected_err = scn.R[k * scn.L + l] - Q;
    const double rel_est = arma::norm(est_cov - Q, "fro") / arma::norm(Q, "fro");
    const double rel_err = arma::norm(err_cov - expected_err, "fro") /
                           arma::norm(expected_err, "fro");

    FigureData sweep = run_nmse_sweep(default_config(), 31);
    bool curves_ok = true;
    std::string prev_tau;
    double prev_mean = -1.0;
    for (const auto &row : sweep.rows)
    {
        const double mean = std::stod(row[2]);
        const double p05 = std::stod(row[3]), p95 = std::stod(row[4]);
        curves_ok = curves_ok && mean >= 0.0 && mean <= 1.0 && p05 >= 0.0 && p95 <= 1.0;
        if (row[1] == prev_tau)
            curves_ok = curves_ok && mean >= prev_mean;
        prev_tau = row[1];
        prev_mean = mean;
    }

    const bool pass = rel_est <= cov_rel_tol && rel_err <= cov_rel_tol && curves_ok;
    gate.report(3, pass,
                "estimate/error covariance rel dev " + fmt(rel_est) + "/" + fmt(rel_err) +
                    " (band " + fmt(cov_rel_tol) + ", " + std::to_string(cov_draws) +
                    " draws), error sweep bounded and nondecreasing: " +
                    (curves_ok ? "yes" : "NO"));
}

// 4. The sampled oscillator walks reproduce the phasor means the closed
// forms are built from: the compound AP+UE decay and the two-AP cross
// factor.
void criterion_4(Gate &gate)
{
    PhaseParams params;
    params.sigma2_ap = 5e-3;
    params.sigma2_ue = 2e-3;
    const std::size_t gap = 12, lo = 1, hi = lo + gap;

    RngStream rng = RngStream::derive(4101, {1});
    PhasePath compound = sample_phase_paths(params, phasor_samples, phasor_samples, hi, rng);
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t m = 0; m < phasor_samples; ++m)
        acc += std::polar(1.0, (compound.ue(m, hi) - compound.ue(m, lo)) +
                                   (compound.ap(m, hi) - compound.ap(m, lo)));
    acc /= static_cast<double>(phasor_samples);
    const double expect_compound = theta_mean(gap, params);
    const double rel_compound = std::abs(acc - expect_compound) / expect_compound;

    RngStream rng2 = RngStream::derive(4101, {2});
    PhasePath pairs = sample_phase_paths(params, 2 * phasor_samples, 1, hi, rng2);
    std::complex<double> cross(0.0, 0.0);
    for (std::size_t m = 0; m < phasor_samples; ++m)
        cross += std::polar(1.0, (pairs.ap(2 * m, hi) - pairs.ap(2 * m, lo)) -
                                     (pairs.ap(2 * m + 1, hi) - pairs.ap(2 * m + 1, lo)));
    cross /= static_cast<double>(phasor_samples);
    const double expect_cross = eta(gap, params.sigma2_ap);
    const double rel_cross = std::abs(cross - expect_cross) / expect_cross;

    const bool pass = rel_compound <= phasor_rel_tol && rel_cross <= phasor_rel_tol;
    gate.report(4, pass,
                "phasor means: compound decay rel dev " + fmt(rel_compound) +
                    ", two-AP cross factor rel dev " + fmt(rel_cross) + " (band " +
                    fmt(phasor_rel_tol) + ", " + std::to_string(phasor_samples) + " samples)");
}

// 5. Layout-averaged corner numbers of the variance-grid experiment land
// on the reference percentages within the pinned window.
void criterion_5(Gate &gate)
{
    ExperimentConfig cfg = default_config();

    const auto start = std::chrono::steady_clock::now();
    FigureData d = run_phase_grid(cfg, 77);
    const double secs = seconds_since(start);

    // Rows are (setting, ap variance, ue variance) with lists
    // {-50, -35, -20} dB and settings (100 APs, 2 ant) / (200 APs, 4 ant).
    auto se = [&](std::size_t si, std::size_t ai, std::size_t ui) {
        return std::stod(d.rows[si * 9 + ai * 3 + ui][4]);
    };
    // The array-gain reference points sit on the off-diagonal corners: the
    // larger array compensates AP-side phase noise far better than UE-side.
    const double loss_ap = 100.0 * (1.0 - se(0, 2, 0) / se(0, 0, 0));
    const double loss_ue = 100.0 * (1.0 - se(0, 0, 2) / se(0, 0, 0));
    const double gain_low = 100.0 * (se(1, 0, 2) / se(0, 0, 2) - 1.0);
    const double gain_high = 100.0 * (se(1, 2, 0) / se(0, 2, 0) - 1.0);

    const double targets[4] = {48.0, 70.0, 30.0, 76.0};
    const double got[4] = {loss_ap, loss_ue, gain_low, gain_high};
    bool within = true;
    for (int i = 0; i < 4; ++i)
        within = within && std::abs(got[i] - targets[i]) <= corner_tol_pp;

    const bool pass = within && secs < grid_budget_s;
    gate.report(5, pass,
                "corner percentages (target +/- " + fmt(corner_tol_pp) + " pp): AP-side loss " +
                    fmt(loss_ap) + " vs 48, UE-side loss " + fmt(loss_ue) +
                    " vs 70, array gain " + fmt(gain_low) + " vs 30 and " + fmt(gain_high) +
                    " vs 76, " + fmt(secs) + " s (limit " + fmt(grid_budget_s) + ")");
}

// 6. Orderings on the default variance sweep: the delay-aware coherent
// curve falls fastest, non-coherent beats delay-forgotten coherent
// everywhere, and the non-coherent curve ignores the delay draw.
void criterion_6(Gate &gate)
{
    ExperimentConfig cfg = default_config();
    FigureData d = run_sum_se_sweep(cfg, 55);

    const std::size_t points = d.rows.size() / 3;
    std::vector<double> du(points), df(points), nc(points);
    for (std::size_t a = 0; a < points; ++a)
    {
        du[a] = std::stod(d.rows[3 * a][3]);
        df[a] = std::stod(d.rows[3 * a + 1][3]);
        nc[a] = std::stod(d.rows[3 * a + 2][3]);
    }

    bool nc_above_df = true;
    for (std::size_t a = 0; a < points; ++a)
        nc_above_df = nc_above_df && nc[a] > df[a];

    bool du_steepest = true;
    for (std::size_t a = 0; a + 1 < points; ++a)
    {
        const double drop_du = du[a] - du[a + 1];
        du_steepest = du_steepest && drop_du > df[a] - df[a + 1] && drop_du > nc[a] - nc[a + 1];
    }

    PhaseParams phase = cfg.phase;
    phase.sigma2_ap = phase.sigma2_ue = db_to_linear(-35.0);
    RngStream rng(6102);
    SeScenario scn = make_scenario(cfg.scene, phase, cfg.tau_p, cfg.tau_c, cfg.pilot_power_w,
                                   cfg.pilot_noise_w, cfg.down_power_w, cfg.down_noise_w, true,
                                   rng);
    SeResult before = evaluate_se(scn, TxMode::NonCoherent, Precoder::DelayUsed);
    RngStream regen(6103);
    scn.delays = random_delay_phases(scn.L, scn.K, regen);
    SeResult after = evaluate_se(scn, TxMode::NonCoherent, Precoder::DelayUsed);
    const bool nc_delay_free = bitwise_equal(before.sinr, after.sinr) &&
                               bitwise_equal(before.se, after.se);

    const bool pass = nc_above_df && du_steepest && nc_delay_free;
    gate.report(6, pass,
                std::string("sweep orderings: delay-aware coherent steepest ") +
                    (du_steepest ? "ok" : "BROKEN") + ", noncoherent above delay-forgotten " +
                    (nc_above_df ? "ok" : "BROKEN") + ", noncoherent delay-free " +
                    (nc_delay_free ? "ok (bitwise)" : "BROKEN"));
}

// 7. With many multi-antenna APs, putting the larger phase-increment
// variance on the UE side always costs more than the mirrored assignment.
void criterion_7(Gate &gate)
{
    ExperimentConfig cfg = parse_config(R"({
        "num_scenes": 6,
        "fig4": {"sigma2_ap_db_list": [-50, -35, -20],
                 "sigma2_ue_db_list": [-50, -35, -20],
                 "settings": [[200, 8]]}
    })");
    FigureData d = run_phase_grid(cfg, 71);
    auto se = [&](std::size_t ai, std::size_t ui) {
        return std::stod(d.rows[ai * 3 + ui][4]);
    };

    bool ordered = true;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
        {
            ordered = ordered && se(i, j) < se(j, i);
            ++checked;
        }

    gate.report(7, ordered,
                "UE-side noise dominates: " + std::to_string(checked) +
                    " mirrored variance pairs at 200 APs x 8 antennas, all ordered: " +
                    (ordered ? "yes" : "NO"));
}

} // namespace

int main()
{
    Gate gate;
    criterion_1(gate);
    criterion_2(gate);
    criterion_3(gate);
    criterion_4(gate);
    criterion_5(gate);
    criterion_6(gate);
    criterion_7(gate);
    std::printf("acceptance: %d/7 passed\n", 7 - gate.failures);
    return gate.failures;
}
