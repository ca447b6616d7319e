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

#include "cfmimo/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfmimo/common.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

namespace {

constexpr std::uint64_t trial_tag = 0x6d635f747269616cULL;

std::uint64_t precoder_id(Precoder p) { return p == Precoder::DelayUsed ? 1 : 2; }

std::vector<std::size_t> resolve_instants(const SeScenario &scenario, const McConfig &cfg)
{
    std::vector<std::size_t> instants = cfg.instants;
    if (instants.empty())
        instants = {scenario.lambda, (scenario.lambda + scenario.tau_c) / 2, scenario.tau_c};
    for (std::size_t n : instants)
        if (n < scenario.lambda || n > scenario.tau_c)
            throw std::invalid_argument("mcsim: instant " + std::to_string(n) +
                                        " outside [lambda, tau_c]");
    return instants;
}

// Square roots of the spatial correlation matrices via eigendecomposition;
// always N columns so the per-trial draw count never depends on rank.
std::vector<arma::cx_mat> channel_factors(const SeScenario &scenario)
{
    std::vector<arma::cx_mat> factors(scenario.K * scenario.L);
    for (std::size_t k = 0; k < scenario.K; ++k)
        for (std::size_t l = 0; l < scenario.L; ++l)
        {
            const arma::cx_mat &R = scenario.R[k * scenario.L + l];
            arma::vec d;
            arma::cx_mat V;
            if (!arma::eig_sym(d, V, R))
                throw std::runtime_error("mcsim: eigendecomposition failed for link (" +
                                         std::to_string(k) + ", " + std::to_string(l) + ")");
            arma::vec s = arma::sqrt(arma::clamp(d, 0.0, arma::datum::inf));
            factors[k * scenario.L + l] = V * arma::diagmat(s);
        }
    return factors;
}

struct TrialTerms {
    // base[k] is K x L; entry (i, l) holds conj(theta_kl) sqrt(mu_l) h_kl^H v_il
    std::vector<arma::cx_mat> base;
    arma::cx_mat ue_rot; // K x instants, exp(-j phi_k[n])
    arma::cx_mat ap_rot; // L x instants
};

TrialTerms compute_trial(const SeScenario &scenario, const McConfig &cfg,
                         const std::vector<std::size_t> &instants,
                         const std::vector<arma::cx_mat> &factors,
                         const std::vector<double> &sqrt_mu, std::size_t trial)
{
    const std::size_t L = scenario.L, K = scenario.K, N = scenario.N;
    RngStream rng = RngStream::derive(
        cfg.seed, {trial_tag, precoder_id(cfg.precoder), static_cast<std::uint64_t>(trial)});

    // Draw order is fixed (channels, phase walks, pilot noise) so every
    // trial is reproducible from its index alone.
    std::vector<arma::cx_vec> h(K * L);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l)
            h[k * L + l] = factors[k * L + l] * rng.cnormal_vec(N);

    PhasePath paths = sample_phase_paths(scenario.phase, L, K, scenario.tau_c, rng);

    std::vector<arma::cx_mat> z =
        received_pilot(scenario.stats.plan, scenario.stats.pilot_power_w, scenario.stats.noise_w,
                       scenario.delays, paths, h, L, N, rng);

    std::vector<arma::cx_vec> v(K * L);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t l = 0; l < L; ++l)
        {
            std::complex<double> th = scenario.delays.theta(l, i);
            arma::cx_vec hhat = mmse_estimate(
                z[l].col(scenario.stats.plan.pilot_instant[i] - 1), scenario.stats, i, l, th);
            v[i * L + l] = cfg.precoder == Precoder::DelayUsed ? arma::cx_vec(th * hhat)
                                                               : std::move(hhat);
        }

    TrialTerms t;
    t.base.resize(K);
    for (std::size_t k = 0; k < K; ++k)
    {
        t.base[k].set_size(K, L);
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t l = 0; l < L; ++l)
                t.base[k](i, l) = std::conj(scenario.delays.theta(l, k)) * sqrt_mu[l] *
                                  arma::cdot(h[k * L + l], v[i * L + l]);
    }

    t.ue_rot.set_size(K, instants.size());
    t.ap_rot.set_size(L, instants.size());
    for (std::size_t m = 0; m < instants.size(); ++m)
    {
        const std::size_t n = instants[m];
        for (std::size_t k = 0; k < K; ++k)
            t.ue_rot(k, m) = std::polar(1.0, -paths.ue(k, n));
        for (std::size_t l = 0; l < L; ++l)
            t.ap_rot(l, m) = std::polar(1.0, -paths.ap(l, n));
    }
    return t;
}

void accumulate_trial(const TrialTerms &t, const McSamples &shape, McSamples::Batch &acc)
{
    const std::size_t K = shape.K, L = shape.L, nn = shape.instants.size();
    for (std::size_t k = 0; k < K; ++k)
    {
        // Coherent cross sums; the UE rotation has unit modulus, so it
        // drops out of the magnitudes.
        arma::cx_mat a = t.base[k] * t.ap_rot;
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t m = 0; m < nn; ++m)
            {
                const double w = std::norm(a(i, m));
                const std::size_t idx = (k * K + i) * nn + m;
                acc.co_sum[idx] += w;
                acc.co_sq[idx] += w * w;
            }

        if (shape.per_ap)
        {
            for (std::size_t l = 0; l < L; ++l)
            {
                const std::complex<double> b = t.base[k](k, l);
                for (std::size_t m = 0; m < nn; ++m)
                {
                    const std::complex<double> term = b * t.ue_rot(k, m) * t.ap_rot(l, m);
                    const std::size_t idx = shape.ds_index(k, l, m);
                    acc.ds_sum[idx] += term;
                    acc.ds_sq[idx] += std::norm(term);
                }
            }
        }
        else
        {
            for (std::size_t m = 0; m < nn; ++m)
            {
                const std::complex<double> term = a(k, m) * t.ue_rot(k, m);
                const std::size_t idx = shape.ds_index(k, 0, m);
                acc.ds_sum[idx] += term;
                acc.ds_sq[idx] += std::norm(term);
            }
        }

        for (std::size_t i = 0; i < K; ++i)
        {
            double s = 0.0;
            for (std::size_t l = 0; l < L; ++l)
            {
                const double w = std::norm(t.base[k](i, l));
                s += w;
                if (shape.per_ap)
                    acc.nc_ap_sum[(k * K + i) * L + l] += w;
            }
            acc.nc_sum[k * K + i] += s;
            acc.nc_sq[k * K + i] += s * s;
        }
    }
}

double stderr_from_moments(double sum, double sq, std::size_t trials)
{
    if (trials < 2)
        return std::numeric_limits<double>::infinity();
    const double T = static_cast<double>(trials);
    const double mean = sum / T;
    const double var = std::max(0.0, sq / T - mean * mean);
    return std::sqrt(var / T);
}

} // namespace

McRealization simulate_realization(const SeScenario &scenario, const McConfig &cfg,
                                   std::size_t trial_index)
{
    scenario.validate();
    const std::vector<std::size_t> instants = resolve_instants(scenario, cfg);
    const std::vector<arma::cx_mat> factors = channel_factors(scenario);
    std::vector<double> mu = mu_normalization(scenario.stats);
    std::vector<double> sqrt_mu(mu.size());
    std::transform(mu.begin(), mu.end(), sqrt_mu.begin(),
                   [](double m) { return std::sqrt(m); });

    TrialTerms t = compute_trial(scenario, cfg, instants, factors, sqrt_mu, trial_index);

    McRealization r;
    r.K = scenario.K;
    r.L = scenario.L;
    r.instants = instants;
    r.inner.resize(scenario.K * scenario.K * scenario.L * instants.size());
    for (std::size_t k = 0; k < scenario.K; ++k)
        for (std::size_t i = 0; i < scenario.K; ++i)
            for (std::size_t l = 0; l < scenario.L; ++l)
                for (std::size_t m = 0; m < instants.size(); ++m)
                    r.inner[((k * scenario.K + i) * scenario.L + l) * instants.size() + m] =
                        t.base[k](i, l) * t.ue_rot(k, m) * t.ap_rot(l, m);
    return r;
}

McSamples run_trials(const SeScenario &scenario, const McConfig &cfg)
{
    scenario.validate();
    if (cfg.trials == 0)
        throw std::invalid_argument("mcsim: trials must be positive");
    if (cfg.batch_count == 0)
        throw std::invalid_argument("mcsim: batch_count must be positive");

    McSamples s;
    s.K = scenario.K;
    s.L = scenario.L;
    s.trials = cfg.trials;
    s.instants = resolve_instants(scenario, cfg);
    s.precoder = cfg.precoder;
    s.per_ap = cfg.resolve_per_ap;
    s.p_down_w = scenario.p_down_w;
    s.noise_down_w = scenario.noise_down_w;
    s.scenario_hash = scenario.hash();
    s.ds_l_dim = s.per_ap ? s.L : 1;

    const std::size_t nn = s.instants.size();
    const std::size_t ds_n = s.K * s.ds_l_dim * nn;
    const std::size_t co_n = s.K * s.K * nn;
    const std::size_t nc_n = s.K * s.K;

    const std::vector<arma::cx_mat> factors = channel_factors(scenario);
    std::vector<double> mu = mu_normalization(scenario.stats);
    std::vector<double> sqrt_mu(mu.size());
    std::transform(mu.begin(), mu.end(), sqrt_mu.begin(),
                   [](double m) { return std::sqrt(m); });

    const std::size_t n_batch = std::min(cfg.batch_count, cfg.trials);
    s.batches.resize(n_batch);
    for (auto &b : s.batches)
    {
        b.ds_sum.assign(ds_n, {0.0, 0.0});
        b.ds_sq.assign(ds_n, 0.0);
        b.co_sum.assign(co_n, 0.0);
        b.co_sq.assign(co_n, 0.0);
        b.nc_sum.assign(nc_n, 0.0);
        b.nc_sq.assign(nc_n, 0.0);
        b.nc_ap_sum.assign(s.per_ap ? nc_n * s.L : 0, 0.0);
    }

    // Batches are the parallel units; trial order inside a batch and the
    // final merge order are both fixed, so the result is independent of
    // the thread count.
    parallel_for(n_batch, [&](std::size_t b) {
        const std::size_t begin = b * cfg.trials / n_batch;
        const std::size_t end = (b + 1) * cfg.trials / n_batch;
        McSamples::Batch &acc = s.batches[b];
        acc.trials = end - begin;
        for (std::size_t trial = begin; trial < end; ++trial)
        {
            TrialTerms t = compute_trial(scenario, cfg, s.instants, factors, sqrt_mu, trial);
            accumulate_trial(t, s, acc);
        }
    });

    s.ds_sum.assign(ds_n, {0.0, 0.0});
    s.ds_sq.assign(ds_n, 0.0);
    s.co_sum.assign(co_n, 0.0);
    s.co_sq.assign(co_n, 0.0);
    s.nc_sum.assign(nc_n, 0.0);
    s.nc_sq.assign(nc_n, 0.0);
    s.nc_ap_sum.assign(s.per_ap ? nc_n * s.L : 0, 0.0);
    for (const auto &b : s.batches)
    {
        for (std::size_t i = 0; i < ds_n; ++i)
        {
            s.ds_sum[i] += b.ds_sum[i];
            s.ds_sq[i] += b.ds_sq[i];
        }
        for (std::size_t i = 0; i < co_n; ++i)
        {
            s.co_sum[i] += b.co_sum[i];
            s.co_sq[i] += b.co_sq[i];
        }
        for (std::size_t i = 0; i < nc_n; ++i)
        {
            s.nc_sum[i] += b.nc_sum[i];
            s.nc_sq[i] += b.nc_sq[i];
        }
        for (std::size_t i = 0; i < s.nc_ap_sum.size(); ++i)
            s.nc_ap_sum[i] += b.nc_ap_sum[i];
    }
    return s;
}

namespace {

// SINR of UE k at instant index m from one set of accumulated sums.
double assemble_sinr(const McSamples &s, TxMode mode,
                     const std::vector<std::complex<double>> &ds_sum,
                     const std::vector<double> &int_sum, std::size_t trials, std::size_t k,
                     std::size_t m, bool &negative_den)
{
    const double T = static_cast<double>(trials);
    const std::size_t K = s.K, nn = s.instants.size();
    double num = 0.0;
    double interference = 0.0;
    if (mode == TxMode::Coherent)
    {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t l = 0; l < s.ds_l_dim; ++l)
            acc += ds_sum[s.ds_index(k, l, m)];
        num = s.p_down_w * std::norm(acc / T);
        for (std::size_t i = 0; i < K; ++i)
            interference += int_sum[(k * K + i) * nn + m];
    }
    else
    {
        for (std::size_t l = 0; l < s.ds_l_dim; ++l)
            num += std::norm(ds_sum[s.ds_index(k, l, m)] / T);
        num *= s.p_down_w;
        for (std::size_t i = 0; i < K; ++i)
            interference += int_sum[k * K + i];
    }
    interference = s.p_down_w * interference / T;
    const double den = interference - num + s.noise_down_w;
    negative_den = den <= 0.0;
    return num / den;
}

} // namespace

McEstimate estimate_sinr(const McSamples &samples, TxMode mode)
{
    if (mode == TxMode::NonCoherent && !samples.per_ap)
        throw std::invalid_argument(
            "estimate_sinr: non-coherent assembly needs per-AP resolution");
    if (samples.trials == 0)
        throw std::invalid_argument("estimate_sinr: no accumulated trials");

    const std::size_t K = samples.K, nn = samples.instants.size();
    const double T = static_cast<double>(samples.trials);

    McEstimate est;
    est.mode = mode;
    est.precoder = samples.precoder;
    est.K = K;
    est.L = samples.L;
    est.trials = samples.trials;
    est.instants = samples.instants;
    est.scenario_hash = samples.scenario_hash;
    est.ds_l_dim = samples.ds_l_dim;

    est.ds_mean.resize(samples.ds_sum.size());
    est.ds_stderr.resize(samples.ds_sum.size());
    for (std::size_t i = 0; i < samples.ds_sum.size(); ++i)
    {
        est.ds_mean[i] = samples.ds_sum[i] / T;
        const double var = std::max(0.0, samples.ds_sq[i] / T - std::norm(est.ds_mean[i]));
        est.ds_stderr[i] = std::sqrt(var / T);
    }

    const std::vector<double> &int_sum =
        mode == TxMode::Coherent ? samples.co_sum : samples.nc_sum;
    const std::vector<double> &int_sq = mode == TxMode::Coherent ? samples.co_sq : samples.nc_sq;
    est.int_mean.resize(int_sum.size());
    est.int_stderr.resize(int_sum.size());
    for (std::size_t i = 0; i < int_sum.size(); ++i)
    {
        est.int_mean[i] = int_sum[i] / T;
        est.int_stderr[i] = stderr_from_moments(int_sum[i], int_sq[i], samples.trials);
    }
    if (mode == TxMode::NonCoherent && samples.per_ap)
    {
        est.int_nc_ap_mean.resize(samples.nc_ap_sum.size());
        for (std::size_t i = 0; i < samples.nc_ap_sum.size(); ++i)
            est.int_nc_ap_mean[i] = samples.nc_ap_sum[i] / T;
    }

    est.sinr.set_size(K, nn);
    est.sinr_stderr.set_size(K, nn);
    est.flagged.zeros(K, nn);

    std::vector<double> batch_value;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < nn; ++m)
        {
            bool neg = false;
            est.sinr(k, m) = assemble_sinr(samples, mode, samples.ds_sum, int_sum,
                                           samples.trials, k, m, neg);
            bool flagged = neg;

            batch_value.clear();
            for (const auto &b : samples.batches)
            {
                if (b.trials == 0)
                    continue;
                bool bneg = false;
                const std::vector<double> &bint =
                    mode == TxMode::Coherent ? b.co_sum : b.nc_sum;
                batch_value.push_back(
                    assemble_sinr(samples, mode, b.ds_sum, bint, b.trials, k, m, bneg));
                flagged = flagged || bneg;
            }
            double se = std::numeric_limits<double>::infinity();
            if (batch_value.size() >= 2)
            {
                double mean = 0.0;
                for (double v : batch_value)
                    mean += v;
                mean /= static_cast<double>(batch_value.size());
                double var = 0.0;
                for (double v : batch_value)
                    var += (v - mean) * (v - mean);
                var /= static_cast<double>(batch_value.size() - 1);
                se = std::sqrt(var / static_cast<double>(batch_value.size()));
            }
            if (flagged)
                se = std::max(se, std::abs(est.sinr(k, m)));
            est.sinr_stderr(k, m) = se;
            est.flagged(k, m) = flagged ? 1 : 0;
        }
    return est;
}

ValidationReport validate(const SeResult &closed, const McEstimate &mc, double tol_rel)
{
    if (!(tol_rel > 0.0))
        throw std::invalid_argument("validate: tol_rel must be positive");
    if (closed.scenario_hash != mc.scenario_hash)
        throw std::invalid_argument("validate: closed form and simulation use different scenarios");
    if (closed.mode != mc.mode)
        throw std::invalid_argument("validate: transmission modes differ");
    if (closed.mode == TxMode::Coherent && closed.precoder != mc.precoder)
        throw std::invalid_argument("validate: precoders differ");

    std::string label = closed.mode == TxMode::Coherent
                            ? std::string("coherent-") + to_string(closed.precoder)
                            : std::string("noncoherent");

    ValidationReport report;
    report.tol_rel = tol_rel;
    report.scenario_hash = mc.scenario_hash;
    report.trials = mc.trials;

    bool any_fail = false, any_soft = false;
    for (std::size_t k = 0; k < mc.K; ++k)
        for (std::size_t m = 0; m < mc.instants.size(); ++m)
        {
            const std::size_t n = mc.instants[m];
            ValidationEntry e;
            e.ue = k;
            e.instant = n;
            e.mode = label;
            e.closed = closed.sinr_at(k, n);
            e.mc = mc.sinr(k, m);
            e.stderr_mc = mc.sinr_stderr(k, m);
            e.flagged = mc.flagged(k, m) != 0;
            const double diff = std::abs(e.closed - e.mc);
            e.rel_err = e.closed != 0.0 ? diff / std::abs(e.closed)
                                        : std::numeric_limits<double>::infinity();
            const double band = tol_rel * std::abs(e.closed);
            // Wide: the one-sigma sampling error alone exceeds the whole
            // tolerance band, so a pass would be vacuous.
            e.wide_ci = !(e.stderr_mc <= band);
            e.pass = std::isfinite(e.mc) && diff <= band + 3.0 * e.stderr_mc;
            if (!e.pass && !e.flagged)
                any_fail = true;
            if (e.flagged || e.wide_ci)
                any_soft = true;
            report.entries.push_back(std::move(e));
        }

    report.pass = !any_fail && !any_soft;
    report.inconclusive = !any_fail && any_soft;
    return report;
}

std::string validation_report_to_json(const ValidationReport &report)
{
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["tol_rel"] = report.tol_rel;
    std::ostringstream hash;
    hash << std::hex << report.scenario_hash;
    j["scenario_hash"] = hash.str();
    j["trials"] = report.trials;
    j["overall"] = report.pass ? "pass" : (report.inconclusive ? "inconclusive" : "fail");
    j["entries"] = nlohmann::json::array();
    for (const auto &e : report.entries)
    {
        nlohmann::json je;
        je["ue"] = e.ue;
        je["instant"] = e.instant;
        je["mode"] = e.mode;
        je["closed"] = e.closed;
        je["mc"] = e.mc;
        je["stderr"] = e.stderr_mc;
        je["rel_err"] = e.rel_err;
        je["pass"] = e.pass;
        je["wide_ci"] = e.wide_ci;
        je["flagged"] = e.flagged;
        j["entries"].push_back(std::move(je));
    }
    return j.dump(2);
}

} // namespace cfmimo
