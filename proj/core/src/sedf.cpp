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

#include "cfmimo/sedf.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "cfmimo/common.hpp"

namespace cfmimo {

const char *to_string(Precoder p)
{
    return p == Precoder::DelayUsed ? "delay-used" : "delay-forgotten";
}

const char *to_string(TxMode m) { return m == TxMode::Coherent ? "coherent" : "noncoherent"; }

void SeScenario::validate() const
{
    if (L == 0 || K == 0 || N == 0)
        throw std::invalid_argument("scenario: L, K, N must be at least 1");
    if (lambda != stats.plan.tau_p + 1)
        throw std::invalid_argument("scenario: lambda must equal tau_p + 1");
    if (tau_c < lambda)
        throw std::invalid_argument("scenario: tau_c must be at least tau_p + 1");
    if (R.size() != K * L)
        throw std::invalid_argument("scenario: R must hold K * L matrices");
    if (delays.theta.n_rows != L || delays.theta.n_cols != K)
        throw std::invalid_argument("scenario: delay phases must be L x K");
    if (!(p_down_w >= 0.0))
        throw std::invalid_argument("scenario: downlink power must be nonnegative");
    if (!(noise_down_w > 0.0))
        throw std::invalid_argument("scenario: downlink noise power must be positive");
    phase.validate();
}

std::uint64_t SeScenario::hash() const
{
    HashSink sink;
    sink.add(std::uint64_t(L));
    sink.add(std::uint64_t(K));
    sink.add(std::uint64_t(N));
    sink.add(std::uint64_t(tau_c));
    sink.add(std::uint64_t(lambda));
    sink.add(p_down_w);
    sink.add(noise_down_w);
    sink.add(stats.noise_w);
    sink.add(phase.sigma2_ap);
    sink.add(phase.sigma2_ue);
    sink.add(phase.carrier_hz);
    sink.add(phase.symbol_s);
    for (double p : stats.pilot_power_w)
        sink.add(p);
    for (std::size_t t : stats.plan.pilot_instant)
        sink.add(std::uint64_t(t));
    for (const auto &r : R)
        for (const auto &v : r)
        {
            sink.add(v.real());
            sink.add(v.imag());
        }
    for (const auto &v : delays.theta)
    {
        sink.add(v.real());
        sink.add(v.imag());
    }
    return sink.digest();
}

std::vector<double> mu_normalization(const EstimationStats &stats)
{
    std::vector<double> mu(stats.L);
    for (std::size_t l = 0; l < stats.L; ++l)
    {
        double sum = 0.0;
        for (std::size_t k = 0; k < stats.K; ++k)
            sum += arma::trace(arma::real(stats.q_at(k, l)));
        mu[l] = sum > 0.0 ? 1.0 / sum : 0.0;
    }
    return mu;
}

namespace {

// real part of trace(A * B) without forming the product
double trace_prod(const arma::cx_mat &a, const arma::cx_mat &b)
{
    double acc = 0.0;
    for (std::size_t r = 0; r < a.n_rows; ++r)
        for (std::size_t c = 0; c < a.n_cols; ++c)
            acc += a(r, c).real() * b(c, r).real() - a(r, c).imag() * b(c, r).imag();
    return acc;
}

} // namespace

SinrEvaluator::SinrEvaluator(const SeScenario &scenario) : scn(scenario)
{
    scenario.validate();

    const std::size_t L = scn.L, K = scn.K;
    mu_ = mu_normalization(scn.stats);
    sqrt_mu.resize(L);
    for (std::size_t l = 0; l < L; ++l)
        sqrt_mu[l] = std::sqrt(mu_[l]);

    tq.resize(K * L);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l)
            tq[k * L + l] = arma::trace(arma::real(scn.stats.q_at(k, l)));

    tqr_agg.assign(K * K, 0.0);
    s1.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
    {
        double total = 0.0;
        for (std::size_t i = 0; i < K; ++i)
        {
            double acc = 0.0;
            for (std::size_t l = 0; l < L; ++l)
                acc += mu_[l] * trace_prod(scn.stats.q_at(i, l), scn.R[k * L + l]);
            tqr_agg[k * K + i] = acc;
            total += acc;
        }
        s1[k] = scn.p_down_w * total;
    }

    b.resize(K);
    cdu.resize(K);
    cdf.resize(K);
    sum_b.assign(K, 0.0);
    sum_cdu.assign(K, 0.0);
    sum_cdf.assign(K, 0.0);
    alpha_du.assign(K, 0.0);
    alpha_df.assign(K, {0.0, 0.0});
    e_nc.assign(K, 0.0);

    for (std::size_t k = 0; k < K; ++k)
    {
        const auto &group = scn.stats.plan.copilot[k];
        b[k].assign(group.size(), 0.0);
        cdu[k].assign(group.size(), 0.0);
        cdf[k].assign(group.size(), 0.0);
        for (std::size_t j = 0; j < group.size(); ++j)
        {
            std::size_t i = group[j];
            std::complex<double> coh_du{0.0, 0.0};
            std::complex<double> coh_df{0.0, 0.0};
            for (std::size_t l = 0; l < L; ++l)
            {
                std::complex<double> t = sqrt_mu[l] * arma::trace(scn.stats.qbar_at(k, j, l));
                b[k][j] += std::norm(t);
                coh_du += t;
                coh_df += std::conj(scn.delays.theta(l, i)) * t;
            }
            cdu[k][j] = std::norm(coh_du);
            cdf[k][j] = std::norm(coh_df);
            sum_b[k] += b[k][j];
            sum_cdu[k] += cdu[k][j];
            sum_cdf[k] += cdf[k][j];
        }

        std::complex<double> adf{0.0, 0.0};
        for (std::size_t l = 0; l < L; ++l)
        {
            double t = sqrt_mu[l] * tq[k * L + l];
            alpha_du[k] += t;
            adf += std::conj(scn.delays.theta(l, k)) * t;
            e_nc[k] += t * t;
        }
        alpha_df[k] = adf;
    }
}

namespace {

SinrBreakdown assemble(double numerator, double positive_sum, double noise_w)
{
    // Interference is assembled as (sum of nonnegative terms) - numerator.
    // The difference is nonnegative up to rounding; anything beyond a tiny
    // relative slack means the statistics are inconsistent.
    double xi = positive_sum - numerator;
    if (xi < -1e-9 * positive_sum)
        throw std::runtime_error("sinr: negative interference residual");
    if (xi < 0.0)
        xi = 0.0;

    SinrBreakdown out;
    out.numerator = numerator;
    out.interference = xi;
    out.denominator = xi + noise_w;
    out.sinr = numerator / out.denominator;
    return out;
}

} // namespace

SinrBreakdown SinrEvaluator::coherent_du(std::size_t k, std::size_t n) const
{
    std::size_t gap = n - scn.lambda;
    double eap = eta(gap, scn.phase.sigma2_ap);
    double eue = eta(gap, scn.phase.sigma2_ue);

    double num = eap * eue * scn.p_down_w * (alpha_du[k] * alpha_du[k]);
    double pilot = sum_b[k] + eap * (sum_cdu[k] - sum_b[k]);
    return assemble(num, s1[k] + scn.p_down_w * pilot, scn.noise_down_w);
}

SinrBreakdown SinrEvaluator::coherent_df(std::size_t k, std::size_t n) const
{
    // A single AP has no cross-AP phase alignment to lose: |theta| = 1
    // collapses every coherent sum, so the delay-forgotten expression
    // reduces to the delay-used one.
    if (scn.L == 1)
        return coherent_du(k, n);

    std::size_t gap = n - scn.lambda;
    double eap = eta(gap, scn.phase.sigma2_ap);
    double eue = eta(gap, scn.phase.sigma2_ue);

    double num = eap * eue * scn.p_down_w * std::norm(alpha_df[k]);
    double pilot = sum_b[k] + eap * (sum_cdf[k] - sum_b[k]);
    return assemble(num, s1[k] + scn.p_down_w * pilot, scn.noise_down_w);
}

SinrBreakdown SinrEvaluator::noncoherent(std::size_t k, std::size_t n) const
{
    std::size_t gap = n - scn.lambda;
    double eap = eta(gap, scn.phase.sigma2_ap);
    double eue = eta(gap, scn.phase.sigma2_ue);

    double num = eap * eue * scn.p_down_w * e_nc[k];
    double pilot = sum_b[k];
    return assemble(num, s1[k] + scn.p_down_w * pilot, scn.noise_down_w);
}

SinrBreakdown SinrEvaluator::breakdown(TxMode mode, Precoder precoder, std::size_t k,
                                       std::size_t n) const
{
    if (k >= scn.K)
        throw std::invalid_argument("sinr: UE index out of range");
    if (n < scn.lambda || n > scn.tau_c)
        throw std::invalid_argument("sinr: instant outside the downlink phase");

    if (mode == TxMode::NonCoherent)
        return noncoherent(k, n);
    return precoder == Precoder::DelayUsed ? coherent_du(k, n) : coherent_df(k, n);
}

double SinrEvaluator::sinr(TxMode mode, Precoder precoder, std::size_t k, std::size_t n) const
{
    return breakdown(mode, precoder, k, n).sinr;
}

double SinrEvaluator::interference_term(TxMode mode, Precoder precoder, std::size_t k,
                                        std::size_t i, std::size_t n) const
{
    double base = tqr_agg[k * scn.K + i];

    const auto &group = scn.stats.plan.copilot[k];
    std::size_t j = group.size();
    for (std::size_t pos = 0; pos < group.size(); ++pos)
        if (group[pos] == i)
            j = pos;
    if (j == group.size())
        return base; // not a copilot UE

    if (mode == TxMode::NonCoherent)
        return base + b[k][j];

    std::size_t gap = n - scn.lambda;
    double eap = eta(gap, scn.phase.sigma2_ap);
    double c = (precoder == Precoder::DelayUsed || scn.L == 1) ? cdu[k][j] : cdf[k][j];
    return base + b[k][j] + eap * (c - b[k][j]);
}

double sinr_coherent_du(std::size_t k, std::size_t n, const SeScenario &scenario)
{
    return SinrEvaluator(scenario).sinr(TxMode::Coherent, Precoder::DelayUsed, k, n);
}

double sinr_coherent_df(std::size_t k, std::size_t n, const SeScenario &scenario)
{
    return SinrEvaluator(scenario).sinr(TxMode::Coherent, Precoder::DelayForgotten, k, n);
}

double sinr_noncoherent(std::size_t k, std::size_t n, const SeScenario &scenario)
{
    return SinrEvaluator(scenario).sinr(TxMode::NonCoherent, Precoder::DelayUsed, k, n);
}

double se_from_sinr(const std::vector<double> &sinr_path, std::size_t tau_c)
{
    if (sinr_path.size() > tau_c)
        throw std::invalid_argument("se_from_sinr: more instants than the block holds");
    double acc = 0.0;
    for (double v : sinr_path)
    {
        if (!(v >= 0.0))
            throw std::invalid_argument("se_from_sinr: SINR values must be nonnegative");
        acc += std::log2(1.0 + v);
    }
    return acc / double(tau_c);
}

double asymptotic_sinr(std::size_t n, const SeScenario &scenario, double a)
{
    if (n < scenario.lambda)
        throw std::invalid_argument("asymptotic_sinr: instant precedes the downlink phase");
    if (a < 0.0)
        throw std::invalid_argument("asymptotic_sinr: residual constant must be nonnegative");
    std::size_t gap = n - scenario.lambda;
    double eap = eta(gap, scenario.phase.sigma2_ap);
    double eue = eta(gap, scenario.phase.sigma2_ue);
    return 1.0 / (1.0 / (eap * eue) + 1.0 / eue + a);
}

SeResult evaluate_se(const SeScenario &scenario, TxMode mode, Precoder precoder)
{
    SinrEvaluator eval(scenario);

    SeResult result;
    result.mode = mode;
    result.precoder = precoder;
    result.lambda = scenario.lambda;
    result.tau_c = scenario.tau_c;
    result.scenario_hash = scenario.hash();

    std::size_t n_instants = scenario.tau_c - scenario.lambda + 1;
    result.sinr.set_size(scenario.K, n_instants);
    result.se.resize(scenario.K);

    std::vector<double> path(n_instants);
    for (std::size_t k = 0; k < scenario.K; ++k)
    {
        for (std::size_t idx = 0; idx < n_instants; ++idx)
        {
            path[idx] = eval.sinr(mode, precoder, k, scenario.lambda + idx);
            result.sinr(k, idx) = path[idx];
        }
        result.se[k] = se_from_sinr(path, scenario.tau_c);
    }
    return result;
}

void write_se_result_csv(std::ostream &out, const std::vector<SeResult> &results)
{
    out << "ue,mode,precoder,n,sinr,se\n";
    for (const auto &res : results)
        for (std::size_t k = 0; k < res.sinr.n_rows; ++k)
            for (std::size_t idx = 0; idx < res.sinr.n_cols; ++idx)
                out << k << ',' << to_string(res.mode) << ',' << to_string(res.precoder) << ','
                    << res.lambda + idx << ',' << format_double(res.sinr(k, idx)) << ','
                    << format_double(res.se[k]) << '\n';
}

} // namespace cfmimo
