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

#include "cfmimo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "cfmimo/chanest.hpp"
#include "cfmimo/common.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

namespace {

constexpr std::uint64_t fig1_tag = 0xe1;
constexpr std::uint64_t fig2_tag = 0xe2;
constexpr std::uint64_t fig2_mc_tag = 0xe2'0001;
constexpr std::uint64_t fig3_tag = 0xe3;
constexpr std::uint64_t fig4_tag = 0xe4;
constexpr std::uint64_t validate_tag = 0xe5;

std::vector<double> db_axis(double lo, double hi, double step)
{
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-9; v += step)
        out.push_back(v);
    return out;
}

std::string hex_hash(std::uint64_t h)
{
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string make_meta(const ExperimentConfig &cfg, const std::string &name, std::uint64_t seed,
                      const std::vector<std::string> &columns, std::size_t row_count)
{
    nlohmann::json m;
    m["schema_version"] = schema_version;
    m["tool_version"] = version;
    m["experiment"] = name;
    m["seed"] = seed;
    m["config_hash"] = hex_hash(cfg.hash());
    m["columns"] = columns;
    m["row_count"] = row_count;
    m["config"] = nlohmann::json::parse(cfg.resolved_json);
    return m.dump(2);
}

std::string cell(double v) { return format_double(v); }
std::string cell(std::size_t v) { return std::to_string(v); }

double sum_se(const SeResult &r)
{
    double s = 0.0;
    for (double v : r.se)
        s += v;
    return s;
}

PhaseParams with_variances(PhaseParams base, double sigma2_ap, double sigma2_ue)
{
    base.sigma2_ap = sigma2_ap;
    base.sigma2_ue = sigma2_ue;
    return base;
}

} // namespace

std::string figure_csv(const FigureData &data)
{
    std::ostringstream os;
    for (std::size_t c = 0; c < data.columns.size(); ++c)
        os << (c ? "," : "") << data.columns[c];
    os << "\n";
    for (const auto &row : data.rows)
    {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << (c ? "," : "") << row[c];
        os << "\n";
    }
    return os.str();
}

void write_figure_data(const FigureData &data, const std::string &out_dir)
{
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
        std::ofstream csv(dir / (data.name + ".csv"), std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write " + (dir / (data.name + ".csv")).string());
        csv << figure_csv(data);
    }
    {
        std::ofstream meta(dir / (data.name + ".meta.json"), std::ios::binary);
        if (!meta)
            throw std::runtime_error("cannot write " +
                                     (dir / (data.name + ".meta.json")).string());
        meta << data.meta_json << "\n";
    }
}

SeScenario make_scenario(const SceneConfig &scene_cfg, const PhaseParams &phase,
                         std::size_t tau_p, std::size_t tau_c, double pilot_power_w,
                         double pilot_noise_w, double down_power_w, double down_noise_w,
                         bool geometric_delays, RngStream &rng)
{
    if (tau_p >= tau_c)
        throw std::invalid_argument("make_scenario: tau_p must be smaller than tau_c");
    NetworkScene scene = generate_scene(scene_cfg, rng);

    SeScenario s;
    s.L = scene_cfg.L;
    s.K = scene_cfg.K;
    s.N = scene_cfg.N;
    s.tau_c = tau_c;
    s.lambda = tau_p + 1;
    s.delays = geometric_delays ? delay_phases_from_scene(scene, phase.symbol_s)
                                : unit_delay_phases(scene_cfg.L, scene_cfg.K);
    s.R = std::move(scene.R);
    PilotPlan plan = assign_pilots(scene_cfg.K, tau_p);
    std::vector<double> powers(scene_cfg.K, pilot_power_w);
    s.stats = build_estimation_stats(s.R, scene_cfg.L, scene_cfg.K, scene_cfg.N, plan, powers,
                                     pilot_noise_w, phase);
    s.phase = phase;
    s.p_down_w = down_power_w;
    s.noise_down_w = down_noise_w;
    s.validate();
    return s;
}

FigureData run_nmse_sweep(const ExperimentConfig &cfg, std::uint64_t seed)
{
    const std::vector<double> axis = db_axis(cfg.fig1.db_min, cfg.fig1.db_max, cfg.fig1.db_step);

    FigureData d;
    d.name = "fig1";
    d.columns = {"sigma2_db", "tau_p", "nmse_mean", "nmse_p05", "nmse_p95"};

    // Scenes are shared across pilot lengths and sweep points so the
    // curves differ only in the quantity under study.
    std::vector<NetworkScene> scenes;
    if (!cfg.fig1.fixed_snr)
    {
        const std::size_t n_scenes = cfg.scenes_or(1);
        scenes.resize(n_scenes);
        for (std::size_t s = 0; s < n_scenes; ++s)
        {
            RngStream rng = RngStream::derive(seed, {fig1_tag, s});
            scenes[s] = generate_scene(cfg.scene, rng);
        }
    }

    for (std::size_t tau_p : cfg.fig1.tau_p_list)
    {
        for (double sigma_db : axis)
        {
            const PhaseParams phase =
                with_variances(cfg.phase, db_to_linear(sigma_db), db_to_linear(sigma_db));
            std::vector<double> values;
            if (cfg.fig1.fixed_snr)
            {
                // Geometry-free variant: unit-gain links, noise chosen so
                // every link sits at the configured pilot SNR.
                const std::size_t K = cfg.scene.K, N = cfg.scene.N;
                std::vector<arma::cx_mat> R(K, arma::cx_mat(arma::eye<arma::cx_mat>(N, N)));
                PilotPlan plan = assign_pilots(K, tau_p);
                std::vector<double> powers(K, db_to_linear(cfg.fig1.snr_db));
                EstimationStats stats =
                    build_estimation_stats(R, 1, K, N, plan, powers, 1.0, phase);
                for (std::size_t k = 0; k < K; ++k)
                    values.push_back(nmse(R[k], stats.q_at(k, 0)));
            }
            else
            {
                PilotPlan plan = assign_pilots(cfg.scene.K, tau_p);
                std::vector<double> powers(cfg.scene.K, cfg.pilot_power_w);
                for (const NetworkScene &scene : scenes)
                {
                    EstimationStats stats =
                        build_estimation_stats(scene.R, cfg.scene.L, cfg.scene.K, cfg.scene.N,
                                               plan, powers, cfg.pilot_noise_w, phase);
                    for (std::size_t k = 0; k < cfg.scene.K; ++k)
                        for (std::size_t l = 0; l < cfg.scene.L; ++l)
                            values.push_back(nmse(scene.corr(k, l), stats.q_at(k, l)));
                }
            }
            double mean = 0.0;
            for (double v : values)
                mean += v;
            mean /= static_cast<double>(values.size());
            d.rows.push_back({cell(sigma_db), cell(tau_p), cell(mean),
                              cell(percentile(values, 0.05)), cell(percentile(values, 0.95))});
        }
    }
    d.meta_json = make_meta(cfg, d.name, seed, d.columns, d.rows.size());
    return d;
}

namespace {

struct CdfSample {
    std::string case_name;
    std::string source;
    std::size_t scene = 0;
    std::size_t ue = 0;
    double se = 0.0;
};

// Sorts one (case, source) group and appends rows with empirical CDF
// levels (i + 1) / n.
void append_cdf_rows(FigureData &d, std::vector<CdfSample> &samples)
{
    // NaN spectral efficiencies (flagged simulation entries) sort last so
    // the comparison stays a strict weak ordering.
    std::sort(samples.begin(), samples.end(), [](const CdfSample &a, const CdfSample &b) {
        const bool an = std::isnan(a.se), bn = std::isnan(b.se);
        if (an != bn)
            return bn;
        const double av = an ? 0.0 : a.se, bv = bn ? 0.0 : b.se;
        return std::tie(av, a.scene, a.ue) < std::tie(bv, b.scene, b.ue);
    });
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const CdfSample &s = samples[i];
        const double level = static_cast<double>(i + 1) / static_cast<double>(samples.size());
        d.rows.push_back(
            {s.case_name, s.source, cell(s.scene), cell(s.ue), cell(s.se), cell(level)});
    }
}

} // namespace

FigureData run_se_cdf(const ExperimentConfig &cfg, std::uint64_t seed)
{
    struct Case {
        const char *name;
        double sigma2;
        bool geometric;
    };
    const double sigma2 = db_to_linear(cfg.fig2.sigma2_db);
    const std::vector<Case> cases = {
        {"ideal", 0.0, false}, {"oscillator", sigma2, false}, {"delay", 0.0, true}};
    const std::size_t n_scenes = cfg.scenes_or(50);
    const std::size_t mc_scenes = std::min(cfg.fig2.mc_scenes, n_scenes);

    FigureData d;
    d.name = "fig2";
    d.columns = {"case", "source", "scene", "ue", "se", "cdf"};

    // Identical substreams per scene index give every case the same layout.
    auto scenario_for = [&](const Case &c, std::size_t s) {
        RngStream rng = RngStream::derive(seed, {fig2_tag, s});
        return make_scenario(cfg.scene, with_variances(cfg.phase, c.sigma2, c.sigma2), cfg.tau_p,
                             cfg.tau_c, cfg.pilot_power_w, cfg.pilot_noise_w, cfg.down_power_w,
                             cfg.down_noise_w, c.geometric, rng);
    };

    std::vector<std::vector<double>> closed_se(cases.size() * n_scenes);
    parallel_for(cases.size() * n_scenes, [&](std::size_t idx) {
        const Case &c = cases[idx / n_scenes];
        const std::size_t s = idx % n_scenes;
        SeScenario scn = scenario_for(c, s);
        closed_se[idx] = evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed).se;
    });

    for (std::size_t ci = 0; ci < cases.size(); ++ci)
    {
        std::vector<CdfSample> group;
        for (std::size_t s = 0; s < n_scenes; ++s)
            for (std::size_t k = 0; k < cfg.scene.K; ++k)
                group.push_back({cases[ci].name, "closed", s, k, closed_se[ci * n_scenes + s][k]});
        append_cdf_rows(d, group);
    }

    std::vector<std::size_t> instants(cfg.tau_c - cfg.tau_p);
    for (std::size_t i = 0; i < instants.size(); ++i)
        instants[i] = cfg.tau_p + 1 + i;
    for (std::size_t ci = 0; ci < cases.size(); ++ci)
    {
        std::vector<CdfSample> group;
        for (std::size_t s = 0; s < mc_scenes; ++s)
        {
            SeScenario scn = scenario_for(cases[ci], s);
            McConfig mc;
            mc.trials = cfg.fig2.mc_trials;
            mc.seed = RngStream::derive(seed, {fig2_mc_tag, ci, s}).next_u64();
            mc.instants = instants;
            mc.precoder = Precoder::DelayUsed;
            mc.resolve_per_ap = false;
            mc.batch_count = cfg.mc_batch_count;
            McEstimate est = estimate_sinr(run_trials(scn, mc), TxMode::Coherent);
            for (std::size_t k = 0; k < cfg.scene.K; ++k)
            {
                std::vector<double> path(instants.size());
                for (std::size_t m = 0; m < instants.size(); ++m)
                    path[m] = est.sinr(k, m);
                group.push_back({cases[ci].name, "mc", s, k, se_from_sinr(path, cfg.tau_c)});
            }
        }
        append_cdf_rows(d, group);
    }

    d.meta_json = make_meta(cfg, d.name, seed, d.columns, d.rows.size());
    return d;
}

FigureData run_sum_se_sweep(const ExperimentConfig &cfg, std::uint64_t seed)
{
    const std::vector<double> axis = db_axis(cfg.fig3.db_min, cfg.fig3.db_max, cfg.fig3.db_step);
    const std::size_t n_scenes = cfg.scenes_or(10);

    // sums[scene][axis point][curve]
    std::vector<std::vector<std::array<double, 3>>> sums(
        n_scenes, std::vector<std::array<double, 3>>(axis.size()));

    parallel_for(n_scenes, [&](std::size_t s) {
        RngStream rng = RngStream::derive(seed, {fig3_tag, s});
        NetworkScene scene = generate_scene(cfg.scene, rng);
        DelayPhases delays = delay_phases_from_scene(scene, cfg.phase.symbol_s);
        PilotPlan plan = assign_pilots(cfg.scene.K, cfg.tau_p);
        std::vector<double> powers(cfg.scene.K, cfg.pilot_power_w);
        for (std::size_t a = 0; a < axis.size(); ++a)
        {
            const PhaseParams phase =
                with_variances(cfg.phase, db_to_linear(axis[a]), db_to_linear(axis[a]));
            SeScenario scn;
            scn.L = cfg.scene.L;
            scn.K = cfg.scene.K;
            scn.N = cfg.scene.N;
            scn.tau_c = cfg.tau_c;
            scn.lambda = cfg.tau_p + 1;
            scn.R = scene.R;
            scn.delays = delays;
            scn.stats = build_estimation_stats(scn.R, scn.L, scn.K, scn.N, plan, powers,
                                               cfg.pilot_noise_w, phase);
            scn.phase = phase;
            scn.p_down_w = cfg.down_power_w;
            scn.noise_down_w = cfg.down_noise_w;
            sums[s][a] = {
                sum_se(evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed)),
                sum_se(evaluate_se(scn, TxMode::Coherent, Precoder::DelayForgotten)),
                sum_se(evaluate_se(scn, TxMode::NonCoherent, Precoder::DelayUsed)),
            };
        }
    });

    FigureData d;
    d.name = "fig3";
    d.columns = {"sigma2_db", "mode", "precoder", "sum_se"};
    const char *mode_name[3] = {"coherent", "coherent", "noncoherent"};
    const char *precoder_name[3] = {"delay-used", "delay-forgotten", "none"};
    for (std::size_t a = 0; a < axis.size(); ++a)
        for (int curve = 0; curve < 3; ++curve)
        {
            double mean = 0.0;
            for (std::size_t s = 0; s < n_scenes; ++s)
                mean += sums[s][a][curve];
            mean /= static_cast<double>(n_scenes);
            d.rows.push_back(
                {cell(axis[a]), mode_name[curve], precoder_name[curve], cell(mean)});
        }
    d.meta_json = make_meta(cfg, d.name, seed, d.columns, d.rows.size());
    return d;
}

FigureData run_phase_grid(const ExperimentConfig &cfg, std::uint64_t seed)
{
    const std::size_t n_scenes = cfg.scenes_or(50);
    const std::size_t n_grid = cfg.fig4.ap_db.size() * cfg.fig4.ue_db.size();

    // sums[setting][scene][grid point]
    std::vector<std::vector<std::vector<double>>> sums(
        cfg.fig4.settings.size(),
        std::vector<std::vector<double>>(n_scenes, std::vector<double>(n_grid)));

    parallel_for(cfg.fig4.settings.size() * n_scenes, [&](std::size_t idx) {
        const std::size_t si = idx / n_scenes;
        const std::size_t s = idx % n_scenes;
        SceneConfig scene_cfg = cfg.scene;
        scene_cfg.L = cfg.fig4.settings[si][0];
        scene_cfg.N = cfg.fig4.settings[si][1];
        RngStream rng = RngStream::derive(seed, {fig4_tag, si, s});
        NetworkScene scene = generate_scene(scene_cfg, rng);
        DelayPhases delays = delay_phases_from_scene(scene, cfg.phase.symbol_s);
        PilotPlan plan = assign_pilots(scene_cfg.K, cfg.tau_p);
        std::vector<double> powers(scene_cfg.K, cfg.pilot_power_w);
        for (std::size_t ai = 0; ai < cfg.fig4.ap_db.size(); ++ai)
            for (std::size_t ui = 0; ui < cfg.fig4.ue_db.size(); ++ui)
            {
                const PhaseParams phase = with_variances(
                    cfg.phase, db_to_linear(cfg.fig4.ap_db[ai]), db_to_linear(cfg.fig4.ue_db[ui]));
                SeScenario scn;
                scn.L = scene_cfg.L;
                scn.K = scene_cfg.K;
                scn.N = scene_cfg.N;
                scn.tau_c = cfg.tau_c;
                scn.lambda = cfg.tau_p + 1;
                scn.R = scene.R;
                scn.delays = delays;
                scn.stats = build_estimation_stats(scn.R, scn.L, scn.K, scn.N, plan, powers,
                                                   cfg.pilot_noise_w, phase);
                scn.phase = phase;
                scn.p_down_w = cfg.down_power_w;
                scn.noise_down_w = cfg.down_noise_w;
                sums[si][s][ai * cfg.fig4.ue_db.size() + ui] =
                    sum_se(evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed));
            }
    });

    FigureData d;
    d.name = "fig4";
    d.columns = {"n_ap", "n_antennas", "sigma2_ap_db", "sigma2_ue_db", "sum_se"};
    for (std::size_t si = 0; si < cfg.fig4.settings.size(); ++si)
        for (std::size_t ai = 0; ai < cfg.fig4.ap_db.size(); ++ai)
            for (std::size_t ui = 0; ui < cfg.fig4.ue_db.size(); ++ui)
            {
                double mean = 0.0;
                for (std::size_t s = 0; s < n_scenes; ++s)
                    mean += sums[si][s][ai * cfg.fig4.ue_db.size() + ui];
                mean /= static_cast<double>(n_scenes);
                d.rows.push_back({cell(cfg.fig4.settings[si][0]), cell(cfg.fig4.settings[si][1]),
                                  cell(cfg.fig4.ap_db[ai]), cell(cfg.fig4.ue_db[ui]),
                                  cell(mean)});
            }
    d.meta_json = make_meta(cfg, d.name, seed, d.columns, d.rows.size());
    return d;
}

ValidationRun run_validation(const ExperimentConfig &cfg, std::uint64_t seed,
                             const std::string &corrupt)
{
    if (!corrupt.empty() && corrupt != "numerator")
        throw std::invalid_argument("validate: unknown corrupt target " + corrupt);

    SceneConfig desk = cfg.scene;
    desk.L = cfg.validation.n_ap;
    desk.K = cfg.validation.n_ue;
    desk.N = cfg.validation.n_antennas;
    const PhaseParams phase =
        with_variances(cfg.phase, db_to_linear(cfg.validation.sigma2_ap_db),
                       db_to_linear(cfg.validation.sigma2_ue_db));

    RngStream rng = RngStream::derive(seed, {validate_tag, 0});
    SeScenario scn =
        make_scenario(desk, phase, cfg.validation.tau_p, cfg.validation.tau_c, cfg.pilot_power_w,
                      cfg.pilot_noise_w, cfg.down_power_w, cfg.down_noise_w, true, rng);

    std::vector<std::size_t> instants = cfg.validation.instants;
    if (instants.empty())
        instants = {scn.lambda, std::min(scn.lambda + 10, scn.tau_c), scn.tau_c};

    SeResult closed_du = evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed);
    SeResult closed_df = evaluate_se(scn, TxMode::Coherent, Precoder::DelayForgotten);
    SeResult closed_nc = evaluate_se(scn, TxMode::NonCoherent, Precoder::DelayUsed);
    if (corrupt == "numerator")
        for (SeResult *r : {&closed_du, &closed_df, &closed_nc})
            r->sinr *= 1.5;

    McConfig mc;
    mc.trials = cfg.mc_trials;
    mc.seed = seed;
    mc.instants = instants;
    mc.batch_count = cfg.mc_batch_count;
    mc.resolve_per_ap = true;

    mc.precoder = Precoder::DelayUsed;
    McSamples du_samples = run_trials(scn, mc);
    mc.precoder = Precoder::DelayForgotten;
    McSamples df_samples = run_trials(scn, mc);

    ValidationRun run;
    run.reports.push_back(validate(closed_du, estimate_sinr(du_samples, TxMode::Coherent),
                                   cfg.validation.tol_rel));
    run.reports.push_back(validate(closed_df, estimate_sinr(df_samples, TxMode::Coherent),
                                   cfg.validation.tol_rel));
    run.reports.push_back(validate(closed_nc, estimate_sinr(du_samples, TxMode::NonCoherent),
                                   cfg.validation.tol_rel));

    bool any_fail = false, any_soft = false;
    for (const auto &r : run.reports)
    {
        if (!r.pass && !r.inconclusive)
            any_fail = true;
        if (r.inconclusive)
            any_soft = true;
    }
    run.exit_code = any_fail ? 2 : (any_soft ? 3 : 0);

    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["tool_version"] = version;
    j["experiment"] = "validate";
    j["seed"] = seed;
    j["config_hash"] = hex_hash(cfg.hash());
    j["overall"] = any_fail ? "fail" : (any_soft ? "inconclusive" : "pass");
    j["reports"] = nlohmann::json::array();
    for (const auto &r : run.reports)
        j["reports"].push_back(nlohmann::json::parse(validation_report_to_json(r)));
    j["config"] = nlohmann::json::parse(cfg.resolved_json);
    run.json = j.dump(2);
    return run;
}

} // namespace cfmimo
