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

#include "cfmimo/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfmimo/common.hpp"

namespace cfmimo {

namespace {

using nlohmann::json;

void check_keys(const json &node, const std::string &path,
                std::initializer_list<const char *> allowed)
{
    if (!node.is_object())
        throw std::invalid_argument("config: " + path + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = node.begin(); it != node.end(); ++it)
        if (ok.find(it.key()) == ok.end())
            throw std::invalid_argument("config: unknown key " + path + "." + it.key());
}

template <typename T>
T get_or(const json &node, const char *key, T fallback)
{
    if (!node.contains(key))
        return fallback;
    try
    {
        return node.at(key).get<T>();
    }
    catch (const json::exception &)
    {
        throw std::invalid_argument(std::string("config: bad value for key ") + key);
    }
}

double get_positive(const json &node, const char *key, double fallback, const std::string &path)
{
    double v = get_or(node, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("config: " + path + "." + key + " must be positive");
    return v;
}

std::size_t get_count(const json &node, const char *key, std::size_t fallback,
                      const std::string &path)
{
    auto v = get_or<std::int64_t>(node, key, static_cast<std::int64_t>(fallback));
    if (v < 1)
        throw std::invalid_argument("config: " + path + "." + key + " must be at least 1");
    return static_cast<std::size_t>(v);
}

void parse_scene(const json &node, ExperimentConfig &cfg)
{
    check_keys(node, "scene",
               {"n_ap", "n_ue", "n_antennas", "side_m", "wrap_around", "pathloss",
                "correlation"});
    cfg.scene.L = get_count(node, "n_ap", cfg.scene.L, "scene");
    cfg.scene.K = get_count(node, "n_ue", cfg.scene.K, "scene");
    cfg.scene.N = get_count(node, "n_antennas", cfg.scene.N, "scene");
    cfg.scene.side_m = get_positive(node, "side_m", cfg.scene.side_m, "scene");
    cfg.scene.wrap_around = get_or(node, "wrap_around", cfg.scene.wrap_around);

    if (node.contains("pathloss"))
    {
        const json &pl = node.at("pathloss");
        check_keys(pl, "scene.pathloss",
                   {"d0_m", "d1_m", "ref_loss_db", "ap_height_m", "ue_height_m",
                    "shadow_std_db", "min_dist_m"});
        PathlossParams &p = cfg.scene.pathloss;
        p.d0_m = get_positive(pl, "d0_m", p.d0_m, "scene.pathloss");
        p.d1_m = get_positive(pl, "d1_m", p.d1_m, "scene.pathloss");
        p.shadow_std_db = get_or(pl, "shadow_std_db", p.shadow_std_db);
        p.min_dist_m = get_positive(pl, "min_dist_m", p.min_dist_m, "scene.pathloss");
        if (p.shadow_std_db < 0.0)
            throw std::invalid_argument("config: scene.pathloss.shadow_std_db must be >= 0");
        double ap_h = get_positive(pl, "ap_height_m", 15.0, "scene.pathloss");
        double ue_h = get_positive(pl, "ue_height_m", 1.65, "scene.pathloss");
        p.ref_loss_db = get_or(
            pl, "ref_loss_db",
            three_slope_reference_loss_db(cfg.phase.carrier_hz / 1.0e6, ap_h, ue_h));
    }
    else
    {
        cfg.scene.pathloss.ref_loss_db =
            three_slope_reference_loss_db(cfg.phase.carrier_hz / 1.0e6);
    }

    if (node.contains("correlation"))
    {
        const json &co = node.at("correlation");
        check_keys(co, "scene.correlation", {"model", "angular_std_deg"});
        std::string model = get_or<std::string>(co, "model", "identity");
        if (model == "identity")
            cfg.scene.correlation.kind = CorrelationKind::ScaledIdentity;
        else if (model == "local-scattering")
            cfg.scene.correlation.kind = CorrelationKind::LocalScattering;
        else
            throw std::invalid_argument(
                "config: scene.correlation.model must be \"identity\" or \"local-scattering\"");
        cfg.angular_std_deg = get_or(co, "angular_std_deg", cfg.angular_std_deg);
        if (cfg.angular_std_deg < 0.0)
            throw std::invalid_argument(
                "config: scene.correlation.angular_std_deg must be >= 0");
    }
    // Derived from the degree echo unconditionally so a reparse of the
    // rendered form reproduces the same radians bit for bit.
    cfg.scene.correlation.angular_std_rad = cfg.angular_std_deg * arma::datum::pi / 180.0;
}

void parse_phase(const json &node, ExperimentConfig &cfg)
{
    check_keys(node, "phase",
               {"sigma2_ap_db", "sigma2_ue_db", "c_ap", "c_ue", "carrier_hz", "bandwidth_hz"});
    cfg.phase.carrier_hz = get_positive(node, "carrier_hz", cfg.phase.carrier_hz, "phase");
    cfg.bandwidth_hz = get_positive(node, "bandwidth_hz", cfg.bandwidth_hz, "phase");

    const bool has_db = node.contains("sigma2_ap_db") || node.contains("sigma2_ue_db");
    const bool has_c = node.contains("c_ap") || node.contains("c_ue");
    if (has_db && has_c)
        throw std::invalid_argument(
            "config: phase.sigma2_*_db and phase.c_* are mutually exclusive");
    if (has_db)
    {
        cfg.phase_input = PhaseInput::VariancesDb;
        cfg.sigma2_ap_db_given = node.contains("sigma2_ap_db");
        cfg.sigma2_ue_db_given = node.contains("sigma2_ue_db");
        if (cfg.sigma2_ap_db_given)
            cfg.sigma2_ap_db_in = node.at("sigma2_ap_db").get<double>();
        if (cfg.sigma2_ue_db_given)
            cfg.sigma2_ue_db_in = node.at("sigma2_ue_db").get<double>();
    }
    else if (has_c)
    {
        cfg.phase_input = PhaseInput::Oscillator;
        cfg.c_ap_given = node.contains("c_ap");
        cfg.c_ue_given = node.contains("c_ue");
        cfg.c_ap_in = get_or(node, "c_ap", 0.0);
        cfg.c_ue_in = get_or(node, "c_ue", 0.0);
        if (cfg.c_ap_in < 0.0 || cfg.c_ue_in < 0.0)
            throw std::invalid_argument("config: phase.c_ap and phase.c_ue must be >= 0");
    }
}

// The linear variances and the symbol time follow from the echoes alone,
// so the same inputs always map to the same doubles.
void apply_phase_inputs(ExperimentConfig &cfg)
{
    cfg.phase.symbol_s = 1.0 / cfg.bandwidth_hz;
    switch (cfg.phase_input)
    {
    case PhaseInput::Zero:
        cfg.phase.sigma2_ap = 0.0;
        cfg.phase.sigma2_ue = 0.0;
        break;
    case PhaseInput::VariancesDb:
        cfg.phase.sigma2_ap = cfg.sigma2_ap_db_given ? db_to_linear(cfg.sigma2_ap_db_in) : 0.0;
        cfg.phase.sigma2_ue = cfg.sigma2_ue_db_given ? db_to_linear(cfg.sigma2_ue_db_in) : 0.0;
        break;
    case PhaseInput::Oscillator:
        cfg.phase.sigma2_ap =
            variance_from_oscillator(cfg.c_ap_in, cfg.phase.carrier_hz, cfg.phase.symbol_s);
        cfg.phase.sigma2_ue =
            variance_from_oscillator(cfg.c_ue_in, cfg.phase.carrier_hz, cfg.phase.symbol_s);
        break;
    }
}

std::vector<std::size_t> parse_instants(const json &node, const char *key,
                                        const std::string &path)
{
    std::vector<std::size_t> out;
    if (!node.contains(key))
        return out;
    const json &arr = node.at(key);
    if (!arr.is_array())
        throw std::invalid_argument("config: " + path + "." + key + " must be an array");
    for (const auto &v : arr)
    {
        auto n = v.get<std::int64_t>();
        if (n < 1)
            throw std::invalid_argument("config: " + path + "." + key +
                                        " entries must be at least 1");
        out.push_back(static_cast<std::size_t>(n));
    }
    return out;
}

json instants_json(const std::vector<std::size_t> &v)
{
    json arr = json::array();
    for (std::size_t n : v)
        arr.push_back(n);
    return arr;
}

// Canonical form: every field explicit, in the same schema parse_config
// reads, with the boundary-unit echoes emitted verbatim.
json resolve(const ExperimentConfig &cfg)
{
    json j;
    j["scene"] = {
        {"n_ap", cfg.scene.L},
        {"n_ue", cfg.scene.K},
        {"n_antennas", cfg.scene.N},
        {"side_m", cfg.scene.side_m},
        {"wrap_around", cfg.scene.wrap_around},
        {"pathloss",
         {{"d0_m", cfg.scene.pathloss.d0_m},
          {"d1_m", cfg.scene.pathloss.d1_m},
          {"ref_loss_db", cfg.scene.pathloss.ref_loss_db},
          {"shadow_std_db", cfg.scene.pathloss.shadow_std_db},
          {"min_dist_m", cfg.scene.pathloss.min_dist_m}}},
        {"correlation",
         {{"model", cfg.scene.correlation.kind == CorrelationKind::ScaledIdentity
                        ? "identity"
                        : "local-scattering"},
          {"angular_std_deg", cfg.angular_std_deg}}}};
    json phase = {{"carrier_hz", cfg.phase.carrier_hz}, {"bandwidth_hz", cfg.bandwidth_hz}};
    switch (cfg.phase_input)
    {
    case PhaseInput::Zero:
        break;
    case PhaseInput::VariancesDb:
        if (cfg.sigma2_ap_db_given)
            phase["sigma2_ap_db"] = cfg.sigma2_ap_db_in;
        if (cfg.sigma2_ue_db_given)
            phase["sigma2_ue_db"] = cfg.sigma2_ue_db_in;
        break;
    case PhaseInput::Oscillator:
        if (cfg.c_ap_given)
            phase["c_ap"] = cfg.c_ap_in;
        if (cfg.c_ue_given)
            phase["c_ue"] = cfg.c_ue_in;
        break;
    }
    j["phase"] = phase;
    j["pilot"] = {{"tau_p", cfg.tau_p}};
    j["block"] = {{"tau_c", cfg.tau_c}};
    j["power"] = {{"pilot_dbm", cfg.pilot_dbm}, {"down_dbm", cfg.down_dbm}};
    j["noise"] = {{"pilot_dbm", cfg.pilot_noise_dbm}, {"down_dbm", cfg.down_noise_dbm}};
    j["mc"] = {{"trials", cfg.mc_trials},
               {"batch_count", cfg.mc_batch_count},
               {"instants", instants_json(cfg.mc_instants)}};
    j["num_scenes"] = cfg.num_scenes;
    j["out_dir"] = cfg.out_dir;
    j["fig1"] = {{"fixed_snr", cfg.fig1.fixed_snr},
                 {"snr_db", cfg.fig1.snr_db},
                 {"tau_p_list", cfg.fig1.tau_p_list},
                 {"sigma2_db_min", cfg.fig1.db_min},
                 {"sigma2_db_max", cfg.fig1.db_max},
                 {"sigma2_db_step", cfg.fig1.db_step}};
    j["fig2"] = {{"sigma2_db", cfg.fig2.sigma2_db},
                 {"mc_scenes", cfg.fig2.mc_scenes},
                 {"mc_trials", cfg.fig2.mc_trials}};
    j["fig3"] = {{"sigma2_db_min", cfg.fig3.db_min},
                 {"sigma2_db_max", cfg.fig3.db_max},
                 {"sigma2_db_step", cfg.fig3.db_step}};
    json settings = json::array();
    for (const auto &s : cfg.fig4.settings)
        settings.push_back({s[0], s[1]});
    j["fig4"] = {{"sigma2_ap_db_list", cfg.fig4.ap_db},
                 {"sigma2_ue_db_list", cfg.fig4.ue_db},
                 {"settings", settings}};
    j["validate"] = {{"tol_rel", cfg.validation.tol_rel},
                     {"n_ap", cfg.validation.n_ap},
                     {"n_ue", cfg.validation.n_ue},
                     {"n_antennas", cfg.validation.n_antennas},
                     {"tau_p", cfg.validation.tau_p},
                     {"tau_c", cfg.validation.tau_c},
                     {"sigma2_ap_db", cfg.validation.sigma2_ap_db},
                     {"sigma2_ue_db", cfg.validation.sigma2_ue_db},
                     {"instants", instants_json(cfg.validation.instants)}};
    return j;
}

} // namespace

std::uint64_t ExperimentConfig::hash() const { return fnv1a(resolved_json.data(), resolved_json.size()); }

ExperimentConfig default_config() { return parse_config("{}"); }

ExperimentConfig parse_config(const std::string &json_text)
{
    json root;
    try
    {
        root = json::parse(json_text);
    }
    catch (const json::exception &e)
    {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    check_keys(root, "<root>",
               {"scene", "phase", "pilot", "power", "noise", "block", "mc", "num_scenes",
                "out_dir", "fig1", "fig2", "fig3", "fig4", "validate"});

    ExperimentConfig cfg;
    // Phase first: the carrier frequency feeds the path-loss reference.
    if (root.contains("phase"))
        parse_phase(root.at("phase"), cfg);
    apply_phase_inputs(cfg);
    parse_scene(root.contains("scene") ? root.at("scene") : json::object(), cfg);

    if (root.contains("pilot"))
    {
        check_keys(root.at("pilot"), "pilot", {"tau_p"});
        cfg.tau_p = get_count(root.at("pilot"), "tau_p", cfg.tau_p, "pilot");
    }
    if (root.contains("block"))
    {
        check_keys(root.at("block"), "block", {"tau_c"});
        cfg.tau_c = get_count(root.at("block"), "tau_c", cfg.tau_c, "block");
    }
    if (cfg.tau_p >= cfg.tau_c)
        throw std::invalid_argument("config: pilot.tau_p must be smaller than block.tau_c");

    if (root.contains("power"))
    {
        check_keys(root.at("power"), "power", {"pilot_dbm", "down_dbm"});
        cfg.pilot_dbm = get_or(root.at("power"), "pilot_dbm", cfg.pilot_dbm);
        cfg.down_dbm = get_or(root.at("power"), "down_dbm", cfg.down_dbm);
    }
    cfg.pilot_power_w = dbm_to_watt(cfg.pilot_dbm);
    cfg.down_power_w = dbm_to_watt(cfg.down_dbm);

    if (root.contains("noise"))
    {
        check_keys(root.at("noise"), "noise", {"pilot_dbm", "down_dbm"});
        cfg.pilot_noise_dbm = get_or(root.at("noise"), "pilot_dbm", cfg.pilot_noise_dbm);
        cfg.down_noise_dbm = get_or(root.at("noise"), "down_dbm", cfg.down_noise_dbm);
    }
    cfg.pilot_noise_w = dbm_to_watt(cfg.pilot_noise_dbm);
    cfg.down_noise_w = dbm_to_watt(cfg.down_noise_dbm);

    if (root.contains("mc"))
    {
        const json &mc = root.at("mc");
        check_keys(mc, "mc", {"trials", "batch_count", "instants"});
        cfg.mc_trials = get_count(mc, "trials", cfg.mc_trials, "mc");
        cfg.mc_batch_count = get_count(mc, "batch_count", cfg.mc_batch_count, "mc");
        cfg.mc_instants = parse_instants(mc, "instants", "mc");
    }
    if (root.contains("num_scenes"))
    {
        auto v = root.at("num_scenes").get<std::int64_t>();
        if (v < 0)
            throw std::invalid_argument("config: num_scenes must be >= 0");
        cfg.num_scenes = static_cast<std::size_t>(v);
    }
    cfg.out_dir = get_or<std::string>(root, "out_dir", cfg.out_dir);

    if (root.contains("fig1"))
    {
        const json &f = root.at("fig1");
        check_keys(f, "fig1",
                   {"fixed_snr", "snr_db", "tau_p_list", "sigma2_db_min", "sigma2_db_max",
                    "sigma2_db_step"});
        cfg.fig1.fixed_snr = get_or(f, "fixed_snr", cfg.fig1.fixed_snr);
        cfg.fig1.snr_db = get_or(f, "snr_db", cfg.fig1.snr_db);
        cfg.fig1.tau_p_list = get_or(f, "tau_p_list", cfg.fig1.tau_p_list);
        cfg.fig1.db_min = get_or(f, "sigma2_db_min", cfg.fig1.db_min);
        cfg.fig1.db_max = get_or(f, "sigma2_db_max", cfg.fig1.db_max);
        cfg.fig1.db_step = get_positive(f, "sigma2_db_step", cfg.fig1.db_step, "fig1");
        if (cfg.fig1.tau_p_list.empty())
            throw std::invalid_argument("config: fig1.tau_p_list must not be empty");
        if (cfg.fig1.db_min > cfg.fig1.db_max)
            throw std::invalid_argument("config: fig1 sigma2_db range is inverted");
    }
    if (root.contains("fig2"))
    {
        const json &f = root.at("fig2");
        check_keys(f, "fig2", {"sigma2_db", "mc_scenes", "mc_trials"});
        cfg.fig2.sigma2_db = get_or(f, "sigma2_db", cfg.fig2.sigma2_db);
        cfg.fig2.mc_scenes = get_count(f, "mc_scenes", cfg.fig2.mc_scenes, "fig2");
        cfg.fig2.mc_trials = get_count(f, "mc_trials", cfg.fig2.mc_trials, "fig2");
    }
    if (root.contains("fig3"))
    {
        const json &f = root.at("fig3");
        check_keys(f, "fig3", {"sigma2_db_min", "sigma2_db_max", "sigma2_db_step"});
        cfg.fig3.db_min = get_or(f, "sigma2_db_min", cfg.fig3.db_min);
        cfg.fig3.db_max = get_or(f, "sigma2_db_max", cfg.fig3.db_max);
        cfg.fig3.db_step = get_positive(f, "sigma2_db_step", cfg.fig3.db_step, "fig3");
        if (cfg.fig3.db_min > cfg.fig3.db_max)
            throw std::invalid_argument("config: fig3 sigma2_db range is inverted");
    }
    if (root.contains("fig4"))
    {
        const json &f = root.at("fig4");
        check_keys(f, "fig4", {"sigma2_ap_db_list", "sigma2_ue_db_list", "settings"});
        cfg.fig4.ap_db = get_or(f, "sigma2_ap_db_list", cfg.fig4.ap_db);
        cfg.fig4.ue_db = get_or(f, "sigma2_ue_db_list", cfg.fig4.ue_db);
        if (f.contains("settings"))
        {
            cfg.fig4.settings.clear();
            for (const auto &s : f.at("settings"))
            {
                if (!s.is_array() || s.size() != 2)
                    throw std::invalid_argument(
                        "config: fig4.settings entries must be [n_ap, n_antennas] pairs");
                cfg.fig4.settings.push_back(
                    {s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
            }
        }
        if (cfg.fig4.ap_db.empty() || cfg.fig4.ue_db.empty() || cfg.fig4.settings.empty())
            throw std::invalid_argument("config: fig4 lists must not be empty");
    }
    if (root.contains("validate"))
    {
        const json &f = root.at("validate");
        check_keys(f, "validate",
                   {"tol_rel", "n_ap", "n_ue", "n_antennas", "tau_p", "tau_c", "sigma2_ap_db",
                    "sigma2_ue_db", "instants"});
        cfg.validation.tol_rel = get_positive(f, "tol_rel", cfg.validation.tol_rel, "validate");
        cfg.validation.n_ap = get_count(f, "n_ap", cfg.validation.n_ap, "validate");
        cfg.validation.n_ue = get_count(f, "n_ue", cfg.validation.n_ue, "validate");
        cfg.validation.n_antennas =
            get_count(f, "n_antennas", cfg.validation.n_antennas, "validate");
        cfg.validation.tau_p = get_count(f, "tau_p", cfg.validation.tau_p, "validate");
        cfg.validation.tau_c = get_count(f, "tau_c", cfg.validation.tau_c, "validate");
        cfg.validation.sigma2_ap_db = get_or(f, "sigma2_ap_db", cfg.validation.sigma2_ap_db);
        cfg.validation.sigma2_ue_db = get_or(f, "sigma2_ue_db", cfg.validation.sigma2_ue_db);
        cfg.validation.instants = parse_instants(f, "instants", "validate");
        if (cfg.validation.tau_p >= cfg.validation.tau_c)
            throw std::invalid_argument("config: validate.tau_p must be smaller than tau_c");
    }

    cfg.scene.validate();
    cfg.phase.validate();
    cfg.resolved_json = render_config(cfg);
    return cfg;
}

ExperimentConfig load_config_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string render_config(const ExperimentConfig &cfg) { return resolve(cfg).dump(2); }

} // namespace cfmimo
