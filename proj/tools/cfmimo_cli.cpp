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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfmimo/common.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/experiment.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::uint64_t trials = 0; // 0: keep configured value
    std::uint64_t scenes = 0;
    std::string corrupt;
};

void add_common_options(CLI::App *sub, CliOptions &opt)
{
    sub->add_option("--config", opt.config_path, "JSON configuration file");
    sub->add_option("--seed", opt.seed, "master seed for all substreams");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--trials", opt.trials, "Monte Carlo trials per estimate");
    sub->add_option("--scenes", opt.scenes, "number of random layouts to average");
}

cfmimo::ExperimentConfig resolve_options(const CliOptions &opt)
{
    cfmimo::ExperimentConfig cfg = opt.config_path.empty()
                                       ? cfmimo::default_config()
                                       : cfmimo::load_config_file(opt.config_path);
    if (opt.trials > 0)
    {
        cfg.mc_trials = static_cast<std::size_t>(opt.trials);
        cfg.fig2.mc_trials = static_cast<std::size_t>(opt.trials);
    }
    if (opt.scenes > 0)
        cfg.num_scenes = static_cast<std::size_t>(opt.scenes);
    if (!opt.out_dir.empty())
        cfg.out_dir = opt.out_dir;
    // Re-render so the metadata embeds the configuration as overridden.
    cfg.resolved_json = cfmimo::render_config(cfg);
    return cfg;
}

int run_figure(const CliOptions &opt,
               cfmimo::FigureData (*runner)(const cfmimo::ExperimentConfig &, std::uint64_t))
{
    cfmimo::ExperimentConfig cfg = resolve_options(opt);
    cfmimo::FigureData data = runner(cfg, opt.seed);
    cfmimo::write_figure_data(data, cfg.out_dir);
    std::cout << data.name << ": " << data.rows.size() << " rows -> " << cfg.out_dir << "/"
              << data.name << ".csv\n";
    return 0;
}

int run_validate(const CliOptions &opt)
{
    cfmimo::ExperimentConfig cfg = resolve_options(opt);
    cfmimo::ValidationRun run = cfmimo::run_validation(cfg, opt.seed, opt.corrupt);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path report_path =
        std::filesystem::path(cfg.out_dir) / "validate.json";
    std::ofstream out(report_path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + report_path.string());
    out << run.json << "\n";

    for (const auto &report : run.reports)
    {
        double max_rel = 0.0;
        for (const auto &e : report.entries)
            max_rel = std::max(max_rel, e.rel_err);
        const std::string &label = report.entries.empty() ? "?" : report.entries.front().mode;
        std::cout << label << ": "
                  << (report.pass ? "pass" : (report.inconclusive ? "inconclusive" : "fail"))
                  << " (entries " << report.entries.size() << ", max rel err "
                  << cfmimo::format_double(max_rel) << ", trials " << report.trials << ")\n";
    }
    std::cout << "report: " << report_path.string() << "\n";
    std::cout << "overall: "
              << (run.exit_code == 0 ? "pass" : (run.exit_code == 3 ? "inconclusive" : "fail"))
              << "\n";
    return run.exit_code;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cell-free massive MIMO downlink spectral-efficiency experiments"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App *fig1 = app.add_subcommand("fig1", "estimation-error sweep over phase variance");
    CLI::App *fig2 = app.add_subcommand("fig2", "per-UE spectral-efficiency CDF");
    CLI::App *fig3 = app.add_subcommand("fig3", "sum spectral efficiency vs phase variance");
    CLI::App *fig4 = app.add_subcommand("fig4", "sum spectral efficiency on the AP/UE variance grid");
    CLI::App *val = app.add_subcommand("validate", "closed form vs simulation on the desk scenario");
    for (CLI::App *sub : {fig1, fig2, fig3, fig4, val})
        add_common_options(sub, opt);
    val->add_option("--corrupt", opt.corrupt, "test hook: skew a closed-form term")->group("");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try
    {
        if (fig1->parsed())
            return run_figure(opt, cfmimo::run_nmse_sweep);
        if (fig2->parsed())
            return run_figure(opt, cfmimo::run_se_cdf);
        if (fig3->parsed())
            return run_figure(opt, cfmimo::run_sum_se_sweep);
        if (fig4->parsed())
            return run_figure(opt, cfmimo::run_phase_grid);
        return run_validate(opt);
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
