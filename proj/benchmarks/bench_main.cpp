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

#include <benchmark/benchmark.h>

#include "cfmimo/chanest.hpp"
#include "cfmimo/common.hpp"
#include "cfmimo/experiment.hpp"
#include "cfmimo/mcsim.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/sedf.hpp"

namespace {

using namespace cfmimo;

SeScenario paper_scale_scenario(std::size_t L, std::size_t N)
{
    SceneConfig scene;
    scene.L = L;
    scene.K = 20;
    scene.N = N;

    PhaseParams phase;
    phase.sigma2_ap = 1e-3;
    phase.sigma2_ue = 1e-3;

    RngStream rng(1);
    return make_scenario(scene, phase, 10, 200, dbm_to_watt(23.0), dbm_to_watt(-96.0),
                         dbm_to_watt(23.0), dbm_to_watt(-96.0), true, rng);
}

void bm_estimation_stats(benchmark::State &state)
{
    const std::size_t L = static_cast<std::size_t>(state.range(0));
    SeScenario scn = paper_scale_scenario(L, 2);
    PilotPlan plan = assign_pilots(scn.K, 10);
    std::vector<double> powers(scn.K, dbm_to_watt(23.0));
    for (auto _ : state)
    {
        EstimationStats stats = build_estimation_stats(scn.R, scn.L, scn.K, scn.N, plan, powers,
                                                       dbm_to_watt(-96.0), scn.phase);
        benchmark::DoNotOptimize(stats.q.data());
    }
}
BENCHMARK(bm_estimation_stats)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void bm_evaluator_build(benchmark::State &state)
{
    const std::size_t L = static_cast<std::size_t>(state.range(0));
    SeScenario scn = paper_scale_scenario(L, 2);
    for (auto _ : state)
    {
        SinrEvaluator eval(scn);
        benchmark::DoNotOptimize(eval.mu().data());
    }
}
BENCHMARK(bm_evaluator_build)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void bm_block_evaluation(benchmark::State &state)
{
    SeScenario scn = paper_scale_scenario(100, 2);
    for (auto _ : state)
    {
        SeResult r = evaluate_se(scn, TxMode::Coherent, Precoder::DelayUsed);
        benchmark::DoNotOptimize(r.se.data());
    }
}
BENCHMARK(bm_block_evaluation)->Unit(benchmark::kMillisecond);

void bm_mc_trials(benchmark::State &state)
{
    SeScenario scn = paper_scale_scenario(10, 2);
    McConfig cfg;
    cfg.trials = static_cast<std::size_t>(state.range(0));
    cfg.seed = 7;
    for (auto _ : state)
    {
        McSamples samples = run_trials(scn, cfg);
        benchmark::DoNotOptimize(samples.co_sum.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_mc_trials)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void bm_scene_generation(benchmark::State &state)
{
    SceneConfig cfg;
    cfg.L = 100;
    cfg.K = 20;
    cfg.N = 2;
    cfg.correlation.kind = CorrelationKind::LocalScattering;
    cfg.correlation.angular_std_rad = 10.0 * arma::datum::pi / 180.0;
    std::uint64_t seed = 0;
    for (auto _ : state)
    {
        RngStream rng(++seed);
        NetworkScene scene = generate_scene(cfg, rng);
        benchmark::DoNotOptimize(scene.R.data());
    }
}
BENCHMARK(bm_scene_generation)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
