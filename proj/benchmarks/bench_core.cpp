#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "uceval/attacks.hpp"
#include "uceval/grading.hpp"
#include "uceval/model_client.hpp"
#include "uceval/stats.hpp"

using namespace uceval;

static void bm_wilson_interval(benchmark::State& state) {
    int k = 34, n = 67;
    for (auto _ : state) {
        auto ci = wilson_interval(k, n);
        benchmark::DoNotOptimize(ci);
    }
}
BENCHMARK(bm_wilson_interval);

static void bm_fisher_exact(benchmark::State& state) {
    for (auto _ : state) {
        auto r = fisher_exact(34, 33, 23, 156);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_fisher_exact);

static void bm_parse_judge_reply(benchmark::State& state) {
    const std::vector<char> letters = {'A', 'B', 'C', 'D'};
    const std::string reply = "The model settles on option (C).";
    for (auto _ : state) {
        auto v = parse_judge_reply(reply, letters);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_parse_judge_reply);

static void bm_shuffled_attack_order(benchmark::State& state) {
    uint64_t i = 0;
    for (auto _ : state) {
        auto order = shuffled_attack_order("q-bench-" + std::to_string(i++ % 512), 42);
        benchmark::DoNotOptimize(order);
    }
}
BENCHMARK(bm_shuffled_attack_order);

static void bm_extract_think_surface(benchmark::State& state) {
    std::string raw = "<think>" + std::string(2000, 'r') + "</think>The answer is B.";
    for (auto _ : state) {
        auto split = extract_reasoning_surface(raw, Surface::think_toggle_on);
        benchmark::DoNotOptimize(split);
    }
}
BENCHMARK(bm_extract_think_surface);

static void bm_extract_channel_surface(benchmark::State& state) {
    std::string raw = std::string(ChannelMarkers::analysis_start) +
                      std::string(2000, 'r') + ChannelMarkers::segment_end +
                      ChannelMarkers::final_start + "The answer is B." +
                      ChannelMarkers::segment_end;
    for (auto _ : state) {
        auto split = extract_reasoning_surface(raw, Surface::reasoning_channel);
        benchmark::DoNotOptimize(split);
    }
}
BENCHMARK(bm_extract_channel_surface);

BENCHMARK_MAIN();
