#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "membrane/analytic_fields.hpp"
#include "membrane/metrics.hpp"
#include "membrane/nullforms.hpp"

namespace {

using namespace membrane;

std::vector<SpacetimePoint> sample_points(int n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SpacetimePoint> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = 3.0 + 27.0 * unit(rng);
        const double r = 0.9 * (t - 1.0) * unit(rng);
        const double th = 6.283185307179586 * unit(rng);
        pts.push_back(SpacetimePoint::cartesian(t, r * std::cos(th), r * std::sin(th)));
    }
    return pts;
}

MetricConfig perturbed_config() {
    MetricConfig cfg;
    cfg.kind = MetricKind::PerturbedAnalytic;
    cfg.delta = 1e-3;
    cfg.gamma_decay = 0.5;
    cfg.shape = PerturbationShape::ConstantSymmetric;
    cfg.amplitude = SmallMat::zero(3);
    cfg.amplitude(0, 0) = 1.0;
    cfg.amplitude(1, 1) = -0.5;
    cfg.amplitude(2, 2) = 0.5;
    return cfg;
}

void bench_cubic_flat_cartesian(benchmark::State& state) {
    const auto pts = sample_points(256);
    const auto fields = analytic_field_corpus();
    std::vector<CartesianJet> jets;
    for (const auto& p : pts) jets.push_back(fields[0]->jet_to_order(p, 2));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cubic_flat_cartesian(jets[i % jets.size()]));
        ++i;
    }
}
BENCHMARK(bench_cubic_flat_cartesian);

void bench_cubic_flat_frame(benchmark::State& state) {
    const auto pts = sample_points(256);
    const auto fields = analytic_field_corpus();
    std::vector<DerivativeBundle> bundles;
    for (const auto& p : pts)
        bundles.push_back(DerivativeBundle::from_cartesian(fields[0]->jet_to_order(p, 2), p));
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& b = bundles[i % bundles.size()];
        benchmark::DoNotOptimize(cubic_flat_frame(b, pts[i % pts.size()]));
        ++i;
    }
}
BENCHMARK(bench_cubic_flat_frame);

void bench_sample_metric_perturbed(benchmark::State& state) {
    const auto cfg = perturbed_config();
    const auto pts = sample_points(256);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_metric(cfg, pts[i % pts.size()]));
        ++i;
    }
}
BENCHMARK(bench_sample_metric_perturbed);

void bench_coefficient_tensors(benchmark::State& state) {
    const auto cfg = perturbed_config();
    const auto pts = sample_points(64);
    std::vector<MetricSample> samples;
    for (const auto& p : pts) samples.push_back(sample_metric(cfg, p));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(coefficient_tensors(samples[i % samples.size()]));
        ++i;
    }
}
BENCHMARK(bench_coefficient_tensors);

}  // namespace

BENCHMARK_MAIN();
