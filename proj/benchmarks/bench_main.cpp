#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "parawave/kinetic.hpp"
#include "parawave/medium.hpp"
#include "parawave/psolver.hpp"
#include "parawave/regime.hpp"
#include "parawave/rng.hpp"
#include "parawave/wigner.hpp"

using namespace parawave;

namespace {

const ScalingRegime& t1() {
    static const auto r = regime_table(TheoremFamily::T1, 0.2, 1.0, 1.0, 1.0);
    return r;
}

FieldSliceView medium_for(const TransverseGrid& g) {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, g.dim);
    const auto mg = plan_medium_grid(t1(), s, g.dim, g.n[0], g.dx, 1.0);
    return FieldSliceView(std::make_shared<const MediumRealization>(synthesize(s, mg, 7, 0)), t1());
}

}  // namespace

/// One split-step on an N-point 1-d grid through a synthesized medium.
static void BM_SplitStep(benchmark::State& state) {
    const auto g = centered_grid(1, static_cast<int>(state.range(0)), 16.0);
    const auto v = medium_for(g);
    auto w = gaussian_beam(g, t1(), {0.0, 0.0}, 0.5, {0.5, 0.0});
    Propagator prop(g, t1());
    for (auto _ : state) {
        prop.step(w, v, 1e-3);
        if (w.z > 0.9) w.z = 0.0;
        benchmark::DoNotOptimize(w.psi.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SplitStep)->Arg(512)->Arg(2048)->Arg(8192);

static void BM_WignerRow(benchmark::State& state) {
    const auto g = centered_grid(1, static_cast<int>(state.range(0)), 16.0);
    const auto w = gaussian_beam(g, t1(), {0.0, 0.0}, 0.5, {0.5, 0.0});
    WignerRows rows(g, t1().s_w);
    std::vector<double> out(g.size());
    std::size_t j = 0;
    for (auto _ : state) {
        rows.row(w.psi, j, out);
        j = (j + 1) % g.size();
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_WignerRow)->Arg(256)->Arg(1024);

static void BM_KernelJump(benchmark::State& state) {
    const auto kind = static_cast<KernelKind>(state.range(0));
    const int dim = kind == KernelKind::Rad2 || kind == KernelKind::Rad ? 2 : 1;
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, dim);
    Philox4x32 rng(3, 0);
    const std::vector<double> p{0.6, 0.3};
    for (auto _ : state) benchmark::DoNotOptimize(sample_jump(std::span(p.data(), dim), kind, s, 1.0, rng));
}
BENCHMARK(BM_KernelJump)
    ->Arg(static_cast<int>(KernelKind::Rad2))
    ->Arg(static_cast<int>(KernelKind::Rad))
    ->Arg(static_cast<int>(KernelKind::T3i))
    ->Arg(static_cast<int>(KernelKind::T3iii));

static void BM_Synthesize(benchmark::State& state) {
    const auto g = centered_grid(1, static_cast<int>(state.range(0)), 16.0);
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 1);
    const auto mg = plan_medium_grid(t1(), s, 1, g.n[0], g.dx, 1.0);
    std::uint64_t r = 0;
    for (auto _ : state) {
        auto med = synthesize(s, mg, 11, r++);
        benchmark::DoNotOptimize(med.values.data());
    }
}
BENCHMARK(BM_Synthesize)->Arg(256)->Arg(1024);
BENCHMARK_MAIN();
