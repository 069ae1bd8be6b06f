// Hot paths: mesh + assembly, one forward sweep, dual norms, boundary identities.

#include "navtrace/dynamics.hpp"
#include "navtrace/elliptic.hpp"
#include "navtrace/harness.hpp"

#include <benchmark/benchmark.h>

using namespace navtrace;

namespace {

spaces::LameParameters kLame{1.0, 1.0};

void BM_Assemble(benchmark::State& st) {
    const int level = static_cast<int>(st.range(0));
    for (auto _ : st) {
        const auto mesh = geometry::build_mesh({2, 1.0, 2.0, level});
        const spaces::FeSpace V(mesh, 2);
        benchmark::DoNotOptimize(spaces::assemble_forms(V, kLame));
    }
}
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_ForwardSolve(benchmark::State& st) {
    const int level = static_cast<int>(st.range(0));
    const auto mesh = geometry::build_mesh({2, 1.0, 2.0, level});
    const spaces::FeSpace V(mesh, 2);
    const auto forms = spaces::assemble_forms(V, kLame);
    const dynamics::ElastodynamicsSolver S(V, forms, {1.0, 64});
    dynamics::ProblemData d;
    d.compatible = false;
    d.u0 = [](const Vec3& x) { return Vec3((x.norm() - 1.0) * x(1), 0, 0); };
    for (auto _ : st) benchmark::DoNotOptimize(S.solve_forward(d));
    st.SetItemsProcessed(st.iterations() * 64);
}
BENCHMARK(BM_ForwardSolve)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_DualNorm(benchmark::State& st) {
    const auto mesh = geometry::build_mesh({2, 1.0, 2.0, 1});
    const spaces::FeSpace V(mesh, 2);
    const auto forms = spaces::assemble_forms(V, kLame);
    const elliptic::RieszMap R(forms.gram);
    const Vector f = Vector::Ones(R.size());
    for (auto _ : st) benchmark::DoNotOptimize(R.dual_norm(f));
}
BENCHMARK(BM_DualNorm)->Unit(benchmark::kMicrosecond);

void BM_BoundaryIdentities(benchmark::State& st) {
    auto cfg = harness::Config::defaults();
    cfg.workers = 1;
    const auto spec = harness::make_spec(cfg, harness::TheoremId::AppA);
    for (auto _ : st) benchmark::DoNotOptimize(harness::run_AppA(spec));
}
BENCHMARK(BM_BoundaryIdentities)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
