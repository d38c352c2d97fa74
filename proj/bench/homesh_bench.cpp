// Serial reference versus OpenMP path for the per-element kernels.
//
//   ./homesh_bench --benchmark_filter=Validity

#include <benchmark/benchmark.h>

#include <sstream>

#include "homesh/blsplit.hpp"
#include "homesh/builtin.hpp"
#include "homesh/condition.hpp"
#include "homesh/hogen.hpp"
#include "homesh/io.hpp"
#include "homesh/refelem.hpp"

using namespace homesh;

namespace {

const BuiltinGeometry& wingtip() {
  static const BuiltinGeometry g = builtinGeometry("wingtip-box");
  return g;
}

const Mesh& wingtipP4() {
  static const Mesh m = upgradeMesh(wingtip().mesh, wingtip().registry, 4).mesh;
  return m;
}

const Mesh& wingtipSplit() {
  static const Mesh m = splitMesh(wingtipP4(), spacing(10, 1.5), wingtip().wallPatches).mesh;
  return m;
}

Execution mode(const benchmark::State& s) { return s.range(0) ? Execution::Parallel : Execution::Serial; }

void label(benchmark::State& s, std::size_t items) {
  s.SetLabel(s.range(0) ? "parallel" : "serial");
  s.SetItemsProcessed(static_cast<std::int64_t>(s.iterations() * items));
}

void BM_Validity(benchmark::State& s) {
  const auto& m = wingtipSplit();
  for (auto _ : s) benchmark::DoNotOptimize(checkMeshValidity(m, mode(s)));
  label(s, m.elements.size());
}

void BM_Split(benchmark::State& s) {
  const auto& m = wingtipP4();
  for (auto _ : s) benchmark::DoNotOptimize(splitMesh(m, spacing(10, 1.5), wingtip().wallPatches, mode(s)));
  label(s, m.elements.size());
}

void BM_Upgrade(benchmark::State& s) {
  const auto& g = wingtip();
  for (auto _ : s) benchmark::DoNotOptimize(upgradeMesh(g.mesh, g.registry, 4, {}, mode(s)));
  label(s, g.mesh.elements.size());
}

void BM_AspectRatio(benchmark::State& s) {
  const auto& m = wingtipSplit();
  for (auto _ : s) benchmark::DoNotOptimize(aspectRatioReport(m, mode(s)));
  label(s, m.elements.size());
}

void BM_Periodicity(benchmark::State& s) {
  static const BuiltinGeometry g = builtinGeometry("rotor-wedge");
  static const Mesh m = splitMesh(upgradeMesh(g.mesh, g.registry, 4).mesh, spacing(10, 1.5), g.wallPatches).mesh;
  const auto& p = *g.periodic;
  for (auto _ : s) benchmark::DoNotOptimize(checkPeriodicity(m, p.patchA, p.patchB, p.map, 1e-10, mode(s)));
  label(s, m.patch(p.patchA).size());
}

void BM_ExportVTK(benchmark::State& s) {
  const auto& m = wingtipP4();
  for (auto _ : s) {
    std::ostringstream out;
    benchmark::DoNotOptimize(exportVTK(m, out, 2, mode(s)));
  }
  label(s, m.elements.size());
}

}  // namespace

BENCHMARK(BM_Validity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Split)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Upgrade)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_AspectRatio)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Periodicity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExportVTK)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
