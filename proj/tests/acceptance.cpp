// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance --only 3   a single criterion
//
// Exit status is 0 when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "helpers.hpp"
#include "homesh/blsplit.hpp"
#include "homesh/builtin.hpp"
#include "homesh/condition.hpp"
#include "homesh/hogen.hpp"
#include "homesh/io.hpp"

using namespace homesh;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. wingtip pipeline census and runtime
Outcome countLawNaca() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = builtinGeometry("wingtip-box");
  const auto macro = countByKind(g.mesh);
  const auto up = upgradeMesh(g.mesh, g.registry, 4);
  const auto split = splitMesh(up.mesh, spacing(10, 1.5), g.wallPatches);
  const double t = seconds(t0);
  const auto c = countByKind(split.mesh);
  const bool ok = macro.count(ElementKind::Prism) == 1224 && macro.count(ElementKind::Hexahedron) == 25 &&
                  c.count(ElementKind::Prism) == 12240 && c.count(ElementKind::Hexahedron) == 2500 && t < 60.0;
  return {ok, fmt("macro %zu prisms / %zu hexes -> %zu prisms / %zu hexes in %.1f s (need 1224/25 -> 12240/2500, < 60 s)",
                  macro.count(ElementKind::Prism), macro.count(ElementKind::Hexahedron), c.count(ElementKind::Prism),
                  c.count(ElementKind::Hexahedron), t)};
}

// 2. CRM census
Outcome countLawCrm() {
  const auto g = builtinGeometry("crm-census");
  const auto macro = countByKind(g.mesh);
  const auto c = countByKind(splitMesh(g.mesh, spacing(10, 1.5), g.wallPatches).mesh);
  const bool ok = macro.count(ElementKind::Prism) == 2042 && macro.count(ElementKind::Hexahedron) == 33 &&
                  c.count(ElementKind::Prism) == 20420 && c.count(ElementKind::Hexahedron) == 3300;
  return {ok, fmt("macro %zu prisms / %zu hexes -> %zu prisms / %zu hexes (need 2042/33 -> 20420/3300)",
                  macro.count(ElementKind::Prism), macro.count(ElementKind::Hexahedron), c.count(ElementKind::Prism),
                  c.count(ElementKind::Hexahedron))};
}

// Prism over the reference triangle scaled to [0,1]^2 (or an equilateral
// base with the given edge), height h, nodes of order P.
ElementMapping unitPrism(int order, double h, double edge = 0.0) {
  const auto& ref = refElement(ElementKind::Prism, order);
  std::vector<Vec3> x;
  for (const auto& xi : ref.nodes()) {
    Vec3 p(0.5 * (xi.x() + 1.0), 0.5 * (xi.y() + 1.0), 0.5 * h * (xi.z() + 1.0));
    if (edge > 0.0) p = Vec3(edge * (p.x() + 0.5 * p.y()), edge * std::sqrt(3.0) / 2.0 * p.y(), p.z());
    x.push_back(p);
  }
  return ElementMapping(ref, x);
}

// 3. first-layer height and growth ratio
Outcome firstLayerHeight() {
  const int n = 10;
  const double r = 1.5;
  const std::vector<SplitAxis> axes{{2, -1, 0}};
  const auto subs = splitElement(unitPrism(2, 1.0), axes, spacing(n, r));
  std::vector<double> h;
  for (const auto& s : subs) {
    double lo = 1e300, hi = -1e300;
    for (const auto& x : s.physNodes()) {
      lo = std::min(lo, x.z());
      hi = std::max(hi, x.z());
    }
    h.push_back(hi - lo);
  }
  double series = 0.0, term = 1.0;
  for (int k = 0; k < n; ++k, term *= r) series += term;
  const double closed = (r - 1.0) / (std::pow(r, n) - 1.0);
  const double err = std::max(std::abs(h[0] - 1.0 / series), std::abs(h[0] - closed));
  double ratioErr = 0.0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) ratioErr = std::max(ratioErr, std::abs(h[k + 1] / h[k] - r));
  const bool ok = static_cast<int>(h.size()) == n && err <= 1e-12 && ratioErr <= 1e-12;
  return {ok, fmt("h1 = %.15e, |h1 - series| = %.1e, max |h(k+1)/h(k) - r| = %.1e (tol 1e-12)", h[0], err, ratioErr)};
}

// 4. validity preservation over random curved macros
Outcome validityPreservation() {
  std::mt19937_64 rng(20240602);
  std::uniform_real_distribution<double> amp(0.0, 0.15);
  const auto s = spacing(5, 2.0);
  int macros = 0, subs = 0, failures = 0;
  while (macros < 1000) {
    const ElementKind k = macros % 2 ? ElementKind::Prism : ElementKind::Hexahedron;
    const int p = 1 + (macros / 2) % 4;
    auto x = testing::mappedNodes(k, p, testing::randomAffine(rng));
    std::normal_distribution<double> noise(0.0, amp(rng));
    for (auto& v : x) v += Vec3(noise(rng), noise(rng), noise(rng));
    const ElementMapping macro(refElement(k, p), x);
    if (!checkValidity(macro).valid) continue;
    std::vector<SplitAxis> axes;
    if (k == ElementKind::Prism) {
      axes.push_back(macros % 4 == 1 ? SplitAxis{2, -1, 0} : SplitAxis{2, +1, 1});
    } else {
      axes.push_back({0, -1, 5});
      if (macros % 4 == 2) axes.push_back({2, +1, 1});
    }
    for (const auto& sub : splitElement(macro, axes, s)) {
      ++subs;
      failures += !checkValidity(sub).valid;
    }
    ++macros;
  }
  return {failures == 0, fmt("%d macros, %d sub-elements, %d fail checkValidity (need 0)", macros, subs, failures)};
}

CadCurve curveOf(CurveShape shape, double lo, double hi) {
  CadCurve c;
  c.id = 1;
  c.shape = std::move(shape);
  c.tLo = lo;
  c.tHi = hi;
  return c;
}

CadSurface surfaceOf(SurfaceShape shape, double ulo, double uhi, double vlo, double vhi) {
  CadSurface s;
  s.id = 1;
  s.shape = std::move(shape);
  s.uLo = ulo;
  s.uHi = uhi;
  s.vLo = vlo;
  s.vHi = vhi;
  return s;
}

double gradientError(const SpringSystem& sys, const Eigen::VectorXd& p) {
  const Eigen::VectorXd g = sys.gradient(p);
  const Eigen::VectorXd lo = sys.lower(), hi = sys.upper();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, hi[i] - lo[i]);
    Eigen::VectorXd a = p, b = p;
    a[i] = std::min(p[i] + h, hi[i]);
    b[i] = std::max(p[i] - h, lo[i]);
    const double fd = (sys.energy(a) - sys.energy(b)) / (a[i] - b[i]);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

// 5. spring-energy gradients against central differences
Outcome gradients() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::vector<CadCurve> curves{
      curveOf(LineCurve{Vec3(0, 0, 0), Vec3(1.5, -0.5, 2)}, 0.0, 1.0),
      curveOf(ArcCurve{Vec3(0.1, 0.2, 0.3), 1.7}, -1.0, 2.0),
      curveOf(BSplineCurve{3, {0, 0, 0, 0, 0.4, 1, 1, 1, 1},
                           {Vec3(0, 0, 0), Vec3(1, 2, 0), Vec3(2, -1, 1), Vec3(3, 0, 2), Vec3(4, 1, 0)}},
              0.0, 1.0)};
  const std::vector<CadSurface> surfaces{
      surfaceOf(CylinderSurface{Vec3::Zero(), 1.3}, -pi, pi, -5.0, 5.0),
      surfaceOf(SphereSurface{Vec3::Zero(), 2.0}, -pi, pi, 0.2, pi - 0.2),
      surfaceOf(BSplinePatch{2, 2, {0, 0, 0, 1, 1, 1}, {0, 0, 0, 1, 1, 1}, 3, 3,
                             {Vec3(0, 0, 0), Vec3(1, 0, 0.5), Vec3(2, 0, 0), Vec3(0, 1, 0.3), Vec3(1, 1, 1.5),
                              Vec3(2, 1, 0.2), Vec3(0, 2, 0), Vec3(1, 2, -0.4), Vec3(2, 2, 0)}},
                0, 1, 0, 1)};
  auto network = [&](SpringSystem& sys, const std::function<std::pair<double, double>()>& param) {
    const int nFree = 1 + static_cast<int>(u01(rng) * 5);
    std::vector<int> ids{sys.addFixed(Vec3(u01(rng), u01(rng), u01(rng)))};
    for (int i = 0; i < nFree; ++i) {
      const auto [a, b] = param();
      ids.push_back(sys.addFree(a, b));
    }
    ids.push_back(sys.addFixed(Vec3(u01(rng), u01(rng), u01(rng))));
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) sys.addSpring(ids[i], ids[i + 1], 0.05 + u01(rng));
    for (int k = 0; k < 3; ++k) {
      const int a = static_cast<int>(u01(rng) * ids.size()), b = static_cast<int>(u01(rng) * ids.size());
      if (a != b) sys.addSpring(ids[a], ids[b], 0.05 + u01(rng));
    }
  };
  int configs = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    for (const auto& c : curves) {
      SpringSystem sys(c);
      network(sys, [&] { return std::pair{c.tLo + (0.02 + 0.96 * u01(rng)) * (c.tHi - c.tLo), 0.0}; });
      worst = std::max(worst, gradientError(sys, sys.parameters()));
      ++configs;
    }
    for (const auto& s : surfaces) {
      SpringSystem sys(s);
      network(sys, [&] {
        return std::pair{s.uLo + (0.02 + 0.96 * u01(rng)) * (s.uHi - s.uLo),
                         s.vLo + (0.02 + 0.96 * u01(rng)) * (s.vHi - s.vLo)};
      });
      worst = std::max(worst, gradientError(sys, sys.parameters()));
      ++configs;
    }
  }
  return {configs >= 300 && worst <= 1e-6,
          fmt("%d configurations (line, arc, B-spline curve, cylinder, sphere, B-spline patch), worst rel. err %.2e "
              "(tol 1e-6)",
              configs, worst)};
}

// 6. P = 6 cylinder edge against the helix
Outcome geodesic() {
  const double radius = 1.0;
  const auto s = surfaceOf(CylinderSurface{Vec3::Zero(), radius}, -pi, pi, -5.0, 5.0);
  const auto r = optimizeSurfaceEdgeNodes(s, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(pi / 2, 1.0), 6, {});
  const Eigen::Vector2d dir = Eigen::Vector2d(radius * pi / 2, 1.0).normalized();
  double worst = 0.0;
  for (int i = 1; i < 6; ++i) {
    const Eigen::Vector2d q(radius * r.uv[i][0], r.uv[i][1]);
    worst = std::max(worst, std::abs(q[0] * dir[1] - q[1] * dir[0]));
  }
  const bool converged = r.opt.status == OptStatus::Converged;
  return {converged && worst <= 1e-3 * radius,
          fmt("max distance from the helix %.4e R (tol 1e-3 R), optimizer %s", worst / radius,
              converged ? "converged" : "did not converge")};
}

// Exhaustive minimum of sum |d - target| over d in [1, dmax]^G; partial
// assignments are cut when a fully assigned constraint fails or the partial
// objective already reaches the best value.
struct Enumerator {
  const DivisionProblem& p;
  int dmax;
  std::vector<int> d;
  double best = std::numeric_limits<double>::infinity();

  bool consistent(std::size_t assigned) const {
    for (const auto& c : p.constraints) {
      long long sum = 0;
      bool ready = true;
      for (int x : c.sideA) ready = ready && static_cast<std::size_t>(x) < assigned;
      for (int x : c.sideB) ready = ready && static_cast<std::size_t>(x) < assigned;
      if (!ready) continue;
      for (int x : c.sideA) sum += d[x];
      for (int x : c.sideB) sum -= d[x];
      if (sum != 0) return false;
    }
    return true;
  }

  void run(std::size_t g, double partial) {
    if (partial >= best) return;
    if (g == p.groups()) {
      best = partial;
      return;
    }
    for (int v = 1; v <= dmax; ++v) {
      d[g] = v;
      if (consistent(g + 1)) run(g + 1, partial + std::abs(v - p.targets[g]));
    }
  }
};

double enumerate(const DivisionProblem& p, int dmax) {
  Enumerator e{p, dmax, std::vector<int>(p.groups(), 0)};
  e.run(0, 0.0);
  return e.best;
}

// 7. branch and bound against enumeration
Outcome balancing() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> target(1.0, 12.0);
  int feasible = 0, infeasible = 0, mismatches = 0, violated = 0;
  for (int inst = 0; feasible < 200; ++inst) {
    DivisionProblem p;
    p.maxDivisions = 12;
    const int groups = 2 + inst % 7;
    for (int j = 0; j < groups; ++j) p.targets.push_back(target(rng));
    std::uniform_int_distribution<int> pick(0, groups - 1);
    const int nc = 1 + static_cast<int>(rng() % 4);
    for (int c = 0; c < nc; ++c) {
      DivisionConstraint k;
      k.sideA.push_back(pick(rng));
      if (rng() % 3 == 0) k.sideA.push_back(pick(rng));
      k.sideB.push_back(pick(rng));
      if (rng() % 4 == 0) k.sideB.push_back(pick(rng));
      p.constraints.push_back(k);
    }
    const double oracle = enumerate(p, 12);
    if (std::isinf(oracle)) {
      try {
        balanceDivisions(p);
        ++mismatches;
      } catch (const InfeasibleError&) {
      }
      ++infeasible;
      continue;
    }
    ++feasible;
    const auto b = balanceDivisions(p);
    if (std::abs(b.objective - oracle) > 1e-9) ++mismatches;
    for (const auto& c : p.constraints) {
      long long sum = 0;
      for (int x : c.sideA) sum += b.divisions[x];
      for (int x : c.sideB) sum -= b.divisions[x];
      violated += sum != 0;
    }
  }
  return {mismatches == 0 && violated == 0,
          fmt("%d feasible + %d infeasible instances (<= 8 groups, divisions <= 12): %d objective mismatches, %d "
              "violated equalities",
              feasible, infeasible, mismatches, violated)};
}

// 8. rotor wedge periodicity before and after the pipeline
Outcome periodicity() {
  const auto g = builtinGeometry("rotor-wedge");
  const auto& p = *g.periodic;
  const auto before = checkPeriodicity(g.mesh, p.patchA, p.patchB, p.map, 1e-10);
  const auto up = upgradeMesh(g.mesh, g.registry, 4);
  const auto split = splitMesh(up.mesh, spacing(10, 1.5), g.wallPatches);
  const auto after = checkPeriodicity(split.mesh, p.patchA, p.patchB, p.map, 1e-10);
  const bool ok = before.matched && after.matched && before.maxResidual <= 1e-10 && after.maxResidual <= 1e-10;
  return {ok, fmt("macro: %zu pairs, residual %.2e; after P=4 + 10 layers: %zu pairs, residual %.2e (tol 1e-10)",
                  before.pairs.size(), before.maxResidual, after.pairs.size(), after.maxResidual)};
}

// 9. write, read, write on every built-in
Outcome roundTrip() {
  const auto dir = std::filesystem::temp_directory_path() / "homesh_acceptance";
  std::filesystem::create_directories(dir);
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  int identical = 0, total = 0;
  std::string bad;
  for (const auto& name : builtinNames()) {
    ++total;
    const std::string a = (dir / (name + ".a.json")).string(), b = (dir / (name + ".b.json")).string();
    writeDocument(documentFrom(builtinGeometry(name)), a);
    writeDocument(readDocument(a), b);
    if (slurp(a) == slurp(b) && !slurp(a).empty())
      ++identical;
    else
      bad += " " + name;
  }
  return {identical == total, fmt("%d of %d built-ins byte-identical%s%s", identical, total, bad.empty() ? "" : ", differ:",
                                  bad.c_str())};
}

// 10. aspect ratio of a constructed prism stack
Outcome aspectSanity() {
  const std::vector<SplitAxis> axes{{2, -1, 0}};
  const auto subs = splitElement(unitPrism(4, 1.0, 0.616), axes, spacing(10, 1.5));
  Mesh m;
  for (const auto& sub : subs) {
    Element e{ElementKind::Prism, 4, {}, Region::NearField, {}};
    for (const auto& x : sub.physNodes()) e.nodes.push_back(m.addNode(x));
    e.faceCadTags.assign(5, std::nullopt);
    m.elements.push_back(std::move(e));
  }
  const double max = aspectRatioReport(m).max;
  return {std::abs(max - 70.0) <= 1.0,
          fmt("base edge 0.616, n=10, r=1.5: max aspect ratio %.3f (need 70 +- 1)",
              max)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homesh acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"count law (NACA wingtip)", countLawNaca},
      {"count law (CRM census)", countLawCrm},
      {"first-layer height", firstLayerHeight},
      {"validity preservation", validityPreservation},
      {"gradient correctness", gradients},
      {"geodesic property", geodesic},
      {"balancing optimality", balancing},
      {"periodicity", periodicity},
      {"round-trip I/O", roundTrip},
      {"aspect-ratio sanity", aspectSanity},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %-26s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
