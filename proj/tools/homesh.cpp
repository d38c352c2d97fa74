// homesh: command-line front end. Every stage reads a native JSON document
// (stdin by default) and writes one (stdout by default), so stages pipe:
//
//   homesh geom wingtip-box | homesh hogen --order 4 |
//     homesh blsplit --layers 10 --ratio 1.5 | homesh stats
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 numerical.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "homesh/blsplit.hpp"
#include "homesh/builtin.hpp"
#include "homesh/condition.hpp"
#include "homesh/hogen.hpp"
#include "homesh/io.hpp"
#include "homesh/refelem.hpp"
#include "json.hpp"

using namespace homesh;

namespace {

struct Globals {
  bool verbose = false;
  std::uint64_t seed = 1;
  int threads = 0;
};

Globals g;

void note(const std::string& msg) {
  if (g.verbose) std::cerr << "homesh: " << msg << '\n';
}

class Timer {
 public:
  explicit Timer(std::string what) : what_(std::move(what)), t0_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, " %.3f s", s);
    note(what_ + buf);
  }

 private:
  std::string what_;
  std::chrono::steady_clock::time_point t0_;
};

NativeDocument load(const std::string& path) {
  Timer t("read " + path);
  if (path != "-") return readDocument(path);
  std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  if (std::cin.bad()) throw IoError("<stdin>: read failed");
  return parseDocument(text, "<stdin>");
}

void store(const NativeDocument& doc, const std::string& path) {
  Timer t("write " + path);
  if (path != "-") {
    writeDocument(doc, path);
    return;
  }
  std::cout << toCanonicalJson(doc);
  std::cout.flush();
  if (!std::cout) throw IoError("<stdout>: write failed");
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Vec3 parseVec(const std::string& s, const char* what) {
  const auto parts = splitList(s);
  if (parts.size() != 3) throw ParameterError(std::string(what) + " needs three comma-separated numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::logic_error&) {
      throw ParameterError(std::string(what) + ": \"" + parts[i] + "\" is not a number");
    }
  }
  return v;
}

std::size_t countInvalid(const std::vector<std::size_t>& bad, const char* stage, bool allow) {
  if (bad.empty()) return 0;
  std::cerr << "homesh: " << stage << ": " << bad.size() << " invalid element(s), first " << bad.front() << '\n';
  if (!allow) throw ValidityError(std::string(stage) + " produced invalid elements");
  return bad.size();
}

// ---------------------------------------------------------------------------

struct IoOpts {
  std::string input = "-";
  std::string output = "-";
};

void addInput(CLI::App* app, IoOpts& io) { app->add_option("-i,--input", io.input, "Input document, - for stdin"); }
void addOutput(CLI::App* app, IoOpts& io) {
  app->add_option("-o,--output", io.output, "Output document, - for stdout");
}

int runGeom(const std::string& name, double shell, const IoOpts& io) {
  BuiltinGeometry geo;
  {
    Timer t("build " + name);
    geo = builtinGeometry(name, {shell});
  }
  const auto c = countByKind(geo.mesh);
  note(name + ": " + std::to_string(c.count(ElementKind::Prism)) + " prisms, " +
       std::to_string(c.count(ElementKind::Hexahedron)) + " hexahedra, " +
       std::to_string(c.count(ElementKind::Tetrahedron)) + " tetrahedra");
  store(documentFrom(geo), io.output);
  return 0;
}

int runBalance(const IoOpts& io) {
  const auto doc = load(io.input);
  if (!doc.divisions) throw LookupError("document has no \"divisions\" problem");
  const auto& p = *doc.divisions;
  try {
    const auto b = balanceDivisions(p);
    nlohmann::ordered_json out;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < p.groups(); ++i)
      groups.push_back({{"name", p.name(static_cast<int>(i))}, {"target", p.targets[i]}, {"divisions", b.divisions[i]}});
    out["groups"] = groups;
    out["objective"] = b.objective;
    out["nodes"] = b.nodes;
    std::cout << out.dump(2) << '\n';
    return 0;
  } catch (const InfeasibleError& e) {
    std::cerr << "homesh: " << e.what() << "; conflicting constraints:";
    for (auto c : e.cycle()) std::cerr << ' ' << c;
    std::cerr << '\n';
    throw;
  }
}

struct PeriodicOpts {
  bool check = false, enforce = false;
  std::optional<double> angle;
  std::string axis, point, patches;
  double tol = 1e-10;
};

int runPeriodic(const PeriodicOpts& o, const IoOpts& io) {
  auto doc = load(io.input);
  PeriodicPair pair;
  if (doc.periodicity) pair = *doc.periodicity;
  if (!o.patches.empty()) {
    const auto names = splitList(o.patches);
    if (names.size() != 2) throw ParameterError("--patches needs two names A,B");
    pair.patchA = names[0];
    pair.patchB = names[1];
  }
  if (pair.patchA.empty()) throw ParameterError("no periodic patches: pass --patches A,B");
  if (!doc.periodicity && !o.angle) throw ParameterError("no periodic map: pass --angle");
  const Vec3 axis = o.axis.empty() ? pair.map.axis : parseVec(o.axis, "--axis");
  const Vec3 point = o.point.empty() ? pair.map.point : parseVec(o.point, "--point");
  pair.map = PeriodicMap::make(point, axis, o.angle.value_or(pair.map.angle));
  doc.mesh.patch(pair.patchA);
  doc.mesh.patch(pair.patchB);

  if (o.enforce) {
    doc.mesh = enforcePeriodicity(doc.mesh, pair.patchA, pair.patchB, pair.map);
    doc.periodicity = pair;
    const auto r = checkPeriodicity(doc.mesh, pair.patchA, pair.patchB, pair.map, o.tol);
    char buf[96];
    std::snprintf(buf, sizeof buf, "enforced: %zu pairs, residual %.3e", r.pairs.size(), r.maxResidual);
    std::cerr << "homesh: " << buf << '\n';
    store(doc, io.output);
    return 0;
  }
  const auto r = checkPeriodicity(doc.mesh, pair.patchA, pair.patchB, pair.map, o.tol);
  std::printf("periodic %s -> %s angle %.17g: %s, %zu pairs, residual %.6e, unmatched %zu/%zu\n", pair.patchA.c_str(),
              pair.patchB.c_str(), pair.map.angle, r.matched ? "matched" : "NOT matched", r.pairs.size(),
              r.maxResidual, r.unmatchedA.size(), r.unmatchedB.size());
  if (!r.matched) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", o.tol);
    throw ValidityError(std::string("periodic patches do not match within ") + buf);
  }
  return 0;
}

int runHogen(int order, bool allowInvalid, const IoOpts& io) {
  auto doc = load(io.input);
  UpgradeResult up;
  {
    Timer t("hogen order " + std::to_string(order));
    up = upgradeMesh(doc.mesh, doc.registry, order);
  }
  const auto& r = up.report;
  note("curve edges " + std::to_string(r.curveEdges) + ", surface edges " + std::to_string(r.surfaceEdges) +
       ", straight edges " + std::to_string(r.straightEdges) + ", CAD faces " + std::to_string(r.cadFaces) +
       ", optimizer warnings " + std::to_string(r.optimizerWarnings));
  countInvalid(r.invalidElements, "hogen", allowInvalid);
  doc.mesh = std::move(up.mesh);
  store(doc, io.output);
  return 0;
}

int runBlsplit(int layers, double ratio, const std::string& walls, bool allowInvalid, const IoOpts& io) {
  auto doc = load(io.input);
  const auto wallList = walls.empty() ? doc.wallPatches : splitList(walls);
  for (const auto& w : wallList) doc.mesh.patch(w);
  SplitResult s;
  {
    Timer t("blsplit");
    s = splitMesh(doc.mesh, spacing(layers, ratio), wallList);
  }
  note("split " + std::to_string(s.splitElements) + " elements, first layer height " +
       std::to_string(spacing(layers, ratio).firstHeight()));
  countInvalid(s.invalidElements, "blsplit", allowInvalid);
  doc.mesh = std::move(s.mesh);
  store(doc, io.output);
  return 0;
}

int runCheck(int probes, const IoOpts& io) {
  const auto doc = load(io.input);
  const auto& m = doc.mesh;
  const auto conf = validateConformity(m);
  const auto validity = checkMeshValidity(m);
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < validity.size(); ++i)
    if (!validity[i].valid) bad.push_back(i);

  // random reference points on top of the sampling lattice
  std::size_t probeFailures = 0;
  if (probes > 0) {
    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
      const auto& e = m.elements[i];
      std::vector<Vec3> pts;
      while (static_cast<int>(pts.size()) < probes) {
        Vec3 xi(u(rng), dimension(e.kind) > 1 ? u(rng) : 0.0, dimension(e.kind) > 2 ? u(rng) : 0.0);
        if (inReferenceDomain(e.kind, xi, 0.0)) pts.push_back(xi);
      }
      if (!checkValidityAt(ElementMapping(m, e), pts).valid) ++probeFailures;
    }
  }

  std::size_t linked = 0, drift = 0;
  const double tol = 1e-8 * boundingDiagonal(m);
  for (const auto& n : m.nodes)
    if (n.cad) {
      ++linked;
      if ((evalLink(doc.registry, *n.cad) - n.x).norm() > tol) ++drift;
    }

  std::printf("elements %zu, nodes %zu\n", m.elements.size(), m.nodes.size());
  std::printf("conformity violations %zu\n", conf.violations.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(conf.violations.size(), 10); ++i)
    std::printf("  %s\n", conf.violations[i].message.c_str());
  std::printf("invalid elements %zu\n", bad.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i)
    std::printf("  element %zu min scaled Jacobian %.6g\n", bad[i], validity[bad[i]].minScaledJacobian);
  if (probes > 0) std::printf("random-probe failures %zu (seed %llu)\n", probeFailures, static_cast<unsigned long long>(g.seed));
  std::printf("CAD-linked nodes %zu, off their entity %zu\n", linked, drift);
  if (!conf.conformal() || !bad.empty() || probeFailures || drift) throw ValidityError("mesh check failed");
  return 0;
}

int runStats(bool json, const IoOpts& io) {
  const auto doc = load(io.input);
  const auto r = statsReport(doc.mesh);
  std::cout << (json ? r.json() : r.table());
  return 0;
}

int runExport(const std::string& vtk, int k, const IoOpts& io) {
  const auto doc = load(io.input);
  Timer t("export " + vtk);
  const auto s = exportVTK(doc.mesh, vtk, k);
  note(std::to_string(s.cells) + " cells, " + std::to_string(s.points) + " points");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homesh: high-order boundary-layer mesh generation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-v,--verbose", g.verbose, "Progress and timings on stderr");
  app.add_option("--seed", g.seed, "Seed for randomized checks");
  app.add_option("--threads", g.threads, "OpenMP threads (default: HOMESH_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  IoOpts io;

  auto* geom = app.add_subcommand("geom", "Emit a built-in geometry and its macro mesh");
  std::string geomName;
  double shell = 0.05;
  geom->add_option("name", geomName, "Built-in geometry name")->required();
  geom->add_option("--shell", shell, "Near-field layer thickness");
  addOutput(geom, io);

  auto* balance = app.add_subcommand("balance", "Solve the document's division balancing problem");
  addInput(balance, io);

  auto* periodic = app.add_subcommand("periodic", "Check or enforce rotational periodicity");
  PeriodicOpts po;
  auto* checkFlag = periodic->add_flag("--check", po.check, "Report the residual");
  auto* enforceFlag = periodic->add_flag("--enforce", po.enforce, "Copy patch A onto patch B");
  checkFlag->excludes(enforceFlag);
  periodic->add_option("--angle", po.angle, "Rotation angle in radians");
  periodic->add_option("--axis", po.axis, "Rotation axis x,y,z");
  periodic->add_option("--point", po.point, "Point on the axis x,y,z");
  periodic->add_option("--patches", po.patches, "Periodic patch pair A,B");
  periodic->add_option("--tol", po.tol, "Matching tolerance")->check(CLI::PositiveNumber);
  addInput(periodic, io);
  addOutput(periodic, io);

  auto* hogen = app.add_subcommand("hogen", "Raise the mesh to order P on the CAD model");
  int order = 4;
  bool allowInvalid = false;
  hogen->add_option("--order", order, "Polynomial order")->required()->check(CLI::Range(1, kMaxOrder));
  hogen->add_flag("--allow-invalid", allowInvalid, "Write the mesh even with invalid elements");
  addInput(hogen, io);
  addOutput(hogen, io);

  auto* blsplit = app.add_subcommand("blsplit", "Split near-wall elements into boundary layers");
  int layers = 10;
  double ratio = 1.5;
  std::string walls;
  blsplit->add_option("--layers", layers, "Number of layers")->required()->check(CLI::Range(1, 1000));
  blsplit->add_option("--ratio", ratio, "Growth ratio")->check(CLI::PositiveNumber);
  blsplit->add_option("--walls", walls, "Wall patches a,b,... (default: the document's walls)");
  blsplit->add_flag("--allow-invalid", allowInvalid, "Write the mesh even with invalid elements");
  addInput(blsplit, io);
  addOutput(blsplit, io);

  auto* check = app.add_subcommand("check", "Conformity, validity and CAD-link checks");
  int probes = 0;
  check->add_option("--probe", probes, "Extra random Jacobian probes per element (uses --seed)")
      ->check(CLI::NonNegativeNumber);
  addInput(check, io);

  auto* stats = app.add_subcommand("stats", "Census and quality statistics");
  bool json = false;
  stats->add_flag("--json", json, "Machine-readable output");
  addInput(stats, io);

  auto* exp = app.add_subcommand("export", "Write a VTK file for visualization");
  std::string vtk;
  int subdiv = 4;
  exp->add_option("--vtk", vtk, "Output .vtk path")->required();
  exp->add_option("--subdiv", subdiv, "Sub-cells per element direction")->check(CLI::PositiveNumber);
  addInput(exp, io);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorClass::Usage);
  }

  try {
    if (g.threads == 0)
      if (const char* env = std::getenv("HOMESH_THREADS")) {
        try {
          g.threads = std::stoi(env);
        } catch (const std::logic_error&) {
          throw ParameterError(std::string("HOMESH_THREADS is not a number: ") + env);
        }
        if (g.threads < 0) throw ParameterError("HOMESH_THREADS must be non-negative");
      }
    if (g.threads > 0) omp_set_num_threads(g.threads);
    note("threads " + std::to_string(g.threads > 0 ? g.threads : omp_get_max_threads()));

    if (*geom) return runGeom(geomName, shell, io);
    if (*balance) return runBalance(io);
    if (*periodic) {
      if (!po.check && !po.enforce) throw ParameterError("periodic needs --check or --enforce");
      return runPeriodic(po, io);
    }
    if (*hogen) return runHogen(order, allowInvalid, io);
    if (*blsplit) return runBlsplit(layers, ratio, walls, allowInvalid, io);
    if (*check) return runCheck(probes, io);
    if (*stats) return runStats(json, io);
    if (*exp) return runExport(vtk, subdiv, io);
  } catch (const Error& e) {
    std::cerr << "homesh: " << e.what() << '\n';
    return static_cast<int>(e.errorClass());
  } catch (const std::bad_alloc&) {
    std::cerr << "homesh: out of memory\n";
    return static_cast<int>(ErrorClass::Numerical);
  } catch (const std::exception& e) {
    std::cerr << "homesh: internal error: " << e.what() << '\n';
    return static_cast<int>(ErrorClass::Numerical);
  }
  return static_cast<int>(ErrorClass::Usage);
}
