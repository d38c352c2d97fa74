#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "homesh/blsplit.hpp"
#include "homesh/builtin.hpp"
#include "homesh/hogen.hpp"
#include "homesh/io.hpp"
#include "json.hpp"

using namespace homesh;
namespace fs = std::filesystem;

namespace {

std::string tempPath(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "homesh_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NativeDocument singleTet() {
  NativeDocument doc;
  doc.mesh = testing::singleElementMesh(ElementKind::Tetrahedron, 1, [](const Vec3& x) { return Vec3(0.1 * x); },
                                        Region::FarField);
  doc.mesh.geometryRef = "tet";
  return doc;
}

void expectSameMesh(const Mesh& a, const Mesh& b) {
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].id == b.nodes[i].id);
    CHECK(std::memcmp(a.nodes[i].x.data(), b.nodes[i].x.data(), 3 * sizeof(double)) == 0);
    CHECK(a.nodes[i].cad == b.nodes[i].cad);
  }
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    CHECK(a.elements[i].kind == b.elements[i].kind);
    CHECK(a.elements[i].order == b.elements[i].order);
    CHECK(a.elements[i].nodes == b.elements[i].nodes);
    CHECK(a.elements[i].region == b.elements[i].region);
    CHECK(a.elements[i].faceCadTags == b.elements[i].faceCadTags);
  }
  CHECK(a.patches == b.patches);
  CHECK(a.geometryRef == b.geometryRef);
}

// One entity of every curve and surface kind.
CadRegistry everyKind() {
  CadRegistry reg;
  reg.addSurface({1, PlaneSurface{Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0.5, 0.5)}, -1, 2, 0, 1});
  reg.addSurface({2, CylinderSurface{Vec3(1, 2, 3), 0.7, Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()}, 0, M_PI, -1, 1});
  reg.addSurface({3, SphereSurface{Vec3(0, 1, 0), 1.3, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, 0, 2 * M_PI, 0, M_PI});
  BSplinePatch p;
  p.degreeU = p.degreeV = 1;
  p.knotsU = p.knotsV = {0, 0, 1, 1};
  p.nu = p.nv = 2;
  p.poles = {Vec3(0, 0, 0), Vec3(1, 0, 0.2), Vec3(0, 1, 0.1), Vec3(1, 1, 0.7)};
  reg.addSurface({4, p, 0, 1, 0, 1});
  ExtrudedSection ex;
  ex.wrapRadius = 2.5;
  reg.addSurface({5, ex, -1, 1, 0, 2});
  reg.addSurface({6, LoftedSection{Vec3(0, 2, 0), 1.2, 0.1, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, 0, 1, 0, M_PI});

  reg.addCurve({1, LineCurve{Vec3(0, 0, 0), Vec3(1, 2, 3)}, 0, 1, {}});
  reg.addCurve({2, ArcCurve{Vec3(1, 0, 0), 0.3, Vec3::UnitX(), Vec3::UnitZ()}, 0.1, 2.0, {}});
  reg.addCurve({3, BSplineCurve{2, {0, 0, 0, 0.5, 1, 1, 1}, {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(2, 1, 1)}},
                0, 1, {}});
  reg.addCurve({4, HelixCurve{Vec3::Zero(), 1.0, 0.2, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, 0, 4, {}});
  reg.addCurve({5, IsoCurve{5, true, 0.25, nullptr}, -1, 1, {5}});
  reg.addCurve({6, IsoCurve{2, false, 0.5, nullptr}, -1, 1, {2, 3}});
  reg.bbox = {Vec3(-1, -2, -3), Vec3(4, 5, 6)};
  return reg;
}

// Field values of a legacy VTK file, checked against the header counts.
struct VtkFile {
  std::size_t points = 0, cells = 0;
  std::vector<Vec3> xyz;
  std::vector<std::vector<std::size_t>> conn;
  std::vector<int> types;
  std::map<std::string, std::vector<double>> data;
};

VtkFile parseVtk(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  VtkFile f;
  std::getline(in, line);
  REQUIRE(line == "# vtk DataFile Version 4.2");
  std::getline(in, line);  // title
  std::getline(in, line);
  REQUIRE(line == "ASCII");
  std::getline(in, line);
  REQUIRE(line == "DATASET UNSTRUCTURED_GRID");
  std::string word, type;
  in >> word >> f.points >> type;
  REQUIRE(word == "POINTS");
  f.xyz.resize(f.points);
  for (auto& x : f.xyz) in >> x.x() >> x.y() >> x.z();
  std::size_t ints = 0;
  in >> word >> f.cells >> ints;
  REQUIRE(word == "CELLS");
  std::size_t seen = 0;
  for (std::size_t c = 0; c < f.cells; ++c) {
    std::size_t n;
    in >> n;
    std::vector<std::size_t> ids(n);
    for (auto& id : ids) {
      in >> id;
      CHECK(id < f.points);
    }
    seen += n + 1;
    f.conn.push_back(ids);
  }
  CHECK(seen == ints);
  std::size_t count;
  in >> word >> count;
  REQUIRE(word == "CELL_TYPES");
  REQUIRE(count == f.cells);
  f.types.resize(count);
  for (auto& t : f.types) in >> t;
  in >> word >> count;
  REQUIRE(word == "CELL_DATA");
  REQUIRE(count == f.cells);
  std::string name, lookup, table;
  int comps;
  while (in >> word) {
    REQUIRE(word == "SCALARS");
    in >> name >> type >> comps >> lookup >> table;
    CHECK(comps == 1);
    CHECK(lookup == "LOOKUP_TABLE");
    auto& v = f.data[name];
    v.resize(f.cells);
    for (auto& x : v) in >> x;
    REQUIRE(!in.fail());
  }
  return f;
}

double tetVolume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

}  // namespace

TEST_CASE("single tetrahedron round trip") {
  const auto doc = singleTet();
  const std::string first = toCanonicalJson(doc);
  const auto back = parseDocument(first);
  expectSameMesh(doc.mesh, back.mesh);
  CHECK(toCanonicalJson(back) == first);

  const std::string path = tempPath("tet.json");
  writeMesh(doc.mesh, doc.registry, path);
  const auto [mesh, reg] = readMesh(path);
  expectSameMesh(doc.mesh, mesh);
  writeMesh(mesh, reg, path);
  CHECK(slurp(path) == first);

  // canonical key order and the fixed float format
  const auto pos = [&](const char* key) { return first.find(std::string("\"") + key + "\""); };
  CHECK(pos("divisions") < pos("elements"));
  CHECK(pos("elements") < pos("geometry"));
  CHECK(pos("geometry") < pos("nodes"));
  CHECK(pos("nodes") < pos("patches"));
  CHECK(pos("patches") < pos("periodicity"));
  CHECK(pos("periodicity") < pos("version"));
  CHECK(first.find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("built-in documents round trip byte for byte") {
  for (const auto& name : builtinNames()) {
    CAPTURE(name);
    const auto g = builtinGeometry(name);
    const auto doc = documentFrom(g);
    const std::string path = tempPath(name + ".json");
    writeDocument(doc, path);
    const std::string first = slurp(path);
    const auto back = readDocument(path);
    writeDocument(back, path);
    CHECK(slurp(path) == first);

    expectSameMesh(g.mesh, back.mesh);
    auto walls = g.wallPatches;
    std::sort(walls.begin(), walls.end());
    CHECK(back.wallPatches == walls);
    CHECK(back.periodicity.has_value() == g.periodic.has_value());
    for (const auto& n : back.mesh.nodes)
      if (n.cad) CHECK((evalLink(back.registry, *n.cad) - evalLink(g.registry, *n.cad)).norm() == 0.0);
  }
}

TEST_CASE("every curve and surface kind survives serialization") {
  NativeDocument doc;
  doc.registry = everyKind();
  const auto back = parseDocument(toCanonicalJson(doc));
  CHECK(back.registry.curveIds() == doc.registry.curveIds());
  CHECK(back.registry.surfaceIds() == doc.registry.surfaceIds());
  CHECK(back.registry.bbox[0] == doc.registry.bbox[0]);
  CHECK(back.registry.bbox[1] == doc.registry.bbox[1]);
  for (int id : doc.registry.surfaceIds()) {
    const auto& a = doc.registry.surface(id);
    const auto& b = back.registry.surface(id);
    CHECK(surfaceKindName(a) == surfaceKindName(b));
    for (double s : {0.0, 0.3, 0.77, 1.0}) {
      const double u = a.uLo + s * (a.uHi - a.uLo), v = a.vHi - s * (a.vHi - a.vLo);
      CHECK((evalSurface(a, u, v) - evalSurface(b, u, v)).norm() == 0.0);
    }
  }
  for (int id : doc.registry.curveIds()) {
    const auto& a = doc.registry.curve(id);
    const auto& b = back.registry.curve(id);
    CHECK(curveKindName(a) == curveKindName(b));
    CHECK(a.adjacentSurfaces == b.adjacentSurfaces);
    for (double s : {0.0, 0.41, 1.0}) {
      const double t = a.tLo + s * (a.tHi - a.tLo);
      CHECK((evalCurve(a, t) - evalCurve(b, t)).norm() == 0.0);
    }
  }
}

TEST_CASE("doubles survive with 17 significant digits") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> bits;
  NativeDocument doc;
  std::vector<double> values = {0.1, 1.0 / 3.0, 1e-310, -0.0, 1e300, 5e-324, std::nextafter(1.0, 2.0)};
  while (values.size() < 3000) {
    const std::uint64_t b = bits(rng);
    double d;
    std::memcpy(&d, &b, sizeof d);
    if (std::isfinite(d)) values.push_back(d);
  }
  for (std::size_t i = 0; i + 2 < values.size(); i += 3) doc.mesh.addNode({values[i], values[i + 1], values[i + 2]});
  const auto back = parseDocument(toCanonicalJson(doc));
  REQUIRE(back.mesh.nodes.size() == doc.mesh.nodes.size());
  for (std::size_t i = 0; i < doc.mesh.nodes.size(); ++i)
    CHECK(std::memcmp(back.mesh.nodes[i].x.data(), doc.mesh.nodes[i].x.data(), 3 * sizeof(double)) == 0);
}

TEST_CASE("periodicity and division problems round trip") {
  auto g = builtinGeometry("rotor-wedge");
  auto doc = documentFrom(g);
  DivisionProblem p;
  p.names = {"a", "b", "c"};
  p.targets = {3.5, 4, 7.25};
  p.constraints = {{{0, 1}, {2}}, {{0}, {1, 1}}};
  p.maxDivisions = 12;
  doc.divisions = p;
  const std::string text = toCanonicalJson(doc);
  const auto back = parseDocument(text);
  REQUIRE(back.periodicity.has_value());
  CHECK(back.periodicity->patchA == g.periodic->patchA);
  CHECK(back.periodicity->patchB == g.periodic->patchB);
  CHECK(back.periodicity->map.angle == g.periodic->map.angle);
  CHECK(back.periodicity->map.axis == g.periodic->map.axis);
  REQUIRE(back.divisions.has_value());
  CHECK(back.divisions->names == p.names);
  CHECK(back.divisions->targets == p.targets);
  CHECK(back.divisions->maxDivisions == 12);
  REQUIRE(back.divisions->constraints.size() == 2);
  CHECK(back.divisions->constraints[1].sideB == std::vector<int>{1, 1});
  CHECK(toCanonicalJson(back) == text);
  const auto r = checkPeriodicity(back.mesh, back.periodicity->patchA, back.periodicity->patchB,
                                  back.periodicity->map, 1e-10);
  CHECK(r.matched);
}

TEST_CASE("unknown keys are preserved") {
  auto j = nlohmann::json::parse(toCanonicalJson(singleTet()));
  j["zz-notes"] = {{"author", "someone"}, {"tags", {1, 2.5, "x"}}, {"weight", 2.0}};
  j["annotations"] = nlohmann::json::array({nullptr, true});
  const auto doc = parseDocument(j.dump());
  REQUIRE(doc.extra.size() == 2);
  const std::string first = toCanonicalJson(doc);
  const auto again = nlohmann::json::parse(first);
  CHECK(again["zz-notes"] == j["zz-notes"]);
  CHECK(again["annotations"] == j["annotations"]);
  CHECK(again["zz-notes"]["weight"].is_number_float());
  CHECK(toCanonicalJson(parseDocument(first)) == first);
}

TEST_CASE("unsupported versions and schema violations") {
  auto j = nlohmann::json::parse(toCanonicalJson(singleTet()));

  auto k = j;
  k["version"] = 2;
  try {
    parseDocument(k.dump(), "v2.json");
    FAIL("expected a version error");
  } catch (const VersionError& e) {
    CHECK(e.found == 2);
    CHECK(std::string(e.what()).find("unsupported version 2") != std::string::npos);
    CHECK(e.errorClass() == ErrorClass::Io);
  }

  auto expectPointer = [](const nlohmann::json& doc, const std::string& pointer) {
    CAPTURE(pointer);
    try {
      parseDocument(doc.dump());
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.pointer == pointer);
      CHECK(std::string(e.what()).find(pointer) != std::string::npos);
      CHECK(e.errorClass() == ErrorClass::Validation);
    }
  };
  k = j;
  k["elements"][0][3] = 99;
  expectPointer(k, "/elements/0/3");
  k = j;
  k.erase("nodes");
  expectPointer(k, "/");
  k = j;
  k["nodes"][2][1] = "one";
  expectPointer(k, "/nodes/2/1");
  k = j;
  k["elements"][0][0] = "pyramid";
  expectPointer(k, "/elements/0/0");
  k = j;
  k["elements"][0].erase(k["elements"][0].begin() + 2);
  expectPointer(k, "/elements/0");
  k = j;
  k["nodes"][1][0] = 0;
  expectPointer(k, "/nodes/1/0");
  k = j;
  k["patches"] = {{"wall", {{"faces", {{0, 9}}}, {"wall", true}}}};
  expectPointer(k, "/patches/wall/faces/0/1");
  k = j;
  k["geometry"]["surfaces"] = {{{"id", 1}, {"kind", "torus"}, {"u", {0, 1}}, {"v", {0, 1}}}};
  expectPointer(k, "/geometry/surfaces/0/kind");
}

TEST_CASE("truncated documents report the byte offset") {
  const std::string text = toCanonicalJson(singleTet());
  const std::string cut = text.substr(0, text.size() / 2);
  try {
    parseDocument(cut, "cut.json");
    FAIL("expected a parse error");
  } catch (const IoError& e) {
    const std::string what = e.what();
    std::smatch m;
    REQUIRE(std::regex_search(what, m, std::regex("byte ([0-9]+)")));
    const std::size_t at = std::stoul(m[1]);
    CHECK(at >= cut.size());
    CHECK(at <= cut.size() + 1);
    CHECK(what.find("cut.json") != std::string::npos);
  }
}

TEST_CASE("file errors carry the path") {
  const std::string missing = tempPath("does-not-exist.json");
  fs::remove(missing);
  try {
    readMesh(missing);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  const std::string bad = tempPath("no-such-dir/out.json");
  CHECK_THROWS_AS(writeMesh(Mesh{}, CadRegistry{}, bad), IoError);
  CHECK_THROWS_AS(exportVTK(Mesh{}, bad, 1), IoError);
}

TEST_CASE("serialization does not depend on the thread count") {
  const auto g = builtinGeometry("cylinder-box");
  const auto serial = upgradeMesh(g.mesh, g.registry, 2, {}, Execution::Serial);
  const auto parallel = upgradeMesh(g.mesh, g.registry, 2, {}, Execution::Parallel);
  NativeDocument a, b;
  a.mesh = serial.mesh;
  b.mesh = parallel.mesh;
  a.registry = b.registry = g.registry;
  CHECK(toCanonicalJson(a) == toCanonicalJson(b));
}

TEST_CASE("VTK export of single elements") {
  SUBCASE("affine hexahedron, k = 1") {
    const auto m = testing::singleElementMesh(ElementKind::Hexahedron, 1);
    std::ostringstream out;
    const auto s = exportVTK(m, out, 1);
    CHECK(s.cells == 1);
    CHECK(s.points == 8);
    const auto f = parseVtk(out.str());
    CHECK(f.cells == 1);
    CHECK(f.points == 8);
    CHECK(f.types[0] == 12);
    CHECK(f.data.at("minScaledJacobian")[0] == doctest::Approx(1.0));
    CHECK(f.data.at("region")[0] == 0);
  }
  SUBCASE("P = 4 prism, k = 4") {
    const auto m = testing::singleElementMesh(ElementKind::Prism, 4);
    std::ostringstream out;
    const auto s = exportVTK(m, out, 4);
    CHECK(s.cells == 64);
    CHECK(s.points == 15 * 5);
    const auto f = parseVtk(out.str());
    for (int t : f.types) CHECK(t == 13);
  }
  SUBCASE("every kind tessellates into k^d cells covering the element") {
    std::mt19937_64 rng(3);
    for (ElementKind kind : {ElementKind::Tetrahedron, ElementKind::Prism, ElementKind::Hexahedron})
      for (int k = 1; k <= 5; ++k) {
        CAPTURE(kindName(kind));
        CAPTURE(k);
        const auto map = testing::randomAffine(rng);
        const auto m = testing::singleElementMesh(kind, 2, map, Region::FarField);
        std::ostringstream out;
        exportVTK(m, out, k);
        const auto f = parseVtk(out.str());
        CHECK(f.cells == static_cast<std::size_t>(k * k * k));
        // cell volumes: split every cell into corner tetrahedra by its VTK face layout
        double total = 0.0;
        for (const auto& c : f.conn) {
          std::vector<Vec3> p;
          for (auto id : c) p.push_back(f.xyz[id]);
          double v = 0.0;
          if (c.size() == 4) {
            v = tetVolume(p[0], p[1], p[2], p[3]);
          } else if (c.size() == 6) {
            // VTK wedge: (0, 1, 2) faces away from (3, 4, 5)
            v = tetVolume(p[0], p[2], p[1], p[3]) + tetVolume(p[1], p[3], p[5], p[4]) +
                tetVolume(p[1], p[2], p[5], p[3]);
          } else {
            // affine hex: the parallelepiped spanned at vertex 0
            v = (p[1] - p[0]).dot((p[3] - p[0]).cross(p[4] - p[0]));
          }
          CHECK(v > 0.0);
          total += v;
        }
        // reference volumes 4/3, 4, 8 times the affine determinant
        const double refVol = kind == ElementKind::Tetrahedron ? 4.0 / 3.0 : kind == ElementKind::Prism ? 4.0 : 8.0;
        const Vec3 o = map(Vec3::Zero());
        const double det = (map(Vec3::UnitX()) - o).dot((map(Vec3::UnitY()) - o).cross(map(Vec3::UnitZ()) - o));
        CHECK(total == doctest::Approx(refVol * det).epsilon(1e-9));
      }
  }
  SUBCASE("surface elements") {
    const auto tri = testing::singleElementMesh(ElementKind::Triangle, 2);
    std::ostringstream out;
    CHECK(exportVTK(tri, out, 3).cells == 9);
    CHECK(exportVTK(tri, out, 3).points == 10);
  }
  CHECK_THROWS_AS(exportVTK(testing::singleElementMesh(ElementKind::Hexahedron, 1), tempPath("x.vtk"), 0),
                  ParameterError);
}

TEST_CASE("VTK export of the split wingtip mesh") {
  const auto g = builtinGeometry("wingtip-box");
  const auto s = splitMesh(g.mesh, spacing(3, 1.5), g.wallPatches);
  const std::string path = tempPath("wingtip.vtk");
  const auto sum = exportVTK(s.mesh, path, 2);
  const std::string text = slurp(path);
  const auto f = parseVtk(text);
  CHECK(f.points == sum.points);
  CHECK(f.cells == sum.cells);

  // points: distinct tessellation points per element, duplicated across elements
  std::size_t expectPoints = 0, expectCells = 0;
  for (const auto& e : s.mesh.elements) {
    expectPoints += e.kind == ElementKind::Tetrahedron ? 10 : e.kind == ElementKind::Prism ? 18 : 27;
    expectCells += 8;
  }
  CHECK(f.points == expectPoints);
  CHECK(f.cells == expectCells);
  for (const char* field : {"minScaledJacobian", "aspectRatio", "region"}) CHECK(f.data.count(field) == 1);
  for (double j : f.data.at("minScaledJacobian")) CHECK(j > 0.0);

  std::ostringstream serial;
  exportVTK(s.mesh, serial, 2, Execution::Serial);
  CHECK(serial.str() == text);
}

TEST_CASE("stats of an affine box") {
  const auto m = testing::singleElementMesh(ElementKind::Hexahedron, 1,
                                            [](const Vec3& x) { return Vec3(0.5 * x.x(), 1.0 * x.y(), 2.5 * x.z()); });
  const auto r = statsReport(m);
  CHECK(r.maxAspectRatio == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(r.minScaledJacobian == doctest::Approx(1.0));
  CHECK(r.invalidElements.empty());
  CHECK(r.census.count(ElementKind::Hexahedron) == 1);
  const auto j = nlohmann::json::parse(r.json());
  CHECK(j["census"]["hexahedron"]["total"] == 1);
  CHECK(j["maxAspectRatio"].get<double>() == doctest::Approx(5.0));
  CHECK(r.table().find("hexahedron") != std::string::npos);
}

TEST_CASE("stats list inverted elements") {
  auto m = testing::singleElementMesh(ElementKind::Tetrahedron, 1);
  auto second = m.elements[0];
  std::swap(second.nodes[1], second.nodes[2]);
  m.elements.push_back(second);
  const auto r = statsReport(m);
  CHECK(r.invalidElements == std::vector<std::size_t>{1});
  CHECK(r.minScaledJacobian < 0.0);
  CHECK(nlohmann::json::parse(r.json())["invalidElements"] == nlohmann::json::array({1}));
}

TEST_CASE("stats census equals countByKind on split meshes") {
  for (const char* name : {"wingtip-box", "crm-census"}) {
    CAPTURE(name);
    const auto g = builtinGeometry(name);
    const auto s = splitMesh(g.mesh, spacing(10, 1.5), g.wallPatches);
    const auto r = statsReport(s.mesh);
    CHECK(r.census.byKind == countByKind(s.mesh).byKind);
    CHECK(r.census.byKindRegion == countByKind(s.mesh).byKindRegion);
    CHECK(r.invalidElements.empty());
  }
  const auto r = statsReport(splitMesh(builtinGeometry("wingtip-box").mesh, spacing(10, 1.5), {"wing", "floor"}).mesh);
  CHECK(r.census.count(ElementKind::Prism) == 12240);
  CHECK(r.census.count(ElementKind::Hexahedron) == 2500);
  CHECK(r.census.count(ElementKind::Tetrahedron) == 12576);
}
