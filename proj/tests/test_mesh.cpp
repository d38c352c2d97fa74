#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "homesh/errors.hpp"
#include "homesh/mesh.hpp"

using namespace homesh;

namespace {

Mesh twoTets() {
  Mesh m;
  const NodeId a = m.addNode({0, 0, 0});
  const NodeId b = m.addNode({1, 0, 0});
  const NodeId c = m.addNode({0, 1, 0});
  const NodeId d = m.addNode({0, 0, 1});
  const NodeId e = m.addNode({1, 1, 1});
  Element t1{ElementKind::Tetrahedron, 1, {a, b, c, d}, Region::FarField, {}};
  Element t2{ElementKind::Tetrahedron, 1, {b, c, d, e}, Region::FarField, {}};
  // orient t2 positively: (b, d, c, e)
  t2.nodes = {b, d, c, e};
  m.elements = {t1, t2};
  return m;
}

}  // namespace

TEST_CASE("node count formulas") {
  CHECK(nodeCount(ElementKind::Segment, 4) == 5);
  CHECK(nodeCount(ElementKind::Triangle, 4) == 15);
  CHECK(nodeCount(ElementKind::Quadrilateral, 4) == 25);
  CHECK(nodeCount(ElementKind::Tetrahedron, 4) == 35);
  CHECK(nodeCount(ElementKind::Prism, 4) == 75);
  CHECK(nodeCount(ElementKind::Hexahedron, 4) == 125);
}

TEST_CASE("topology node lists match the count formula for random kind and order") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> kd(0, 5), pd(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = kAllKinds[kd(rng)];
    const int p = pd(rng);
    const auto& topo = topology(k, p);
    REQUIRE(topo.size() == nodeCount(k, p));
    // vertices first
    for (int v = 0; v < numVertices(k); ++v) CHECK(topo.entities()[v].dim == 0);
    // facet node lists have the facet kind's count
    for (std::size_t f = 0; f < topo.facets().size(); ++f) {
      const auto& nodes = topo.facetNodes(static_cast<int>(f));
      CHECK(nodes.size() == nodeCount(topo.facets()[f].kind, p));
      std::vector<int> s = nodes;
      std::sort(s.begin(), s.end());
      CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    }
  }
}

TEST_CASE("conformity of two tetrahedra sharing a face") {
  auto m = twoTets();
  CHECK(validateConformity(m).conformal());

  SUBCASE("duplicate-coordinate node breaks conformity") {
    const NodeId dup = m.addNode(m.x(m.elements[1].nodes[1]));
    m.elements[1].nodes[1] = dup;
    const auto rep = validateConformity(m);
    CHECK(rep.violations.size() == 1);
  }
  SUBCASE("dangling reference") {
    m.elements[1].nodes[3] = 999;
    const auto rep = validateConformity(m);
    REQUIRE(!rep.conformal());
    CHECK(rep.violations[0].type == Violation::Type::DanglingNode);
  }
  SUBCASE("malformed element is a structural error") {
    m.elements[0].nodes.pop_back();
    CHECK_THROWS_AS(validateConformity(m), StructuralError);
  }
}

TEST_CASE("conformity is invariant under node renumbering") {
  auto m = twoTets();
  const NodeId dup = m.addNode(m.x(m.elements[1].nodes[2]));
  m.elements[1].nodes[2] = dup;
  const auto before = validateConformity(m).violations.size();

  std::mt19937_64 rng(3);
  std::vector<NodeId> perm(m.nodes.size());
  std::iota(perm.begin(), perm.end(), 100);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::map<NodeId, NodeId> remap;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    remap[m.nodes[i].id] = perm[i];
    m.nodes[i].id = perm[i];
  }
  m.reindex();
  for (auto& e : m.elements)
    for (auto& id : e.nodes) id = remap.at(id);
  CHECK(validateConformity(m).violations.size() == before);
}

TEST_CASE("extractBoundaryFaces") {
  SUBCASE("hexahedron, all faces") {
    auto m = testing::singleElementMesh(ElementKind::Hexahedron, 1);
    for (int f = 0; f < 6; ++f) m.patches["all"].push_back({0, f});
    const auto faces = extractBoundaryFaces(m, "all");
    REQUIRE(faces.size() == 6);
    for (const auto& f : faces) CHECK(f.kind == ElementKind::Quadrilateral);
    // outward orientation: normal of each face points away from the centroid
    for (const auto& f : faces) {
      const Vec3 a = m.x(f.nodes[0]), b = m.x(f.nodes[1]), d = m.x(f.nodes[3]);
      const Vec3 n = (b - a).cross(d - a);
      const Vec3 c = 0.25 * (m.x(f.nodes[0]) + m.x(f.nodes[1]) + m.x(f.nodes[2]) + m.x(f.nodes[3]));
      CHECK(n.dot(c) > 0.0);
    }
  }
  SUBCASE("prism wall at bottom triangle") {
    auto m = testing::singleElementMesh(ElementKind::Prism, 2);
    m.patches["wall"] = {{0, 0}};
    const auto faces = extractBoundaryFaces(m, "wall");
    REQUIRE(faces.size() == 1);
    CHECK(faces[0].kind == ElementKind::Triangle);
    CHECK(faces[0].nodes.size() == 6);
  }
  SUBCASE("unknown patch") {
    auto m = testing::singleElementMesh(ElementKind::Prism, 1);
    CHECK_THROWS_AS(extractBoundaryFaces(m, "nope"), LookupError);
  }
  SUBCASE("deterministic across runs") {
    auto m = testing::singleElementMesh(ElementKind::Hexahedron, 3);
    m.patches["p"] = {{0, 4}, {0, 1}, {0, 2}};
    CHECK(extractBoundaryFaces(m, "p").size() == 3);
    const auto a = extractBoundaryFaces(m, "p");
    const auto b = extractBoundaryFaces(m, "p");
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].nodes == b[i].nodes);
  }
}

TEST_CASE("countByKind") {
  Mesh empty;
  const auto c = countByKind(empty);
  for (auto k : kAllKinds) CHECK(c.count(k) == 0);
  auto m = twoTets();
  CHECK(countByKind(m).count(ElementKind::Tetrahedron) == 2);
  CHECK(countByKind(m).count(ElementKind::Tetrahedron, Region::FarField) == 2);
}

TEST_CASE("high-order faces share all facet nodes") {
  // Two P=2 hexes sharing a face built through the same node ids.
  Mesh m;
  const auto& topo = topology(ElementKind::Hexahedron, 2);
  std::map<std::array<long, 3>, NodeId> ids;
  auto nodeAt = [&](const Vec3& x) {
    std::array<long, 3> key{std::lround(x.x() * 1e9), std::lround(x.y() * 1e9), std::lround(x.z() * 1e9)};
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    return ids[key] = m.addNode(x);
  };
  for (int shift = 0; shift < 2; ++shift) {
    Element e{ElementKind::Hexahedron, 2, {}, Region::FarField, {}};
    for (const auto& xi : referenceNodes(ElementKind::Hexahedron, 2))
      e.nodes.push_back(nodeAt(xi + Vec3(2.0 * shift, 0, 0)));
    m.elements.push_back(e);
  }
  CHECK(topo.size() == 27);
  CHECK(validateConformity(m).conformal());
  // swap the face-centre node of one element for a fresh id
  const int centre = topo.facetNodes(3).back();
  m.elements[0].nodes[centre] = m.addNode(m.x(m.elements[0].nodes[centre]));
  CHECK(validateConformity(m).violations.size() == 1);
}
