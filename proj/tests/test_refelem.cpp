#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "homesh/errors.hpp"
#include "homesh/refelem.hpp"

using namespace homesh;

namespace {

// Legendre P_n and its derivative by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double d = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, d};
}

// Interior GLL nodes are the roots of P'_n: bracket sign changes on a fine
// grid and bisect.
std::vector<double> gllByBisection(int n) {
  std::vector<double> r{-1.0};
  const int grid = 20000;
  auto f = [&](double x) { return legendre(n, x).second; };
  for (int i = 0; i < grid; ++i) {
    double a = -1.0 + 2.0 * (i + 0.5) / grid, b = -1.0 + 2.0 * (i + 1.5) / grid;
    if (b >= 1.0) break;
    if (f(a) == 0.0) { r.push_back(a); continue; }
    if (f(a) * f(b) < 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        (f(a) * f(m) <= 0.0 ? b : a) = m;
      }
      r.push_back(0.5 * (a + b));
    }
  }
  r.push_back(1.0);
  return r;
}

double fdDet(const ElementMapping& m, const Vec3& xi, double h) {
  Eigen::Matrix3d j;
  for (int k = 0; k < 3; ++k) {
    Vec3 a = xi, b = xi;
    a[k] -= h;
    b[k] += h;
    j.col(k) = (m.eval(b) - m.eval(a)) / (2.0 * h);
  }
  return j.determinant();
}

}  // namespace

TEST_CASE("GLL points") {
  const auto p2 = gllPoints(2);
  REQUIRE(p2.size() == 3);
  CHECK(p2[0] == -1.0);
  CHECK(p2[1] == 0.0);
  CHECK(p2[2] == 1.0);

  const auto p4 = gllPoints(4);
  REQUIRE(p4.size() == 5);
  CHECK(p4[1] == doctest::Approx(-std::sqrt(3.0 / 7.0)).epsilon(1e-15));
  CHECK(p4[3] == doctest::Approx(std::sqrt(3.0 / 7.0)).epsilon(1e-15));

  for (int n = 1; n <= kMaxOrder; ++n) {
    const auto ours = gllPoints(n);
    const auto oracle = gllByBisection(n);
    REQUIRE(ours.size() == oracle.size());
    for (std::size_t i = 0; i < ours.size(); ++i) {
      CHECK(std::abs(ours[i] - oracle[i]) < 1e-13);
      CHECK(ours[i] == -ours[ours.size() - 1 - i]);
    }
  }
}

TEST_CASE("reference nodes") {
  for (auto k : kAllKinds) {
    for (int p = 1; p <= 6; ++p) {
      const auto nodes = referenceNodes(k, p);
      REQUIRE(nodes.size() == nodeCount(k, p));
      for (int v = 0; v < numVertices(k); ++v) CHECK((nodes[v] - referenceVertex(k, v)).norm() == 0.0);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(inReferenceDomain(k, nodes[i]));
        for (std::size_t j = 0; j < i; ++j) CHECK((nodes[i] - nodes[j]).norm() > 1e-3);
      }
    }
  }
  CHECK(referenceNodes(ElementKind::Hexahedron, 4).size() == 125);
  // P=2 segment: {-1, 1, 0} in canonical order (vertices first)
  const auto s = referenceNodes(ElementKind::Segment, 2);
  CHECK(s[0].x() == -1.0);
  CHECK(s[1].x() == 1.0);
  CHECK(s[2].x() == 0.0);
}

TEST_CASE("edge nodes are GLL on every edge") {
  for (auto k : kAllKinds) {
    const int p = 5;
    const auto& topo = topology(k, p);
    const auto nodes = referenceNodes(k, p);
    const auto g = gllPoints(p);
    for (std::size_t e = 0; e < topo.edges().size(); ++e) {
      const auto& en = topo.edgeNodes(static_cast<int>(e));
      const Vec3 a = nodes[en.front()], b = nodes[en.back()];
      for (int i = 0; i <= p; ++i) {
        const Vec3 expect = a + 0.5 * (g[i] + 1.0) * (b - a);
        CHECK((nodes[en[i]] - expect).norm() < 1e-14);
      }
    }
  }
}

TEST_CASE("triangle node set is symmetric") {
  for (int p = 2; p <= 6; ++p) {
    const auto nodes = referenceNodes(ElementKind::Triangle, p);
    auto contains = [&](const Vec3& q) {
      for (const auto& n : nodes)
        if ((n - q).norm() < 1e-13) return true;
      return false;
    };
    for (const auto& n : nodes) {
      CHECK(contains(Vec3(n.y(), n.x(), 0)));            // reflection
      CHECK(contains(Vec3(-1.0 - n.x() - n.y(), n.x(), 0)));  // rotation
    }
  }
}

TEST_CASE("nodal basis: Kronecker property and partition of unity") {
  std::mt19937_64 rng(11);
  for (auto k : kAllKinds) {
    for (int p = 1; p <= 6; ++p) {
      const auto& ref = refElement(k, p);
      for (std::size_t i = 0; i < ref.size(); i += std::max<std::size_t>(1, ref.size() / 7)) {
        const auto l = ref.nodalValues(ref.nodes()[i]);
        for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::abs(l[j] - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
      for (int t = 0; t < 20; ++t) {
        const Vec3 xi = testing::randomReferencePoint(k, rng);
        CHECK(std::abs(ref.nodalValues(xi).sum() - 1.0) < 1e-12);
        CHECK(ref.nodalGradients(xi).colwise().sum().norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("element mapping reproduces affine maps") {
  std::mt19937_64 rng(5);
  for (auto k : {ElementKind::Tetrahedron, ElementKind::Prism, ElementKind::Hexahedron}) {
    for (int p = 1; p <= 5; ++p) {
      const auto map = testing::randomAffine(rng);
      ElementMapping m(refElement(k, p), testing::mappedNodes(k, p, map));
      Eigen::Matrix3d a;
      for (int c = 0; c < 3; ++c) a.col(c) = map(Vec3::Unit(c)) - map(Vec3::Zero());
      for (int t = 0; t < 10; ++t) {
        const Vec3 xi = testing::randomReferencePoint(k, rng);
        CHECK((m.eval(xi) - map(xi)).norm() < 1e-12);
        CHECK((m.jacobian(xi) - a).norm() < 1e-10);
        CHECK(m.jacobianDet(xi) == doctest::Approx(a.determinant()).epsilon(1e-10));
      }
    }
  }
  ElementMapping scale(refElement(ElementKind::Hexahedron, 3),
                       testing::mappedNodes(ElementKind::Hexahedron, 3, [](const Vec3& x) { return Vec3(2.0 * x); }));
  CHECK(scale.jacobianDet(Vec3(0.1, -0.3, 0.7)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("eval outside the reference domain is a domain error") {
  ElementMapping m(refElement(ElementKind::Tetrahedron, 2), referenceNodes(ElementKind::Tetrahedron, 2));
  CHECK_THROWS_AS(m.eval(Vec3(0.5, 0.5, 0.5)), DomainError);
  CHECK_THROWS_AS(m.jacobian(Vec3(2.0, 0, 0)), DomainError);
}

TEST_CASE("Jacobian agrees with finite differences on a curved prism") {
  std::mt19937_64 rng(17);
  const auto curved = [](const Vec3& x) {
    return Vec3(x.x() + 0.1 * std::sin(2.0 * x.y()) + 0.05 * x.z() * x.z(),
                x.y() + 0.1 * x.x() * x.z(),
                x.z() + 0.08 * std::cos(x.x() + x.y()));
  };
  ElementMapping m(refElement(ElementKind::Prism, 4), testing::mappedNodes(ElementKind::Prism, 4, curved));
  const double h = 1e-5;
  for (int t = 0; t < 50; ++t) {
    // stay h away from the boundary so central differences are defined
    Vec3 xi;
    do xi = testing::randomReferencePoint(ElementKind::Prism, rng);
    while (!inReferenceDomain(ElementKind::Prism, xi + Vec3(h, h, h), -h) ||
           !inReferenceDomain(ElementKind::Prism, xi - Vec3(h, h, h), -h));
    const double exact = m.jacobianDet(xi);
    CHECK(std::abs(exact - fdDet(m, xi, h)) <= 1e-6 * std::abs(exact));
  }
}

TEST_CASE("validity") {
  SUBCASE("affine element has scaled Jacobian one") {
    std::mt19937_64 rng(2);
    for (auto k : {ElementKind::Tetrahedron, ElementKind::Prism, ElementKind::Hexahedron}) {
      const auto v = checkValidity(ElementMapping(refElement(k, 3), testing::mappedNodes(k, 3, testing::randomAffine(rng))));
      CHECK(v.valid);
      CHECK(v.minScaledJacobian == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("swapped vertices invert a hexahedron") {
    auto nodes = referenceNodes(ElementKind::Hexahedron, 1);
    std::swap(nodes[0], nodes[1]);
    const auto v = checkValidity(ElementMapping(refElement(ElementKind::Hexahedron, 1), nodes));
    CHECK(!v.valid);
    CHECK(v.minScaledJacobian <= 0.0);
  }
  SUBCASE("folded curved prism") {
    // push the top-face nodes of a P=2 prism below the bottom face near the middle
    auto nodes = referenceNodes(ElementKind::Prism, 2);
    for (auto& x : nodes)
      if (x.z() > 0.5 && std::abs(x.x() + x.y() + 1.0) < 0.6) x.z() = -1.6;
    ElementMapping m(refElement(ElementKind::Prism, 2), nodes);
    // oracle: finite-difference determinant at the top-face centroid
    CHECK(fdDet(m, Vec3(-1.0 / 3.0, -1.0 / 3.0, 1.0 - 1e-4), 1e-5) < 0.0);
    CHECK(!checkValidity(m).valid);
  }
  SUBCASE("2D determinant uses the vertex-linear normal") {
    ElementMapping m(refElement(ElementKind::Quadrilateral, 2), referenceNodes(ElementKind::Quadrilateral, 2));
    CHECK(m.jacobianDet(Vec3(0.2, 0.4, 0)) == doctest::Approx(1.0));
    auto flipped = referenceNodes(ElementKind::Quadrilateral, 2);
    flipped[8] = Vec3(3.0, 3.0, 0.0);  // drag the centre node far outside
    CHECK(!checkValidity(ElementMapping(refElement(ElementKind::Quadrilateral, 2), flipped)).valid);
  }
}
