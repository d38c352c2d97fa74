#pragma once

#include <functional>
#include <random>

#include "homesh/mesh.hpp"
#include "homesh/refelem.hpp"

namespace homesh::testing {

/// Mesh holding one element whose nodes are `map(reference node)`.
inline Mesh singleElementMesh(ElementKind kind, int order,
                              const std::function<Vec3(const Vec3&)>& map = [](const Vec3& x) { return x; },
                              Region region = Region::NearField) {
  Mesh m;
  Element e;
  e.kind = kind;
  e.order = order;
  e.region = region;
  for (const auto& xi : referenceNodes(kind, order)) e.nodes.push_back(m.addNode(map(xi)));
  e.faceCadTags.assign(referenceFacets(kind).size(), std::nullopt);
  m.elements.push_back(std::move(e));
  return m;
}

inline std::vector<Vec3> mappedNodes(ElementKind kind, int order, const std::function<Vec3(const Vec3&)>& map) {
  std::vector<Vec3> out;
  for (const auto& xi : referenceNodes(kind, order)) out.push_back(map(xi));
  return out;
}

/// Uniformly random point inside the reference element.
inline Vec3 randomReferencePoint(ElementKind k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec3 xi(u(rng), dimension(k) > 1 ? u(rng) : 0.0, dimension(k) > 2 ? u(rng) : 0.0);
    if (inReferenceDomain(k, xi, 0.0)) return xi;
  }
}

/// Random orientation-preserving affine map, reasonably conditioned.
inline std::function<Vec3(const Vec3&)> randomAffine(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) += u(rng);
  if (a.determinant() < 0) a.col(0) *= -1.0;
  Vec3 b(u(rng), u(rng), u(rng));
  return [a, b](const Vec3& x) { return Vec3(a * x + b); };
}

}  // namespace homesh::testing
