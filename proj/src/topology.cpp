#include "homesh/topology.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "homesh/errors.hpp"

namespace homesh {

std::string_view kindName(ElementKind k) {
  switch (k) {
    case ElementKind::Segment: return "segment";
    case ElementKind::Triangle: return "triangle";
    case ElementKind::Quadrilateral: return "quadrilateral";
    case ElementKind::Tetrahedron: return "tetrahedron";
    case ElementKind::Prism: return "prism";
    case ElementKind::Hexahedron: return "hexahedron";
  }
  return "?";
}

ElementKind kindFromName(std::string_view name) {
  for (auto k : kAllKinds)
    if (kindName(k) == name) return k;
  throw LookupError("unknown element kind '" + std::string(name) + "'");
}

int dimension(ElementKind k) {
  switch (k) {
    case ElementKind::Segment: return 1;
    case ElementKind::Triangle:
    case ElementKind::Quadrilateral: return 2;
    default: return 3;
  }
}

int numVertices(ElementKind k) {
  switch (k) {
    case ElementKind::Segment: return 2;
    case ElementKind::Triangle: return 3;
    case ElementKind::Quadrilateral: return 4;
    case ElementKind::Tetrahedron: return 4;
    case ElementKind::Prism: return 6;
    case ElementKind::Hexahedron: return 8;
  }
  return 0;
}

std::size_t nodeCount(ElementKind k, int order) {
  const std::size_t p = static_cast<std::size_t>(order);
  switch (k) {
    case ElementKind::Segment: return p + 1;
    case ElementKind::Triangle: return (p + 1) * (p + 2) / 2;
    case ElementKind::Quadrilateral: return (p + 1) * (p + 1);
    case ElementKind::Tetrahedron: return (p + 1) * (p + 2) * (p + 3) / 6;
    case ElementKind::Prism: return (p + 1) * (p + 1) * (p + 2) / 2;
    case ElementKind::Hexahedron: return (p + 1) * (p + 1) * (p + 1);
  }
  return 0;
}

const std::vector<std::array<int, 2>>& referenceEdges(ElementKind k) {
  static const std::vector<std::array<int, 2>> seg{{0, 1}};
  static const std::vector<std::array<int, 2>> tri{{0, 1}, {1, 2}, {2, 0}};
  static const std::vector<std::array<int, 2>> quad{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  static const std::vector<std::array<int, 2>> tet{{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
  static const std::vector<std::array<int, 2>> prism{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5},
                                                     {5, 3}, {0, 3}, {1, 4}, {2, 5}};
  static const std::vector<std::array<int, 2>> hex{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                                   {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  switch (k) {
    case ElementKind::Segment: return seg;
    case ElementKind::Triangle: return tri;
    case ElementKind::Quadrilateral: return quad;
    case ElementKind::Tetrahedron: return tet;
    case ElementKind::Prism: return prism;
    case ElementKind::Hexahedron: return hex;
  }
  return seg;
}

const std::vector<FacetTopo>& referenceFacets(ElementKind k) {
  using EK = ElementKind;
  static const std::vector<FacetTopo> seg{};
  static const std::vector<FacetTopo> tri{
      {EK::Segment, {0, 1}}, {EK::Segment, {1, 2}}, {EK::Segment, {2, 0}}};
  static const std::vector<FacetTopo> quad{{EK::Segment, {0, 1}},
                                           {EK::Segment, {1, 2}},
                                           {EK::Segment, {2, 3}},
                                           {EK::Segment, {3, 0}}};
  static const std::vector<FacetTopo> tet{{EK::Triangle, {0, 2, 1}},
                                          {EK::Triangle, {0, 1, 3}},
                                          {EK::Triangle, {1, 2, 3}},
                                          {EK::Triangle, {0, 3, 2}}};
  static const std::vector<FacetTopo> prism{{EK::Triangle, {0, 2, 1}},
                                            {EK::Triangle, {3, 4, 5}},
                                            {EK::Quadrilateral, {0, 1, 4, 3}},
                                            {EK::Quadrilateral, {1, 2, 5, 4}},
                                            {EK::Quadrilateral, {0, 3, 5, 2}}};
  static const std::vector<FacetTopo> hex{
      {EK::Quadrilateral, {0, 3, 2, 1}}, {EK::Quadrilateral, {4, 5, 6, 7}},
      {EK::Quadrilateral, {0, 1, 5, 4}}, {EK::Quadrilateral, {1, 2, 6, 5}},
      {EK::Quadrilateral, {2, 3, 7, 6}}, {EK::Quadrilateral, {0, 4, 7, 3}}};
  switch (k) {
    case EK::Segment: return seg;
    case EK::Triangle: return tri;
    case EK::Quadrilateral: return quad;
    case EK::Tetrahedron: return tet;
    case EK::Prism: return prism;
    case EK::Hexahedron: return hex;
  }
  return seg;
}

namespace {

std::vector<Lattice> vertexLattices(ElementKind k, int p) {
  switch (k) {
    case ElementKind::Segment: return {{0, 0, 0}, {p, 0, 0}};
    case ElementKind::Triangle: return {{0, 0, 0}, {p, 0, 0}, {0, p, 0}};
    case ElementKind::Quadrilateral: return {{0, 0, 0}, {p, 0, 0}, {p, p, 0}, {0, p, 0}};
    case ElementKind::Tetrahedron: return {{0, 0, 0}, {p, 0, 0}, {0, p, 0}, {0, 0, p}};
    case ElementKind::Prism:
      return {{0, 0, 0}, {p, 0, 0}, {0, p, 0}, {0, 0, p}, {p, 0, p}, {0, p, p}};
    case ElementKind::Hexahedron:
      return {{0, 0, 0}, {p, 0, 0}, {p, p, 0}, {0, p, 0},
              {0, 0, p}, {p, 0, p}, {p, p, p}, {0, p, p}};
  }
  return {};
}

std::vector<Lattice> allLattice(ElementKind k, int p) {
  std::vector<Lattice> out;
  switch (k) {
    case ElementKind::Segment:
      for (int i = 0; i <= p; ++i) out.push_back({i, 0, 0});
      break;
    case ElementKind::Triangle:
      for (int j = 0; j <= p; ++j)
        for (int i = 0; i + j <= p; ++i) out.push_back({i, j, 0});
      break;
    case ElementKind::Quadrilateral:
      for (int j = 0; j <= p; ++j)
        for (int i = 0; i <= p; ++i) out.push_back({i, j, 0});
      break;
    case ElementKind::Tetrahedron:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j + l <= p; ++j)
          for (int i = 0; i + j + l <= p; ++i) out.push_back({i, j, l});
      break;
    case ElementKind::Prism:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j <= p; ++j)
          for (int i = 0; i + j <= p; ++i) out.push_back({i, j, l});
      break;
    case ElementKind::Hexahedron:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j <= p; ++j)
          for (int i = 0; i <= p; ++i) out.push_back({i, j, l});
      break;
  }
  return out;
}

Lattice lerpLattice(const Lattice& a, const Lattice& b, int m, int p) {
  Lattice r{};
  for (int d = 0; d < 3; ++d) r[d] = a[d] + m * (b[d] - a[d]) / p;
  return r;
}

// Element lattice of a facet-local lattice point (a, b).
Lattice facetToElement(const FacetTopo& f, const std::vector<Lattice>& vl, int a, int b, int p) {
  Lattice r{};
  if (f.kind == ElementKind::Triangle) {
    const auto& A = vl[f.vertices[0]];
    const auto& B = vl[f.vertices[1]];
    const auto& C = vl[f.vertices[2]];
    for (int d = 0; d < 3; ++d) r[d] = ((p - a - b) * A[d] + a * B[d] + b * C[d]) / p;
  } else if (f.kind == ElementKind::Quadrilateral) {
    const auto& A = vl[f.vertices[0]];
    const auto& B = vl[f.vertices[1]];
    const auto& D = vl[f.vertices[3]];
    for (int d = 0; d < 3; ++d) r[d] = A[d] + (a * (B[d] - A[d]) + b * (D[d] - A[d])) / p;
  } else {  // segment facet of a 2D element
    const auto& A = vl[f.vertices[0]];
    const auto& B = vl[f.vertices[1]];
    r = lerpLattice(A, B, a, p);
  }
  return r;
}

}  // namespace

ElementTopology::ElementTopology(ElementKind kind, int order)
    : kind_(kind), order_(order), edges_(referenceEdges(kind)), facets_(referenceFacets(kind)) {
  if (order < 1 || order > kMaxOrder)
    throw CapabilityError("unsupported order " + std::to_string(order) + " for " +
                          std::string(kindName(kind)));
  const int p = order;
  stride_ = p + 1;
  lookup_.assign(static_cast<std::size_t>(stride_ * stride_ * stride_), -1);
  auto key = [&](const Lattice& l) { return (l[2] * stride_ + l[1]) * stride_ + l[0]; };
  auto push = [&](const Lattice& l, NodeEntity e) {
    if (lookup_[key(l)] >= 0) return;
    lookup_[key(l)] = static_cast<int>(lattice_.size());
    lattice_.push_back(l);
    entity_.push_back(e);
  };

  const auto vl = vertexLattices(kind, p);
  for (int v = 0; v < static_cast<int>(vl.size()); ++v) push(vl[v], {0, v});
  if (kind != ElementKind::Segment) {
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
      for (int m = 1; m < p; ++m)
        push(lerpLattice(vl[edges_[e][0]], vl[edges_[e][1]], m, p), {1, e});
  }
  if (dimension(kind) == 3) {
    for (int f = 0; f < static_cast<int>(facets_.size()); ++f) {
      const auto& ft = facets_[f];
      for (int b = 1; b < p; ++b)
        for (int a = 1; a < p; ++a) {
          if (ft.kind == ElementKind::Triangle && a + b >= p) continue;
          push(facetToElement(ft, vl, a, b, p), {2, f});
        }
    }
  }
  const int interiorDim = dimension(kind);
  for (const auto& l : allLattice(kind, p)) push(l, {interiorDim, 0});

  if (lattice_.size() != nodeCount(kind, order))
    throw StructuralError("internal: lattice size mismatch for " + std::string(kindName(kind)));

  for (const auto& e : edges_) {
    std::vector<int> nodes;
    for (int m = 0; m <= p; ++m) nodes.push_back(indexOf(lerpLattice(vl[e[0]], vl[e[1]], m, p)));
    edgeNodes_.push_back(std::move(nodes));
  }
  for (const auto& ft : facets_) {
    std::vector<int> nodes;
    if (ft.kind == ElementKind::Segment) {
      // vertices first, then interior
      nodes.push_back(indexOf(vl[ft.vertices[0]]));
      nodes.push_back(indexOf(vl[ft.vertices[1]]));
      for (int m = 1; m < p; ++m) nodes.push_back(indexOf(lerpLattice(vl[ft.vertices[0]], vl[ft.vertices[1]], m, p)));
    } else {
      ElementTopology local(ft.kind, p);
      for (const auto& l : local.lattice()) nodes.push_back(indexOf(facetToElement(ft, vl, l[0], l[1], p)));
    }
    facetNodes_.push_back(std::move(nodes));
  }
}

int ElementTopology::indexOf(const Lattice& l) const {
  for (int d = 0; d < 3; ++d)
    if (l[d] < 0 || l[d] >= stride_) return -1;
  return lookup_[(l[2] * stride_ + l[1]) * stride_ + l[0]];
}

const ElementTopology& topology(ElementKind kind, int order) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::unique_ptr<ElementTopology>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[{static_cast<int>(kind), order}];
  if (!slot) slot = std::make_unique<ElementTopology>(kind, order);
  return *slot;
}

}  // namespace homesh

namespace homesh {

std::vector<long long> vertexWeights(ElementKind k, int order, const Lattice& l) {
  const long long p = order, i = l[0], j = l[1], m = l[2];
  switch (k) {
    case ElementKind::Segment: return {p - i, i};
    case ElementKind::Triangle: return {p - i - j, i, j};
    case ElementKind::Quadrilateral: return {(p - i) * (p - j), i * (p - j), i * j, (p - i) * j};
    case ElementKind::Tetrahedron: return {p - i - j - m, i, j, m};
    case ElementKind::Prism: {
      const long long t[3] = {p - i - j, i, j};
      return {t[0] * (p - m), t[1] * (p - m), t[2] * (p - m), t[0] * m, t[1] * m, t[2] * m};
    }
    case ElementKind::Hexahedron: {
      std::vector<long long> w;
      for (const auto& v : vertexLattices(k, order)) {
        long long x = 1;
        for (int d = 0; d < 3; ++d) x *= v[d] == order ? l[d] : p - l[d];
        w.push_back(x);
      }
      return w;
    }
  }
  return {};
}

}  // namespace homesh
