#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homesh {

enum class ElementKind { Segment, Triangle, Quadrilateral, Tetrahedron, Prism, Hexahedron };

inline constexpr std::array<ElementKind, 6> kAllKinds = {
    ElementKind::Segment,     ElementKind::Triangle, ElementKind::Quadrilateral,
    ElementKind::Tetrahedron, ElementKind::Prism,    ElementKind::Hexahedron};

std::string_view kindName(ElementKind k);
ElementKind kindFromName(std::string_view name);

int dimension(ElementKind k);
int numVertices(ElementKind k);

/// Number of nodes of an order-P element:
/// segment P+1, triangle (P+1)(P+2)/2, quad (P+1)^2, tet (P+1)(P+2)(P+3)/6,
/// prism (P+1)^2(P+2)/2, hex (P+1)^3.
std::size_t nodeCount(ElementKind k, int order);

/// Integer lattice coordinate of a node. Tensor directions run 0..P,
/// simplex directions satisfy a sum constraint (i+j <= P, i+j+k <= P).
using Lattice = std::array<int, 3>;

/// Facet (codimension-one entity) of a reference element, vertices ordered
/// so that the induced normal points outward.
struct FacetTopo {
  ElementKind kind;
  std::vector<int> vertices;
};

/// Where a node lives: 0 vertex, 1 edge, 2 face, 3 volume interior.
struct NodeEntity {
  int dim;
  int index;
};

/// Node numbering of one (kind, order) pair.
///
/// Canonical local numbering: vertices, then edge nodes in local-edge order
/// (each edge walked from its first to its second vertex), then face
/// interior nodes face by face (face-local lattice, second index outer),
/// then volume interior nodes (k outer, j, i inner). For 2D kinds the
/// "face" block is the element interior; for segments the interior block.
class ElementTopology {
 public:
  ElementTopology(ElementKind kind, int order);

  ElementKind kind() const { return kind_; }
  int order() const { return order_; }
  std::size_t size() const { return lattice_.size(); }

  const std::vector<Lattice>& lattice() const { return lattice_; }
  const std::vector<NodeEntity>& entities() const { return entity_; }

  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const std::vector<FacetTopo>& facets() const { return facets_; }

  /// All local node indices on facet f, in the canonical order of an element
  /// of the facet's kind whose vertices are the facet vertices.
  const std::vector<int>& facetNodes(int f) const { return facetNodes_.at(f); }

  /// Local node indices along edge e, endpoints included, first to second vertex.
  const std::vector<int>& edgeNodes(int e) const { return edgeNodes_.at(e); }

  /// Local index of a lattice point, or -1.
  int indexOf(const Lattice& l) const;

  const Lattice& vertexLattice(int v) const { return lattice_.at(v); }

 private:
  ElementKind kind_;
  int order_;
  std::vector<Lattice> lattice_;
  std::vector<NodeEntity> entity_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<FacetTopo> facets_;
  std::vector<std::vector<int>> facetNodes_;
  std::vector<std::vector<int>> edgeNodes_;
  std::vector<int> lookup_;
  int stride_;
};

/// Cached, thread-safe access to topologies. Orders above kMaxOrder are rejected.
inline constexpr int kMaxOrder = 10;
const ElementTopology& topology(ElementKind kind, int order);

/// Reference vertex edges / facets (order independent).
const std::vector<std::array<int, 2>>& referenceEdges(ElementKind k);
const std::vector<FacetTopo>& referenceFacets(ElementKind k);

}  // namespace homesh

namespace homesh {

/// Integer interpolation weights of lattice point l with respect to the
/// element vertices: barycentric in simplex directions, products of
/// (P - l_d, l_d) in tensor directions. Non-zero exactly on the vertices of
/// the lowest-dimensional entity containing l.
std::vector<long long> vertexWeights(ElementKind k, int order, const Lattice& l);

}  // namespace homesh
