#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "homesh/topology.hpp"

namespace homesh {

using Vec3 = Eigen::Vector3d;
using NodeId = std::int64_t;

/// Association of a mesh node with a CAD entity: a curve parameter t, or
/// surface parameters (u, v).
struct CadLink {
  enum class Target { Curve, Surface };
  Target target = Target::Surface;
  int entity = -1;
  double u = 0.0;  // t for curves
  double v = 0.0;

  static CadLink curve(int id, double t) { return {Target::Curve, id, t, 0.0}; }
  static CadLink surface(int id, double u, double v) { return {Target::Surface, id, u, v}; }
  bool onCurve() const { return target == Target::Curve; }
  bool operator==(const CadLink&) const = default;
};

struct MeshNode {
  NodeId id = 0;
  Vec3 x = Vec3::Zero();
  std::optional<CadLink> cad;
};

enum class Region { NearField, FarField };
std::string_view regionName(Region r);
Region regionFromName(std::string_view s);

struct Element {
  ElementKind kind = ElementKind::Tetrahedron;
  int order = 1;
  std::vector<NodeId> nodes;  // canonical local numbering, see topology.hpp
  Region region = Region::FarField;
  std::vector<std::optional<int>> faceCadTags;  // one per facet; surface id or empty
};

/// (element index, local facet index)
struct FaceRef {
  std::size_t element = 0;
  int face = 0;
  auto operator<=>(const FaceRef&) const = default;
};

struct Mesh {
  std::vector<MeshNode> nodes;
  std::vector<Element> elements;
  std::map<std::string, std::vector<FaceRef>> patches;
  std::string geometryRef;

  NodeId addNode(const Vec3& x, std::optional<CadLink> cad = std::nullopt);
  /// Rebuilds the id -> slot index. Needed after editing `nodes` directly.
  void reindex();
  bool hasNode(NodeId id) const { return index_.count(id) != 0; }
  const MeshNode& node(NodeId id) const;
  MeshNode& node(NodeId id);
  const Vec3& x(NodeId id) const { return node(id).x; }
  NodeId maxNodeId() const;

  /// Physical coordinates of an element's nodes, in local order.
  std::vector<Vec3> coords(const Element& e) const;
  std::vector<Vec3> coords(std::size_t elementIndex) const { return coords(elements.at(elementIndex)); }

  const std::vector<FaceRef>& patch(const std::string& name) const;

 private:
  std::unordered_map<NodeId, std::size_t> index_;
};

struct Violation {
  enum class Type { FaceMismatch, DanglingNode, DuplicateNode, OverSharedFace };
  Type type;
  std::size_t element;
  int face = -1;
  std::string message;
};

struct ConformityReport {
  std::vector<Violation> violations;
  bool conformal() const { return violations.empty(); }
};

/// Throws StructuralError if the element's node count does not match its kind/order
/// or the facet-tag list has the wrong length.
void checkStructure(const Element& e, std::size_t index);

/// Every facet shared between elements must carry identical node-id sets.
/// Facets are matched by their vertex-id sets; a mismatch in the remaining
/// (high-order) facet nodes, or a vertex-id set shared by more than two
/// elements, is a violation. Dangling node references are violations too.
ConformityReport validateConformity(const Mesh& mesh);

struct BoundaryFace {
  ElementKind kind;
  std::vector<NodeId> nodes;  // facet canonical order, outward orientation
};

/// Faces of a patch ordered by (element index, local face index).
std::vector<BoundaryFace> extractBoundaryFaces(const Mesh& mesh, const std::string& patchName);

/// Census keyed by kind and by (kind, region).
struct Census {
  std::map<ElementKind, std::size_t> byKind;
  std::map<std::pair<ElementKind, Region>, std::size_t> byKindRegion;
  std::size_t count(ElementKind k) const {
    auto it = byKind.find(k);
    return it == byKind.end() ? 0 : it->second;
  }
  std::size_t count(ElementKind k, Region r) const {
    auto it = byKindRegion.find({k, r});
    return it == byKindRegion.end() ? 0 : it->second;
  }
};

Census countByKind(const Mesh& mesh);

/// Diagonal of the axis-aligned bounding box of all nodes.
double boundingDiagonal(const Mesh& mesh);

/// Node ids referenced by the given facet of element e (all facet nodes).
std::vector<NodeId> facetNodeIds(const Element& e, int facet);

}  // namespace homesh
