#include "homesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "homesh/errors.hpp"

namespace homesh {

std::string_view regionName(Region r) { return r == Region::NearField ? "near-field" : "far-field"; }

Region regionFromName(std::string_view s) {
  if (s == "near-field") return Region::NearField;
  if (s == "far-field") return Region::FarField;
  throw LookupError("unknown region tag '" + std::string(s) + "'");
}

NodeId Mesh::addNode(const Vec3& x, std::optional<CadLink> cad) {
  const NodeId id = nodes.empty() ? 0 : nodes.back().id + 1;
  index_[id] = nodes.size();
  nodes.push_back({id, x, cad});
  return id;
}

void Mesh::reindex() {
  index_.clear();
  index_.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!index_.emplace(nodes[i].id, i).second)
      throw StructuralError("duplicate node id " + std::to_string(nodes[i].id));
  }
}

const MeshNode& Mesh::node(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("no node with id " + std::to_string(id));
  return nodes[it->second];
}

MeshNode& Mesh::node(NodeId id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("no node with id " + std::to_string(id));
  return nodes[it->second];
}

NodeId Mesh::maxNodeId() const {
  NodeId m = -1;
  for (const auto& n : nodes) m = std::max(m, n.id);
  return m;
}

std::vector<Vec3> Mesh::coords(const Element& e) const {
  std::vector<Vec3> out;
  out.reserve(e.nodes.size());
  for (NodeId id : e.nodes) out.push_back(x(id));
  return out;
}

const std::vector<FaceRef>& Mesh::patch(const std::string& name) const {
  auto it = patches.find(name);
  if (it == patches.end()) throw LookupError("unknown patch '" + name + "'");
  return it->second;
}

void checkStructure(const Element& e, std::size_t index) {
  if (e.order < 1 || e.order > kMaxOrder)
    throw StructuralError("element " + std::to_string(index) + ": unsupported order " +
                          std::to_string(e.order));
  const auto expected = nodeCount(e.kind, e.order);
  if (e.nodes.size() != expected)
    throw StructuralError("element " + std::to_string(index) + " (" + std::string(kindName(e.kind)) +
                          ", P=" + std::to_string(e.order) + "): has " +
                          std::to_string(e.nodes.size()) + " nodes, expected " +
                          std::to_string(expected));
  if (!e.faceCadTags.empty() && e.faceCadTags.size() != referenceFacets(e.kind).size())
    throw StructuralError("element " + std::to_string(index) + ": faceCadTags has " +
                          std::to_string(e.faceCadTags.size()) + " entries");
}

std::vector<NodeId> facetNodeIds(const Element& e, int facet) {
  const auto& topo = topology(e.kind, e.order);
  std::vector<NodeId> ids;
  for (int local : topo.facetNodes(facet)) ids.push_back(e.nodes[local]);
  return ids;
}

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<NodeId>& v) const noexcept {
    std::size_t h = v.size();
    for (NodeId x : v) h ^= std::hash<NodeId>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

ConformityReport validateConformity(const Mesh& mesh) {
  ConformityReport report;
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) checkStructure(mesh.elements[i], i);

  for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
    const auto& e = mesh.elements[i];
    std::unordered_set<NodeId> seen;
    for (NodeId id : e.nodes) {
      if (!mesh.hasNode(id))
        report.violations.push_back({Violation::Type::DanglingNode, i, -1,
                                     "element " + std::to_string(i) + " references missing node " +
                                         std::to_string(id)});
      if (!seen.insert(id).second)
        report.violations.push_back({Violation::Type::DuplicateNode, i, -1,
                                     "element " + std::to_string(i) + " repeats node " +
                                         std::to_string(id)});
    }
  }

  // Only 3D facets (or 2D facets of surface meshes) are matched.
  struct Incidence {
    std::size_t element;
    int face;
    std::vector<NodeId> allSorted;
  };
  std::unordered_map<std::vector<NodeId>, std::vector<Incidence>, VecHash> byVertices;
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
    const auto& e = mesh.elements[i];
    const auto& facets = referenceFacets(e.kind);
    for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
      std::vector<NodeId> verts;
      for (int v : facets[f].vertices) verts.push_back(e.nodes[v]);
      std::sort(verts.begin(), verts.end());
      auto all = facetNodeIds(e, f);
      std::sort(all.begin(), all.end());
      byVertices[verts].push_back({i, f, std::move(all)});
    }
  }
  std::vector<Violation> faceViolations;
  for (auto& [verts, inc] : byVertices) {
    if (inc.size() > 2) {
      for (std::size_t k = 2; k < inc.size(); ++k)
        faceViolations.push_back({Violation::Type::OverSharedFace, inc[k].element, inc[k].face,
                                  "face shared by more than two elements"});
    }
    if (inc.size() >= 2 && inc[0].allSorted != inc[1].allSorted) {
      faceViolations.push_back({Violation::Type::FaceMismatch, inc[1].element, inc[1].face,
                                "element " + std::to_string(inc[1].element) + " face " +
                                    std::to_string(inc[1].face) + " does not match element " +
                                    std::to_string(inc[0].element) + " face " +
                                    std::to_string(inc[0].face)});
    }
  }
  // Faces seen once may still coincide geometrically with another singly-seen
  // face whose vertex ids differ (duplicated nodes): that is non-conformal too.
  const double tol = 1e-8 * std::max(boundingDiagonal(mesh), 1e-300);
  struct Lone {
    std::size_t element;
    int face;
    std::vector<Vec3> pts;  // sorted lexicographically
  };
  std::vector<Lone> lone;
  for (auto& [verts, inc] : byVertices) {
    if (inc.size() != 1) continue;
    const auto& e = mesh.elements[inc[0].element];
    std::vector<Vec3> pts;
    bool ok = true;
    for (int v : referenceFacets(e.kind)[inc[0].face].vertices) {
      if (!mesh.hasNode(e.nodes[v])) { ok = false; break; }
      pts.push_back(mesh.x(e.nodes[v]));
    }
    if (!ok) continue;
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    lone.push_back({inc[0].element, inc[0].face, std::move(pts)});
  }
  std::sort(lone.begin(), lone.end(), [](const Lone& a, const Lone& b) {
    return std::tie(a.element, a.face) < std::tie(b.element, b.face);
  });
  const double cell = 10.0 * tol;
  std::unordered_map<std::vector<NodeId>, std::vector<std::size_t>, VecHash> grid;
  auto cellKey = [&](const Vec3& c) {
    return std::vector<NodeId>{static_cast<NodeId>(std::floor(c.x() / cell)),
                               static_cast<NodeId>(std::floor(c.y() / cell)),
                               static_cast<NodeId>(std::floor(c.z() / cell))};
  };
  for (std::size_t k = 0; k < lone.size(); ++k) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : lone[k].pts) c += p;
    c /= static_cast<double>(lone[k].pts.size());
    auto key = cellKey(c);
    bool matched = false;
    for (NodeId dx = -1; dx <= 1 && !matched; ++dx)
      for (NodeId dy = -1; dy <= 1 && !matched; ++dy)
        for (NodeId dz = -1; dz <= 1 && !matched; ++dz) {
          auto it = grid.find({key[0] + dx, key[1] + dy, key[2] + dz});
          if (it == grid.end()) continue;
          for (std::size_t other : it->second) {
            const auto& a = lone[other].pts;
            const auto& b = lone[k].pts;
            if (a.size() != b.size()) continue;
            bool same = true;
            for (std::size_t q = 0; q < a.size() && same; ++q) {
              same = false;
              for (std::size_t r = 0; r < b.size() && !same; ++r) same = (a[q] - b[r]).norm() <= tol;
            }
            if (same) {
              faceViolations.push_back(
                  {Violation::Type::FaceMismatch, lone[k].element, lone[k].face,
                   "element " + std::to_string(lone[k].element) + " face " +
                       std::to_string(lone[k].face) + " coincides with element " +
                       std::to_string(lone[other].element) + " face " +
                       std::to_string(lone[other].face) + " but uses different node ids"});
              matched = true;
              break;
            }
          }
        }
    grid[key].push_back(k);
  }

  std::sort(faceViolations.begin(), faceViolations.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.element, a.face) < std::tie(b.element, b.face);
  });
  for (auto& v : faceViolations) report.violations.push_back(std::move(v));
  return report;
}

std::vector<BoundaryFace> extractBoundaryFaces(const Mesh& mesh, const std::string& patchName) {
  auto refs = mesh.patch(patchName);
  std::sort(refs.begin(), refs.end());
  std::vector<BoundaryFace> out;
  out.reserve(refs.size());
  for (const auto& r : refs) {
    const auto& e = mesh.elements.at(r.element);
    const auto& facets = referenceFacets(e.kind);
    if (r.face < 0 || r.face >= static_cast<int>(facets.size()))
      throw StructuralError("patch '" + patchName + "' references face " + std::to_string(r.face) +
                            " of element " + std::to_string(r.element));
    out.push_back({facets[r.face].kind, facetNodeIds(e, r.face)});
  }
  return out;
}

Census countByKind(const Mesh& mesh) {
  Census c;
  for (auto k : kAllKinds) {
    c.byKind[k] = 0;
    c.byKindRegion[{k, Region::NearField}] = 0;
    c.byKindRegion[{k, Region::FarField}] = 0;
  }
  for (const auto& e : mesh.elements) {
    ++c.byKind[e.kind];
    ++c.byKindRegion[{e.kind, e.region}];
  }
  return c;
}

double boundingDiagonal(const Mesh& mesh) {
  if (mesh.nodes.empty()) return 0.0;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& n : mesh.nodes) {
    lo = lo.cwiseMin(n.x);
    hi = hi.cwiseMax(n.x);
  }
  return (hi - lo).norm();
}

}  // namespace homesh
