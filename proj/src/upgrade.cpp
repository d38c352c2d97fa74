#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "homesh/hogen.hpp"
#include "nodekey.hpp"

namespace homesh {

namespace {

using detail::makeKey;
using detail::NodeKey;
using detail::NodeKeyHash;

struct EdgeTask {
  NodeId a, b;             // a < b
  std::set<int> surfaces;  // tags of CAD faces containing the edge
  NodeId firstId = 0;      // ids firstId .. firstId + P - 2, ordered from a to b
};

struct FaceTask {
  std::size_t element;
  int facet;
  std::optional<int> surface;
  NodeId firstId = 0;
};

std::vector<NodeId> vertexIds(const Element& e) {
  return {e.nodes.begin(), e.nodes.begin() + numVertices(e.kind)};
}

}  // namespace

UpgradeResult upgradeMesh(const Mesh& linear, const CadRegistry& reg, int order, const OptimizerConfig& cfg,
                          Execution exec) {
  const bool par = exec == Execution::Parallel;
  if (order < 1 || order > kMaxOrder) throw ParameterError("target order must lie in [1, " + std::to_string(kMaxOrder) + "]");
  for (std::size_t i = 0; i < linear.elements.size(); ++i) {
    const auto& e = linear.elements[i];
    checkStructure(e, i);
    if (e.order != 1) throw CapabilityError("upgradeMesh expects a linear mesh; element " + std::to_string(i) + " has order " + std::to_string(e.order));
    if (dimension(e.kind) != 3) throw CapabilityError("upgradeMesh handles volume elements only");
    for (NodeId id : e.nodes)
      if (!linear.hasNode(id)) throw TopologyError("element " + std::to_string(i) + " references missing node " + std::to_string(id));
  }
  const int p = order;
  UpgradeResult result;
  Mesh& out = result.mesh;
  out.nodes = linear.nodes;
  out.reindex();
  out.patches = linear.patches;
  out.geometryRef = linear.geometryRef;

  // ---- entity discovery (deterministic order) --------------------------------
  std::map<std::pair<NodeId, NodeId>, EdgeTask> edges;
  std::map<std::vector<NodeId>, FaceTask> faces;
  for (std::size_t i = 0; i < linear.elements.size(); ++i) {
    const auto& e = linear.elements[i];
    for (const auto& ed : referenceEdges(e.kind)) {
      const NodeId a = e.nodes[ed[0]], b = e.nodes[ed[1]];
      auto& t = edges[{std::min(a, b), std::max(a, b)}];
      t.a = std::min(a, b);
      t.b = std::max(a, b);
    }
    const auto& facets = referenceFacets(e.kind);
    for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
      std::vector<NodeId> key;
      for (int v : facets[f].vertices) key.push_back(e.nodes[v]);
      std::sort(key.begin(), key.end());
      const std::optional<int> tag = e.faceCadTags.empty() ? std::nullopt : e.faceCadTags[f];
      auto it = faces.find(key);
      if (it == faces.end()) {
        faces.emplace(key, FaceTask{i, f, tag, 0});
      } else if (!it->second.surface && tag) {
        it->second.surface = tag;
      }
      if (tag) {
        const auto& fv = facets[f].vertices;
        for (std::size_t k = 0; k < fv.size(); ++k) {
          const NodeId a = e.nodes[fv[k]], b = e.nodes[fv[(k + 1) % fv.size()]];
          edges[{std::min(a, b), std::max(a, b)}].surfaces.insert(*tag);
        }
      }
    }
  }
  for (const auto& [k, f] : faces)
    if (f.surface && !reg.hasSurface(*f.surface)) throw LookupError("face tagged with unknown surface " + std::to_string(*f.surface));

  // ---- id allocation ----------------------------------------------------------
  NodeId next = linear.maxNodeId() + 1;
  std::unordered_map<NodeKey, NodeId, NodeKeyHash> keyToId;
  std::vector<MeshNode> fresh;
  auto allocate = [&](const NodeKey& key) {
    auto [it, inserted] = keyToId.emplace(key, next);
    if (inserted) {
      fresh.push_back({next, Vec3::Zero(), std::nullopt});
      ++next;
    }
    return it->second;
  };
  for (const auto& n : linear.nodes) keyToId.emplace(NodeKey{{n.id, 1}}, n.id);

  std::vector<EdgeTask*> edgeList;
  for (auto& [k, t] : edges) {
    t.firstId = next;
    for (int m = 1; m < p; ++m) allocate(makeKey({t.a, t.b}, {p - m, m}));
    edgeList.push_back(&t);
  }
  std::vector<FaceTask*> faceList;
  for (auto& [k, f] : faces) {
    const auto& e = linear.elements[f.element];
    const auto& topo = topology(e.kind, p);
    f.firstId = next;
    const auto vids = vertexIds(e);
    for (int local : topo.facetNodes(f.facet))
      if (topo.entities()[local].dim == 2) allocate(makeKey(vids, vertexWeights(e.kind, p, topo.lattice()[local])));
    faceList.push_back(&f);
  }
  std::vector<NodeId> volumeFirst(linear.elements.size());
  for (std::size_t i = 0; i < linear.elements.size(); ++i) {
    const auto& topo = topology(linear.elements[i].kind, p);
    volumeFirst[i] = next;
    for (const auto& ent : topo.entities())
      if (ent.dim == 3) fresh.push_back({next++, Vec3::Zero(), std::nullopt});
  }
  const NodeId freshBase = linear.maxNodeId() + 1;
  auto freshNode = [&](NodeId id) -> MeshNode& { return fresh[static_cast<std::size_t>(id - freshBase)]; };
  auto position = [&](NodeId id) -> const Vec3& {
    return id >= freshBase ? freshNode(id).x : linear.x(id);
  };

  // element node lists
  for (std::size_t i = 0; i < linear.elements.size(); ++i) {
    const auto& e = linear.elements[i];
    const auto& topo = topology(e.kind, p);
    Element ne{e.kind, p, {}, e.region, e.faceCadTags};
    const auto vids = vertexIds(e);
    NodeId vol = volumeFirst[i];
    for (std::size_t local = 0; local < topo.size(); ++local) {
      const auto& ent = topo.entities()[local];
      if (ent.dim == 0) {
        ne.nodes.push_back(e.nodes[ent.index]);
      } else if (ent.dim == 3) {
        ne.nodes.push_back(vol++);
      } else {
        ne.nodes.push_back(keyToId.at(makeKey(vids, vertexWeights(e.kind, p, topo.lattice()[local]))));
      }
    }
    out.elements.push_back(std::move(ne));
  }

  // ---- curves and surface edges ---------------------------------------------
  auto& rep = result.report;
  std::vector<int> edgeKind(edgeList.size(), 0);  // 0 straight, 1 surface, 2 curve
  std::vector<int> edgeWarn(edgeList.size(), 0);
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::size_t k = 0; k < edgeList.size(); ++k) {
    const auto& t = *edgeList[k];
    const Vec3 xa = linear.x(t.a), xb = linear.x(t.b);
    std::vector<Vec3> x(p + 1);
    std::vector<std::optional<CadLink>> links(p + 1);
    bool done = false;
    if (t.surfaces.size() >= 2) {
      const int s1 = *t.surfaces.begin(), s2 = *std::next(t.surfaces.begin());
      // the candidate curve passing through both end vertices
      std::optional<int> best;
      double bestD = 0.0;
      std::array<double, 2> bestT{};
      for (int cid : reg.curvesBetween(s1, s2)) {
        const auto& c = reg.curve(cid);
        auto param = [&](NodeId v, const Vec3& pos) {
          const auto& n = linear.node(v);
          if (n.cad && n.cad->onCurve() && n.cad->entity == cid) return std::pair<double, double>{n.cad->u, 0.0};
          const auto pr = projectToCurve(c, pos);
          return std::pair<double, double>{pr.t, pr.distance};
        };
        const auto [ta, da] = param(t.a, xa);
        const auto [tb, db] = param(t.b, xb);
        if (!best || da + db < bestD) {
          best = cid;
          bestD = da + db;
          bestT = {ta, tb};
        }
      }
      if (best) {
        const auto& c = reg.curve(*best);
        const auto r = optimizeCurveNodes(c, bestT[0], bestT[1], p, cfg);
        edgeWarn[k] = r.opt.status != OptStatus::Converged;
        for (int m = 1; m < p; ++m) {
          x[m] = evalCurve(c, r.t[m]);
          links[m] = CadLink::curve(*best, r.t[m]);
        }
        edgeKind[k] = 2;
        done = true;
      } else {
        edgeWarn[k] = 1;  // no junction curve: fall back to the first surface
      }
    }
    if (!done && !t.surfaces.empty()) {
      const int sid = *t.surfaces.begin();
      const auto& s = reg.surface(sid);
      auto uvOf = [&](NodeId v, const Vec3& pos) {
        const auto& n = linear.node(v);
        if (n.cad && !n.cad->onCurve() && n.cad->entity == sid) return Eigen::Vector2d(n.cad->u, n.cad->v);
        const auto pr = projectToSurface(s, pos);
        return Eigen::Vector2d(pr.u, pr.v);
      };
      const auto r = optimizeSurfaceEdgeNodes(s, uvOf(t.a, xa), uvOf(t.b, xb), p, cfg);
      edgeWarn[k] |= r.opt.status != OptStatus::Converged;
      for (int m = 1; m < p; ++m) {
        x[m] = r.x[m];
        links[m] = CadLink::surface(sid, r.uv[m][0], r.uv[m][1]);
      }
      edgeKind[k] = 1;
      done = true;
    }
    if (!done) {
      const auto g = gllPoints(p);
      for (int m = 1; m < p; ++m) x[m] = xa + 0.5 * (g[m] + 1.0) * (xb - xa);
    }
    for (int m = 1; m < p; ++m) {
      auto& n = freshNode(t.firstId + m - 1);
      n.x = x[m];
      n.cad = links[m];
    }
  }
  for (std::size_t k = 0; k < edgeList.size(); ++k) {
    (edgeKind[k] == 2 ? rep.curveEdges : edgeKind[k] == 1 ? rep.surfaceEdges : rep.straightEdges)++;
    rep.optimizerWarnings += edgeWarn[k];
  }

  // ---- faces ------------------------------------------------------------------
  std::vector<int> faceWarn(faceList.size(), 0);
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::size_t k = 0; k < faceList.size(); ++k) {
    const auto& f = *faceList[k];
    const auto& e = out.elements[f.element];
    const auto& topo = topology(e.kind, p);
    const auto& fn = topo.facetNodes(f.facet);
    const ElementKind fk = topo.facets()[f.facet].kind;
    const auto& ftopo = topology(fk, p);
    std::vector<Vec3> x;
    for (int local : fn) x.push_back(position(e.nodes[local]));
    bool interior = false;
    for (const auto& ent : ftopo.entities()) interior |= ent.dim == 2;
    if (!interior) continue;
    std::vector<std::optional<CadLink>> links(fn.size());
    if (f.surface && fk == ElementKind::Triangle) {
      const auto& s = reg.surface(*f.surface);
      const auto r = optimizeFaceInteriorNodes(s, x, p, cfg);
      faceWarn[k] = r.opt.status != OptStatus::Converged;
      for (std::size_t i = 0; i < fn.size(); ++i)
        if (ftopo.entities()[i].dim == 2) {
          x[i] = r.x[i];
          links[i] = CadLink::surface(*f.surface, r.uv[i][0], r.uv[i][1]);
        }
    } else if (f.surface) {
      // transfinite interpolation in the parameter plane
      const auto& s = reg.surface(*f.surface);
      std::vector<Vec3> uv(fn.size(), Vec3::Zero());
      for (std::size_t i = 0; i < fn.size(); ++i) {
        if (ftopo.entities()[i].dim == 2) continue;
        const auto& node = e.nodes[fn[i]] >= freshBase ? freshNode(e.nodes[fn[i]]) : linear.node(e.nodes[fn[i]]);
        if (node.cad && !node.cad->onCurve() && node.cad->entity == *f.surface) {
          uv[i] = Vec3(node.cad->u, node.cad->v, 0.0);
        } else {
          const auto pr = projectToSurface(s, node.x);
          uv[i] = Vec3(pr.u, pr.v, 0.0);
        }
      }
      placeInteriorNodes(fk, p, uv);
      for (std::size_t i = 0; i < fn.size(); ++i)
        if (ftopo.entities()[i].dim == 2) {
          const double u = std::clamp(uv[i].x(), s.uLo, s.uHi), v = std::clamp(uv[i].y(), s.vLo, s.vHi);
          x[i] = evalSurface(s, u, v);
          links[i] = CadLink::surface(*f.surface, u, v);
        }
    } else {
      placeInteriorNodes(fk, p, x);
    }
    for (std::size_t i = 0; i < fn.size(); ++i)
      if (ftopo.entities()[i].dim == 2) {
        auto& n = freshNode(e.nodes[fn[i]]);
        n.x = x[i];
        n.cad = links[i];
      }
  }
  for (std::size_t k = 0; k < faceList.size(); ++k) {
    (faceList[k]->surface ? rep.cadFaces : rep.blendedFaces)++;
    rep.optimizerWarnings += faceWarn[k];
  }

  // ---- volume interiors --------------------------------------------------------
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::size_t i = 0; i < out.elements.size(); ++i) {
    const auto& e = out.elements[i];
    const auto& topo = topology(e.kind, p);
    std::vector<Vec3> x(topo.size());
    for (std::size_t l = 0; l < topo.size(); ++l)
      x[l] = topo.entities()[l].dim == 3 ? Vec3::Zero() : position(e.nodes[l]);
    placeInteriorNodes(e.kind, p, x);
    for (std::size_t l = 0; l < topo.size(); ++l)
      if (topo.entities()[l].dim == 3) freshNode(e.nodes[l]).x = x[l];
  }

  for (auto& n : fresh) out.nodes.push_back(std::move(n));
  out.reindex();

  // ---- validity ------------------------------------------------------------------
  rep.validity = checkMeshValidity(out, exec);
  for (std::size_t i = 0; i < out.elements.size(); ++i)
    if (!rep.validity[i].valid) rep.invalidElements.push_back(i);
  return result;
}

}  // namespace homesh
