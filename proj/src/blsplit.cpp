#include "homesh/blsplit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "nodekey.hpp"

namespace homesh {

SpacingSpec spacing(int n, double r) {
  if (n < 1) throw ParameterError("layer count must be at least 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("growth ratio must be positive");
  SpacingSpec s{n, r, std::vector<double>(n + 1)};
  for (int k = 0; k <= n; ++k) {
    if (r == 1.0) {
      s.t[k] = static_cast<double>(k) / n;
    } else {
      s.t[k] = std::expm1(k * std::log(r)) / std::expm1(n * std::log(r));
    }
  }
  s.t[0] = 0.0;
  s.t[n] = 1.0;
  return s;
}

namespace {

// (axis, side) of each facet
SplitAxis facetAxis(ElementKind kind, int facet) {
  if (kind == ElementKind::Prism) {
    if (facet == 0) return {2, -1, facet};
    if (facet == 1) return {2, +1, facet};
    throw TopologyError("prism wall must be a triangular facet (facet " + std::to_string(facet) + " is a quadrilateral)");
  }
  static const SplitAxis hex[6] = {{2, -1, 0}, {2, +1, 1}, {1, -1, 2}, {0, +1, 3}, {1, +1, 4}, {0, -1, 5}};
  return hex[facet];
}

}  // namespace

std::vector<SplitAxis> detectWallAxes(ElementKind kind, std::span<const int> wallFacets) {
  if (kind != ElementKind::Prism && kind != ElementKind::Hexahedron)
    throw CapabilityError("only prisms and hexahedra are split, not " + std::string(kindName(kind)));
  std::vector<int> facets(wallFacets.begin(), wallFacets.end());
  std::sort(facets.begin(), facets.end());
  facets.erase(std::unique(facets.begin(), facets.end()), facets.end());
  if (facets.empty()) throw StructuralError("element has no wall facet: not a boundary-layer element");
  const int nf = static_cast<int>(referenceFacets(kind).size());
  std::vector<SplitAxis> out;
  for (int f : facets) {
    if (f < 0 || f >= nf) throw StructuralError("facet index " + std::to_string(f) + " out of range");
    const auto a = facetAxis(kind, f);
    for (const auto& b : out)
      if (b.axis == a.axis) throw TopologyError("opposite wall facets: no consistent split direction");
    out.push_back(a);
  }
  if (out.size() > 2) throw TopologyError("more than two wall facets on one element");
  return out;
}

std::array<double, 2> layerInterval(const SplitAxis& a, const SpacingSpec& s, int q) {
  if (q < 0 || q >= s.n) throw ParameterError("layer index out of range");
  if (a.wallSide < 0) return {-1.0 + 2.0 * s.t[q], -1.0 + 2.0 * s.t[q + 1]};
  return {1.0 - 2.0 * s.t[s.n - q], 1.0 - 2.0 * s.t[s.n - q - 1]};
}

namespace {

int layerCount(std::span<const SplitAxis> axes, const SpacingSpec& s) {
  int c = 1;
  for (std::size_t i = 0; i < axes.size(); ++i) c *= s.n;
  return c;
}

// Layer index per axis of sub-element `sub`; first axis slowest.
std::array<int, 3> layersOf(int sub, std::size_t naxes, const SpacingSpec& s) {
  std::array<int, 3> q{0, 0, 0};
  for (std::size_t a = naxes; a-- > 0;) {
    q[a] = sub % s.n;
    sub /= s.n;
  }
  return q;
}

Vec3 subReference(const Vec3& xi, std::span<const SplitAxis> axes, const std::array<int, 3>& q, const SpacingSpec& s) {
  Vec3 out = xi;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto [lo, hi] = layerInterval(axes[a], s, q[a]);
    out[axes[a].axis] = lo + 0.5 * (hi - lo) * (xi[axes[a].axis] + 1.0);
  }
  return out;
}

// Whether facet f of sub-element with layers q lies on the same facet of the macro element.
bool onMacroFacet(ElementKind kind, int f, std::span<const SplitAxis> axes, const std::array<int, 3>& q,
                  const SpacingSpec& s) {
  if (kind == ElementKind::Prism && f >= 2) return true;
  const auto fa = facetAxis(kind, f);
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (fa.axis == axes[a].axis) return fa.wallSide < 0 ? q[a] == 0 : q[a] == s.n - 1;
  return true;
}

void checkSpec(const SpacingSpec& s) {
  if (s.n < 1 || static_cast<int>(s.t.size()) != s.n + 1) throw ParameterError("malformed spacing");
}

}  // namespace

std::vector<ElementMapping> splitElement(const ElementMapping& macro, std::span<const SplitAxis> axes,
                                         const SpacingSpec& s) {
  checkSpec(s);
  if (axes.empty() || axes.size() > 2) throw ParameterError("one or two split axes expected");
  if (!checkValidity(macro).valid) throw ValidityError("macro element is invalid; refusing to split");
  const auto& ref = macro.ref();
  std::vector<ElementMapping> out;
  const int count = layerCount(axes, s);
  out.reserve(count);
  for (int sub = 0; sub < count; ++sub) {
    const auto q = layersOf(sub, axes.size(), s);
    std::vector<Vec3> x;
    x.reserve(ref.size());
    for (const auto& xi : ref.nodes()) x.push_back(macro.eval(subReference(xi, axes, q, s)));
    out.emplace_back(ref, std::move(x));
  }
  return out;
}

namespace {

using detail::NodeKey;
using detail::NodeKeyHash;

// Sub-element nodes of one macro element: either an existing macro node id or a
// key with the position computed from the macro map.
struct SplitNodes {
  std::vector<NodeKey> keys;  // empty key: existing node
  std::vector<NodeId> existing;
  std::vector<Vec3> x;
};

SplitNodes splitNodes(const Mesh& mesh, const Element& e, std::span<const SplitAxis> axes, const SpacingSpec& s) {
  const int p = e.order;
  const auto& topo = topology(e.kind, p);
  const ElementMapping macro(mesh, e);
  const auto& ref = macro.ref();
  const int count = layerCount(axes, s);
  const std::size_t nn = topo.size();
  SplitNodes out;
  out.keys.resize(count * nn);
  out.existing.assign(count * nn, -1);
  out.x.resize(count * nn);
  const long long top = static_cast<long long>(s.n) * p;
  for (int sub = 0; sub < count; ++sub) {
    const auto q = layersOf(sub, axes.size(), s);
    for (std::size_t local = 0; local < nn; ++local) {
      const std::size_t slot = sub * nn + local;
      Lattice base = topo.lattice()[local];
      std::array<long long, 2> wallIndex{};
      std::array<bool, 2> inner{false, false};
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const int ax = axes[a].axis, m = base[ax];
        const int wallLattice = axes[a].wallSide < 0 ? 0 : p;
        const long long k = axes[a].wallSide < 0 ? static_cast<long long>(q[a]) * p + m
                                                 : static_cast<long long>(s.n - q[a]) * p - m;
        if (k == 0) {
          base[ax] = wallLattice;
        } else if (k == top) {
          base[ax] = p - wallLattice;
        } else {
          base[ax] = wallLattice;
          inner[a] = true;
          wallIndex[a] = k;
        }
      }
      if (!inner[0] && !inner[1]) {
        out.existing[slot] = e.nodes[topo.indexOf(base)];
        continue;
      }
      NodeKey key{{e.nodes[topo.indexOf(base)], 0}};
      for (std::size_t a = 0; a < axes.size(); ++a) {
        if (!inner[a]) continue;
        Lattice far = base;
        far[axes[a].axis] = p - far[axes[a].axis];
        key.emplace_back(e.nodes[topo.indexOf(far)], wallIndex[a]);
      }
      std::sort(key.begin() + 1, key.end());
      out.keys[slot] = std::move(key);
      out.x[slot] = macro.eval(subReference(ref.nodes()[local], axes, q, s));
    }
  }
  return out;
}

}  // namespace

SplitResult splitMesh(const Mesh& mesh, const SpacingSpec& s, const std::vector<std::string>& wallPatches,
                      Execution exec) {
  checkSpec(s);
  const bool par = exec == Execution::Parallel;
  const std::size_t ne = mesh.elements.size();
  std::vector<std::vector<int>> wallFacets(ne);
  for (const auto& name : wallPatches)
    for (const auto& f : mesh.patch(name)) {
      if (f.element >= ne) throw StructuralError("patch " + name + " references a missing element");
      wallFacets[f.element].push_back(f.face);
    }
  std::vector<std::vector<SplitAxis>> axes(ne);
  std::vector<std::size_t> toSplit;
  for (std::size_t i = 0; i < ne; ++i) {
    const auto& e = mesh.elements[i];
    if (e.region != Region::NearField || wallFacets[i].empty()) continue;
    if (e.kind != ElementKind::Prism && e.kind != ElementKind::Hexahedron) continue;
    axes[i] = detectWallAxes(e.kind, wallFacets[i]);
    toSplit.push_back(i);
  }

  // validity precondition
  std::vector<char> macroValid(toSplit.size(), 1);
#pragma omp parallel for schedule(dynamic, 16) if (par)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(toSplit.size()); ++k)
    macroValid[k] = checkValidity(ElementMapping(mesh, mesh.elements[toSplit[k]])).valid;
  std::string bad;
  for (std::size_t k = 0; k < toSplit.size(); ++k)
    if (!macroValid[k]) bad += (bad.empty() ? "" : ", ") + std::to_string(toSplit[k]);
  if (!bad.empty()) throw ValidityError("invalid macro elements cannot be split: " + bad);

  SplitResult res;
  res.splitElements = toSplit.size();
  if (s.n == 1) {
    res.mesh = mesh;
    res.macroOf.resize(ne);
    std::iota(res.macroOf.begin(), res.macroOf.end(), std::size_t{0});
    return res;
  }

  std::vector<SplitNodes> parts(toSplit.size());
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(toSplit.size()); ++k) {
    const std::size_t i = toSplit[k];
    parts[k] = splitNodes(mesh, mesh.elements[i], axes[i], s);
  }

  Mesh& out = res.mesh;
  out.nodes = mesh.nodes;
  out.geometryRef = mesh.geometryRef;
  NodeId next = mesh.maxNodeId() + 1;
  std::unordered_map<NodeKey, NodeId, NodeKeyHash> ids;
  std::vector<std::size_t> firstOut(ne);
  std::size_t part = 0;
  for (std::size_t i = 0; i < ne; ++i) {
    const auto& e = mesh.elements[i];
    firstOut[i] = out.elements.size();
    if (part < toSplit.size() && toSplit[part] == i) {
      const auto& sp = parts[part++];
      const auto& topo = topology(e.kind, e.order);
      const std::size_t nn = topo.size();
      const int count = layerCount(axes[i], s);
      for (int sub = 0; sub < count; ++sub) {
        Element se{e.kind, e.order, {}, e.region, {}};
        se.nodes.reserve(nn);
        for (std::size_t local = 0; local < nn; ++local) {
          const std::size_t slot = sub * nn + local;
          if (sp.keys[slot].empty()) {
            se.nodes.push_back(sp.existing[slot]);
            continue;
          }
          auto [it, inserted] = ids.emplace(sp.keys[slot], next);
          if (inserted) out.nodes.push_back({next++, sp.x[slot], std::nullopt});
          se.nodes.push_back(it->second);
        }
        // facets inherit CAD tags where they lie on the macro facet
        const auto q = layersOf(sub, axes[i].size(), s);
        se.faceCadTags.assign(referenceFacets(e.kind).size(), std::nullopt);
        for (std::size_t f = 0; f < se.faceCadTags.size(); ++f)
          if (!e.faceCadTags.empty() && onMacroFacet(e.kind, static_cast<int>(f), axes[i], q, s))
            se.faceCadTags[f] = e.faceCadTags[f];
        out.elements.push_back(std::move(se));
        res.macroOf.push_back(i);
      }
    } else {
      out.elements.push_back(e);
      res.macroOf.push_back(i);
    }
  }
  out.reindex();

  // patches: each macro facet maps to the sub-element facets lying on it
  for (const auto& [name, faces] : mesh.patches) {
    auto& dst = out.patches[name];
    for (const auto& f : faces) {
      const std::size_t i = f.element;
      const std::size_t first = firstOut[i];
      const std::size_t last = i + 1 < ne ? firstOut[i + 1] : out.elements.size();
      for (std::size_t o = first; o < last; ++o) {
        const bool onMacro =
            last - first == 1 ||
            onMacroFacet(mesh.elements[i].kind, f.face, axes[i], layersOf(static_cast<int>(o - first), axes[i].size(), s), s);
        if (onMacro) dst.push_back({o, f.face});
      }
    }
  }

  // sub-element validity
  std::vector<char> isSub(ne, 0), ok(out.elements.size(), 1);
  for (std::size_t i : toSplit) isSub[i] = 1;
#pragma omp parallel for schedule(dynamic, 16) if (par)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out.elements.size()); ++o)
    if (isSub[res.macroOf[o]]) ok[o] = checkValidity(ElementMapping(out, out.elements[o])).valid;
  for (std::size_t o = 0; o < ok.size(); ++o)
    if (!ok[o]) res.invalidElements.push_back(o);

  const auto conf = validateConformity(out);
  if (!conf.conformal())
    throw TopologyError("internal: split mesh is not conformal (" + std::to_string(conf.violations.size()) +
                        " violations)");
  return res;
}

// ---- aspect ratio ---------------------------------------------------------------

namespace {

double minOppositeHeight(const Mesh& mesh, const Element& e, int axis) {
  const auto& topo = topology(e.kind, e.order);
  const int p = e.order;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t local = 0; local < topo.size(); ++local) {
    Lattice l = topo.lattice()[local];
    if (l[axis] != 0) continue;
    l[axis] = p;
    const int other = topo.indexOf(l);
    if (other < 0) continue;
    best = std::min(best, (mesh.x(e.nodes[local]) - mesh.x(e.nodes[other])).norm());
  }
  return best;
}

double minAltitude(const Mesh& mesh, const Element& e) {
  const int nv = numVertices(e.kind);
  double best = std::numeric_limits<double>::infinity();
  for (int v = 0; v < nv; ++v) {
    std::vector<Vec3> others;
    for (int w = 0; w < nv; ++w)
      if (w != v) others.push_back(mesh.x(e.nodes[w]));
    const Vec3 x = mesh.x(e.nodes[v]);
    double h;
    if (others.size() == 3) {
      const Vec3 n = (others[1] - others[0]).cross(others[2] - others[0]);
      h = std::abs((x - others[0]).dot(n)) / n.norm();
    } else {
      const Vec3 d = others[1] - others[0];
      h = (x - others[0]).cross(d).norm() / d.norm();
    }
    best = std::min(best, h);
  }
  return best;
}

}  // namespace

double aspectRatio(const Mesh& mesh, const Element& e) {
  double longest = 0.0;
  for (const auto& ed : referenceEdges(e.kind))
    longest = std::max(longest, (mesh.x(e.nodes[ed[0]]) - mesh.x(e.nodes[ed[1]])).norm());
  double height = std::numeric_limits<double>::infinity();
  switch (e.kind) {
    case ElementKind::Segment: return 1.0;
    case ElementKind::Triangle:
    case ElementKind::Tetrahedron: height = minAltitude(mesh, e); break;
    case ElementKind::Quadrilateral:
      for (int a = 0; a < 2; ++a) height = std::min(height, minOppositeHeight(mesh, e, a));
      break;
    case ElementKind::Prism: height = minOppositeHeight(mesh, e, 2); break;
    case ElementKind::Hexahedron:
      for (int a = 0; a < 3; ++a) height = std::min(height, minOppositeHeight(mesh, e, a));
      break;
  }
  if (!(height > 0.0)) return std::numeric_limits<double>::infinity();
  return longest / height;
}

AspectReport aspectRatioReport(const Mesh& mesh, Execution exec) {
  AspectReport rep;
  rep.perElement.resize(mesh.elements.size());
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(mesh.elements.size()); ++i)
    rep.perElement[i] = aspectRatio(mesh, mesh.elements[i]);
  rep.edges = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  rep.counts.assign(rep.edges.size(), 0);
  double sum = 0.0;
  for (double r : rep.perElement) {
    rep.max = std::max(rep.max, r);
    sum += r;
    const auto it = std::upper_bound(rep.edges.begin(), rep.edges.end(), r);
    const auto bin = it == rep.edges.begin() ? 0 : static_cast<std::size_t>(it - rep.edges.begin()) - 1;
    ++rep.counts[bin];
  }
  if (!rep.perElement.empty()) rep.mean = sum / static_cast<double>(rep.perElement.size());
  return rep;
}

}  // namespace homesh
