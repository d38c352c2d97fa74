#include "homesh/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace homesh {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Canonical text
// ---------------------------------------------------------------------------

void putNumber(std::string& out, const json& v) {
  if (v.is_number_integer()) {
    out += std::to_string(v.get<long long>());
    return;
  }
  if (v.is_number_unsigned()) {
    out += std::to_string(v.get<unsigned long long>());
    return;
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw IoError("cannot write non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  out += buf;
  // keep floats floats on the next read
  if (std::string_view(buf).find_first_of(".e") == std::string_view::npos) out += ".0";
}

void putInline(std::string& out, const json& v) {
  switch (v.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, x] : v.items()) {
        if (!first) out += ", ";
        first = false;
        out += json(k).dump();
        out += ": ";
        putInline(out, x);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        putInline(out, v[i]);
      }
      out += ']';
      break;
    }
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: putNumber(out, v); break;
    default: out += v.dump(); break;
  }
}

bool expandArray(const json& v) {
  if (v.empty()) return false;
  for (const auto& x : v)
    if (!x.is_structured()) return false;
  return true;
}

// Objects outside arrays and arrays of containers get one entry per line.
void putValue(std::string& out, const json& v, int depth) {
  const std::string pad(2 * depth + 2, ' ');
  const std::string close(2 * depth, ' ');
  if (v.is_object() && !v.empty()) {
    out += "{\n";
    std::size_t i = 0;
    for (const auto& [k, x] : v.items()) {
      out += pad + json(k).dump() + ": ";
      putValue(out, x, depth + 1);
      out += ++i < v.size() ? ",\n" : "\n";
    }
    out += close + '}';
  } else if (v.is_array() && expandArray(v)) {
    out += "[\n";
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += pad;
      if (v[i].is_array())
        putValue(out, v[i], depth + 1);
      else
        putInline(out, v[i]);
      out += i + 1 < v.size() ? ",\n" : "\n";
    }
    out += close + ']';
  } else {
    putInline(out, v);
  }
}

std::string canonical(const json& v) {
  std::string out;
  putValue(out, v, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

json vec(const Vec3& x) { return json::array({x.x(), x.y(), x.z()}); }

json vecs(const std::vector<Vec3>& xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(vec(x));
  return a;
}

json encodeCurve(const CadCurve& c) {
  json j = {{"id", c.id},
            {"kind", std::string(curveKindName(c))},
            {"range", json::array({c.tLo, c.tHi})},
            {"adjacent", c.adjacentSurfaces}};
  std::visit(Overloaded{[&](const LineCurve& s) {
                          j["a"] = vec(s.a);
                          j["b"] = vec(s.b);
                        },
                        [&](const ArcCurve& s) {
                          j["center"] = vec(s.center);
                          j["radius"] = s.radius;
                          j["e1"] = vec(s.e1);
                          j["e2"] = vec(s.e2);
                        },
                        [&](const BSplineCurve& s) {
                          j["degree"] = s.degree;
                          j["knots"] = s.knots;
                          j["poles"] = vecs(s.poles);
                        },
                        [&](const HelixCurve& s) {
                          j["center"] = vec(s.center);
                          j["radius"] = s.radius;
                          j["pitch"] = s.pitch;
                          j["e1"] = vec(s.e1);
                          j["e2"] = vec(s.e2);
                          j["e3"] = vec(s.e3);
                        },
                        [&](const IsoCurve& s) {
                          j["surface"] = s.surface;
                          j["alongU"] = s.alongU;
                          j["fixed"] = s.fixed;
                        }},
             c.shape);
  return j;
}

json encodeSurface(const CadSurface& s) {
  json j = {{"id", s.id},
            {"kind", std::string(surfaceKindName(s))},
            {"u", json::array({s.uLo, s.uHi})},
            {"v", json::array({s.vLo, s.vHi})}};
  auto frame = [&](const Vec3& c, double r, const Vec3& e1, const Vec3& e2, const Vec3& e3) {
    j["center"] = vec(c);
    j["radius"] = r;
    j["e1"] = vec(e1);
    j["e2"] = vec(e2);
    j["e3"] = vec(e3);
  };
  auto section = [&](const Vec3& o, double chord, double tau, const Vec3& ex, const Vec3& ey, const Vec3& ez) {
    j["origin"] = vec(o);
    j["chord"] = chord;
    j["thickness"] = tau;
    j["ex"] = vec(ex);
    j["ey"] = vec(ey);
    j["ez"] = vec(ez);
  };
  std::visit(Overloaded{[&](const PlaneSurface& p) {
                          j["origin"] = vec(p.origin);
                          j["eu"] = vec(p.eu);
                          j["ev"] = vec(p.ev);
                        },
                        [&](const CylinderSurface& p) { frame(p.center, p.radius, p.e1, p.e2, p.e3); },
                        [&](const SphereSurface& p) { frame(p.center, p.radius, p.e1, p.e2, p.e3); },
                        [&](const BSplinePatch& p) {
                          j["degreeU"] = p.degreeU;
                          j["degreeV"] = p.degreeV;
                          j["knotsU"] = p.knotsU;
                          j["knotsV"] = p.knotsV;
                          j["nu"] = p.nu;
                          j["nv"] = p.nv;
                          j["poles"] = vecs(p.poles);
                        },
                        [&](const ExtrudedSection& p) {
                          section(p.origin, p.chord, p.thickness, p.ex, p.ey, p.ez);
                          j["wrapRadius"] = p.wrapRadius;
                        },
                        [&](const LoftedSection& p) { section(p.origin, p.chord, p.thickness, p.ex, p.ey, p.ez); }},
             s.shape);
  return j;
}

json encodeGeometry(const CadRegistry& reg, const std::string& name) {
  json curves = json::array(), surfaces = json::array();
  for (int id : reg.curveIds()) curves.push_back(encodeCurve(reg.curve(id)));
  for (int id : reg.surfaceIds()) surfaces.push_back(encodeSurface(reg.surface(id)));
  return {{"name", name},
          {"bbox", json::array({vec(reg.bbox[0]), vec(reg.bbox[1])})},
          {"curves", curves},
          {"surfaces", surfaces}};
}

json encodeNode(const MeshNode& n) {
  json j = json::array({n.id, n.x.x(), n.x.y(), n.x.z()});
  if (n.cad) {
    if (n.cad->onCurve())
      j.push_back({{"curve", n.cad->entity}, {"t", n.cad->u}});
    else
      j.push_back({{"surface", n.cad->entity}, {"u", n.cad->u}, {"v", n.cad->v}});
  }
  return j;
}

json encodeElement(const Element& e) {
  json j = json::array({std::string(kindName(e.kind)), e.order});
  for (NodeId id : e.nodes) j.push_back(id);
  j.push_back(std::string(regionName(e.region)));
  json tags = json::array();
  for (const auto& t : e.faceCadTags) tags.push_back(t ? json(*t) : json(nullptr));
  j.push_back(tags);
  return j;
}

json encode(const NativeDocument& doc) {
  json root = json::object();
  for (const auto& [k, text] : doc.extra) root[k] = json::parse(text);

  root["version"] = kFormatVersion;
  root["geometry"] = encodeGeometry(doc.registry, doc.mesh.geometryRef);

  json nodes = json::array();
  for (const auto& n : doc.mesh.nodes) nodes.push_back(encodeNode(n));
  root["nodes"] = nodes;

  json elements = json::array();
  for (const auto& e : doc.mesh.elements) elements.push_back(encodeElement(e));
  root["elements"] = elements;

  const std::set<std::string> walls(doc.wallPatches.begin(), doc.wallPatches.end());
  json patches = json::object();
  for (const auto& [name, faces] : doc.mesh.patches) {
    json list = json::array();
    for (const auto& f : faces) list.push_back(json::array({f.element, f.face}));
    patches[name] = {{"faces", list}, {"wall", walls.count(name) != 0}};
  }
  root["patches"] = patches;

  if (doc.periodicity) {
    const auto& p = *doc.periodicity;
    root["periodicity"] = {{"patchA", p.patchA},
                           {"patchB", p.patchB},
                           {"point", vec(p.map.point)},
                           {"axis", vec(p.map.axis)},
                           {"angle", p.map.angle}};
  } else {
    root["periodicity"] = nullptr;
  }

  if (doc.divisions) {
    const auto& d = *doc.divisions;
    json cons = json::array();
    for (const auto& c : d.constraints) cons.push_back({{"a", c.sideA}, {"b", c.sideB}});
    root["divisions"] = {{"names", d.names},
                         {"targets", d.targets},
                         {"constraints", cons},
                         {"maxDivisions", d.maxDivisions}};
  } else {
    root["divisions"] = nullptr;
  }
  return root;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

// A JSON value together with its pointer, for error messages.
struct Node {
  const json& v;
  std::string ptr;

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError((ptr.empty() ? std::string("/") : ptr) + ": " + what, ptr.empty() ? "/" : ptr);
  }
  Node operator[](const std::string& key) const {
    if (!v.is_object()) fail("expected an object");
    auto it = v.find(key);
    if (it == v.end()) fail("missing key \"" + key + "\"");
    return {*it, ptr + "/" + key};
  }
  Node operator[](std::size_t i) const {
    if (!v.is_array()) fail("expected an array");
    if (i >= v.size()) fail("array too short");
    return {v[i], ptr + "/" + std::to_string(i)};
  }
  bool has(const char* key) const { return v.is_object() && v.contains(key); }
  const json& array() const {
    if (!v.is_array()) fail("expected an array");
    return v;
  }
  std::size_t size() const { return array().size(); }
  double num() const {
    if (!v.is_number()) fail("expected a number");
    return v.get<double>();
  }
  long long integer() const {
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    if (!v.is_number_integer()) fail("expected an integer");
    return v.get<long long>();
  }
  int small() const {
    const long long x = integer();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail("integer out of range");
    return static_cast<int>(x);
  }
  bool boolean() const {
    if (!v.is_boolean()) fail("expected a boolean");
    return v.get<bool>();
  }
  std::string str() const {
    if (!v.is_string()) fail("expected a string");
    return v.get<std::string>();
  }
  Vec3 vec3() const {
    if (!v.is_array() || v.size() != 3) fail("expected three numbers");
    return {(*this)[0].num(), (*this)[1].num(), (*this)[2].num()};
  }
  std::vector<double> nums() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].num());
    return out;
  }
  std::vector<int> ints() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].small());
    return out;
  }
  std::vector<Vec3> vec3s() const {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].vec3());
    return out;
  }
  std::array<double, 2> range() const {
    if (size() != 2) fail("expected [lo, hi]");
    return {(*this)[0].num(), (*this)[1].num()};
  }
};

CadCurve decodeCurve(const Node& n) {
  CadCurve c;
  c.id = n["id"].small();
  const auto r = n["range"].range();
  c.tLo = r[0];
  c.tHi = r[1];
  c.adjacentSurfaces = n["adjacent"].ints();
  const std::string kind = n["kind"].str();
  if (kind == "line") {
    c.shape = LineCurve{n["a"].vec3(), n["b"].vec3()};
  } else if (kind == "circularArc") {
    c.shape = ArcCurve{n["center"].vec3(), n["radius"].num(), n["e1"].vec3(), n["e2"].vec3()};
  } else if (kind == "bsplineCurve") {
    c.shape = BSplineCurve{n["degree"].small(), n["knots"].nums(), n["poles"].vec3s()};
  } else if (kind == "helix") {
    c.shape = HelixCurve{n["center"].vec3(), n["radius"].num(), n["pitch"].num(),
                         n["e1"].vec3(),     n["e2"].vec3(),     n["e3"].vec3()};
  } else if (kind == "isoCurve") {
    c.shape = IsoCurve{n["surface"].small(), n["alongU"].boolean(), n["fixed"].num(), nullptr};
  } else {
    n["kind"].fail("unknown curve kind \"" + kind + "\"");
  }
  return c;
}

CadSurface decodeSurface(const Node& n) {
  CadSurface s;
  s.id = n["id"].small();
  const auto u = n["u"].range(), v = n["v"].range();
  s.uLo = u[0];
  s.uHi = u[1];
  s.vLo = v[0];
  s.vHi = v[1];
  const std::string kind = n["kind"].str();
  if (kind == "plane") {
    s.shape = PlaneSurface{n["origin"].vec3(), n["eu"].vec3(), n["ev"].vec3()};
  } else if (kind == "cylinder") {
    s.shape = CylinderSurface{n["center"].vec3(), n["radius"].num(), n["e1"].vec3(), n["e2"].vec3(),
                              n["e3"].vec3()};
  } else if (kind == "sphere") {
    s.shape = SphereSurface{n["center"].vec3(), n["radius"].num(), n["e1"].vec3(), n["e2"].vec3(),
                            n["e3"].vec3()};
  } else if (kind == "bsplinePatch") {
    BSplinePatch p;
    p.degreeU = n["degreeU"].small();
    p.degreeV = n["degreeV"].small();
    p.knotsU = n["knotsU"].nums();
    p.knotsV = n["knotsV"].nums();
    p.nu = n["nu"].small();
    p.nv = n["nv"].small();
    p.poles = n["poles"].vec3s();
    if (p.nu < 1 || p.nv < 1 || p.poles.size() != static_cast<std::size_t>(p.nu) * p.nv)
      n["poles"].fail("expected nu * nv poles");
    s.shape = std::move(p);
  } else if (kind == "extrudedSection") {
    s.shape = ExtrudedSection{n["origin"].vec3(), n["chord"].num(), n["thickness"].num(), n["ex"].vec3(),
                              n["ey"].vec3(),     n["ez"].vec3(),   n["wrapRadius"].num()};
  } else if (kind == "loftedSection") {
    s.shape = LoftedSection{n["origin"].vec3(), n["chord"].num(), n["thickness"].num(),
                            n["ex"].vec3(),     n["ey"].vec3(),   n["ez"].vec3()};
  } else {
    n["kind"].fail("unknown surface kind \"" + kind + "\"");
  }
  return s;
}

void decodeGeometry(const Node& g, NativeDocument& doc) {
  doc.mesh.geometryRef = g["name"].str();
  const Node bbox = g["bbox"];
  if (bbox.size() != 2) bbox.fail("expected [lo, hi]");
  doc.registry.bbox = {bbox[0].vec3(), bbox[1].vec3()};
  const Node surfaces = g["surfaces"];
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    try {
      doc.registry.addSurface(decodeSurface(surfaces[i]));
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      surfaces[i].fail(e.what());
    }
  }
  const Node curves = g["curves"];
  for (std::size_t i = 0; i < curves.size(); ++i) {
    try {
      doc.registry.addCurve(decodeCurve(curves[i]));
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      curves[i].fail(e.what());
    }
  }
}

std::optional<CadLink> decodeLink(const Node& n, const CadRegistry& reg) {
  if (n.has("curve")) {
    const int id = n["curve"].small();
    if (!reg.hasCurve(id)) n["curve"].fail("unknown curve " + std::to_string(id));
    return CadLink::curve(id, n["t"].num());
  }
  if (n.has("surface")) {
    const int id = n["surface"].small();
    if (!reg.hasSurface(id)) n["surface"].fail("unknown surface " + std::to_string(id));
    return CadLink::surface(id, n["u"].num(), n["v"].num());
  }
  n.fail("expected a curve or surface link");
}

void decodeMesh(const Node& root, NativeDocument& doc) {
  Mesh& m = doc.mesh;
  const Node nodes = root["nodes"];
  std::set<NodeId> ids;
  m.nodes.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node n = nodes[i];
    const std::size_t len = n.size();
    if (len != 4 && len != 5) n.fail("expected [id, x, y, z] or [id, x, y, z, link]");
    MeshNode node;
    node.id = n[0].integer();
    if (!ids.insert(node.id).second) n[0].fail("duplicate node id " + std::to_string(node.id));
    node.x = {n[1].num(), n[2].num(), n[3].num()};
    if (len == 5) node.cad = decodeLink(n[4], doc.registry);
    m.nodes.push_back(std::move(node));
  }
  m.reindex();

  const Node elements = root["elements"];
  m.elements.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const Node n = elements[i];
    Element e;
    try {
      e.kind = kindFromName(n[0].str());
    } catch (const SchemaError&) {
      throw;
    } catch (const Error&) {
      n[0].fail("unknown element kind");
    }
    e.order = n[1].small();
    if (e.order < 1 || e.order > kMaxOrder) n[1].fail("order out of range");
    const std::size_t count = nodeCount(e.kind, e.order);
    if (n.size() != count + 4) n.fail("expected " + std::to_string(count) + " node ids");
    for (std::size_t k = 0; k < count; ++k) {
      const NodeId id = n[2 + k].integer();
      if (!m.hasNode(id)) n[2 + k].fail("unknown node " + std::to_string(id));
      e.nodes.push_back(id);
    }
    const Node region = n[count + 2];
    const std::string rname = region.str();
    if (rname != regionName(Region::NearField) && rname != regionName(Region::FarField))
      region.fail("unknown region \"" + rname + "\"");
    e.region = regionFromName(rname);
    const Node tags = n[count + 3];
    if (tags.size() != referenceFacets(e.kind).size()) tags.fail("expected one tag per facet");
    for (std::size_t f = 0; f < tags.size(); ++f) {
      if (tags[f].v.is_null()) {
        e.faceCadTags.push_back(std::nullopt);
        continue;
      }
      const int s = tags[f].small();
      if (!doc.registry.hasSurface(s)) tags[f].fail("unknown surface " + std::to_string(s));
      e.faceCadTags.push_back(s);
    }
    m.elements.push_back(std::move(e));
  }

  const Node patches = root["patches"];
  if (!patches.v.is_object()) patches.fail("expected an object");
  for (const auto& [name, body] : patches.v.items()) {
    const Node p{body, patches.ptr + "/" + name};
    const Node faces = p["faces"];
    auto& list = m.patches[name];
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const Node f = faces[i];
      if (f.size() != 2) f.fail("expected [element, face]");
      const long long el = f[0].integer();
      if (el < 0 || el >= static_cast<long long>(m.elements.size())) f[0].fail("element out of range");
      const int face = f[1].small();
      if (face < 0 || face >= static_cast<int>(referenceFacets(m.elements[el].kind).size()))
        f[1].fail("face out of range");
      list.push_back({static_cast<std::size_t>(el), face});
    }
    if (p["wall"].boolean()) doc.wallPatches.push_back(name);
  }
}

void decodeExtras(const Node& root, NativeDocument& doc) {
  const Node per = root["periodicity"];
  if (!per.v.is_null()) {
    PeriodicPair p;
    p.patchA = per["patchA"].str();
    p.patchB = per["patchB"].str();
    if (!doc.mesh.patches.count(p.patchA)) per["patchA"].fail("unknown patch \"" + p.patchA + "\"");
    if (!doc.mesh.patches.count(p.patchB)) per["patchB"].fail("unknown patch \"" + p.patchB + "\"");
    try {
      p.map = PeriodicMap::make(per["point"].vec3(), per["axis"].vec3(), per["angle"].num());
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      per.fail(e.what());
    }
    doc.periodicity = p;
  }

  const Node div = root["divisions"];
  if (!div.v.is_null()) {
    DivisionProblem d;
    const Node names = div["names"];
    for (std::size_t i = 0; i < names.size(); ++i) d.names.push_back(names[i].str());
    d.targets = div["targets"].nums();
    d.maxDivisions = div["maxDivisions"].small();
    const Node cons = div["constraints"];
    const int groups = static_cast<int>(d.targets.size());
    for (std::size_t i = 0; i < cons.size(); ++i) {
      DivisionConstraint c{cons[i]["a"].ints(), cons[i]["b"].ints()};
      for (int g : c.sideA)
        if (g < 0 || g >= groups) cons[i]["a"].fail("group out of range");
      for (int g : c.sideB)
        if (g < 0 || g >= groups) cons[i]["b"].fail("group out of range");
      d.constraints.push_back(std::move(c));
    }
    doc.divisions = std::move(d);
  }
}

const std::set<std::string> kKnownKeys = {"version", "geometry", "nodes", "elements",
                                          "patches", "periodicity", "divisions"};

}  // namespace

NativeDocument documentFrom(const BuiltinGeometry& g) {
  NativeDocument doc;
  doc.mesh = g.mesh;
  doc.registry = g.registry;
  doc.wallPatches = g.wallPatches;
  doc.periodicity = g.periodic;
  return doc;
}

std::string toCanonicalJson(const NativeDocument& doc) { return canonical(encode(doc)); }

NativeDocument parseDocument(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(source + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const Node r{root, ""};
    if (!root.is_object()) r.fail("expected an object");
    const long long version = r["version"].integer();
    if (version != kFormatVersion)
      throw VersionError(source + ": unsupported version " + std::to_string(version) + " (expected " +
                             std::to_string(kFormatVersion) + ")",
                         version);
    NativeDocument doc;
    decodeGeometry(r["geometry"], doc);
    decodeMesh(r, doc);
    decodeExtras(r, doc);
    for (const auto& [k, v] : root.items())
      if (!kKnownKeys.count(k)) doc.extra[k] = canonical(v);
    return doc;
  } catch (const SchemaError& e) {
    throw SchemaError(source + ": " + e.what(), e.pointer);
  }
}

void writeDocument(const NativeDocument& doc, const std::string& path) {
  const std::string text = toCanonicalJson(doc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

NativeDocument readDocument(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path + ": read failed");
  return parseDocument(ss.str(), path);
}

std::pair<Mesh, CadRegistry> readMesh(const std::string& path) {
  auto doc = readDocument(path);
  return {std::move(doc.mesh), std::move(doc.registry)};
}

void writeMesh(const Mesh& mesh, const CadRegistry& registry, const std::string& path) {
  NativeDocument doc;
  doc.mesh = mesh;
  doc.registry = registry;
  writeDocument(doc, path);
}

}  // namespace homesh
