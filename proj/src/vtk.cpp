#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "homesh/blsplit.hpp"
#include "homesh/io.hpp"
#include "homesh/refelem.hpp"

namespace homesh {

namespace {

// VTK cell type ids
constexpr int kVtkLine = 3, kVtkTriangle = 5, kVtkQuad = 9, kVtkTetra = 10, kVtkHexahedron = 12, kVtkWedge = 13;

struct Tessellation {
  std::vector<Lattice> points;
  std::vector<std::vector<int>> cells;  // VTK local ordering
  int cellType = 0;
};

bool inLattice(ElementKind kind, int k, const Lattice& l) {
  for (int c : l)
    if (c < 0 || c > k) return false;
  switch (kind) {
    case ElementKind::Triangle:
    case ElementKind::Prism: return l[0] + l[1] <= k;
    case ElementKind::Tetrahedron: return l[0] + l[1] + l[2] <= k;
    default: return true;
  }
}

Tessellation buildTessellation(ElementKind kind, int k) {
  Tessellation t;
  const int d = dimension(kind);
  const int n = k + 1;
  std::vector<int> slot(static_cast<std::size_t>(n) * n * n, -1);
  auto at = [&](int i, int j, int l) { return slot[(static_cast<std::size_t>(l) * n + j) * n + i]; };
  for (int l = 0; l <= (d > 2 ? k : 0); ++l)
    for (int j = 0; j <= (d > 1 ? k : 0); ++j)
      for (int i = 0; i <= k; ++i) {
        const Lattice p{i, j, l};
        if (!inLattice(kind, k, p)) continue;
        slot[(static_cast<std::size_t>(l) * n + j) * n + i] = static_cast<int>(t.points.size());
        t.points.push_back(p);
      }

  // counter-clockwise triangles of the triangle lattice
  std::vector<std::array<Lattice, 3>> tris;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i + j < k; ++i) {
      tris.push_back({Lattice{i, j, 0}, Lattice{i + 1, j, 0}, Lattice{i, j + 1, 0}});
      if (i + j + 1 < k) tris.push_back({Lattice{i + 1, j, 0}, Lattice{i + 1, j + 1, 0}, Lattice{i, j + 1, 0}});
    }

  switch (kind) {
    case ElementKind::Segment:
      t.cellType = kVtkLine;
      for (int i = 0; i < k; ++i) t.cells.push_back({at(i, 0, 0), at(i + 1, 0, 0)});
      break;
    case ElementKind::Triangle:
      t.cellType = kVtkTriangle;
      for (const auto& tr : tris) t.cells.push_back({at(tr[0][0], tr[0][1], 0), at(tr[1][0], tr[1][1], 0),
                                                     at(tr[2][0], tr[2][1], 0)});
      break;
    case ElementKind::Quadrilateral:
      t.cellType = kVtkQuad;
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) t.cells.push_back({at(i, j, 0), at(i + 1, j, 0), at(i + 1, j + 1, 0), at(i, j + 1, 0)});
      break;
    case ElementKind::Hexahedron:
      t.cellType = kVtkHexahedron;
      for (int l = 0; l < k; ++l)
        for (int j = 0; j < k; ++j)
          for (int i = 0; i < k; ++i)
            t.cells.push_back({at(i, j, l), at(i + 1, j, l), at(i + 1, j + 1, l), at(i, j + 1, l),
                               at(i, j, l + 1), at(i + 1, j, l + 1), at(i + 1, j + 1, l + 1), at(i, j + 1, l + 1)});
      break;
    case ElementKind::Prism:
      // VTK wedges want the first triangle clockwise seen from the second
      t.cellType = kVtkWedge;
      for (int l = 0; l < k; ++l)
        for (const auto& tr : tris)
          t.cells.push_back({at(tr[0][0], tr[0][1], l), at(tr[2][0], tr[2][1], l), at(tr[1][0], tr[1][1], l),
                             at(tr[0][0], tr[0][1], l + 1), at(tr[2][0], tr[2][1], l + 1),
                             at(tr[1][0], tr[1][1], l + 1)});
      break;
    case ElementKind::Tetrahedron: {
      // Kuhn triangulation of {k >= a >= b >= c >= 0}, (i, j, l) = (a - b, b - c, c)
      t.cellType = kVtkTetra;
      const std::array<std::array<int, 3>, 6> perms = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
      for (int c = 0; c < k; ++c)
        for (int b = 0; b < k; ++b)
          for (int a = 0; a < k; ++a)
            for (const auto& p : perms) {
              std::array<std::array<int, 3>, 4> v;
              v[0] = {a, b, c};
              for (int s = 0; s < 3; ++s) {
                v[s + 1] = v[s];
                ++v[s + 1][p[s]];
              }
              bool inside = true;
              for (const auto& q : v) inside = inside && q[0] >= q[1] && q[1] >= q[2];
              if (!inside) continue;
              std::array<Lattice, 4> ijl;
              for (int s = 0; s < 4; ++s) ijl[s] = {v[s][0] - v[s][1], v[s][1] - v[s][2], v[s][2]};
              auto diff = [&](int s, int r) { return ijl[s][r] - ijl[0][r]; };
              const long det = static_cast<long>(diff(1, 0)) * (diff(2, 1) * diff(3, 2) - diff(2, 2) * diff(3, 1)) -
                               static_cast<long>(diff(1, 1)) * (diff(2, 0) * diff(3, 2) - diff(2, 2) * diff(3, 0)) +
                               static_cast<long>(diff(1, 2)) * (diff(2, 0) * diff(3, 1) - diff(2, 1) * diff(3, 0));
              if (det < 0) std::swap(ijl[2], ijl[3]);
              std::vector<int> cell;
              for (const auto& q : ijl) cell.push_back(at(q[0], q[1], q[2]));
              t.cells.push_back(std::move(cell));
            }
      break;
    }
  }
  return t;
}

Vec3 latticePoint(ElementKind kind, int k, const Lattice& l) {
  const int d = dimension(kind);
  Vec3 xi = Vec3::Zero();
  for (int c = 0; c < d; ++c) xi[c] = -1.0 + 2.0 * l[c] / k;
  return xi;
}

struct ElementPiece {
  std::vector<Vec3> points;
  double minScaledJacobian = 0.0;
  double aspect = 0.0;
};

void putDouble(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  out << buf;
}

}  // namespace

VtkSummary exportVTK(const Mesh& mesh, std::ostream& out, int k, Execution exec) {
  if (k < 1) throw ParameterError("subdivisions per direction must be at least 1");
  std::map<ElementKind, Tessellation> tess;
  for (const auto& e : mesh.elements)
    if (!tess.count(e.kind)) tess[e.kind] = buildTessellation(e.kind, k);

  std::vector<ElementPiece> pieces(mesh.elements.size());
#pragma omp parallel for schedule(dynamic, 16) if (exec == Execution::Parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(mesh.elements.size()); ++i) {
    const Element& e = mesh.elements[i];
    const ElementMapping map(mesh, e);
    const auto& t = tess.at(e.kind);
    auto& p = pieces[i];
    p.points.reserve(t.points.size());
    for (const auto& l : t.points) p.points.push_back(map.eval(latticePoint(e.kind, k, l)));
    p.minScaledJacobian = checkValidity(map).minScaledJacobian;
    p.aspect = aspectRatio(mesh, e);
  }

  VtkSummary sum;
  for (const auto& e : mesh.elements) {
    sum.points += tess.at(e.kind).points.size();
    sum.cells += tess.at(e.kind).cells.size();
  }
  std::size_t cellInts = 0;
  for (const auto& e : mesh.elements)
    for (const auto& c : tess.at(e.kind).cells) cellInts += c.size() + 1;

  out << "# vtk DataFile Version 4.2\n";
  out << "homesh " << (mesh.geometryRef.empty() ? std::string("mesh") : mesh.geometryRef) << " k=" << k << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << sum.points << " double\n";
  for (const auto& p : pieces)
    for (const auto& x : p.points) {
      putDouble(out, x.x());
      out << ' ';
      putDouble(out, x.y());
      out << ' ';
      putDouble(out, x.z());
      out << '\n';
    }

  out << "CELLS " << sum.cells << ' ' << cellInts << '\n';
  std::size_t base = 0;
  for (const auto& e : mesh.elements) {
    const auto& t = tess.at(e.kind);
    for (const auto& c : t.cells) {
      out << c.size();
      for (int v : c) out << ' ' << base + v;
      out << '\n';
    }
    base += t.points.size();
  }
  out << "CELL_TYPES " << sum.cells << '\n';
  for (const auto& e : mesh.elements) {
    const auto& t = tess.at(e.kind);
    for (std::size_t c = 0; c < t.cells.size(); ++c) out << t.cellType << '\n';
  }

  out << "CELL_DATA " << sum.cells << '\n';
  auto field = [&](const char* name, const char* type, auto value) {
    out << "SCALARS " << name << ' ' << type << " 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
      const auto n = tess.at(mesh.elements[i].kind).cells.size();
      for (std::size_t c = 0; c < n; ++c) {
        value(i);
        out << '\n';
      }
    }
  };
  field("minScaledJacobian", "double", [&](std::size_t i) { putDouble(out, pieces[i].minScaledJacobian); });
  field("aspectRatio", "double", [&](std::size_t i) { putDouble(out, pieces[i].aspect); });
  field("region", "int", [&](std::size_t i) { out << (mesh.elements[i].region == Region::NearField ? 0 : 1); });
  if (!out) throw IoError("VTK write failed");
  return sum;
}

VtkSummary exportVTK(const Mesh& mesh, const std::string& path, int k, Execution exec) {
  if (k < 1) throw ParameterError("subdivisions per direction must be at least 1");
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  try {
    return exportVTK(mesh, out, k, exec);
  } catch (const IoError&) {
    throw IoError(path + ": write failed");
  }
}

}  // namespace homesh
