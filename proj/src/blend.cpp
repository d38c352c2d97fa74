#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "homesh/hogen.hpp"

namespace homesh {

namespace {

// Evaluates the element's boundary representation at reference points on the
// boundary: each facet is interpolated from its own nodes with the nodal basis
// of the facet kind.
class BoundaryMap {
 public:
  BoundaryMap(ElementKind kind, int order, const std::vector<Vec3>& nodes) {
    const auto& topo = topology(kind, order);
    for (int f = 0; f < static_cast<int>(topo.facets().size()); ++f) {
      const auto& ft = topo.facets()[f];
      Piece piece;
      piece.kind = ft.kind;
      for (int v : ft.vertices) piece.corners.push_back(referenceVertex(kind, v));
      std::vector<Vec3> x;
      for (int local : topo.facetNodes(f)) x.push_back(nodes[local]);
      build(piece, order, x);
    }
  }

  Vec3 operator()(const Vec3& xi) const {
    for (const auto& p : pieces_) {
      Vec3 s;
      if (locate(p, xi, s)) {
        Eigen::VectorXd vals;
        p.ref->modal(s, vals, nullptr);
        return p.coef.transpose() * vals;
      }
    }
    throw DomainError("blending evaluated off the element boundary");
  }

 private:
  struct Piece {
    ElementKind kind;
    std::vector<Vec3> corners;
    const RefElement* ref = nullptr;
    Eigen::MatrixXd coef;
    Eigen::Matrix<double, 3, 2> axes;  // reference edge vectors spanning the piece
  };

  void build(Piece& p, int order, const std::vector<Vec3>& x) {
    p.ref = &refElement(p.kind, order);
    Eigen::MatrixXd xm(static_cast<Eigen::Index>(x.size()), 3);
    for (std::size_t i = 0; i < x.size(); ++i) xm.row(static_cast<Eigen::Index>(i)) = x[i].transpose();
    p.coef = p.ref->invVandermonde() * xm;
    p.axes.setZero();
    p.axes.col(0) = p.corners[1] - p.corners[0];
    if (p.kind == ElementKind::Triangle) p.axes.col(1) = p.corners[2] - p.corners[0];
    if (p.kind == ElementKind::Quadrilateral) p.axes.col(1) = p.corners[3] - p.corners[0];
    pieces_.push_back(std::move(p));
  }

  // Reference coordinates s of xi within the piece (affine pieces only).
  static bool locate(const Piece& p, const Vec3& xi, Vec3& s) {
    const Vec3 r = xi - p.corners[0];
    const double tol = 1e-12;
    if (p.kind == ElementKind::Segment) {
      const Vec3 a = p.axes.col(0);
      const double t = r.dot(a) / a.squaredNorm();
      if ((r - t * a).norm() > tol || t < -tol || t > 1.0 + tol) return false;
      s = Vec3(2.0 * t - 1.0, 0.0, 0.0);
      return true;
    }
    const Eigen::Vector2d c = (p.axes.transpose() * p.axes).ldlt().solve(p.axes.transpose() * r);
    if ((p.axes * c - r).norm() > tol) return false;
    if (p.kind == ElementKind::Triangle) {
      if (c[0] < -tol || c[1] < -tol || c[0] + c[1] > 1.0 + tol) return false;
    } else if (c[0] < -tol || c[1] < -tol || c[0] > 1.0 + tol || c[1] > 1.0 + tol) {
      return false;
    }
    s = Vec3(2.0 * c[0] - 1.0, 2.0 * c[1] - 1.0, 0.0);
    if (!inReferenceDomain(p.kind, s)) {
      s = s.cwiseMax(-1.0).cwiseMin(1.0);
      if (p.kind == ElementKind::Triangle && s.x() + s.y() > 0.0) {
        const double e = 0.5 * (s.x() + s.y());
        s.x() -= e;
        s.y() -= e;
      }
    }
    return true;
  }

  std::vector<Piece> pieces_;
};

// Tensor Boolean sum over the first `dims` coordinates (quad: 2, hex: 3).
Vec3 tensorBlend(const BoundaryMap& b, const Vec3& xi, int dims) {
  Vec3 out = Vec3::Zero();
  for (int mask = 1; mask < (1 << dims); ++mask) {
    const int bits = __builtin_popcount(mask);
    const double sign = (bits % 2 == 1) ? 1.0 : -1.0;
    // sum over the 2^bits corner choices of the selected dimensions
    for (int corner = 0; corner < (1 << bits); ++corner) {
      Vec3 p = xi;
      double w = 1.0;
      int k = 0;
      for (int d = 0; d < dims; ++d) {
        if (!(mask & (1 << d))) continue;
        const bool hi = corner & (1 << k++);
        p[d] = hi ? 1.0 : -1.0;
        w *= hi ? 0.5 * (1.0 + xi[d]) : 0.5 * (1.0 - xi[d]);
      }
      if (w != 0.0) out += sign * w * b(p);
    }
  }
  return out;
}

// Triangle edge blend in the (xi1, xi2) plane at height z, with values from f.
template <class F>
Vec3 triangleBlend(const F& f, double x, double y, double z) {
  const std::array<Vec3, 3> v{Vec3(-1, -1, z), Vec3(1, -1, z), Vec3(-1, 1, z)};
  const std::array<double, 3> lam{-0.5 * (x + y), 0.5 * (1.0 + x), 0.5 * (1.0 + y)};
  Vec3 out = Vec3::Zero();
  const int edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& e : edges) {
    const double w = lam[e[0]] + lam[e[1]];
    if (w <= 0.0) continue;
    const double s = lam[e[1]] / w;
    out += w * f(Vec3((1.0 - s) * v[e[0]] + s * v[e[1]]));
  }
  for (int k = 0; k < 3; ++k)
    if (lam[k] != 0.0) out -= lam[k] * f(v[k]);
  return out;
}

Vec3 tetBlend(const BoundaryMap& b, const Vec3& xi) {
  std::array<Vec3, 4> v;
  for (int k = 0; k < 4; ++k) v[k] = referenceVertex(ElementKind::Tetrahedron, k);
  const std::array<double, 4> lam{-0.5 * (1.0 + xi.x() + xi.y() + xi.z()), 0.5 * (1.0 + xi.x()),
                                  0.5 * (1.0 + xi.y()), 0.5 * (1.0 + xi.z())};
  Vec3 out = Vec3::Zero();
  // faces: project from the opposite vertex
  for (int k = 0; k < 4; ++k) {
    const double w = 1.0 - lam[k];
    if (w <= 0.0) continue;
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < 4; ++i)
      if (i != k) p += (lam[i] / w) * v[i];
    out += w * b(p);
  }
  // edges
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double w = lam[i] + lam[j];
      if (w <= 0.0) continue;
      const double s = lam[j] / w;
      out -= w * b(Vec3((1.0 - s) * v[i] + s * v[j]));
    }
  for (int k = 0; k < 4; ++k)
    if (lam[k] != 0.0) out += lam[k] * b(v[k]);
  return out;
}

Vec3 prismBlend(const BoundaryMap& b, const Vec3& xi) {
  const double x = xi.x(), y = xi.y(), z = xi.z();
  const double lo = 0.5 * (1.0 - z), hi = 0.5 * (1.0 + z);
  const Vec3 p3 = lo * b(Vec3(x, y, -1.0)) + hi * b(Vec3(x, y, 1.0));
  const Vec3 pt = triangleBlend(b, x, y, z);
  const Vec3 ptp3 = lo * triangleBlend(b, x, y, -1.0) + hi * triangleBlend(b, x, y, 1.0);
  return pt + p3 - ptp3;
}

}  // namespace

void placeInteriorNodes(ElementKind kind, int order, std::vector<Vec3>& nodes) {
  const auto& topo = topology(kind, order);
  if (nodes.size() != topo.size()) throw StructuralError("node list has the wrong length for blending");
  const int dim = dimension(kind);
  if (dim == 1) {
    // straight segment at GLL positions
    const auto g = gllPoints(order);
    for (int i = 1; i < order; ++i)
      nodes[topo.indexOf({i, 0, 0})] = nodes[0] + 0.5 * (g[i] + 1.0) * (nodes[1] - nodes[0]);
    return;
  }
  bool any = false;
  for (const auto& e : topo.entities()) any |= e.dim == dim;
  if (!any) return;
  const BoundaryMap b(kind, order, nodes);
  const auto& ref = refElement(kind, order).nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (topo.entities()[i].dim != dim) continue;
    const Vec3& xi = ref[i];
    switch (kind) {
      case ElementKind::Quadrilateral: nodes[i] = tensorBlend(b, xi, 2); break;
      case ElementKind::Hexahedron: nodes[i] = tensorBlend(b, xi, 3); break;
      case ElementKind::Triangle: nodes[i] = triangleBlend(b, xi.x(), xi.y(), 0.0); break;
      case ElementKind::Tetrahedron: nodes[i] = tetBlend(b, xi); break;
      case ElementKind::Prism: nodes[i] = prismBlend(b, xi); break;
      default: break;
    }
  }
}

}  // namespace homesh
