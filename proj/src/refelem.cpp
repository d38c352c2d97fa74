#include "homesh/refelem.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "homesh/errors.hpp"

namespace homesh {

std::vector<double> gllPoints(int order) {
  if (order < 1) throw CapabilityError("GLL points need order >= 1");
  const int n = order;
  std::vector<double> x(n + 1), xold(n + 1);
  for (int i = 0; i <= n; ++i) x[i] = -std::cos(M_PI * i / n);
  std::vector<double> pk(n + 1), pkm1(n + 1);
  for (int it = 0; it < 100; ++it) {
    xold = x;
    double change = 0.0;
    for (int i = 0; i <= n; ++i) {
      double p0 = 1.0, p1 = x[i];
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x[i] * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      x[i] = xold[i] - (x[i] * p1 - p0) / ((n + 1) * p1);
      change = std::max(change, std::abs(x[i] - xold[i]));
    }
    if (change < 1e-16) break;
  }
  x.front() = -1.0;
  x.back() = 1.0;
  // enforce exact antisymmetry
  for (int i = 0; i <= n / 2; ++i) {
    const double a = 0.5 * (x[n - i] - x[i]);
    x[i] = -a;
    x[n - i] = a;
  }
  if (n % 2 == 0) x[n / 2] = 0.0;
  return x;
}

Vec3 referenceVertex(ElementKind k, int v) {
  switch (k) {
    case ElementKind::Segment: return Vec3(v == 0 ? -1.0 : 1.0, 0, 0);
    case ElementKind::Triangle: {
      static const double c[3][2] = {{-1, -1}, {1, -1}, {-1, 1}};
      return Vec3(c[v][0], c[v][1], 0);
    }
    case ElementKind::Quadrilateral: {
      static const double c[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
      return Vec3(c[v][0], c[v][1], 0);
    }
    case ElementKind::Tetrahedron: {
      static const double c[4][3] = {{-1, -1, -1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
      return Vec3(c[v][0], c[v][1], c[v][2]);
    }
    case ElementKind::Prism: {
      static const double c[6][3] = {{-1, -1, -1}, {1, -1, -1}, {-1, 1, -1},
                                     {-1, -1, 1},  {1, -1, 1},  {-1, 1, 1}};
      return Vec3(c[v][0], c[v][1], c[v][2]);
    }
    case ElementKind::Hexahedron: {
      static const double c[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                     {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
      return Vec3(c[v][0], c[v][1], c[v][2]);
    }
  }
  return Vec3::Zero();
}

bool inReferenceDomain(ElementKind k, const Vec3& xi, double tol) {
  const double lo = -1.0 - tol, hi = 1.0 + tol;
  switch (k) {
    case ElementKind::Segment: return xi[0] >= lo && xi[0] <= hi;
    case ElementKind::Quadrilateral:
      return xi[0] >= lo && xi[0] <= hi && xi[1] >= lo && xi[1] <= hi;
    case ElementKind::Hexahedron:
      return xi[0] >= lo && xi[0] <= hi && xi[1] >= lo && xi[1] <= hi && xi[2] >= lo && xi[2] <= hi;
    case ElementKind::Triangle: return xi[0] >= lo && xi[1] >= lo && xi[0] + xi[1] <= tol;
    case ElementKind::Prism:
      return xi[0] >= lo && xi[1] >= lo && xi[0] + xi[1] <= tol && xi[2] >= lo && xi[2] <= hi;
    case ElementKind::Tetrahedron:
      return xi[0] >= lo && xi[1] >= lo && xi[2] >= lo && xi[0] + xi[1] + xi[2] <= -1.0 + tol;
  }
  return false;
}

namespace {

// Warped barycentric coordinates of a simplex lattice point given by its
// barycentric indices (summing to P).
std::vector<double> warpedBarycentric(const std::vector<int>& n, int order) {
  const auto g = gllPoints(order);
  auto v = [&](int m) { return 0.5 * (g[m] + 1.0); };
  std::vector<double> lam(n.size(), 0.0);
  std::vector<int> active;
  for (std::size_t a = 0; a < n.size(); ++a)
    if (n[a] > 0) active.push_back(static_cast<int>(a));
  const int d = static_cast<int>(active.size());
  if (d == 1) {
    lam[active[0]] = 1.0;
  } else if (d == 2) {
    lam[active[0]] = v(n[active[0]]);
    lam[active[1]] = v(n[active[1]]);
  } else {
    double s = 0.0;
    for (int a : active) s += v(n[a]);
    for (int a : active) lam[a] = (1.0 + d * v(n[a]) - s) / d;
  }
  return lam;
}

void legendre(int pmax, double x, std::vector<double>& p, std::vector<double>& dp) {
  p.assign(pmax + 1, 0.0);
  dp.assign(pmax + 1, 0.0);
  p[0] = 1.0;
  if (pmax >= 1) {
    p[1] = x;
    dp[1] = 1.0;
  }
  for (int k = 2; k <= pmax; ++k) {
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
    dp[k] = dp[k - 2] + (2.0 * k - 1.0) * p[k - 1];
  }
  // L2-normalize on [-1, 1]
  for (int k = 0; k <= pmax; ++k) {
    const double s = std::sqrt(k + 0.5);
    p[k] *= s;
    dp[k] *= s;
  }
}

// Value with gradient in (xi1, xi2, xi3).
struct Poly {
  double v = 0.0;
  Vec3 g = Vec3::Zero();
};

Poly operator*(const Poly& a, const Poly& b) { return {a.v * b.v, a.v * b.g + b.v * a.g}; }

// Homogenized Jacobi polynomials R_n = tau^n P_n^(alpha,0)(x / tau), n = 0..nmax,
// written in terms of x and tau so that no division occurs. x, tau are affine.
std::vector<Poly> jacobiHomogeneous(int nmax, double alpha, const Poly& x, const Poly& tau) {
  std::vector<Poly> r(nmax + 1);
  r[0].v = 1.0;
  if (nmax >= 1) r[1] = {0.5 * ((alpha + 2.0) * x.v + alpha * tau.v), 0.5 * ((alpha + 2.0) * x.g + alpha * tau.g)};
  for (int n = 1; n < nmax; ++n) {
    const double a = 2.0 * n + alpha;
    const double c1 = (a + 1.0) * (a + 2.0) * a, c2 = (a + 1.0) * alpha * alpha;
    const double c3 = 2.0 * n * (n + alpha) * (a + 2.0);
    const double d = 2.0 * (n + 1) * (n + alpha + 1.0) * a;
    const Poly lin{c1 * x.v + c2 * tau.v, c1 * x.g + c2 * tau.g};
    const Poly tt = tau * tau;
    const Poly t1 = lin * r[n], t2 = tt * r[n - 1];
    r[n + 1] = {(t1.v - c3 * t2.v) / d, (t1.g - c3 * t2.g) / d};
  }
  return r;
}

Poly affine(double c, double a0, double a1, double a2, const Vec3& xi) {
  return {c + a0 * xi[0] + a1 * xi[1] + a2 * xi[2], Vec3(a0, a1, a2)};
}

}  // namespace

Vec3 latticeToReference(ElementKind k, int order, const Lattice& l) {
  const int p = order;
  switch (k) {
    case ElementKind::Segment:
    case ElementKind::Quadrilateral:
    case ElementKind::Hexahedron: {
      const auto g = gllPoints(p);
      Vec3 r = Vec3::Zero();
      for (int d = 0; d < dimension(k); ++d) r[d] = g[l[d]];
      return r;
    }
    case ElementKind::Triangle:
    case ElementKind::Prism: {
      const auto lam = warpedBarycentric({p - l[0] - l[1], l[0], l[1]}, p);
      Vec3 r(-1.0 + 2.0 * lam[1], -1.0 + 2.0 * lam[2], 0.0);
      if (k == ElementKind::Prism) r[2] = gllPoints(p)[l[2]];
      return r;
    }
    case ElementKind::Tetrahedron: {
      const auto lam = warpedBarycentric({p - l[0] - l[1] - l[2], l[0], l[1], l[2]}, p);
      return Vec3(-1.0 + 2.0 * lam[1], -1.0 + 2.0 * lam[2], -1.0 + 2.0 * lam[3]);
    }
  }
  return Vec3::Zero();
}

std::vector<Vec3> sampleLattice(ElementKind k, int m) {
  std::vector<Vec3> out;
  auto c = [m](int i) { return -1.0 + 2.0 * i / m; };
  switch (k) {
    case ElementKind::Segment:
      for (int i = 0; i <= m; ++i) out.emplace_back(c(i), 0, 0);
      break;
    case ElementKind::Triangle:
      for (int j = 0; j <= m; ++j)
        for (int i = 0; i + j <= m; ++i) out.emplace_back(c(i), c(j), 0);
      break;
    case ElementKind::Quadrilateral:
      for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= m; ++i) out.emplace_back(c(i), c(j), 0);
      break;
    case ElementKind::Tetrahedron:
      for (int l = 0; l <= m; ++l)
        for (int j = 0; j + l <= m; ++j)
          for (int i = 0; i + j + l <= m; ++i) out.emplace_back(c(i), c(j), c(l));
      break;
    case ElementKind::Prism:
      for (int l = 0; l <= m; ++l)
        for (int j = 0; j <= m; ++j)
          for (int i = 0; i + j <= m; ++i) out.emplace_back(c(i), c(j), c(l));
      break;
    case ElementKind::Hexahedron:
      for (int l = 0; l <= m; ++l)
        for (int j = 0; j <= m; ++j)
          for (int i = 0; i <= m; ++i) out.emplace_back(c(i), c(j), c(l));
      break;
  }
  return out;
}

RefElement::RefElement(ElementKind kind, int order) : kind_(kind), order_(order), dim_(dimension(kind)) {
  const auto& topo = topology(kind, order);  // validates order
  const int p = order;
  switch (kind) {
    case ElementKind::Segment:
      for (int i = 0; i <= p; ++i) modes_.push_back({i, 0, 0});
      break;
    case ElementKind::Triangle:
      for (int j = 0; j <= p; ++j)
        for (int i = 0; i + j <= p; ++i) modes_.push_back({i, j, 0});
      break;
    case ElementKind::Quadrilateral:
      for (int j = 0; j <= p; ++j)
        for (int i = 0; i <= p; ++i) modes_.push_back({i, j, 0});
      break;
    case ElementKind::Tetrahedron:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j + l <= p; ++j)
          for (int i = 0; i + j + l <= p; ++i) modes_.push_back({i, j, l});
      break;
    case ElementKind::Prism:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j <= p; ++j)
          for (int i = 0; i + j <= p; ++i) modes_.push_back({i, j, l});
      break;
    case ElementKind::Hexahedron:
      for (int l = 0; l <= p; ++l)
        for (int j = 0; j <= p; ++j)
          for (int i = 0; i <= p; ++i) modes_.push_back({i, j, l});
      break;
  }
  for (const auto& l : topo.lattice()) nodes_.push_back(latticeToReference(kind, order, l));

  const auto n = static_cast<Eigen::Index>(nodes_.size());
  Eigen::MatrixXd vdm(n, n);
  Eigen::VectorXd vals;
  for (Eigen::Index r = 0; r < n; ++r) {
    modal(nodes_[r], vals, nullptr);
    vdm.row(r) = vals.transpose();
  }
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::FullPivLU<MatL> lu(vdm.cast<long double>());
  if (!lu.isInvertible())
    throw CapabilityError("interpolation nodes are not unisolvent for " + std::string(kindName(kind)));
  vinv_ = lu.inverse().cast<double>();

  samples_ = sampleLattice(kind, 2 * order);
  sampleGrads_ = modalGradientTable(samples_);
}

Eigen::MatrixXd RefElement::modalGradientTable(std::span<const Vec3> points) const {
  const auto n = static_cast<Eigen::Index>(modes_.size());
  Eigen::MatrixXd table(n, 3 * static_cast<Eigen::Index>(points.size()));
  Eigen::VectorXd vals;
  Eigen::MatrixXd g;
  for (std::size_t s = 0; s < points.size(); ++s) {
    modal(points[s], vals, &g);
    table.block(0, 3 * static_cast<Eigen::Index>(s), n, 3) = g;
  }
  return table;
}

void RefElement::modal(const Vec3& xi, Eigen::VectorXd& values, Eigen::MatrixXd* grads) const {
  const auto n = static_cast<Eigen::Index>(modes_.size());
  values.resize(n);
  if (grads) grads->setZero(n, 3);
  if (kind_ == ElementKind::Triangle || kind_ == ElementKind::Prism || kind_ == ElementKind::Tetrahedron) {
    simplexModal(xi, values, grads);
    return;
  }
  std::array<std::vector<double>, 3> p, dp;
  for (int d = 0; d < 3; ++d) {
    if (d < dim_) legendre(order_, xi[d], p[d], dp[d]);
    else {
      p[d].assign(order_ + 1, 0.0);
      dp[d].assign(order_ + 1, 0.0);
      p[d][0] = 1.0;
    }
  }
  for (Eigen::Index m = 0; m < n; ++m) {
    const auto& md = modes_[m];
    const double a = p[0][md[0]], b = p[1][md[1]], c = p[2][md[2]];
    values[m] = a * b * c;
    if (grads) {
      (*grads)(m, 0) = dp[0][md[0]] * b * c;
      (*grads)(m, 1) = a * dp[1][md[1]] * c;
      (*grads)(m, 2) = a * b * dp[2][md[2]];
    }
  }
}

// Orthogonal (Koornwinder) basis on triangles and tets, times Legendre in the
// prism extrusion direction.
void RefElement::simplexModal(const Vec3& xi, Eigen::VectorXd& values, Eigen::MatrixXd* grads) const {
  const int p = order_;
  const bool tet = kind_ == ElementKind::Tetrahedron;
  // first direction: Legendre in 2(1+r)/(-s-t) - 1 (tet) or 2(1+r)/(1-s) - 1
  const Poly x1 = tet ? affine(1.0, 1.0, 0.5, 0.5, xi) : affine(0.5, 1.0, 0.5, 0.0, xi);
  const Poly t1 = tet ? affine(0.0, 0.0, -0.5, -0.5, xi) : affine(0.5, 0.0, -0.5, 0.0, xi);
  const auto q = jacobiHomogeneous(p, 0.0, x1, t1);
  // second direction: Jacobi in 2(1+s)/(1-t) - 1 (tet) or s
  const Poly x2 = tet ? affine(0.5, 0.0, 1.0, 0.5, xi) : affine(0.0, 0.0, 1.0, 0.0, xi);
  const Poly t2 = tet ? affine(0.5, 0.0, 0.0, -0.5, xi) : Poly{1.0, Vec3::Zero()};
  std::vector<std::vector<Poly>> r(p + 1);
  for (int i = 0; i <= p; ++i) r[i] = jacobiHomogeneous(p - i, 2.0 * i + 1.0, x2, t2);
  std::vector<double> leg, dleg;
  if (kind_ == ElementKind::Prism) legendre(p, xi[2], leg, dleg);
  const Poly x3 = affine(0.0, 0.0, 0.0, 1.0, xi), one{1.0, Vec3::Zero()};
  std::vector<std::vector<Poly>> w;
  if (tet) {
    w.resize(p + 1);
    for (int ij = 0; ij <= p; ++ij) w[ij] = jacobiHomogeneous(p - ij, 2.0 * ij + 2.0, x3, one);
  }
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const auto& md = modes_[m];
    const int i = md[0], j = md[1], k = md[2];
    Poly f = q[i] * r[i][j];
    double norm = std::sqrt((2.0 * i + 1.0) * (i + j + 1.0) / 2.0);
    if (tet) {
      f = f * w[i + j][k];
      norm = std::sqrt((2.0 * i + 1.0) * (i + j + 1.0) * (2.0 * (i + j + k) + 3.0) / 4.0);
    } else if (kind_ == ElementKind::Prism) {
      f = f * Poly{leg[k], Vec3(0.0, 0.0, dleg[k])};
    }
    values[static_cast<Eigen::Index>(m)] = norm * f.v;
    if (grads) grads->row(static_cast<Eigen::Index>(m)) = norm * f.g.transpose();
  }
}

Eigen::VectorXd RefElement::nodalValues(const Vec3& xi) const {
  Eigen::VectorXd vals;
  modal(xi, vals, nullptr);
  return vinv_.transpose() * vals;
}

Eigen::MatrixXd RefElement::nodalGradients(const Vec3& xi) const {
  Eigen::VectorXd vals;
  Eigen::MatrixXd g;
  modal(xi, vals, &g);
  return vinv_.transpose() * g;
}

const RefElement& refElement(ElementKind kind, int order) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::unique_ptr<RefElement>> cache;
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({static_cast<int>(kind), order});
    if (it != cache.end()) return *it->second;
  }
  auto made = std::make_unique<RefElement>(kind, order);
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[{static_cast<int>(kind), order}];
  if (!slot) slot = std::move(made);
  return *slot;
}

std::vector<Vec3> referenceNodes(ElementKind kind, int order) { return refElement(kind, order).nodes(); }

ElementMapping::ElementMapping(const RefElement& ref, std::vector<Vec3> physNodes)
    : ref_(&ref), phys_(std::move(physNodes)) {
  if (phys_.size() != ref.size())
    throw StructuralError("element mapping: " + std::to_string(phys_.size()) + " physical nodes for " +
                          std::to_string(ref.size()) + " reference nodes");
  const auto n = static_cast<Eigen::Index>(phys_.size());
  Eigen::MatrixXd x(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = phys_[i].transpose();
  coef_ = ref.invVandermonde() * x;
  const int d = ref.dim();
  if (d == 1) {
    frame_ = (phys_[1] - phys_[0]).normalized();
  } else if (d == 2) {
    Vec3 nrm = ref.kind() == ElementKind::Triangle
                   ? Vec3((phys_[1] - phys_[0]).cross(phys_[2] - phys_[0]))
                   : Vec3((phys_[2] - phys_[0]).cross(phys_[3] - phys_[1]));
    frame_ = nrm.normalized();
  }
}

ElementMapping::ElementMapping(const Mesh& mesh, const Element& e)
    : ElementMapping(refElement(e.kind, e.order), mesh.coords(e)) {}

Vec3 ElementMapping::eval(const Vec3& xi) const {
  if (!inReferenceDomain(ref_->kind(), xi))
    throw DomainError("reference point outside the " + std::string(kindName(ref_->kind())) + " domain");
  Eigen::VectorXd vals;
  ref_->modal(xi, vals, nullptr);
  return coef_.transpose() * vals;
}

Eigen::Matrix3d ElementMapping::jacobian(const Vec3& xi) const {
  if (!inReferenceDomain(ref_->kind(), xi))
    throw DomainError("reference point outside the " + std::string(kindName(ref_->kind())) + " domain");
  Eigen::VectorXd vals;
  Eigen::MatrixXd g;
  ref_->modal(xi, vals, &g);
  return coef_.transpose() * g;
}

double ElementMapping::detFrom(const Eigen::Matrix3d& j) const {
  switch (ref_->dim()) {
    case 3: return j.determinant();
    case 2: return Vec3(j.col(0)).cross(Vec3(j.col(1))).dot(frame_);
    default: return j.col(0).dot(frame_);
  }
}

double ElementMapping::jacobianDet(const Vec3& xi) const { return detFrom(jacobian(xi)); }

std::vector<double> ElementMapping::sampleDeterminants() const {
  return determinants(ref_->sampleModalGradients());
}

std::vector<double> ElementMapping::determinants(const Eigen::MatrixXd& table) const {
  const Eigen::MatrixXd all = coef_.transpose() * table;  // 3 x 3S
  const auto s = static_cast<std::size_t>(table.cols() / 3);
  std::vector<double> out(s);
  for (std::size_t k = 0; k < s; ++k) {
    const Eigen::Matrix3d j = all.block<3, 3>(0, 3 * static_cast<Eigen::Index>(k));
    out[k] = detFrom(j);
  }
  return out;
}

namespace {
Validity summarize(const std::vector<double>& dets) {
  Validity v;
  v.minDet = *std::min_element(dets.begin(), dets.end());
  v.maxDet = *std::max_element(dets.begin(), dets.end());
  v.valid = v.minDet > 0.0;
  v.minScaledJacobian = v.maxDet != 0.0 ? v.minDet / std::abs(v.maxDet) : 0.0;
  return v;
}
}  // namespace

Validity checkValidity(const ElementMapping& m) { return summarize(m.sampleDeterminants()); }

std::vector<Validity> checkMeshValidity(const Mesh& mesh, Execution exec) {
  std::vector<Validity> out(mesh.elements.size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic, 16) if (exec == Execution::Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = checkValidity(ElementMapping(mesh, mesh.elements[i]));
  return out;
}

Validity checkValidityAt(const ElementMapping& m, std::span<const Vec3> points) {
  return summarize(m.determinants(m.ref().modalGradientTable(points)));
}

Validity checkValidityAt(const ElementMapping& m, const Eigen::MatrixXd& table) {
  return summarize(m.determinants(table));
}

}  // namespace homesh
