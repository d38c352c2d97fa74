#include "homesh/builtin.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

namespace homesh {

namespace {

using Vec2 = Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;

enum SurfaceId : int { kUpper = 1, kLower = 2, kCap = 3, kFloor = 4, kTop = 5 };
enum CurveId : int { kRootUpper = 1, kRootLower = 2, kTipUpper = 3, kTipLower = 4, kLeading = 5, kTrailing = 6 };

// Wall-mounted body. The cross-section lives in the (x, z) plane and is
// walked by a in [0, 1] from the leading pole to the trailing pole, on the
// upper (+1) or lower (-1) side. y is the span direction.
struct Body {
  std::function<Vec2(double, int)> point;
  std::function<Vec2(double, int)> normal;
  std::function<double(double, int)> param;
  std::function<Vec3(double, double)> capPoint;  // (a, theta); empty without cap
  std::function<Vec3(double, double)> capNormal;
  std::function<Vec2(double, double)> capParam;
  std::function<CadLink(double, double)> floorLink;  // (x, z)
  std::function<CadLink(double, double)> topLink;    // empty: top boundary untagged
};

struct Layout {
  int upper = 13, lower = 12;  // loop edges per side
  int spanCells = 17;          // hex row plus prism rows along the span
  int topLayers = 2;           // tet rows between the body top and the box top
  std::vector<int> capRows;    // edge counts of interior cap rows
  std::vector<int> rings;      // node counts of interior floor rings
  int sideX = 6, sideZ = 12;   // box edges on half an x side / on a z side
  double xmin = -2, xmax = 3, zmin = -1.5, zmax = 1.5;
  double y0 = 0, span = 1.5, ytop = 3;
  double shell = 0.05;
  double wrapRadius = 0.0;
  std::string bodyPatch = "wing", floorPatch = "floor";
  std::array<std::string, 5> sides{"xmin", "xmax", "zmin", "zmax", "top"};
  bool periodicZ = false;
};

double wrapAngle(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

struct Planar {
  std::vector<Vec2> pts;
  std::vector<std::array<int, 3>> tris;
};

// Closed strip between two rings ordered by increasing polar angle.
void stripClosed(const std::vector<int>& ra, const std::vector<double>& aa, const std::vector<int>& rb,
                 const std::vector<double>& ab, std::vector<std::array<int, 3>>& tris) {
  const std::size_t na = ra.size(), nb = rb.size();
  auto angA = [&](std::size_t i) { return i == na ? aa[0] + 2 * kPi : aa[i]; };
  auto angB = [&](std::size_t j) { return j == nb ? ab[0] + 2 * kPi : ab[j]; };
  std::size_t i = 0, j = 0;
  while (i < na || j < nb) {
    if (i < na && (j == nb || angA(i + 1) <= angB(j + 1))) {
      tris.push_back({ra[i], ra[(i + 1) % na], rb[j % nb]});
      ++i;
    } else {
      tris.push_back({ra[i % na], rb[(j + 1) % nb], rb[j]});
      ++j;
    }
  }
}

// Open strip between two pole-to-pole rows sharing their end points.
void stripOpen(const std::vector<int>& ra, const std::vector<double>& aa, const std::vector<int>& rb,
               const std::vector<double>& ab, std::vector<std::array<int, 3>>& tris) {
  const std::size_t na = ra.size() - 1, nb = rb.size() - 1;
  tris.push_back({ra[0], ra[1], rb[1]});
  std::size_t i = 1, j = 1;
  while (i < na - 1 || j < nb - 1) {
    if (i < na - 1 && (j == nb - 1 || aa[i + 1] <= ab[j + 1])) {
      tris.push_back({ra[i], ra[i + 1], rb[j]});
      ++i;
    } else {
      tris.push_back({ra[i], rb[j + 1], rb[j]});
      ++j;
    }
  }
  tris.push_back({ra[na - 1], ra[na], rb[nb - 1]});
}

class Builder {
 public:
  Builder(const Layout& lay, const Body& body) : lay_(lay), body_(body) {}
  Mesh build();

 private:
  void loop();
  void floorTriangulation();
  void capTriangulation();
  void nodes();
  void elements();
  void patches();

  void add(ElementKind kind, std::vector<NodeId> v, Region r);
  void column(const std::array<NodeId, 6>& v);
  void wall(std::vector<NodeId> v, const std::string& patch, int surface);
  CadLink wallLink(int i, int j) const;

  const Layout& lay_;
  const Body& body_;
  Mesh mesh_;
  int L_ = 0, N_ = 0, M_ = 0;
  std::vector<double> a_;
  std::vector<int> side_;
  std::vector<Vec2> loopPt_, outerPt_;
  std::vector<double> y_;
  Planar floor_;
  std::vector<double> capA_, capTheta_;  // interior cap vertices
  std::vector<std::array<int, 3>> capTris_;
  std::vector<std::vector<NodeId>> W_, F_, D_;
  std::vector<NodeId> C_;
  std::vector<int> partner_;
  std::vector<std::pair<NodeId, int>> rank_;
  std::map<std::vector<NodeId>, std::pair<std::string, int>> walls_;
};

void Builder::loop() {
  const int U = lay_.upper, Lw = lay_.lower;
  if (U < 2 || Lw < 2 || lay_.spanCells < 2 || lay_.topLayers < 0) throw ParameterError("builtin layout too coarse");
  L_ = U + Lw;
  N_ = lay_.spanCells;
  M_ = body_.capPoint ? lay_.topLayers : 0;
  for (int i = 0; i < L_; ++i) {
    if (i == 0) {
      a_.push_back(1.0), side_.push_back(1);
    } else if (i <= U) {
      a_.push_back(static_cast<double>(U - i) / U), side_.push_back(1);
    } else {
      a_.push_back(static_cast<double>(i - U) / Lw), side_.push_back(-1);
    }
    loopPt_.push_back(body_.point(a_[i], side_[i]));
    outerPt_.push_back(loopPt_[i] + lay_.shell * body_.normal(a_[i], side_[i]));
  }
  const double d = lay_.shell;
  y_.push_back(lay_.y0);
  for (int j = 1; j <= N_; ++j) y_.push_back(lay_.y0 + d + (lay_.span - d) * (j - 1) / (N_ - 1));
  for (int k = 1; k <= M_; ++k) y_.push_back(y_[N_] + (lay_.ytop - y_[N_]) * k / M_);
}

void Builder::floorTriangulation() {
  const Vec2 c(0.5 * (loopPt_[0].x() + loopPt_[lay_.upper].x()), 0.5 * (lay_.zmin + lay_.zmax));
  auto polar = [&](const Vec2& p) { return std::atan2(p.y() - c.y(), p.x() - c.x()); };

  std::vector<double> phi0(L_);
  for (int i = 0; i < L_; ++i) {
    phi0[i] = i == 0 ? polar(outerPt_[0]) : wrapAngle(polar(outerPt_[i]));
    if (i > 0 && !(phi0[i] > phi0[i - 1])) throw DomainError("builtin body shell is not star-shaped");
  }

  // box perimeter, counter-clockwise from (xmax, zc)
  const int a = lay_.sideX, b = lay_.sideZ;
  const double zc = c.y();
  std::vector<Vec2> rect;
  for (int k = 0; k < a; ++k) rect.emplace_back(lay_.xmax, zc + (lay_.zmax - zc) * k / a);
  for (int k = 0; k < b; ++k) rect.emplace_back(lay_.xmin + (lay_.xmax - lay_.xmin) * (b - k) / b, lay_.zmax);
  for (int k = 0; k < 2 * a; ++k) rect.emplace_back(lay_.xmin, lay_.zmax - (lay_.zmax - lay_.zmin) * k / (2 * a));
  for (int k = 0; k < b; ++k) rect.emplace_back(lay_.xmin + (lay_.xmax - lay_.xmin) * k / b, lay_.zmin);
  for (int k = 0; k < a; ++k) rect.emplace_back(lay_.xmax, lay_.zmin + (zc - lay_.zmin) * k / a);
  const int B = static_cast<int>(rect.size());
  std::vector<double> phiR(B);
  for (int k = 0; k < B; ++k) phiR[k] = k == 0 ? 0.0 : wrapAngle(polar(rect[k]));

  auto interp = [](const std::vector<double>& phi, double f) {
    const int n = static_cast<int>(phi.size());
    const double pos = f * n;
    const int i = std::min(static_cast<int>(pos), n - 1);
    const double hi = i + 1 == n ? phi[0] + 2 * kPi : phi[i + 1];
    return phi[i] + (pos - i) * (hi - phi[i]);
  };
  auto rhoShell = [&](double phi) {
    const Vec2 dir(std::cos(phi), std::sin(phi));
    int i = 0;
    double t = phi < phi0[0] ? phi + 2 * kPi : phi;
    while (i + 1 < L_ && phi0[i + 1] <= t) ++i;
    const Vec2 p = outerPt_[i], q = outerPt_[(i + 1) % L_];
    Eigen::Matrix2d m;
    m.col(0) = dir;
    m.col(1) = p - q;
    return (m.inverse() * (p - c))(0);
  };
  auto rhoBox = [&](double phi) {
    const double dx = std::cos(phi), dz = std::sin(phi);
    double r = std::numeric_limits<double>::infinity();
    if (dx > 1e-14) r = std::min(r, (lay_.xmax - c.x()) / dx);
    if (dx < -1e-14) r = std::min(r, (lay_.xmin - c.x()) / dx);
    if (dz > 1e-14) r = std::min(r, (lay_.zmax - c.y()) / dz);
    if (dz < -1e-14) r = std::min(r, (lay_.zmin - c.y()) / dz);
    return r;
  };

  std::vector<std::vector<int>> rings;
  std::vector<std::vector<double>> angles;
  auto& pts = floor_.pts;
  rings.emplace_back();
  for (int i = 0; i < L_; ++i) {
    rings.back().push_back(static_cast<int>(pts.size()));
    pts.push_back(outerPt_[i]);
  }
  angles.push_back(phi0);
  const int R = static_cast<int>(lay_.rings.size()) + 1;
  for (int r = 1; r < R; ++r) {
    const int n = lay_.rings[r - 1];
    const double s = static_cast<double>(r) / R;
    rings.emplace_back();
    angles.emplace_back();
    for (int k = 0; k < n; ++k) {
      const double f = static_cast<double>(k) / n;
      const double phi = (1 - s) * interp(phi0, f) + s * interp(phiR, f);
      const double rho = (1 - s) * rhoShell(phi) + s * rhoBox(phi);
      rings.back().push_back(static_cast<int>(pts.size()));
      angles.back().push_back(phi);
      pts.push_back(c + rho * Vec2(std::cos(phi), std::sin(phi)));
    }
  }
  rings.emplace_back();
  for (int k = 0; k < B; ++k) {
    rings.back().push_back(static_cast<int>(pts.size()));
    pts.push_back(rect[k]);
  }
  angles.push_back(phiR);
  for (int r = 0; r < R; ++r) stripClosed(rings[r], angles[r], rings[r + 1], angles[r + 1], floor_.tris);

  for (const auto& t : floor_.tris) {
    const Vec2 e1 = pts[t[1]] - pts[t[0]], e2 = pts[t[2]] - pts[t[0]];
    if (!(e1.x() * e2.y() - e1.y() * e2.x() < 0.0)) throw DomainError("builtin floor triangulation folds");
  }

  partner_.assign(pts.size(), -1);
  if (lay_.periodicZ) {
    const double tol = 1e-12 * (lay_.xmax - lay_.xmin);
    for (std::size_t f = 0; f < pts.size(); ++f) {
      if (std::abs(pts[f].y() - lay_.zmax) > tol) continue;
      for (std::size_t g = 0; g < pts.size(); ++g)
        if (std::abs(pts[g].y() - lay_.zmin) <= tol && std::abs(pts[g].x() - pts[f].x()) <= tol)
          partner_[f] = static_cast<int>(g);
      if (partner_[f] < 0) throw TopologyError("builtin periodic sides do not match");
    }
  }
}

void Builder::capTriangulation() {
  if (!body_.capPoint) return;
  const int U = lay_.upper, Lw = lay_.lower;
  const int K = static_cast<int>(lay_.capRows.size()) + 1;
  std::vector<std::vector<int>> rows(K + 1);
  std::vector<std::vector<double>> rowA(K + 1);
  for (int j = 0; j <= U; ++j) {
    rows[0].push_back(U - j);
    rowA[0].push_back(static_cast<double>(j) / U);
  }
  for (int j = 0; j <= Lw; ++j) {
    rows[K].push_back(j == Lw ? 0 : U + j);
    rowA[K].push_back(static_cast<double>(j) / Lw);
  }
  for (int k = 1; k < K; ++k) {
    const int n = lay_.capRows[k - 1];
    if (n < 2) throw ParameterError("builtin cap row too coarse");
    rows[k].push_back(U);
    rowA[k].push_back(0.0);
    for (int j = 1; j < n; ++j) {
      rows[k].push_back(L_ + static_cast<int>(capA_.size()));
      rowA[k].push_back(static_cast<double>(j) / n);
      capA_.push_back(static_cast<double>(j) / n);
      capTheta_.push_back(kPi * k / K);
    }
    rows[k].push_back(0);
    rowA[k].push_back(1.0);
  }
  for (int k = 0; k < K; ++k) stripOpen(rows[k], rowA[k], rows[k + 1], rowA[k + 1], capTris_);
}

CadLink Builder::wallLink(int i, int j) const {
  const double a = a_[i];
  const int s = side_[i];
  if (a <= 0.0) return CadLink::curve(kLeading, y_[j]);
  if (a >= 1.0) return CadLink::curve(kTrailing, y_[j]);
  const double t = body_.param(a, s);
  if (j == 0) return CadLink::curve(s > 0 ? kRootUpper : kRootLower, t);
  if (j == N_ && (body_.capPoint || body_.topLink)) return CadLink::curve(s > 0 ? kTipUpper : kTipLower, t);
  return CadLink::surface(s > 0 ? kUpper : kLower, t, y_[j]);
}

void Builder::nodes() {
  const int top = N_ + M_;
  W_.assign(N_ + 1, {});
  for (int j = 0; j <= N_; ++j)
    for (int i = 0; i < L_; ++i)
      W_[j].push_back(mesh_.addNode(Vec3(loopPt_[i].x(), y_[j], loopPt_[i].y()), wallLink(i, j)));
  F_.assign(floor_.pts.size(), {});
  for (std::size_t f = 0; f < floor_.pts.size(); ++f) {
    const Vec2& p = floor_.pts[f];
    for (int l = 0; l <= top; ++l) {
      std::optional<CadLink> link;
      if (l == 0) link = body_.floorLink(p.x(), p.y());
      if (l == top && body_.topLink) link = body_.topLink(p.x(), p.y());
      F_[f].push_back(mesh_.addNode(Vec3(p.x(), y_[l], p.y()), link));
    }
  }
  for (std::size_t c = 0; c < capA_.size(); ++c) {
    const Vec3 x = body_.capPoint(capA_[c], capTheta_[c]);
    const Vec2 uv = body_.capParam(capA_[c], capTheta_[c]);
    C_.push_back(mesh_.addNode(x, CadLink::surface(kCap, uv.x(), uv.y())));
    const Vec3 d = x + lay_.shell * body_.capNormal(capA_[c], capTheta_[c]);
    D_.emplace_back();
    for (int k = 0; k <= M_; ++k) {
      const Vec3 q(d.x(), d.y() + (lay_.ytop - d.y()) * k / M_, d.z());
      std::optional<CadLink> link;
      if (k == M_ && body_.topLink) link = body_.topLink(q.x(), q.z());
      D_.back().push_back(mesh_.addNode(q, link));
    }
  }
  rank_.resize(mesh_.nodes.size());
  for (const auto& n : mesh_.nodes) rank_[n.id] = {n.id, 0};
  for (std::size_t f = 0; f < F_.size(); ++f)
    if (partner_[f] >= 0)
      for (int l = 0; l <= top; ++l) rank_[F_[f][l]] = {F_[partner_[f]][l], 1};
}

void Builder::add(ElementKind kind, std::vector<NodeId> v, Region r) {
  auto X = [&](int i) { return mesh_.x(v[i]); };
  switch (kind) {
    case ElementKind::Tetrahedron:
      if ((X(1) - X(0)).cross(X(2) - X(0)).dot(X(3) - X(0)) < 0) std::swap(v[1], v[2]);
      break;
    case ElementKind::Prism:
      if ((X(1) - X(0)).cross(X(2) - X(0)).dot(X(3) - X(0)) < 0) {
        std::swap(v[1], v[2]);
        std::swap(v[4], v[5]);
      }
      break;
    case ElementKind::Hexahedron:
      if ((X(1) - X(0)).cross(X(3) - X(0)).dot(X(4) - X(0)) < 0) v = {v[1], v[0], v[3], v[2], v[5], v[4], v[7], v[6]};
      break;
    default: break;
  }
  const std::size_t nf = referenceFacets(kind).size();
  mesh_.elements.push_back({kind, 1, std::move(v), r, std::vector<std::optional<int>>(nf)});
}

// Vertical prism (bottom 0 1 2, top 3 4 5) cut into three tets; every quad
// diagonal runs through the quad's lowest-ranked vertex.
void Builder::column(const std::array<NodeId, 6>& v) {
  auto rk = [&](int i) { return rank_[v[i]]; };
  int lo = 0;
  for (int i = 1; i < 6; ++i)
    if (rk(i) < rk(lo)) lo = i;
  std::array<int, 6> p;
  if (lo < 3) {
    p = {lo, (lo + 1) % 3, (lo + 2) % 3, lo + 3, (lo + 1) % 3 + 3, (lo + 2) % 3 + 3};
  } else {
    const int b = lo - 3;
    p = {lo, (b + 1) % 3 + 3, (b + 2) % 3 + 3, b, (b + 1) % 3, (b + 2) % 3};
  }
  std::array<NodeId, 6> w;
  for (int i = 0; i < 6; ++i) w[i] = v[p[i]];
  auto r = [&](int i) { return rank_[w[i]]; };
  const auto far = Region::FarField;
  if (std::min(r(1), r(5)) < std::min(r(2), r(4))) {
    add(ElementKind::Tetrahedron, {w[0], w[1], w[2], w[5]}, far);
    add(ElementKind::Tetrahedron, {w[0], w[1], w[5], w[4]}, far);
  } else {
    add(ElementKind::Tetrahedron, {w[0], w[1], w[2], w[4]}, far);
    add(ElementKind::Tetrahedron, {w[0], w[4], w[2], w[5]}, far);
  }
  add(ElementKind::Tetrahedron, {w[0], w[4], w[5], w[3]}, far);
}

void Builder::wall(std::vector<NodeId> v, const std::string& patch, int surface) {
  std::sort(v.begin(), v.end());
  walls_[v] = {patch, surface};
}

void Builder::elements() {
  const auto near = Region::NearField;
  const std::string& bp = lay_.bodyPatch;
  auto edgeSurface = [&](int i) {
    const int i1 = (i + 1) % L_;
    const int s = a_[i] > 0.0 && a_[i] < 1.0 ? side_[i] : side_[i1];
    return s > 0 ? kUpper : kLower;
  };

  for (int i = 0; i < L_; ++i) {
    const int i1 = (i + 1) % L_;
    add(ElementKind::Hexahedron,
        {W_[0][i], W_[0][i1], F_[i1][0], F_[i][0], W_[1][i], W_[1][i1], F_[i1][1], F_[i][1]}, near);
    wall({W_[0][i], W_[0][i1], W_[1][i1], W_[1][i]}, bp, edgeSurface(i));
    wall({W_[0][i], W_[0][i1], F_[i1][0], F_[i][0]}, lay_.floorPatch, kFloor);
  }

  for (int j = 1; j < N_; ++j)
    for (int i = 0; i < L_; ++i) {
      const int i1 = (i + 1) % L_;
      const std::array<NodeId, 4> w{W_[j][i], W_[j][i1], W_[j + 1][i1], W_[j + 1][i]};
      const std::array<NodeId, 4> o{F_[i][j], F_[i1][j], F_[i1][j + 1], F_[i][j + 1]};
      int lo = 0;
      for (int k = 1; k < 4; ++k)
        if (rank_[o[k]] < rank_[o[lo]]) lo = k;
      const std::array<std::array<int, 3>, 2> tri =
          lo % 2 == 0 ? std::array<std::array<int, 3>, 2>{{{0, 1, 2}, {0, 2, 3}}}
                      : std::array<std::array<int, 3>, 2>{{{0, 1, 3}, {1, 2, 3}}};
      for (const auto& t : tri) {
        add(ElementKind::Prism, {w[t[0]], w[t[1]], w[t[2]], o[t[0]], o[t[1]], o[t[2]]}, near);
        wall({w[t[0]], w[t[1]], w[t[2]]}, bp, edgeSurface(i));
      }
    }

  auto capWall = [&](int v) { return v < L_ ? W_[N_][v] : C_[v - L_]; };
  auto capOuter = [&](int v, int k) { return v < L_ ? F_[v][N_ + k] : D_[v - L_][k]; };
  for (const auto& t : capTris_) {
    add(ElementKind::Prism,
        {capWall(t[0]), capWall(t[1]), capWall(t[2]), capOuter(t[0], 0), capOuter(t[1], 0), capOuter(t[2], 0)},
        near);
    wall({capWall(t[0]), capWall(t[1]), capWall(t[2])}, bp, kCap);
  }

  for (const auto& t : floor_.tris) {
    add(ElementKind::Prism, {F_[t[0]][0], F_[t[1]][0], F_[t[2]][0], F_[t[0]][1], F_[t[1]][1], F_[t[2]][1]}, near);
    wall({F_[t[0]][0], F_[t[1]][0], F_[t[2]][0]}, lay_.floorPatch, kFloor);
  }

  for (int l = 1; l < N_ + M_; ++l)
    for (const auto& t : floor_.tris)
      column({F_[t[0]][l], F_[t[1]][l], F_[t[2]][l], F_[t[0]][l + 1], F_[t[1]][l + 1], F_[t[2]][l + 1]});
  for (int k = 0; k < M_; ++k)
    for (const auto& t : capTris_)
      column({capOuter(t[0], k), capOuter(t[1], k), capOuter(t[2], k), capOuter(t[0], k + 1), capOuter(t[1], k + 1),
              capOuter(t[2], k + 1)});
}

void Builder::patches() {
  std::map<std::vector<NodeId>, int> seen;
  auto key = [&](const Element& e, int f) {
    std::vector<NodeId> k;
    for (int v : referenceFacets(e.kind)[f].vertices) k.push_back(e.nodes[v]);
    std::sort(k.begin(), k.end());
    return k;
  };
  for (const auto& e : mesh_.elements)
    for (int f = 0; f < static_cast<int>(referenceFacets(e.kind).size()); ++f) ++seen[key(e, f)];

  const double tol = 1e-9 * (lay_.xmax - lay_.xmin);
  const std::array<std::function<double(const Vec3&)>, 5> dist{
      [&](const Vec3& x) { return x.x() - lay_.xmin; }, [&](const Vec3& x) { return x.x() - lay_.xmax; },
      [&](const Vec3& x) { return x.z() - lay_.zmin; }, [&](const Vec3& x) { return x.z() - lay_.zmax; },
      [&](const Vec3& x) { return x.y() - lay_.ytop; }};
  for (std::size_t ei = 0; ei < mesh_.elements.size(); ++ei) {
    auto& e = mesh_.elements[ei];
    for (int f = 0; f < static_cast<int>(referenceFacets(e.kind).size()); ++f) {
      const auto k = key(e, f);
      if (auto it = walls_.find(k); it != walls_.end()) {
        mesh_.patches[it->second.first].push_back({ei, f});
        e.faceCadTags[f] = it->second.second;
        continue;
      }
      if (seen[k] != 1) continue;
      int side = -1;
      for (int s = 0; s < 5 && side < 0; ++s)
        if (std::all_of(k.begin(), k.end(), [&](NodeId id) { return std::abs(dist[s](mesh_.x(id))) <= tol; }))
          side = s;
      if (side < 0) throw TopologyError("builtin mesh has an unclassified boundary face");
      mesh_.patches[lay_.sides[side]].push_back({ei, f});
      if (side == 4 && body_.topLink) e.faceCadTags[f] = kTop;
    }
  }
}

Mesh Builder::build() {
  loop();
  floorTriangulation();
  capTriangulation();
  nodes();
  elements();
  patches();
  if (lay_.wrapRadius > 0.0) {
    const double r = lay_.wrapRadius;
    for (auto& n : mesh_.nodes) {
      const Vec3 p = n.x;
      n.x = Vec3(p.x(), p.y() * std::cos(p.z() / r), p.y() * std::sin(p.z() / r));
    }
  }
  return std::move(mesh_);
}

// ---------------------------------------------------------------------------
// Geometries
// ---------------------------------------------------------------------------

CadCurve isoCurve(int id, int surface, bool alongU, double fixed, double lo, double hi, std::vector<int> adj) {
  return CadCurve{id, IsoCurve{surface, alongU, fixed, nullptr}, lo, hi, std::move(adj)};
}

Body nacaBody(double chord, double tau, double y0) {
  const CadSurface flat{0, ExtrudedSection{Vec3::Zero(), chord, tau}, -1.0, 1.0, y0, y0 + 1.0};
  Body b;
  b.point = [flat, y0](double a, int s) {
    const Vec3 p = evalSurface(flat, s * a, y0);
    return Vec2(p.x(), p.z());
  };
  b.normal = [flat, y0](double a, int s) {
    if (a >= 1.0) return Vec2(1.0, 0.0);
    const Vec3 du = derivSurface(flat, s * a, y0).du;
    return Vec2(-du.z(), du.x()).normalized();
  };
  b.param = [](double a, int s) { return s * a; };
  return b;
}

BuiltinGeometry wingBox(const std::string& name, double shell, int upper, int lower, int spanCells,
                        std::vector<int> capRows, std::vector<int> rings, double span) {
  const double chord = 1.0, tau = 0.12;
  Layout lay;
  lay.upper = upper;
  lay.lower = lower;
  lay.spanCells = spanCells;
  lay.topLayers = 2;
  lay.capRows = std::move(capRows);
  lay.rings = std::move(rings);
  lay.span = span;
  lay.ytop = span + 1.5;
  lay.shell = shell * chord;

  BuiltinGeometry g;
  g.name = name;
  auto& reg = g.registry;
  reg.addSurface({kUpper, ExtrudedSection{Vec3::Zero(), chord, tau}, 0.0, 1.0, lay.y0, lay.y0 + span});
  reg.addSurface({kLower, ExtrudedSection{Vec3::Zero(), chord, tau}, -1.0, 0.0, lay.y0, lay.y0 + span});
  const LoftedSection tip{Vec3(0, lay.y0 + span, 0), chord, tau};
  reg.addSurface({kCap, tip, 0.0, 1.0, 0.0, kPi});
  reg.addSurface({kFloor, PlaneSurface{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitZ()}, lay.xmin, lay.xmax, lay.zmin,
                  lay.zmax});
  reg.addCurve(isoCurve(kRootUpper, kUpper, true, lay.y0, 0.0, 1.0, {kUpper, kFloor}));
  reg.addCurve(isoCurve(kRootLower, kLower, true, lay.y0, -1.0, 0.0, {kLower, kFloor}));
  reg.addCurve(isoCurve(kTipUpper, kUpper, true, lay.y0 + span, 0.0, 1.0, {kUpper, kCap}));
  reg.addCurve(isoCurve(kTipLower, kLower, true, lay.y0 + span, -1.0, 0.0, {kLower, kCap}));
  reg.addCurve(isoCurve(kLeading, kUpper, false, 0.0, lay.y0, lay.y0 + span, {kUpper, kLower}));
  reg.addCurve(isoCurve(kTrailing, kUpper, false, 1.0, lay.y0, lay.y0 + span, {kUpper, kLower}));
  reg.bbox = {Vec3(lay.xmin, lay.y0, lay.zmin), Vec3(lay.xmax, lay.ytop, lay.zmax)};

  Body body = nacaBody(chord, tau, lay.y0);
  const CadSurface cap{kCap, tip, 0.0, 1.0, 0.0, kPi};
  body.capPoint = [cap](double a, double t) { return evalSurface(cap, a, t); };
  body.capNormal = [cap](double a, double t) {
    const auto d = derivSurface(cap, a, t);
    return Vec3(d.du.cross(d.dv).normalized());
  };
  body.capParam = [](double a, double t) { return Vec2(a, t); };
  body.floorLink = [](double x, double z) { return CadLink::surface(kFloor, x, z); };

  g.mesh = Builder(lay, body).build();
  g.mesh.geometryRef = name;
  g.wallPatches = {lay.bodyPatch, lay.floorPatch};
  return g;
}

BuiltinGeometry cylinderBox(double shell) {
  const double radius = 0.5;
  Layout lay;
  lay.upper = lay.lower = 12;
  lay.spanCells = 8;
  lay.topLayers = 2;
  lay.capRows = std::vector<int>(7, 12);
  lay.rings = {28, 36};
  lay.xmin = -2.5;
  lay.xmax = 2.5;
  lay.span = 1.5;
  lay.ytop = 3.0;
  lay.shell = shell * 2 * radius;
  lay.bodyPatch = "cylinder";

  BuiltinGeometry g;
  g.name = "cylinder-box";
  auto& reg = g.registry;
  const CylinderSurface cyl{Vec3::Zero(), radius, Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY()};
  reg.addSurface({kUpper, cyl, 0.0, kPi, lay.y0, lay.span});
  reg.addSurface({kLower, cyl, kPi, 2 * kPi, lay.y0, lay.span});
  const SphereSurface dome{Vec3(0, lay.span, 0), radius, Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX()};
  reg.addSurface({kCap, dome, 0.0, kPi, 0.0, kPi});
  reg.addSurface({kFloor, PlaneSurface{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitZ()}, lay.xmin, lay.xmax, lay.zmin,
                  lay.zmax});
  reg.addCurve(isoCurve(kRootUpper, kUpper, true, lay.y0, 0.0, kPi, {kUpper, kFloor}));
  reg.addCurve(isoCurve(kRootLower, kLower, true, lay.y0, kPi, 2 * kPi, {kLower, kFloor}));
  reg.addCurve(isoCurve(kTipUpper, kUpper, true, lay.span, 0.0, kPi, {kUpper, kCap}));
  reg.addCurve(isoCurve(kTipLower, kLower, true, lay.span, kPi, 2 * kPi, {kLower, kCap}));
  reg.addCurve(isoCurve(kLeading, kUpper, false, kPi, lay.y0, lay.span, {kUpper, kLower}));
  reg.addCurve(isoCurve(kTrailing, kUpper, false, 0.0, lay.y0, lay.span, {kUpper, kLower}));
  reg.bbox = {Vec3(lay.xmin, lay.y0, lay.zmin), Vec3(lay.xmax, lay.ytop, lay.zmax)};

  Body body;
  body.point = [radius](double a, int s) { return Vec2(-radius * std::cos(kPi * a), s * radius * std::sin(kPi * a)); };
  body.normal = [](double a, int s) { return Vec2(-std::cos(kPi * a), s * std::sin(kPi * a)); };
  body.param = [](double a, int s) { return s > 0 ? kPi * (1 - a) : kPi * (1 + a); };
  const CadSurface cap{kCap, dome, 0.0, kPi, 0.0, kPi};
  const Vec3 centre = dome.center;
  body.capPoint = [cap](double a, double t) { return evalSurface(cap, t, kPi * (1 - a)); };
  body.capNormal = [cap, centre, radius](double a, double t) {
    return Vec3((evalSurface(cap, t, kPi * (1 - a)) - centre) / radius);
  };
  body.capParam = [](double a, double t) { return Vec2(t, kPi * (1 - a)); };
  body.floorLink = [](double x, double z) { return CadLink::surface(kFloor, x, z); };

  g.mesh = Builder(lay, body).build();
  g.mesh.geometryRef = g.name;
  g.wallPatches = {lay.bodyPatch, lay.floorPatch};
  return g;
}

BuiltinGeometry rotorWedge(double shell) {
  const double chord = 1.0, tau = 0.12, wrap = 2.0, hub = 1.0, casing = 2.0;
  const double half = kPi / 22.0;
  Layout lay;
  lay.upper = 13;
  lay.lower = 12;
  lay.spanCells = 10;
  lay.topLayers = 0;
  lay.rings = {30, 36};
  lay.sideX = 2;
  lay.sideZ = 20;
  lay.xmin = -1.0;
  lay.xmax = 2.0;
  lay.zmin = -wrap * half;
  lay.zmax = wrap * half;
  lay.y0 = hub;
  lay.span = casing - hub;
  lay.ytop = casing;
  lay.shell = shell * chord;
  lay.wrapRadius = wrap;
  lay.bodyPatch = "blade";
  lay.floorPatch = "hub";
  lay.sides = {"inlet", "outlet", "periodic-a", "periodic-b", "casing"};
  lay.periodicZ = true;

  BuiltinGeometry g;
  g.name = "rotor-wedge";
  auto& reg = g.registry;
  ExtrudedSection blade{Vec3::Zero(), chord, tau};
  blade.wrapRadius = wrap;
  reg.addSurface({kUpper, blade, 0.0, 1.0, hub, casing});
  reg.addSurface({kLower, blade, -1.0, 0.0, hub, casing});
  reg.addSurface({kFloor, CylinderSurface{Vec3::Zero(), hub, Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()},
                  -half, half, lay.xmin, lay.xmax});
  reg.addSurface({kTop, CylinderSurface{Vec3::Zero(), casing, Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()},
                  -half, half, lay.xmin, lay.xmax});
  reg.addCurve(isoCurve(kRootUpper, kUpper, true, hub, 0.0, 1.0, {kUpper, kFloor}));
  reg.addCurve(isoCurve(kRootLower, kLower, true, hub, -1.0, 0.0, {kLower, kFloor}));
  reg.addCurve(isoCurve(kTipUpper, kUpper, true, casing, 0.0, 1.0, {kUpper, kTop}));
  reg.addCurve(isoCurve(kTipLower, kLower, true, casing, -1.0, 0.0, {kLower, kTop}));
  reg.addCurve(isoCurve(kLeading, kUpper, false, 0.0, hub, casing, {kUpper, kLower}));
  reg.addCurve(isoCurve(kTrailing, kUpper, false, 1.0, hub, casing, {kUpper, kLower}));
  reg.bbox = {Vec3(lay.xmin, hub * std::cos(half), -casing * std::sin(half)),
              Vec3(lay.xmax, casing, casing * std::sin(half))};

  Body body = nacaBody(chord, tau, hub);
  body.floorLink = [wrap](double x, double z) { return CadLink::surface(kFloor, z / wrap, x); };
  body.topLink = [wrap](double x, double z) { return CadLink::surface(kTop, z / wrap, x); };

  g.mesh = Builder(lay, body).build();
  g.mesh.geometryRef = g.name;
  g.wallPatches = {lay.bodyPatch, lay.floorPatch};
  g.periodic = PeriodicPair{"periodic-a", "periodic-b",
                            PeriodicMap::make(Vec3::Zero(), Vec3::UnitX(), 2.0 * kPi / 22.0)};
  return g;
}

}  // namespace

std::vector<std::string> builtinNames() { return {"wingtip-box", "crm-census", "cylinder-box", "rotor-wedge"}; }

BuiltinGeometry builtinGeometry(const std::string& name, const BuiltinOptions& opt) {
  if (!(opt.shell > 0.0 && opt.shell <= 0.2)) throw ParameterError("shell thickness must lie in (0, 0.2]");
  if (name == "wingtip-box")
    return wingBox(name, opt.shell, 13, 12, 17, {14, 15, 15, 15, 15, 15, 14}, {32, 36}, 1.5);
  if (name == "crm-census")
    return wingBox(name, opt.shell, 17, 16, 25, {16, 16, 16, 17, 17, 16, 16}, {30, 36}, 2.5);
  if (name == "cylinder-box") return cylinderBox(opt.shell);
  if (name == "rotor-wedge") return rotorWedge(opt.shell);
  throw LookupError("unknown built-in geometry '" + name + "'");
}

}  // namespace homesh
