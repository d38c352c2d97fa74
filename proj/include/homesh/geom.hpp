#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "homesh/errors.hpp"
#include "homesh/mesh.hpp"

namespace homesh {

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// x(t) = a + t (b - a), t in [0, 1] by default.
struct LineCurve {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::UnitX();
};

/// x(t) = c + R (cos t e1 + sin t e2), t in radians.
struct ArcCurve {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
};

/// Clamped B-spline: knots.size() == poles.size() + degree + 1.
struct BSplineCurve {
  int degree = 3;
  std::vector<double> knots;
  std::vector<Vec3> poles;
};

/// x(t) = c + R (cos t e1 + sin t e2) + pitch t e3.
struct HelixCurve {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double pitch = 0.0;
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
  Vec3 e3 = Vec3::UnitZ();
};

struct CadSurface;

/// Iso-parameter line of a surface: u varies (alongU) at v = fixed, or the reverse.
struct IsoCurve {
  int surface = -1;
  bool alongU = true;
  double fixed = 0.0;
  std::shared_ptr<const CadSurface> bound;  // resolved by the registry
};

using CurveShape = std::variant<LineCurve, ArcCurve, BSplineCurve, HelixCurve, IsoCurve>;

struct CadCurve {
  int id = -1;
  CurveShape shape;
  double tLo = 0.0, tHi = 1.0;
  /// Surfaces meeting along this curve (at most two), or empty.
  std::vector<int> adjacentSurfaces;
};

std::string_view curveKindName(const CadCurve& c);

Vec3 evalCurve(const CadCurve& c, double t);
/// k-th derivative, k in {0, 1, 2}.
Vec3 derivCurve(const CadCurve& c, double t, int k);

// ---------------------------------------------------------------------------
// Surfaces
// ---------------------------------------------------------------------------

/// x(u, v) = o + u eu + v ev.
struct PlaneSurface {
  Vec3 origin = Vec3::Zero();
  Vec3 eu = Vec3::UnitX();
  Vec3 ev = Vec3::UnitY();
};

/// x(u, v) = c + R (cos u e1 + sin u e2) + v e3. u is the angle.
struct CylinderSurface {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
  Vec3 e3 = Vec3::UnitZ();
};

/// x(u, v) = c + R (sin v cos u e1 + sin v sin u e2 + cos v e3).
/// u is longitude, v colatitude; degenerate at v = 0 and v = pi.
struct SphereSurface {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
  Vec3 e3 = Vec3::UnitZ();
};

/// Tensor-product clamped B-spline. poles[i + nu * j], i along u.
struct BSplinePatch {
  int degreeU = 3, degreeV = 3;
  std::vector<double> knotsU, knotsV;
  int nu = 0, nv = 0;
  std::vector<Vec3> poles;
};

/// NACA 4-digit symmetric section extruded along the span (closed trailing edge).
///
/// Local coordinates: X = chord * u^2, Y = v, Z = z(u) with
///   z(u) = 5 tau c (0.2969 u - 0.126 u|u| - 0.3516 u^3|u| + 0.2843 u^5|u| - 0.1036 u^7|u|),
/// u in [-1, 1] (u > 0 upper side, u = 0 leading edge, |u| = 1 trailing edge).
/// Physical x = origin + X ex + Y ey + Z ez or, if wrapRadius R > 0,
/// x = origin + X ex + Y (cos(Z/R) ey + sin(Z/R) ez): the section is wrapped
/// around the axis (origin, ex), Y becoming the radius. Then v = const lies on
/// a cylinder of radius v.
struct ExtrudedSection {
  Vec3 origin = Vec3::Zero();
  double chord = 1.0;
  double thickness = 0.12;  // tau
  Vec3 ex = Vec3::UnitX();
  Vec3 ey = Vec3::UnitY();
  Vec3 ez = Vec3::UnitZ();
  double wrapRadius = 0.0;
};

/// Rounded tip: the section revolved about its chord line (half body of revolution).
///   x(u, theta) = origin + c u^2 ex + h(u) (sin theta ey + cos theta ez),
/// u in [0, 1], theta in [0, pi], h = NACA half thickness at chord fraction u^2.
/// Degenerate at u = 0 and u = 1.
struct LoftedSection {
  Vec3 origin = Vec3::Zero();
  double chord = 1.0;
  double thickness = 0.12;
  Vec3 ex = Vec3::UnitX();
  Vec3 ey = Vec3::UnitY();
  Vec3 ez = Vec3::UnitZ();
};

using SurfaceShape =
    std::variant<PlaneSurface, CylinderSurface, SphereSurface, BSplinePatch, ExtrudedSection, LoftedSection>;

struct CadSurface {
  int id = -1;
  SurfaceShape shape;
  double uLo = 0.0, uHi = 1.0, vLo = 0.0, vHi = 1.0;
};

std::string_view surfaceKindName(const CadSurface& s);

struct SurfaceDerivs {
  Vec3 x, du, dv, duu, duv, dvv;
};

Vec3 evalSurface(const CadSurface& s, double u, double v);
SurfaceDerivs derivSurface(const CadSurface& s, double u, double v);

/// NACA 4-digit half thickness at chord fraction xc in [0, 1], closed trailing edge.
double nacaHalfThickness(double thickness, double chord, double xc);

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

struct SurfaceProjection {
  double u = 0.0, v = 0.0;
  double distance = 0.0;
  Vec3 point = Vec3::Zero();
};

struct CurveProjection {
  double t = 0.0;
  double distance = 0.0;
  Vec3 point = Vec3::Zero();
};

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, SurfaceProjection best)
      : Error(ErrorClass::Numerical, what), surface(best) {}
  ProjectionError(const std::string& what, CurveProjection best)
      : Error(ErrorClass::Numerical, what), curve(best) {}
  std::optional<SurfaceProjection> surface;
  std::optional<CurveProjection> curve;
};

/// Global closest point: 16 x 16 start grid, bounded Newton from the best starts.
SurfaceProjection projectToSurface(const CadSurface& s, const Vec3& x);
/// Local closest point starting from (u0, v0).
SurfaceProjection projectToSurfaceNear(const CadSurface& s, const Vec3& x, double u0, double v0);

/// Global closest point on a curve: 64-start grid, bounded Newton.
CurveProjection projectToCurve(const CadCurve& c, const Vec3& x);
CurveProjection projectToCurveNear(const CadCurve& c, const Vec3& x, double t0);

/// Projected gradient of |S(u,v) - x|^2 (components pushing out of the box are zeroed).
Eigen::Vector2d projectedDistanceGradient(const CadSurface& s, const Vec3& x, double u, double v);
double projectedDistanceGradient(const CadCurve& c, const Vec3& x, double t);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

class CadRegistry {
 public:
  void addSurface(CadSurface s);
  /// Iso curves are bound to their surface here; the surface must exist.
  void addCurve(CadCurve c);

  const CadSurface& surface(int id) const;
  const CadCurve& curve(int id) const;
  bool hasSurface(int id) const { return surfaces_.count(id) != 0; }
  bool hasCurve(int id) const { return curves_.count(id) != 0; }

  /// Curve shared by two surfaces, if any (lowest id when several).
  std::optional<int> curveBetween(int s1, int s2) const;
  /// All curves adjacent to both surfaces, ascending ids.
  std::vector<int> curvesBetween(int s1, int s2) const;

  std::vector<int> surfaceIds() const;
  std::vector<int> curveIds() const;

  /// Axis-aligned domain box (lo, hi); informational.
  std::array<Vec3, 2> bbox{Vec3::Zero(), Vec3::Zero()};

 private:
  std::map<int, std::shared_ptr<const CadSurface>> surfaces_;
  std::map<int, CadCurve> curves_;
};

/// Evaluates a mesh node's CAD link.
Vec3 evalLink(const CadRegistry& reg, const CadLink& link);

}  // namespace homesh
