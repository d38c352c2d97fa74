#include "homesh/geom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace homesh {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double checkParam(double t, double lo, double hi, const char* what) {
  const double tol = 1e-12 * std::max(1.0, hi - lo);
  if (!(t >= lo - tol && t <= hi + tol))
    throw DomainError(std::string(what) + " parameter " + std::to_string(t) + " outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  return std::clamp(t, lo, hi);
}

// ---- B-spline basis (clamped knot vectors) --------------------------------

int findSpan(int degree, const std::vector<double>& knots, double t) {
  const int n = static_cast<int>(knots.size()) - degree - 2;  // last pole index
  if (t >= knots[n + 1]) return n;
  if (t <= knots[degree]) return degree;
  int lo = degree, hi = n + 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (t < knots[mid] ? hi : lo) = mid;
  }
  return lo;
}

// Non-zero basis functions and derivatives up to nd at t: ders[k][j] is the
// k-th derivative of N_{span-degree+j}.
std::vector<std::vector<double>> basisDerivs(int degree, const std::vector<double>& knots, int span, double t,
                                             int nd) {
  const int p = degree;
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1), right(p + 1);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  std::vector<std::vector<double>> ders(nd + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  int mult = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= mult;
    mult *= (p - k);
  }
  return ders;
}

// ---- NACA profile ----------------------------------------------------------

// f(u) with z = 5 tau c f(u); returns f, f', f''.
std::array<double, 3> nacaOdd(double u) {
  const double s = u < 0.0 ? -1.0 : 1.0;
  const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u5 = u4 * u, u6 = u4 * u2, u7 = u6 * u, u8 = u4 * u4;
  const double f = 0.2969 * u + s * (-0.126 * u2 - 0.3516 * u4 + 0.2843 * u6 - 0.1036 * u8);
  const double f1 = 0.2969 + s * (-0.252 * u - 1.4064 * u3 + 1.7058 * u5 - 0.8288 * u7);
  const double f2 = s * (-0.252 - 4.2192 * u2 + 8.529 * u4 - 5.8016 * u6);
  return {f, f1, f2};
}

SurfaceDerivs derivShape(const PlaneSurface& p, double u, double v) {
  const Vec3 z = Vec3::Zero();
  return {p.origin + u * p.eu + v * p.ev, p.eu, p.ev, z, z, z};
}

SurfaceDerivs derivShape(const CylinderSurface& c, double u, double v) {
  const double cu = std::cos(u), su = std::sin(u), r = c.radius;
  const Vec3 radial = cu * c.e1 + su * c.e2;
  const Vec3 tang = -su * c.e1 + cu * c.e2;
  const Vec3 z = Vec3::Zero();
  return {c.center + r * radial + v * c.e3, r * tang, c.e3, -r * radial, z, z};
}

SurfaceDerivs derivShape(const SphereSurface& s, double u, double v) {
  const double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v), r = s.radius;
  auto f = [&](double a, double b, double c) { return Vec3(r * (a * s.e1 + b * s.e2 + c * s.e3)); };
  return {s.center + f(sv * cu, sv * su, cv), f(-sv * su, sv * cu, 0.0), f(cv * cu, cv * su, -sv),
          f(-sv * cu, -sv * su, 0.0),        f(-cv * su, cv * cu, 0.0),  f(-sv * cu, -sv * su, -cv)};
}

SurfaceDerivs derivShape(const BSplinePatch& b, double u, double v) {
  const int su = findSpan(b.degreeU, b.knotsU, u), sv = findSpan(b.degreeV, b.knotsV, v);
  const auto nu = basisDerivs(b.degreeU, b.knotsU, su, u, 2);
  const auto nv = basisDerivs(b.degreeV, b.knotsV, sv, v, 2);
  SurfaceDerivs d{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  for (int j = 0; j <= b.degreeV; ++j) {
    for (int i = 0; i <= b.degreeU; ++i) {
      const Vec3& pole = b.poles[(su - b.degreeU + i) + b.nu * (sv - b.degreeV + j)];
      d.x += nu[0][i] * nv[0][j] * pole;
      d.du += nu[1][i] * nv[0][j] * pole;
      d.dv += nu[0][i] * nv[1][j] * pole;
      d.duu += nu[2][i] * nv[0][j] * pole;
      d.duv += nu[1][i] * nv[1][j] * pole;
      d.dvv += nu[0][i] * nv[2][j] * pole;
    }
  }
  return d;
}

SurfaceDerivs derivShape(const ExtrudedSection& e, double u, double v) {
  const auto [f, f1, f2] = nacaOdd(u);
  const double k = 5.0 * e.thickness * e.chord;
  const double X = e.chord * u * u, X1 = 2.0 * e.chord * u, X2 = 2.0 * e.chord;
  const double Z = k * f, Z1 = k * f1, Z2 = k * f2;
  const Vec3 zero = Vec3::Zero();
  if (e.wrapRadius <= 0.0) {
    return {e.origin + X * e.ex + v * e.ey + Z * e.ez, X1 * e.ex + Z1 * e.ez, e.ey, X2 * e.ex + Z2 * e.ez,
            zero, zero};
  }
  const double R = e.wrapRadius, phi = Z / R, p1 = Z1 / R, p2 = Z2 / R;
  const Vec3 w = std::cos(phi) * e.ey + std::sin(phi) * e.ez;
  const Vec3 w1 = -std::sin(phi) * e.ey + std::cos(phi) * e.ez;
  return {e.origin + X * e.ex + v * w,
          X1 * e.ex + v * p1 * w1,
          w,
          X2 * e.ex + v * (-p1 * p1 * w + p2 * w1),
          p1 * w1,
          zero};
}

SurfaceDerivs derivShape(const LoftedSection& l, double u, double v) {
  const auto [f, f1, f2] = nacaOdd(u);
  const double k = 5.0 * l.thickness * l.chord;
  const double h = k * f, h1 = k * f1, h2 = k * f2;
  const Vec3 q = std::sin(v) * l.ey + std::cos(v) * l.ez;
  const Vec3 q1 = std::cos(v) * l.ey - std::sin(v) * l.ez;
  return {l.origin + l.chord * u * u * l.ex + h * q,
          2.0 * l.chord * u * l.ex + h1 * q,
          h * q1,
          2.0 * l.chord * l.ex + h2 * q,
          h1 * q1,
          -h * q};
}

}  // namespace

double nacaHalfThickness(double thickness, double chord, double xc) {
  const double x = std::clamp(xc, 0.0, 1.0);
  return 5.0 * thickness * chord *
         (0.2969 * std::sqrt(x) - 0.126 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x);
}

// ---- curves ------------------------------------------------------------------

std::string_view curveKindName(const CadCurve& c) {
  return std::visit(Overloaded{[](const LineCurve&) { return std::string_view("line"); },
                               [](const ArcCurve&) { return std::string_view("circularArc"); },
                               [](const BSplineCurve&) { return std::string_view("bsplineCurve"); },
                               [](const HelixCurve&) { return std::string_view("helix"); },
                               [](const IsoCurve&) { return std::string_view("isoCurve"); }},
                    c.shape);
}

Vec3 evalCurve(const CadCurve& c, double t) { return derivCurve(c, t, 0); }

Vec3 derivCurve(const CadCurve& c, double t, int k) {
  if (k < 0 || k > 2) throw CapabilityError("curve derivatives are available up to order 2");
  t = checkParam(t, c.tLo, c.tHi, "curve");
  return std::visit(
      Overloaded{
          [&](const LineCurve& l) -> Vec3 {
            if (k == 0) return l.a + t * (l.b - l.a);
            if (k == 1) return l.b - l.a;
            return Vec3::Zero();
          },
          [&](const ArcCurve& a) -> Vec3 {
            const Vec3 r = std::cos(t) * a.e1 + std::sin(t) * a.e2;
            if (k == 0) return a.center + a.radius * r;
            if (k == 1) return a.radius * (-std::sin(t) * a.e1 + std::cos(t) * a.e2);
            return -a.radius * r;
          },
          [&](const HelixCurve& h) -> Vec3 {
            const Vec3 r = std::cos(t) * h.e1 + std::sin(t) * h.e2;
            if (k == 0) return h.center + h.radius * r + h.pitch * t * h.e3;
            if (k == 1) return h.radius * (-std::sin(t) * h.e1 + std::cos(t) * h.e2) + h.pitch * h.e3;
            return -h.radius * r;
          },
          [&](const BSplineCurve& b) -> Vec3 {
            const int span = findSpan(b.degree, b.knots, t);
            const auto n = basisDerivs(b.degree, b.knots, span, t, k);
            Vec3 x = Vec3::Zero();
            for (int j = 0; j <= b.degree; ++j) x += n[k][j] * b.poles[span - b.degree + j];
            return x;
          },
          [&](const IsoCurve& iso) -> Vec3 {
            if (!iso.bound) throw LookupError("iso curve " + std::to_string(c.id) + " is not bound to a surface");
            const auto d = iso.alongU ? derivSurface(*iso.bound, t, iso.fixed) : derivSurface(*iso.bound, iso.fixed, t);
            if (k == 0) return d.x;
            if (k == 1) return iso.alongU ? d.du : d.dv;
            return iso.alongU ? d.duu : d.dvv;
          }},
      c.shape);
}

// ---- surfaces ----------------------------------------------------------------

std::string_view surfaceKindName(const CadSurface& s) {
  return std::visit(Overloaded{[](const PlaneSurface&) { return std::string_view("plane"); },
                               [](const CylinderSurface&) { return std::string_view("cylinder"); },
                               [](const SphereSurface&) { return std::string_view("sphere"); },
                               [](const BSplinePatch&) { return std::string_view("bsplinePatch"); },
                               [](const ExtrudedSection&) { return std::string_view("extrudedSection"); },
                               [](const LoftedSection&) { return std::string_view("loftedSection"); }},
                    s.shape);
}

SurfaceDerivs derivSurface(const CadSurface& s, double u, double v) {
  u = checkParam(u, s.uLo, s.uHi, "surface u");
  v = checkParam(v, s.vLo, s.vHi, "surface v");
  return std::visit([&](const auto& shape) { return derivShape(shape, u, v); }, s.shape);
}

Vec3 evalSurface(const CadSurface& s, double u, double v) { return derivSurface(s, u, v).x; }

// ---- projection --------------------------------------------------------------

namespace {

struct Box2 {
  double lo[2], hi[2];
};

// Bounded Newton on f = |S - x|^2 / 2 with Levenberg damping and backtracking.
struct SurfaceSolve {
  SurfaceProjection best;
  bool converged = false;
};

Eigen::Vector2d projGrad(const Eigen::Vector2d& g, const Eigen::Vector2d& p, const Box2& b) {
  Eigen::Vector2d out = g;
  for (int i = 0; i < 2; ++i) {
    if (p[i] <= b.lo[i] && g[i] > 0.0) out[i] = 0.0;
    if (p[i] >= b.hi[i] && g[i] < 0.0) out[i] = 0.0;
  }
  return out;
}

SurfaceSolve solveSurface(const CadSurface& s, const Vec3& x, double u0, double v0, double gtol) {
  const Box2 box{{s.uLo, s.vLo}, {s.uHi, s.vHi}};
  Eigen::Vector2d p(std::clamp(u0, s.uLo, s.uHi), std::clamp(v0, s.vLo, s.vHi));
  auto fval = [&](const Eigen::Vector2d& q) { return 0.5 * (evalSurface(s, q[0], q[1]) - x).squaredNorm(); };
  double mu = 0.0;
  SurfaceSolve out;
  for (int it = 0; it < 200; ++it) {
    const auto d = derivSurface(s, p[0], p[1]);
    const Vec3 r = d.x - x;
    const double f = 0.5 * r.squaredNorm();
    Eigen::Vector2d g(d.du.dot(r), d.dv.dot(r));
    const Eigen::Vector2d pg = projGrad(g, p, box);
    if (2.0 * pg.norm() <= gtol) {
      out.converged = true;
      break;
    }
    Eigen::Matrix2d h;
    h(0, 0) = d.du.dot(d.du) + d.duu.dot(r);
    h(0, 1) = h(1, 0) = d.du.dot(d.dv) + d.duv.dot(r);
    h(1, 1) = d.dv.dot(d.dv) + d.dvv.dot(r);
    // Variables held at a bound (gradient pushing outward) are frozen.
    bool freeVar[2];
    for (int i = 0; i < 2; ++i) freeVar[i] = pg[i] != 0.0;
    bool moved = false;
    for (int attempt = 0; attempt < 60 && !moved; ++attempt) {
      Eigen::Matrix2d hm = h;
      const double scale = std::max(1e-300, std::max(std::abs(h(0, 0)), std::abs(h(1, 1))));
      hm(0, 0) += mu * scale;
      hm(1, 1) += mu * scale;
      Eigen::Vector2d step = Eigen::Vector2d::Zero();
      if (freeVar[0] && freeVar[1]) {
        Eigen::LLT<Eigen::Matrix2d> llt(hm);
        if (llt.info() != Eigen::Success) {
          mu = mu == 0.0 ? 1e-8 : mu * 10.0;
          continue;
        }
        step = -llt.solve(g);
      } else {
        for (int i = 0; i < 2; ++i)
          if (freeVar[i]) {
            if (hm(i, i) <= 0.0) {
              mu = mu == 0.0 ? 1e-8 : mu * 10.0;
              step[i] = std::numeric_limits<double>::quiet_NaN();
            } else {
              step[i] = -g[i] / hm(i, i);
            }
          }
        if (!step.allFinite()) continue;
      }
      Eigen::Vector2d q = p + step;
      for (int i = 0; i < 2; ++i) q[i] = std::clamp(q[i], box.lo[i], box.hi[i]);
      const double fq = fval(q);
      if (fq < f || (fq == f && (q - p).norm() == 0.0)) {
        moved = fq < f;
        p = q;
        mu = mu * 0.1;
        if (mu < 1e-12) mu = 0.0;
        if (!moved) break;
      } else {
        mu = mu == 0.0 ? 1e-8 : mu * 10.0;
      }
    }
    if (!moved) {
      // no descent possible at working precision
      out.converged = 2.0 * pg.norm() <= gtol;
      break;
    }
  }
  const auto d = derivSurface(s, p[0], p[1]);
  const Vec3 r = d.x - x;
  out.best = {p[0], p[1], r.norm(), d.x};
  if (!out.converged) out.converged = 2.0 * projGrad(Eigen::Vector2d(d.du.dot(r), d.dv.dot(r)), p, box).norm() <= gtol;
  return out;
}

double surfaceDiameter(const CadSurface& s) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (int j = 0; j <= 8; ++j)
    for (int i = 0; i <= 8; ++i) {
      const Vec3 p = evalSurface(s, s.uLo + (s.uHi - s.uLo) * i / 8.0, s.vLo + (s.vHi - s.vLo) * j / 8.0);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  return std::max((hi - lo).norm(), 1e-300);
}

double curveDiameter(const CadCurve& c) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (int i = 0; i <= 16; ++i) {
    const Vec3 p = evalCurve(c, c.tLo + (c.tHi - c.tLo) * i / 16.0);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return std::max((hi - lo).norm(), 1e-300);
}

bool betterSurface(const SurfaceProjection& a, const SurfaceProjection& b) {
  return std::tie(a.distance, a.u, a.v) < std::tie(b.distance, b.u, b.v);
}

}  // namespace

Eigen::Vector2d projectedDistanceGradient(const CadSurface& s, const Vec3& x, double u, double v) {
  const auto d = derivSurface(s, u, v);
  const Vec3 r = d.x - x;
  const Box2 box{{s.uLo, s.vLo}, {s.uHi, s.vHi}};
  return 2.0 * projGrad(Eigen::Vector2d(d.du.dot(r), d.dv.dot(r)), Eigen::Vector2d(u, v), box);
}

SurfaceProjection projectToSurfaceNear(const CadSurface& s, const Vec3& x, double u0, double v0) {
  const double diam = surfaceDiameter(s);
  const auto r = solveSurface(s, x, u0, v0, 1e-10 * diam * diam);
  if (!r.converged) throw ProjectionError("local surface projection did not converge", r.best);
  return r.best;
}

SurfaceProjection projectToSurface(const CadSurface& s, const Vec3& x) {
  if (!x.allFinite()) throw DomainError("projection of a non-finite point");
  const double diam = surfaceDiameter(s);
  const int n = 16;
  struct Start {
    double d, u, v;
  };
  std::vector<Start> starts;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double u = s.uLo + (s.uHi - s.uLo) * i / (n - 1.0);
      const double v = s.vLo + (s.vHi - s.vLo) * j / (n - 1.0);
      starts.push_back({(evalSurface(s, u, v) - x).squaredNorm(), u, v});
    }
  std::sort(starts.begin(), starts.end(),
            [](const Start& a, const Start& b) { return std::tie(a.d, a.u, a.v) < std::tie(b.d, b.u, b.v); });
  // On a collapsed parameter edge every start is the same point; pick the
  // free parameter whose inward direction points at x.
  const double tiny = 1e-12 * std::max(diam, 1.0);
  auto inward = [&](Start& st) {
    const auto d = derivSurface(s, st.u, st.v);
    const bool uDead = d.du.norm() <= tiny, vDead = d.dv.norm() <= tiny;
    if (uDead == vDead) return;
    const double lo = uDead ? s.uLo : s.vLo, hi = uDead ? s.uHi : s.vHi;
    const double fixed = uDead ? st.v : st.u;
    const double lim = uDead ? s.vLo : s.uLo, lim2 = uDead ? s.vHi : s.uHi;
    const double sign = fixed <= lim ? 1.0 : fixed >= lim2 ? -1.0 : 0.0;
    if (sign == 0.0) return;
    double bestDot = -std::numeric_limits<double>::infinity(), bestFree = uDead ? st.u : st.v;
    for (int k = 0; k <= 64; ++k) {
      const double f = lo + (hi - lo) * k / 64.0;
      const auto e = uDead ? derivSurface(s, f, st.v) : derivSurface(s, st.u, f);
      const double dot = sign * (x - e.x).dot(uDead ? e.dv : e.du);
      if (dot > bestDot) bestDot = dot, bestFree = f;
    }
    (uDead ? st.u : st.v) = bestFree;
  };
  std::vector<Start> picked;
  for (auto st : starts) {
    if (picked.size() == 6) break;
    inward(st);
    if (std::none_of(picked.begin(), picked.end(), [&](const Start& p) { return p.u == st.u && p.v == st.v; }))
      picked.push_back(st);
  }
  std::optional<SurfaceProjection> best, bestAny;
  for (std::size_t k = 0; k < picked.size(); ++k) {
    const auto r = solveSurface(s, x, picked[k].u, picked[k].v, 1e-10 * diam * diam);
    if (!bestAny || betterSurface(r.best, *bestAny)) bestAny = r.best;
    if (r.converged && (!best || betterSurface(r.best, *best))) best = r.best;
  }
  if (!best) throw ProjectionError("surface projection did not converge from any start", *bestAny);
  return *best;
}

namespace {

struct CurveSolve {
  CurveProjection best;
  bool converged = false;
};

double projGrad1(double g, double t, double lo, double hi) {
  if (t <= lo && g > 0.0) return 0.0;
  if (t >= hi && g < 0.0) return 0.0;
  return g;
}

CurveSolve solveCurve(const CadCurve& c, const Vec3& x, double t0, double gtol) {
  double t = std::clamp(t0, c.tLo, c.tHi);
  double mu = 0.0;
  CurveSolve out;
  for (int it = 0; it < 200; ++it) {
    const Vec3 p = evalCurve(c, t), d1 = derivCurve(c, t, 1), d2 = derivCurve(c, t, 2);
    const Vec3 r = p - x;
    const double f = 0.5 * r.squaredNorm();
    const double g = d1.dot(r);
    const double pg = projGrad1(g, t, c.tLo, c.tHi);
    if (2.0 * std::abs(pg) <= gtol) {
      out.converged = true;
      break;
    }
    const double h = d1.dot(d1) + d2.dot(r);
    bool moved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const double hm = h + mu * std::max(d1.dot(d1), 1e-300);
      if (hm <= 0.0) {
        mu = mu == 0.0 ? 1e-8 : mu * 10.0;
        continue;
      }
      const double q = std::clamp(t - g / hm, c.tLo, c.tHi);
      const double fq = 0.5 * (evalCurve(c, q) - x).squaredNorm();
      if (fq < f) {
        t = q;
        moved = true;
        mu = mu * 0.1;
        if (mu < 1e-12) mu = 0.0;
        break;
      }
      if (q == t) break;
      mu = mu == 0.0 ? 1e-8 : mu * 10.0;
    }
    if (!moved) break;
  }
  const Vec3 p = evalCurve(c, t);
  out.best = {t, (p - x).norm(), p};
  if (!out.converged)
    out.converged = 2.0 * std::abs(projGrad1(derivCurve(c, t, 1).dot(p - x), t, c.tLo, c.tHi)) <= gtol;
  return out;
}

}  // namespace

double projectedDistanceGradient(const CadCurve& c, const Vec3& x, double t) {
  return 2.0 * projGrad1(derivCurve(c, t, 1).dot(evalCurve(c, t) - x), t, c.tLo, c.tHi);
}

CurveProjection projectToCurveNear(const CadCurve& c, const Vec3& x, double t0) {
  const double diam = curveDiameter(c);
  const auto r = solveCurve(c, x, t0, 1e-10 * diam * diam);
  if (!r.converged) throw ProjectionError("local curve projection did not converge", r.best);
  return r.best;
}

CurveProjection projectToCurve(const CadCurve& c, const Vec3& x) {
  if (!x.allFinite()) throw DomainError("projection of a non-finite point");
  const double diam = curveDiameter(c);
  const int n = 64;
  std::vector<std::pair<double, double>> starts;
  for (int i = 0; i < n; ++i) {
    const double t = c.tLo + (c.tHi - c.tLo) * i / (n - 1.0);
    starts.emplace_back((evalCurve(c, t) - x).squaredNorm(), t);
  }
  std::sort(starts.begin(), starts.end());
  std::optional<CurveProjection> best, bestAny;
  auto better = [](const CurveProjection& a, const CurveProjection& b) {
    return std::tie(a.distance, a.t) < std::tie(b.distance, b.t);
  };
  for (std::size_t k = 0; k < std::min<std::size_t>(4, starts.size()); ++k) {
    const auto r = solveCurve(c, x, starts[k].second, 1e-10 * diam * diam);
    if (!bestAny || better(r.best, *bestAny)) bestAny = r.best;
    if (r.converged && (!best || better(r.best, *best))) best = r.best;
  }
  if (!best) throw ProjectionError("curve projection did not converge from any start", *bestAny);
  return *best;
}

// ---- registry ----------------------------------------------------------------

void CadRegistry::addSurface(CadSurface s) {
  if (surfaces_.count(s.id)) throw ParameterError("duplicate surface id " + std::to_string(s.id));
  if (!(s.uLo < s.uHi) || !(s.vLo < s.vHi))
    throw ParameterError("surface " + std::to_string(s.id) + " has empty parameter bounds");
  const int id = s.id;
  surfaces_[id] = std::make_shared<const CadSurface>(std::move(s));
}

void CadRegistry::addCurve(CadCurve c) {
  if (curves_.count(c.id)) throw ParameterError("duplicate curve id " + std::to_string(c.id));
  if (!(c.tLo < c.tHi)) throw ParameterError("curve " + std::to_string(c.id) + " has empty parameter bounds");
  if (auto* iso = std::get_if<IsoCurve>(&c.shape)) {
    auto it = surfaces_.find(iso->surface);
    if (it == surfaces_.end())
      throw LookupError("iso curve " + std::to_string(c.id) + " references unknown surface " +
                        std::to_string(iso->surface));
    iso->bound = it->second;
  }
  for (int s : c.adjacentSurfaces)
    if (!surfaces_.count(s))
      throw LookupError("curve " + std::to_string(c.id) + " is adjacent to unknown surface " + std::to_string(s));
  const int id = c.id;
  curves_[id] = std::move(c);
}

const CadSurface& CadRegistry::surface(int id) const {
  auto it = surfaces_.find(id);
  if (it == surfaces_.end()) throw LookupError("unknown surface id " + std::to_string(id));
  return *it->second;
}

const CadCurve& CadRegistry::curve(int id) const {
  auto it = curves_.find(id);
  if (it == curves_.end()) throw LookupError("unknown curve id " + std::to_string(id));
  return it->second;
}

std::vector<int> CadRegistry::curvesBetween(int s1, int s2) const {
  std::vector<int> out;
  for (const auto& [id, c] : curves_) {
    const auto& a = c.adjacentSurfaces;
    if (a.size() == 2 && ((a[0] == s1 && a[1] == s2) || (a[0] == s2 && a[1] == s1))) out.push_back(id);
  }
  return out;
}

std::optional<int> CadRegistry::curveBetween(int s1, int s2) const {
  const auto all = curvesBetween(s1, s2);
  if (all.empty()) return std::nullopt;
  return all.front();
}

std::vector<int> CadRegistry::surfaceIds() const {
  std::vector<int> out;
  for (const auto& kv : surfaces_) out.push_back(kv.first);
  return out;
}

std::vector<int> CadRegistry::curveIds() const {
  std::vector<int> out;
  for (const auto& kv : curves_) out.push_back(kv.first);
  return out;
}

Vec3 evalLink(const CadRegistry& reg, const CadLink& link) {
  if (link.onCurve()) return evalCurve(reg.curve(link.entity), link.u);
  return evalSurface(reg.surface(link.entity), link.u, link.v);
}

}  // namespace homesh
