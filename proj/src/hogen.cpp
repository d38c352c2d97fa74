#include "homesh/hogen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace homesh {

namespace {

Eigen::VectorXd projectedGradient(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (x[i] <= lo[i] && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= hi[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

OptResult minimizeBounded(const Objective& f, Eigen::VectorXd x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi, const OptimizerConfig& cfg) {
  if (cfg.gradientTolerance <= 0.0 || cfg.maxIterations < 1)
    throw ParameterError("optimizer needs a positive tolerance and at least one iteration");
  const auto n = x.size();
  x = x.cwiseMax(lo).cwiseMin(hi);
  OptResult res;
  Eigen::VectorXd g(n);
  double fx = f(x, &g);
  res.trace.push_back(fx);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;  // h is an unscaled identity
  res.status = OptStatus::MaxIterations;
  for (int it = 0; it < cfg.maxIterations; ++it) {
    const Eigen::VectorXd pg = projectedGradient(g, x, lo, hi);
    res.gradientNorm = n ? pg.lpNorm<Eigen::Infinity>() : 0.0;
    if (res.gradientNorm <= cfg.gradientTolerance) {
      res.status = OptStatus::Converged;
      break;
    }
    // Restrict the quasi-Newton direction to variables not held at a bound.
    std::vector<Eigen::Index> freeIdx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (pg[i] != 0.0) freeIdx.push_back(i);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a : freeIdx)
      for (Eigen::Index b : freeIdx) d[a] -= h(a, b) * g[b];
    if (d.dot(g) >= 0.0) {
      h.setIdentity();
      fresh = true;
      d = -pg;
    }
    if (fresh) {
      // first step of a (re)started model: bound the trial step to the box size
      double range = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::isfinite(hi[i] - lo[i])) range = std::min(range, hi[i] - lo[i]);
      const double dn = d.lpNorm<Eigen::Infinity>();
      if (std::isfinite(range) && dn > 0.1 * range) d *= 0.1 * range / dn;
    }
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn(n), gn(n);
    double fn = fx;
    for (int ls = 0; ls < cfg.maxLineSearch; ++ls) {
      xn = (x + alpha * d).cwiseMax(lo).cwiseMin(hi);
      if (xn == x) break;
      fn = f(xn, &gn);
      if (fn <= fx + cfg.armijo * g.dot(xn - x) && fn <= fx) {
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      if (!fresh) {
        // retry once from a steepest-descent model
        h.setIdentity();
        fresh = true;
        continue;
      }
      res.status = OptStatus::Stalled;
      break;
    }
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (fresh) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    } else {
      h.setIdentity();
      fresh = true;
    }
    x = xn;
    g = gn;
    fx = fn;
    res.trace.push_back(fx);
    ++res.iterations;
  }
  if (res.status == OptStatus::MaxIterations) {
    res.gradientNorm = n ? projectedGradient(g, x, lo, hi).lpNorm<Eigen::Infinity>() : 0.0;
    if (res.gradientNorm <= cfg.gradientTolerance) res.status = OptStatus::Converged;
  }
  res.x = x;
  return res;
}

// ---- spring systems ------------------------------------------------------------

SpringSystem::SpringSystem(const CadCurve& c) : curve_(&c), dim_(1) {}
SpringSystem::SpringSystem(const CadSurface& s) : surface_(&s), dim_(2) {}

int SpringSystem::addFixed(const Vec3& x) {
  nodes_.push_back({-1, x});
  return static_cast<int>(nodes_.size()) - 1;
}

int SpringSystem::addFree(double u, double v) {
  const int var = static_cast<int>(free_.size());
  nodes_.push_back({var, Vec3::Zero()});
  free_.push_back(static_cast<int>(nodes_.size()) - 1);
  init_.push_back(u);
  if (dim_ == 2) init_.push_back(v);
  return static_cast<int>(nodes_.size()) - 1;
}

void SpringSystem::addSpring(int a, int b, double rest) {
  const int n = static_cast<int>(nodes_.size());
  if (a < 0 || b < 0 || a >= n || b >= n || a == b)
    throw ParameterError("spring endpoints must be two distinct declared nodes");
  if (!(rest > 0.0)) throw ParameterError("spring rest length must be positive");
  springs_.push_back({a, b, rest});
}

Eigen::VectorXd SpringSystem::parameters() const {
  return Eigen::Map<const Eigen::VectorXd>(init_.data(), static_cast<Eigen::Index>(init_.size()));
}

Eigen::VectorXd SpringSystem::lower() const {
  Eigen::VectorXd lo(init_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) {
    if (dim_ == 1) {
      lo[i] = curve_->tLo;
    } else {
      lo[2 * i] = surface_->uLo;
      lo[2 * i + 1] = surface_->vLo;
    }
  }
  return lo;
}

Eigen::VectorXd SpringSystem::upper() const {
  Eigen::VectorXd hi(init_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) {
    if (dim_ == 1) {
      hi[i] = curve_->tHi;
    } else {
      hi[2 * i] = surface_->uHi;
      hi[2 * i + 1] = surface_->vHi;
    }
  }
  return hi;
}

Vec3 SpringSystem::position(int node, const Eigen::VectorXd& p) const {
  const auto& n = nodes_.at(node);
  if (n.var < 0) return n.x;
  if (dim_ == 1) return evalCurve(*curve_, p[n.var]);
  return evalSurface(*surface_, p[2 * n.var], p[2 * n.var + 1]);
}

Eigen::Vector2d SpringSystem::nodeParams(int node, const Eigen::VectorXd& p) const {
  const auto& n = nodes_.at(node);
  if (n.var < 0) throw ParameterError("fixed spring node has no parameters");
  if (dim_ == 1) return {p[n.var], 0.0};
  return {p[2 * n.var], p[2 * n.var + 1]};
}

double SpringSystem::energyAndGradient(const Eigen::VectorXd& p, Eigen::VectorXd* g) const {
  if (p.size() != static_cast<Eigen::Index>(init_.size())) throw ParameterError("parameter vector has wrong size");
  const Eigen::VectorXd lo = lower(), hi = upper();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) throw DomainError("spring parameter outside its box");
  // positions and parametric Jacobians of all nodes
  std::vector<Vec3> x(nodes_.size());
  std::vector<Eigen::Matrix<double, 3, 2>> jac(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.var < 0) {
      x[i] = n.x;
      continue;
    }
    if (dim_ == 1) {
      x[i] = evalCurve(*curve_, p[n.var]);
      if (g) {
        jac[i].col(0) = derivCurve(*curve_, p[n.var], 1);
        jac[i].col(1).setZero();
      }
    } else {
      const auto d = derivSurface(*surface_, p[2 * n.var], p[2 * n.var + 1]);
      x[i] = d.x;
      jac[i].col(0) = d.du;
      jac[i].col(1) = d.dv;
    }
  }
  double e = 0.0;
  if (g) g->setZero(p.size());
  for (const auto& s : springs_) {
    const Vec3 d = x[s.a] - x[s.b];
    const double len = d.norm();
    const double r = len - s.rest;
    e += r * r;
    if (!g || len == 0.0) continue;
    const Vec3 f = 2.0 * r * d / len;  // dE/dx_a = f, dE/dx_b = -f
    for (int side = 0; side < 2; ++side) {
      const int node = side == 0 ? s.a : s.b;
      const int var = nodes_[node].var;
      if (var < 0) continue;
      const double sign = side == 0 ? 1.0 : -1.0;
      if (dim_ == 1) {
        (*g)[var] += sign * jac[node].col(0).dot(f);
      } else {
        (*g)[2 * var] += sign * jac[node].col(0).dot(f);
        (*g)[2 * var + 1] += sign * jac[node].col(1).dot(f);
      }
    }
  }
  return e;
}

double SpringSystem::energy(const Eigen::VectorXd& p) const { return energyAndGradient(p, nullptr); }

Eigen::VectorXd SpringSystem::gradient(const Eigen::VectorXd& p) const {
  Eigen::VectorXd g;
  energyAndGradient(p, &g);
  return g;
}

OptResult optimize(const SpringSystem& sys, double scale, const OptimizerConfig& cfg) {
  // dimensionless energy E / L^2 over parameters q = p / L
  const double s2 = scale * scale;
  Objective f = [&](const Eigen::VectorXd& q, Eigen::VectorXd* g) {
    const double e = sys.energyAndGradient((q * scale).cwiseMax(sys.lower()).cwiseMin(sys.upper()), g) / s2;
    if (g) *g /= scale;
    return e;
  };
  auto r = minimizeBounded(f, sys.parameters() / scale, sys.lower() / scale, sys.upper() / scale, cfg);
  r.x = (r.x * scale).cwiseMax(sys.lower()).cwiseMin(sys.upper());
  return r;
}

// ---- entity-level drivers ------------------------------------------------------------

CurveEdgeResult optimizeCurveNodes(const CadCurve& c, double t0, double t1, int order, const OptimizerConfig& cfg) {
  if (order < 1) throw ParameterError("order must be >= 1");
  const auto g = gllPoints(order);
  const Vec3 a = evalCurve(c, t0), b = evalCurve(c, t1);
  const double chord = (b - a).norm();
  CurveEdgeResult out;
  out.t.resize(order + 1);
  for (int i = 0; i <= order; ++i) out.t[i] = t0 + 0.5 * (g[i] + 1.0) * (t1 - t0);
  out.t[0] = t0;
  out.t[order] = t1;
  if (order == 1 || chord == 0.0) {
    out.opt.status = OptStatus::Converged;
    return out;
  }
  CadCurve span = c;
  span.tLo = std::min(t0, t1);
  span.tHi = std::max(t0, t1);
  SpringSystem sys(span);
  std::vector<int> ids{sys.addFixed(a)};
  for (int i = 1; i < order; ++i) ids.push_back(sys.addFree(out.t[i]));
  ids.push_back(sys.addFixed(b));
  for (int i = 0; i < order; ++i) sys.addSpring(ids[i], ids[i + 1], 0.5 * (g[i + 1] - g[i]) * chord);
  out.opt = optimize(sys, chord, cfg);
  for (int i = 1; i < order; ++i) out.t[i] = out.opt.x[i - 1];
  return out;
}

SurfaceNodesResult optimizeSurfaceEdgeNodes(const CadSurface& s, Eigen::Vector2d ua, Eigen::Vector2d ub, int order,
                                            const OptimizerConfig& cfg) {
  if (order < 1) throw ParameterError("order must be >= 1");
  const auto g = gllPoints(order);
  const Vec3 a = evalSurface(s, ua[0], ua[1]), b = evalSurface(s, ub[0], ub[1]);
  const double chord = (b - a).norm();
  SurfaceNodesResult out;
  out.uv.resize(order + 1);
  out.x.resize(order + 1);
  out.uv[0] = ua;
  out.uv[order] = ub;
  out.x[0] = a;
  out.x[order] = b;
  SpringSystem sys(s);
  std::vector<int> ids{sys.addFixed(a)};
  for (int i = 1; i < order; ++i) {
    const double f = 0.5 * (g[i] + 1.0);
    const auto p = projectToSurface(s, a + f * (b - a));
    ids.push_back(sys.addFree(p.u, p.v));
  }
  ids.push_back(sys.addFixed(b));
  if (order > 1 && chord > 0.0) {
    for (int i = 0; i < order; ++i) sys.addSpring(ids[i], ids[i + 1], 0.5 * (g[i + 1] - g[i]) * chord);
    out.opt = optimize(sys, chord, cfg);
  } else {
    out.opt.x = sys.parameters();
    out.opt.status = OptStatus::Converged;
  }
  for (int i = 1; i < order; ++i) {
    out.uv[i] = sys.nodeParams(ids[i], out.opt.x);
    out.x[i] = evalSurface(s, out.uv[i][0], out.uv[i][1]);
  }
  return out;
}

SurfaceNodesResult optimizeSurfaceEdgeNodes(const CadSurface& s, const Vec3& a, const Vec3& b, int order,
                                            const OptimizerConfig& cfg) {
  const auto pa = projectToSurface(s, a), pb = projectToSurface(s, b);
  auto out = optimizeSurfaceEdgeNodes(s, Eigen::Vector2d(pa.u, pa.v), Eigen::Vector2d(pb.u, pb.v), order, cfg);
  // keep the caller's end positions exactly
  out.x[0] = a;
  out.x[order] = b;
  return out;
}

SurfaceNodesResult optimizeFaceInteriorNodes(const CadSurface& s, const std::vector<Vec3>& nodes, int order,
                                             const OptimizerConfig& cfg) {
  const auto& topo = topology(ElementKind::Triangle, order);
  if (nodes.size() != topo.size()) throw StructuralError("triangle node list has the wrong length");
  std::vector<Vec3> guess = nodes;
  placeInteriorNodes(ElementKind::Triangle, order, guess);

  const auto ref = referenceNodes(ElementKind::Triangle, order);
  // affine image of the reference lattice spanned by the vertices
  auto affine = [&](const Vec3& xi) {
    const double l1 = 0.5 * (xi.x() + 1.0), l2 = 0.5 * (xi.y() + 1.0);
    return Vec3(nodes[0] + l1 * (nodes[1] - nodes[0]) + l2 * (nodes[2] - nodes[0]));
  };
  const double scale = std::max({(nodes[1] - nodes[0]).norm(), (nodes[2] - nodes[1]).norm(),
                                 (nodes[0] - nodes[2]).norm()});

  SurfaceNodesResult out;
  out.x = nodes;
  out.uv.assign(nodes.size(), Eigen::Vector2d::Zero());
  SpringSystem sys(s);
  std::vector<int> sysId(nodes.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (topo.entities()[i].dim == 2) {
      const auto p = projectToSurface(s, guess[i]);
      sysId[i] = sys.addFree(p.u, p.v);
    } else {
      sysId[i] = sys.addFixed(nodes[i]);
    }
  }
  const int nbr[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (topo.entities()[i].dim != 2) continue;
    const auto& l = topo.lattice()[i];
    for (const auto& d : nbr) {
      const int j = topo.indexOf({l[0] + d[0], l[1] + d[1], 0});
      if (j < 0) continue;
      // interior-interior pairs once
      if (topo.entities()[j].dim == 2 && static_cast<std::size_t>(j) < i) continue;
      sys.addSpring(sysId[i], sysId[j], (affine(ref[i]) - affine(ref[j])).norm());
    }
  }
  if (sys.numFree() > 0) {
    out.opt = optimize(sys, scale, cfg);
  } else {
    out.opt.status = OptStatus::Converged;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (topo.entities()[i].dim != 2) continue;
    out.uv[i] = sys.nodeParams(sysId[i], out.opt.x);
    out.x[i] = evalSurface(s, out.uv[i][0], out.uv[i][1]);
  }
  return out;
}

}  // namespace homesh
