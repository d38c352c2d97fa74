#include "homesh/condition.hpp"

#include <Eigen/Geometry>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "homesh/topology.hpp"
#include "nodekey.hpp"

namespace homesh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Dense two-phase simplex with Bland's rule
// ---------------------------------------------------------------------------

struct LpRow {
  std::vector<std::pair<int, double>> coef;
  bool equality = true;  // otherwise <=
  double rhs = 0.0;
};

struct Lp {
  std::vector<double> c;
  std::vector<LpRow> rows;
  std::vector<double> lo, hi;
};

struct LpSolution {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> x;
};

class Tableau {
 public:
  Tableau(int rows, int cols) : m_(rows), n_(cols), a_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * (n_ + 1) + j]; }
  double& rhs(int i) { return at(i, n_); }
  double& cost(int j) { return at(m_, j); }

  void pivot(int r, int c) {
    const double p = at(r, c);
    for (int j = 0; j <= n_; ++j) at(r, j) /= p;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (int j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
    }
  }

  int m_, n_;

 private:
  std::vector<double> a_;
};

constexpr double kPivotTol = 1e-9;

// Runs simplex iterations on the cost row; returns false if unbounded.
bool iterate(Tableau& t, std::vector<int>& basis, const std::vector<char>& blocked) {
  for (int it = 0; it < 100000; ++it) {
    int enter = -1;
    for (int j = 0; j < t.n_; ++j)
      if (!blocked[j] && t.cost(j) < -kPivotTol) {
        enter = j;
        break;
      }
    if (enter < 0) return true;
    int leave = -1;
    double best = kInf;
    for (int i = 0; i < t.m_; ++i) {
      const double a = t.at(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = t.rhs(i) / a;
      if (ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  throw DomainError("simplex iteration limit reached");
}

LpSolution solveLp(const Lp& lp) {
  const int n = static_cast<int>(lp.c.size());
  std::vector<LpRow> rows = lp.rows;
  for (auto& r : rows)
    for (const auto& [j, a] : r.coef) r.rhs -= a * lp.lo[j];
  for (int j = 0; j < n; ++j) {
    if (lp.hi[j] < lp.lo[j]) return {};
    if (std::isfinite(lp.hi[j])) rows.push_back({{{j, 1.0}}, false, lp.hi[j] - lp.lo[j]});
  }
  const int m = static_cast<int>(rows.size());
  int slacks = 0;
  for (const auto& r : rows) slacks += !r.equality;
  const int cols = n + slacks + m;
  Tableau t(m, cols);
  std::vector<int> basis(m);
  int s = n;
  for (int i = 0; i < m; ++i) {
    const double sign = rows[i].rhs < 0.0 ? -1.0 : 1.0;
    for (const auto& [j, a] : rows[i].coef) t.at(i, j) += sign * a;
    if (!rows[i].equality) t.at(i, s++) = sign;
    t.rhs(i) = sign * rows[i].rhs;
    t.at(i, n + slacks + i) = 1.0;
    basis[i] = n + slacks + i;
  }
  // phase 1: minimize the artificial sum
  std::vector<char> blocked(cols, 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= cols; ++j)
      if (j < n + slacks || j == cols) t.cost(j) -= t.at(i, j);
  iterate(t, basis, blocked);
  double scale = 1.0;
  for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(rows[i].rhs));
  if (-t.cost(cols) > 1e-8 * scale) return {};
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n + slacks) continue;
    for (int j = 0; j < n + slacks; ++j)
      if (std::abs(t.at(i, j)) > kPivotTol) {
        t.pivot(i, j);
        basis[i] = j;
        break;
      }
  }
  for (int j = n + slacks; j < cols; ++j) blocked[j] = 1;
  // phase 2
  for (int j = 0; j <= cols; ++j) t.cost(j) = j < n ? lp.c[j] : 0.0;
  for (int i = 0; i < m; ++i) {
    const double cb = basis[i] < n ? lp.c[basis[i]] : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= cols; ++j) t.cost(j) -= cb * t.at(i, j);
  }
  if (!iterate(t, basis, blocked)) throw DomainError("unbounded linear program");
  LpSolution out{true, 0.0, lp.lo};
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] += t.rhs(i);
  for (int j = 0; j < n; ++j) out.value += lp.c[j] * out.x[j];
  return out;
}

// ---------------------------------------------------------------------------
// Branch and bound over the first G variables
// ---------------------------------------------------------------------------

struct Search {
  bool found = false;
  std::vector<int> d;
  double value = kInf;
  std::size_t nodes = 0;
};

using ModelFn = std::function<Lp(const std::vector<double>& lo, const std::vector<double>& hi)>;
using IntegerFn = std::function<std::optional<double>(const std::vector<int>& d)>;

constexpr std::size_t kNodeLimit = 200000;

Search branchAndBound(const ModelFn& model, const IntegerFn& score, std::vector<double> lo0, std::vector<double> hi0) {
  const int g = static_cast<int>(lo0.size());
  Search best;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> stack{{std::move(lo0), std::move(hi0)}};
  while (!stack.empty()) {
    auto [lo, hi] = std::move(stack.back());
    stack.pop_back();
    if (++best.nodes > kNodeLimit) throw DomainError("branch-and-bound node limit reached");
    const auto sol = solveLp(model(lo, hi));
    if (!sol.feasible) continue;
    if (best.found && sol.value >= best.value - 1e-9) continue;
    int branch = -1;
    double bestScore = kInf;
    for (int j = 0; j < g; ++j) {
      const double f = sol.x[j] - std::floor(sol.x[j]);
      if (f < 1e-7 || f > 1.0 - 1e-7) continue;
      const double sc = std::abs(f - 0.5);
      if (sc < bestScore - 1e-12) {
        bestScore = sc;
        branch = j;
      }
    }
    if (branch < 0) {
      std::vector<int> d(g);
      for (int j = 0; j < g; ++j) d[j] = static_cast<int>(std::lround(sol.x[j]));
      const auto v = score(d);
      if (v && (!best.found || *v < best.value - 1e-12)) {
        best.found = true;
        best.d = d;
        best.value = *v;
      }
      continue;
    }
    auto upLo = lo;
    upLo[branch] = std::ceil(sol.x[branch]);
    stack.push_back({std::move(upLo), hi});
    hi[branch] = std::floor(sol.x[branch]);
    stack.push_back({std::move(lo), std::move(hi)});
  }
  return best;
}

// Net coefficient of every group in a constraint (A minus B).
std::map<int, long long> netCoefficients(const DivisionConstraint& c) {
  std::map<int, long long> net;
  for (int g : c.sideA) ++net[g];
  for (int g : c.sideB) --net[g];
  std::erase_if(net, [](const auto& kv) { return kv.second == 0; });
  return net;
}

bool satisfies(const std::vector<std::map<int, long long>>& rows, const std::vector<int>& d) {
  for (const auto& r : rows) {
    long long sum = 0;
    for (const auto& [g, a] : r) sum += a * d[g];
    if (sum != 0) return false;
  }
  return true;
}

void addConstraintRows(Lp& lp, const std::vector<std::map<int, long long>>& rows) {
  for (const auto& r : rows) {
    LpRow row;
    for (const auto& [g, a] : r) row.coef.emplace_back(g, static_cast<double>(a));
    lp.rows.push_back(std::move(row));
  }
}

double l1(const std::vector<int>& d, const std::vector<double>& t) {
  double s = 0.0;
  for (std::size_t g = 0; g < d.size(); ++g) s += std::abs(d[g] - t[g]);
  return s;
}

double l2(const std::vector<int>& d, const std::vector<double>& t) {
  double s = 0.0;
  for (std::size_t g = 0; g < d.size(); ++g) s += (d[g] - t[g]) * (d[g] - t[g]);
  return s;
}

// Minimum of sum |d - t|; variables d, u, v with d - u + v = t.
Search minimizeL1(const DivisionProblem& p, const std::vector<std::map<int, long long>>& rows) {
  const int g = static_cast<int>(p.groups());
  const double upper = p.maxDivisions > 0 ? p.maxDivisions : kInf;
  ModelFn model = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    Lp lp;
    lp.c.assign(3 * g, 1.0);
    lp.lo.assign(3 * g, 0.0);
    lp.hi.assign(3 * g, kInf);
    for (int j = 0; j < g; ++j) {
      lp.c[j] = 0.0;
      lp.lo[j] = lo[j];
      lp.hi[j] = hi[j];
      lp.rows.push_back({{{j, 1.0}, {g + j, -1.0}, {2 * g + j, 1.0}}, true, p.targets[j]});
    }
    addConstraintRows(lp, rows);
    return lp;
  };
  IntegerFn score = [&](const std::vector<int>& d) -> std::optional<double> {
    if (!satisfies(rows, d)) return std::nullopt;
    return l1(d, p.targets);
  };
  return branchAndBound(model, score, std::vector<double>(g, 1.0), std::vector<double>(g, upper));
}

// Minimum of sum (d - t)^2 among solutions with sum |d - t| <= bound, using
// a piecewise-linear form exact at integers inside the admissible window.
std::optional<Search> minimizeL2(const DivisionProblem& p, const std::vector<std::map<int, long long>>& rows,
                                 double bound) {
  const int g = static_cast<int>(p.groups());
  std::vector<double> base(g), top(g);
  std::size_t segments = 0;
  for (int j = 0; j < g; ++j) {
    base[j] = std::max(1.0, std::floor(p.targets[j] - bound) - 1.0);
    top[j] = std::ceil(p.targets[j] + bound) + 1.0;
    if (p.maxDivisions > 0) top[j] = std::min<double>(top[j], p.maxDivisions);
    segments += static_cast<std::size_t>(std::max(0.0, top[j] - base[j]));
  }
  if (segments > 4000) return std::nullopt;
  const double slack = bound + 1e-9 * (1.0 + bound);
  ModelFn model = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    Lp lp;
    const int n = 3 * g + static_cast<int>(segments);
    lp.c.assign(n, 0.0);
    lp.lo.assign(n, 0.0);
    lp.hi.assign(n, kInf);
    LpRow budget{{}, false, slack};
    int z = 3 * g;
    for (int j = 0; j < g; ++j) {
      lp.lo[j] = lo[j];
      lp.hi[j] = hi[j];
      lp.rows.push_back({{{j, 1.0}, {g + j, -1.0}, {2 * g + j, 1.0}}, true, p.targets[j]});
      budget.coef.emplace_back(g + j, 1.0);
      budget.coef.emplace_back(2 * g + j, 1.0);
      LpRow fill{{{j, 1.0}}, true, base[j]};
      for (int k = 0; k < static_cast<int>(top[j] - base[j]); ++k, ++z) {
        const double a = base[j] + k - p.targets[j];
        lp.c[z] = 2.0 * a + 1.0;
        lp.hi[z] = 1.0;
        fill.coef.emplace_back(z, -1.0);
      }
      lp.rows.push_back(std::move(fill));
    }
    lp.rows.push_back(std::move(budget));
    addConstraintRows(lp, rows);
    return lp;
  };
  // LP objective is sum (d - t)^2 less its value at the window base
  double offset = 0.0;
  for (int j = 0; j < g; ++j) offset += (base[j] - p.targets[j]) * (base[j] - p.targets[j]);
  IntegerFn score = [&](const std::vector<int>& d) -> std::optional<double> {
    if (!satisfies(rows, d) || l1(d, p.targets) > slack) return std::nullopt;
    return l2(d, p.targets) - offset;
  };
  return branchAndBound(model, score, base, top);
}

void validate(const DivisionProblem& p) {
  const int g = static_cast<int>(p.groups());
  if (!p.names.empty() && p.names.size() != p.groups())
    throw StructuralError("division problem: " + std::to_string(p.names.size()) + " names for " +
                          std::to_string(g) + " groups");
  for (int j = 0; j < g; ++j)
    if (!(p.targets[j] >= 1.0) || !std::isfinite(p.targets[j]))
      throw ParameterError("division target of " + p.name(j) + " must be at least 1");
  if (p.maxDivisions < 0) throw ParameterError("maxDivisions must be non-negative");
  for (std::size_t c = 0; c < p.constraints.size(); ++c)
    for (const auto* side : {&p.constraints[c].sideA, &p.constraints[c].sideB})
      for (int x : *side)
        if (x < 0 || x >= g)
          throw StructuralError("constraint " + std::to_string(c) + " references unknown group " + std::to_string(x));
}

std::string describe(const DivisionProblem& p, const std::vector<std::size_t>& cycle) {
  std::ostringstream os;
  os << "division constraints have no positive integer solution; conflicting set:";
  for (std::size_t c : cycle) {
    os << " [" << c << "] ";
    const auto& k = p.constraints[c];
    for (std::size_t i = 0; i < k.sideA.size(); ++i) os << (i ? " + " : "") << p.name(k.sideA[i]);
    os << " =";
    for (std::size_t i = 0; i < k.sideB.size(); ++i) os << (i ? " + " : " ") << p.name(k.sideB[i]);
    os << ";";
  }
  return os.str();
}

}  // namespace

std::string DivisionProblem::name(int g) const {
  return names.empty() ? "g" + std::to_string(g) : names.at(g);
}

Balance balanceDivisions(const DivisionProblem& p) {
  validate(p);
  std::vector<std::map<int, long long>> rows;
  for (const auto& c : p.constraints) rows.push_back(netCoefficients(c));
  auto first = minimizeL1(p, rows);
  if (!first.found) {
    // deletion filter down to an irreducible conflicting set
    std::vector<std::size_t> active(p.constraints.size());
    std::iota(active.begin(), active.end(), 0);
    for (std::size_t i = 0; i < active.size();) {
      std::vector<std::map<int, long long>> trial;
      for (std::size_t j = 0; j < active.size(); ++j)
        if (j != i) trial.push_back(rows[active[j]]);
      if (!minimizeL1(p, trial).found) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
    throw InfeasibleError(describe(p, active), active);
  }
  Balance out{first.d, first.value, first.nodes};
  if (auto second = minimizeL2(p, rows, first.value); second && second->found) {
    out.divisions = second->d;
    out.objective = l1(second->d, p.targets);
    out.nodes += second->nodes;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Arc length and sizing
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<double, 5> kGaussX{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                        0.9061798459386640};
constexpr std::array<double, 5> kGaussW{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                        0.2369268850561891, 0.2369268850561891};

double speed(const CadCurve& c, double t) { return derivCurve(c, t, 1).norm(); }

double gauss(const CadCurve& c, double a, double b) {
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += kGaussW[i] * speed(c, m + h * kGaussX[i]);
  return std::abs(h) * s;
}

// Cumulative arc length from ta towards tb on a fixed panel grid.
class ArcTable {
 public:
  ArcTable(const CadCurve& c, double ta, double tb, int panels = 128) : c_(c), ta_(ta), h_((tb - ta) / panels) {
    cum_.assign(panels + 1, 0.0);
    for (int k = 0; k < panels; ++k) cum_[k + 1] = cum_[k] + gauss(c, ta + k * h_, ta + (k + 1) * h_);
  }

  double length() const { return cum_.back(); }

  double at(double t) const {
    const int panels = static_cast<int>(cum_.size()) - 1;
    const int k = std::clamp(static_cast<int>(std::floor((t - ta_) / h_)), 0, panels - 1);
    const double t0 = ta_ + k * h_;
    return cum_[k] + (t == t0 ? 0.0 : gauss(c_, t0, t));
  }

  double inverse(double s) const {
    const int panels = static_cast<int>(cum_.size()) - 1;
    const int k = std::clamp(static_cast<int>(std::upper_bound(cum_.begin(), cum_.end(), s) - cum_.begin()) - 1, 0,
                             panels - 1);
    const double t0 = ta_ + k * h_;
    double a = t0, b = ta_ + (k + 1) * h_;
    double t = a + (b - a) * std::clamp((s - cum_[k]) / std::max(cum_[k + 1] - cum_[k], 1e-300), 0.0, 1.0);
    for (int it = 0; it < 60; ++it) {
      const double g = cum_[k] + gauss(c_, t0, t) - s;
      if (std::abs(g) <= 1e-15 * std::max(1.0, length())) break;
      if (g < 0.0) {
        a = t;
      } else {
        b = t;
      }
      const double sp = speed(c_, t) * (h_ > 0 ? 1.0 : -1.0);
      double next = sp != 0.0 ? t - g / sp : 0.5 * (a + b);
      if ((next - a) * (next - b) > 0.0) next = 0.5 * (a + b);
      t = next;
    }
    return t;
  }

 private:
  const CadCurve& c_;
  double ta_, h_;
  std::vector<double> cum_;
};

}  // namespace

double arcLength(const CadCurve& c, double t0, double t1) { return t0 == t1 ? 0.0 : ArcTable(c, t0, t1).length(); }

double divisionTarget(const CadCurve& c, double t0, double t1, double size) {
  if (!(size > 0.0)) throw ParameterError("target size must be positive");
  constexpr int kSamples = 256;
  double turn = 0.0;
  Vec3 prev = derivCurve(c, t0, 1).normalized();
  for (int i = 1; i <= kSamples; ++i) {
    const Vec3 tan = derivCurve(c, t0 + (t1 - t0) * i / kSamples, 1).normalized();
    turn += std::atan2(prev.cross(tan).norm(), prev.dot(tan));
    prev = tan;
  }
  const double n = turn > 1e-6 ? turn / (std::numbers::pi / 6.0) : arcLength(c, t0, t1) / size;
  return std::max(1.0, n);
}

// ---------------------------------------------------------------------------
// Smoothing
// ---------------------------------------------------------------------------

namespace {

// Interval ds_i of an edge as a linear form over the unknown arc positions.
struct Form {
  std::vector<std::pair<int, double>> coef;
  double constant = 0.0;
};

struct SmoothSystem {
  std::vector<int> offset;          // first unknown of each edge
  std::vector<double> length;       // arc length of each edge
  std::vector<std::vector<double>> s;  // arc positions, endpoints included
  int unknowns = 0;
};

Form interval(const SmoothSystem& sys, int e, int i) {
  const int m = static_cast<int>(sys.s[e].size()) - 1;
  Form f;
  auto add = [&](int node, double sign) {
    if (node == 0) return;
    if (node == m) {
      f.constant += sign * sys.length[e];
    } else {
      f.coef.emplace_back(sys.offset[e] + node - 1, sign);
    }
  };
  add(i + 1, 1.0);
  add(i, -1.0);
  return f;
}

// Rows of the least-squares system: each entry is (form a, form b, weight)
// standing for weight * (a - b).
struct Term {
  Form a, b;
  double w;
};

std::vector<Term> terms(const SmoothSystem& sys, const std::vector<DivisionEdge>& edges, double coupling) {
  std::vector<Term> out;
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    const int m = static_cast<int>(edges[e].t.size()) - 1;
    for (int i = 0; i + 1 < m; ++i) out.push_back({interval(sys, e, i), interval(sys, e, i + 1), 1.0});
  }
  if (coupling <= 0.0) return out;
  std::map<int, std::vector<Form>> ends;
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    const int m = static_cast<int>(edges[e].t.size()) - 1;
    if (edges[e].startVertex >= 0) ends[edges[e].startVertex].push_back(interval(sys, e, 0));
    if (edges[e].endVertex >= 0) ends[edges[e].endVertex].push_back(interval(sys, e, m - 1));
  }
  const double w = std::sqrt(coupling);
  for (const auto& [v, forms] : ends)
    for (std::size_t i = 0; i < forms.size(); ++i)
      for (std::size_t j = i + 1; j < forms.size(); ++j) out.push_back({forms[i], forms[j], w});
  return out;
}

double value(const Form& f, const std::vector<double>& x) {
  double v = f.constant;
  for (const auto& [j, a] : f.coef) v += a * x[j];
  return v;
}

std::vector<double> currentUnknowns(const SmoothSystem& sys) {
  std::vector<double> x(sys.unknowns);
  for (std::size_t e = 0; e < sys.s.size(); ++e)
    for (std::size_t i = 1; i + 1 < sys.s[e].size(); ++i) x[sys.offset[e] + i - 1] = sys.s[e][i];
  return x;
}

SmoothSystem buildSystem(const CadRegistry& reg, const std::vector<DivisionEdge>& edges,
                         std::vector<ArcTable>& tables) {
  SmoothSystem sys;
  for (const auto& e : edges) {
    if (e.t.size() < 2) throw ParameterError("division edge needs at least two points");
    const double dir = e.t.back() > e.t.front() ? 1.0 : -1.0;
    for (std::size_t i = 0; i + 1 < e.t.size(); ++i)
      if (!((e.t[i + 1] - e.t[i]) * dir > 0.0)) throw ParameterError("division points must be strictly monotone");
    tables.emplace_back(reg.curve(e.curve), e.t.front(), e.t.back());
    const auto& tab = tables.back();
    sys.offset.push_back(sys.unknowns);
    sys.length.push_back(tab.length());
    std::vector<double> s(e.t.size());
    for (std::size_t i = 0; i < e.t.size(); ++i) s[i] = tab.at(e.t[i]);
    s.front() = 0.0;
    s.back() = tab.length();
    sys.s.push_back(std::move(s));
    sys.unknowns += static_cast<int>(e.t.size()) - 2;
  }
  return sys;
}

double objective(const std::vector<Term>& ts, const std::vector<double>& x) {
  double f = 0.0;
  for (const auto& t : ts) {
    const double r = t.w * (value(t.a, x) - value(t.b, x));
    f += r * r;
  }
  return f;
}

std::vector<double> solve(const SmoothSystem& sys, const std::vector<Term>& ts) {
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ts.size()));
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const auto& t = ts[r];
    for (const auto& [j, a] : t.a.coef) trip.emplace_back(static_cast<int>(r), j, t.w * a);
    for (const auto& [j, a] : t.b.coef) trip.emplace_back(static_cast<int>(r), j, -t.w * a);
    rhs[static_cast<Eigen::Index>(r)] = -t.w * (t.a.constant - t.b.constant);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(ts.size()), sys.unknowns);
  a.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<double> n = a.transpose() * a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(n);
  if (ldlt.info() != Eigen::Success) throw DomainError("division smoothing system is singular");
  const Eigen::VectorXd x = ldlt.solve(a.transpose() * rhs);
  return {x.data(), x.data() + x.size()};
}

}  // namespace

double smoothingObjective(const CadRegistry& reg, const std::vector<DivisionEdge>& edges, double coupling) {
  std::vector<ArcTable> tables;
  tables.reserve(edges.size());
  const auto sys = buildSystem(reg, edges, tables);
  return objective(terms(sys, edges, coupling), currentUnknowns(sys));
}

Smoothing smoothDivisionNodes(const CadRegistry& reg, std::vector<DivisionEdge> edges, double coupling) {
  std::vector<ArcTable> tables;
  tables.reserve(edges.size());
  const auto sys = buildSystem(reg, edges, tables);
  if (sys.unknowns == 0) return {std::move(edges), coupling};
  const auto x0 = currentUnknowns(sys);
  std::vector<double> x;
  for (int attempt = 0;; ++attempt) {
    const auto ts = terms(sys, edges, coupling);
    x = solve(sys, ts);
    if (objective(ts, x) >= objective(ts, x0)) x = x0;
    bool monotone = true;
    for (std::size_t e = 0; e < edges.size() && monotone; ++e) {
      double prev = 0.0;
      for (std::size_t i = 1; i < edges[e].t.size(); ++i) {
        const double s = i + 1 == edges[e].t.size() ? sys.length[e] : x[sys.offset[e] + i - 1];
        if (!(s > prev)) monotone = false;
        prev = s;
      }
    }
    if (monotone) break;
    coupling = attempt < 30 ? 0.5 * coupling : 0.0;
  }
  for (std::size_t e = 0; e < edges.size(); ++e)
    for (std::size_t i = 1; i + 1 < edges[e].t.size(); ++i) {
      const double s = x[sys.offset[e] + i - 1];
      if (s != x0[sys.offset[e] + i - 1]) edges[e].t[i] = tables[e].inverse(s);
    }
  return {std::move(edges), coupling};
}

// ---------------------------------------------------------------------------
// Periodicity
// ---------------------------------------------------------------------------

PeriodicMap PeriodicMap::make(const Vec3& point, const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ParameterError("periodic axis must be a non-zero vector");
  if (!(std::abs(angle) < 2.0 * std::numbers::pi)) throw ParameterError("periodic angle must lie in (-2 pi, 2 pi)");
  return {point, axis / n, angle};
}

Vec3 PeriodicMap::apply(const Vec3& x) const {
  return point + Eigen::AngleAxisd(angle, axis).toRotationMatrix() * (x - point);
}

namespace {

struct Cell {
  long long i, j, k;
  bool operator==(const Cell&) const = default;
};

struct CellHash {
  std::size_t operator()(const Cell& c) const noexcept {
    std::size_t h = std::hash<long long>{}(c.i);
    h ^= std::hash<long long>{}(c.j) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>{}(c.k) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

class PointHash {
 public:
  PointHash(double cell, const std::vector<Vec3>& pts) : h_(cell), pts_(pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) map_[cellOf(pts[i])].push_back(i);
  }

  /// Indices of points within r (< cell) of x, ascending.
  std::vector<std::size_t> near(const Vec3& x, double r) const {
    std::vector<std::size_t> out;
    const Cell c = cellOf(x);
    for (long long di = -1; di <= 1; ++di)
      for (long long dj = -1; dj <= 1; ++dj)
        for (long long dk = -1; dk <= 1; ++dk) {
          auto it = map_.find({c.i + di, c.j + dj, c.k + dk});
          if (it == map_.end()) continue;
          for (std::size_t i : it->second)
            if ((pts_[i] - x).norm() <= r) out.push_back(i);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  Cell cellOf(const Vec3& x) const {
    return {static_cast<long long>(std::floor(x.x() / h_)), static_cast<long long>(std::floor(x.y() / h_)),
            static_cast<long long>(std::floor(x.z() / h_))};
  }

  double h_;
  const std::vector<Vec3>& pts_;
  std::unordered_map<Cell, std::vector<std::size_t>, CellHash> map_;
};

std::vector<NodeId> patchNodes(const Mesh& mesh, const std::string& patch) {
  std::set<NodeId> ids;
  for (const auto& f : mesh.patch(patch))
    for (NodeId id : facetNodeIds(mesh.elements.at(f.element), f.face)) ids.insert(id);
  return {ids.begin(), ids.end()};
}

}  // namespace

PeriodicReport checkPeriodicity(const Mesh& mesh, const std::string& patchA, const std::string& patchB,
                                const PeriodicMap& map, double tol, Execution exec) {
  if (!(tol > 0.0)) throw ParameterError("periodicity tolerance must be positive");
  const auto a = patchNodes(mesh, patchA);
  const auto b = patchNodes(mesh, patchB);
  std::vector<Vec3> xb;
  xb.reserve(b.size());
  for (NodeId id : b) xb.push_back(mesh.x(id));
  const PointHash hash(10.0 * tol, xb);
  std::vector<long long> partner(a.size(), -1);
  std::vector<double> residual(a.size(), 0.0);
  const bool par = exec == Execution::Parallel;
  const auto na = static_cast<long long>(a.size());
#pragma omp parallel for schedule(static) if (par)
  for (long long i = 0; i < na; ++i) {
    const Vec3 y = map.apply(mesh.x(a[i]));
    const auto hits = hash.near(y, tol);
    if (hits.size() == 1) {
      partner[i] = static_cast<long long>(hits[0]);
      residual[i] = (xb[hits[0]] - y).norm();
    }
  }
  std::vector<int> uses(b.size(), 0);
  for (long long p : partner)
    if (p >= 0) ++uses[p];
  PeriodicReport rep;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (partner[i] >= 0 && uses[partner[i]] == 1) {
      rep.pairs.emplace_back(a[i], b[partner[i]]);
      rep.maxResidual = std::max(rep.maxResidual, residual[i]);
    } else {
      rep.unmatchedA.push_back(a[i]);
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (uses[j] != 1) rep.unmatchedB.push_back(b[j]);
  rep.matched = rep.unmatchedA.empty() && rep.unmatchedB.empty();
  return rep;
}

Mesh enforcePeriodicity(const Mesh& mesh, const std::string& patchA, const std::string& patchB,
                        const PeriodicMap& map) {
  const auto& fa = mesh.patch(patchA);
  const auto& fb = mesh.patch(patchB);
  if (fa.size() != fb.size())
    throw TopologyError("periodic patches differ in size: '" + patchA + "' has " + std::to_string(fa.size()) +
                        " faces, '" + patchB + "' has " + std::to_string(fb.size()));
  auto corners = [&](const FaceRef& f) {
    const auto& e = mesh.elements.at(f.element);
    auto ids = facetNodeIds(e, f.face);
    ids.resize(referenceFacets(e.kind).at(f.face).vertices.size());
    return ids;
  };
  // vertices of B and the shortest B edge
  std::set<NodeId> vb;
  double hmin = kInf;
  for (const auto& f : fb) {
    const auto c = corners(f);
    for (std::size_t i = 0; i < c.size(); ++i) {
      vb.insert(c[i]);
      hmin = std::min(hmin, (mesh.x(c[i]) - mesh.x(c[(i + 1) % c.size()])).norm());
    }
  }
  const std::vector<NodeId> vbIds(vb.begin(), vb.end());
  std::vector<Vec3> vbx;
  for (NodeId id : vbIds) vbx.push_back(mesh.x(id));
  const double radius = 0.5 * hmin;
  const PointHash hash(radius, vbx);
  std::map<NodeId, NodeId> vmap;
  std::set<NodeId> used;
  for (const auto& f : fa)
    for (NodeId v : corners(f)) {
      if (vmap.count(v)) continue;
      const Vec3 y = map.apply(mesh.x(v));
      const auto hits = hash.near(y, radius);
      if (hits.empty()) throw TopologyError("vertex " + std::to_string(v) + " of '" + patchA + "' has no image on '" +
                                            patchB + "'");
      std::size_t best = hits[0];
      for (std::size_t h : hits)
        if ((vbx[h] - y).norm() < (vbx[best] - y).norm()) best = h;
      if (!used.insert(vbIds[best]).second)
        throw TopologyError("vertex " + std::to_string(vbIds[best]) + " of '" + patchB +
                            "' is the image of two vertices of '" + patchA + "'");
      vmap[v] = vbIds[best];
    }
  std::map<std::vector<NodeId>, const FaceRef*> byCorners;
  for (const auto& f : fb) {
    auto c = corners(f);
    std::sort(c.begin(), c.end());
    byCorners[c] = &f;
  }
  auto keys = [&](const FaceRef& f, const std::function<NodeId(NodeId)>& rename) {
    const auto& e = mesh.elements.at(f.element);
    const ElementKind fk = referenceFacets(e.kind).at(f.face).kind;
    const auto& ft = topology(fk, e.order);
    const auto ids = facetNodeIds(e, f.face);
    const std::size_t nv = referenceFacets(e.kind).at(f.face).vertices.size();
    std::vector<NodeId> vs;
    for (std::size_t i = 0; i < nv; ++i) vs.push_back(rename(ids[i]));
    std::vector<std::pair<detail::NodeKey, NodeId>> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
      out.emplace_back(detail::makeKey(vs, vertexWeights(fk, e.order, ft.lattice()[i])), ids[i]);
    return out;
  };
  std::map<NodeId, NodeId> nodeMap;
  for (const auto& f : fa) {
    auto c = corners(f);
    for (auto& v : c) v = vmap.at(v);
    std::sort(c.begin(), c.end());
    auto it = byCorners.find(c);
    const auto& ea = mesh.elements.at(f.element);
    if (it == byCorners.end())
      throw TopologyError("face " + std::to_string(f.face) + " of element " + std::to_string(f.element) + " on '" +
                          patchA + "' has no counterpart on '" + patchB + "'");
    const auto& eb = mesh.elements.at(it->second->element);
    if (eb.order != ea.order)
      throw TopologyError("face " + std::to_string(f.face) + " of element " + std::to_string(f.element) + " on '" +
                          patchA + "' differs in order from its counterpart");
    std::unordered_map<detail::NodeKey, NodeId, detail::NodeKeyHash> target;
    for (auto& [k, id] : keys(*it->second, [](NodeId v) { return v; })) target.emplace(std::move(k), id);
    for (auto& [k, id] : keys(f, [&](NodeId v) { return vmap.at(v); })) {
      const NodeId img = target.at(k);
      auto [pos, fresh] = nodeMap.emplace(id, img);
      if (!fresh && pos->second != img)
        throw TopologyError("node " + std::to_string(id) + " of '" + patchA + "' maps to two nodes of '" + patchB +
                            "'");
    }
  }
  Mesh out = mesh;
  for (const auto& [a, b] : nodeMap)
    if (a != b) out.node(b).x = map.apply(mesh.x(a));
  return out;
}

}  // namespace homesh
