#pragma once

#include <Eigen/Core>
#include <functional>
#include <variant>
#include <vector>

#include "homesh/exec.hpp"
#include "homesh/geom.hpp"
#include "homesh/mesh.hpp"
#include "homesh/refelem.hpp"

namespace homesh {

struct OptimizerConfig {
  double gradientTolerance = 1e-8;  // inf-norm of d(E / L^2) / d(p / L), L the entity chord
  int maxIterations = 200;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int maxLineSearch = 60;
};

enum class OptStatus { Converged, MaxIterations, Stalled };

struct OptResult {
  Eigen::VectorXd x;
  OptStatus status = OptStatus::Stalled;
  int iterations = 0;
  double gradientNorm = 0.0;   // final projected inf-norm (scaled)
  std::vector<double> trace;   // energy after every accepted step, starting value first
};

/// Objective value; fills *grad when non-null.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Projected BFGS with Armijo backtracking on the box [lo, hi].
OptResult minimizeBounded(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi, const OptimizerConfig& cfg);

/// Springs between mesh nodes living on one CAD entity. Free nodes carry
/// parametric coordinates (t on a curve, (u, v) on a surface); fixed nodes a
/// position.
class SpringSystem {
 public:
  explicit SpringSystem(const CadCurve& c);
  explicit SpringSystem(const CadSurface& s);

  int paramDim() const { return dim_; }
  int addFixed(const Vec3& x);
  int addFree(double u, double v = 0.0);
  void addSpring(int a, int b, double rest);

  std::size_t numNodes() const { return nodes_.size(); }
  std::size_t numFree() const { return free_.size(); }
  Eigen::VectorXd parameters() const;
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;

  /// Energy sum (|xA - xB| - rest)^2; parameters must lie in the box.
  double energy(const Eigen::VectorXd& p) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const;
  double energyAndGradient(const Eigen::VectorXd& p, Eigen::VectorXd* g) const;

  Vec3 position(int node, const Eigen::VectorXd& p) const;
  /// Parameter slice of a free node.
  Eigen::Vector2d nodeParams(int node, const Eigen::VectorXd& p) const;

 private:
  struct Node {
    int var = -1;  // -1: fixed
    Vec3 x = Vec3::Zero();
  };
  struct Spring {
    int a, b;
    double rest;
  };
  const CadCurve* curve_ = nullptr;
  const CadSurface* surface_ = nullptr;
  int dim_;
  std::vector<Node> nodes_;
  std::vector<int> free_;
  std::vector<double> init_;
  std::vector<Spring> springs_;
};

/// Minimizes E / scale^2 over the parameters divided by scale.
OptResult optimize(const SpringSystem& sys, double scale, const OptimizerConfig& cfg);

struct CurveEdgeResult {
  std::vector<double> t;  // P + 1 values, endpoints included
  OptResult opt;
};

/// Interior nodes of an order-P edge on a curve between parameters t0 and t1.
CurveEdgeResult optimizeCurveNodes(const CadCurve& c, double t0, double t1, int order, const OptimizerConfig& cfg);

struct SurfaceNodesResult {
  std::vector<Eigen::Vector2d> uv;  // per node; fixed nodes hold their projection
  std::vector<Vec3> x;
  OptResult opt;
};

/// Interior nodes of an order-P edge on a surface with fixed end positions.
SurfaceNodesResult optimizeSurfaceEdgeNodes(const CadSurface& s, const Vec3& a, const Vec3& b, int order,
                                            const OptimizerConfig& cfg);
SurfaceNodesResult optimizeSurfaceEdgeNodes(const CadSurface& s, Eigen::Vector2d a, Eigen::Vector2d b, int order,
                                            const OptimizerConfig& cfg);

/// Interior nodes of an order-P triangle on a surface. `nodes` holds all
/// triangle nodes in canonical order; boundary entries are fixed, interior
/// entries are ignored.
SurfaceNodesResult optimizeFaceInteriorNodes(const CadSurface& s, const std::vector<Vec3>& nodes, int order,
                                             const OptimizerConfig& cfg);

/// Blends boundary nodes into the interior: Coons patch for quads, edge
/// blending for triangles, Gordon-Hall sums for tets, prisms and hexes.
/// `nodes` holds all element nodes in canonical order; interior entries are
/// overwritten. Reproduces affine maps exactly.
void placeInteriorNodes(ElementKind kind, int order, std::vector<Vec3>& nodes);

struct UpgradeReport {
  std::vector<Validity> validity;             // per element
  std::vector<std::size_t> invalidElements;   // ascending
  int curveEdges = 0, surfaceEdges = 0, straightEdges = 0;
  int cadFaces = 0, blendedFaces = 0;
  int optimizerWarnings = 0;                  // non-converged spring systems
};

struct UpgradeResult {
  Mesh mesh;
  UpgradeReport report;
};

/// Raises a linear mesh to order P: curve edges, surface edges, surface faces,
/// then volume interiors. Shared entities are computed once. The mesh is
/// returned even when elements end up invalid.
UpgradeResult upgradeMesh(const Mesh& linear, const CadRegistry& reg, int order,
                          const OptimizerConfig& cfg = {}, Execution exec = Execution::Parallel);

}  // namespace homesh
