#pragma once

#include <string>
#include <utility>
#include <vector>

#include "homesh/errors.hpp"
#include "homesh/exec.hpp"
#include "homesh/geom.hpp"
#include "homesh/mesh.hpp"

namespace homesh {

// ---------------------------------------------------------------------------
// Division balancing
// ---------------------------------------------------------------------------

/// Sum of divisions over sideA equals the sum over sideB. A group may appear
/// more than once on a side.
struct DivisionConstraint {
  std::vector<int> sideA;
  std::vector<int> sideB;
};

struct DivisionProblem {
  std::vector<std::string> names;  // optional, one per group
  std::vector<double> targets;     // desired divisions per group, >= 1
  std::vector<DivisionConstraint> constraints;
  int maxDivisions = 0;  // upper bound per group; 0 for none

  std::size_t groups() const { return targets.size(); }
  std::string name(int g) const;
};

struct Balance {
  std::vector<int> divisions;
  double objective = 0.0;  // sum |d - target|
  std::size_t nodes = 0;   // branch-and-bound nodes explored
};

/// Raised for systems without a positive integer solution. `cycle` is an
/// irreducible subset of constraint indices that is already infeasible.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::size_t> cycle)
      : Error(ErrorClass::Validation, what), cycle_(std::move(cycle)) {}
  const std::vector<std::size_t>& cycle() const { return cycle_; }

 private:
  std::vector<std::size_t> cycle_;
};

/// Integer divisions minimizing sum |d - target| subject to the constraints.
/// Among minimizers, sum (d - target)^2 is minimized next.
Balance balanceDivisions(const DivisionProblem& p);

/// Sizing target for a curve segment: turning angle over 30 degrees for
/// curved segments, length over `size` for straight ones; at least 1.
double divisionTarget(const CadCurve& c, double t0, double t1, double size);

// ---------------------------------------------------------------------------
// Division smoothing
// ---------------------------------------------------------------------------

/// Division points of one block edge on a curve, endpoints included and
/// strictly monotone in t. Vertices are labels shared between edges.
struct DivisionEdge {
  int curve = -1;
  std::vector<double> t;
  int startVertex = -1;
  int endVertex = -1;
};

double arcLength(const CadCurve& c, double t0, double t1);

/// Sum over edges of (ds_i - ds_{i+1})^2 plus coupling * (ds_e - ds_f)^2 for
/// the end intervals of every pair of edges meeting at a vertex.
double smoothingObjective(const CadRegistry& reg, const std::vector<DivisionEdge>& edges, double coupling = 1.0);

struct Smoothing {
  std::vector<DivisionEdge> edges;
  double coupling = 1.0;  // weight actually used
};

/// Moves interior division points along their curves to minimize
/// smoothingObjective. Endpoints stay fixed and point order is preserved;
/// the coupling is halved until the minimizer keeps every interval positive.
Smoothing smoothDivisionNodes(const CadRegistry& reg, std::vector<DivisionEdge> edges, double coupling = 1.0);

// ---------------------------------------------------------------------------
// Rotational periodicity
// ---------------------------------------------------------------------------

struct PeriodicMap {
  Vec3 point = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double angle = 0.0;

  /// Normalizes the axis; throws ParameterError on a zero axis or |angle| >= 2 pi.
  static PeriodicMap make(const Vec3& point, const Vec3& axis, double angle);
  Vec3 apply(const Vec3& x) const;
};

struct PeriodicReport {
  bool matched = false;
  std::vector<std::pair<NodeId, NodeId>> pairs;  // (node of A, node of B), ascending A
  double maxResidual = 0.0;
  std::vector<NodeId> unmatchedA;
  std::vector<NodeId> unmatchedB;
};

/// Pairs every node of patch A, rotated by the map, with the unique node of
/// patch B within tol.
PeriodicReport checkPeriodicity(const Mesh& mesh, const std::string& patchA, const std::string& patchB,
                                const PeriodicMap& map, double tol, Execution exec = Execution::Parallel);

/// Copy of the mesh with every node of patch B replaced by the rotated image
/// of its counterpart on patch A. Throws TopologyError if the patches differ.
Mesh enforcePeriodicity(const Mesh& mesh, const std::string& patchA, const std::string& patchB,
                        const PeriodicMap& map);

}  // namespace homesh
