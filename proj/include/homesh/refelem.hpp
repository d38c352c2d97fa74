#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <span>
#include <vector>

#include "homesh/exec.hpp"
#include "homesh/mesh.hpp"
#include "homesh/topology.hpp"

namespace homesh {

/// Gauss-Lobatto-Legendre points of order P (P+1 points, ascending, in [-1, 1]).
std::vector<double> gllPoints(int order);

/// Coordinates of reference vertex v. Reference domains:
///   segment [-1,1]; triangle (-1,-1),(1,-1),(-1,1); quad [-1,1]^2;
///   tet (-1,-1,-1),(1,-1,-1),(-1,1,-1),(-1,-1,1); prism = triangle(xi1,xi2) x [-1,1];
///   hex [-1,1]^3. Unused components are zero.
Vec3 referenceVertex(ElementKind k, int v);

/// True if xi lies in the closed reference domain (with tolerance).
bool inReferenceDomain(ElementKind k, const Vec3& xi, double tol = 1e-12);

/// Reference coordinates of a lattice point of an order-P element.
/// Tensor directions use GLL points; simplex directions use a warped
/// barycentric construction that reduces to GLL on every edge and to the
/// same triangle distribution on every triangular facet.
Vec3 latticeToReference(ElementKind k, int order, const Lattice& l);

/// Uniform sample lattice with m intervals per direction (simplex directions
/// restricted to the simplex). Contains all reference vertices.
std::vector<Vec3> sampleLattice(ElementKind k, int m);

/// Polynomial space, interpolation nodes and cached tables for one (kind, order).
///
/// The modal basis is orthonormal: Legendre products in tensor directions and
/// Dubiner polynomials on simplices. Nodal (Lagrange) functions are obtained
/// through the inverse Vandermonde matrix.
class RefElement {
 public:
  RefElement(ElementKind kind, int order);

  ElementKind kind() const { return kind_; }
  int order() const { return order_; }
  int dim() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<Vec3>& samples() const { return samples_; }
  const ElementTopology& topo() const { return topology(kind_, order_); }

  /// Modal basis values (length N) and gradients (N x 3, unused columns zero).
  void modal(const Vec3& xi, Eigen::VectorXd& values, Eigen::MatrixXd* grads) const;

  /// Nodal basis values l_n(xi).
  Eigen::VectorXd nodalValues(const Vec3& xi) const;
  /// Nodal basis gradients (N x 3).
  Eigen::MatrixXd nodalGradients(const Vec3& xi) const;

  /// Inverse Vandermonde: modal coefficients = invVandermonde() * nodal values.
  const Eigen::MatrixXd& invVandermonde() const { return vinv_; }

  /// Modal gradients at every sample point: N x (3 * samples), column block s.
  const Eigen::MatrixXd& sampleModalGradients() const { return sampleGrads_; }

  /// Same layout for an arbitrary point set.
  Eigen::MatrixXd modalGradientTable(std::span<const Vec3> points) const;

 private:
  void simplexModal(const Vec3& xi, Eigen::VectorXd& values, Eigen::MatrixXd* grads) const;

  ElementKind kind_;
  int order_;
  int dim_;
  std::vector<std::array<int, 3>> modes_;
  std::vector<Vec3> nodes_;
  std::vector<Vec3> samples_;
  Eigen::MatrixXd vinv_;
  Eigen::MatrixXd sampleGrads_;
};

/// Cached, thread-safe shared instances.
const RefElement& refElement(ElementKind kind, int order);

/// Reference node coordinates of (kind, P) in canonical local order.
std::vector<Vec3> referenceNodes(ElementKind kind, int order);

/// Polynomial map chi from the reference element to physical space.
class ElementMapping {
 public:
  ElementMapping(const RefElement& ref, std::vector<Vec3> physNodes);
  ElementMapping(const Mesh& mesh, const Element& e);

  const RefElement& ref() const { return *ref_; }
  const std::vector<Vec3>& physNodes() const { return phys_; }

  /// Throws DomainError if xi is outside the closed reference domain.
  Vec3 eval(const Vec3& xi) const;
  /// Columns are d x / d xi_k for k < dim.
  Eigen::Matrix3d jacobian(const Vec3& xi) const;
  /// 3D: det of the Jacobian. 2D: (x_1 x x_2) . n0, 1D: x_1 . t0, where n0/t0
  /// is the unit normal/tangent of the vertex-linear element.
  double jacobianDet(const Vec3& xi) const;

  /// Modal coefficients (N x 3).
  const Eigen::MatrixXd& coefficients() const { return coef_; }

  /// Determinants at all sample points of the reference element.
  std::vector<double> sampleDeterminants() const;
  /// Determinants at the points of a table from RefElement::modalGradientTable.
  std::vector<double> determinants(const Eigen::MatrixXd& table) const;

 private:
  double detFrom(const Eigen::Matrix3d& j) const;

  const RefElement* ref_;
  std::vector<Vec3> phys_;
  Eigen::MatrixXd coef_;
  Vec3 frame_ = Vec3::Zero();
};

struct Validity {
  bool valid = false;
  double minScaledJacobian = 0.0;  // min det / max det over samples
  double minDet = 0.0;
  double maxDet = 0.0;
};

/// Samples det J over a (2P+1)-per-direction lattice plus all vertices.
Validity checkValidity(const ElementMapping& m);

/// checkValidity for every element of a mesh, in element order.
std::vector<Validity> checkMeshValidity(const Mesh& mesh, Execution exec = Execution::Parallel);

/// Same test over a caller-supplied set of reference points.
Validity checkValidityAt(const ElementMapping& m, std::span<const Vec3> points);
Validity checkValidityAt(const ElementMapping& m, const Eigen::MatrixXd& modalGradientTable);

}  // namespace homesh
