#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "homesh/errors.hpp"
#include "homesh/exec.hpp"
#include "homesh/mesh.hpp"
#include "homesh/refelem.hpp"

namespace homesh {

/// Layer breakpoints 0 = t_0 < ... < t_n = 1 along the wall normal.
struct SpacingSpec {
  int n = 1;
  double r = 1.0;
  std::vector<double> t;

  double firstHeight() const { return t.at(1) - t.at(0); }
};

/// t_k = (r^k - 1) / (r^n - 1), or k / n when r = 1.
SpacingSpec spacing(int n, double r);

/// Reference axis to split and the side of the reference element that touches the wall.
struct SplitAxis {
  int axis = 0;      // 0, 1, 2
  int wallSide = -1; // -1 or +1
  int wallFace = 0;  // local facet index

  bool operator==(const SplitAxis&) const = default;
};

/// Split axes of a prism or hexahedron from its wall facets (local indices).
/// Prisms take walls on triangular facets only; hexes take one facet or two
/// adjacent ones.
std::vector<SplitAxis> detectWallAxes(ElementKind kind, std::span<const int> wallFacets);

/// Reference interval [lo, hi] of layer q (counted in increasing xi) along an axis.
std::array<double, 2> layerInterval(const SplitAxis& a, const SpacingSpec& s, int q);

/// Sub-elements of a valid macro element, each the macro map composed with an
/// affine map of the reference element. Layers of the first axis vary slowest.
std::vector<ElementMapping> splitElement(const ElementMapping& macro, std::span<const SplitAxis> axes,
                                         const SpacingSpec& s);

struct SplitResult {
  Mesh mesh;
  std::vector<std::size_t> macroOf;          // source element for every output element
  std::vector<std::size_t> invalidElements;  // output indices failing checkValidity
  std::size_t splitElements = 0;
};

/// Splits every near-field prism and hexahedron with a facet in one of the wall
/// patches. Far-field elements are copied untouched.
SplitResult splitMesh(const Mesh& mesh, const SpacingSpec& s, const std::vector<std::string>& wallPatches,
                      Execution exec = Execution::Parallel);

/// Longest vertex-to-vertex edge chord over the smallest height between
/// corresponding nodes of opposite facets (altitudes for simplices).
double aspectRatio(const Mesh& mesh, const Element& e);

struct AspectReport {
  std::vector<double> perElement;
  double max = 0.0;
  double mean = 0.0;
  /// Counts per bin; bin b holds ratios in [edges[b], edges[b + 1]).
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

AspectReport aspectRatioReport(const Mesh& mesh, Execution exec = Execution::Parallel);

}  // namespace homesh
