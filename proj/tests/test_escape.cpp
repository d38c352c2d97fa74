#include <map>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "homesh/refelem.hpp"

using namespace homesh;

TEST_CASE("sampled validity has no resolution escapes") {
  // Random perturbations of affine elements; compare the validity verdict at
  // the (2P+1) lattice against a four times denser lattice.
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> amp(0.0, 0.25);
  std::normal_distribution<double> noise(0.0, 1.0);
  int escapes = 0, invalid = 0, total = 0;
  const ElementKind kinds[] = {ElementKind::Tetrahedron, ElementKind::Prism, ElementKind::Hexahedron};
  std::map<std::pair<int, int>, Eigen::MatrixXd> dense;
  for (auto k : kinds)
    for (int p = 1; p <= 4; ++p)
      dense[{static_cast<int>(k), p}] = refElement(k, p).modalGradientTable(sampleLattice(k, 8 * p));
  for (int t = 0; t < 10000; ++t) {
    const auto k = kinds[t % 3];
    const int p = 1 + (t / 3) % 4;
    const auto& ref = refElement(k, p);
    auto nodes = testing::mappedNodes(k, p, testing::randomAffine(rng));
    const double a = amp(rng);
    for (auto& x : nodes) x += a * Vec3(noise(rng), noise(rng), noise(rng));
    ElementMapping m(ref, nodes);
    const bool coarse = checkValidity(m).valid;
    ++total;
    if (!coarse) {
      ++invalid;
      continue;
    }
    const auto fineV = checkValidityAt(m, dense.at({static_cast<int>(k), p}));
    const bool fine = fineV.valid;
    if (!fine)
      MESSAGE("escape: " << kindName(k) << " P=" << p << " dense min/max " << fineV.minScaledJacobian);
    escapes += !fine;
  }
  MESSAGE("escape test: " << total << " elements, " << invalid << " invalid, " << escapes << " escapes");
  CHECK(invalid > 0);
  CHECK(escapes == 0);
}
