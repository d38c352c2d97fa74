#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homesh/condition.hpp"
#include "homesh/geom.hpp"
#include "homesh/mesh.hpp"

namespace homesh {

struct PeriodicPair {
  std::string patchA;
  std::string patchB;
  PeriodicMap map;  // takes patchA onto patchB
};

/// CAD model plus linear macro mesh: one near-field layer of prisms around the
/// body, hexahedra where the body meets the floor wall, tetrahedra elsewhere.
struct BuiltinGeometry {
  std::string name;
  CadRegistry registry;
  Mesh mesh;
  std::vector<std::string> wallPatches;
  std::optional<PeriodicPair> periodic;
};

struct BuiltinOptions {
  double shell = 0.05;  // near-field layer thickness relative to the body length
};

/// "wingtip-box", "crm-census", "cylinder-box", "rotor-wedge".
std::vector<std::string> builtinNames();

/// Throws LookupError for unknown names, ParameterError for a shell outside (0, 0.2].
BuiltinGeometry builtinGeometry(const std::string& name, const BuiltinOptions& opt = {});

}  // namespace homesh
