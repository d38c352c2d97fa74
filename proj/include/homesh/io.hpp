#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homesh/builtin.hpp"
#include "homesh/condition.hpp"
#include "homesh/errors.hpp"
#include "homesh/exec.hpp"
#include "homesh/geom.hpp"
#include "homesh/mesh.hpp"

namespace homesh {

inline constexpr int kFormatVersion = 1;

/// Everything a native file carries. `extra` holds unknown top-level keys as
/// raw canonical JSON text so they survive a read/write cycle.
struct NativeDocument {
  Mesh mesh;
  CadRegistry registry;
  std::vector<std::string> wallPatches;
  std::optional<PeriodicPair> periodicity;
  std::optional<DivisionProblem> divisions;
  std::map<std::string, std::string> extra;
};

NativeDocument documentFrom(const BuiltinGeometry& g);

/// Document version other than kFormatVersion.
class VersionError : public IoError {
 public:
  VersionError(const std::string& what, long long found) : IoError(what), found(found) {}
  long long found;
};

/// Well-formed JSON that does not match the schema. `pointer` is a JSON
/// pointer to the offending value.
class SchemaError : public StructuralError {
 public:
  SchemaError(const std::string& what, std::string pointer)
      : StructuralError(what), pointer(std::move(pointer)) {}
  std::string pointer;
};

/// Canonical text: sorted keys, doubles with 17 significant digits, one node,
/// element or face per line.
std::string toCanonicalJson(const NativeDocument& doc);
/// `source` names the input in error messages.
NativeDocument parseDocument(const std::string& text, const std::string& source = "<input>");

void writeDocument(const NativeDocument& doc, const std::string& path);
NativeDocument readDocument(const std::string& path);

std::pair<Mesh, CadRegistry> readMesh(const std::string& path);
void writeMesh(const Mesh& mesh, const CadRegistry& registry, const std::string& path);

// ---------------------------------------------------------------------------
// VTK export
// ---------------------------------------------------------------------------

struct VtkSummary {
  std::size_t points = 0;
  std::size_t cells = 0;
};

/// Legacy ASCII unstructured grid. Every element is sampled on a uniform
/// lattice with k intervals per reference direction and written as k^d linear
/// cells. Points are shared inside an element and duplicated across elements.
/// Cell data: minScaledJacobian, aspectRatio, region (0 near field, 1 far field).
VtkSummary exportVTK(const Mesh& mesh, std::ostream& out, int k, Execution exec = Execution::Parallel);
VtkSummary exportVTK(const Mesh& mesh, const std::string& path, int k, Execution exec = Execution::Parallel);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct StatsReport {
  Census census;
  std::size_t elements = 0;
  std::size_t nodes = 0;
  double minScaledJacobian = 0.0;
  double meanScaledJacobian = 0.0;
  double maxAspectRatio = 0.0;
  double meanAspectRatio = 0.0;
  std::vector<std::size_t> invalidElements;

  std::string json() const;
  std::string table() const;
};

StatsReport statsReport(const Mesh& mesh, Execution exec = Execution::Parallel);

}  // namespace homesh
