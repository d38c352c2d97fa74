#include <cstdio>
#include <limits>
#include <sstream>

#include "homesh/blsplit.hpp"
#include "homesh/io.hpp"
#include "homesh/refelem.hpp"
#include "json.hpp"

namespace homesh {

StatsReport statsReport(const Mesh& mesh, Execution exec) {
  StatsReport r;
  r.census = countByKind(mesh);
  r.elements = mesh.elements.size();
  r.nodes = mesh.nodes.size();
  const auto validity = checkMeshValidity(mesh, exec);
  const auto aspect = aspectRatioReport(mesh, exec);
  r.maxAspectRatio = aspect.max;
  r.meanAspectRatio = aspect.mean;
  if (validity.empty()) return r;
  r.minScaledJacobian = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < validity.size(); ++i) {
    r.minScaledJacobian = std::min(r.minScaledJacobian, validity[i].minScaledJacobian);
    sum += validity[i].minScaledJacobian;
    if (!validity[i].valid) r.invalidElements.push_back(i);
  }
  r.meanScaledJacobian = sum / static_cast<double>(validity.size());
  return r;
}

std::string StatsReport::json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json kinds = nlohmann::ordered_json::object();
  for (ElementKind k : kAllKinds) {
    if (!census.count(k)) continue;
    kinds[std::string(kindName(k))] = {{"total", census.count(k)},
                                       {std::string(regionName(Region::NearField)), census.count(k, Region::NearField)},
                                       {std::string(regionName(Region::FarField)), census.count(k, Region::FarField)}};
  }
  j["elements"] = elements;
  j["nodes"] = nodes;
  j["census"] = kinds;
  j["minScaledJacobian"] = minScaledJacobian;
  j["meanScaledJacobian"] = meanScaledJacobian;
  j["maxAspectRatio"] = maxAspectRatio;
  j["meanAspectRatio"] = meanAspectRatio;
  j["invalidElements"] = invalidElements;
  return j.dump(2) + "\n";
}

std::string StatsReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %12s %12s %12s\n", "kind", "total", "near-field", "far-field");
  out << line;
  for (ElementKind k : kAllKinds) {
    if (!census.count(k)) continue;
    std::snprintf(line, sizeof line, "%-14s %12zu %12zu %12zu\n", std::string(kindName(k)).c_str(), census.count(k),
                  census.count(k, Region::NearField), census.count(k, Region::FarField));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %12zu\n%-14s %12zu\n", "elements", elements, "nodes", nodes);
  out << line;
  std::snprintf(line, sizeof line, "scaled Jacobian  min %.6g  mean %.6g\n", minScaledJacobian, meanScaledJacobian);
  out << line;
  std::snprintf(line, sizeof line, "aspect ratio     max %.6g  mean %.6g\n", maxAspectRatio, meanAspectRatio);
  out << line;
  out << "invalid elements " << invalidElements.size();
  for (std::size_t i = 0; i < std::min<std::size_t>(invalidElements.size(), 20); ++i)
    out << (i ? ", " : ": ") << invalidElements[i];
  if (invalidElements.size() > 20) out << ", ...";
  out << '\n';
  return out.str();
}

}  // namespace homesh
