#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "homesh/mesh.hpp"

namespace homesh::detail {

/// Identifies a node shared between elements by its weights with respect to
/// global vertex ids: zero weights dropped, sorted by id, reduced by the gcd.
using NodeKey = std::vector<std::pair<NodeId, long long>>;

inline NodeKey makeKey(const std::vector<NodeId>& ids, const std::vector<long long>& weights) {
  NodeKey k;
  long long g = 0;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (weights[i] != 0) {
      k.emplace_back(ids[i], weights[i]);
      g = std::gcd(g, weights[i]);
    }
  std::sort(k.begin(), k.end());
  for (auto& e : k) e.second /= g;
  return k;
}

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    std::size_t h = k.size();
    for (const auto& [id, w] : k) {
      h ^= std::hash<NodeId>{}(id) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= std::hash<long long>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace homesh::detail
