#include "dronerad/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "dronerad/errors.hpp"

namespace dronerad {
namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::size_t h = static_cast<std::size_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::size_t>(k.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(k.z) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return h;
  }
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ConfigError("dbscan eps must be positive and finite");
  }
  if (min_pts == 0) {
    throw ConfigError("dbscan min_pts must be at least 1");
  }
  const std::size_t n = points.size();
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DomainError("dbscan input contains non-finite coordinates");
    }
  }
  auto key_of = [eps](const Vec3& p) {
    return CellKey{static_cast<long long>(std::floor(p.x / eps)), static_cast<long long>(std::floor(p.y / eps)),
                   static_cast<long long>(std::floor(p.z / eps))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  for (std::size_t i = 0; i < n; ++i) {
    grid[key_of(points[i])].push_back(i);
  }
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellKey k = key_of(points[i]);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == grid.end()) {
            continue;
          }
          for (std::size_t j : it->second) {
            const Vec3 d = points[i] - points[j];
            if (d.dot(d) <= eps2) {
              neighbours[i].push_back(j);
            }
          }
        }
      }
    }
    std::sort(neighbours[i].begin(), neighbours[i].end());
  }

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbours[i].size() >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) {
      continue;
    }
    for (std::size_t j : neighbours[i]) {
      if (core[j]) {
        const std::size_t a = find_root(parent, i);
        const std::size_t b = find_root(parent, j);
        if (a != b) {
          parent[std::max(a, b)] = std::min(a, b);
        }
      }
    }
  }
  // Component representative for every point: its own root for cores, nearest core's root for borders.
  std::vector<std::size_t> owner(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      owner[i] = find_root(parent, i);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : neighbours[i]) {
      if (!core[j]) {
        continue;
      }
      const Vec3 d = points[i] - points[j];
      const double d2 = d.dot(d);
      if (d2 < best) {
        best = d2;
        owner[i] = find_root(parent, j);
      }
    }
  }
  // Number clusters by their smallest member index.
  std::vector<int> label_of_root(n, kNoise);
  std::vector<int> labels(n, kNoise);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] == n) {
      continue;
    }
    int& l = label_of_root[owner[i]];
    if (l == kNoise) {
      l = next++;
    }
    labels[i] = l;
  }
  return labels;
}

std::vector<std::size_t> cluster_sizes(std::span<const int> labels) {
  std::vector<std::size_t> sizes;
  for (int l : labels) {
    if (l < 0) {
      continue;
    }
    if (static_cast<std::size_t>(l) >= sizes.size()) {
      sizes.resize(static_cast<std::size_t>(l) + 1, 0);
    }
    ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

}  // namespace dronerad
