#include "dronerad/peak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dronerad/errors.hpp"

namespace dronerad {

std::array<std::size_t, 3> find_peak(std::span<const double> values, std::array<std::size_t, 3> dims,
                                     PeakScale scale, double tie_db) {
  const std::size_t total = dims[0] * dims[1] * dims[2];
  if (total != values.size() || total == 0) {
    throw ConfigError("peak search dimensions do not match the data");
  }
  std::size_t best = total;
  for (std::size_t i = 0; i < total; ++i) {
    const double v = values[i];
    if (std::isfinite(v) && (best == total || v > values[best])) {
      best = i;
    }
  }
  if (best == total || (scale == PeakScale::power && !(values[best] > 0.0))) {
    throw NoTargetError("map has no peak");
  }
  const double peak = values[best];
  const double floor = scale == PeakScale::power ? peak * std::pow(10.0, -tie_db / 10.0) : peak - tie_db;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < total; ++i) {
    if (std::isfinite(values[i]) && values[i] >= floor) {
      candidates.push_back(i);
    }
  }
  auto unflatten = [&](std::size_t i) {
    return std::array<std::size_t, 3>{i / (dims[1] * dims[2]), (i / dims[2]) % dims[1], i % dims[2]};
  };
  if (candidates.size() == 1) {
    return unflatten(best);
  }
  // Candidates are sorted, so membership is a binary search.
  std::vector<char> seen(candidates.size(), 0);
  auto slot = [&](std::size_t flat) -> std::ptrdiff_t {
    const auto it = std::lower_bound(candidates.begin(), candidates.end(), flat);
    return (it != candidates.end() && *it == flat) ? it - candidates.begin() : -1;
  };
  std::size_t chosen = total;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    if (seen[s]) {
      continue;
    }
    seen[s] = 1;
    stack.assign(1, candidates[s]);
    std::size_t comp_best = candidates[s];
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      // Equal values inside a component resolve to the lowest index.
      if (values[cur] > values[comp_best] || (values[cur] == values[comp_best] && cur < comp_best)) {
        comp_best = cur;
      }
      const auto c = unflatten(cur);
      for (int d0 = -1; d0 <= 1; ++d0) {
        for (int d1 = -1; d1 <= 1; ++d1) {
          for (int d2 = -1; d2 <= 1; ++d2) {
            const long long n0 = static_cast<long long>(c[0]) + d0;
            const long long n1 = static_cast<long long>(c[1]) + d1;
            const long long n2 = static_cast<long long>(c[2]) + d2;
            if (n0 < 0 || n1 < 0 || n2 < 0 || n0 >= static_cast<long long>(dims[0]) ||
                n1 >= static_cast<long long>(dims[1]) || n2 >= static_cast<long long>(dims[2])) {
              continue;
            }
            const std::size_t flat = (static_cast<std::size_t>(n0) * dims[1] + static_cast<std::size_t>(n1)) * dims[2] +
                                     static_cast<std::size_t>(n2);
            const auto k = slot(flat);
            if (k >= 0 && !seen[static_cast<std::size_t>(k)]) {
              seen[static_cast<std::size_t>(k)] = 1;
              stack.push_back(flat);
            }
          }
        }
      }
    }
    chosen = std::min(chosen, comp_best);
  }
  return unflatten(chosen);
}

}  // namespace dronerad
