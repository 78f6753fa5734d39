#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dronerad/radar_model.hpp"

namespace dronerad {

inline constexpr int kNoise = -1;

/// Density clustering with an order-independent labeling:
///  - neighbours are points within distance <= eps (a point is its own neighbour);
///  - core points have at least min_pts neighbours; clusters are connected components of cores;
///  - a border point joins the cluster of its nearest core neighbour (lowest index on ties);
///  - clusters are numbered by their smallest member index; everything else is kNoise.
/// Uses a uniform grid of cell size eps.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts);

/// Cluster sizes indexed by label.
std::vector<std::size_t> cluster_sizes(std::span<const int> labels);

}  // namespace dronerad
