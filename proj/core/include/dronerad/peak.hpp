#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace dronerad {

enum class PeakScale { power, decibel };

/// Global maximum of a row-major volume of shape dims (use 1 for unused trailing dims).
///
/// Cells within `tie_db` of the maximum are grouped into 26-connected components. A single
/// component yields its maximum cell. Several components are an ambiguous multi-peak: the
/// component whose maximum has the lowest index (range first, then angle) wins.
/// Throws NoTargetError when every cell is zero, -inf or non-finite.
std::array<std::size_t, 3> find_peak(std::span<const double> values, std::array<std::size_t, 3> dims,
                                     PeakScale scale = PeakScale::power, double tie_db = 0.1);

}  // namespace dronerad
