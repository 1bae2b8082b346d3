#pragma once

#include <cstdint>
#include <limits>

#include "monoloc/raster.hpp"

// Raster kernels used to build cost maps. Each kernel has a serial reference
// and an OpenMP implementation; both produce bit-identical output.

namespace monoloc::kernels {

enum class Execution { serial, parallel };

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct SquaredDistanceField {
  /// Exact squared Euclidean distance (pixels²) to the nearest nonzero mask pixel.
  Raster<double> sq_distance;
  /// Linear index of that nearest mask pixel, -1 when the mask is empty.
  Raster<int> nearest;
};

/// Normalized box filter: mean over the (2r+1)² window clipped to the image.
namespace serial {
SquaredDistanceField squared_edt(const Raster<std::uint8_t>& mask);
Raster<double> box_blur(const Raster<double>& in, int radius);
}  // namespace serial

namespace omp {
SquaredDistanceField squared_edt(const Raster<std::uint8_t>& mask);
Raster<double> box_blur(const Raster<double>& in, int radius);
}  // namespace omp

inline SquaredDistanceField squared_edt(const Raster<std::uint8_t>& mask, Execution exec) {
  return exec == Execution::parallel ? omp::squared_edt(mask) : serial::squared_edt(mask);
}
inline Raster<double> box_blur(const Raster<double>& in, int radius, Execution exec) {
  return exec == Execution::parallel ? omp::box_blur(in, radius) : serial::box_blur(in, radius);
}

}  // namespace monoloc::kernels
