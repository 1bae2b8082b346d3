#include "monoloc/kernels.hpp"

#include <omp.h>

#include "edt_1d.hpp"

namespace monoloc::kernels::omp {

SquaredDistanceField squared_edt(const Raster<std::uint8_t>& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Raster<double> f(w, h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(mask.size()); ++i)
    f[std::size_t(i)] = mask[std::size_t(i)] ? 0.0 : kUnreachable;

  Raster<double> col(w, h);
  Raster<int> col_arg(w, h);
  SquaredDistanceField out{Raster<double>(w, h), Raster<int>(w, h, -1)};

#pragma omp parallel
  {
    detail::EnvelopeScratch col_scratch(h);
#pragma omp for schedule(static)
    for (int u = 0; u < w; ++u) {
      detail::lower_envelope(&f(u, 0), w, h, &col[std::size_t(u)], &col_arg[std::size_t(u)], w,
                             col_scratch);
    }

    detail::EnvelopeScratch row_scratch(w);
    std::vector<int> row_arg(static_cast<std::size_t>(w));
#pragma omp for schedule(static)
    for (int v = 0; v < h; ++v) {
      detail::lower_envelope(&col(0, v), 1, w, &out.sq_distance(0, v), row_arg.data(), 1,
                             row_scratch);
      for (int u = 0; u < w; ++u) {
        const int cu = row_arg[std::size_t(u)];
        out.nearest(u, v) = cu < 0 ? -1 : int(mask.index(cu, col_arg(cu, v)));
      }
    }
  }
  return out;
}

Raster<double> box_blur(const Raster<double>& in, int radius) {
  const int w = in.width();
  const int h = in.height();
  Raster<double> horiz(w, h), hcount(w, h);
  Raster<double> vert(w, h), vcount(w, h);
  Raster<double> out(w, h);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int v = 0; v < h; ++v)
      detail::line_box_mean(&in(0, v), 1, w, radius, &horiz(0, v), &hcount(0, v));
#pragma omp for schedule(static)
    for (int u = 0; u < w; ++u)
      detail::line_box_mean(&horiz[std::size_t(u)], w, h, radius, &vert[std::size_t(u)],
                            &vcount[std::size_t(u)]);
#pragma omp for schedule(static)
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) out(u, v) = vert(u, v) / (vcount(u, v) * hcount(u, 0));
  }
  return out;
}

}  // namespace monoloc::kernels::omp
