#include "monoloc/kernels.hpp"

#include "edt_1d.hpp"

namespace monoloc::kernels::serial {

SquaredDistanceField squared_edt(const Raster<std::uint8_t>& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Raster<double> f(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) f[i] = mask[i] ? 0.0 : kUnreachable;

  // columns: vertical distance and the row of the nearest site
  Raster<double> col(w, h);
  Raster<int> col_arg(w, h);
  detail::EnvelopeScratch col_scratch(h);
  for (int u = 0; u < w; ++u) {
    detail::lower_envelope(&f(u, 0), w, h, &col[std::size_t(u)], &col_arg[std::size_t(u)], w,
                           col_scratch);
  }

  SquaredDistanceField out{Raster<double>(w, h), Raster<int>(w, h, -1)};
  Raster<int> row_arg(w, 1);
  detail::EnvelopeScratch row_scratch(w);
  for (int v = 0; v < h; ++v) {
    detail::lower_envelope(&col(0, v), 1, w, &out.sq_distance(0, v), &row_arg(0, 0), 1,
                           row_scratch);
    for (int u = 0; u < w; ++u) {
      const int cu = row_arg(u, 0);
      out.nearest(u, v) = cu < 0 ? -1 : int(mask.index(cu, col_arg(cu, v)));
    }
  }
  return out;
}

Raster<double> box_blur(const Raster<double>& in, int radius) {
  const int w = in.width();
  const int h = in.height();
  Raster<double> horiz(w, h), hcount(w, h);
  for (int v = 0; v < h; ++v)
    detail::line_box_mean(&in(0, v), 1, w, radius, &horiz(0, v), &hcount(0, v));

  Raster<double> vert(w, h), vcount(w, h);
  for (int u = 0; u < w; ++u)
    detail::line_box_mean(&horiz[std::size_t(u)], w, h, radius, &vert[std::size_t(u)],
                          &vcount[std::size_t(u)]);

  Raster<double> out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int u = int(i % std::size_t(w));
    out[i] = vert[i] / (vcount[i] * hcount(u, 0));
  }
  return out;
}

}  // namespace monoloc::kernels::serial
