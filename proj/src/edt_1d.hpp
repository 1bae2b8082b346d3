#pragma once

#include <vector>

#include "monoloc/kernels.hpp"

namespace monoloc::kernels::detail {

/// Scratch space for one 1-D lower-envelope pass of length n.
struct EnvelopeScratch {
  explicit EnvelopeScratch(int n) : sites(std::size_t(n)), bounds(std::size_t(n) + 1) {}
  std::vector<int> sites;
  std::vector<double> bounds;
};

/// Lower envelope of parabolas (q - i)² + f[i] over finite f (Felzenszwalb &
/// Huttenlocher). Writes min value and arg-min site for every q; arg = -1 when
/// every f is unreachable. Strided access lets one routine serve rows and columns.
inline void lower_envelope(const double* f, std::ptrdiff_t f_stride, int n, double* out,
                           int* arg, std::ptrdiff_t out_stride, EnvelopeScratch& s) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * f_stride];
    if (fq == kUnreachable) continue;
    const double hq = fq + double(q) * double(q);
    while (k >= 0) {
      const int p = s.sites[std::size_t(k)];
      const double hp = f[p * f_stride] + double(p) * double(p);
      const double x = (hq - hp) / (2.0 * double(q - p));
      if (x <= s.bounds[std::size_t(k)]) {
        --k;
      } else {
        ++k;
        s.sites[std::size_t(k)] = q;
        s.bounds[std::size_t(k)] = x;
        break;
      }
    }
    if (k < 0) {
      k = 0;
      s.sites[0] = q;
      s.bounds[0] = -kUnreachable;
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) {
      out[q * out_stride] = kUnreachable;
      arg[q * out_stride] = -1;
    }
    return;
  }
  s.bounds[std::size_t(k) + 1] = kUnreachable;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (s.bounds[std::size_t(j) + 1] < double(q)) ++j;
    const int p = s.sites[std::size_t(j)];
    const double d = double(q - p);
    out[q * out_stride] = d * d + f[p * f_stride];
    arg[q * out_stride] = p;
  }
}

/// Window mean of `in` along one line with clipped support.
inline void line_box_mean(const double* in, std::ptrdiff_t stride, int n, int radius,
                          double* out, double* count) {
  for (int i = 0; i < n; ++i) {
    const int lo = i - radius < 0 ? 0 : i - radius;
    const int hi = i + radius >= n ? n - 1 : i + radius;
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += in[j * stride];
    out[i * stride] = sum;
    count[i * stride] = double(hi - lo + 1);
  }
}

}  // namespace monoloc::kernels::detail
