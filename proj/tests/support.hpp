#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Core>

#include "monoloc/evidential.hpp"
#include "monoloc/geometry.hpp"
#include "monoloc/raster.hpp"

// Generators and numeric oracles shared by the unit tests.

namespace monoloc::test {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(eng_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  Eigen::Vector3d vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Eigen::Vector3d unit3() {
    Eigen::Vector3d v(normal(1.0), normal(1.0), normal(1.0));
    while (v.norm() < 1e-6) v = {normal(1.0), normal(1.0), normal(1.0)};
    return v.normalized();
  }

  Pose6D pose(double trans = 10.0) {
    Pose6D p;
    p.translation = vec3(-trans, trans);
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(uniform(0.0, 3.0), unit3()));
    return p;
  }

  PoseIncrement increment(double max_norm) {
    PoseIncrement d;
    for (int i = 0; i < 6; ++i) d[i] = normal(1.0);
    return d.normalized() * uniform(0.0, max_norm);
  }

  Raster<std::uint8_t> mask(int w, int h, double density) {
    Raster<std::uint8_t> m(w, h);
    for (auto& x : m.pixels()) x = coin(density) ? 1 : 0;
    if (std::none_of(m.pixels().begin(), m.pixels().end(), [](auto v) { return v != 0; }))
      m(integer(0, w - 1), integer(0, h - 1)) = 1;
    return m;
  }

  Raster<double> field(int w, int h, double lo, double hi) {
    Raster<double> r(w, h);
    for (auto& x : r.pixels()) x = uniform(lo, hi);
    return r;
  }

  DirichletParams dirichlet(int n, double max_evidence) {
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a[i] = 1.0 + uniform(0.0, max_evidence);
    return DirichletParams::make(a);
  }

  Eigen::VectorXd one_hot(int n) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y[integer(0, n - 1)] = 1.0;
    return y;
  }

  NigParams nig() {
    return NigParams::make(uniform(-5.0, 5.0), uniform(0.2, 5.0), uniform(1.2, 6.0), uniform(0.2, 5.0));
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// |a - b| / max(|a|, |b|, floor).
inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <typename Derived1, typename Derived2>
double rel_error(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b,
                 double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

/// Central difference of f along each coordinate of x.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Golden-section minimum of a unimodal function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b,
                             double tol = 1e-10) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace monoloc::test
