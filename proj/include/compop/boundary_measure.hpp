#ifndef COMPOP_BOUNDARY_MEASURE_HPP
#define COMPOP_BOUNDARY_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "compop/fit.hpp"
#include "compop/symbols.hpp"

namespace compop {

inline constexpr std::size_t kDefaultBoundarySamples = std::size_t{1} << 20;
inline constexpr double kDefaultBoundaryRadius = 1.0 - 1e-8;

struct CarlesonProfile {
  std::vector<double> h_grid;     // decreasing
  std::vector<double> rho_hat;    // grid max over centers, window size h
  std::vector<double> rho_upper;  // same centers, window size 1.5 h
  std::vector<double> level_hat;  // m(|phi*| >= 1 - h)
  std::vector<std::size_t> centers;  // centers used at each h
  std::size_t samples = 0;
  std::size_t xi_grid_size = 0;
  double r_b = kDefaultBoundaryRadius;
  std::vector<std::string> warnings;
};

// h = 2^-1, 2^-2, ..., 2^-10.
inline std::vector<double> default_h_grid() {
  std::vector<double> h;
  for (int j = 1; j <= 10; ++j) h.push_back(std::ldexp(1.0, -j));
  return h;
}

struct BoundarySample {
  std::vector<cplx> w;
  std::vector<double> gap;  // 1 - |w|

  BoundarySample(const SymbolSpec& spec, std::size_t Q, double r_b) : w(Q), gap(Q) {
    const double step = 2.0 * M_PI / static_cast<double>(Q);
    for (std::size_t q = 0; q < Q; ++q) {
      const cplx z = std::polar(r_b, step * static_cast<double>(q));
      w[q] = eval(spec, z);
      gap[q] = contact_defect(spec, z) / (1.0 + std::abs(w[q]));
    }
  }
};

inline double window_measure(const SymbolSpec& spec, cplx xi, double h, std::size_t Q = kDefaultBoundarySamples,
                             double r_b = kDefaultBoundaryRadius) {
  if (std::abs(std::abs(xi) - 1.0) > 1e-12) throw std::invalid_argument("window_measure: |xi| must be 1");
  if (!(h > 0.0 && h < 2.0)) throw std::invalid_argument("window_measure: h must lie in (0,2)");
  if (Q == 0) throw std::invalid_argument("window_measure: Q must be positive");
  const double step = 2.0 * M_PI / static_cast<double>(Q);
  std::size_t count = 0;
  for (std::size_t q = 0; q < Q; ++q)
    if (std::abs(eval(spec, std::polar(r_b, step * static_cast<double>(q))) - xi) <= h) ++count;
  return static_cast<double>(count) / static_cast<double>(Q);
}

namespace detail {

struct ArgPoint {
  double arg;
  cplx w;
};

inline std::size_t centers_for(double h, std::size_t xi_grid_size) {
  return std::max<std::size_t>(xi_grid_size, static_cast<std::size_t>(std::ceil(8.0 * M_PI / h)));
}

// Largest window count over `n_centers` equispaced centers for windows of radius h.
inline std::size_t grid_max_count(const BoundarySample& bs, double h, std::size_t n_centers) {
  std::vector<ArgPoint> pts;
  for (std::size_t q = 0; q < bs.w.size(); ++q)
    if (bs.gap[q] <= h) pts.push_back({std::arg(bs.w[q]), bs.w[q]});
  if (pts.empty()) return 0;
  std::sort(pts.begin(), pts.end(), [](const ArgPoint& a, const ArgPoint& b) { return a.arg < b.arg; });
  const std::size_t n = pts.size();
  std::vector<ArgPoint> ext(pts);
  ext.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) ext.push_back({pts[i].arg + 2.0 * M_PI, pts[i].w});
  for (std::size_t i = 0; i < n; ++i) ext.push_back({pts[i].arg + 4.0 * M_PI, pts[i].w});
  // a point of the closed disk within distance h of xi lies within angle asin(h) of xi
  const bool everything = h >= 1.0;
  const double delta = everything ? M_PI : std::asin(h);
  std::size_t best = 0;
  for (std::size_t i = 0; i < n_centers; ++i) {
    const double psi = -M_PI + 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_centers);
    const cplx xi = std::polar(1.0, psi);
    std::size_t count = 0;
    if (everything) {
      for (std::size_t k = 0; k < n; ++k)
        if (std::abs(pts[k].w - xi) <= h) ++count;
    } else {
      const double lo = psi - delta + 2.0 * M_PI, hi = psi + delta + 2.0 * M_PI;
      auto it = std::lower_bound(ext.begin(), ext.end(), lo,
                                 [](const ArgPoint& a, double v) { return a.arg < v; });
      for (; it != ext.end() && it->arg <= hi; ++it)
        if (std::abs(it->w - xi) <= h) ++count;
    }
    best = std::max(best, count);
  }
  return best;
}

}  // namespace detail

inline CarlesonProfile rho_profile(const SymbolSpec& spec, std::vector<double> h_grid = default_h_grid(),
                                   std::size_t Q = kDefaultBoundarySamples, std::size_t xi_grid_size = 0,
                                   double r_b = kDefaultBoundaryRadius) {
  if (h_grid.empty()) throw std::invalid_argument("rho_profile: empty h grid");
  if (Q == 0) throw std::invalid_argument("rho_profile: Q must be positive");
  for (double h : h_grid)
    if (!(h > 0.0 && h < 2.0)) throw std::invalid_argument("rho_profile: h must lie in (0,2)");
  std::sort(h_grid.begin(), h_grid.end(), std::greater<>());

  CarlesonProfile p;
  p.h_grid = h_grid;
  p.samples = Q;
  p.xi_grid_size = xi_grid_size;
  p.r_b = r_b;
  if (xi_grid_size > 0 && 2.0 * M_PI / static_cast<double>(xi_grid_size) > h_grid.back()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "xi grid of %zu centers is coarser than h_min = %g; refined to spacing h/4",
                  xi_grid_size, h_grid.back());
    p.warnings.emplace_back(buf);
  }

  const BoundarySample bs(spec, Q, r_b);
  std::vector<double> gaps = bs.gap;
  std::sort(gaps.begin(), gaps.end());
  const double Qd = static_cast<double>(Q);
  for (double h : h_grid) {
    const std::size_t nc = detail::centers_for(h, xi_grid_size);
    p.centers.push_back(nc);
    p.rho_hat.push_back(static_cast<double>(detail::grid_max_count(bs, h, nc)) / Qd);
    p.rho_upper.push_back(static_cast<double>(detail::grid_max_count(bs, std::min(1.5 * h, 1.999), nc)) / Qd);
    const auto lvl = std::upper_bound(gaps.begin(), gaps.end(), h) - gaps.begin();
    p.level_hat.push_back(static_cast<double>(lvl) / Qd);
  }
  // monotone envelope: non-decreasing in h
  for (std::size_t i = h_grid.size() - 1; i-- > 0;) {
    p.rho_hat[i] = std::max(p.rho_hat[i], p.rho_hat[i + 1]);
    p.rho_upper[i] = std::max(p.rho_upper[i], p.rho_upper[i + 1]);
  }
  return p;
}

struct CarlesonOrder {
  bool degenerate = true;
  double alpha = 0.0;
  double goodness = 0.0;
  std::size_t points = 0;
};

// Slope of log rho_hat against log h over grid points h <= h_max holding at
// least `min_count` boundary samples.
inline constexpr double kCarlesonFitMaxH = 0.25;

inline CarlesonOrder carleson_order_fit(const std::vector<double>& h, const std::vector<double>& rho,
                                        double min_fraction, double h_max = kCarlesonFitMaxH) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] <= h_max && rho[i] > 0.0 && rho[i] >= min_fraction) {
      x.push_back(std::log(h[i]));
      y.push_back(std::log(rho[i]));
    }
  CarlesonOrder out;
  out.points = x.size();
  if (x.size() < 4) return out;
  const auto f = fit_line(x, y);
  out.degenerate = false;
  out.alpha = f.slope;
  out.goodness = f.r2;
  return out;
}

inline CarlesonOrder carleson_order_fit(const CarlesonProfile& p, std::size_t min_count = 16,
                                        double h_max = kCarlesonFitMaxH) {
  const double frac = p.samples ? static_cast<double>(min_count) / static_cast<double>(p.samples) : 0.0;
  return carleson_order_fit(p.h_grid, p.rho_hat, frac, h_max);
}

inline void write_profile_csv(std::ostream& os, const CarlesonProfile& p) {
  os << "h,rho_hat,level_hat,Q,xi_grid_size,r_b\n";
  char buf[256];
  for (std::size_t i = 0; i < p.h_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu,%zu,%.17g\n", p.h_grid[i], p.rho_hat[i], p.level_hat[i],
                  p.samples, p.centers[i], p.r_b);
    os << buf;
  }
}

}  // namespace compop

#endif
