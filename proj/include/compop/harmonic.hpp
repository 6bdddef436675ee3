#ifndef COMPOP_HARMONIC_HPP
#define COMPOP_HARMONIC_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "compop/rng.hpp"

namespace compop {

using cplx = std::complex<double>;

// g(t) = pi^{1+p} / t^p, so g(pi) = pi; p = 1 is the default pi^2/t.
struct PowerLawG {
  double p = 1.0;

  double operator()(double t) const { return std::pow(M_PI, 1.0 + p) / std::pow(t, p); }
  // bound on |g'| over [lo, inf)
  double slope_bound(double lo) const { return p * std::pow(M_PI, 1.0 + p) / std::pow(lo, p + 1.0); }
  double inverse(double y) const { return std::pow(std::pow(M_PI, 1.0 + p) / y, 1.0 / p); }
};

struct RegionOmega {
  PowerLawG g;
  double alpha = 5.0 * M_PI;
  cplx base_point{M_PI, 3.0 * M_PI};
  double x_max = 1e4;

  bool contains(cplx z) const {
    const double x = z.real(), y = z.imag();
    if (!(x > 0.0)) return false;
    const double gx = g(x);
    return y > gx && y < gx + 4.0 * M_PI;
  }
  bool escaped(cplx z) const { return z.real() > x_max; }
  cplx project(cplx z) const {
    const double gx = g(z.real());
    return z.imag() - gx < gx + 4.0 * M_PI - z.imag() ? cplx(z.real(), gx) : cplx(z.real(), gx + 4.0 * M_PI);
  }
  double distance(cplx z) const;
};

// Conservative distance to the boundary of Omega.
// For any radius R, dist >= min(R, G / sqrt(1 + L(R)^2)) with G the smaller vertical gap
// and L(R) a slope bound for g on [x - R, x + R]; R is tuned by bisection.
namespace detail {

inline double omega_distance(const RegionOmega& region, cplx z) {
  if (!region.contains(z)) return 0.0;
  const double x = z.real(), y = z.imag();
  const double gx = region.g(x);
  const double G = std::min(y - gx, gx + 4.0 * M_PI - y);
  auto F = [&](double R) {
    if (R >= x) return 0.0;
    const double L = region.g.slope_bound(x - R);
    return G / std::sqrt(1.0 + L * L);
  };
  double lo = F(G), hi = G;  // F(lo) >= lo, F(hi) <= hi
  double best = lo;
  for (int i = 0; i < 6; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (F(mid) >= mid) {
      lo = mid;
      best = std::max(best, mid);
    } else {
      hi = mid;
      best = std::max(best, F(mid));
    }
  }
  return best;
}

}  // namespace detail

inline double distance_lower_bound(const RegionOmega& region, cplx z) {
  if (!region.contains(z)) throw std::domain_error("distance_lower_bound: point outside Omega");
  return detail::omega_distance(region, z);
}

inline double RegionOmega::distance(cplx z) const { return detail::omega_distance(*this, z); }

struct UnitDiskRegion {
  cplx base_point{0.0, 0.0};
  bool contains(cplx z) const { return std::abs(z) < 1.0; }
  bool escaped(cplx) const { return false; }
  double distance(cplx z) const { return std::max(0.0, 1.0 - std::abs(z)); }
  cplx project(cplx z) const { return std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0); }
};

struct UpperHalfPlaneRegion {
  cplx base_point{0.0, 1.0};
  double r_max = 1e8;
  bool contains(cplx z) const { return z.imag() > 0.0; }
  bool escaped(cplx z) const { return std::abs(z) > r_max; }
  double distance(cplx z) const { return std::max(0.0, z.imag()); }
  cplx project(cplx z) const { return {z.real(), 0.0}; }
};

struct HarmonicMeasureEstimate {
  double probability = 0.0;
  double ci_halfwidth = 0.0;  // 95% normal approximation
  std::size_t samples = 0;    // completed trajectories
  double eps_absorb = 0.0;
  std::uint64_t seed = 0;
  std::size_t capped = 0;
  std::size_t escaped = 0;
};

struct WosRun {
  std::vector<cplx> absorbed;  // nearest boundary point per completed trajectory
  std::size_t capped = 0;
  std::size_t escaped = 0;
  double eps_absorb = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kWosStepCap = 1000000;

template <class Region>
WosRun wos_sample(const Region& region, std::size_t samples, double eps_absorb, std::uint64_t seed,
                  std::size_t step_cap = kWosStepCap) {
  if (!(eps_absorb > 0.0)) throw std::invalid_argument("wos_sample: eps_absorb must be > 0");
  WosRun run;
  run.eps_absorb = eps_absorb;
  run.seed = seed;
  run.absorbed.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    std::mt19937_64 rng(stream_seed(seed, i));
    cplx p = region.base_point;
    bool done = false;
    for (std::size_t step = 0; step < step_cap; ++step) {
      if (region.escaped(p)) {
        ++run.escaped;
        run.absorbed.push_back(region.project(p));
        done = true;
        break;
      }
      const double d = region.distance(p);
      if (d < eps_absorb) {
        run.absorbed.push_back(region.project(p));
        done = true;
        break;
      }
      p += std::polar(d, 2.0 * M_PI * unit_uniform(rng));
    }
    if (!done) ++run.capped;
  }
  return run;
}

inline HarmonicMeasureEstimate estimate(const WosRun& run, const std::function<bool(cplx)>& target) {
  HarmonicMeasureEstimate e;
  e.samples = run.absorbed.size();
  e.eps_absorb = run.eps_absorb;
  e.seed = run.seed;
  e.capped = run.capped;
  e.escaped = run.escaped;
  if (e.samples == 0) return e;
  std::size_t hits = 0;
  for (const auto& z : run.absorbed)
    if (target(z)) ++hits;
  const double n = static_cast<double>(e.samples);
  e.probability = static_cast<double>(hits) / n;
  e.ci_halfwidth = 1.96 * std::sqrt(e.probability * (1.0 - e.probability) / n);
  return e;
}

template <class Region>
HarmonicMeasureEstimate wos_harmonic_measure(const Region& region, const std::function<bool(cplx)>& target,
                                             std::size_t samples, double eps_absorb, std::uint64_t seed) {
  return estimate(wos_sample(region, samples, eps_absorb, seed), target);
}

// Boundary set {w : e^{-Re w} > 1 - h}.
inline std::function<bool(cplx)> level_set_target(double h) {
  if (!(h > 0.0 && h <= 0.5)) throw std::invalid_argument("level_set_target: h must lie in (0, 1/2]");
  const double xcut = -std::log1p(-h);
  return [xcut](cplx w) { return w.real() < xcut; };
}

inline HarmonicMeasureEstimate level_set_tail(const WosRun& run, double h) { return estimate(run, level_set_target(h)); }

inline HarmonicMeasureEstimate level_set_tail(const RegionOmega& region, double h, std::size_t samples = 1000000,
                                              double eps_absorb = 1e-6, std::uint64_t seed = 1) {
  return wos_harmonic_measure(region, level_set_target(h), samples, eps_absorb, seed);
}

// Number of z in Omega with e^{-z} = w.
inline int covering_count(const RegionOmega& region, cplx w) {
  const double m = std::abs(w);
  if (!(m > 0.0 && m < 1.0)) throw std::domain_error("covering_count: requires 0 < |w| < 1");
  const double x = -std::log(m);
  double y0 = std::fmod(-std::arg(w), 2.0 * M_PI);
  if (y0 < 0.0) y0 += 2.0 * M_PI;
  const double lo = region.g(x), hi = lo + 4.0 * M_PI;
  int count = 0;
  for (double k = std::ceil((lo - y0) / (2.0 * M_PI)) - 1.0;; k += 1.0) {
    const double y = y0 + 2.0 * M_PI * k;
    if (y >= hi) break;
    if (y > lo) ++count;
  }
  return count;
}

}  // namespace compop

#endif
