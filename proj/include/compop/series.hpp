#ifndef COMPOP_SERIES_HPP
#define COMPOP_SERIES_HPP

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace compop {

using cplx = std::complex<double>;

// Thrown when a symbol is evaluated at (or numerically on) a singularity.
class SingularEvaluation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct PowerSeries {
  std::vector<cplx> coeffs;  // c_0 .. c_K
  double alias_error = 0.0;

  PowerSeries() : coeffs(1, cplx(0.0)) {}
  explicit PowerSeries(std::vector<cplx> c, double err = 0.0)
      : coeffs(std::move(c)), alias_error(err) {
    if (coeffs.empty()) throw std::invalid_argument("PowerSeries: empty coefficient vector");
    if (!(err >= 0.0) || !std::isfinite(err))
      throw std::invalid_argument("PowerSeries: alias_error must be finite and >= 0");
  }

  std::size_t truncation_order() const { return coeffs.size() - 1; }
  cplx operator[](std::size_t k) const { return k < coeffs.size() ? coeffs[k] : cplx(0.0); }

  static PowerSeries monomial(std::size_t n, cplx c, std::size_t K) {
    std::vector<cplx> v(K + 1, cplx(0.0));
    if (n <= K) v[n] = c;
    return PowerSeries(std::move(v));
  }
  static PowerSeries constant(cplx c, std::size_t K) { return monomial(0, c, K); }
};

struct SpaceParam {
  double gamma = -1.0;  // -1 is H^2

  SpaceParam() = default;
  explicit SpaceParam(double g) : gamma(g) {
    if (!(g >= -1.0) || !std::isfinite(g))
      throw std::invalid_argument("SpaceParam: gamma must be >= -1");
  }
  static SpaceParam hardy() { return SpaceParam(-1.0); }
  static SpaceParam bergman(double g) { return SpaceParam(g); }
  bool is_hardy() const { return gamma == -1.0; }
};

struct SamplingPlan {
  double radius;
  std::size_t samples;
};

// r = exp(-8/K), M = 8(K+1) rounded up to a power of two.
inline SamplingPlan default_sampling(std::size_t K) {
  const double k = static_cast<double>(K == 0 ? 1 : K);
  return {std::exp(-8.0 / k), std::bit_ceil(8 * (K + 1))};
}

inline double alias_bound(double r, std::size_t M) {
  const double rM = std::pow(r, static_cast<double>(M));
  return rM / (1.0 - rM);
}

namespace detail {

inline void check_plan(std::size_t K, double r, std::size_t M) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("sampling radius must lie in (0,1)");
  if (M <= K) throw std::invalid_argument("sample count M must exceed the order K");
}

inline std::vector<cplx> circle_points(double r, std::size_t M) {
  std::vector<cplx> z(M);
  const double step = 2.0 * M_PI / static_cast<double>(M);
  for (std::size_t m = 0; m < M; ++m) z[m] = std::polar(r, step * static_cast<double>(m));
  return z;
}

// Coefficients 0..K from samples on the circle of radius r.
inline std::vector<cplx> samples_to_coeffs(const std::vector<cplx>& vals, double r, std::size_t K,
                                           Eigen::FFT<double>& fft) {
  std::vector<cplx> out;
  fft.fwd(out, vals);
  const double M = static_cast<double>(vals.size());
  const double logr = std::log(r);
  std::vector<cplx> c(K + 1);
  for (std::size_t k = 0; k <= K; ++k) c[k] = out[k] * (std::exp(-logr * static_cast<double>(k)) / M);
  return c;
}

inline std::vector<cplx> convolve_truncated(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                            std::size_t K) {
  std::vector<cplx> c(K + 1, cplx(0.0));
  const std::size_t na = std::min(a.size(), K + 1);
  if (na * std::min(b.size(), K + 1) <= 1u << 16) {
    for (std::size_t i = 0; i < na; ++i) {
      if (a[i] == cplx(0.0)) continue;
      const std::size_t nb = std::min(b.size(), K + 1 - i);
      for (std::size_t j = 0; j < nb; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
  }
  const std::size_t L = std::bit_ceil(2 * (K + 1));
  std::vector<cplx> pa(L, cplx(0.0)), pb(L, cplx(0.0)), fa, fb, prod;
  std::copy_n(a.begin(), na, pa.begin());
  std::copy_n(b.begin(), std::min(b.size(), K + 1), pb.begin());
  Eigen::FFT<double> fft;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (std::size_t i = 0; i < L; ++i) fa[i] *= fb[i];
  fft.inv(prod, fa);
  std::copy_n(prod.begin(), K + 1, c.begin());
  return c;
}

inline double l1(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::abs(v);
  return s;
}

}  // namespace detail

template <class F>
PowerSeries extract_coefficients(F&& f, std::size_t K, double r, std::size_t M) {
  detail::check_plan(K, r, M);
  const auto z = detail::circle_points(r, M);
  std::vector<cplx> vals(M);
  for (std::size_t m = 0; m < M; ++m) {
    vals[m] = f(z[m]);
    if (!std::isfinite(vals[m].real()) || !std::isfinite(vals[m].imag()))
      throw SingularEvaluation("extract_coefficients: non-finite sample at z = (" +
                               std::to_string(z[m].real()) + ", " + std::to_string(z[m].imag()) + ")");
  }
  Eigen::FFT<double> fft;
  return PowerSeries(detail::samples_to_coeffs(vals, r, K, fft), alias_bound(r, M));
}

template <class F>
PowerSeries extract_coefficients(F&& f, std::size_t K) {
  const auto plan = default_sampling(K);
  return extract_coefficients(std::forward<F>(f), K, plan.radius, plan.samples);
}

inline PowerSeries series_mul(const PowerSeries& a, const PowerSeries& b, std::size_t K) {
  auto c = detail::convolve_truncated(a.coeffs, b.coeffs, K);
  const double err = a.alias_error * (K + 1) * (detail::l1(b.coeffs) + b.alias_error * (K + 1)) +
                     b.alias_error * (K + 1) * detail::l1(a.coeffs);
  return PowerSeries(std::move(c), std::isfinite(err) ? err : 0.0);
}

// p(z)^k truncated at degree K, by binary powering of truncated products.
inline PowerSeries series_pow(const PowerSeries& p, std::size_t k, std::size_t K) {
  std::vector<cplx> result(K + 1, cplx(0.0));
  result[0] = 1.0;
  std::vector<cplx> base(p.coeffs.begin(), p.coeffs.begin() + std::min(p.coeffs.size(), K + 1));
  std::size_t e = k;
  while (e > 0) {
    if (e & 1u) result = detail::convolve_truncated(result, base, K);
    e >>= 1u;
    if (e > 0) base = detail::convolve_truncated(base, base, K);
  }
  for (const auto& v : result)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::overflow_error("series_pow: coefficient overflow");

  double err = 0.0;
  if (p.alias_error > 0.0 && k > 0) {
    // (A + D)^k - A^k with A = ||p||_1 and D the l1 size of the coefficient error.
    const double A = detail::l1(p.coeffs);
    const double D = p.alias_error * static_cast<double>(K + 1);
    const double kk = static_cast<double>(k);
    err = A > 0.0 ? std::pow(A, kk) * std::expm1(kk * std::log1p(D / A)) : std::pow(D, kk);
    if (!std::isfinite(err)) throw std::overflow_error("series_pow: error bound overflow");
  }
  return PowerSeries(std::move(result), err);
}

inline double weighted_norm(const PowerSeries& p, const SpaceParam& space = SpaceParam()) {
  const double w = space.gamma + 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
    const double a = std::norm(p.coeffs[k]);
    s += w == 0.0 ? a : a * std::pow(static_cast<double>(k + 1), -w);
  }
  return std::sqrt(s);
}

}  // namespace compop

#endif
