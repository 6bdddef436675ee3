#ifndef COMPOP_OPERATOR_BUILD_HPP
#define COMPOP_OPERATOR_BUILD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "compop/fit.hpp"
#include "compop/series.hpp"
#include "compop/symbols.hpp"

namespace compop {

inline constexpr std::size_t kMaxTruncation = 4096;
inline constexpr std::size_t kMaxOracleSize = 3000;

struct ColumnWeights {
  double bergman_gamma = -1.0;    // factor (k+1)^{(gamma+1)/2} when gamma > -1
  std::size_t multiplicity_dim = 1;  // factor sqrt(C(k+N-1, N-1)) when N > 1
};

struct OperatorMatrix {
  Eigen::MatrixXcd entries;
  SpaceParam domain_space;
  SpaceParam codomain_space;
  ColumnWeights column_weights;
  std::optional<SymbolSpec> symbol;
  std::optional<PolySymbolSpec> poly;
  std::size_t truncation = 0;
  double alias_error = 0.0;
};

namespace detail {

// log of C(k+N-1, N-1)
inline double log_multiplicity(std::size_t k, std::size_t N) {
  if (N <= 1) return 0.0;
  const double kk = static_cast<double>(k), nn = static_cast<double>(N);
  return std::lgamma(kk + nn) - std::lgamma(kk + 1.0) - std::lgamma(nn);
}

inline bool is_exact_kind(const SymbolSpec& s) {
  if (s.is<kinds::Identity>() || s.is<kinds::Rotation>() || s.is<kinds::Scalar>()) return true;
  if (s.is<kinds::Explicit>()) return s.as<kinds::Explicit>().series.truncation_order() <= 8;
  if (s.is<kinds::Lens>()) return s.as<kinds::Lens>().theta == 1.0;
  return false;
}

inline PowerSeries exact_series(const SymbolSpec& s, std::size_t K) {
  if (s.is<kinds::Identity>()) return PowerSeries::monomial(1, 1.0, K);
  if (s.is<kinds::Lens>()) return PowerSeries::monomial(1, 1.0, K);
  if (s.is<kinds::Rotation>()) return PowerSeries::monomial(1, std::polar(1.0, s.as<kinds::Rotation>().alpha), K);
  if (s.is<kinds::Scalar>()) return PowerSeries::constant(s.as<kinds::Scalar>().c, K);
  const auto& c = s.as<kinds::Explicit>().series;
  std::vector<cplx> v(K + 1, cplx(0.0));
  for (std::size_t i = 0; i <= std::min(K, c.truncation_order()); ++i) v[i] = c.coeffs[i];
  return PowerSeries(std::move(v), c.alias_error);
}

}  // namespace detail

// Columns k = 0..K-1 hold the first K Taylor coefficients of phi^k.
inline OperatorMatrix build_matrix(const SymbolSpec& spec, std::size_t K, const SpaceParam& domain = SpaceParam()) {
  if (K == 0 || K > kMaxTruncation) throw std::invalid_argument("build_matrix: K must lie in [1, 4096]");
  OperatorMatrix m;
  m.entries = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  m.domain_space = domain;
  m.column_weights.bergman_gamma = domain.gamma;
  m.symbol = spec;
  m.truncation = K;
  const std::size_t deg = K - 1;

  if (detail::is_exact_kind(spec)) {
    const PowerSeries p = detail::exact_series(spec, deg);
    std::vector<cplx> col(K, cplx(0.0));
    col[0] = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (k > 0) col = detail::convolve_truncated(col, p.coeffs, deg);
      for (std::size_t j = 0; j < K; ++j) m.entries(j, k) = col[j];
    }
    m.alias_error = p.alias_error;
  } else {
    const SamplingPlan plan = default_sampling(deg);
    const auto z = detail::circle_points(plan.radius, plan.samples);
    std::vector<cplx> phi(plan.samples), pw(plan.samples, cplx(1.0));
    for (std::size_t i = 0; i < plan.samples; ++i) phi[i] = eval(spec, z[i]);
    Eigen::FFT<double> fft;
    m.entries(0, 0) = 1.0;
    for (std::size_t k = 1; k < K; ++k) {
      for (std::size_t i = 0; i < plan.samples; ++i) pw[i] *= phi[i];
      const auto c = detail::samples_to_coeffs(pw, plan.radius, deg, fft);
      for (std::size_t j = 0; j < K; ++j) m.entries(j, k) = c[j];
    }
    m.alias_error = alias_bound(plan.radius, plan.samples);
  }

  if (domain.gamma > -1.0) {
    const double e = 0.5 * (domain.gamma + 1.0);
    for (std::size_t k = 0; k < K; ++k) m.entries.col(k) *= std::pow(static_cast<double>(k + 1), e);
  }
  for (Eigen::Index i = 0; i < m.entries.size(); ++i) {
    const cplx v = m.entries.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw std::runtime_error("build_matrix: non-finite entry");
  }
  return m;
}

inline OperatorMatrix build_diagonal_polydisk_matrix(const SymbolSpec& spec, std::size_t N, std::size_t K) {
  if (N == 0) throw std::invalid_argument("build_diagonal_polydisk_matrix: N must be >= 1");
  OperatorMatrix m = build_matrix(spec, K, SpaceParam::hardy());
  for (std::size_t k = 0; k < K; ++k) m.entries.col(k) *= std::exp(0.5 * detail::log_multiplicity(k, N));
  m.column_weights.multiplicity_dim = N;
  m.poly = PolySymbolSpec::diagonal(spec, N);
  return m;
}

enum class Truncation { total_degree, box };

// Enumerates multi-indices of length N with |alpha| <= D (total degree) or max alpha_i <= D (box).
inline std::vector<std::vector<std::size_t>> multi_indices(std::size_t N, std::size_t D, Truncation mode) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> a(N, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == N) {
      out.push_back(a);
      return;
    }
    const std::size_t cap = mode == Truncation::total_degree ? D - used : D;
    for (std::size_t v = 0; v <= cap; ++v) {
      a[i] = v;
      rec(i + 1, mode == Truncation::total_degree ? used + v : 0);
    }
  };
  rec(0, 0);
  return out;
}

// Brute-force matrix of C_Phi on monomials z^alpha of H^2(D^N).
inline OperatorMatrix multi_index_oracle(const PolySymbolSpec& poly, std::size_t D,
                                         Truncation mode = Truncation::total_degree) {
  const std::size_t N = poly.dimension;
  double size = 1.0;
  if (mode == Truncation::box) {
    size = std::pow(static_cast<double>(D + 1), static_cast<double>(N));
  } else {
    size = std::exp(std::lgamma(static_cast<double>(D + N + 1)) - std::lgamma(static_cast<double>(D + 1)) -
                    std::lgamma(static_cast<double>(N + 1)));
  }
  if (size > static_cast<double>(kMaxOracleSize) + 0.5)
    throw std::invalid_argument("multi_index_oracle: basis larger than 3000");

  // powers[j][p] = series of map_j^p truncated at D
  std::vector<std::vector<PowerSeries>> powers(N);
  for (std::size_t j = 0; j < N; ++j) {
    const auto& map = poly.coords[j].map;
    const PowerSeries base = detail::is_exact_kind(map)
                                 ? detail::exact_series(map, D)
                                 : extract_coefficients([&](cplx z) { return eval(map, z); }, D, 0.5, 256);
    powers[j].push_back(PowerSeries::constant(1.0, D));
    for (std::size_t p = 1; p <= D; ++p) powers[j].push_back(series_mul(powers[j].back(), base, D));
  }

  const auto idx = multi_indices(N, D, mode);
  const auto P = static_cast<Eigen::Index>(idx.size());
  OperatorMatrix m;
  m.entries = Eigen::MatrixXcd::Zero(P, P);
  m.poly = poly;
  m.truncation = D;
  for (Eigen::Index c = 0; c < P; ++c) {
    const auto& alpha = idx[static_cast<std::size_t>(c)];
    std::vector<PowerSeries> per_var(N, PowerSeries::constant(1.0, D));
    for (std::size_t j = 0; j < N; ++j) {
      if (alpha[j] == 0) continue;
      const std::size_t src = poly.coords[j].source - 1;
      per_var[src] = series_mul(per_var[src], powers[j][alpha[j]], D);
    }
    for (Eigen::Index r = 0; r < P; ++r) {
      const auto& beta = idx[static_cast<std::size_t>(r)];
      cplx v = 1.0;
      for (std::size_t i = 0; i < N && v != cplx(0.0); ++i) v *= per_var[i].coeffs[beta[i]];
      m.entries(r, c) = v;
    }
  }
  return m;
}

enum class Trend { converging, diverging, inconclusive };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::converging: return "converging";
    case Trend::diverging: return "diverging";
    default: return "inconclusive";
  }
}

struct HsResult {
  double partial = 0.0;
  Trend trend = Trend::inconclusive;
  std::vector<double> block_sums;  // block j sums ||phi^k||^2 over k in [2^j, 2^{j+1}) capped at K+1
  double block_exponent = 0.0;     // fitted q in block_j ~ j^{-q} over the trailing half
  std::size_t K = 0;
};

namespace detail {

// Sum over k in [a, b) of e^{-u k}.
inline double geometric_block(double u, double a, double b) {
  if (u <= 0.0) return b - a;
  return std::exp(-u * a) * (-std::expm1(-u * (b - a))) / (-std::expm1(-u));
}

inline std::vector<double> contact_points(const std::function<double(double)>& defect) {
  constexpr std::size_t G = 1u << 14;
  std::vector<double> t(G), d(G);
  double dmax = 0.0;
  for (std::size_t i = 0; i < G; ++i) {
    t[i] = -M_PI + 2.0 * M_PI * static_cast<double>(i) / G;
    d[i] = defect(t[i]);
    dmax = std::max(dmax, d[i]);
  }
  std::vector<double> out;
  if (dmax < 1e-6) return out;
  for (std::size_t i = 0; i < G; ++i) {
    const double l = d[(i + G - 1) % G], r = d[(i + 1) % G];
    if (d[i] < 0.05 && d[i] < l && d[i] <= r) {
      const double lo = t[i] - 2.0 * M_PI / G, hi = t[i] + 2.0 * M_PI / G;
      const auto res = boost::math::tools::brent_find_minima(defect, lo, hi, 52);
      double c = res.first;
      if (c < -M_PI) c += 2.0 * M_PI;
      if (c >= M_PI) c -= 2.0 * M_PI;
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// sum_{k <= K} ||phi^k||^2 via boundary integrals of |phi*|^{2k}, block by block.
inline HsResult hs_norm_sq(const SymbolSpec& spec, std::size_t K, double r_b = 1.0 - 1e-12) {
  if (K < 64) throw std::invalid_argument("hs_norm_sq: K must be >= 64");
  auto defect = [&](double t) { return contact_defect(spec, std::polar(r_b, t)); };
  auto u_of = [&](double t) {
    const double d = defect(t);
    return d >= 1.0 ? 745.0 : -std::log1p(-d);
  };

  HsResult res;
  res.K = K;
  const auto contacts = detail::contact_points(defect);
  std::vector<std::pair<double, double>> pieces;
  if (contacts.empty()) {
    pieces.emplace_back(-M_PI, M_PI);
  } else {
    for (std::size_t i = 0; i < contacts.size(); ++i) {
      const double a = contacts[i];
      const double b = i + 1 < contacts.size() ? contacts[i + 1] : contacts[0] + 2.0 * M_PI;
      pieces.emplace_back(a, b);
    }
  }

  boost::math::quadrature::tanh_sinh<double> integrator(12);
  const double full_contact_u = contacts.empty() ? u_of(0.0) : 0.0;
  const bool flat = contacts.empty() && defect(0.0) < 1e-6;
  res.partial = 1.0;
  for (std::size_t j = 0;; ++j) {
    const double a = std::ldexp(1.0, static_cast<int>(j));
    if (a > static_cast<double>(K)) break;
    const double b = std::min(std::ldexp(1.0, static_cast<int>(j + 1)), static_cast<double>(K) + 1.0);
    double sum = 0.0;
    if (flat) {
      sum = detail::geometric_block(full_contact_u, a, b);
    } else {
      for (const auto& [lo, hi] : pieces) {
        auto f = [&](double x, double xc) {
          const double t = xc < 0.0 ? lo - xc : hi - xc;
          (void)x;
          return detail::geometric_block(u_of(t), a, b);
        };
        sum += integrator.integrate(f, lo, hi, 1e-10);
      }
      sum /= 2.0 * M_PI;
    }
    res.block_sums.push_back(sum);
    res.partial += sum;
  }

  // classify on complete blocks only
  std::vector<double> bs = res.block_sums;
  if (static_cast<double>(K) + 1.0 < std::ldexp(1.0, static_cast<int>(bs.size()))) bs.pop_back();
  const std::size_t J = bs.size();
  if (bs.back() < 1e-14 * res.partial) {
    res.trend = Trend::converging;
    return res;
  }
  std::vector<double> x, y;
  for (std::size_t j = std::max<std::size_t>(1, J / 2); j < J; ++j) {
    if (bs[j] <= 0.0) continue;
    x.push_back(std::log(static_cast<double>(j)));
    y.push_back(std::log(bs[j]));
  }
  if (x.size() >= 2) {
    res.block_exponent = -fit_line(x, y).slope;
    if (res.block_exponent > 1.1) res.trend = Trend::converging;
    else if (res.block_exponent < 0.9) res.trend = Trend::diverging;
  }
  return res;
}

// ||C_Phi^* K_a|| / ||K_a|| = sqrt(prod (1-|a_i|^2) / prod (1-|phi_j(a_{s_j})|^2)).
inline double kernel_ratio(const PolySymbolSpec& poly, const KernelPoint& point) {
  if (point.a.size() != poly.dimension) throw std::invalid_argument("kernel_ratio: point dimension mismatch");
  double logr = 0.0;
  for (const auto& a : point.a) {
    const double m = std::abs(a);
    if (m >= 1.0 - 1e-12) throw std::domain_error("kernel_ratio: |a_j| too close to 1");
    logr += std::log1p(-m) + std::log1p(m);
  }
  for (const auto& pc : poly.coords) {
    const double d = contact_defect(pc.map, point.a[pc.source - 1]);
    if (!(d > 0.0)) throw SingularEvaluation("kernel_ratio: image on the unit circle");
    logr -= std::log(d);
  }
  return std::exp(0.5 * logr);
}

struct WitnessNorms {
  double norm_f;
  double norm_Cf;
};

// f_n = ((z1 + z2)/2)^n under Phi(z) = (z1, ..., z1).
inline WitnessNorms unboundedness_witness(std::size_t n) {
  if (n < 1 || n > 1000000) throw std::invalid_argument("unboundedness_witness: n must lie in [1, 1e6]");
  const double nn = static_cast<double>(n);
  const double log_sq = std::lgamma(2.0 * nn + 1.0) - 2.0 * std::lgamma(nn + 1.0) - nn * std::log(4.0);
  return {std::exp(0.5 * log_sq), 1.0};
}

// Binary column-major (re, im) doubles after a one-line JSON header.
inline void write_matrix_binary(std::ostream& os, const OperatorMatrix& m) {
  nlohmann::json h;
  h["rows"] = m.entries.rows();
  h["cols"] = m.entries.cols();
  h["K"] = m.truncation;
  h["weights"] = {{"bergman_gamma", m.column_weights.bergman_gamma},
                  {"multiplicity_dim", m.column_weights.multiplicity_dim}};
  if (m.symbol) h["symbol"] = to_json(*m.symbol);
  if (m.poly) h["poly"] = to_json(*m.poly);
  h["layout"] = "column-major complex128";
  os << h.dump() << '\n';
  os.write(reinterpret_cast<const char*>(m.entries.data()),
           static_cast<std::streamsize>(m.entries.size() * sizeof(cplx)));
}

}  // namespace compop

#endif
