#ifndef COMPOP_SPECTRA_HPP
#define COMPOP_SPECTRA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SVD>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/minima.hpp>

#include "compop/boundary_measure.hpp"
#include "compop/fit.hpp"
#include "compop/operator_build.hpp"

namespace compop {

enum class Semantics { lower_bound_of_a_n, exact, synthetic };

inline const char* to_string(Semantics s) {
  switch (s) {
    case Semantics::lower_bound_of_a_n: return "lower_bound_of_a_n";
    case Semantics::exact: return "exact";
    default: return "synthetic";
  }
}

struct SingularSpectrum {
  std::vector<double> values;  // s_1 >= s_2 >= ...
  std::size_t truncation = 0;
  Semantics semantics = Semantics::synthetic;

  SingularSpectrum() = default;
  SingularSpectrum(std::vector<double> v, std::size_t K, Semantics sem)
      : values(std::move(v)), truncation(K), semantics(sem) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0)) throw std::invalid_argument("SingularSpectrum: values must be >= 0");
      if (i > 0 && values[i] > values[i - 1]) throw std::invalid_argument("SingularSpectrum: values must be non-increasing");
    }
  }
  static SingularSpectrum synthetic(std::vector<double> v) {
    const std::size_t n = v.size();
    return SingularSpectrum(std::move(v), n, Semantics::synthetic);
  }
  std::size_t size() const { return values.size(); }
  // 1-based access; zero past the end
  double at(std::size_t n) const { return n >= 1 && n <= values.size() ? values[n - 1] : 0.0; }
};

inline SingularSpectrum singular_values(const OperatorMatrix& m, std::size_t n_max) {
  const auto K = static_cast<std::size_t>(std::min(m.entries.rows(), m.entries.cols()));
  if (n_max > K) throw std::invalid_argument("singular_values: n_max exceeds the truncation");
  double amax = 0.0, imax = 0.0;
  for (Eigen::Index i = 0; i < m.entries.size(); ++i) {
    amax = std::max(amax, std::abs(m.entries.data()[i]));
    imax = std::max(imax, std::abs(m.entries.data()[i].imag()));
  }
  Eigen::VectorXd sv;
  bool ok = true;
  if (imax <= 1e-13 * amax) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m.entries.real());
    ok = svd.info() == Eigen::Success;
    sv = svd.singularValues();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m.entries);
    ok = svd.info() == Eigen::Success;
    sv = svd.singularValues();
  }
  if (!ok || !sv.allFinite()) {
    std::ostringstream os;
    os << "singular_values: SVD did not converge (size " << m.entries.rows() << "x" << m.entries.cols()
       << ", max |entry| " << amax << ", Frobenius norm " << m.entries.norm() << ")";
    throw std::runtime_error(os.str());
  }
  std::vector<double> v(sv.data(), sv.data() + n_max);
  std::sort(v.begin(), v.end(), std::greater<>());
  return SingularSpectrum(std::move(v), m.truncation, Semantics::lower_bound_of_a_n);
}

// First n_max values of the non-increasing rearrangement of all products.
inline SingularSpectrum tensor_merge(const std::vector<SingularSpectrum>& factors, std::size_t n_max) {
  if (factors.empty()) throw std::invalid_argument("tensor_merge: empty factor list");
  Semantics sem = Semantics::exact;
  for (const auto& f : factors) {
    if (f.values.empty()) return SingularSpectrum({}, 0, f.semantics);
    if (f.semantics == Semantics::synthetic) sem = Semantics::synthetic;
    else if (f.semantics == Semantics::lower_bound_of_a_n && sem == Semantics::exact) sem = Semantics::lower_bound_of_a_n;
  }
  using Idx = std::vector<std::size_t>;
  auto value = [&](const Idx& ix) {
    double v = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) v *= factors[i].values[ix[i]];
    return v;
  };
  auto cmp = [](const std::pair<double, Idx>& a, const std::pair<double, Idx>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  };
  std::priority_queue<std::pair<double, Idx>, std::vector<std::pair<double, Idx>>, decltype(cmp)> heap(cmp);
  std::set<Idx> seen;
  Idx start(factors.size(), 0);
  heap.emplace(value(start), start);
  seen.insert(start);
  std::vector<double> out;
  while (out.size() < n_max && !heap.empty()) {
    auto [v, ix] = heap.top();
    heap.pop();
    out.push_back(v);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (ix[i] + 1 >= factors[i].values.size()) continue;
      Idx nx = ix;
      ++nx[i];
      if (seen.insert(nx).second) heap.emplace(value(nx), nx);
    }
  }
  std::size_t trunc = 1;
  for (const auto& f : factors) trunc *= std::max<std::size_t>(f.truncation, 1);
  return SingularSpectrum(std::move(out), trunc, sem);
}

// Number of pairs (j,k) with s_j t_k > exp(-c n).
inline std::size_t nu_count(const SingularSpectrum& s, const SingularSpectrum& t, double c, double n) {
  if (s.at(1) > 1.0 + 1e-12 || t.at(1) > 1.0 + 1e-12)
    throw std::invalid_argument("nu_count: requires s_1, t_1 <= 1");
  const double thr = -c * n;
  std::vector<double> lt(t.values.size());
  for (std::size_t k = 0; k < lt.size(); ++k) lt[k] = t.values[k] > 0.0 ? std::log(t.values[k]) : -INFINITY;
  std::size_t count = 0;
  for (double sj : s.values) {
    if (!(sj > 0.0)) break;
    const double need = thr - std::log(sj);  // log t_k > need
    if (need >= 0.0) break;
    count += static_cast<std::size_t>(
        std::partition_point(lt.begin(), lt.end(), [need](double v) { return v > need; }) - lt.begin());
  }
  return count;
}

// s_j = exp(-c ceil(j^{1/A})), j = 1..length
inline SingularSpectrum extremal_sequence(double A, double c, std::size_t length) {
  std::vector<double> v(length);
  for (std::size_t j = 1; j <= length; ++j)
    v[j - 1] = std::exp(-c * std::ceil(std::pow(static_cast<double>(j), 1.0 / A) - 1e-12));
  return SingularSpectrum::synthetic(std::move(v));
}

struct FindMResult {
  std::size_t M = 0;
  double beta_limit = 0.0;  // lim S(n)/n^{A+B} = B(A+1, B)
  double max_ratio = 0.0;   // max over n <= n_max of (S(n)+1)/n^{A+B}
  double tail_ratio = 0.0;  // (S(n_max)+1)/n_max^{A+B}
  bool certified = false;   // M exceeds the limit, so the bound persists beyond n_max
};

// S(n) = sum_{l=1}^n (n-l+1)^A l^{B-1}
inline double lemma_sum(double A, double B, std::size_t n) {
  double s = 0.0;
  for (std::size_t l = 1; l <= n; ++l)
    s += std::pow(static_cast<double>(n - l + 1), A) * std::pow(static_cast<double>(l), B - 1.0);
  return s;
}

inline FindMResult find_M(double A, double B, std::size_t n_max) {
  if (!(A > 0.0 && B > 0.0)) throw std::invalid_argument("find_M: A and B must be > 0");
  if (n_max < 1) throw std::invalid_argument("find_M: n_max must be >= 1");
  FindMResult r;
  double need = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double ratio = (lemma_sum(A, B, n) + 1.0) / std::pow(static_cast<double>(n), A + B);
    need = std::max(need, ratio);
    if (n == n_max) r.tail_ratio = ratio;
  }
  r.max_ratio = need;
  r.M = static_cast<std::size_t>(std::ceil(need - 1e-12));
  r.beta_limit = boost::math::beta(A + 1.0, B);
  r.certified = static_cast<double>(r.M) > r.beta_limit;
  return r;
}

// Exact count bound for the extremal sequences: blocks of equal value.
inline double lemma_block_bound(double A, double B, std::size_t n) {
  double e = 0.0;
  for (std::size_t l = 1; l <= n; ++l) {
    const double jl = std::floor(std::pow(static_cast<double>(n - l + 1), A) + 1e-9);
    const double kl = std::floor(std::pow(static_cast<double>(l), B) + 1e-9) -
                      std::floor(std::pow(static_cast<double>(l - 1), B) + 1e-9);
    e += jl * kl;
  }
  return e;
}

// ---- upper-bound functionals ----

inline double upper_bound_plain(const std::vector<double>& h, const std::vector<double>& rho, double n) {
  if (h.empty() || h.size() != rho.size()) throw std::invalid_argument("upper_bound_plain: empty grid");
  double best = INFINITY;
  for (std::size_t i = 0; i < h.size(); ++i) best = std::min(best, std::exp(-n * h[i]) + std::sqrt(rho[i] / h[i]));
  return best;
}

inline double upper_bound_plain(const CarlesonProfile& p, double n) { return upper_bound_plain(p.h_grid, p.rho_hat, n); }

inline double upper_bound_weighted(const std::vector<double>& h, const std::vector<double>& rho, double n,
                                   double gamma) {
  if (h.empty() || h.size() != rho.size()) throw std::invalid_argument("upper_bound_weighted: empty grid");
  std::vector<std::size_t> order(h.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
  const double pre = std::pow(n + 1.0, 0.5 * (gamma + 1.0));
  double sup = 0.0, best = INFINITY;
  for (std::size_t i : order) {
    sup = std::max(sup, std::sqrt(rho[i] / std::pow(h[i], 2.0 + gamma)));
    best = std::min(best, pre * std::exp(-n * h[i]) + sup);
  }
  return best;
}

inline double upper_bound_weighted(const CarlesonProfile& p, double n, double gamma) {
  return upper_bound_weighted(p.h_grid, p.rho_hat, n, gamma);
}

// eps_n = n^{-kappa}; delta(h) = exp(-h^{-(1-kappa)/kappa}) so that delta(eps_n) = exp(-n eps_n).
struct Schedule {
  enum class Kind { epsilon_n, delta_h };
  Kind kind = Kind::epsilon_n;
  double kappa = 0.5;

  Schedule(Kind k, double kap) : kind(k), kappa(kap) {
    if (!(kap > 0.0 && kap <= 1.0)) throw std::invalid_argument("Schedule: kappa must lie in (0,1]");
  }
  static Schedule polydisk(std::size_t N) {
    if (N < 2) throw std::invalid_argument("Schedule::polydisk: N must be >= 2");
    return Schedule(Kind::epsilon_n, 1.0 / (4.0 * static_cast<double>(N) - 7.0));
  }
  double epsilon(double n) const { return std::pow(n, -kappa); }
  double delta(double h) const { return std::exp(-std::pow(h, -(1.0 - kappa) / kappa)); }
  double rho(double h) const { return h * delta(h) * delta(h); }
  // a_n = exp(-n eps_n)
  double decay(double n) const { return std::exp(-n * epsilon(n)); }
  SingularSpectrum spectrum(std::size_t length) const {
    std::vector<double> v(length);
    for (std::size_t n = 1; n <= length; ++n) v[n - 1] = decay(static_cast<double>(n));
    return SingularSpectrum::synthetic(std::move(v));
  }
};

inline double upper_bound_plain(const Schedule& s, double n) {
  std::vector<double> h, rho;
  for (int i = 0; i <= 800; ++i) h.push_back(std::pow(10.0, -8.0 + 8.0 * i / 800.0) * 0.999);
  h.push_back(s.epsilon(n));
  for (double x : h) rho.push_back(s.rho(x));
  return upper_bound_plain(h, rho, n);
}

// ---- window statistics and fits ----

struct Window {
  std::size_t lo = 0;  // 1-based inclusive
  std::size_t hi = 0;
};

inline Window trailing_half(std::size_t n) { return {std::max<std::size_t>(1, n / 2), n}; }

struct BetaEstimate {
  std::size_t N = 1;
  double beta_minus_hat = 0.0;
  double beta_plus_hat = 0.0;
  Window window;
  bool degenerate = false;
};

inline BetaEstimate beta_estimate(const std::vector<double>& s, std::size_t N, Window w) {
  if (N == 0) throw std::invalid_argument("beta_estimate: N must be >= 1");
  if (w.lo < 1 || w.hi > s.size() || w.lo > w.hi) throw std::invalid_argument("beta_estimate: window out of range");
  BetaEstimate b;
  b.N = N;
  b.window = w;
  b.beta_minus_hat = INFINITY;
  b.beta_plus_hat = 0.0;
  for (std::size_t n = w.lo; n <= w.hi; ++n) {
    if (!(s[n - 1] > 0.0)) {
      b.degenerate = true;
      b.beta_minus_hat = b.beta_plus_hat = 0.0;
      return b;
    }
    const double v = std::exp(std::log(s[n - 1]) / std::pow(static_cast<double>(n), 1.0 / static_cast<double>(N)));
    b.beta_minus_hat = std::min(b.beta_minus_hat, std::min(v, 1.0));
    b.beta_plus_hat = std::max(b.beta_plus_hat, std::min(v, 1.0));
  }
  return b;
}

inline BetaEstimate beta_estimate(const SingularSpectrum& s, std::size_t N, Window w) {
  return beta_estimate(s.values, N, w);
}
inline BetaEstimate beta_estimate(const SingularSpectrum& s, std::size_t N) {
  return beta_estimate(s.values, N, trailing_half(s.size()));
}

// Largest sub-window [lo, m] of [lo, hi] with s_n > rel_floor * s_1 throughout.
inline Window resolved_window(const std::vector<double>& s, std::size_t lo, std::size_t hi, double rel_floor = 1e-13) {
  if (s.empty() || lo < 1) return {lo, lo - 1};
  hi = std::min(hi, s.size());
  const double floor = rel_floor * s[0];
  std::size_t m = lo - 1;
  while (m + 1 <= hi && s[m] > floor) ++m;
  return {lo, m};
}

enum class DecayModel { stretched_exp, poly, exp_linear };

inline const char* to_string(DecayModel m) {
  switch (m) {
    case DecayModel::stretched_exp: return "stretched_exp";
    case DecayModel::poly: return "poly";
    default: return "exp_linear";
  }
}

struct DecayFit {
  DecayModel model = DecayModel::stretched_exp;
  double C = 0.0;      // prefactor
  double c = 0.0;      // stretched_exp rate
  double alpha = 0.0;  // stretched_exp exponent
  double p = 0.0;      // poly exponent
  double a = 0.0;      // exp_linear rate
  double r2 = 0.0;
  Window range;
  bool valid = false;  // rate parameter non-negative
};

namespace detail {

inline LineFit fit_transformed(const std::vector<double>& s, Window w, const std::function<double(double)>& x_of) {
  std::vector<double> x, y;
  for (std::size_t n = w.lo; n <= w.hi; ++n) {
    x.push_back(x_of(static_cast<double>(n)));
    y.push_back(std::log(s[n - 1]));
  }
  return fit_line(x, y);
}

}  // namespace detail

inline DecayFit decay_fit(const std::vector<double>& s, DecayModel model, Window w) {
  if (w.lo < 1 || w.hi > s.size() || w.lo > w.hi) throw std::invalid_argument("decay_fit: range out of bounds");
  if (w.hi - w.lo + 1 < 6) throw std::invalid_argument("decay_fit: need at least 6 points");
  for (std::size_t n = w.lo; n <= w.hi; ++n)
    if (!(s[n - 1] > 0.0)) throw std::invalid_argument("decay_fit: values must be positive");
  DecayFit f;
  f.model = model;
  f.range = w;
  if (model == DecayModel::poly) {
    const auto l = detail::fit_transformed(s, w, [](double n) { return std::log(n); });
    f.p = -l.slope;
    f.C = std::exp(l.intercept);
    f.r2 = l.r2;
    f.valid = f.p >= 0.0;
  } else if (model == DecayModel::exp_linear) {
    const auto l = detail::fit_transformed(s, w, [](double n) { return n; });
    f.a = -l.slope;
    f.C = std::exp(l.intercept);
    f.r2 = l.r2;
    f.valid = f.a >= 0.0;
  } else {
    auto at = [&](double alpha) {
      return detail::fit_transformed(s, w, [alpha](double n) { return std::pow(n, alpha); });
    };
    double best_alpha = 0.05, best_r2 = -1.0;
    for (int i = 1; i <= 19; ++i) {
      const double alpha = 0.05 * i;
      const double r2 = at(alpha).r2;
      if (r2 > best_r2) {
        best_r2 = r2;
        best_alpha = alpha;
      }
    }
    const double lo = std::max(0.01, best_alpha - 0.05), hi = std::min(1.0, best_alpha + 0.05);
    const auto res = boost::math::tools::brent_find_minima([&](double a) { return -at(a).r2; }, lo, hi, 40);
    const double alpha = -res.second >= best_r2 ? res.first : best_alpha;
    const auto l = at(alpha);
    f.alpha = alpha;
    f.c = -l.slope;
    f.C = std::exp(l.intercept);
    f.r2 = l.r2;
    f.valid = f.c >= 0.0;
  }
  return f;
}

inline DecayFit decay_fit(const SingularSpectrum& s, DecayModel model, Window w) { return decay_fit(s.values, model, w); }

struct SanityReport {
  double min_log_ratio = 0.0;  // min over n of log(s_n)/n
  std::vector<std::pair<std::size_t, double>> tail_medians;  // (n, median of log(s_k)/k over [n/2, n])
  bool trend_nondecreasing = true;
  std::vector<std::string> warnings;
};

inline SanityReport lower_bound_sanity(const std::vector<double>& s, bool full_norm = false) {
  SanityReport r;
  r.min_log_ratio = INFINITY;
  std::vector<double> q(s.size());
  for (std::size_t n = 1; n <= s.size(); ++n) {
    if (!(s[n - 1] > 0.0)) throw std::invalid_argument("lower_bound_sanity: values must be positive");
    q[n - 1] = std::log(s[n - 1]) / static_cast<double>(n);
    r.min_log_ratio = std::min(r.min_log_ratio, q[n - 1]);
  }
  if (!std::isfinite(r.min_log_ratio)) r.warnings.emplace_back("log(s_n)/n unbounded below on the section");
  for (std::size_t n = 8; n <= s.size(); n *= 2) {
    std::vector<double> w(q.begin() + static_cast<std::ptrdiff_t>(n / 2 - 1), q.begin() + static_cast<std::ptrdiff_t>(n));
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), w.end());
    r.tail_medians.emplace_back(n, w[w.size() / 2]);
  }
  for (std::size_t i = 1; i < r.tail_medians.size(); ++i)
    if (r.tail_medians[i].second < r.tail_medians[i - 1].second - 1e-12) r.trend_nondecreasing = false;
  if (full_norm && !r.trend_nondecreasing)
    r.warnings.emplace_back("tail median of log(s_n)/n decreases on this section (finite-section effect)");
  return r;
}

enum class Membership { summable, not_summable, inconclusive };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::summable: return "summable";
    case Membership::not_summable: return "not_summable";
    default: return "inconclusive";
  }
}

// Dyadic blocks B_j = sum_{n in [2^j, 2^{j+1})} s_n^p over complete blocks; ratio test on the last three.
inline Membership schatten_membership(const std::vector<double>& s, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("schatten_membership: p must be > 0");
  std::vector<double> blocks;
  for (std::size_t a = 1; 2 * a - 1 <= s.size(); a *= 2) {
    double b = 0.0;
    for (std::size_t n = a; n < 2 * a; ++n) b += std::pow(s[n - 1], p);
    blocks.push_back(b);
  }
  if (blocks.size() < 4) return Membership::inconclusive;
  const std::size_t J = blocks.size();
  if (blocks[J - 1] == 0.0) return Membership::summable;
  double rmax = 0.0, rmin = INFINITY;
  for (std::size_t j = J - 3; j < J; ++j) {
    const double r = blocks[j - 1] > 0.0 ? blocks[j] / blocks[j - 1] : INFINITY;
    rmax = std::max(rmax, r);
    rmin = std::min(rmin, r);
  }
  if (rmax < 0.9) return Membership::summable;
  if (rmin >= 0.95) return Membership::not_summable;
  return Membership::inconclusive;
}

inline Membership schatten_membership(const SingularSpectrum& s, double p) { return schatten_membership(s.values, p); }

inline Membership schatten_membership(const Schedule& sch, double p) {
  return schatten_membership(sch.spectrum(std::size_t{1} << 20).values, p);
}

}  // namespace compop

#endif
