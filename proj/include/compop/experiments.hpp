#ifndef COMPOP_EXPERIMENTS_HPP
#define COMPOP_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/crc.hpp>
#include <nlohmann/json.hpp>

#include "compop/boundary_measure.hpp"
#include "compop/fit.hpp"
#include "compop/harmonic.hpp"
#include "compop/operator_build.hpp"
#include "compop/rng.hpp"
#include "compop/spectra.hpp"
#include "compop/symbols.hpp"

namespace compop {

inline constexpr const char* kVersion = "0.1.0";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}

  template <class... Ts>
  void add(const Ts&... vals) {
    if (sizeof...(Ts) != columns.size()) throw std::logic_error("Table::add: column count mismatch in " + name);
    rows.push_back({cell(vals)...});
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class T>
  static std::string cell(const T& v) {
    if constexpr (std::is_integral_v<T>)
      return std::to_string(v);
    else
      return format_double(static_cast<double>(v));
  }
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentConfig {
  std::string id;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  std::optional<std::size_t> K;
  std::optional<std::size_t> N;
  std::optional<std::size_t> samples;
  std::optional<double> theta;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["id"] = id;
    j["seed"] = seed;
    j["K"] = K ? nlohmann::json(*K) : nlohmann::json(nullptr);
    j["N"] = N ? nlohmann::json(*N) : nlohmann::json(nullptr);
    j["samples"] = samples ? nlohmann::json(*samples) : nlohmann::json(nullptr);
    j["theta"] = theta ? nlohmann::json(*theta) : nlohmann::json(nullptr);
    return j;
  }
};

struct ExperimentOutput {
  std::deque<Table> tables;  // stable references from table()
  std::vector<Assertion> assertions;
  nlohmann::json summary = nlohmann::json::object();

  Table& table(std::string name, std::vector<std::string> cols) {
    tables.emplace_back(std::move(name), std::move(cols));
    return tables.back();
  }
  void check(std::string name, bool pass, std::string detail = {}) {
    assertions.push_back({std::move(name), pass, std::move(detail)});
  }
};

enum class RunStatus { pass, assertion_failed, error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::pass: return "pass";
    case RunStatus::assertion_failed: return "assertion_failed";
    default: return "error";
  }
}

struct RunManifest {
  nlohmann::json config;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> checksums;  // file name -> crc32 hex
  RunStatus status = RunStatus::error;
  std::string error;
  std::vector<Assertion> assertions;
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config"] = config;
    j["version"] = version;
    j["wall_seconds"] = wall_seconds;
    j["tables"] = checksums;
    j["status"] = to_string(status);
    if (!error.empty()) j["error"] = error;
    auto& a = j["assertions"] = nlohmann::json::array();
    for (const auto& x : assertions) a.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    j["summary"] = summary;
    return j;
  }
};

inline std::string render_csv(const Table& t, const ExperimentConfig& cfg) {
  nlohmann::json head;
  head["experiment"] = cfg.id;
  head["seed"] = cfg.seed;
  head["table"] = t.name;
  head["config"] = cfg.to_json();
  head["columns"] = t.columns;
  std::string out = "# " + head.dump() + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
    out += "\n";
  }
  return out;
}

inline std::string crc32_hex(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / (count - 1));
  return v;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---- cusp-diagonal ----
inline void cusp_diagonal(const ExperimentConfig& cfg, ExperimentOutput& out) {
  const std::size_t K = cfg.K.value_or(1024);
  const std::size_t n_max = std::min<std::size_t>(300, K);
  std::vector<std::size_t> dims = cfg.N ? std::vector<std::size_t>{*cfg.N} : std::vector<std::size_t>{1, 2, 3};
  const auto cusp = SymbolSpec::cusp();

  std::vector<std::future<SingularSpectrum>> jobs;
  for (std::size_t N : dims)
    jobs.push_back(std::async(std::launch::async,
                              [&, N] { return singular_values(build_diagonal_polydisk_matrix(cusp, N, K), n_max); }));
  const auto profile = rho_profile(cusp, default_h_grid(), cfg.samples.value_or(kDefaultBoundarySamples));

  auto& prof = out.table("profile", {"h", "rho_hat", "rho_upper", "level_hat", "centers"});
  for (std::size_t i = 0; i < profile.h_grid.size(); ++i)
    prof.add(profile.h_grid[i], profile.rho_hat[i], profile.rho_upper[i], profile.level_hat[i], profile.centers[i]);

  auto& spec = out.table("spectra", {"N", "n", "s_n", "weighted_bound"});
  auto& fits = out.table("fits", {"N", "K", "n_lo", "n_hi", "alpha", "c", "C", "r2"});
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::size_t N = dims[i];
    const auto s = jobs[i].get();
    const double gamma = static_cast<double>(N) - 2.0;
    for (std::size_t n = 1; n <= s.size(); ++n)
      spec.add(N, n, s.at(n), upper_bound_weighted(profile, static_cast<double>(n), gamma));
    const Window w = resolved_window(s.values, 20, n_max);
    if (w.hi < w.lo + 5) {
      fits.add(N, K, w.lo, w.hi, 0.0, 0.0, 0.0, 0.0);
      if (N >= 2) out.check("cusp_fit_N" + std::to_string(N), false, "fewer than 6 resolved values in [20, 300]");
      continue;
    }
    const auto f = decay_fit(s, DecayModel::stretched_exp, w);
    fits.add(N, K, w.lo, w.hi, f.alpha, f.c, f.C, f.r2);
    if (N >= 2)
      out.check("cusp_fit_N" + std::to_string(N), f.c > 0.0 && f.alpha >= 0.45,
                "alpha=" + format_double(f.alpha) + " c=" + format_double(f.c));
  }
}

// ---- lens-trichotomy ----
inline void lens_trichotomy(const ExperimentConfig& cfg, ExperimentOutput& out) {
  const std::size_t N = cfg.N.value_or(2);
  if (N < 1) throw std::invalid_argument("lens-trichotomy: N must be >= 1");
  const double crit = 1.0 / static_cast<double>(N);
  std::vector<double> thetas;
  if (cfg.theta)
    thetas = {*cfg.theta};
  else
    thetas = {0.5 * crit, crit, std::min(1.0, 2.0 * crit)};

  auto& kr = out.table("kernel_ratio", {"theta", "j", "log_inv_gap", "ratio"});
  auto& sl = out.table("slopes", {"theta", "regime", "slope", "expected", "min_ratio", "median_ratio"});
  for (double th : thetas) {
    const auto poly = PolySymbolSpec::diagonal(SymbolSpec::lens(th), N);
    std::vector<double> x, y, ratios;
    for (int j = 1; j <= 30; ++j) {
      const double r = 1.0 - std::ldexp(1.0, -j);
      std::vector<cplx> a(N, cplx(0.0));
      a[0] = r;
      const double q = kernel_ratio(poly, KernelPoint(a));
      kr.add(th, j, j * std::log(2.0), q);
      ratios.push_back(q);
      if (j >= 10) {
        x.push_back(j * std::log(2.0));
        y.push_back(std::log(q));
      }
    }
    const double slope = fit_line(x, y).slope;
    const double expected = 0.5 * (static_cast<double>(N) * th - 1.0);
    const double med = median(ratios), mn = *std::min_element(ratios.begin(), ratios.end());
    const bool critical = std::abs(th - crit) < 1e-12;
    const char* regime = critical ? "bounded_noncompact" : th > crit ? "unbounded" : "compact";
    sl.add(th, regime, slope, expected, mn, med);
    if (critical)
      out.check("flat_band_theta_" + label(th), std::abs(slope) <= 0.02 && mn >= 0.5 * med,
                "slope=" + format_double(slope));
    else
      out.check("slope_theta_" + label(th), std::abs(slope - expected) <= 0.05,
                "slope=" + format_double(slope) + " expected=" + format_double(expected));
  }

  const std::size_t K = cfg.K.value_or(1024);
  auto& sp = out.table("compact_spectra", {"theta", "n", "s_n"});
  auto& ft = out.table("compact_fits", {"theta", "N", "K", "n_lo", "n_hi", "alpha", "c", "r2"});
  for (double th : thetas) {
    if (!(th < crit - 1e-12)) continue;
    const auto s = singular_values(build_diagonal_polydisk_matrix(SymbolSpec::lens(th), N, K), std::min<std::size_t>(300, K));
    for (std::size_t n = 1; n <= s.size(); ++n) sp.add(th, n, s.at(n));
    const Window w = resolved_window(s.values, 20, s.size());
    if (w.hi >= w.lo + 5) {
      const auto f = decay_fit(s, DecayModel::stretched_exp, w);
      ft.add(th, N, K, w.lo, w.hi, f.alpha, f.c, f.r2);
    } else {
      ft.add(th, N, K, w.lo, w.hi, 0.0, 0.0, 0.0);
    }
  }
}

// ---- tensor-lemma ----
struct LemmaPair {
  double A, B;
  std::string label;
};

inline std::vector<LemmaPair> lemma_pairs() {
  std::vector<LemmaPair> p = {{2.0, 1.0, "A2_B1"}, {1.5, 2.25, "A1.5_B2.25"}};
  for (std::size_t N = 4; N <= 6; ++N)
    p.push_back({2.0, static_cast<double>(N) - 2.0, "N" + std::to_string(N)});
  return p;
}

inline void tensor_lemma(const ExperimentConfig& cfg, ExperimentOutput& out) {
  constexpr std::size_t n_max = 30;
  constexpr double c = 1.0;
  auto& bt = out.table("lemma_bounds", {"pair", "A", "B", "M", "n", "nu", "block_bound", "lemma_sum", "index",
                                        "threshold", "pass"});
  auto& mt = out.table("find_M", {"pair", "A", "B", "M", "beta_limit", "max_ratio", "certified"});
  auto& dt = out.table("direct_merge", {"pair", "n", "index", "merged", "threshold", "pass"});
  for (const auto& pr : lemma_pairs()) {
    const auto fm = find_M(pr.A, pr.B, 1000);
    mt.add(pr.label, pr.A, pr.B, fm.M, fm.beta_limit, fm.max_ratio, fm.certified);
    // enough terms to hold everything above e^{-c n_max}
    const auto len_s = static_cast<std::size_t>(std::pow(static_cast<double>(n_max), pr.A)) + 2;
    const auto len_t = static_cast<std::size_t>(std::pow(static_cast<double>(n_max), pr.B)) + 2;
    const auto s = extremal_sequence(pr.A, c, len_s);
    const auto t = extremal_sequence(pr.B, c, len_t);
    bool all = true;
    for (std::size_t n = 1; n <= n_max; ++n) {
      const std::size_t nu = nu_count(s, t, c, static_cast<double>(n));
      const double idx = static_cast<double>(fm.M) * std::pow(static_cast<double>(n), pr.A + pr.B);
      const double E = lemma_block_bound(pr.A, pr.B, n);
      // merged[idx] <= e^{-cn} iff fewer than idx merged values exceed e^{-cn}
      const bool pass = static_cast<double>(nu) < std::floor(idx) && static_cast<double>(nu) <= E;
      all = all && pass;
      bt.add(pr.label, pr.A, pr.B, fm.M, n, nu, E, lemma_sum(pr.A, pr.B, n), std::floor(idx),
             std::exp(-c * static_cast<double>(n)), pass);
    }
    // direct heap merge for small n
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(fm.M) *
                                                           std::pow(static_cast<double>(n), pr.A + pr.B)));
      const auto merged = tensor_merge({s, t}, idx);
      const double thr = std::exp(-c * static_cast<double>(n));
      const bool pass = merged.at(idx) <= thr * (1.0 + 1e-12);
      all = all && pass;
      dt.add(pr.label, n, idx, merged.at(idx), thr, pass);
    }
    out.check("lemma_" + pr.label, all);
  }

  // matrix-derived spectra: supermultiplicativity of the merge
  const std::size_t K = cfg.K.value_or(512);
  auto normalized = [](SingularSpectrum sp) {
    const double s1 = sp.at(1);
    for (auto& v : sp.values) v /= s1;
    return sp;
  };
  const auto a = normalized(singular_values(build_matrix(SymbolSpec::dilation(0.5), 64), 40));
  const auto b = normalized(singular_values(build_matrix(SymbolSpec::lens(0.5), K), 40));
  const auto merged = tensor_merge({a, b}, 400);
  auto& st = out.table("supermultiplicativity", {"j", "k", "merged_jk", "s_j_t_k", "pass"});
  bool sm = true;
  for (std::size_t j = 1; j <= 20; ++j)
    for (std::size_t k = 1; k <= 20; ++k) {
      const double prod = a.at(j) * b.at(k);
      const bool pass = merged.at(j * k) >= prod;
      sm = sm && pass;
      st.add(j, k, merged.at(j * k), prod, pass);
    }
  out.check("supermultiplicativity", sm);
  auto& nt = out.table("matrix_nu", {"n", "nu", "merged_count_above"});
  bool nu_ok = true;
  const auto full = tensor_merge({a, b}, a.size() * b.size());
  for (std::size_t n = 1; n <= 10; ++n) {
    const double thr = std::exp(-static_cast<double>(n));
    const std::size_t nu = nu_count(a, b, 1.0, static_cast<double>(n));
    const auto cnt = static_cast<std::size_t>(std::count_if(full.values.begin(), full.values.end(),
                                                             [thr](double v) { return v > thr; }));
    nu_ok = nu_ok && nu == cnt;
    nt.add(n, nu, cnt);
  }
  out.check("nu_matches_merge", nu_ok);
}

// ---- spiral-harmonic ----
inline void spiral_harmonic(const ExperimentConfig& cfg, ExperimentOutput& out) {
  const std::size_t samples = cfg.samples.value_or(1000000);
  const double eps = 1e-6;
  RegionOmega omega;
  const auto run = wos_sample(omega, samples, eps, cfg.seed);
  out.summary["capped"] = run.capped;
  out.summary["escaped"] = run.escaped;

  auto& tt = out.table("tail", {"y_minus_alpha", "y", "probability", "ci_halfwidth", "samples", "seed"});
  std::vector<double> fx, fy;
  for (int d = -2; d <= 4; ++d) {
    const double y = omega.alpha + d;
    const auto e = estimate(run, [y](cplx z) { return z.imag() > y; });
    tt.add(d, y, e.probability, e.ci_halfwidth, e.samples, cfg.seed);
    if (d >= 1 && d <= 3 && e.probability > 0.0) {
      fx.push_back(y);
      fy.push_back(std::log(e.probability));
    }
  }
  if (fx.size() >= 2) {
    const double slope = fit_line(fx, fy).slope;
    out.summary["tail_slope"] = slope;
    out.check("tail_slope", slope <= -0.9, "slope=" + format_double(slope) + " points=" + std::to_string(fx.size()));
  } else {
    out.check("tail_slope", false, "fewer than two nonzero tail estimates in [alpha+1, alpha+3]");
  }

  auto& lt = out.table("level_set", {"h", "probability", "ci_halfwidth", "bound", "ratio"});
  const std::vector<double> hs = {0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.025};
  std::vector<double> p(hs.size()), bound(hs.size());
  double Chat = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const auto e = level_set_tail(run, hs[i]);
    p[i] = e.probability;
    bound[i] = std::exp(omega.alpha - omega.g(2.0 * hs[i]));
    Chat = std::max(Chat, p[i] / bound[i]);
    lt.add(hs[i], e.probability, e.ci_halfwidth, bound[i], p[i] / bound[i]);
  }
  bool kol = std::isfinite(Chat);
  bool vacuous = true;
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (hs[i] <= 0.1) {
      kol = kol && p[i] <= Chat * bound[i];
      vacuous = vacuous && p[i] == 0.0;
    }
  out.summary["C_hat"] = Chat;
  out.summary["level_set_all_zero"] = vacuous;
  out.check("level_set_constant", kol, "C_hat=" + format_double(Chat) + (vacuous ? " (no hits for h<=0.1)" : ""));

  const std::size_t hs_samples = std::max<std::size_t>(1000, samples / 10);
  auto& ht = out.table("harness", {"region", "probability", "ci_halfwidth", "exact", "samples"});
  const auto disk = wos_harmonic_measure(UnitDiskRegion{}, [](cplx z) { return z.imag() > 0.0; }, hs_samples, 1e-6,
                                         stream_seed(cfg.seed, 1ull << 40));
  const auto half = wos_harmonic_measure(UpperHalfPlaneRegion{}, [](cplx z) { return std::abs(z.real()) < 1.0; }, hs_samples, 1e-6,
                                         stream_seed(cfg.seed, 1ull << 41));
  ht.add("unit_disk", disk.probability, disk.ci_halfwidth, 0.5, disk.samples);
  ht.add("upper_half_plane", half.probability, half.ci_halfwidth, 0.5, half.samples);
  out.check("harness_disk", std::abs(disk.probability - 0.5) <= 3.0 * std::max(disk.ci_halfwidth, 1e-12));
  out.check("harness_half_plane", std::abs(half.probability - 0.5) <= 3.0 * std::max(half.ci_halfwidth, 1e-12));

  // absorption radius sensitivity
  const auto fine = wos_sample(omega, hs_samples, 0.5 * eps, stream_seed(cfg.seed, 1ull << 42));
  auto& et = out.table("eps_sensitivity", {"eps", "y", "probability", "ci_halfwidth", "samples"});
  const double y0 = omega.alpha;
  const auto e1 = estimate(run, [y0](cplx z) { return z.imag() > y0; });
  const auto e2 = estimate(fine, [y0](cplx z) { return z.imag() > y0; });
  et.add(eps, y0, e1.probability, e1.ci_halfwidth, e1.samples);
  et.add(0.5 * eps, y0, e2.probability, e2.ci_halfwidth, e2.samples);
  out.summary["eps_shift"] = e2.probability - e1.probability;

  std::mt19937_64 rng(stream_seed(cfg.seed, 1ull << 43));
  std::size_t counts[4] = {0, 0, 0, 0};
  constexpr std::size_t W = 100000;
  for (std::size_t i = 0; i < W; ++i) {
    double r = std::sqrt(unit_uniform(rng));
    if (r == 0.0) r = 0.5;
    const cplx w = std::polar(r, 2.0 * M_PI * unit_uniform(rng));
    counts[std::min(covering_count(omega, w), 3)]++;
  }
  auto& ct = out.table("covering", {"count", "frequency"});
  for (int k = 0; k <= 3; ++k) ct.add(k, static_cast<double>(counts[k]) / W);
  out.check("covering", counts[0] == 0 && counts[3] == 0 && static_cast<double>(counts[2]) / W > 0.999);
}

// ---- blaschke-passage ----
inline void blaschke_passage(const ExperimentConfig& cfg, ExperimentOutput& out) {
  const std::size_t Q = cfg.samples.value_or(std::size_t{1} << 18);
  const std::vector<std::pair<std::string, SymbolSpec>> sigmas = {{"cusp", SymbolSpec::cusp()},
                                                                   {"lens_0.5", SymbolSpec::lens(0.5)}};
  auto& lt = out.table("level_sets", {"sigma", "a", "kappa", "h", "m_psi", "m_sigma"});
  for (double a : {0.5, 0.9}) {
    const double kappa = 4.0 / (1.0 - a * a);
    const auto B = SymbolSpec::blaschke_square(a);
    for (const auto& [name, sigma] : sigmas) {
      const auto psi = SymbolSpec::compose(B, sigma);
      const BoundarySample sp(psi, Q, kDefaultBoundaryRadius), ss(sigma, Q, kDefaultBoundaryRadius);
      bool ok = true;
      for (double h : default_h_grid()) {
        std::size_t cp = 0, cs = 0;
        for (std::size_t q = 0; q < Q; ++q) {
          if (sp.gap[q] < h) ++cp;
          if (ss.gap[q] <= kappa * h) ++cs;
        }
        ok = ok && cp <= cs;
        lt.add(name, a, kappa, h, static_cast<double>(cp) / Q, static_cast<double>(cs) / Q);
      }
      out.check("passage_" + name + "_a" + label(a), ok);
    }
  }

  std::mt19937_64 rng(stream_seed(cfg.seed, 7));
  auto& rt = out.table("contraction", {"a", "min_ratio", "lower_bound", "identity_residual"});
  for (double a : {0.5, 0.9}) {
    double mn = INFINITY;
    for (int i = 0; i < 100000; ++i) {
      const cplx z = std::polar(std::sqrt(unit_uniform(rng)) * (1.0 - 1e-9), 2.0 * M_PI * unit_uniform(rng));
      mn = std::min(mn, blaschke_contraction_ratio(a, z));
    }
    // B(2a/(1+a^2)) = a^2 on the real axis
    const double resid = std::abs(eval(SymbolSpec::blaschke_square(a), cplx(2.0 * a / (1.0 + a * a))) - a * a);
    const double lb = (1.0 - a * a) / 4.0;
    rt.add(a, mn, lb, resid);
    out.check("contraction_a" + label(a), mn >= lb && resid < 1e-12);
  }
}

// ---- polydisk-pairs ----
inline void polydisk_pairs(const ExperimentConfig& cfg, ExperimentOutput& out) {
  // item 1: unboundedness witness
  auto& wt = out.table("witness", {"n", "norm_f", "norm_Cf", "ratio"});
  std::vector<double> x, y;
  for (double nd : log_spaced(10.0, 1e4, 61)) {
    const auto n = static_cast<std::size_t>(std::llround(nd));
    const auto w = unboundedness_witness(n);
    const double ratio = w.norm_Cf / w.norm_f;
    wt.add(n, w.norm_f, w.norm_Cf, ratio);
    x.push_back(std::log(static_cast<double>(n)));
    y.push_back(std::log(ratio));
  }
  const double wslope = fit_line(x, y).slope;
  out.summary["witness_slope"] = wslope;
  out.check("witness_slope", std::abs(wslope - 0.25) <= 0.03, "slope=" + format_double(wslope));

  // item 2: lens-diagonal kernel ratios and the e^{-d n^{2/3}} law
  auto& kt = out.table("lens_diagonal", {"N", "theta", "j", "ratio"});
  for (std::size_t N : {2u, 3u}) {
    const double th = 1.0 / static_cast<double>(N);
    const auto poly = PolySymbolSpec::diagonal(SymbolSpec::lens(th), N);
    std::vector<double> rs;
    for (int j = 1; j <= 30; ++j) {
      std::vector<cplx> a(N, cplx(0.0));
      a[0] = 1.0 - std::ldexp(1.0, -j);
      const double r = kernel_ratio(poly, KernelPoint(a));
      rs.push_back(r);
      kt.add(N, th, j, r);
    }
    const double med = median(rs), mn = *std::min_element(rs.begin(), rs.end());
    out.check("lens_band_N" + std::to_string(N), mn >= 0.5 * med,
              "min=" + format_double(mn) + " median=" + format_double(med));
  }
  auto& bt = out.table("phi2_beta", {"N", "window_hi", "beta_minus", "beta_plus"});
  for (std::size_t N : {2u, 3u}) {
    // e^{-n^{2/3}} stays above the double underflow limit up to n = 2^14
    std::vector<double> law(std::size_t{1} << 14);
    for (std::size_t n = 1; n <= law.size(); ++n) law[n - 1] = std::exp(-std::pow(static_cast<double>(n), 2.0 / 3.0));
    double prev = INFINITY;
    bool dec = true;
    for (std::size_t hi = 256; hi <= law.size(); hi *= 2) {
      const auto b = beta_estimate(law, N, trailing_half(hi));
      bt.add(N, hi, b.beta_minus_hat, b.beta_plus_hat);
      dec = dec && b.beta_plus_hat < prev;
      prev = b.beta_plus_hat;
    }
    out.check("phi2_beta_to_zero_N" + std::to_string(N), dec);
  }

  // item 3: synthetic schedules
  auto& st = out.table("schedule", {"N", "kappa", "n", "eps_n", "a_n", "upper_bound_plain", "upper_bound_weighted"});
  for (std::size_t N : {3u, 4u, 5u}) {
    const auto sch = Schedule::polydisk(N);
    std::vector<double> hg, rg;
    for (double h : log_spaced(1e-6, 0.999, 400)) {
      hg.push_back(h);
      rg.push_back(sch.rho(h));
    }
    bool ok = true;
    for (double nd : log_spaced(16.0, 4096.0, 9)) {
      const double n = std::round(nd);
      hg.push_back(sch.epsilon(n));
      rg.push_back(sch.rho(sch.epsilon(n)));
      const double ub = upper_bound_plain(sch, n), uw = upper_bound_weighted(hg, rg, n, -1.0);
      hg.pop_back();
      rg.pop_back();
      ok = ok && ub <= 2.0 * sch.decay(n) * (1.0 + 1e-12);
      st.add(N, sch.kappa, n, sch.epsilon(n), sch.decay(n), ub, uw);
    }
    out.check("schedule_bound_N" + std::to_string(N), ok);
    out.summary["schedule_membership_N" + std::to_string(N)] = to_string(schatten_membership(sch, 1.0));
  }
  {
    const auto a = Schedule::polydisk(3).spectrum(400);
    std::vector<double> v(400);
    for (std::size_t n = 1; n <= v.size(); ++n) v[n - 1] = std::exp(-std::pow(static_cast<double>(n), 2.0 / 3.0));
    const auto b = SingularSpectrum::synthetic(v);
    const auto merged = tensor_merge({a, b}, 400);
    bool sm = true;
    for (std::size_t j = 1; j <= 20; ++j)
      for (std::size_t k = 1; k <= 20; ++k) sm = sm && merged.at(j * k) >= a.at(j) * b.at(k);
    out.check("schedule_merge_supermultiplicative", sm);
  }

  // item 4: Shapiro-Taylor beta and HS dichotomy
  auto& ht = out.table("hilbert_schmidt", {"theta", "trend", "partial", "block_exponent"});
  for (double th : {1.5, 3.0}) {
    const auto r = hs_norm_sq(SymbolSpec::shapiro_taylor(th), std::size_t{1} << 17);
    ht.add(th, to_string(r.trend), r.partial, r.block_exponent);
    out.check("hs_theta_" + label(th), r.trend == (th > 2.0 ? Trend::converging : Trend::diverging));
  }
  const std::size_t K = cfg.K.value_or(512);
  const auto s = singular_values(build_matrix(SymbolSpec::shapiro_taylor(cfg.theta.value_or(2.0)), K), std::min<std::size_t>(K, 64));
  auto& bs = out.table("shapiro_taylor_beta", {"theta", "N", "window_lo", "window_hi", "beta_minus", "beta_plus"});
  for (std::size_t N : {1u, 2u}) {
    const auto b = beta_estimate(s, N, Window{8, s.size()});
    bs.add(cfg.theta.value_or(2.0), N, b.window.lo, b.window.hi, b.beta_minus_hat, b.beta_plus_hat);
  }
}

// ---- shapiro-taylor ----
inline void shapiro_taylor(const ExperimentConfig& cfg, ExperimentOutput& out) {
  const std::size_t K = cfg.K.value_or(1024);
  std::vector<double> thetas = cfg.theta ? std::vector<double>{*cfg.theta} : std::vector<double>{1.5, 2.0, 3.0};
  auto& sp = out.table("spectra", {"theta", "n", "s_n", "n_pow_half_theta_s_n"});
  auto& ft = out.table("poly_fits", {"theta", "K", "n_lo", "n_hi", "p", "C", "r2", "min_scaled"});
  auto& ht = out.table("hilbert_schmidt", {"theta", "K", "trend", "partial", "block_exponent"});
  for (double th : thetas) {
    const auto s = singular_values(build_matrix(SymbolSpec::shapiro_taylor(th), K), std::min<std::size_t>(K, 64));
    double mn = INFINITY;
    for (std::size_t n = 1; n <= s.size(); ++n) {
      const double sc = std::pow(static_cast<double>(n), 0.5 * th) * s.at(n);
      sp.add(th, n, s.at(n), sc);
      if (n <= 10) mn = std::min(mn, sc);
    }
    const auto f = decay_fit(s, DecayModel::poly, Window{1, 10});
    ft.add(th, K, 1, 10, f.p, f.C, f.r2, mn);
    if (th < 2.0 + 1e-12)
      out.check("poly_exponent_theta_" + label(th), f.p <= 0.5 * th + 0.3 && mn > 0.0,
                "p=" + format_double(f.p));
    const auto r = hs_norm_sq(SymbolSpec::shapiro_taylor(th), std::size_t{1} << 17);
    ht.add(th, std::size_t{1} << 17, to_string(r.trend), r.partial, r.block_exponent);
    if (th != 2.0)
      out.check("hs_theta_" + label(th), r.trend == (th > 2.0 ? Trend::converging : Trend::diverging),
                to_string(r.trend));
  }
}

}  // namespace detail

using ExperimentFn = std::function<void(const ExperimentConfig&, ExperimentOutput&)>;

inline const std::map<std::string, ExperimentFn>& registry() {
  static const std::map<std::string, ExperimentFn> r = {
      {"cusp-diagonal", detail::cusp_diagonal},     {"lens-trichotomy", detail::lens_trichotomy},
      {"tensor-lemma", detail::tensor_lemma},       {"spiral-harmonic", detail::spiral_harmonic},
      {"blaschke-passage", detail::blaschke_passage}, {"polydisk-pairs", detail::polydisk_pairs},
      {"shapiro-taylor", detail::shapiro_taylor},
  };
  return r;
}

inline ExperimentOutput execute(const ExperimentConfig& cfg) {
  const auto it = registry().find(cfg.id);
  if (it == registry().end()) throw std::invalid_argument("unknown experiment id: " + cfg.id);
  ExperimentOutput out;
  it->second(cfg, out);
  return out;
}

inline std::filesystem::path table_path(const ExperimentConfig& cfg, const Table& t) {
  return cfg.out_dir / (cfg.id + "." + t.name + ".csv");
}

inline std::filesystem::path manifest_path(const ExperimentConfig& cfg) {
  return cfg.out_dir / (cfg.id + ".manifest.json");
}

// Computes in memory, writes tables, then the manifest. On error the manifest
// records status "error", lists no tables, and any table already written is removed.
inline RunManifest run(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.config = cfg.to_json();
  std::filesystem::create_directories(cfg.out_dir);
  auto write_manifest = [&] {
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f(manifest_path(cfg), std::ios::binary);
    f << m.to_json().dump(2) << "\n";
  };
  std::vector<std::filesystem::path> written;
  try {
    const auto out = execute(cfg);
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    for (const auto& t : out.tables) files.emplace_back(table_path(cfg, t), render_csv(t, cfg));
    for (const auto& [path, body] : files) {
      written.push_back(path);
      std::ofstream f(path, std::ios::binary);
      f << body;
      if (!f) throw std::runtime_error("failed to write " + path.string());
      m.checksums[path.filename().string()] = crc32_hex(body);
    }
    m.assertions = out.assertions;
    m.summary = out.summary;
    const bool ok = std::all_of(out.assertions.begin(), out.assertions.end(), [](const Assertion& a) { return a.pass; });
    m.status = ok ? RunStatus::pass : RunStatus::assertion_failed;
  } catch (const std::exception& e) {
    m.status = RunStatus::error;
    m.error = e.what();
    m.checksums.clear();
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
  }
  write_manifest();
  return m;
}

}  // namespace compop

#endif
