#ifndef COMPOP_SYMBOLS_HPP
#define COMPOP_SYMBOLS_HPP

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "compop/series.hpp"

namespace compop {

class SymbolSpec;

namespace kinds {
struct Identity {};
struct Scalar {
  cplx c;
};
struct Rotation {
  double alpha;
};
struct Lens {
  double theta;
};
struct Cusp {
  double b;
};
struct BlaschkeSquare {
  double a;
};
struct ShapiroTaylor {
  double theta;
  double eps;
};
struct Compose {
  std::shared_ptr<const SymbolSpec> outer;
  std::shared_ptr<const SymbolSpec> inner;
};
struct Explicit {
  PowerSeries series;
};
}  // namespace kinds

using SymbolKind = std::variant<kinds::Identity, kinds::Scalar, kinds::Rotation, kinds::Lens, kinds::Cusp,
                                kinds::BlaschkeSquare, kinds::ShapiroTaylor, kinds::Compose, kinds::Explicit>;

inline double shapiro_taylor_default_eps(double theta) { return std::min(0.5, std::exp(-2.0 * theta)); }

class SymbolSpec {
 public:
  SymbolSpec() : kind_(kinds::Identity{}) {}

  static SymbolSpec identity() { return SymbolSpec(kinds::Identity{}); }
  static SymbolSpec scalar(cplx c) {
    if (!(std::abs(c) <= 1.0)) throw std::invalid_argument("Scalar: |c| must be <= 1");
    return SymbolSpec(kinds::Scalar{c});
  }
  static SymbolSpec rotation(double alpha) {
    if (!std::isfinite(alpha)) throw std::invalid_argument("Rotation: angle must be finite");
    return SymbolSpec(kinds::Rotation{alpha});
  }
  static SymbolSpec lens(double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("Lens: theta must lie in (0,1]");
    return SymbolSpec(kinds::Lens{theta});
  }
  static SymbolSpec cusp(double b = 1.0) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("Cusp: b must be > 0");
    return SymbolSpec(kinds::Cusp{b});
  }
  static SymbolSpec blaschke_square(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("BlaschkeSquare: a must lie in (0,1)");
    return SymbolSpec(kinds::BlaschkeSquare{a});
  }
  static SymbolSpec shapiro_taylor(double theta, double eps) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("ShapiroTaylor: theta must be > 0");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("ShapiroTaylor: eps must lie in (0,1)");
    return SymbolSpec(kinds::ShapiroTaylor{theta, eps});
  }
  static SymbolSpec shapiro_taylor(double theta) { return shapiro_taylor(theta, shapiro_taylor_default_eps(theta)); }
  static SymbolSpec compose(const SymbolSpec& outer, const SymbolSpec& inner) {
    return SymbolSpec(kinds::Compose{std::make_shared<const SymbolSpec>(outer),
                                     std::make_shared<const SymbolSpec>(inner)});
  }
  static SymbolSpec explicit_series(PowerSeries p) { return SymbolSpec(kinds::Explicit{std::move(p)}); }
  // z -> c z as an explicit series
  static SymbolSpec dilation(double c) {
    if (!(std::abs(c) <= 1.0)) throw std::invalid_argument("dilation: |c| must be <= 1");
    return explicit_series(PowerSeries({cplx(0.0), cplx(c)}));
  }

  const SymbolKind& kind() const { return kind_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(kind_);
  }

  std::string name() const;

 private:
  explicit SymbolSpec(SymbolKind k) : kind_(std::move(k)) {}
  SymbolKind kind_;
};

namespace detail {

inline cplx checked(cplx v, const char* what, cplx z) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw SingularEvaluation(std::string(what) + ": singular evaluation at z = (" + std::to_string(z.real()) +
                             ", " + std::to_string(z.imag()) + ")");
  return v;
}

inline cplx lens_u(double theta, cplx z) { return std::pow(1.0 + z, theta) / std::pow(1.0 - z, theta); }

// Re w >= log 2 on the closed disk minus {1}, so the only boundary contact is at 1.
inline cplx cusp_w(cplx z) {
  const cplx d = (1.0 - z) / 4.0;
  if (d == cplx(0.0)) throw SingularEvaluation("Cusp: log of 0 at z = 1");
  return -std::log(d);
}

inline cplx phi0(cplx z) {
  const cplx I(0.0, 1.0);
  const cplx q = std::sqrt((z - I) / (I * z - 1.0));
  return (q - I) / (-I * q + 1.0);
}

inline cplx shapiro_taylor_exponent(double theta, double eps, cplx z) {
  const cplx g = eps * phi0(z);
  if (g == cplx(0.0)) return cplx(0.0);
  return g * std::pow(-std::log(g), theta);
}

inline cplx evaluate(const SymbolSpec& s, cplx z) {
  return std::visit(
      [&](const auto& k) -> cplx {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, kinds::Identity>) {
          return z;
        } else if constexpr (std::is_same_v<T, kinds::Scalar>) {
          return k.c;
        } else if constexpr (std::is_same_v<T, kinds::Rotation>) {
          return std::polar(1.0, k.alpha) * z;
        } else if constexpr (std::is_same_v<T, kinds::Lens>) {
          if (k.theta == 1.0) return z;
          const cplx p = std::pow(1.0 + z, k.theta);
          const cplx m = std::pow(1.0 - z, k.theta);
          return checked((p - m) / (p + m), "Lens", z);
        } else if constexpr (std::is_same_v<T, kinds::Cusp>) {
          const cplx w = cusp_w(z);
          return checked((w - k.b) / (w + k.b), "Cusp", z);
        } else if constexpr (std::is_same_v<T, kinds::BlaschkeSquare>) {
          const cplx m = (z - k.a) / (1.0 - k.a * z);
          return checked(m * m, "BlaschkeSquare", z);
        } else if constexpr (std::is_same_v<T, kinds::ShapiroTaylor>) {
          return checked(std::exp(-shapiro_taylor_exponent(k.theta, k.eps, z)), "ShapiroTaylor", z);
        } else if constexpr (std::is_same_v<T, kinds::Compose>) {
          return evaluate(*k.outer, evaluate(*k.inner, z));
        } else {
          const auto& c = k.series.coeffs;
          cplx acc(0.0);
          for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
          return checked(acc, "Explicit", z);
        }
      },
      s.kind());
}

}  // namespace detail

inline cplx eval(const SymbolSpec& spec, cplx z) {
  if (!(std::abs(z) < 1.0)) throw std::domain_error("eval: requires |z| < 1");
  return detail::evaluate(spec, z);
}

inline cplx boundary_eval(const SymbolSpec& spec, double t, double r_b = 1.0 - 1e-8) {
  if (!(r_b > 0.0 && r_b < 1.0)) throw std::invalid_argument("boundary_eval: r_b must lie in (0,1)");
  return eval(spec, std::polar(r_b, t));
}

// 1 - |phi(z)|^2, with closed forms where cancellation would otherwise hurt.
inline double contact_defect(const SymbolSpec& spec, cplx z) {
  if (!(std::abs(z) < 1.0)) throw std::domain_error("contact_defect: requires |z| < 1");
  const double dz = (1.0 - std::abs(z)) * (1.0 + std::abs(z));
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, kinds::Identity> || std::is_same_v<T, kinds::Rotation>) {
          return dz;
        } else if constexpr (std::is_same_v<T, kinds::Lens>) {
          if (k.theta == 1.0) return dz;
          const cplx u = detail::lens_u(k.theta, z);
          return 4.0 * u.real() / std::norm(u + 1.0);
        } else if constexpr (std::is_same_v<T, kinds::Cusp>) {
          const cplx w = detail::cusp_w(z);
          return 4.0 * k.b * w.real() / std::norm(w + k.b);
        } else if constexpr (std::is_same_v<T, kinds::BlaschkeSquare>) {
          const cplx m = (z - k.a) / (1.0 - k.a * z);
          const double dm = (1.0 - k.a * k.a) * dz / std::norm(1.0 - k.a * z);
          return dm * (1.0 + std::norm(m));
        } else if constexpr (std::is_same_v<T, kinds::ShapiroTaylor>) {
          const cplx F = detail::shapiro_taylor_exponent(k.theta, k.eps, z);
          return -std::expm1(-2.0 * F.real());
        } else {
          return 1.0 - std::norm(detail::evaluate(spec, z));
        }
      },
      spec.kind());
}

inline double lens_semigroup_check(double theta, double theta_p, const std::vector<cplx>& grid) {
  const auto outer = SymbolSpec::lens(theta);
  const auto inner = SymbolSpec::lens(theta_p);
  const auto prod = SymbolSpec::lens(theta * theta_p);
  double dev = 0.0;
  for (const auto& z : grid) dev = std::max(dev, std::abs(eval(outer, eval(inner, z)) - eval(prod, z)));
  return dev;
}

// (1 - |B(z)|)/(1 - |z|) = (1-a^2)(1+|z|)/|1-az|^2 for B = ((z-a)/(1-az))^2.
inline double blaschke_contraction_ratio(double a, cplx z) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("blaschke_contraction_ratio: a must lie in (0,1)");
  if (!(std::abs(z) < 1.0)) throw std::domain_error("blaschke_contraction_ratio: requires |z| < 1");
  return (1.0 - a * a) * (1.0 + std::abs(z)) / std::norm(1.0 - a * z);
}

struct KernelPoint {
  std::vector<cplx> a;
  explicit KernelPoint(std::vector<cplx> pts) : a(std::move(pts)) {
    for (const auto& v : a)
      if (!(std::abs(v) < 1.0)) throw std::invalid_argument("KernelPoint: all |a_j| must be < 1");
  }
};

struct PolyCoord {
  std::size_t source;  // 1-based
  SymbolSpec map;
};

struct PolySymbolSpec {
  std::size_t dimension = 1;
  std::vector<PolyCoord> coords;

  PolySymbolSpec(std::size_t n, std::vector<PolyCoord> c) : dimension(n), coords(std::move(c)) {
    if (n == 0) throw std::invalid_argument("PolySymbolSpec: dimension must be >= 1");
    if (coords.size() != n) throw std::invalid_argument("PolySymbolSpec: need exactly N coordinates");
    for (const auto& pc : coords)
      if (pc.source < 1 || pc.source > n) throw std::invalid_argument("PolySymbolSpec: source index out of range");
  }

  static PolySymbolSpec diagonal(const SymbolSpec& phi, std::size_t n) {
    return PolySymbolSpec(n, std::vector<PolyCoord>(n, PolyCoord{1, phi}));
  }
  static PolySymbolSpec identity(std::size_t n) {
    std::vector<PolyCoord> c;
    for (std::size_t j = 1; j <= n; ++j) c.push_back({j, SymbolSpec::identity()});
    return PolySymbolSpec(n, std::move(c));
  }
};

// ---- JSON ----

inline nlohmann::json to_json(const SymbolSpec& s) {
  using nlohmann::json;
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, kinds::Identity>) {
          return {{"kind", "identity"}};
        } else if constexpr (std::is_same_v<T, kinds::Scalar>) {
          return {{"kind", "scalar"}, {"re", k.c.real()}, {"im", k.c.imag()}};
        } else if constexpr (std::is_same_v<T, kinds::Rotation>) {
          return {{"kind", "rotation"}, {"alpha", k.alpha}};
        } else if constexpr (std::is_same_v<T, kinds::Lens>) {
          return {{"kind", "lens"}, {"theta", k.theta}};
        } else if constexpr (std::is_same_v<T, kinds::Cusp>) {
          return {{"kind", "cusp"}, {"b", k.b}};
        } else if constexpr (std::is_same_v<T, kinds::BlaschkeSquare>) {
          return {{"kind", "blaschke_square"}, {"a", k.a}};
        } else if constexpr (std::is_same_v<T, kinds::ShapiroTaylor>) {
          return {{"kind", "shapiro_taylor"}, {"theta", k.theta}, {"eps", k.eps}};
        } else if constexpr (std::is_same_v<T, kinds::Compose>) {
          return {{"kind", "compose"}, {"outer", to_json(*k.outer)}, {"inner", to_json(*k.inner)}};
        } else {
          json c = json::array();
          for (const auto& v : k.series.coeffs) c.push_back({v.real(), v.imag()});
          return {{"kind", "explicit"}, {"coeffs", c}, {"alias_error", k.series.alias_error}};
        }
      },
      s.kind());
}

inline SymbolSpec symbol_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return SymbolSpec::identity();
  if (kind == "scalar") return SymbolSpec::scalar({j.at("re").get<double>(), j.value("im", 0.0)});
  if (kind == "rotation") return SymbolSpec::rotation(j.at("alpha").get<double>());
  if (kind == "lens") return SymbolSpec::lens(j.at("theta").get<double>());
  if (kind == "cusp") return SymbolSpec::cusp(j.value("b", 1.0));
  if (kind == "blaschke_square") return SymbolSpec::blaschke_square(j.at("a").get<double>());
  if (kind == "shapiro_taylor") {
    const double theta = j.at("theta").get<double>();
    return SymbolSpec::shapiro_taylor(theta, j.value("eps", shapiro_taylor_default_eps(theta)));
  }
  if (kind == "compose") return SymbolSpec::compose(symbol_from_json(j.at("outer")), symbol_from_json(j.at("inner")));
  if (kind == "explicit") {
    std::vector<cplx> c;
    for (const auto& v : j.at("coeffs")) c.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    return SymbolSpec::explicit_series(PowerSeries(std::move(c), j.value("alias_error", 0.0)));
  }
  throw std::invalid_argument("unknown symbol kind: " + kind);
}

inline nlohmann::json to_json(const PolySymbolSpec& p) {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& pc : p.coords) c.push_back({{"source", pc.source}, {"map", to_json(pc.map)}});
  return {{"dimension", p.dimension}, {"coords", c}};
}

inline PolySymbolSpec poly_symbol_from_json(const nlohmann::json& j) {
  std::vector<PolyCoord> c;
  for (const auto& e : j.at("coords")) c.push_back({e.at("source").get<std::size_t>(), symbol_from_json(e.at("map"))});
  return PolySymbolSpec(j.at("dimension").get<std::size_t>(), std::move(c));
}

inline std::string SymbolSpec::name() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        char buf[96];
        if constexpr (std::is_same_v<T, kinds::Identity>) {
          return "identity";
        } else if constexpr (std::is_same_v<T, kinds::Scalar>) {
          std::snprintf(buf, sizeof buf, "scalar(%g%+gi)", k.c.real(), k.c.imag());
        } else if constexpr (std::is_same_v<T, kinds::Rotation>) {
          std::snprintf(buf, sizeof buf, "rotation(%g)", k.alpha);
        } else if constexpr (std::is_same_v<T, kinds::Lens>) {
          std::snprintf(buf, sizeof buf, "lens(%g)", k.theta);
        } else if constexpr (std::is_same_v<T, kinds::Cusp>) {
          std::snprintf(buf, sizeof buf, "cusp(%g)", k.b);
        } else if constexpr (std::is_same_v<T, kinds::BlaschkeSquare>) {
          std::snprintf(buf, sizeof buf, "blaschke_square(%g)", k.a);
        } else if constexpr (std::is_same_v<T, kinds::ShapiroTaylor>) {
          std::snprintf(buf, sizeof buf, "shapiro_taylor(%g,%g)", k.theta, k.eps);
        } else if constexpr (std::is_same_v<T, kinds::Compose>) {
          return k.outer->name() + "o" + k.inner->name();
        } else {
          std::snprintf(buf, sizeof buf, "explicit(deg %zu)", k.series.truncation_order());
        }
        return buf;
      },
      kind_);
}

// Symbols exercised by the invariant sweeps and the bound-consistency check.
inline std::vector<SymbolSpec> shipped_symbols() {
  return {SymbolSpec::identity(),
          SymbolSpec::rotation(1.0),
          SymbolSpec::scalar(0.5),
          SymbolSpec::dilation(0.5),
          SymbolSpec::lens(0.5),
          SymbolSpec::lens(0.25),
          SymbolSpec::cusp(),
          SymbolSpec::blaschke_square(0.5),
          SymbolSpec::shapiro_taylor(2.0),
          SymbolSpec::compose(SymbolSpec::blaschke_square(0.5), SymbolSpec::cusp())};
}

}  // namespace compop

#endif
