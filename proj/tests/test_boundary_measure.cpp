#include <gtest/gtest.h>

#include <sstream>

#include "compop/boundary_measure.hpp"

using namespace compop;

namespace {

double chord(double h) { return 2.0 / M_PI * std::asin(h / 2.0); }

}  // namespace

TEST(WindowMeasure, RotationChordLaw) {
  const std::size_t Q = 1u << 16;
  const auto rot = SymbolSpec::rotation(0.7);
  for (double h : {0.05, 0.3, 1.0, 1.7})
    for (double psi : {0.0, 1.0, -2.5}) {
      const double m = window_measure(rot, std::polar(1.0, psi), h, Q);
      EXPECT_NEAR(m, chord(h), 2.0 / Q) << "h=" << h << " psi=" << psi;
    }
}

TEST(WindowMeasure, DilationMissesBoundaryWindows) {
  for (double psi : {0.0, 2.0, 4.0})
    EXPECT_EQ(window_measure(SymbolSpec::dilation(0.5), std::polar(1.0, psi), 0.3, 1u << 14), 0.0);
}

TEST(WindowMeasure, CuspExponentiallySmall) {
  const auto chi = SymbolSpec::cusp();
  double c_hat = INFINITY;
  for (double h : {0.2, 0.1, 0.05}) {
    const double m = window_measure(chi, 1.0, h, 1u << 18);
    ASSERT_LT(m, 1.0);
    c_hat = std::min(c_hat, m > 0.0 ? -h * std::log(m) : INFINITY);
  }
  EXPECT_GT(c_hat, 0.0);
}

TEST(WindowMeasure, Validation) {
  EXPECT_THROW(window_measure(SymbolSpec::identity(), 0.5, 0.1), std::invalid_argument);
  EXPECT_THROW(window_measure(SymbolSpec::identity(), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(window_measure(SymbolSpec::identity(), 1.0, 0.1, 0), std::invalid_argument);
}

TEST(RhoProfile, IdentityChord) {
  const std::size_t Q = 1u << 18;
  const auto p = rho_profile(SymbolSpec::identity(), default_h_grid(), Q);
  for (std::size_t i = 0; i < p.h_grid.size(); ++i) {
    // grid max over centers at spacing <= h/4 of an equispaced sample count
    EXPECT_NEAR(p.rho_hat[i], chord(p.h_grid[i]), 2.0 / Q) << p.h_grid[i];
    EXPECT_EQ(p.level_hat[i], 1.0);
  }
}

TEST(RhoProfile, LensLevelSetSlope) {
  const auto p = rho_profile(SymbolSpec::lens(0.5));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < p.h_grid.size(); ++i)
    if (p.level_hat[i] * static_cast<double>(p.samples) >= 16.0 && p.h_grid[i] <= 0.25) {
      x.push_back(std::log(p.h_grid[i]));
      y.push_back(std::log(p.level_hat[i]));
    }
  ASSERT_GE(x.size(), 4u);
  EXPECT_NEAR(fit_line(x, y).slope, 2.0, 0.1);
}

TEST(RhoProfile, CuspSuperPolynomial) {
  const auto p = rho_profile(SymbolSpec::cusp());
  for (std::size_t i = 0; i < p.h_grid.size(); ++i)
    if (p.h_grid[i] <= 0.1)
      for (int N = 1; N <= 6; ++N) EXPECT_LE(p.rho_hat[i], std::pow(p.h_grid[i], N));
}

TEST(RhoProfile, WarnsOnCoarseGrid) {
  const auto p = rho_profile(SymbolSpec::identity(), {0.5, 0.01}, 1u << 12, 16);
  EXPECT_FALSE(p.warnings.empty());
  EXPECT_TRUE(rho_profile(SymbolSpec::identity(), {0.5, 0.01}, 1u << 12, 1024).warnings.empty());
}

TEST(CarlesonOrder, Examples) {
  const auto id = carleson_order_fit(rho_profile(SymbolSpec::identity()));
  ASSERT_FALSE(id.degenerate);
  EXPECT_NEAR(id.alpha, 1.0, 0.05);

  std::vector<double> h = default_h_grid(), r;
  for (double x : h) r.push_back(x * x);
  const auto sq = carleson_order_fit(h, r, 0.0);
  EXPECT_NEAR(sq.alpha, 2.0, 1e-12);
  EXPECT_NEAR(sq.goodness, 1.0, 1e-12);

  std::vector<double> zero(h.size(), 0.0);
  EXPECT_TRUE(carleson_order_fit(h, zero, 0.0).degenerate);
}

TEST(CarlesonOrder, LensHalfIsTwoCarleson) {
  const auto f = carleson_order_fit(rho_profile(SymbolSpec::lens(0.5)));
  ASSERT_FALSE(f.degenerate);
  EXPECT_NEAR(f.alpha, 2.0, 0.1);
}

class ShippedProfile : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ShippedProfile, Invariants) {
  const auto spec = shipped_symbols()[GetParam()];
  const std::size_t Q = 1u << 18;
  const auto p = rho_profile(spec, default_h_grid(), Q);
  for (std::size_t i = 0; i < p.h_grid.size(); ++i) {
    EXPECT_GE(p.rho_hat[i], 0.0);
    EXPECT_LE(p.rho_hat[i], 1.0);
    EXPECT_LE(p.level_hat[i], 1.0);
    EXPECT_LE(p.rho_hat[i], p.rho_upper[i]);
    if (i + 1 < p.h_grid.size()) {
      EXPECT_GE(p.rho_hat[i], p.rho_hat[i + 1]);
      EXPECT_GE(p.level_hat[i], p.level_hat[i + 1]);
    }
    // level set covered by a 2h-net of windows of size 2h
    if (i > 0) {
      EXPECT_LE(p.level_hat[i], static_cast<double>(p.centers[i - 1]) * p.rho_hat[i - 1]) << spec.name();
    }
  }
  // r_b stability
  const auto q = rho_profile(spec, default_h_grid(), Q, 0, 1.0 - 1e-6);
  const double tol = std::max(1e-3, 3.0 / std::sqrt(static_cast<double>(Q)));
  for (std::size_t i = 0; i < p.h_grid.size(); ++i) {
    EXPECT_NEAR(p.rho_hat[i], q.rho_hat[i], tol) << spec.name();
    EXPECT_NEAR(p.level_hat[i], q.level_hat[i], tol) << spec.name();
  }
}

INSTANTIATE_TEST_SUITE_P(All, ShippedProfile, ::testing::Range<std::size_t>(0, 10));

TEST(RhoProfile, CompactnessHeuristic) {
  const auto d = rho_profile(SymbolSpec::dilation(0.9), default_h_grid(), 1u << 16);
  const auto r = rho_profile(SymbolSpec::rotation(0.3), default_h_grid(), 1u << 16);
  EXPECT_EQ(d.rho_hat.back() / d.h_grid.back(), 0.0);
  EXPECT_GT(r.rho_hat.back() / r.h_grid.back(), 0.3);
}

TEST(RhoProfile, CsvColumns) {
  const auto p = rho_profile(SymbolSpec::identity(), {0.5, 0.25}, 1024);
  std::ostringstream os;
  write_profile_csv(os, p);
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "h,rho_hat,level_hat,Q,xi_grid_size,r_b");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
