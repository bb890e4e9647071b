#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "polyzero/ensemble.hpp"
#include "polyzero/errors.hpp"
#include "polyzero/moment.hpp"

using namespace polyzero;

namespace {

LatticePolytope seg(long long a, long long b, long long p) {
  return shapes::segment(a, b, p);
}

double sup_histogram_error(const RadialHistogram& h) {
  double sup = 0.0;
  for (std::size_t b = 0; b < h.empirical.size(); ++b) {
    sup = std::max(sup, std::abs(h.empirical[b] - h.predicted[b]));
  }
  return sup;
}

double decay_at_root(const LatticePolytope& P, const std::complex<double>& z) {
  return solve_normal_data(P, {{std::log(std::abs(z))}, {}}).b;
}

}  // namespace

TEST_CASE("coefficient draws are reproducible and keyed by seed and index") {
  auto P = seg(1, 3, 4);
  auto f1 = sample_polynomial(P, 5, 42, 0);
  auto f2 = sample_polynomial(P, 5, 42, 0);
  REQUIRE(f1.coeffs.size() == f2.coeffs.size());
  CHECK(f1.coeffs.size() == 11);  // lattice points of [5, 15]
  for (auto it1 = f1.coeffs.begin(), it2 = f2.coeffs.begin();
       it1 != f1.coeffs.end(); ++it1, ++it2) {
    CHECK(it1->first == it2->first);
    CHECK(it1->second.real() == it2->second.real());
    CHECK(it1->second.imag() == it2->second.imag());
  }
  auto g = sample_polynomial(P, 5, 43, 0);
  auto h = sample_polynomial(P, 5, 42, 1);
  int differ_seed = 0;
  int differ_index = 0;
  for (const auto& [alpha, c] : f1.coeffs) {
    if (std::abs(c - g.coeffs.at(alpha)) > 1e-12) ++differ_seed;
    if (std::abs(c - h.coeffs.at(alpha)) > 1e-12) ++differ_index;
  }
  CHECK(differ_seed == 11);
  CHECK(differ_index == 11);
  CHECK_THROWS_AS(sample_polynomial(P, 0, 1), DomainError);
  CHECK_THROWS_AS(sample_polynomial(P, 1, 1, -1), DomainError);
}

TEST_CASE("coefficient moments match the unit-variance complex Gaussian") {
  auto P = seg(0, 2, 2);
  const int n = 10000;
  std::vector<LatticeVector> alphas;
  P.for_each_lattice_point(1, [&](const LatticeVector& a) {
    alphas.push_back(a);
  });
  REQUIRE(alphas.size() == 3);
  for (const auto& alpha : alphas) {
    double sum_sq = 0.0;
    double sum_re = 0.0;
    double sum_im = 0.0;
    double var_re = 0.0;
    double var_im = 0.0;
    double cov = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto c = sample_polynomial(P, 1, 7, i).coeffs.at(alpha);
      sum_sq += std::norm(c);
      sum_re += c.real();
      sum_im += c.imag();
      var_re += c.real() * c.real();
      var_im += c.imag() * c.imag();
      cov += c.real() * c.imag();
    }
    CHECK(sum_sq / n >= 0.94);
    CHECK(sum_sq / n <= 1.06);
    CHECK(std::abs(sum_re / n) < 0.03);
    CHECK(std::abs(sum_im / n) < 0.03);
    CHECK(var_re / n == doctest::Approx(0.5).epsilon(0.08));
    CHECK(var_im / n == doctest::Approx(0.5).epsilon(0.08));
    CHECK(std::abs(cov / n) < 0.03);
  }
}

TEST_CASE("manual coefficients recover the roots of unity") {
  // The endpoint basis norms of [0, N] at p = 1 coincide, so coefficients
  // (-1, 1) give a polynomial proportional to z^N - 1.
  const long long N = 7;
  SparsePolynomial f(seg(0, 1, 1));
  f.N = N;
  f.coeffs[{0}] = {-1.0, 0.0};
  f.coeffs[{N}] = {1.0, 0.0};
  auto sample = univariate_roots(f);
  REQUIRE(sample.roots.size() == 7);
  for (long long k = 0; k < N; ++k) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / N;
    const std::complex<double> target{std::cos(phi), std::sin(phi)};
    double best = 1e9;
    for (const auto& r : sample.roots) best = std::min(best, std::abs(r - target));
    CHECK(best <= 1e-10);
  }
  for (const auto& r : sample.roots) CHECK(std::abs(r) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("every generic draw carries root count N times the lattice length") {
  struct Config {
    long long a, b, p, N;
  };
  const Config cases[] = {{1, 3, 4, 10}, {0, 2, 3, 4}, {2, 5, 6, 3}, {1, 3, 4, 1}};
  for (const auto& c : cases) {
    auto P = seg(c.a, c.b, c.p);
    for (long long idx = 0; idx < 5; ++idx) {
      auto sample = univariate_roots(sample_polynomial(P, c.N, 11, idx));
      CHECK(static_cast<long long>(sample.roots.size()) == c.N * (c.b - c.a));
      CHECK(static_cast<long long>(sample.roots.size()) <= c.N * c.b);
      CHECK(sample.allowed_count + sample.forbidden_count ==
            static_cast<long long>(sample.roots.size()));
      for (const auto& r : sample.roots) {
        CHECK(std::isfinite(r.real()));
        CHECK(std::isfinite(r.imag()));
        CHECK(std::abs(r) > 1e-9);
      }
    }
  }
}

TEST_CASE("degenerate endpoint coefficients raise the resample signal") {
  auto P = seg(1, 3, 4);
  auto f = sample_polynomial(P, 2, 5);
  f.coeffs[{6}] = {1e-15, 0.0};  // top endpoint of [2, 6]
  CHECK_THROWS_AS(univariate_roots(f), DomainError);
  auto g = sample_polynomial(P, 2, 5);
  g.coeffs[{2}] = {0.0, 0.0};
  CHECK_THROWS_AS(univariate_roots(g), DomainError);
  SparsePolynomial bad(shapes::unit_square());
  bad.N = 1;
  CHECK_THROWS_AS(univariate_roots(bad), DomainError);
  SparsePolynomial pt(shapes::point(1, 2, {1}));
  pt.N = 3;
  CHECK_THROWS_AS(univariate_roots(pt), DomainError);
}

TEST_CASE("interval ensemble concentrates on the allowed annulus") {
  auto P = seg(1, 3, 4);
  auto stats = empirical_zero_stats(P, 50, 200, 20260822);
  CHECK(stats.total_roots == 50 * 2 * 200);
  CHECK(stats.resampled == 0);
  INFO("allowed fraction ", stats.allowed_fraction);
  CHECK(stats.allowed_fraction >= 0.90);
  // Interface bins smear over a width of order N^{-1/2} ~ 0.04 at N = 50,
  // so the pointwise density error sits near 0.17 regardless of sample
  // count; the distribution-function distance cancels the symmetric
  // smearing. Thresholds calibrated over seeds {7, 99, 20260822}.
  const double dist = histogram_distribution_error(stats.histogram);
  INFO("histogram distribution error ", dist);
  CHECK(dist <= 0.1);
  const double sup = sup_histogram_error(stats.histogram);
  INFO("histogram sup error ", sup);
  CHECK(sup <= 0.25);
  // The limit profile is uniform on [1/4, 3/4] with density 2; interface
  // bins average the jump.
  CHECK(stats.histogram.predicted[0] == doctest::Approx(0.0));
  CHECK(stats.histogram.predicted[2] == doctest::Approx(1.0));
  CHECK(stats.histogram.predicted[4] == doctest::Approx(2.0));
  CHECK(stats.histogram.predicted[7] == doctest::Approx(1.0));
  CHECK(stats.histogram.predicted[9] == doctest::Approx(0.0));
  double mass = 0.0;
  for (double d : stats.histogram.empirical) mass += d * stats.histogram.bin_width;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full-support ensembles are allowed everywhere") {
  auto stats = empirical_zero_stats(seg(0, 3, 3), 20, 50, 5);
  CHECK(stats.allowed_fraction == 1.0);
  CHECK(stats.total_roots == 20 * 3 * 50);
}

TEST_CASE("allowed fraction is nondecreasing in the degree within noise") {
  auto P = seg(1, 3, 4);
  const long long Ns[] = {10, 25, 50, 100};
  std::vector<double> fraction;
  std::vector<double> se;
  for (long long N : Ns) {
    auto stats = empirical_zero_stats(P, N, 40, 97);
    fraction.push_back(stats.allowed_fraction);
    se.push_back(stats.se_allowed_fraction);
    INFO("N ", N, " fraction ", stats.allowed_fraction, " se ",
         stats.se_allowed_fraction);
  }
  for (std::size_t k = 0; k + 1 < fraction.size(); ++k) {
    CHECK(fraction[k + 1] >= fraction[k] - 2.0 * (se[k] + se[k + 1]));
  }
  CHECK(fraction.back() > fraction.front());
}

TEST_CASE("deep forbidden excursions decay with the degree") {
  auto P = seg(1, 3, 4);
  const double delta = 0.02;
  auto deep_fraction = [&](long long N, long long samples) {
    long long deep = 0;
    long long total = 0;
    for (long long i = 0; i < samples; ++i) {
      auto sample = univariate_roots(sample_polynomial(P, N, 63, i));
      for (const auto& r : sample.roots) {
        if (decay_at_root(P, r) > delta) ++deep;
      }
      total += static_cast<long long>(sample.roots.size());
    }
    return static_cast<double>(deep) / static_cast<double>(total);
  };
  const double f10 = deep_fraction(10, 40);
  const double f40 = deep_fraction(40, 40);
  INFO("deep fraction N=10 ", f10, " N=40 ", f40);
  CHECK(f40 < f10);
  CHECK(f40 < 0.1);
}

TEST_CASE("ensemble statistics are deterministic across reruns") {
  auto P = seg(1, 3, 4);
  auto s1 = empirical_zero_stats(P, 10, 20, 313);
  auto s2 = empirical_zero_stats(P, 10, 20, 313);
  CHECK(s1.allowed_fraction == s2.allowed_fraction);
  CHECK(s1.histogram.empirical == s2.histogram.empirical);
  auto s3 = empirical_zero_stats(P, 10, 20, 314);
  CHECK(s1.allowed_fraction != s3.allowed_fraction);
}

TEST_CASE("facet ensembles measure free tentacles") {
  // The full simplex meets its bottom facet in [0, 4], so every zero of the
  // induced ensemble is allowed.
  CHECK(tentacle_allowed_fraction(shapes::simplex(2, 4), 2, 20, 40, 9) == 1.0);
  // The unit square meets {x_2 = 0} in [0, 1] inside [0, 2].
  const double square_fraction =
      tentacle_allowed_fraction(shapes::unit_square(), 2, 50, 200, 10);
  INFO("square bottom-facet fraction ", square_fraction);
  CHECK(square_fraction >= 0.85);
  CHECK(square_fraction < 1.0);
  // {x_1 = 0} induces [0, 1] as well, with the same statistics law.
  const double left_fraction =
      tentacle_allowed_fraction(shapes::unit_square(), 1, 50, 100, 10);
  CHECK(left_fraction >= 0.85);
  // Slanted trapezoid: {x_1 = 0} carries the segment [0, 1] in x_2 at p = 3.
  const double trap_fraction =
      tentacle_allowed_fraction(shapes::trapezoid(2), 1, 50, 100, 11);
  CHECK(trap_fraction >= 0.80);
  CHECK(trap_fraction <= 1.0);
}

TEST_CASE("facet ensembles reject empty or pointlike intersections") {
  // The square touches {x_1 + x_2 = 2} only at the corner (1, 1).
  CHECK_THROWS_AS(tentacle_allowed_fraction(shapes::unit_square(), 0, 10, 5, 1),
                  DomainError);
  // An interior triangle misses {x_1 + x_2 = 5} entirely.
  auto inner = LatticePolytope::from_vertices(2, 5, {{1, 1}, {2, 1}, {1, 2}});
  CHECK_THROWS_AS(tentacle_allowed_fraction(inner, 0, 10, 5, 1), DomainError);
  CHECK_THROWS_AS(tentacle_allowed_fraction(inner, 1, 10, 5, 1), DomainError);
  CHECK_THROWS_AS(tentacle_allowed_fraction(shapes::unit_square(), 3, 10, 5, 1),
                  DomainError);
  CHECK_THROWS_AS(tentacle_allowed_fraction(shapes::unit_square(), -1, 10, 5, 1),
                  DomainError);
  CHECK_THROWS_AS(tentacle_allowed_fraction(seg(0, 2, 2), 1, 10, 5, 1),
                  DomainError);
  CHECK_THROWS_AS(empirical_zero_stats(shapes::unit_square(), 5, 5, 1),
                  DomainError);
  CHECK_THROWS_AS(empirical_zero_stats(seg(1, 3, 4), 5, 0, 1), DomainError);
}
