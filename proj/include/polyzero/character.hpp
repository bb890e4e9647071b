#pragma once

#include <complex>
#include <vector>

#include "polyzero/polytope.hpp"
#include "polyzero/rational.hpp"

namespace polyzero {

enum class CharacterMethod { ExactSum, Todd1d };

/// Value of the exponential character of NP at e^w.
struct CharacterEval {
  long long N = 0;
  std::vector<std::complex<double>> w;
  std::complex<double> value;  // may overflow for large N; log form is exact
  double log_mag = 0.0;
  double phase = 0.0;
  CharacterMethod method = CharacterMethod::ExactSum;
};

/// chi_{NP}(e^w) = sum_{alpha in NP} e^{<w, alpha>}, summed exactly. Real w
/// runs through a streaming log-sum-exp; complex w sums after shifting by
/// the maximal real exponent. w = 0 returns the exact integer count. The
/// enumeration guard matches the kernel module.
CharacterEval character_exact(const LatticePolytope& P, long long N,
                              const std::vector<std::complex<double>>& w);

/// Residuals |(1/N) log chi_{NP}(e^w) - max_v <w, v>| for real w, one per
/// requested level. The limit is the support function of P at w.
std::vector<double> support_function_limit(const LatticePolytope& P,
                                           const std::vector<double>& w_real,
                                           const std::vector<long long>& Ns);

/// One-dimensional Euler-Maclaurin/Todd approximation of the character of
/// N*[a, b]: the truncated series Todd(d/dh) applied at both endpoints of
/// the parametrized integral int_{-h1+Na}^{Nb+h2} e^{wx} dx at h = 0.
/// `order` is the highest retained degree of the Todd series z/(1-e^{-z});
/// order 0 is the bare integral, order >= 1 reproduces N(b-a)+1 exactly at
/// w = 0, and the series is exact as order -> infinity for |Im w| < 2 pi.
std::complex<double> character_1d_todd(long long a, long long b, long long N,
                                       std::complex<double> w, int order);

/// First `count` Bernoulli numbers B_0..B_{count-1} (B_1 = -1/2), exact.
std::vector<Rational> bernoulli_numbers(int count);

}  // namespace polyzero
