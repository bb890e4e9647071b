#include "polyzero/character.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "polyzero/errors.hpp"

namespace polyzero {

namespace {

constexpr double kSimplexGuard = 1e7;

// Same admission rule as the kernel evaluator: refuse before enumerating
// when even the ambient simplex at level N is too large.
void check_guard(const LatticePolytope& P, long long N) {
  const long long Np = N * P.degree_bound();
  __int128 count = 1;
  for (int j = 1; j <= P.ambient_dim(); ++j) {
    count = count * (Np + j) / j;
    if (count > static_cast<__int128>(4 * kSimplexGuard)) break;
  }
  if (static_cast<double>(count) > kSimplexGuard) {
    throw EnumerationLimitError(
        "character: lattice point count exceeds enumeration guard");
  }
}

// Streaming log(sum of exp(terms)) with a running peak rescale.
class LogSum {
 public:
  void add(double t) {
    if (t > peak_) {
      sum_ *= std::exp(peak_ - t);
      peak_ = t;
    }
    sum_ += std::exp(t - peak_);
  }
  double value() const {
    if (sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
    return peak_ + std::log(sum_);
  }

 private:
  double peak_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

// (e^z - 1)/z, stable near z = 0.
std::complex<double> expm1c(std::complex<double> z) {
  if (std::abs(z) < 0.5) {
    std::complex<double> term(1.0, 0.0);
    std::complex<double> sum(1.0, 0.0);
    for (int k = 1; k <= 24; ++k) {
      term *= z / static_cast<double>(k + 1);
      sum += term;
      if (std::abs(term) < 1e-20 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::exp(z) - 1.0) / z;
}

}  // namespace

CharacterEval character_exact(const LatticePolytope& P, long long N,
                              const std::vector<std::complex<double>>& w) {
  if (static_cast<int>(w.size()) != P.ambient_dim()) {
    throw DomainError("character_exact: weight dimension mismatch");
  }
  if (N < 1) throw DomainError("character_exact: N must be positive");
  check_guard(P, N);

  CharacterEval out;
  out.N = N;
  out.w = w;
  out.method = CharacterMethod::ExactSum;

  const bool zero_w = std::all_of(w.begin(), w.end(), [](auto c) {
    return c == std::complex<double>(0.0, 0.0);
  });
  if (zero_w) {
    const double count = static_cast<double>(P.count_lattice_points(N));
    out.value = count;
    out.log_mag = std::log(count);
    out.phase = 0.0;
    return out;
  }

  const bool real_w = std::all_of(w.begin(), w.end(),
                                  [](auto c) { return c.imag() == 0.0; });
  if (real_w) {
    LogSum ls;
    P.for_each_lattice_point(N, [&](const LatticeVector& alpha) {
      double e = 0.0;
      for (size_t j = 0; j < w.size(); ++j) {
        e += w[j].real() * static_cast<double>(alpha[j]);
      }
      ls.add(e);
    });
    out.log_mag = ls.value();
    out.phase = 0.0;
    out.value = std::exp(out.log_mag);
    return out;
  }

  // Complex weights: shift by the maximal real exponent, then sum.
  double shift = -std::numeric_limits<double>::infinity();
  P.for_each_lattice_point(N, [&](const LatticeVector& alpha) {
    double re = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
      re += w[j].real() * static_cast<double>(alpha[j]);
    }
    shift = std::max(shift, re);
  });
  std::complex<double> sum(0.0, 0.0);
  P.for_each_lattice_point(N, [&](const LatticeVector& alpha) {
    std::complex<double> e(0.0, 0.0);
    for (size_t j = 0; j < w.size(); ++j) {
      e += w[j] * static_cast<double>(alpha[j]);
    }
    sum += std::exp(e - shift);
  });
  const double mag = std::abs(sum);
  out.log_mag = mag > 0.0 ? shift + std::log(mag)
                          : -std::numeric_limits<double>::infinity();
  out.phase = std::arg(sum);
  out.value = (out.log_mag < 700.0) ? std::exp(shift) * sum
                                    : std::polar(
                                          std::numeric_limits<double>::infinity(),
                                          out.phase);
  return out;
}

std::vector<double> support_function_limit(const LatticePolytope& P,
                                           const std::vector<double>& w_real,
                                           const std::vector<long long>& Ns) {
  if (static_cast<int>(w_real.size()) != P.ambient_dim()) {
    throw DomainError("support_function_limit: weight dimension mismatch");
  }
  double support = -std::numeric_limits<double>::infinity();
  for (const auto& v : P.vertices()) {
    double s = 0.0;
    for (size_t j = 0; j < w_real.size(); ++j) {
      s += w_real[j] * static_cast<double>(v[j]);
    }
    support = std::max(support, s);
  }
  std::vector<std::complex<double>> w(w_real.begin(), w_real.end());
  std::vector<double> residuals;
  residuals.reserve(Ns.size());
  for (long long N : Ns) {
    const CharacterEval ev = character_exact(P, N, w);
    residuals.push_back(
        std::abs(ev.log_mag / static_cast<double>(N) - support));
  }
  return residuals;
}

std::vector<Rational> bernoulli_numbers(int count) {
  if (count < 1 || count > 21) {
    throw DomainError("bernoulli_numbers: count out of range");
  }
  std::vector<Rational> B;
  B.reserve(count);
  B.push_back(Rational(1));
  for (int n = 1; n < count; ++n) {
    // B_n = -1/(n+1) * sum_{j<n} C(n+1, j) B_j, exact.
    Rational sum(0);
    Rational binom(1);  // C(n+1, 0)
    for (int j = 0; j < n; ++j) {
      sum = sum + binom * B[j];
      binom = binom * Rational(n + 1 - j) / Rational(j + 1);
    }
    B.push_back(Rational(-1, n + 1) * sum);
  }
  return B;
}

std::complex<double> character_1d_todd(long long a, long long b, long long N,
                                       std::complex<double> w, int order) {
  if (a > b) throw DomainError("character_1d_todd: empty interval");
  if (N < 1) throw DomainError("character_1d_todd: N must be positive");
  if (order < 0 || order > 20) {
    throw DomainError("character_1d_todd: order must lie in [0, 20]");
  }
  if (std::abs(w.imag()) >= 2.0 * std::acos(-1.0)) {
    throw DomainError(
        "character_1d_todd: Im(w) outside the convergence strip");
  }

  const std::vector<Rational> B = bernoulli_numbers(order + 1);
  double factorial = 1.0;
  std::vector<double> todd(order + 1);  // degree-j coefficient of z/(1-e^-z)
  for (int j = 0; j <= order; ++j) {
    if (j > 0) factorial *= static_cast<double>(j);
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    todd[j] = sign * B[j].to_double() / factorial;
  }

  const std::complex<double> ea = std::exp(w * static_cast<double>(N * a));
  const std::complex<double> eb = std::exp(w * static_cast<double>(N * b));
  const double len = static_cast<double>(N * (b - a));

  // Degree 0 is the integral of e^{wx} over [Na, Nb]; degree j >= 1 adds the
  // endpoint corrections t_j w^{j-1} (e^{wNb} - (-1)^j e^{wNa}).
  std::complex<double> value = ea * len * expm1c(w * len);
  std::complex<double> wpow(1.0, 0.0);  // w^{j-1} for the running j
  for (int j = 1; j <= order; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    value += todd[j] * wpow * (eb - sign * ea);
    wpow *= w;
  }
  return value;
}

}  // namespace polyzero
