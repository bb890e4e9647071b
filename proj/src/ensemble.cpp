#include "polyzero/ensemble.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "polyzero/errors.hpp"
#include "polyzero/moment.hpp"

namespace polyzero {

namespace {

constexpr double kDegenerateTol = 1e-12;
constexpr double kResidualTol = 1e-8;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Center of the 2^-53 grid: never returns 0 or 1, so logs stay finite.
double to_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t coefficient_key(std::uint64_t seed, long long sample_index,
                              const LatticeVector& alpha) {
  std::uint64_t key = mix64(seed ^ 0x8c2f9d1b6ae35d25ULL);
  key = mix64(key ^ (0xd1342543de82ef95ULL *
                     static_cast<std::uint64_t>(sample_index + 1)));
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    key = mix64(key ^ (0xa0761d6478bd642fULL * (static_cast<std::uint64_t>(
                                                    alpha[j]) +
                                                0x9e3779b97f4a7c15ULL * j)));
  }
  return key;
}

std::complex<double> gaussian_from_key(std::uint64_t key) {
  const double u1 = to_unit(mix64(key ^ 0x2545f4914f6cdd1dULL));
  const double u2 = to_unit(mix64(key ^ 0x6a09e667f3bcc909ULL));
  const double r = std::sqrt(-std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

// log ||chi_alpha|| = (1/2) log[(Np - |alpha|)! prod alpha_j! / (Np + m)!].
double log_basis_norm(long long Np, int m, const LatticeVector& alpha) {
  long long total = 0;
  double sum = 0.0;
  for (long long a : alpha) {
    total += a;
    sum += std::lgamma(static_cast<double>(a) + 1.0);
  }
  sum += std::lgamma(static_cast<double>(Np - total) + 1.0);
  sum -= std::lgamma(static_cast<double>(Np + m) + 1.0);
  return 0.5 * sum;
}

// Parlett-Reinsch diagonal scaling with radix-2 factors; eigenvalues are
// preserved, so no back-transform is needed.
void balance_in_place(Eigen::MatrixXcd& A) {
  const Eigen::Index n = A.rows();
  bool converged = false;
  while (!converged) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / 2.0;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

struct PolishResult {
  std::complex<double> root;
  double relative_residual;
};

struct Evaluation {
  std::complex<double> newton_step;  // f / f'
  double relative_residual;
  bool have_step;
};

// Evaluates via Horner inside the unit disk and via the reversed
// coefficients outside it, so large-degree powers never overflow.
Evaluation evaluate_at(const std::vector<std::complex<double>>& a,
                       std::complex<double> z) {
  const std::size_t D = a.size() - 1;
  if (std::abs(z) <= 1.0) {
    std::complex<double> value = 0.0;
    std::complex<double> deriv = 0.0;
    double scale = 0.0;
    for (std::size_t k = D + 1; k-- > 0;) {
      deriv = deriv * z + value;
      value = value * z + a[k];
      scale = scale * std::abs(z) + std::abs(a[k]);
    }
    const double res = std::abs(value) / std::max(scale, 1e-300);
    if (deriv == 0.0) return {0.0, res, false};
    return {value / deriv, res, true};
  }
  const std::complex<double> w = 1.0 / z;
  std::complex<double> gval = 0.0;
  std::complex<double> gder = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k <= D; ++k) {
    gder = gder * w + gval;
    gval = gval * w + a[k];
    scale = scale * std::abs(w) + std::abs(a[k]);
  }
  const double res = std::abs(gval) / std::max(scale, 1e-300);
  // f(z) = z^D g(1/z), so f'/f = D/z - g'(w)/(g(w) z^2).
  if (gval == 0.0) return {0.0, res, false};
  const std::complex<double> logdf =
      static_cast<double>(D) / z - gder / (gval * z * z);
  if (logdf == 0.0) return {0.0, res, false};
  return {1.0 / logdf, res, true};
}

// Newton iteration from the companion eigenvalue, keeping the best iterate;
// quadratic convergence makes a handful of steps enough for simple roots.
PolishResult polish_root(const std::vector<std::complex<double>>& a,
                         std::complex<double> z) {
  PolishResult best{z, std::numeric_limits<double>::infinity()};
  for (int iter = 0; iter < 8; ++iter) {
    const Evaluation e = evaluate_at(a, z);
    if (e.relative_residual < best.relative_residual) {
      best = {z, e.relative_residual};
    }
    if (!e.have_step || best.relative_residual < 1e-14) break;
    z -= e.newton_step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
  }
  return best;
}

double moment_radius(const std::complex<double>& z) {
  const double s = std::norm(z);
  return s / (1.0 + s);
}

ZeroSample roots_or_resample_signal(const SparsePolynomial& f);

}  // namespace

SparsePolynomial sample_polynomial(const LatticePolytope& P, long long N,
                                   std::uint64_t seed,
                                   long long sample_index) {
  if (N < 1) throw DomainError("sample_polynomial: N must be positive");
  if (sample_index < 0) {
    throw DomainError("sample_polynomial: sample_index must be nonnegative");
  }
  SparsePolynomial f(P);
  f.N = N;
  f.seed = seed;
  P.for_each_lattice_point(N, [&](const LatticeVector& alpha) {
    f.coeffs.emplace(alpha,
                     gaussian_from_key(coefficient_key(seed, sample_index,
                                                       alpha)));
  });
  return f;
}

namespace {

ZeroSample roots_or_resample_signal(const SparsePolynomial& f) {
  const LatticePolytope& P = f.P;
  if (P.ambient_dim() != 1) {
    throw DomainError("univariate_roots: polytope must be one-dimensional");
  }
  if (f.N < 1) throw DomainError("univariate_roots: N must be positive");
  long long lo = 0;
  long long hi = 0;
  bool first = true;
  for (const auto& v : P.vertices()) {
    if (first) {
      lo = hi = v[0];
      first = false;
    } else {
      lo = std::min(lo, v[0]);
      hi = std::max(hi, v[0]);
    }
  }
  if (first || lo == hi) {
    throw DomainError("univariate_roots: support must be a segment");
  }
  const long long Na = f.N * lo;
  const long long D = f.N * (hi - lo);
  const long long Np = f.N * P.degree_bound();

  // Monomial coefficient of z^(Na+k) is c_alpha / ||chi_alpha||; work with
  // log magnitudes and rescale by the largest one before forming the
  // companion matrix.
  std::vector<std::complex<double>> unit(D + 1);
  std::vector<double> logmag(D + 1);
  double max_log = -std::numeric_limits<double>::infinity();
  for (long long k = 0; k <= D; ++k) {
    const LatticeVector alpha{Na + k};
    const auto it = f.coeffs.find(alpha);
    const std::complex<double> c =
        it == f.coeffs.end() ? std::complex<double>(0.0) : it->second;
    const double mag = std::abs(c);
    if ((k == 0 || k == D) && mag < kDegenerateTol) {
      throw DomainError("univariate_roots: degenerate endpoint coefficient");
    }
    if (mag == 0.0) {
      unit[k] = 0.0;
      logmag[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    unit[k] = c / mag;
    logmag[k] = std::log(mag) - log_basis_norm(Np, 1, alpha);
    max_log = std::max(max_log, logmag[k]);
  }
  std::vector<std::complex<double>> a(D + 1);
  for (long long k = 0; k <= D; ++k) {
    a[k] = std::isfinite(logmag[k]) ? unit[k] * std::exp(logmag[k] - max_log)
                                    : std::complex<double>(0.0);
  }

  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(D, D);
  for (long long k = 0; k + 1 < D; ++k) C(k + 1, k) = 1.0;
  for (long long k = 0; k < D; ++k) C(k, D - 1) = -a[k] / a[D];
  balance_in_place(C);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(C, false);
  if (eig.info() != Eigen::Success) {
    throw SolveError("univariate_roots: eigenvalue iteration failed");
  }

  ZeroSample sample;
  sample.N = f.N;
  sample.roots.reserve(static_cast<std::size_t>(D));
  for (long long k = 0; k < D; ++k) {
    const PolishResult polished = polish_root(a, eig.eigenvalues()(k));
    if (!std::isfinite(polished.root.real()) ||
        !std::isfinite(polished.root.imag()) ||
        polished.relative_residual > kResidualTol) {
      throw SolveError("univariate_roots: root residual above tolerance");
    }
    sample.roots.push_back(polished.root);
  }
  std::sort(sample.roots.begin(), sample.roots.end(),
            [](const std::complex<double>& x, const std::complex<double>& y) {
              if (x.real() != y.real()) return x.real() < y.real();
              return x.imag() < y.imag();
            });
  for (const auto& root : sample.roots) {
    const RegionInfo info = classify_region(P, {{std::log(std::abs(root))},
                                                {std::arg(root)}});
    if (info.region == Region::Allowed) {
      ++sample.allowed_count;
    } else {
      ++sample.forbidden_count;
    }
  }
  return sample;
}

}  // namespace

ZeroSample univariate_roots(const SparsePolynomial& f) {
  return roots_or_resample_signal(f);
}

EnsembleStats empirical_zero_stats(const LatticePolytope& P, long long N,
                                   long long n_samples, std::uint64_t seed) {
  if (P.ambient_dim() != 1) {
    throw DomainError("empirical_zero_stats: polytope must be 1-dimensional");
  }
  if (n_samples < 1) {
    throw DomainError("empirical_zero_stats: need at least one sample");
  }
  EnsembleStats stats;
  const int bins = 10;
  std::vector<long long> counts(bins, 0);
  std::vector<double> per_sample_fraction;
  per_sample_fraction.reserve(static_cast<std::size_t>(n_samples));
  long long allowed_total = 0;
  long long retry_index = n_samples;
  for (long long i = 0; i < n_samples; ++i) {
    long long index = i;
    ZeroSample sample;
    for (;;) {
      try {
        sample = univariate_roots(sample_polynomial(P, N, seed, index));
        break;
      } catch (const DomainError&) {
        // Degenerate endpoint draw: replace it from a reserved index range
        // so the remaining stream is untouched.
        index = retry_index++;
        ++stats.resampled;
        if (stats.resampled > 64) {
          throw SolveError("empirical_zero_stats: too many degenerate draws");
        }
      }
    }
    allowed_total += sample.allowed_count;
    stats.total_roots += static_cast<long long>(sample.roots.size());
    per_sample_fraction.push_back(
        sample.roots.empty()
            ? 0.0
            : static_cast<double>(sample.allowed_count) /
                  static_cast<double>(sample.roots.size()));
    for (const auto& root : sample.roots) {
      const int b = std::clamp(
          static_cast<int>(std::floor(moment_radius(root) * bins)), 0,
          bins - 1);
      ++counts[b];
    }
  }
  stats.allowed_fraction =
      static_cast<double>(allowed_total) / static_cast<double>(stats.total_roots);
  double mean = 0.0;
  for (double fi : per_sample_fraction) mean += fi;
  mean /= static_cast<double>(n_samples);
  double var = 0.0;
  for (double fi : per_sample_fraction) var += (fi - mean) * (fi - mean);
  if (n_samples > 1) {
    var /= static_cast<double>(n_samples - 1) * static_cast<double>(n_samples);
  }
  stats.se_allowed_fraction = std::sqrt(var);

  stats.histogram.bin_width = 1.0 / bins;
  stats.histogram.empirical.resize(bins);
  stats.histogram.predicted.resize(bins);
  long long lo = P.vertices()[0][0];
  long long hi = lo;
  for (const auto& v : P.vertices()) {
    lo = std::min(lo, v[0]);
    hi = std::max(hi, v[0]);
  }
  const double p = static_cast<double>(P.degree_bound());
  const double mu_lo = static_cast<double>(lo) / p;
  const double mu_hi = static_cast<double>(hi) / p;
  const double density = 1.0 / (mu_hi - mu_lo);  // uniform limit on [mu_lo, mu_hi]
  for (int b = 0; b < bins; ++b) {
    const double e0 = b * stats.histogram.bin_width;
    const double e1 = e0 + stats.histogram.bin_width;
    stats.histogram.empirical[b] =
        static_cast<double>(counts[b]) /
        (static_cast<double>(stats.total_roots) * stats.histogram.bin_width);
    const double overlap =
        std::max(0.0, std::min(e1, mu_hi) - std::max(e0, mu_lo));
    stats.histogram.predicted[b] =
        overlap * density / stats.histogram.bin_width;
  }
  return stats;
}

double histogram_distribution_error(const RadialHistogram& histogram) {
  double cumulative = 0.0;
  double sup = 0.0;
  for (std::size_t b = 0; b < histogram.empirical.size(); ++b) {
    cumulative +=
        (histogram.empirical[b] - histogram.predicted[b]) * histogram.bin_width;
    sup = std::max(sup, std::abs(cumulative));
  }
  return sup;
}

double tentacle_allowed_fraction(const LatticePolytope& P2, int facet_index,
                                 long long N, long long n_samples,
                                 std::uint64_t seed) {
  const int m = P2.ambient_dim();
  if (m != 2) {
    throw DomainError("tentacle_allowed_fraction: polytope must be planar");
  }
  if (facet_index < 0 || facet_index > m) {
    throw DomainError("tentacle_allowed_fraction: facet index out of range");
  }
  const long long p = P2.degree_bound();
  // Facet 0 is {x_1 + x_2 = p}; facet j >= 1 is {x_j = 0}. In each case one
  // coordinate parametrizes the facet lattice, and the induced 1-d polytope
  // keeps the same degree bound p.
  long long lo = 0;
  long long hi = 0;
  bool found = false;
  for (const auto& v : P2.vertices()) {
    const bool on_facet =
        facet_index == 0 ? (v[0] + v[1] == p) : (v[facet_index - 1] == 0);
    if (!on_facet) continue;
    const long long coord = facet_index == 2 ? v[0] : v[facet_index == 0 ? 0 : 1];
    if (!found) {
      lo = hi = coord;
      found = true;
    } else {
      lo = std::min(lo, coord);
      hi = std::max(hi, coord);
    }
  }
  if (!found) {
    throw DomainError("tentacle_allowed_fraction: facet intersection empty");
  }
  if (lo == hi) {
    throw DomainError("tentacle_allowed_fraction: facet intersection a point");
  }
  const LatticePolytope segment = shapes::segment(lo, hi, p);
  return empirical_zero_stats(segment, N, n_samples, seed).allowed_fraction;
}

}  // namespace polyzero
