#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "polyzero/polytope.hpp"

namespace polyzero {

/// Random polynomial with support NP: the stored coefficients are the raw
/// unit-variance complex Gaussians c_alpha; the monomial weights divide by
/// the basis norms, which downstream consumers apply in log space.
struct SparsePolynomial {
  explicit SparsePolynomial(LatticePolytope poly) : P(std::move(poly)) {}

  LatticePolytope P;
  long long N = 1;
  std::map<LatticeVector, std::complex<double>> coeffs;
  std::uint64_t seed = 0;
};

/// Zeros of one univariate draw, classified against the allowed region.
struct ZeroSample {
  std::vector<std::complex<double>> roots;  // all in C^*, count N * length
  long long N = 1;
  long long allowed_count = 0;
  long long forbidden_count = 0;
};

/// Histogram of the moment-map radii mu(|root|) in [0, 1], bins of width
/// 0.1, with the exact limit prediction (uniform on the allowed interval).
struct RadialHistogram {
  double bin_width = 0.1;
  std::vector<double> empirical;  // density per bin: mass / width
  std::vector<double> predicted;
};

struct EnsembleStats {
  double allowed_fraction = 0.0;
  double se_allowed_fraction = 0.0;  // standard error over samples
  RadialHistogram histogram;
  long long total_roots = 0;
  long long resampled = 0;  // degenerate draws replaced
};

/// Sup distance between the empirical and predicted distribution functions
/// evaluated at the bin edges. Interface bins smear symmetrically over a
/// width of order N^{-1/2}, which this metric cancels and a pointwise
/// density comparison does not.
double histogram_distribution_error(const RadialHistogram& histogram);

/// Deterministic Gaussian draw with E|c_alpha|^2 = 1 (real and imaginary
/// parts independent, variance 1/2 each), keyed by (seed, sample_index,
/// alpha) with a counter generator, so coefficients are order-independent.
SparsePolynomial sample_polynomial(const LatticePolytope& P, long long N,
                                   std::uint64_t seed,
                                   long long sample_index = 0);

/// Roots of a univariate draw: factors the trailing monomial, scales by
/// the largest log coefficient, solves the balanced companion matrix, and
/// polishes each eigenvalue with one Newton step. Throws DomainError for a
/// degenerate endpoint coefficient (|c| < 1e-12, the resample signal) and
/// SolveError when a polished root fails the residual bound 1e-8.
ZeroSample univariate_roots(const SparsePolynomial& f);

/// Pooled root statistics over n_samples independent draws.
EnsembleStats empirical_zero_stats(const LatticePolytope& P, long long N,
                                   long long n_samples, std::uint64_t seed);

/// Allowed fraction of the one-dimensional ensemble induced on a facet of
/// the ambient dilated simplex: facet_index 0 names {sum x = p}, index
/// j >= 1 names {x_j = 0}. The polytope must meet the facet in a segment
/// of positive lattice length; its induced degree bound stays p.
double tentacle_allowed_fraction(const LatticePolytope& P2, int facet_index,
                                 long long N, long long n_samples,
                                 std::uint64_t seed);

}  // namespace polyzero
