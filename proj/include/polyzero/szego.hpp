#pragma once

#include <vector>

#include "polyzero/moment.hpp"
#include "polyzero/polytope.hpp"

namespace polyzero {

/// Diagonal kernel data at one point and one level N.
struct SzegoEval {
  long long N = 0;
  double log_pi = 0.0;     // log of the diagonal kernel cut to NP
  double log_count = 0.0;  // log #(NP)
  double mass = 0.0;       // expected mass density: exp(log_pi - log_count)
  double u_N = 0.0;        // scaled potential at level N
  double u_inf = 0.0;      // limit potential p log(1+||z||^2) - b_P(z)
  double residual = 0.0;   // u_N - u_inf
};

/// log of the diagonal kernel cut to the lattice points of NP:
///   Pi(z,z) = (prod_{j=1}^m (Np+j)) * sum_{alpha in NP}
///             multinomial(Np, alpha) |z|^{2 alpha} / (1+||z||^2)^{Np}.
/// Every term is combined in log space (single pass, streaming). Levels
/// where the ambient simplex count #(N p Sigma) exceeds 10^7 throw
/// EnumerationLimitError before any enumeration starts.
double log_szego_diag(const LatticePolytope& P, long long N,
                      const TorusPoint& z);

/// log #(NP), with the count cached per (P, N) behind a read-shared map.
double log_point_count(const LatticePolytope& P, long long N);

/// Per-state expected mass at z: Pi(z,z) / #(NP).
double mass_density(const LatticePolytope& P, long long N,
                    const TorusPoint& z);

/// Full evaluation at one point. The level-N potential is count-normalized,
///   u_N = (1/N)(log_pi - log_count) + p log(1+||z||^2),
/// so that u_N -> u_inf everywhere on the torus, transition points
/// included; the raw kernel (log_pi) keeps the dimension-counting
/// prefactor for the monotonicity and identity checks.
SzegoEval szego_eval(const LatticePolytope& P, long long N,
                     const TorusPoint& z);

/// szego_eval across a list of levels at a fixed point.
std::vector<SzegoEval> convergence_profile(const LatticePolytope& P,
                                           const std::vector<long long>& Ns,
                                           const TorusPoint& z);

/// Drops all cached per-(P, N) data.
void clear_szego_cache();

}  // namespace polyzero
