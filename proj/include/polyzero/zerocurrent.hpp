#pragma once

#include <vector>

#include "polyzero/moment.hpp"
#include "polyzero/polytope.hpp"
#include "polyzero/rational.hpp"

namespace polyzero {

/// Limit density of the expected zero current at one torus point: the
/// m x m coefficient matrix M_jk = (1/(8 pi)) d^2 u / (d rho_j d rho_k)
/// of the limit potential u = p log(1+||z||^2) - b_P.
struct PsiDensity {
  TorusPoint point;
  std::vector<std::vector<double>> matrix;  // symmetric, PSD up to noise
  std::vector<double> eigenvalues;          // ascending
  int rank = 0;
  Region region = Region::Allowed;
  int face_id = -1;  // flow-out face for forbidden points
};

/// Names one of the worked examples with closed-form densities: the unit
/// square (p = 2), the slant trapezoid with n = 1 (p = 2, same forbidden
/// values as the square), and the slant trapezoid family (p = n + 1).
struct ExampleId {
  enum Kind { Square, TrapezoidN1, TrapezoidFamily };
  Kind kind = Square;
  long long n = 1;  // slant parameter, TrapezoidFamily only
};

struct BkVolume {
  double numeric = 0.0;
  Rational exact;  // m! times the lattice volume of P
};

/// Closed-form density matrix of p omega_FS at z, the allowed-region value
/// of the zero current: M = (p / (2 pi)) (diag(mu) - mu mu^T).
std::vector<std::vector<double>> allowed_reference_matrix(
    const LatticePolytope& P, const TorusPoint& z);

/// Density matrix by Richardson-refined central differences of the limit
/// potential in rho (steps h and h/2), symmetrized. Allowed points take
/// the exact closed form. Throws TransitionPointError at transition
/// points; StencilStraddleError when every admissible step (h, h/2, h/4)
/// has stencil nodes crossing a region interface.
PsiDensity psi_density(const LatticePolytope& P, const TorusPoint& z,
                       double step = 1e-3);

/// Rank of the density matrix with a relative eigenvalue threshold:
/// eigenvalues count when larger than rel_threshold times the largest
/// eigenvalue of the allowed reference at the same point.
int psi_rank(const LatticePolytope& P, const TorusPoint& z,
             double step = 1e-3, double rel_threshold = 1e-4);

/// Polytope underlying a worked example.
LatticePolytope example_polytope(const ExampleId& ex);

/// Analytic decay exponent of a worked example. Derivations are spelled
/// out at the definitions; the region is detected from the closed-form
/// inequalities. Throws DomainError off the example's chart.
double oracle_b(const ExampleId& ex, const TorusPoint& z);

/// Analytic density matrix of a worked example, same charting as oracle_b.
PsiDensity oracle_psi(const ExampleId& ex, const TorusPoint& z);

/// Invariance defect of the density along the normal flow at a forbidden
/// point: max over unit directions v spanning the flow orbit (the flow
/// cone in rho plus the face conormal in theta) of |v^T M v| divided by
/// the larger of trace(M) and the allowed-reference trace. The potential
/// is angle-independent, so the theta block vanishes identically and the
/// max is realized over the rho cone directions. Throws DomainError for
/// allowed points.
double normal_flow_residual(const LatticePolytope& P, const TorusPoint& z);

/// Integrates the top power of the zero current over the allowed region in
/// moment-map coordinates with an adaptive cell subdivision started at
/// grid_resolution cells per axis, against the exact value m! Vol(P).
BkVolume bk_volume_check(const LatticePolytope& P, int grid_resolution);

/// Volume of the moment-map preimage of the box [lo, hi] inside the open
/// simplex, integrated numerically in the image coordinates; equals the
/// Lebesgue volume of the box intersected with the simplex.
double pushforward_box_volume(const std::vector<double>& lo,
                              const std::vector<double>& hi, int resolution);

}  // namespace polyzero
