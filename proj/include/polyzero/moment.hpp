#pragma once

#include <vector>

#include "polyzero/polytope.hpp"

namespace polyzero {

/// Point on the open torus orbit of projective space in log coordinates:
/// z_j = exp(rho_j + i theta_j), so |z_j|^2 = exp(2 rho_j). theta may be
/// empty (interpreted as zero); the modulus-only routines ignore it.
struct TorusPoint {
  std::vector<double> rho;
  std::vector<double> theta;
  int dim() const { return static_cast<int>(rho.size()); }
};

enum class Region { Allowed, Forbidden, Transition };

/// Solution of the decay problem at z: the optimal weight q in P, the flow
/// time tau, and the decay exponent b = min_{x in P} b_x(z) >= 0.
struct NormalData {
  std::vector<double> q;
  std::vector<double> tau;
  double b = 0.0;
  int face_id = -1;        // face whose relative interior holds q
  bool transition = false; // tau lies on the boundary of the normal cone
  double residual = 0.0;   // max of the optimality certificates
};

struct RegionInfo {
  Region region = Region::Allowed;
  int face_id = -1;  // flow-out face for forbidden and transition points
  NormalData data;
};

struct SolveOptions {
  double kkt_tol = 1e-8;           // certificate bound for a valid solve
  double transition_rtol = 1e-7;   // relative width of the transition band
  double x_floor = 1e-12;          // iterates keep x_j and x_0 above this
  double face_tol = 1e-9;          // membership slack for the optimum
  int max_newton = 80;
};

/// Overflow-safe log(1 + sum_j exp(2 rho_j)).
double log1p_norm2(const std::vector<double>& rho);

/// Moment map of the torus action, mu_j = |z_j|^2 / (1 + ||z||^2); the
/// image is the open standard simplex.
std::vector<double> moment_map(const TorusPoint& z);

/// Decay functional for a single weight x in the closed dilated simplex
/// (x_j >= 0, x_0 = p - sum x_j >= 0, convention 0 log 0 = 0):
///   b_x(z) = sum_{j=0}^m x_j log(x_j / p) - log(|z|^{2x} / (1+||z||^2)^p).
double decay_objective(const std::vector<double>& x, const TorusPoint& z,
                       double p);

/// Gradient of b_x in x; requires x_j > 0 and x_0 > 0. Component j equals
/// -(2 rho_j + log x_0 - log x_j), i.e. -tau_j.
std::vector<double> decay_gradient(const std::vector<double>& x,
                                   const TorusPoint& z, double p);

/// Minimizes b_x over x in P. P must be simple and not contained in the
/// boundary of the dilated simplex. The search walks candidate faces in
/// decreasing dimension, solves each by damped Newton in face coordinates
/// from the face centroid, and accepts the first optimum certified by the
/// normal-cone position of tau = -grad b. Convexity makes any certified
/// point the global minimizer, so the walk order only affects speed.
NormalData solve_normal_data(const LatticePolytope& P, const TorusPoint& z,
                             const SolveOptions& opt = {});

/// Region of z relative to P: Allowed when q is interior with zero flow,
/// Transition on the tolerance band around region interfaces, Forbidden
/// (with the flow-out face) otherwise.
RegionInfo classify_region(const LatticePolytope& P, const TorusPoint& z,
                           const SolveOptions& opt = {});

/// Recovers the decay exponent by integrating the flow form along the
/// straight path sigma(t) = t * tau, re-solving the weight at every node.
/// steps must be >= 16 and even (composite Simpson).
double b_action_integral(const LatticePolytope& P, const TorusPoint& z,
                         int steps = 64, const SolveOptions& opt = {});

}  // namespace polyzero
