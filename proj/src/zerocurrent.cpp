#include "polyzero/zerocurrent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "polyzero/errors.hpp"

namespace polyzero {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Matrix = std::vector<std::vector<double>>;

Matrix zero_matrix(int m) {
  return Matrix(m, std::vector<double>(m, 0.0));
}

double trace_of(const Matrix& M) {
  double t = 0.0;
  for (size_t j = 0; j < M.size(); ++j) t += M[j][j];
  return t;
}

std::vector<double> sym_eigenvalues(const Matrix& M) {
  const int m = static_cast<int>(M.size());
  Eigen::MatrixXd A(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) A(j, k) = M[j][k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  std::vector<double> ev(m);
  for (int j = 0; j < m; ++j) ev[j] = es.eigenvalues()[j];
  return ev;
}

int rank_with_threshold(const std::vector<double>& eigenvalues,
                        double threshold) {
  int r = 0;
  for (double ev : eigenvalues)
    if (ev > threshold) ++r;
  return r;
}

TorusPoint shifted(const TorusPoint& z, const std::vector<double>& delta) {
  TorusPoint out = z;
  for (size_t j = 0; j < delta.size(); ++j) out.rho[j] += delta[j];
  return out;
}

// Value of the limit potential u = p log(1+||z||^2) - b at a stencil node,
// accepted only when the node sits in the same region stratum (region and
// flow-out face) as the center; nullopt signals a straddling stencil.
struct NodeProbe {
  const LatticePolytope& P;
  Region region;
  int face_id;
  double p;

  std::optional<double> value(const TorusPoint& z) const {
    RegionInfo info;
    try {
      info = classify_region(P, z);
    } catch (const SolveError&) {
      return std::nullopt;
    }
    if (info.region != region || info.data.transition) return std::nullopt;
    if (region == Region::Forbidden && info.face_id != face_id)
      return std::nullopt;
    return p * log1p_norm2(z.rho) - info.data.b;
  }
};

// Central-difference Hessian of the limit potential at fixed step hh.
std::optional<Matrix> hessian_at(const NodeProbe& probe, const TorusPoint& z,
                                 double u0, double hh) {
  const int m = z.dim();
  Matrix H = zero_matrix(m);
  for (int j = 0; j < m; ++j) {
    std::vector<double> d(m, 0.0);
    d[j] = hh;
    const auto up = probe.value(shifted(z, d));
    d[j] = -hh;
    const auto um = probe.value(shifted(z, d));
    if (!up || !um) return std::nullopt;
    H[j][j] = (*up - 2.0 * u0 + *um) / (hh * hh);
  }
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      std::vector<double> d(m, 0.0);
      double quad = 0.0;
      for (int sj : {1, -1}) {
        for (int sk : {1, -1}) {
          d[j] = sj * hh;
          d[k] = sk * hh;
          const auto u = probe.value(shifted(z, d));
          if (!u) return std::nullopt;
          quad += sj * sk * *u;
        }
      }
      H[j][k] = H[k][j] = quad / (4.0 * hh * hh);
    }
  }
  return H;
}

int face_with_generators(const LatticePolytope& P,
                         std::vector<LatticeVector> gens) {
  std::sort(gens.begin(), gens.end());
  for (const auto& f : P.faces()) {
    auto have = f.cone_generators;
    std::sort(have.begin(), have.end());
    if (have == gens) return f.id;
  }
  throw SolveError("zerocurrent: face lookup failed");
}

// Squared moduli s_j = |z_j|^2 of a torus point.
std::vector<double> moduli2(const TorusPoint& z) {
  std::vector<double> s(z.rho.size());
  for (size_t j = 0; j < s.size(); ++j) s[j] = std::exp(2.0 * z.rho[j]);
  return s;
}

void require_plane_point(const ExampleId&, const TorusPoint& z) {
  if (z.dim() != 2) {
    throw DomainError("example oracle: point dimension must be 2");
  }
}

long long family_n(const ExampleId& ex) {
  if (ex.kind == ExampleId::Square) return 1;
  if (ex.kind == ExampleId::TrapezoidN1) return 1;
  if (ex.n < 1) throw DomainError("example oracle: slant parameter n < 1");
  return ex.n;
}

enum class ExampleRegion { Allowed, Top, Right, Slant, Vertex };

// Region chart shared by the worked examples, in s = |z|^2 coordinates.
// Square: allowed strip |s2 - s1| < 1 between the two edge flow-outs.
// Trapezoid family (p = n+1): allowed iff s2 < min((1+s1)/n, 1/(n-1));
// top flow-out needs its optimal weight inside the top edge (s1 < 1/(n-1));
// the slant flow-out sits below the vertex separatrix s2 = (n-1)^{n-1} s1^n
// and the vertex flow-out above it.
ExampleRegion example_region(const ExampleId& ex, double s1, double s2) {
  if (ex.kind == ExampleId::Square) {
    if (s2 >= s1 + 1.0) return ExampleRegion::Top;
    if (s1 >= s2 + 1.0) return ExampleRegion::Right;
    return ExampleRegion::Allowed;
  }
  const double n = static_cast<double>(family_n(ex));
  if (n < 2.0) {
    return s2 >= (1.0 + s1) / n ? ExampleRegion::Top : ExampleRegion::Allowed;
  }
  const double wall = 1.0 / (n - 1.0);
  if (s2 < (1.0 + s1) / n && s2 < wall) return ExampleRegion::Allowed;
  if (s2 >= (1.0 + s1) / n && s1 < wall) return ExampleRegion::Top;
  const double separatrix = std::pow(n - 1.0, n - 1.0) * std::pow(s1, n);
  return s2 >= separatrix ? ExampleRegion::Vertex : ExampleRegion::Slant;
}

// Decay exponent on the top-edge flow-out of the trapezoid family (n = 1
// covers the square's two edge flow-outs after swapping coordinates):
// exp(-b) = ((n+1)^{n+1} / n^n) s2 (1+s1)^n / (1+s1+s2)^{n+1}.
double top_flow_b(double n, double s1, double s2) {
  return -((n + 1.0) * std::log(n + 1.0) - n * std::log(n) + std::log(s2) +
           n * std::log1p(s1) - (n + 1.0) * std::log(1.0 + s1 + s2));
}

}  // namespace

Matrix allowed_reference_matrix(const LatticePolytope& P,
                                const TorusPoint& z) {
  if (z.dim() != P.ambient_dim()) {
    throw DomainError("allowed_reference_matrix: dimension mismatch");
  }
  const auto mu = moment_map(z);
  const double scale =
      static_cast<double>(P.degree_bound()) / (2.0 * kPi);
  const int m = z.dim();
  Matrix M = zero_matrix(m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      M[j][k] = scale * ((j == k ? mu[j] : 0.0) - mu[j] * mu[k]);
    }
  }
  return M;
}

PsiDensity psi_density(const LatticePolytope& P, const TorusPoint& z,
                       double step) {
  if (step <= 0.0) throw DomainError("psi_density: step must be positive");
  const RegionInfo info = classify_region(P, z);
  if (info.region == Region::Transition) {
    throw TransitionPointError(
        "psi_density: density is discontinuous at transition points");
  }

  PsiDensity out;
  out.point = z;
  out.region = info.region;
  out.face_id = info.face_id;

  if (info.region == Region::Allowed) {
    out.matrix = allowed_reference_matrix(P, z);
  } else {
    const NodeProbe probe{P, info.region, info.face_id,
                          static_cast<double>(P.degree_bound())};
    const double u0 = probe.p * log1p_norm2(z.rho) - info.data.b;
    bool done = false;
    for (double h : {step, step / 2.0, step / 4.0}) {
      const auto H1 = hessian_at(probe, z, u0, h);
      const auto H2 = hessian_at(probe, z, u0, h / 2.0);
      if (!H1 || !H2) continue;
      const int m = z.dim();
      out.matrix = zero_matrix(m);
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
          const double richardson =
              (4.0 * (*H2)[j][k] - (*H1)[j][k]) / 3.0;
          out.matrix[j][k] = richardson / (8.0 * kPi);
        }
      }
      // Symmetrize; the stencil is symmetric already up to solver noise.
      for (int j = 0; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
          const double avg = 0.5 * (out.matrix[j][k] + out.matrix[k][j]);
          out.matrix[j][k] = out.matrix[k][j] = avg;
        }
      }
      done = true;
      break;
    }
    if (!done) {
      throw StencilStraddleError(
          "psi_density: stencil straddles a region interface at every "
          "admissible step");
    }
  }

  out.eigenvalues = sym_eigenvalues(out.matrix);
  const auto ref_ev = sym_eigenvalues(allowed_reference_matrix(P, z));
  out.rank = rank_with_threshold(out.eigenvalues, 1e-4 * ref_ev.back());
  return out;
}

int psi_rank(const LatticePolytope& P, const TorusPoint& z, double step,
             double rel_threshold) {
  const PsiDensity pd = psi_density(P, z, step);
  const auto ref_ev = sym_eigenvalues(allowed_reference_matrix(P, z));
  return rank_with_threshold(pd.eigenvalues, rel_threshold * ref_ev.back());
}

LatticePolytope example_polytope(const ExampleId& ex) {
  switch (ex.kind) {
    case ExampleId::Square:
      return shapes::unit_square();
    case ExampleId::TrapezoidN1:
      return shapes::trapezoid(1);
    case ExampleId::TrapezoidFamily:
      return shapes::trapezoid(family_n(ex));
  }
  throw DomainError("example_polytope: unknown example");
}

double oracle_b(const ExampleId& ex, const TorusPoint& z) {
  require_plane_point(ex, z);
  const auto s = moduli2(z);
  const double s1 = s[0];
  const double s2 = s[1];
  const double n = static_cast<double>(family_n(ex));
  switch (example_region(ex, s1, s2)) {
    case ExampleRegion::Allowed:
      return 0.0;
    case ExampleRegion::Top:
      return top_flow_b(n, s1, s2);
    case ExampleRegion::Right:
      return top_flow_b(1.0, s2, s1);
    case ExampleRegion::Slant: {
      // Flow along the slant conormal (1, n) by tau1 = log((n-1) s2) / n
      // lands on the slant edge; the surviving potential is
      // (n+1) log(n/(n-1) + s1~) with s1~ = s1 ((n-1) s2)^{-1/n}, and
      //   b = (n+1) log(1+s1+s2) - (n+1) log(n/(n-1) + s1~)
      //       - ((n+1)/n) log((n-1) s2).
      const double g = (n - 1.0) * s2;
      const double s1t = s1 * std::pow(g, -1.0 / n);
      return (n + 1.0) * std::log(1.0 + s1 + s2) -
             (n + 1.0) * std::log(n / (n - 1.0) + s1t) -
             ((n + 1.0) / n) * std::log(g);
    }
    case ExampleRegion::Vertex:
      // Flow with tau_j = log((n-1) s_j) lands on the vertex (1, 1):
      //   b = (n-1) log(n-1) - (n+1) log(n+1) - log(s1 s2)
      //       + (n+1) log(1+s1+s2).
      return (n - 1.0) * std::log(n - 1.0) -
             (n + 1.0) * std::log(n + 1.0) - std::log(s1 * s2) +
             (n + 1.0) * std::log(1.0 + s1 + s2);
  }
  throw DomainError("oracle_b: unreachable");
}

PsiDensity oracle_psi(const ExampleId& ex, const TorusPoint& z) {
  require_plane_point(ex, z);
  const auto s = moduli2(z);
  const double s1 = s[0];
  const double s2 = s[1];
  const double n = static_cast<double>(family_n(ex));
  const LatticePolytope P = example_polytope(ex);

  PsiDensity out;
  out.point = z;
  out.matrix = zero_matrix(2);

  const auto region = example_region(ex, s1, s2);
  switch (region) {
    case ExampleRegion::Allowed:
      out.region = Region::Allowed;
      out.face_id = P.interior_face_id();
      out.matrix = allowed_reference_matrix(P, z);
      break;
    case ExampleRegion::Top:
    case ExampleRegion::Right: {
      // The surviving potential depends on one coordinate only, here
      // n log(1+s) with s the coordinate along the edge; its density is
      // the one-variable value n a(1-a)/(2 pi) at a = s/(1+s).
      out.region = Region::Forbidden;
      const bool top = region == ExampleRegion::Top;
      const double ns = top ? n : 1.0;
      const double a = top ? s1 / (1.0 + s1) : s2 / (1.0 + s2);
      const int idx = top ? 0 : 1;
      out.matrix[idx][idx] = ns * a * (1.0 - a) / (2.0 * kPi);
      out.face_id = face_with_generators(
          P, {top ? LatticeVector{0, 1} : LatticeVector{1, 0}});
      break;
    }
    case ExampleRegion::Slant: {
      // Rank-one density from (n+1) log(n/(n-1) + s1~): the gradient of
      // log s1~ in rho is v = (2, -2/n), so the Hessian is t(1-t) v v^T
      // at t = s1~ / (n/(n-1) + s1~).
      out.region = Region::Forbidden;
      const double s1t = s1 * std::pow((n - 1.0) * s2, -1.0 / n);
      const double t = s1t / (n / (n - 1.0) + s1t);
      const double coeff = (n + 1.0) / (8.0 * kPi) * t * (1.0 - t);
      const double v[2] = {2.0, -2.0 / n};
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) out.matrix[j][k] = coeff * v[j] * v[k];
      out.face_id = face_with_generators(
          P, {LatticeVector{1, static_cast<long long>(n)}});
      break;
    }
    case ExampleRegion::Vertex:
      out.region = Region::Forbidden;
      out.face_id = face_with_generators(
          P, {LatticeVector{0, 1}, LatticeVector{1, static_cast<long long>(n)}});
      break;
  }

  out.eigenvalues = sym_eigenvalues(out.matrix);
  const auto ref_ev = sym_eigenvalues(allowed_reference_matrix(P, z));
  out.rank = rank_with_threshold(out.eigenvalues, 1e-4 * ref_ev.back());
  return out;
}

double normal_flow_residual(const LatticePolytope& P, const TorusPoint& z) {
  const RegionInfo info = classify_region(P, z);
  if (info.region == Region::Allowed) {
    throw DomainError("normal_flow_residual: point is in the allowed region");
  }
  if (info.region == Region::Transition) {
    throw TransitionPointError("normal_flow_residual: transition point");
  }
  const PsiDensity pd = psi_density(P, z);
  // The flow cone can collapse the whole density (vertex flow-outs), where
  // trace(M) is pure noise; normalize by the allowed-scale trace instead.
  const double denom = std::max(trace_of(pd.matrix),
                                trace_of(allowed_reference_matrix(P, z)));
  double worst = 0.0;
  for (const auto& g : P.cone_generators_d(info.face_id)) {
    double norm2 = 0.0;
    for (double gj : g) norm2 += gj * gj;
    double quad = 0.0;
    for (size_t j = 0; j < g.size(); ++j)
      for (size_t k = 0; k < g.size(); ++k)
        quad += g[j] * pd.matrix[j][k] * g[k];
    worst = std::max(worst, std::abs(quad) / norm2);
  }
  // Angular directions conormal to the face also span the orbit; the
  // potential is angle-independent, so their quadratic form vanishes
  // identically and cannot raise the max.
  return worst / denom;
}

namespace {

// Axis-aligned cell with exact rational corners, subdivided until it is
// certified inside or outside the polytope.
struct CellIntegrator {
  const LatticePolytope& P;
  int base_levels;  // uniform subdivision depth of the quadrature grid
  int max_depth;    // adaptive refinement bound for boundary cells
  std::vector<double> centroid;  // interior point, for nudged evaluations
  double numeric = 0.0;

  bool fully_inside(const std::vector<Rational>& lo,
                    const std::vector<Rational>& hi) const {
    const int m = static_cast<int>(lo.size());
    std::vector<Rational> corner(m);
    for (int mask = 0; mask < (1 << m); ++mask) {
      for (int j = 0; j < m; ++j) corner[j] = (mask >> j) & 1 ? hi[j] : lo[j];
      if (!P.contains(corner)) return false;
    }
    return true;
  }

  bool certified_outside(const std::vector<Rational>& lo,
                         const std::vector<Rational>& hi) const {
    const int m = static_cast<int>(lo.size());
    std::vector<Rational> corner(m);
    for (const auto& hs : P.halfspaces()) {
      bool all_violate = true;
      for (int mask = 0; mask < (1 << m) && all_violate; ++mask) {
        Rational v(hs.lambda);
        for (int j = 0; j < m; ++j) {
          const Rational& c = (mask >> j) & 1 ? hi[j] : lo[j];
          v = v + c * Rational(hs.u[j]);
        }
        if (v >= Rational(0)) all_violate = false;
      }
      if (all_violate) return true;
    }
    return false;
  }

  // Top-power density of the zero current in image coordinates; the
  // integrand m! (4 pi)^m det(M) det(d rho / d x) is identically m! on
  // the allowed interior, so the quadrature measures the region itself.
  double integrand(const std::vector<double>& x) const {
    const int m = static_cast<int>(x.size());
    const double p = static_cast<double>(P.degree_bound());
    double x0 = p;
    for (double xj : x) x0 -= xj;
    TorusPoint z;
    z.rho.resize(m);
    for (int j = 0; j < m; ++j) z.rho[j] = 0.5 * std::log(x[j] / x0);
    const Matrix M = allowed_reference_matrix(P, z);
    Eigen::MatrixXd A(m, m), J(m, m);
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        A(j, k) = M[j][k];
        J(j, k) = 0.5 * ((j == k ? 1.0 / x[j] : 0.0) + 1.0 / x0);
      }
    }
    double factorial = 1.0;
    for (int j = 2; j <= m; ++j) factorial *= j;
    return factorial * std::pow(4.0 * kPi, m) * A.determinant() *
           J.determinant();
  }

  void visit(const std::vector<Rational>& lo, const std::vector<Rational>& hi,
             int depth) {
    const int m = static_cast<int>(lo.size());
    double vol = 1.0;
    std::vector<double> center(m);
    for (int j = 0; j < m; ++j) {
      vol *= (hi[j] - lo[j]).to_double();
      center[j] = 0.5 * (lo[j] + hi[j]).to_double();
    }
    if (depth >= base_levels && fully_inside(lo, hi)) {
      numeric += vol * integrand(center);
      return;
    }
    if (certified_outside(lo, hi)) return;
    if (depth >= max_depth) {
      std::vector<Rational> mid(m);
      for (int j = 0; j < m; ++j) mid[j] = (lo[j] + hi[j]) / Rational(2);
      if (P.contains(mid)) {
        // The cell may touch the boundary; evaluate slightly inward so the
        // log coordinates stay finite.
        std::vector<double> x(m);
        for (int j = 0; j < m; ++j)
          x[j] = center[j] + 1e-7 * (centroid[j] - center[j]);
        numeric += vol * integrand(x);
      }
      return;
    }
    std::vector<Rational> clo(m), chi(m);
    for (int mask = 0; mask < (1 << m); ++mask) {
      for (int j = 0; j < m; ++j) {
        const Rational mid = (lo[j] + hi[j]) / Rational(2);
        clo[j] = (mask >> j) & 1 ? mid : lo[j];
        chi[j] = (mask >> j) & 1 ? hi[j] : mid;
      }
      visit(clo, chi, depth + 1);
    }
  }
};

}  // namespace

BkVolume bk_volume_check(const LatticePolytope& P, int grid_resolution) {
  if (grid_resolution < 2) {
    throw DomainError("bk_volume_check: grid resolution must be >= 2");
  }
  const int m = P.ambient_dim();
  std::vector<long long> lo(m), hi(m);
  for (int j = 0; j < m; ++j) {
    lo[j] = P.vertices()[0][j];
    hi[j] = P.vertices()[0][j];
  }
  for (const auto& v : P.vertices()) {
    for (int j = 0; j < m; ++j) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  }
  int base = 1;
  int levels = 0;
  while (base < grid_resolution) {
    base *= 2;
    ++levels;
  }
  std::vector<double> centroid(m, 0.0);
  for (const auto& v : P.vertices()) {
    for (int j = 0; j < m; ++j)
      centroid[j] += static_cast<double>(v[j]) / P.vertices().size();
  }
  CellIntegrator integ{P, levels, levels + (m >= 3 ? 5 : 9), centroid};
  std::vector<Rational> rlo(m), rhi(m);
  for (int j = 0; j < m; ++j) {
    rlo[j] = Rational(lo[j]);
    rhi[j] = Rational(hi[j]);
  }
  integ.visit(rlo, rhi, 0);

  Rational factorial(1);
  for (int j = 2; j <= m; ++j) factorial = factorial * Rational(j);
  return BkVolume{integ.numeric, factorial * P.volume_exact()};
}

double pushforward_box_volume(const std::vector<double>& lo,
                              const std::vector<double>& hi, int resolution) {
  const int m = static_cast<int>(lo.size());
  if (m < 1 || m > 3 || hi.size() != lo.size()) {
    throw DomainError("pushforward_box_volume: bad box");
  }
  if (resolution < 1) {
    throw DomainError("pushforward_box_volume: bad resolution");
  }
  for (int j = 0; j < m; ++j) {
    if (!(lo[j] < hi[j])) {
      throw DomainError("pushforward_box_volume: empty box");
    }
  }
  std::vector<double> h(m);
  for (int j = 0; j < m; ++j) h[j] = (hi[j] - lo[j]) / resolution;
  double cellvol = 1.0;
  for (int j = 0; j < m; ++j) cellvol *= h[j];

  std::vector<int> idx(m, 0);
  double total = 0.0;
  while (true) {
    std::vector<double> x(m);
    double sum = 0.0;
    bool positive = true;
    for (int j = 0; j < m; ++j) {
      x[j] = lo[j] + (idx[j] + 0.5) * h[j];
      sum += x[j];
      positive = positive && x[j] > 0.0;
    }
    if (positive && sum < 1.0) {
      // Fiber volume density over the image point x: the product of the
      // log-coordinate metric determinant and the coordinate Jacobian,
      // identically one on the open simplex.
      const double x0 = 1.0 - sum;
      TorusPoint z;
      z.rho.resize(m);
      for (int j = 0; j < m; ++j) z.rho[j] = 0.5 * std::log(x[j] / x0);
      const auto mu = moment_map(z);
      Eigen::MatrixXd A(m, m), J(m, m);
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
          A(j, k) = 4.0 * ((j == k ? mu[j] : 0.0) - mu[j] * mu[k]);
          J(j, k) = 0.5 * ((j == k ? 1.0 / x[j] : 0.0) + 1.0 / x0);
        }
      }
      total += cellvol * A.determinant() * J.determinant() /
               std::pow(2.0, m);
    }
    int j = 0;
    while (j < m && ++idx[j] == resolution) idx[j++] = 0;
    if (j == m) break;
  }
  return total;
}

}  // namespace polyzero
