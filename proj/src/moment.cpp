#include "polyzero/moment.hpp"

#include <algorithm>
#include <cmath>

#include "polyzero/errors.hpp"

namespace polyzero {

namespace {

double inf_norm(const std::vector<double>& v) {
  double n = 0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

// Solves the r x r SPD system H d = -g in place, r <= 3.
std::vector<double> solve_spd(std::vector<std::vector<double>> H,
                              std::vector<double> g) {
  const size_t r = g.size();
  for (size_t i = 0; i < r; ++i) g[i] = -g[i];
  for (size_t col = 0; col < r; ++col) {
    size_t piv = col;
    for (size_t i = col + 1; i < r; ++i)
      if (std::abs(H[i][col]) > std::abs(H[piv][col])) piv = i;
    std::swap(H[col], H[piv]);
    std::swap(g[col], g[piv]);
    if (std::abs(H[col][col]) < 1e-300)
      throw SolveError("face Newton: singular Hessian");
    for (size_t i = 0; i < r; ++i) {
      if (i == col) continue;
      double f = H[i][col] / H[col][col];
      for (size_t c = col; c < r; ++c) H[i][c] -= f * H[col][c];
      g[i] -= f * g[col];
    }
  }
  for (size_t i = 0; i < r; ++i) g[i] /= H[i][i];
  return g;
}

struct FaceSolve {
  std::vector<double> x;
  bool converged = false;
  double grad_norm = 0.0;
};

// Damped Newton for b_x restricted to the affine hull of a face, in an
// orthonormal tangent basis anchored at the face centroid. The restricted
// objective is strictly convex, so the iteration is globally convergent
// once steps are damped to keep every coordinate above the floor.
FaceSolve newton_on_face(const LatticePolytope& P, const Face& f,
                         const TorusPoint& z, const SolveOptions& opt) {
  const int m = P.ambient_dim();
  const double p = static_cast<double>(P.degree_bound());
  auto B = P.tangent_basis_d(f.id);
  const size_t r = B.size();
  std::vector<double> x = P.rel_interior_point_d(f.id);

  auto coord_ok = [&](const std::vector<double>& xx) {
    double s = 0;
    for (double v : xx) {
      if (v < opt.x_floor) return false;
      s += v;
    }
    return p - s >= opt.x_floor;
  };
  if (!coord_ok(x)) throw SolveError("face centroid outside the open simplex");

  FaceSolve out;
  double fx = decay_objective(x, z, p);
  for (int it = 0; it < opt.max_newton; ++it) {
    auto gfull = decay_gradient(x, z, p);
    std::vector<double> g(r, 0.0);
    for (size_t i = 0; i < r; ++i)
      for (int j = 0; j < m; ++j)
        g[i] += B[i][static_cast<size_t>(j)] * gfull[static_cast<size_t>(j)];
    out.grad_norm = inf_norm(g);
    if (out.grad_norm <= 1e-12 * std::max(1.0, std::abs(fx))) {
      out.converged = true;
      break;
    }
    if (r == 0) break;
    double s = 0;
    for (double v : x) s += v;
    const double x0 = p - s;
    std::vector<std::vector<double>> H(r, std::vector<double>(r, 0.0));
    for (size_t a = 0; a < r; ++a)
      for (size_t bidx = 0; bidx < r; ++bidx) {
        double h = 0;
        double sa = 0, sb = 0;
        for (int j = 0; j < m; ++j) {
          const auto ja = B[a][static_cast<size_t>(j)];
          const auto jb = B[bidx][static_cast<size_t>(j)];
          h += ja * jb / x[static_cast<size_t>(j)];
          sa += ja;
          sb += jb;
        }
        H[a][bidx] = h + sa * sb / x0;
      }
    auto d = solve_spd(H, g);
    double t = 1.0;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> xn = x;
      for (size_t i = 0; i < r; ++i)
        for (int j = 0; j < m; ++j)
          xn[static_cast<size_t>(j)] += t * d[i] * B[i][static_cast<size_t>(j)];
      if (coord_ok(xn)) {
        double fn = decay_objective(xn, z, p);
        if (fn <= fx + 1e-12 * std::max(1.0, std::abs(fx))) {
          x = xn;
          fx = fn;
          break;
        }
      }
      t *= 0.5;
      if (bt == 59) t = 0.0;
    }
    if (t == 0.0) break;
  }
  if (r == 0) {
    out.converged = true;
    out.grad_norm = 0.0;
  }
  out.x = x;
  return out;
}

// Face whose active-row set matches x within tol, in raw row units.
int face_of_numeric(const LatticePolytope& P, const std::vector<double>& x,
                    double tol) {
  std::vector<int> act;
  for (size_t ri = 0; ri < P.halfspaces().size(); ++ri) {
    const auto& row = P.halfspaces()[ri];
    double s = static_cast<double>(row.lambda);
    for (int j = 0; j < P.ambient_dim(); ++j)
      s += x[static_cast<size_t>(j)] *
           static_cast<double>(row.u[static_cast<size_t>(j)]);
    if (std::abs(s) <= tol) act.push_back(static_cast<int>(ri));
  }
  for (const auto& f : P.faces())
    if (f.active_set == act) return f.id;
  return -1;
}

}  // namespace

double log1p_norm2(const std::vector<double>& rho) {
  double t = 0.0;  // the implicit summand 1 = exp(0)
  for (double r : rho) t = std::max(t, 2.0 * r);
  double s = std::exp(-t);
  for (double r : rho) s += std::exp(2.0 * r - t);
  return t + std::log(s);
}

std::vector<double> moment_map(const TorusPoint& z) {
  const double L = log1p_norm2(z.rho);
  std::vector<double> mu(z.rho.size());
  for (size_t j = 0; j < z.rho.size(); ++j)
    mu[j] = std::exp(2.0 * z.rho[j] - L);
  return mu;
}

double decay_objective(const std::vector<double>& x, const TorusPoint& z,
                       double p) {
  if (x.size() != z.rho.size())
    throw DomainError("decay objective: dimension mismatch");
  double s = 0;
  for (double v : x) {
    if (v < 0) throw DomainError("decay objective: negative weight");
    s += v;
  }
  const double x0 = p - s;
  if (x0 < -1e-12) throw DomainError("decay objective: weight sum exceeds p");
  auto xlogxp = [&](double v) { return v > 0 ? v * std::log(v / p) : 0.0; };
  double b = xlogxp(std::max(x0, 0.0));
  for (size_t j = 0; j < x.size(); ++j)
    b += xlogxp(x[j]) - 2.0 * x[j] * z.rho[j];
  return b + p * log1p_norm2(z.rho);
}

std::vector<double> decay_gradient(const std::vector<double>& x,
                                   const TorusPoint& z, double p) {
  double s = 0;
  for (double v : x) s += v;
  const double x0 = p - s;
  if (x0 <= 0) throw DomainError("decay gradient: x_0 must be positive");
  std::vector<double> g(x.size());
  for (size_t j = 0; j < x.size(); ++j) {
    if (x[j] <= 0) throw DomainError("decay gradient: x_j must be positive");
    g[j] = std::log(x[j]) - std::log(x0) - 2.0 * z.rho[j];
  }
  return g;
}

NormalData solve_normal_data(const LatticePolytope& P, const TorusPoint& z,
                             const SolveOptions& opt) {
  const int m = P.ambient_dim();
  if (z.dim() != m) throw DomainError("solve: point dimension mismatch");
  if (!P.is_simple())
    throw NonSimplePolytopeError("solve needs a simple polytope");
  if (P.face_in_simplex_boundary(P.interior_face_id()))
    throw DomainError("solve: polytope lies in the simplex boundary");
  const double p = static_cast<double>(P.degree_bound());

  auto mu = moment_map(z);
  std::vector<double> xstar(mu.size());
  for (size_t j = 0; j < mu.size(); ++j) xstar[j] = p * mu[j];

  NormalData nd;
  if (P.dim() == m && P.strictly_inside(xstar, opt.face_tol)) {
    nd.q = xstar;
    nd.tau.assign(static_cast<size_t>(m), 0.0);
    nd.b = 0.0;
    nd.face_id = P.interior_face_id();
    nd.transition = false;
    nd.residual = 0.0;
    return nd;
  }

  for (const auto& f : P.faces()) {
    if (P.face_in_simplex_boundary(f.id)) continue;
    auto fs = newton_on_face(P, f, z, opt);
    if (!fs.converged) continue;
    if (!P.contains(fs.x, opt.face_tol)) continue;

    auto g = decay_gradient(fs.x, z, p);
    std::vector<double> tau(g.size());
    for (size_t j = 0; j < g.size(); ++j) tau[j] = -g[j];

    int actual = face_of_numeric(P, fs.x, opt.face_tol);
    if (actual < 0) actual = f.id;
    auto pos = P.normal_cone_contains(actual, tau, opt.transition_rtol);
    if (pos == ConePosition::Outside) continue;

    nd.q = fs.x;
    nd.tau = tau;
    nd.face_id = actual;
    nd.transition = (pos == ConePosition::Boundary);
    double b = decay_objective(fs.x, z, p);
    if (b < -1e-10) throw SolveError("negative decay exponent");
    nd.b = std::max(b, 0.0);

    TorusPoint flowed{z.rho, {}};
    for (size_t j = 0; j < tau.size(); ++j) flowed.rho[j] -= 0.5 * tau[j];
    auto muf = moment_map(flowed);
    double r1 = 0;
    for (size_t j = 0; j < muf.size(); ++j)
      r1 = std::max(r1, std::abs(p * muf[j] - nd.q[j]));
    nd.residual = std::max(r1, fs.grad_norm);
    if (nd.residual > opt.kkt_tol)
      throw SolveError("optimality certificate exceeds tolerance");
    return nd;
  }
  throw SolveError("no face admits a certified minimizer");
}

RegionInfo classify_region(const LatticePolytope& P, const TorusPoint& z,
                           const SolveOptions& opt) {
  RegionInfo info;
  info.data = solve_normal_data(P, z, opt);
  info.face_id = info.data.face_id;
  if (info.data.transition) {
    info.region = Region::Transition;
  } else if (info.data.face_id == P.interior_face_id() &&
             inf_norm(info.data.tau) <= 1e-9) {
    info.region = Region::Allowed;
  } else {
    info.region = Region::Forbidden;
  }
  return info;
}

double b_action_integral(const LatticePolytope& P, const TorusPoint& z,
                         int steps, const SolveOptions& opt) {
  if (steps < 16 || steps % 2 != 0)
    throw DomainError("action integral: steps must be even and >= 16");
  auto nd = solve_normal_data(P, z, opt);
  const auto tau = nd.tau;
  auto node = [&](double t) {
    TorusPoint zt{z.rho, {}};
    for (size_t j = 0; j < tau.size(); ++j) zt.rho[j] -= 0.5 * t * tau[j];
    auto q = solve_normal_data(P, zt, opt).q;
    auto mu = moment_map(zt);
    double v = 0;
    const double p = static_cast<double>(P.degree_bound());
    for (size_t j = 0; j < tau.size(); ++j) v += (p * mu[j] - q[j]) * tau[j];
    return v;
  };
  double acc = node(0.0) + node(1.0);
  for (int i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    acc += (i % 2 == 1 ? 4.0 : 2.0) * node(t);
  }
  return acc / (3.0 * steps);
}

}  // namespace polyzero
