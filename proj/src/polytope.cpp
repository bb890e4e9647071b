#include "polyzero/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace polyzero {

namespace {

long long dot(const LatticeVector& a, const LatticeVector& b) {
  long long s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

LatticeVector sub(const LatticeVector& a, const LatticeVector& b) {
  LatticeVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

bool is_zero(const LatticeVector& v) {
  return std::all_of(v.begin(), v.end(), [](long long x) { return x == 0; });
}

LatticeVector primitive(LatticeVector v) {
  long long g = 0;
  for (long long x : v) g = std::gcd(g, std::llabs(x));
  if (g > 1)
    for (long long& x : v) x /= g;
  return v;
}

LatticeVector cross(const LatticeVector& a, const LatticeVector& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

// Fraction-free Gaussian elimination; entries stay tiny at this scale.
int int_rank(std::vector<LatticeVector> rows) {
  if (rows.empty()) return 0;
  size_t m = rows[0].size();
  std::vector<std::vector<__int128>> a(rows.size(),
                                       std::vector<__int128>(m));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < m; ++j) a[i][j] = rows[i][j];
  int rank = 0;
  for (size_t col = 0; col < m && rank < static_cast<int>(a.size()); ++col) {
    size_t piv = a.size();
    for (size_t i = rank; i < a.size(); ++i)
      if (a[i][col] != 0) {
        piv = i;
        break;
      }
    if (piv == a.size()) continue;
    std::swap(a[rank], a[piv]);
    for (size_t i = rank + 1; i < a.size(); ++i) {
      if (a[i][col] == 0) continue;
      __int128 f = a[i][col], g = a[rank][col];
      for (size_t j = 0; j < m; ++j) a[i][j] = a[i][j] * g - a[rank][j] * f;
    }
    ++rank;
  }
  return rank;
}

// Greedy independent subset, each member reduced to primitive form.
std::vector<LatticeVector> int_basis(const std::vector<LatticeVector>& cands) {
  std::vector<LatticeVector> basis;
  for (const auto& c : cands) {
    if (is_zero(c)) continue;
    auto trial = basis;
    trial.push_back(c);
    if (int_rank(trial) > static_cast<int>(basis.size()))
      basis.push_back(primitive(c));
  }
  return basis;
}

std::vector<double> normalize(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0)
    for (double& x : v) x /= n;
  return v;
}

// Gram-Schmidt; inputs are exact integer vectors, so the drop tolerance is
// generous.
std::vector<std::vector<double>> orthonormalize(
    const std::vector<LatticeVector>& vs) {
  std::vector<std::vector<double>> out;
  for (const auto& vi : vs) {
    std::vector<double> v(vi.begin(), vi.end());
    for (const auto& u : out) {
      double c = 0;
      for (size_t j = 0; j < v.size(); ++j) c += v[j] * u[j];
      for (size_t j = 0; j < v.size(); ++j) v[j] -= c * u[j];
    }
    double n = 0;
    for (double x : v) n += x * x;
    if (n < 1e-18) continue;
    out.push_back(normalize(v));
  }
  return out;
}

}  // namespace

Rational EhrhartPolynomial::eval(long long N) const {
  Rational r(0);
  for (const auto& c : coeffs) r = r * Rational(N) + c;
  return r;
}

LatticePolytope LatticePolytope::from_vertices(
    int m, long long p, const std::vector<LatticeVector>& pts_in) {
  if (m < 1 || m > 3) throw InvalidPolytopeError("ambient dimension must be 1..3");
  if (p < 1) throw InvalidPolytopeError("degree bound must be positive");
  if (pts_in.empty()) throw InvalidPolytopeError("empty vertex list");
  std::vector<LatticeVector> pts;
  for (const auto& v : pts_in) {
    if (static_cast<int>(v.size()) != m)
      throw InvalidPolytopeError("vertex has wrong dimension");
    long long s = 0;
    for (long long x : v) {
      if (x < 0) throw InvalidPolytopeError("vertex has negative coordinate");
      s += x;
    }
    if (s > p)
      throw InvalidPolytopeError("vertex outside the dilated simplex");
    pts.push_back(v);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  LatticePolytope P;
  P.m_ = m;
  P.p_ = p;

  std::vector<LatticeVector> diffs;
  for (size_t i = 1; i < pts.size(); ++i) diffs.push_back(sub(pts[i], pts[0]));
  P.n_ = int_rank(diffs);
  const int n = P.n_;

  // Affine hull equations (only when the polytope is lower-dimensional).
  if (n < m) {
    std::vector<LatticeVector> normals;
    if (n == 0) {
      for (int j = 0; j < m; ++j) {
        LatticeVector e(m, 0);
        e[j] = 1;
        normals.push_back(e);
      }
    } else if (n == 1) {
      LatticeVector d;
      for (const auto& dd : diffs)
        if (!is_zero(dd)) {
          d = primitive(dd);
          break;
        }
      if (m == 2) {
        normals.push_back({-d[1], d[0]});
      } else {
        LatticeVector w1;
        for (int ax = 0; ax < 3; ++ax) {
          LatticeVector e(3, 0);
          e[ax] = 1;
          auto c = cross(d, e);
          if (!is_zero(c)) {
            w1 = primitive(c);
            break;
          }
        }
        normals.push_back(w1);
        normals.push_back(primitive(cross(d, w1)));
      }
    } else {  // n == 2, m == 3
      auto basis = int_basis(diffs);
      normals.push_back(primitive(cross(basis[0], basis[1])));
    }
    for (auto w : normals) {
      w = primitive(w);
      // Canonical sign: first nonzero entry positive.
      for (long long x : w) {
        if (x > 0) break;
        if (x < 0) {
          for (long long& y : w) y = -y;
          break;
        }
      }
      P.eqs_.push_back({w, -dot(w, pts[0])});
    }
    std::sort(P.eqs_.begin(), P.eqs_.end(),
              [](const AffineEquation& a, const AffineEquation& b) {
                return std::tie(a.w, a.c) < std::tie(b.w, b.c);
              });
  }

  // Facet inequalities within the affine hull.
  std::set<std::pair<LatticeVector, long long>> rowset;
  auto try_support = [&](const LatticeVector& u0, size_t anchor) {
    LatticeVector u = primitive(u0);
    if (is_zero(u)) return;
    long long sa = dot(u, pts[anchor]);
    bool all_ge = true, all_le = true;
    for (const auto& q : pts) {
      long long s = dot(u, q);
      if (s < sa) all_ge = false;
      if (s > sa) all_le = false;
    }
    if (all_ge && all_le) return;  // hull degenerate along u
    if (all_ge) rowset.insert({u, -sa});
    if (all_le) {
      LatticeVector nu(u.size());
      for (size_t j = 0; j < u.size(); ++j) nu[j] = -u[j];
      rowset.insert({nu, sa});
    }
  };
  if (n == 1) {
    LatticeVector d;
    for (const auto& dd : diffs)
      if (!is_zero(dd)) {
        d = primitive(dd);
        break;
      }
    try_support(d, static_cast<size_t>(
                       std::min_element(pts.begin(), pts.end(),
                                        [&](const LatticeVector& a,
                                            const LatticeVector& b) {
                                          return dot(d, a) < dot(d, b);
                                        }) -
                       pts.begin()));
    LatticeVector nd(d.size());
    for (size_t j = 0; j < d.size(); ++j) nd[j] = -d[j];
    try_support(nd, static_cast<size_t>(
                        std::max_element(pts.begin(), pts.end(),
                                         [&](const LatticeVector& a,
                                             const LatticeVector& b) {
                                           return dot(d, a) < dot(d, b);
                                         }) -
                        pts.begin()));
  } else if (n == 2) {
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j) {
        auto dir = sub(pts[j], pts[i]);
        if (is_zero(dir)) continue;
        LatticeVector u0;
        if (m == 2)
          u0 = {-dir[1], dir[0]};
        else
          u0 = cross(P.eqs_[0].w, dir);
        try_support(u0, i);
      }
  } else if (n == 3) {
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        for (size_t k = j + 1; k < pts.size(); ++k) {
          auto u0 = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
          try_support(u0, i);
        }
  }
  for (const auto& [u, lam] : rowset) P.rows_.push_back({u, lam});

  // Extreme points: the active rows must span the tangent space.
  for (const auto& v : pts) {
    std::vector<LatticeVector> act;
    for (const auto& r : P.rows_)
      if (dot(r.u, v) + r.lambda == 0) act.push_back(r.u);
    if (int_rank(act) == n) P.verts_.push_back(v);
  }
  if (n == 0) P.verts_ = pts;

  P.simple_ = true;
  for (const auto& v : P.verts_) {
    int cnt = 0;
    for (const auto& r : P.rows_)
      if (dot(r.u, v) + r.lambda == 0) ++cnt;
    if (cnt != n) P.simple_ = false;
  }

  P.build_faces();
  return P;
}

void LatticePolytope::build_faces() {
  const size_t R = rows_.size();
  if (R > 20) throw EnumerationLimitError("too many facets for face search");
  std::vector<std::set<int>> vert_active(verts_.size());
  for (size_t vi = 0; vi < verts_.size(); ++vi)
    for (size_t ri = 0; ri < R; ++ri)
      if (dot(rows_[ri].u, verts_[vi]) + rows_[ri].lambda == 0)
        vert_active[vi].insert(static_cast<int>(ri));

  std::map<std::vector<int>, std::vector<int>> seen;  // active set -> verts
  for (size_t mask = 0; mask < (size_t{1} << R); ++mask) {
    std::set<int> J;
    for (size_t ri = 0; ri < R; ++ri)
      if (mask & (size_t{1} << ri)) J.insert(static_cast<int>(ri));
    std::vector<int> vs;
    for (size_t vi = 0; vi < verts_.size(); ++vi)
      if (std::includes(vert_active[vi].begin(), vert_active[vi].end(),
                        J.begin(), J.end()))
        vs.push_back(static_cast<int>(vi));
    if (vs.empty()) continue;
    std::set<int> A = vert_active[static_cast<size_t>(vs[0])];
    for (int vi : vs) {
      std::set<int> tmp;
      std::set_intersection(A.begin(), A.end(),
                            vert_active[static_cast<size_t>(vi)].begin(),
                            vert_active[static_cast<size_t>(vi)].end(),
                            std::inserter(tmp, tmp.begin()));
      A = tmp;
    }
    seen.emplace(std::vector<int>(A.begin(), A.end()), vs);
  }

  for (const auto& [A, vs] : seen) {
    Face f;
    f.active_set = A;
    f.vertex_ids = vs;
    std::vector<LatticeVector> diffs;
    for (size_t i = 1; i < vs.size(); ++i)
      diffs.push_back(sub(verts_[static_cast<size_t>(vs[i])],
                          verts_[static_cast<size_t>(vs[0])]));
    f.dim = int_rank(diffs);
    f.tangent_exact = int_basis(diffs);
    for (int ri : A) {
      LatticeVector g(m_);
      for (int j = 0; j < m_; ++j)
        g[static_cast<size_t>(j)] =
            -rows_[static_cast<size_t>(ri)].u[static_cast<size_t>(j)];
      f.cone_generators.push_back(g);
    }
    for (int j = 0; j < m_; ++j) {
      Rational s(0);
      for (int vi : vs)
        s += Rational(verts_[static_cast<size_t>(vi)][static_cast<size_t>(j)]);
      f.rel_interior_point.push_back(s /
                                     Rational(static_cast<long long>(vs.size())));
    }
    faces_.push_back(std::move(f));
  }
  std::sort(faces_.begin(), faces_.end(), [](const Face& a, const Face& b) {
    if (a.dim != b.dim) return a.dim > b.dim;
    return a.vertex_ids < b.vertex_ids;
  });
  for (size_t i = 0; i < faces_.size(); ++i)
    faces_[i].id = static_cast<int>(i);
}

bool LatticePolytope::face_in_simplex_boundary(int face_id) const {
  const Face& f = face(face_id);
  for (int j = 0; j < m_; ++j) {
    bool all0 = true;
    for (int vi : f.vertex_ids)
      if (verts_[static_cast<size_t>(vi)][static_cast<size_t>(j)] != 0)
        all0 = false;
    if (all0) return true;
  }
  bool allp = true;
  for (int vi : f.vertex_ids) {
    long long s = 0;
    for (long long x : verts_[static_cast<size_t>(vi)]) s += x;
    if (s != p_) allp = false;
  }
  return allp;
}

bool LatticePolytope::contains(const std::vector<Rational>& x) const {
  for (const auto& e : eqs_) {
    Rational s(e.c);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] * Rational(e.w[static_cast<size_t>(j)]);
    if (!s.is_zero()) return false;
  }
  for (const auto& r : rows_) {
    Rational s(r.lambda);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] * Rational(r.u[static_cast<size_t>(j)]);
    if (s < Rational(0)) return false;
  }
  return true;
}

bool LatticePolytope::contains(const std::vector<double>& x, double tol) const {
  for (const auto& e : eqs_) {
    double s = static_cast<double>(e.c);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] *
           static_cast<double>(e.w[static_cast<size_t>(j)]);
    if (std::abs(s) > tol) return false;
  }
  for (const auto& r : rows_) {
    double s = static_cast<double>(r.lambda);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] *
           static_cast<double>(r.u[static_cast<size_t>(j)]);
    if (s < -tol) return false;
  }
  return true;
}

bool LatticePolytope::strictly_inside(const std::vector<double>& x,
                                      double tol) const {
  for (const auto& e : eqs_) {
    double s = static_cast<double>(e.c);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] *
           static_cast<double>(e.w[static_cast<size_t>(j)]);
    if (std::abs(s) > tol) return false;
  }
  for (const auto& r : rows_) {
    double s = static_cast<double>(r.lambda);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] *
           static_cast<double>(r.u[static_cast<size_t>(j)]);
    if (s <= tol) return false;
  }
  return true;
}

int LatticePolytope::face_of(const std::vector<Rational>& x) const {
  if (!contains(x)) throw DomainError("face_of: point not in the polytope");
  std::vector<int> act;
  for (size_t ri = 0; ri < rows_.size(); ++ri) {
    Rational s(rows_[ri].lambda);
    for (int j = 0; j < m_; ++j)
      s += x[static_cast<size_t>(j)] *
           Rational(rows_[ri].u[static_cast<size_t>(j)]);
    if (s.is_zero()) act.push_back(static_cast<int>(ri));
  }
  for (const auto& f : faces_)
    if (f.active_set == act) return f.id;
  throw SolveError("face_of: no face matches the active set");
}

ConePosition LatticePolytope::normal_cone_contains(
    int face_id, const std::vector<double>& w, double tol) const {
  if (!simple_)
    throw NonSimplePolytopeError("normal cone test needs a simple polytope");
  const Face& f = face(face_id);
  auto T = hull_tangent_basis_d();
  const size_t n = T.size();
  std::vector<double> t(n, 0.0);
  double wnorm = 0;
  for (double x : w) wnorm += x * x;
  wnorm = std::sqrt(wnorm);
  for (size_t i = 0; i < n; ++i)
    for (int j = 0; j < m_; ++j)
      t[i] += T[i][static_cast<size_t>(j)] * w[static_cast<size_t>(j)];
  const double scale = std::max(1.0, wnorm);

  const size_t k = f.cone_generators.size();
  if (k == 0) {
    double tn = 0;
    for (double x : t) tn += x * x;
    return std::sqrt(tn) <= tol * scale ? ConePosition::Interior
                                        : ConePosition::Outside;
  }
  // Generator matrix in tangent coordinates, columns normalized.
  std::vector<std::vector<double>> G(k, std::vector<double>(n, 0.0));
  for (size_t c = 0; c < k; ++c) {
    for (size_t i = 0; i < n; ++i)
      for (int j = 0; j < m_; ++j)
        G[c][i] += T[i][static_cast<size_t>(j)] *
                   static_cast<double>(
                       f.cone_generators[c][static_cast<size_t>(j)]);
    G[c] = normalize(G[c]);
  }
  // Normal equations (k <= 3).
  std::vector<std::vector<double>> M(k, std::vector<double>(k + 1, 0.0));
  for (size_t a = 0; a < k; ++a) {
    for (size_t b = 0; b < k; ++b)
      for (size_t i = 0; i < n; ++i) M[a][b] += G[a][i] * G[b][i];
    for (size_t i = 0; i < n; ++i) M[a][k] += G[a][i] * t[i];
  }
  for (size_t col = 0; col < k; ++col) {
    size_t piv = col;
    for (size_t r2 = col + 1; r2 < k; ++r2)
      if (std::abs(M[r2][col]) > std::abs(M[piv][col])) piv = r2;
    std::swap(M[col], M[piv]);
    if (std::abs(M[col][col]) < 1e-14)
      throw SolveError("normal cone: degenerate generator set");
    for (size_t r2 = 0; r2 < k; ++r2) {
      if (r2 == col) continue;
      double fct = M[r2][col] / M[col][col];
      for (size_t cc = col; cc <= k; ++cc) M[r2][cc] -= fct * M[col][cc];
    }
  }
  std::vector<double> coef(k);
  for (size_t a = 0; a < k; ++a) coef[a] = M[a][k] / M[a][a];
  double resid = 0;
  for (size_t i = 0; i < n; ++i) {
    double s = t[i];
    for (size_t c = 0; c < k; ++c) s -= coef[c] * G[c][i];
    resid += s * s;
  }
  resid = std::sqrt(resid);
  if (resid > tol * scale) return ConePosition::Outside;
  double cmin = *std::min_element(coef.begin(), coef.end());
  if (cmin < -tol * scale) return ConePosition::Outside;
  if (cmin <= tol * scale) return ConePosition::Boundary;
  return ConePosition::Interior;
}

namespace {

void for_each_point_impl(const LatticePolytope& P, long long N,
                         const std::function<void(const LatticeVector&)>& fn,
                         long long max_points) {
  const int m = P.ambient_dim();
  std::vector<long long> lo(static_cast<size_t>(m)), hi(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    long long jlo = P.vertices()[0][static_cast<size_t>(j)];
    long long jhi = jlo;
    for (const auto& v : P.vertices()) {
      jlo = std::min(jlo, v[static_cast<size_t>(j)]);
      jhi = std::max(jhi, v[static_cast<size_t>(j)]);
    }
    lo[static_cast<size_t>(j)] = N * jlo;
    hi[static_cast<size_t>(j)] = N * jhi;
  }
  __int128 box = 1;
  for (int j = 0; j < m; ++j)
    box *= (hi[static_cast<size_t>(j)] - lo[static_cast<size_t>(j)] + 1);
  if (box > max_points)
    throw EnumerationLimitError("lattice point enumeration exceeds guard");
  LatticeVector a = lo;
  for (;;) {
    bool ok = true;
    for (const auto& e : P.equations())
      if (dot(e.w, a) + N * e.c != 0) {
        ok = false;
        break;
      }
    if (ok)
      for (const auto& r : P.halfspaces())
        if (dot(r.u, a) + N * r.lambda < 0) {
          ok = false;
          break;
        }
    if (ok) fn(a);
    int j = m - 1;
    for (; j >= 0; --j) {
      if (a[static_cast<size_t>(j)] < hi[static_cast<size_t>(j)]) {
        ++a[static_cast<size_t>(j)];
        for (int jj = j + 1; jj < m; ++jj)
          a[static_cast<size_t>(jj)] = lo[static_cast<size_t>(jj)];
        break;
      }
    }
    if (j < 0) break;
  }
}

}  // namespace

std::vector<LatticeVector> LatticePolytope::lattice_points(
    long long N, long long max_points) const {
  if (N < 1) throw DomainError("dilation factor must be positive");
  std::vector<LatticeVector> out;
  for_each_point_impl(*this, N,
                      [&](const LatticeVector& a) { out.push_back(a); },
                      max_points);
  return out;
}

long long LatticePolytope::count_lattice_points(long long N) const {
  if (N < 1) throw DomainError("dilation factor must be positive");
  long long c = 0;
  for_each_point_impl(*this, N, [&](const LatticeVector&) { ++c; },
                      200000000);
  return c;
}

void LatticePolytope::for_each_lattice_point(
    long long N, const std::function<void(const LatticeVector&)>& fn,
    long long max_points) const {
  if (N < 1) throw DomainError("dilation factor must be positive");
  for_each_point_impl(*this, N, fn, max_points);
}

EhrhartPolynomial LatticePolytope::ehrhart_fit() const {
  const int n = n_;
  std::vector<std::vector<Rational>> M(static_cast<size_t>(n) + 1);
  for (long long N = 1; N <= n + 1; ++N) {
    auto& row = M[static_cast<size_t>(N - 1)];
    for (int k = 0; k <= n; ++k) {
      Rational pw(1);
      for (int e = 0; e < n - k; ++e) pw *= Rational(N);
      row.push_back(pw);
    }
    row.push_back(Rational(count_lattice_points(N)));
  }
  const size_t K = static_cast<size_t>(n) + 1;
  for (size_t col = 0; col < K; ++col) {
    size_t piv = K;
    for (size_t r2 = col; r2 < K; ++r2)
      if (!M[r2][col].is_zero()) {
        piv = r2;
        break;
      }
    if (piv == K) throw SolveError("ehrhart: singular fit");
    std::swap(M[col], M[piv]);
    for (size_t r2 = 0; r2 < K; ++r2) {
      if (r2 == col || M[r2][col].is_zero()) continue;
      Rational f = M[r2][col] / M[col][col];
      for (size_t cc = col; cc <= K; ++cc) M[r2][cc] -= f * M[col][cc];
    }
  }
  EhrhartPolynomial e;
  for (size_t k = 0; k < K; ++k) e.coeffs.push_back(M[k][K] / M[k][k]);
  return e;
}

Rational LatticePolytope::volume_exact() const {
  if (n_ == 0) return Rational(1);
  if (n_ == 1) {
    auto d = primitive(sub(verts_.back(), verts_.front()));
    auto full = sub(verts_.back(), verts_.front());
    for (int j = 0; j < m_; ++j)
      if (d[static_cast<size_t>(j)] != 0)
        return Rational(full[static_cast<size_t>(j)] /
                        d[static_cast<size_t>(j)]);
    throw SolveError("degenerate segment");
  }
  if (n_ == 2) {
    // Project (identity for m == 2) and shoelace the angular ordering.
    int drop = -1;
    long long wdrop = 1;
    if (m_ == 3) {
      const auto& w = eqs_[0].w;
      drop = 0;
      for (int j = 1; j < 3; ++j)
        if (std::llabs(w[static_cast<size_t>(j)]) >
            std::llabs(w[static_cast<size_t>(drop)]))
          drop = j;
      wdrop = w[static_cast<size_t>(drop)];
    }
    auto proj = [&](const LatticeVector& v) -> std::array<long long, 2> {
      if (m_ == 2) return {v[0], v[1]};
      std::array<long long, 2> q{};
      int k = 0;
      for (int j = 0; j < 3; ++j)
        if (j != drop) q[static_cast<size_t>(k++)] = v[static_cast<size_t>(j)];
      return q;
    };
    std::vector<std::array<long long, 2>> pv;
    for (const auto& v : verts_) pv.push_back(proj(v));
    double cx = 0, cy = 0;
    for (const auto& q : pv) {
      cx += static_cast<double>(q[0]);
      cy += static_cast<double>(q[1]);
    }
    cx /= static_cast<double>(pv.size());
    cy /= static_cast<double>(pv.size());
    std::sort(pv.begin(), pv.end(),
              [&](const std::array<long long, 2>& a,
                  const std::array<long long, 2>& b) {
                return std::atan2(static_cast<double>(a[1]) - cy,
                                  static_cast<double>(a[0]) - cx) <
                       std::atan2(static_cast<double>(b[1]) - cy,
                                  static_cast<double>(b[0]) - cx);
              });
    long long two_area = 0;
    for (size_t i = 0; i < pv.size(); ++i) {
      const auto& a = pv[i];
      const auto& b = pv[(i + 1) % pv.size()];
      two_area += a[0] * b[1] - b[0] * a[1];
    }
    two_area = std::llabs(two_area);
    return Rational(two_area, 2 * std::llabs(wdrop));
  }
  // n == 3: fan of tetrahedra from the vertex centroid over triangulated
  // facets; the centroid is interior, so every signed volume is positive.
  std::vector<Rational> o(3, Rational(0));
  for (const auto& v : verts_)
    for (int j = 0; j < 3; ++j)
      o[static_cast<size_t>(j)] += Rational(v[static_cast<size_t>(j)]);
  for (int j = 0; j < 3; ++j)
    o[static_cast<size_t>(j)] /= Rational(static_cast<long long>(verts_.size()));
  Rational vol(0);
  for (size_t ri = 0; ri < rows_.size(); ++ri) {
    std::vector<LatticeVector> fv;
    for (const auto& v : verts_)
      if (dot(rows_[ri].u, v) + rows_[ri].lambda == 0) fv.push_back(v);
    // Cyclic order within the facet plane.
    const auto& u = rows_[ri].u;
    int drop = 0;
    for (int j = 1; j < 3; ++j)
      if (std::llabs(u[static_cast<size_t>(j)]) >
          std::llabs(u[static_cast<size_t>(drop)]))
        drop = j;
    double cx = 0, cy = 0;
    auto proj = [&](const LatticeVector& v) -> std::array<double, 2> {
      std::array<double, 2> q{};
      int k = 0;
      for (int j = 0; j < 3; ++j)
        if (j != drop)
          q[static_cast<size_t>(k++)] =
              static_cast<double>(v[static_cast<size_t>(j)]);
      return q;
    };
    for (const auto& v : fv) {
      auto q = proj(v);
      cx += q[0];
      cy += q[1];
    }
    cx /= static_cast<double>(fv.size());
    cy /= static_cast<double>(fv.size());
    std::sort(fv.begin(), fv.end(),
              [&](const LatticeVector& a, const LatticeVector& b) {
                auto qa = proj(a), qb = proj(b);
                return std::atan2(qa[1] - cy, qa[0] - cx) <
                       std::atan2(qb[1] - cy, qb[0] - cx);
              });
    for (size_t t = 1; t + 1 < fv.size(); ++t) {
      std::array<std::vector<Rational>, 3> e;
      const LatticeVector* tri[3] = {&fv[0], &fv[t], &fv[t + 1]};
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 3; ++j)
          e[static_cast<size_t>(a)].push_back(
              Rational((*tri[a])[static_cast<size_t>(j)]) -
              o[static_cast<size_t>(j)]);
      Rational det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                     e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                     e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
      if (det < Rational(0)) det = -det;
      vol += det / Rational(6);
    }
  }
  return vol;
}

LatticePolytope LatticePolytope::dilate(long long k) const {
  if (k < 1) throw DomainError("dilation factor must be positive");
  std::vector<LatticeVector> vs;
  for (const auto& v : verts_) {
    LatticeVector w(v);
    for (long long& x : w) x *= k;
    vs.push_back(w);
  }
  return from_vertices(m_, p_ * k, vs);
}

std::vector<std::vector<double>> LatticePolytope::tangent_basis_d(
    int face_id) const {
  return orthonormalize(face(face_id).tangent_exact);
}

std::vector<std::vector<double>> LatticePolytope::cone_generators_d(
    int face_id) const {
  std::vector<std::vector<double>> out;
  for (const auto& g : face(face_id).cone_generators)
    out.push_back(normalize(std::vector<double>(g.begin(), g.end())));
  return out;
}

std::vector<std::vector<double>> LatticePolytope::hull_tangent_basis_d() const {
  return orthonormalize(faces_[0].tangent_exact);
}

std::vector<double> LatticePolytope::vertex_d(int vertex_id) const {
  const auto& v = verts_.at(static_cast<size_t>(vertex_id));
  return std::vector<double>(v.begin(), v.end());
}

std::vector<double> LatticePolytope::rel_interior_point_d(int face_id) const {
  std::vector<double> out;
  for (const auto& r : face(face_id).rel_interior_point)
    out.push_back(r.to_double());
  return out;
}

LatticePolytope LatticePolytope::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidPolytopeError(std::string("bad polytope JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("m") || !j.contains("p") ||
      !j.contains("vertices"))
    throw InvalidPolytopeError("polytope JSON needs m, p, vertices");
  if (!j["m"].is_number_integer() || !j["p"].is_number_integer() ||
      !j["vertices"].is_array())
    throw InvalidPolytopeError("polytope JSON fields have wrong types");
  std::vector<LatticeVector> vs;
  for (const auto& row : j["vertices"]) {
    if (!row.is_array())
      throw InvalidPolytopeError("vertex rows must be arrays");
    LatticeVector v;
    for (const auto& x : row) {
      if (!x.is_number_integer())
        throw InvalidPolytopeError("vertex coordinates must be integers");
      v.push_back(x.get<long long>());
    }
    vs.push_back(v);
  }
  return from_vertices(j["m"].get<int>(), j["p"].get<long long>(), vs);
}

LatticePolytope LatticePolytope::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidPolytopeError("cannot open polytope file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string LatticePolytope::to_json() const {
  nlohmann::json j;
  j["m"] = m_;
  j["p"] = p_;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : verts_) j["vertices"].push_back(v);
  return j.dump(2);
}

namespace shapes {

LatticePolytope unit_square() {
  return LatticePolytope::from_vertices(2, 2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
}

LatticePolytope simplex(int m, long long p) {
  std::vector<LatticeVector> vs;
  vs.push_back(LatticeVector(static_cast<size_t>(m), 0));
  for (int j = 0; j < m; ++j) {
    LatticeVector v(static_cast<size_t>(m), 0);
    v[static_cast<size_t>(j)] = p;
    vs.push_back(v);
  }
  return LatticePolytope::from_vertices(m, p, vs);
}

LatticePolytope trapezoid(long long n) {
  return LatticePolytope::from_vertices(
      2, n + 1, {{0, 0}, {n + 1, 0}, {0, 1}, {1, 1}});
}

LatticePolytope segment(long long a, long long b, long long p) {
  return LatticePolytope::from_vertices(1, p, {{a}, {b}});
}

LatticePolytope unit_cube() {
  std::vector<LatticeVector> vs;
  for (long long x = 0; x <= 1; ++x)
    for (long long y = 0; y <= 1; ++y)
      for (long long z = 0; z <= 1; ++z) vs.push_back({x, y, z});
  return LatticePolytope::from_vertices(3, 3, vs);
}

LatticePolytope square_pyramid() {
  return LatticePolytope::from_vertices(
      3, 3, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}});
}

LatticePolytope point(int m, long long p, const LatticeVector& v) {
  return LatticePolytope::from_vertices(m, p, {v});
}

}  // namespace shapes

}  // namespace polyzero
