#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polyzero/rational.hpp"

namespace polyzero {

using LatticeVector = std::vector<long long>;

/// Inward-facing halfspace { x : <x,u> + lambda >= 0 } with primitive
/// integer normal u. Equality holds exactly on the corresponding facet.
struct Halfspace {
  LatticeVector u;
  long long lambda = 0;
  bool operator==(const Halfspace&) const = default;
};

/// Affine equation { x : <x,w> + c == 0 } satisfied by every point of the
/// polytope; present only when the polytope is not full-dimensional.
struct AffineEquation {
  LatticeVector w;
  long long c = 0;
  bool operator==(const AffineEquation&) const = default;
};

/// One closed face of the polytope, identified by the set of facet
/// inequalities active on it. Ids are stable: faces are ordered by
/// decreasing dimension, ties broken by the lex order of their vertex-index
/// lists. Face 0 is always the polytope itself (empty active set).
struct Face {
  int id = -1;
  std::vector<int> active_set;       // indices into halfspaces(), sorted
  int dim = 0;                       // r = dim of the face
  std::vector<int> vertex_ids;       // indices into vertices(), sorted
  std::vector<LatticeVector> tangent_exact;  // integer basis of T_F
  std::vector<LatticeVector> cone_generators;  // outward normals -u_j, j in active_set
  std::vector<Rational> rel_interior_point;    // vertex centroid, exact
};

enum class ConePosition { Outside, Boundary, Interior };

/// Ehrhart polynomial sum_k a_k N^{n-k} with exact rational coefficients,
/// indexed so that coeffs[0] is the leading (volume) coefficient.
struct EhrhartPolynomial {
  std::vector<Rational> coeffs;
  Rational eval(long long N) const;
};

/// Convex lattice polytope P contained in the dilate p*Sigma of the standard
/// simplex Sigma in R^m, m in {1,2,3}. Construction computes the exact
/// convex hull, facet description, and full face lattice in integer
/// arithmetic. Non-simple polytopes construct fine; routines that need a
/// simple normal fan throw NonSimplePolytopeError themselves.
class LatticePolytope {
 public:
  /// Builds the polytope from (possibly redundant, unsorted) lattice points.
  static LatticePolytope from_vertices(int m, long long p,
                                       const std::vector<LatticeVector>& pts);

  /// Parses {"m": int, "p": int, "vertices": [[int,...],...]}.
  static LatticePolytope from_json(const std::string& text);
  static LatticePolytope load(const std::string& path);
  std::string to_json() const;

  int ambient_dim() const { return m_; }
  long long degree_bound() const { return p_; }
  int dim() const { return n_; }
  bool is_simple() const { return simple_; }

  /// Extreme points only, lex-sorted.
  const std::vector<LatticeVector>& vertices() const { return verts_; }
  const std::vector<Halfspace>& halfspaces() const { return rows_; }
  const std::vector<AffineEquation>& equations() const { return eqs_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(int id) const { return faces_.at(id); }
  /// Id of the face that is P itself (always 0).
  int interior_face_id() const { return 0; }

  /// True when every vertex of the face has x_j == 0 for a common j, or
  /// coordinate sum == p; such faces lie in the boundary of p*Sigma.
  bool face_in_simplex_boundary(int face_id) const;

  /// Exact membership in the closed polytope.
  bool contains(const std::vector<Rational>& x) const;
  /// Membership with slack: every inequality satisfied up to -tol (normals
  /// are not normalized; tol is in raw <x,u>+lambda units).
  bool contains(const std::vector<double>& x, double tol) const;
  /// Strict interior relative to the affine hull, with margin tol.
  bool strictly_inside(const std::vector<double>& x, double tol) const;

  /// The unique face whose relative interior contains x, exact arithmetic.
  int face_of(const std::vector<Rational>& x) const;

  /// Position of w relative to the normal cone C_F of the face. The cone is
  /// span(affine-hull normals) + nonneg combinations of the outward facet
  /// normals in cone_generators. w is split into its affine-hull-normal and
  /// tangent parts; the tangent part is solved against the generators by
  /// least squares. Outside: residual off the span, or some coefficient
  /// below -tol; Boundary: inside with some coefficient within tol of 0;
  /// Interior otherwise. Requires a simple polytope.
  ConePosition normal_cone_contains(int face_id, const std::vector<double>& w,
                                    double tol = 1e-9) const;

  /// Lattice points of the dilate N*P, lex-sorted. Guarded by max_points.
  std::vector<LatticeVector> lattice_points(long long N,
                                            long long max_points = 200000000) const;
  long long count_lattice_points(long long N) const;
  /// Streams the lattice points of N*P in lex order without storing them.
  void for_each_lattice_point(
      long long N, const std::function<void(const LatticeVector&)>& fn,
      long long max_points = 200000000) const;

  /// Fits the Ehrhart polynomial through the exact counts at N = 1..dim+1.
  EhrhartPolynomial ehrhart_fit() const;

  /// Lattice-normalized n-volume of P, computed from the vertex description
  /// (independently of the Ehrhart fit): shoelace for polygons, tetrahedral
  /// decomposition for m == 3, primitive segment length for dim 1.
  Rational volume_exact() const;

  LatticePolytope dilate(long long k) const;

  /// Orthonormal double-precision basis of the face tangent space.
  std::vector<std::vector<double>> tangent_basis_d(int face_id) const;
  /// Cone generators as doubles, normalized to unit length.
  std::vector<std::vector<double>> cone_generators_d(int face_id) const;
  /// Orthonormal basis of the affine hull's tangent space (size dim()).
  std::vector<std::vector<double>> hull_tangent_basis_d() const;

  std::vector<double> vertex_d(int vertex_id) const;
  std::vector<double> rel_interior_point_d(int face_id) const;

 private:
  LatticePolytope() = default;
  void build_faces();

  int m_ = 0;
  long long p_ = 0;
  int n_ = 0;
  bool simple_ = false;
  std::vector<LatticeVector> verts_;
  std::vector<Halfspace> rows_;
  std::vector<AffineEquation> eqs_;
  std::vector<Face> faces_;
};

/// Convenience constructors for the polytopes used across the test suite.
namespace shapes {

/// Unit square [0,1]^2, p = 2.
LatticePolytope unit_square();
/// Dilated standard simplex p*Sigma in dimension m.
LatticePolytope simplex(int m, long long p);
/// Slant-top trapezoid with vertices (0,0), (n+1,0), (0,1), (1,1) and
/// p = n+1. n = 1 is the square-plus-triangle trapezoid.
LatticePolytope trapezoid(long long n);
/// Segment [a,b] on the line, inside [0,p].
LatticePolytope segment(long long a, long long b, long long p);
/// Unit cube [0,1]^3, p = 3.
LatticePolytope unit_cube();
/// Square pyramid (base z=0 unit square, apex (0,0,1)), p = 3. Not simple.
LatticePolytope square_pyramid();
/// Single lattice point {v}.
LatticePolytope point(int m, long long p, const LatticeVector& v);

}  // namespace shapes

}  // namespace polyzero
