#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace twistdn {

// Planar cross-section of the waveguide. All shapes are centered at the
// origin; `delta()` is the largest distance from the origin to a point of
// the closed region, which controls the admissible twist rates.
struct CrossSection {
  enum class Kind { UnitDisc, Ellipse, Rectangle, Polygon };

  Kind kind = Kind::UnitDisc;
  Eigen::Vector2d semi_axes{1.0, 1.0};             // ellipse
  double width = 0.0, height = 0.0;                // rectangle
  std::vector<Eigen::Vector2d> polygon_vertices;   // polygon, CCW or CW

  static CrossSection unit_disc();
  static CrossSection ellipse(double rx, double ry);
  static CrossSection rectangle(double width, double height);
  static CrossSection polygon(std::vector<Eigen::Vector2d> vertices);

  // max_{x' in closure} |x'|
  double delta() const;
};

// Triangulated cross-section. Triangles are positively oriented, the
// boundary is a single closed CCW loop, and `arclength[i]` is the cumulative
// polygonal arclength of boundary vertex i (starting at 0, wrapping at
// `perimeter`).
struct Mesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;
  std::vector<int> boundary_loop;
  std::vector<double> arclength;
  double perimeter = 0.0;
  double h = 0.0;  // max edge length

  int num_vertices() const { return static_cast<int>(vertices.rows()); }
  int num_triangles() const { return static_cast<int>(triangles.rows()); }
  int num_boundary() const { return static_cast<int>(boundary_loop.size()); }

  // Edges (loop[i], loop[i+1 mod n]) along the boundary loop.
  std::vector<std::pair<int, int>> boundary_edges() const;

  // Marks boundary vertices; size num_vertices().
  std::vector<bool> boundary_flags() const;

  double max_vertex_radius() const;
};

// Builds a mesh with max edge length <= 1.5 * target_h. Disc and ellipse use
// a structured polar grid, radially graded toward the boundary, with a fixed
// sector count so the mesh symmetry group does not alias low-order boundary
// Fourier modes; rectangles use a split structured grid; polygons use ear
// clipping followed by subdivision, Delaunay edge flips and smoothing.
// Throws std::invalid_argument for degenerate sections.
Mesh build_mesh(const CrossSection& section, double target_h);

// Structural checks for the Mesh invariants (orientation, single closed
// boundary loop, interior edges shared by exactly two triangles, strictly
// increasing arclength). Returns an empty string when valid, otherwise a
// diagnostic.
std::string validate_mesh(const Mesh& mesh);

// Plain-text mesh format ("twistdn-mesh v1"). Writes are atomic
// (temp + rename).
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

// Rotation of angle xi.
Eigen::Matrix2d rotation(double xi);

// Affine twist theta(x3) = rate * x3 + offset.
struct TwistMap {
  double rate = 0.0;
  double offset = 0.0;

  double theta(double x3) const { return rate * x3 + offset; }
};

// Maps a point of the straight cylinder onto the twisted one:
// (x', x3) -> (R_{theta(x3)} x', x3).
Eigen::Vector3d twist_map(const TwistMap& tm, const Eigen::Vector3d& x);

// Inverse of twist_map: brings a twisted-picture point back to the straight
// cylinder. The third coordinate is preserved.
Eigen::Vector3d straighten_map(const TwistMap& tm, const Eigen::Vector3d& y);

// Quadratic polynomial p(y) = c + b.y + y^T Q y on R^3 (Q symmetric).
struct QuadraticPolynomial {
  double c = 0.0;
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();

  double operator()(const Eigen::Vector3d& y) const;
  Eigen::Vector3d gradient(const Eigen::Vector3d& y) const;  // b + 2 Q y
  Eigen::Matrix3d hessian() const { return 2.0 * Q; }
  double laplacian() const { return 2.0 * Q.trace(); }
  bool is_harmonic() const;
};

// Discrete weak residual, at the slice x3 = x3_slice, of the straightened
// equation for u = v o (twist map), where v must be harmonic. The residual
// is the l2 norm over interior nodes of the weak form assembled with
// degree-4 quadrature (exact for these polynomial integrands), so it
// measures pure P1 interpolation error and decays at O(h) or better.
// Throws std::invalid_argument when v is not harmonic.
double harmonic_pullback_residual(const TwistMap& tm, const Mesh& mesh,
                                  const QuadraticPolynomial& v,
                                  double x3_slice);

}  // namespace twistdn
