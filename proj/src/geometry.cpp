#include "twistdn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "twistdn/conductivity.hpp"
#include "twistdn/quadrature.hpp"

namespace twistdn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double signed_polygon_area(const std::vector<Eigen::Vector2d>& v) {
  double area = 0.0;
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % n];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * area;
}

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.x() * v.y() - u.y() * v.x();
}

// Proper intersection of open segments (p1,p2) and (q1,q2).
bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double triangle_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c) {
  return 0.5 * cross2(b - a, c - a);
}

void compute_edge_stats(Mesh& mesh) {
  double hmax = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int i = mesh.triangles(t, e);
      const int j = mesh.triangles(t, (e + 1) % 3);
      hmax = std::max(hmax,
                      (mesh.vertices.row(i) - mesh.vertices.row(j)).norm());
    }
  }
  mesh.h = hmax;
}

// Extracts the boundary loop (edges incident to exactly one triangle),
// orients it CCW and fills the cumulative arclength.
void finalize_boundary(Mesh& mesh) {
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int e = 0; e < 3; ++e) {
      int i = mesh.triangles(t, e);
      int j = mesh.triangles(t, (e + 1) % 3);
      edge_count[{std::min(i, j), std::max(i, j)}]++;
    }
  }
  std::map<int, std::vector<int>> adj;
  for (const auto& [edge, count] : edge_count) {
    if (count == 1) {
      adj[edge.first].push_back(edge.second);
      adj[edge.second].push_back(edge.first);
    } else if (count != 2) {
      throw std::runtime_error("mesh: edge shared by " +
                               std::to_string(count) + " triangles");
    }
  }
  if (adj.empty()) throw std::runtime_error("mesh: no boundary edges found");
  for (const auto& [v, nb] : adj) {
    if (nb.size() != 2)
      throw std::runtime_error("mesh: boundary vertex " + std::to_string(v) +
                               " has " + std::to_string(nb.size()) +
                               " boundary neighbors");
  }

  std::vector<int> loop;
  const int start = adj.begin()->first;
  int prev = -1, cur = start;
  do {
    loop.push_back(cur);
    const auto& nb = adj[cur];
    int next = (nb[0] == prev) ? nb[1] : nb[0];
    prev = cur;
    cur = next;
  } while (cur != start && loop.size() <= adj.size());
  if (loop.size() != adj.size())
    throw std::runtime_error("mesh: boundary is not a single closed loop");

  // Orient CCW by the signed area of the loop polygon.
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(loop.size());
  for (int v : loop) pts.emplace_back(mesh.vertices.row(v).transpose());
  if (signed_polygon_area(pts) < 0.0) {
    std::reverse(loop.begin() + 1, loop.end());
  }

  mesh.boundary_loop = loop;
  mesh.arclength.assign(loop.size(), 0.0);
  double s = 0.0;
  for (size_t i = 0; i < loop.size(); ++i) {
    mesh.arclength[i] = s;
    const int u = loop[i];
    const int v = loop[(i + 1) % loop.size()];
    s += (mesh.vertices.row(u) - mesh.vertices.row(v)).norm();
  }
  mesh.perimeter = s;
}

// Structured polar mesh of the disc of radius R. The sector count is fixed
// at 18 so that the mesh symmetry group only couples boundary Fourier modes
// k and k +- 18m, keeping DN matrices clean for |k| <= 8. Ring radii are
// graded toward the boundary (exponent p), where the curvature of the
// angular harmonics concentrates; the largest radial gap stays <= target_h.
Mesh polar_disc_mesh(double R, double target_h) {
  const int sectors = 18;
  const double p = 1.4;
  const int n = std::max(1, static_cast<int>(std::ceil(p * R / target_h)));

  Mesh mesh;
  std::vector<Eigen::Vector2d> verts;
  verts.emplace_back(0.0, 0.0);
  std::vector<int> ring_start(n + 1, 0);
  for (int j = 1; j <= n; ++j) {
    ring_start[j] = static_cast<int>(verts.size());
    const double r = R * (1.0 - std::pow(1.0 - double(j) / n, p));
    const int m = sectors * j;
    for (int i = 0; i < m; ++i) {
      const double th = 2.0 * kPi * i / m;
      verts.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }

  std::vector<Eigen::Vector3i> tris;
  // Center fan.
  for (int q = 0; q < sectors; ++q) {
    const int o0 = ring_start[1] + q;
    const int o1 = ring_start[1] + (q + 1) % sectors;
    tris.emplace_back(0, o0, o1);
  }
  // Strips between rings j and j+1, stitched per sector by angle.
  for (int j = 1; j < n; ++j) {
    const int mi = sectors * j;
    const int mo = sectors * (j + 1);
    for (int q = 0; q < sectors; ++q) {
      auto inner = [&](int i) { return ring_start[j] + (q * j + i) % mi; };
      auto outer = [&](int i) {
        return ring_start[j + 1] + (q * (j + 1) + i) % mo;
      };
      auto inner_angle = [&](int i) { return (q * j + i) / double(mi); };
      auto outer_angle = [&](int i) { return (q * (j + 1) + i) / double(mo); };
      int ii = 0, oi = 0;
      while (ii < j || oi < j + 1) {
        const bool advance_outer =
            (ii == j) ||
            (oi < j + 1 && outer_angle(oi + 1) <= inner_angle(ii + 1));
        if (advance_outer) {
          tris.emplace_back(inner(ii), outer(oi), outer(oi + 1));
          ++oi;
        } else {
          tris.emplace_back(inner(ii), outer(oi), inner(ii + 1));
          ++ii;
        }
      }
    }
  }

  mesh.vertices.resize(static_cast<int>(verts.size()), 2);
  for (size_t i = 0; i < verts.size(); ++i)
    mesh.vertices.row(static_cast<int>(i)) = verts[i].transpose();
  mesh.triangles.resize(static_cast<int>(tris.size()), 3);
  for (size_t t = 0; t < tris.size(); ++t)
    mesh.triangles.row(static_cast<int>(t)) = tris[t].transpose();

  finalize_boundary(mesh);
  compute_edge_stats(mesh);
  return mesh;
}

Mesh rectangle_mesh(double width, double height, double target_h) {
  const int nx = std::max(1, static_cast<int>(std::ceil(width / target_h)));
  const int ny = std::max(1, static_cast<int>(std::ceil(height / target_h)));
  const double dx = width / nx, dy = height / ny;

  Mesh mesh;
  mesh.vertices.resize((nx + 1) * (ny + 1), 2);
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.row(vid(i, j)) << -0.5 * width + i * dx,
          -0.5 * height + j * dy;

  mesh.triangles.resize(2 * nx * ny, 3);
  int t = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.row(t++) << vid(i, j), vid(i + 1, j), vid(i + 1, j + 1);
      mesh.triangles.row(t++) << vid(i, j), vid(i + 1, j + 1), vid(i, j + 1);
    }
  }
  finalize_boundary(mesh);
  compute_edge_stats(mesh);
  return mesh;
}

struct WorkMesh {
  std::vector<Eigen::Vector2d> verts;
  std::vector<Eigen::Vector3i> tris;
};

// Ear clipping of a simple CCW polygon.
std::vector<Eigen::Vector3i> ear_clip(const std::vector<Eigen::Vector2d>& poly) {
  const int n = static_cast<int>(poly.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<Eigen::Vector3i> tris;

  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale * scale;

  // Closed-triangle containment: a vertex exactly on a candidate diagonal
  // must block the ear, or it would end up hanging on an edge.
  auto point_in_tri = [tol](const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const double d1 = cross2(b - a, p - a);
    const double d2 = cross2(c - b, p - b);
    const double d3 = cross2(a - c, p - c);
    return d1 >= -tol && d2 >= -tol && d3 >= -tol;
  };

  int guard = 0;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int i = 0; i < m; ++i) {
      const int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      const auto &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (triangle_area(a, b, c) <= 1e-14) continue;
      bool contains_other = false;
      for (int k : idx) {
        if (k == ia || k == ib || k == ic) continue;
        if (point_in_tri(poly[k], a, b, c)) {
          contains_other = true;
          break;
        }
      }
      if (contains_other) continue;
      tris.emplace_back(ia, ib, ic);
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 100000)
      throw std::invalid_argument("polygon: ear clipping failed (degenerate or self-intersecting input)");
  }
  tris.emplace_back(idx[0], idx[1], idx[2]);
  return tris;
}

void subdivide4(WorkMesh& wm) {
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int i, int j) {
    auto key = std::make_pair(std::min(i, j), std::max(i, j));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(wm.verts.size());
    wm.verts.push_back(0.5 * (wm.verts[i] + wm.verts[j]));
    midpoint[key] = id;
    return id;
  };
  std::vector<Eigen::Vector3i> out;
  out.reserve(4 * wm.tris.size());
  for (const auto& t : wm.tris) {
    const int a = t[0], b = t[1], c = t[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.emplace_back(a, ab, ca);
    out.emplace_back(ab, b, bc);
    out.emplace_back(ca, bc, c);
    out.emplace_back(ab, bc, ca);
  }
  wm.tris = std::move(out);
}

// Lawson edge flips toward the Delaunay criterion.
void delaunay_flips(WorkMesh& wm) {
  for (int pass = 0; pass < 30; ++pass) {
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;
    for (int t = 0; t < static_cast<int>(wm.tris.size()); ++t) {
      for (int e = 0; e < 3; ++e) {
        const int i = wm.tris[t][e], j = wm.tris[t][(e + 1) % 3];
        edges[{std::min(i, j), std::max(i, j)}].push_back({t, wm.tris[t][(e + 2) % 3]});
      }
    }
    int flips = 0;
    std::set<int> touched;
    for (const auto& [edge, inc] : edges) {
      if (inc.size() != 2) continue;
      const auto [t1, w1] = inc[0];
      const auto [t2, w2] = inc[1];
      if (touched.count(t1) || touched.count(t2)) continue;
      const auto &pu = wm.verts[edge.first], &pv = wm.verts[edge.second];
      const auto &p1 = wm.verts[w1], &p2 = wm.verts[w2];
      auto angle = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c) {
        return std::atan2(std::abs(cross2(a - b, c - b)), (a - b).dot(c - b));
      };
      if (angle(pu, p1, pv) + angle(pu, p2, pv) <= kPi + 1e-12) continue;
      // Flip only if the resulting triangles are positively oriented.
      if (triangle_area(p1, p2, pv) <= 1e-14 ||
          triangle_area(p2, p1, pu) <= 1e-14)
        continue;
      wm.tris[t1] << w1, w2, edge.second;
      wm.tris[t2] << w2, w1, edge.first;
      touched.insert(t1);
      touched.insert(t2);
      ++flips;
    }
    if (flips == 0) break;
  }
}

void smooth_interior(WorkMesh& wm, const std::vector<bool>& on_boundary,
                     int passes) {
  std::vector<std::vector<int>> vtx_tris(wm.verts.size());
  for (int t = 0; t < static_cast<int>(wm.tris.size()); ++t)
    for (int e = 0; e < 3; ++e) vtx_tris[wm.tris[t][e]].push_back(t);

  for (int pass = 0; pass < passes; ++pass) {
    std::vector<std::set<int>> nb(wm.verts.size());
    for (const auto& t : wm.tris) {
      for (int e = 0; e < 3; ++e) {
        nb[t[e]].insert(t[(e + 1) % 3]);
        nb[t[e]].insert(t[(e + 2) % 3]);
      }
    }
    for (size_t v = 0; v < wm.verts.size(); ++v) {
      if (on_boundary[v] || nb[v].empty()) continue;
      Eigen::Vector2d avg = Eigen::Vector2d::Zero();
      for (int u : nb[v]) avg += wm.verts[u];
      avg /= static_cast<double>(nb[v].size());
      const Eigen::Vector2d old = wm.verts[v];
      wm.verts[v] = 0.5 * (old + avg);
      for (int t : vtx_tris[v]) {
        if (triangle_area(wm.verts[wm.tris[t][0]], wm.verts[wm.tris[t][1]],
                          wm.verts[wm.tris[t][2]]) <= 1e-14) {
          wm.verts[v] = old;
          break;
        }
      }
    }
  }
}

Mesh polygon_mesh(const std::vector<Eigen::Vector2d>& input, double target_h) {
  if (input.size() < 3)
    throw std::invalid_argument("polygon: needs at least 3 vertices");
  std::vector<Eigen::Vector2d> poly = input;
  const double area = signed_polygon_area(poly);
  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.norm());
  if (std::abs(area) < 1e-12 * std::max(1.0, scale * scale))
    throw std::invalid_argument("polygon: zero or near-zero area");
  if (area < 0.0) std::reverse(poly.begin(), poly.end());
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j],
                             poly[(j + 1) % n]))
        throw std::invalid_argument("polygon: self-intersecting boundary");
    }
  }

  WorkMesh wm;
  wm.verts = poly;
  wm.tris = ear_clip(poly);

  auto max_edge = [&]() {
    double h = 0.0;
    for (const auto& t : wm.tris)
      for (int e = 0; e < 3; ++e)
        h = std::max(h, (wm.verts[t[e]] - wm.verts[t[(e + 1) % 3]]).norm());
    return h;
  };
  int guard = 0;
  while (max_edge() > target_h && ++guard < 12) subdivide4(wm);

  delaunay_flips(wm);

  // Boundary vertices = endpoints of edges with a single incident triangle.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : wm.tris)
    for (int e = 0; e < 3; ++e) {
      const int i = t[e], j = t[(e + 1) % 3];
      edge_count[{std::min(i, j), std::max(i, j)}]++;
    }
  std::vector<bool> on_boundary(wm.verts.size(), false);
  for (const auto& [edge, count] : edge_count)
    if (count == 1) on_boundary[edge.first] = on_boundary[edge.second] = true;

  smooth_interior(wm, on_boundary, 4);
  delaunay_flips(wm);

  Mesh mesh;
  mesh.vertices.resize(static_cast<int>(wm.verts.size()), 2);
  for (size_t i = 0; i < wm.verts.size(); ++i)
    mesh.vertices.row(static_cast<int>(i)) = wm.verts[i].transpose();
  mesh.triangles.resize(static_cast<int>(wm.tris.size()), 3);
  for (size_t t = 0; t < wm.tris.size(); ++t)
    mesh.triangles.row(static_cast<int>(t)) = wm.tris[t].transpose();
  finalize_boundary(mesh);
  compute_edge_stats(mesh);
  return mesh;
}

}  // namespace

CrossSection CrossSection::unit_disc() {
  CrossSection s;
  s.kind = Kind::UnitDisc;
  return s;
}

CrossSection CrossSection::ellipse(double rx, double ry) {
  if (!(rx > 0.0) || !(ry > 0.0))
    throw std::invalid_argument("ellipse: semi-axes must be positive");
  CrossSection s;
  s.kind = Kind::Ellipse;
  s.semi_axes << rx, ry;
  return s;
}

CrossSection CrossSection::rectangle(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("rectangle: sides must be positive");
  CrossSection s;
  s.kind = Kind::Rectangle;
  s.width = width;
  s.height = height;
  return s;
}

CrossSection CrossSection::polygon(std::vector<Eigen::Vector2d> vertices) {
  CrossSection s;
  s.kind = Kind::Polygon;
  s.polygon_vertices = std::move(vertices);
  return s;
}

double CrossSection::delta() const {
  switch (kind) {
    case Kind::UnitDisc:
      return 1.0;
    case Kind::Ellipse:
      return semi_axes.maxCoeff();
    case Kind::Rectangle:
      return std::hypot(0.5 * width, 0.5 * height);
    case Kind::Polygon: {
      // The region is contained in the convex hull of its vertices, where
      // |x'| attains its maximum at a vertex.
      double d = 0.0;
      for (const auto& p : polygon_vertices) d = std::max(d, p.norm());
      return d;
    }
  }
  return 0.0;
}

std::vector<std::pair<int, int>> Mesh::boundary_edges() const {
  std::vector<std::pair<int, int>> edges;
  const int n = num_boundary();
  edges.reserve(n);
  for (int i = 0; i < n; ++i)
    edges.emplace_back(boundary_loop[i], boundary_loop[(i + 1) % n]);
  return edges;
}

std::vector<bool> Mesh::boundary_flags() const {
  std::vector<bool> flags(num_vertices(), false);
  for (int v : boundary_loop) flags[v] = true;
  return flags;
}

double Mesh::max_vertex_radius() const {
  double r = 0.0;
  for (int i = 0; i < num_vertices(); ++i)
    r = std::max(r, vertices.row(i).norm());
  return r;
}

Mesh build_mesh(const CrossSection& section, double target_h) {
  if (!(target_h > 0.0))
    throw std::invalid_argument("build_mesh: target_h must be positive");
  switch (section.kind) {
    case CrossSection::Kind::UnitDisc:
      return polar_disc_mesh(1.0, target_h);
    case CrossSection::Kind::Ellipse: {
      const double rmax = section.semi_axes.maxCoeff();
      Mesh mesh = polar_disc_mesh(1.0, target_h / rmax);
      mesh.vertices.col(0) *= section.semi_axes.x();
      mesh.vertices.col(1) *= section.semi_axes.y();
      finalize_boundary(mesh);
      compute_edge_stats(mesh);
      return mesh;
    }
    case CrossSection::Kind::Rectangle:
      return rectangle_mesh(section.width, section.height, target_h);
    case CrossSection::Kind::Polygon:
      return polygon_mesh(section.polygon_vertices, target_h);
  }
  throw std::invalid_argument("build_mesh: unknown section kind");
}

std::string validate_mesh(const Mesh& mesh) {
  if (mesh.num_vertices() < 3 || mesh.num_triangles() < 1)
    return "mesh is empty";
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Eigen::Vector2d a = mesh.vertices.row(mesh.triangles(t, 0));
    Eigen::Vector2d b = mesh.vertices.row(mesh.triangles(t, 1));
    Eigen::Vector2d c = mesh.vertices.row(mesh.triangles(t, 2));
    if (triangle_area(a, b, c) <= 0.0)
      return "triangle " + std::to_string(t) + " has nonpositive area";
  }
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int e = 0; e < 3; ++e) {
      const int i = mesh.triangles(t, e), j = mesh.triangles(t, (e + 1) % 3);
      edge_count[{std::min(i, j), std::max(i, j)}]++;
    }
  int boundary_count = 0;
  for (const auto& [edge, count] : edge_count) {
    if (count == 1)
      ++boundary_count;
    else if (count != 2)
      return "edge shared by " + std::to_string(count) + " triangles";
  }
  if (boundary_count != mesh.num_boundary())
    return "boundary loop length does not match boundary edge count";
  std::set<std::pair<int, int>> loop_edges;
  for (auto [i, j] : mesh.boundary_edges())
    loop_edges.insert({std::min(i, j), std::max(i, j)});
  for (const auto& [edge, count] : edge_count)
    if (count == 1 && !loop_edges.count(edge))
      return "boundary edge missing from loop";
  std::vector<Eigen::Vector2d> pts;
  for (int v : mesh.boundary_loop)
    pts.emplace_back(mesh.vertices.row(v).transpose());
  if (signed_polygon_area(pts) <= 0.0) return "boundary loop is not CCW";
  if (mesh.arclength.size() != mesh.boundary_loop.size())
    return "arclength size mismatch";
  if (mesh.arclength.empty() || mesh.arclength[0] != 0.0)
    return "arclength must start at 0";
  for (size_t i = 1; i < mesh.arclength.size(); ++i)
    if (mesh.arclength[i] <= mesh.arclength[i - 1])
      return "arclength is not strictly increasing";
  if (!(mesh.arclength.back() < mesh.perimeter))
    return "arclength exceeds perimeter";
  return {};
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << "twistdn-mesh v1\n";
  out << "V " << mesh.num_vertices() << "\n";
  for (int i = 0; i < mesh.num_vertices(); ++i)
    out << mesh.vertices(i, 0) << " " << mesh.vertices(i, 1) << "\n";
  out << "T " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t)
    out << mesh.triangles(t, 0) << " " << mesh.triangles(t, 1) << " "
        << mesh.triangles(t, 2) << "\n";
  out << "B " << mesh.num_boundary() << "\n";
  for (int v : mesh.boundary_loop) out << v << "\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open mesh file " + path);
  std::string magic, version;
  f >> magic >> version;
  if (magic != "twistdn-mesh" || version != "v1")
    throw std::runtime_error("not a twistdn-mesh v1 file: " + path);

  Mesh mesh;
  std::string tag;
  int count = 0;
  f >> tag >> count;
  if (tag != "V" || count < 3) throw std::runtime_error("bad vertex section");
  mesh.vertices.resize(count, 2);
  for (int i = 0; i < count; ++i) f >> mesh.vertices(i, 0) >> mesh.vertices(i, 1);
  f >> tag >> count;
  if (tag != "T" || count < 1) throw std::runtime_error("bad triangle section");
  mesh.triangles.resize(count, 3);
  for (int t = 0; t < count; ++t)
    f >> mesh.triangles(t, 0) >> mesh.triangles(t, 1) >> mesh.triangles(t, 2);
  f >> tag >> count;
  if (tag != "B" || count < 3) throw std::runtime_error("bad boundary section");
  mesh.boundary_loop.resize(count);
  for (int i = 0; i < count; ++i) f >> mesh.boundary_loop[i];
  if (!f) throw std::runtime_error("truncated mesh file " + path);

  mesh.arclength.assign(count, 0.0);
  double s = 0.0;
  for (int i = 0; i < count; ++i) {
    mesh.arclength[i] = s;
    const int u = mesh.boundary_loop[i];
    const int v = mesh.boundary_loop[(i + 1) % count];
    s += (mesh.vertices.row(u) - mesh.vertices.row(v)).norm();
  }
  mesh.perimeter = s;
  compute_edge_stats(mesh);
  const std::string err = validate_mesh(mesh);
  if (!err.empty()) throw std::runtime_error("invalid mesh in " + path + ": " + err);
  return mesh;
}

Eigen::Matrix2d rotation(double xi) {
  Eigen::Matrix2d R;
  R << std::cos(xi), -std::sin(xi), std::sin(xi), std::cos(xi);
  return R;
}

Eigen::Vector3d twist_map(const TwistMap& tm, const Eigen::Vector3d& x) {
  const Eigen::Vector2d xp = rotation(tm.theta(x.z())) * x.head<2>();
  return {xp.x(), xp.y(), x.z()};
}

Eigen::Vector3d straighten_map(const TwistMap& tm, const Eigen::Vector3d& y) {
  const Eigen::Vector2d xp = rotation(-tm.theta(y.z())) * y.head<2>();
  return {xp.x(), xp.y(), y.z()};
}

double QuadraticPolynomial::operator()(const Eigen::Vector3d& y) const {
  return c + b.dot(y) + y.dot(Q * y);
}

Eigen::Vector3d QuadraticPolynomial::gradient(const Eigen::Vector3d& y) const {
  return b + 2.0 * Q * y;
}

bool QuadraticPolynomial::is_harmonic() const {
  const double scale = std::max({1.0, std::abs(c), b.cwiseAbs().maxCoeff(),
                                 Q.cwiseAbs().maxCoeff()});
  return std::abs(laplacian()) <= 1e-14 * scale;
}

double harmonic_pullback_residual(const TwistMap& tm, const Mesh& mesh,
                                  const QuadraticPolynomial& v,
                                  double x3_slice) {
  if (!v.is_harmonic())
    throw std::invalid_argument(
        "harmonic_pullback_residual: polynomial is not harmonic (nonzero Laplacian)");

  const double a = tm.rate;
  const Eigen::Matrix2d R = rotation(tm.theta(x3_slice));
  Eigen::Matrix2d J;
  J << 0.0, -1.0, 1.0, 0.0;
  const Eigen::Matrix2d JR = J * R;
  const Eigen::Matrix3d H = v.hessian();
  const Eigen::Matrix2d Hpp = H.topLeftCorner<2, 2>();
  const Eigen::Vector2d Hp3 = H.block<2, 1>(0, 2);
  const double H33 = H(2, 2);

  // u(x', c) = v(R x', c); nodal values for the P1 interpolant.
  Eigen::VectorXd u_nodal(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Eigen::Vector2d xp = mesh.vertices.row(i).transpose();
    const Eigen::Vector2d yp = R * xp;
    u_nodal(i) = v(Eigen::Vector3d(yp.x(), yp.y(), x3_slice));
  }

  const auto flags = mesh.boundary_flags();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.num_vertices());
  const auto& quad = tri_quadrature_deg4();

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int i0 = mesh.triangles(t, 0), i1 = mesh.triangles(t, 1),
              i2 = mesh.triangles(t, 2);
    const Eigen::Vector2d p0 = mesh.vertices.row(i0).transpose();
    const Eigen::Vector2d p1 = mesh.vertices.row(i1).transpose();
    const Eigen::Vector2d p2 = mesh.vertices.row(i2).transpose();
    const double area = triangle_area(p0, p1, p2);
    // Constant gradients of the P1 hat functions, one per column.
    Eigen::Matrix<double, 2, 3> grad;
    grad.col(0) << (p1.y() - p2.y()) / (2 * area), (p2.x() - p1.x()) / (2 * area);
    grad.col(1) << (p2.y() - p0.y()) / (2 * area), (p0.x() - p2.x()) / (2 * area);
    grad.col(2) << (p0.y() - p1.y()) / (2 * area), (p1.x() - p0.x()) / (2 * area);
    const Eigen::Vector2d grad_uh = grad.col(0) * u_nodal(i0) +
                                    grad.col(1) * u_nodal(i1) +
                                    grad.col(2) * u_nodal(i2);
    const int ids[3] = {i0, i1, i2};

    for (const auto& qp : quad) {
      const Eigen::Vector2d x = qp.l0 * p0 + qp.l1 * p1 + qp.l2 * p2;
      const double w = qp.w * area;
      const double lam[3] = {qp.l0, qp.l1, qp.l2};

      const Eigen::Vector2d y = R * x;
      const Eigen::Vector3d g =
          v.gradient(Eigen::Vector3d(y.x(), y.y(), x3_slice));
      const Eigen::Vector2d gp = g.head<2>();
      const Eigen::Vector2d jrx = JR * x;

      // grad' of d3 u and d3^2 u at the slice, in closed form.
      const Eigen::Vector2d grad_d3u =
          a * (JR.transpose() * gp + R.transpose() * (Hpp * jrx)) +
          R.transpose() * Hp3;
      const double d33u = -a * a * (R * x).dot(gp) +
                          a * a * jrx.dot(Hpp * jrx) + 2.0 * a * jrx.dot(Hp3) +
                          H33;

      const Eigen::Vector2d xperp(-x.y(), x.x());
      const double lower_order = 2.0 * a * xperp.dot(grad_d3u) + d33u;
      const Eigen::Matrix2d At = eval_Atilde(x, a);
      const Eigen::Vector2d flux = At * grad_uh;

      for (int m = 0; m < 3; ++m)
        r(ids[m]) += w * (flux.dot(grad.col(m)) - lower_order * lam[m]);
    }
  }

  double sq = 0.0;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (!flags[i]) sq += r(i) * r(i);
  return std::sqrt(sq);
}

}  // namespace twistdn
