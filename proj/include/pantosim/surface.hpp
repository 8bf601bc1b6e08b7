// Proxy geometry placed in the constraint node's workspace, and its signed-distance queries.
#pragma once

#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <type_traits>
#include <variant>
#include <vector>

namespace pantosim {

/// Infinite plane z = height; free space above.
struct HorizontalPlane {
  double height = 0.0;
  bool operator==(const HorizontalPlane&) const = default;
};

/// Half-space normal . x >= offset.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  bool operator==(const Plane&) const = default;
};

/// Intersection of half-spaces (corners, boxes).
struct PlaneSet {
  std::vector<Plane> planes;
  bool operator==(const PlaneSet&) const = default;
};

/// Row-major grid of heights: heights[iy * cols + ix] sits at origin + (ix, iy) * cell.
struct HeightField {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double cell = 0.0;
  int cols = 0;
  int rows = 0;
  std::vector<double> heights;

  double at(int ix, int iy) const { return heights[static_cast<std::size_t>(iy) * cols + ix]; }
  bool operator==(const HeightField&) const = default;
};

/// Triangle soup; outward side given by counter-clockwise winding.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  bool operator==(const TriMesh&) const = default;
};

using ProxySurface = std::variant<HorizontalPlane, PlaneSet, HeightField, TriMesh>;

struct SurfaceDistance {
  double distance = 0.0;  // > 0 in free space
  Vec3 normal = Vec3::UnitZ();
};

/// Half-space through `point` with free side along `normal` (normalized here).
inline Plane plane_through(const Vec3& normal, const Vec3& point) {
  const Vec3 n = normal.normalized();
  return {n, n.dot(point)};
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline void validate(const ProxySurface& surface) {
  std::visit(Overloaded{
                 [](const HorizontalPlane& p) {
                   if (!std::isfinite(p.height)) throw InvalidArgument("plane height must be finite");
                 },
                 [](const PlaneSet& s) {
                   if (s.planes.empty()) throw InvalidArgument("plane_set needs at least one plane");
                   for (const auto& p : s.planes)
                     if (std::abs(p.normal.norm() - 1.0) > 1e-12)
                       throw InvalidArgument("plane normal must be unit length");
                 },
                 [](const HeightField& h) {
                   if (!(h.cell > 0.0)) throw InvalidArgument("heightfield cell must be positive");
                   if (h.cols < 2 || h.rows < 2) throw InvalidArgument("heightfield needs at least 2x2 samples");
                   if (h.heights.size() != static_cast<std::size_t>(h.cols) * h.rows)
                     throw InvalidArgument("heightfield grid is not rectangular");
                 },
                 [](const TriMesh& m) {
                   if (m.triangles.empty()) throw InvalidArgument("trimesh has no triangles");
                   const int nv = static_cast<int>(m.vertices.size());
                   for (const auto& t : m.triangles) {
                     for (int i : t)
                       if (i < 0 || i >= nv) throw InvalidArgument("trimesh index out of range");
                     const Vec3 n = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
                     if (n.norm() <= 1e-15) throw InvalidArgument("trimesh triangle is degenerate");
                   }
                 },
             },
             surface);
}

namespace detail {

struct HeightSample {
  double height;
  double dh_dx;
  double dh_dy;
};

inline HeightSample sample_height(const HeightField& h, double x, double y) {
  const double fx = (x - h.origin.x()) / h.cell;
  const double fy = (y - h.origin.y()) / h.cell;
  if (!(fx >= 0.0 && fx <= h.cols - 1 && fy >= 0.0 && fy <= h.rows - 1))
    throw OutOfDomainError("query outside heightfield footprint");
  const int ix = std::min(static_cast<int>(fx), h.cols - 2);
  const int iy = std::min(static_cast<int>(fy), h.rows - 2);
  const double tx = fx - ix, ty = fy - iy;
  const double h00 = h.at(ix, iy), h10 = h.at(ix + 1, iy);
  const double h01 = h.at(ix, iy + 1), h11 = h.at(ix + 1, iy + 1);
  // lerp form keeps constant grids exact
  const double lo = h00 + tx * (h10 - h00);
  const double hi = h01 + tx * (h11 - h01);
  const double dx = ((1.0 - ty) * (h10 - h00) + ty * (h11 - h01)) / h.cell;
  const double dy = ((1.0 - tx) * (h01 - h00) + tx * (h11 - h10)) / h.cell;
  return {lo + ty * (hi - lo), dx, dy};
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct MeshFeature {
  Vec3 point;
  Vec3 face_normal;
  double distance = std::numeric_limits<double>::infinity();  // unsigned
};

inline MeshFeature nearest_mesh_feature(const TriMesh& m, const Vec3& p) {
  MeshFeature best;
  double best_alignment = -1.0;
  for (const auto& t : m.triangles) {
    const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
    const Vec3 q = closest_point_on_triangle(p, a, b, c);
    const Vec3 n = (b - a).cross(c - a).normalized();
    const double dist = (p - q).norm();
    // On shared edges/vertices prefer the face whose normal best explains p - q.
    const double alignment = dist > 0.0 ? std::abs((p - q).dot(n)) / dist : 1.0;
    if (dist < best.distance - 1e-15 || (dist <= best.distance + 1e-15 && alignment > best_alignment)) {
      best = {q, n, dist};
      best_alignment = alignment;
    }
  }
  return best;
}

}  // namespace detail

/// Heightfield height and gradient at (x, y); throws OutOfDomainError off the grid.
inline double height_at(const HeightField& h, double x, double y) { return detail::sample_height(h, x, y).height; }

inline SurfaceDistance signed_distance(const ProxySurface& surface, const Vec3& p) {
  return std::visit(
      Overloaded{
          [&](const HorizontalPlane& plane) { return SurfaceDistance{p.z() - plane.height, Vec3::UnitZ()}; },
          [&](const PlaneSet& set) {
            SurfaceDistance out{std::numeric_limits<double>::infinity(), Vec3::UnitZ()};
            for (const auto& plane : set.planes) {
              const double d = plane.normal.dot(p) - plane.offset;
              if (d < out.distance) out = {d, plane.normal};
            }
            return out;
          },
          [&](const HeightField& field) {
            const auto s = detail::sample_height(field, p.x(), p.y());
            return SurfaceDistance{p.z() - s.height, Vec3(-s.dh_dx, -s.dh_dy, 1.0).normalized()};
          },
          [&](const TriMesh& mesh) {
            const auto f = detail::nearest_mesh_feature(mesh, p);
            const double side = (p - f.point).dot(f.face_normal);
            const double sign = side >= 0.0 ? 1.0 : -1.0;
            const Vec3 normal = f.distance > 1e-12 ? Vec3(sign * (p - f.point) / f.distance) : f.face_normal;
            return SurfaceDistance{sign * f.distance, normal};
          },
      },
      surface);
}

/// Uniform scaling of the surface about `center`: x -> center + factor (x - center).
inline ProxySurface scaled_about(const ProxySurface& surface, const Vec3& center, double factor) {
  auto scale_scalar = [&](double v, double c) { return c + factor * (v - c); };
  return std::visit(
      Overloaded{
          [&](const HorizontalPlane& p) -> ProxySurface { return HorizontalPlane{scale_scalar(p.height, center.z())}; },
          [&](const PlaneSet& s) -> ProxySurface {
            PlaneSet out;
            for (const auto& p : s.planes) {
              const double nc = p.normal.dot(center);
              out.planes.push_back({p.normal, nc + factor * (p.offset - nc)});
            }
            return out;
          },
          [&](const HeightField& h) -> ProxySurface {
            HeightField out = h;
            out.origin = center.head<2>() + factor * (h.origin - center.head<2>());
            out.cell = factor * h.cell;
            for (auto& v : out.heights) v = scale_scalar(v, center.z());
            return out;
          },
          [&](const TriMesh& m) -> ProxySurface {
            TriMesh out = m;
            for (auto& v : out.vertices) v = center + factor * (v - center);
            return out;
          },
      },
      surface);
}

/// The surface as felt at the interface node: proxy scaled by 1/alpha about the base.
inline ProxySurface rendered_surface(const ProxySurface& proxy, const LinkageGeometry& g) {
  return scaled_about(proxy, g.base_position, 1.0 / g.alpha);
}

/// Inverse of rendered_surface: the proxy that renders `rendered`.
inline ProxySurface proxy_for(const ProxySurface& rendered, const LinkageGeometry& g) {
  return scaled_about(rendered, g.base_position, g.alpha);
}

}  // namespace pantosim
