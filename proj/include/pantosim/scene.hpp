// Wiping-task scene: a virtual table with dirt tiles, rendered by an actuated proxy plane.
#pragma once

#include "pantosim/actuator.hpp"
#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"
#include "pantosim/kinematics.hpp"
#include "pantosim/surface.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

namespace pantosim {

/// Rectangular table top. Its local x axis is rotated by `yaw` about the vertical.
struct Table {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double height = 0.93;
  double size_x = 0.6;
  double size_y = 0.3;
  double yaw = 0.0;

  Vec3 to_world(double local_x, double local_y) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {center.x() + c * local_x - s * local_y, center.y() + s * local_x + c * local_y, height};
  }
  bool operator==(const Table&) const = default;
};

/// rows run along the table's local y, cols along local x. erased[r * cols + c].
struct TileGrid {
  int rows = 10;
  int cols = 10;
  std::vector<std::uint8_t> erased = std::vector<std::uint8_t>(100, 0);

  int count() const { return rows * cols; }
  int remaining() const { return static_cast<int>(std::count(erased.begin(), erased.end(), std::uint8_t{0})); }
  bool operator==(const TileGrid&) const = default;
};

struct Scene {
  Table table;
  TileGrid tiles;
  ActuatorState actuator;
  double footprint_radius = 0.01;  // m, rendered space

  bool operator==(const Scene&) const = default;
};

inline Vec3 tile_center(const Scene& s, int row, int col) {
  const double cw = s.table.size_x / s.tiles.cols;
  const double ch = s.table.size_y / s.tiles.rows;
  return s.table.to_world(-s.table.size_x / 2.0 + (col + 0.5) * cw, -s.table.size_y / 2.0 + (row + 0.5) * ch);
}

/// The proxy the constraint node currently meets: a horizontal plane at the screw height.
inline HorizontalPlane proxy_plane(const Scene& s) { return {s.actuator.height}; }

/// Vertical span of rendered heights the interface node can reach.
inline std::pair<double, double> rendered_height_span(const LinkageGeometry& g) {
  return {g.base_position.z() + g.r_max() * std::sin(g.elevation_min),
          g.base_position.z() + g.r_max() * std::sin(g.elevation_max)};
}

namespace detail {

inline void check_rendered_height(const LinkageGeometry& g, double world_height) {
  const auto [lo, hi] = rendered_height_span(g);
  if (world_height < lo || world_height > hi) {
    std::ostringstream os;
    os << "rendered plane height " << world_height << " outside workspace vertical span [" << lo << ", " << hi << "]";
    throw InvalidArgument(os.str());
  }
}

}  // namespace detail

/**
 * Builds a scene with all tiles dirty and the screw parked at the proxy height
 * that renders the table.
 */
inline Scene make_scene(const Table& table, const LinkageGeometry& g, int rows = 10, int cols = 10,
                        ActuatorState actuator = {}) {
  validate(g);
  if (rows <= 0 || cols <= 0) throw InvalidArgument("tile grid needs at least one row and column");
  if (!(table.size_x > 0.0 && table.size_y > 0.0)) throw InvalidArgument("table size must be positive");
  detail::check_rendered_height(g, table.height);
  Scene s;
  s.table = table;
  s.tiles.rows = rows;
  s.tiles.cols = cols;
  s.tiles.erased.assign(static_cast<std::size_t>(rows * cols), 0);
  const double proxy_height = scale_down(g, Vec3(0.0, 0.0, table.height)).z();
  actuator.height = proxy_height;
  actuator.setpoint = proxy_height;
  actuator.command_speed = 0.0;
  validate(actuator);
  s.actuator = actuator;
  return s;
}

/// Operator command: move the proxy plane so the rendered plane sits at `world_height`.
inline Scene set_plane_setpoint(Scene s, const LinkageGeometry& g, double world_height) {
  detail::check_rendered_height(g, world_height);
  s.actuator.setpoint = scale_down(g, Vec3(0.0, 0.0, world_height)).z();
  s.table.height = world_height;
  return s;
}

/// Marks tiles whose center lies within the footprint (horizontal distance) of `contact_point`.
inline int erase_tiles(Scene& s, const Vec3& contact_point) {
  int erased_now = 0;
  const double r2 = s.footprint_radius * s.footprint_radius;
  for (int r = 0; r < s.tiles.rows; ++r) {
    for (int c = 0; c < s.tiles.cols; ++c) {
      auto& cell = s.tiles.erased[static_cast<std::size_t>(r * s.tiles.cols + c)];
      if (cell) continue;
      const Vec3 center = tile_center(s, r, c);
      if ((center.head<2>() - contact_point.head<2>()).squaredNorm() <= r2) {
        cell = 1;
        ++erased_now;
      }
    }
  }
  return erased_now;
}

}  // namespace pantosim
