// God-object resolution of constraint-node motion against a proxy surface.
#pragma once

#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"
#include "pantosim/kinematics.hpp"
#include "pantosim/surface.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace pantosim {

/// Handle rotations stay free in every contact configuration.
inline constexpr int kHandleRotationalDof = 2;
/// Tolerance for the precondition that the current point is feasible.
inline constexpr double kFeasibilityTolerance = 1e-9;

struct ContactState {
  bool in_contact = false;
  std::vector<Vec3> active_constraints;  // unit normals toward free space
  double penetration_raw = 0.0;          // depth of the raw target behind the surface, constraint space
  int dof_translational = 3;
  int dof_rotational = kHandleRotationalDof;
  Vec3 reaction_constraint = Vec3::Zero();
  Vec3 reaction_interface = Vec3::Zero();
};

struct ResolvedMotion {
  Vec3 point;
  ContactState contact;
};

namespace detail {

inline int independent_count(const std::vector<Vec3>& normals) {
  if (normals.empty()) return 0;
  Eigen::MatrixXd n(3, static_cast<Eigen::Index>(normals.size()));
  for (std::size_t i = 0; i < normals.size(); ++i) n.col(static_cast<Eigen::Index>(i)) = normals[i];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(n);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

// Calls fn(subset) for every subset of {0..n-1} with size <= max_size, smallest first.
template <class Fn>
bool for_each_subset(int n, int max_size, Fn&& fn) {
  std::vector<int> idx;
  for (int k = 0; k <= std::min(n, max_size); ++k) {
    idx.resize(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      if (fn(idx)) return true;
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return false;
}

// Solves (N_S N_S^T) lambda = rhs for the selected normals; nullopt when dependent.
inline std::optional<Eigen::VectorXd> solve_gram(const std::vector<Vec3>& normals, const std::vector<int>& subset,
                                                 const Eigen::VectorXd& rhs) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  Eigen::MatrixXd gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      gram(i, j) = normals[static_cast<std::size_t>(subset[i])].dot(normals[static_cast<std::size_t>(subset[j])]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < k) return std::nullopt;
  return Eigen::VectorXd(lu.solve(rhs));
}

/**
 * Euclidean projection onto the intersection of half-spaces n_i . x >= d_i.
 *
 * Enumerates active sets of up to three planes (planes ordered by violation
 * depth) and keeps the KKT point nearest to `p`. Falls back to Dykstra's
 * alternating projections for degenerate vertices with more than three
 * simultaneously active planes.
 */
inline Vec3 project_onto_polyhedron(const std::vector<Plane>& planes, const Vec3& p) {
  std::vector<int> order(planes.size());
  std::iota(order.begin(), order.end(), 0);
  auto violation = [&](int i) { return planes[static_cast<std::size_t>(i)].normal.dot(p) - planes[static_cast<std::size_t>(i)].offset; };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return violation(a) < violation(b); });
  std::vector<Vec3> normals;
  std::vector<double> offsets;
  for (int i : order) {
    normals.push_back(planes[static_cast<std::size_t>(i)].normal);
    offsets.push_back(planes[static_cast<std::size_t>(i)].offset);
  }
  auto feasible = [&](const Vec3& x) {
    for (std::size_t j = 0; j < normals.size(); ++j)
      if (normals[j].dot(x) - offsets[j] < -1e-12) return false;
    return true;
  };

  std::optional<Vec3> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for_each_subset(static_cast<int>(normals.size()), 3, [&](const std::vector<int>& subset) {
    Vec3 x = p;
    if (!subset.empty()) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(subset.size()));
      for (std::size_t i = 0; i < subset.size(); ++i)
        rhs(static_cast<Eigen::Index>(i)) = offsets[static_cast<std::size_t>(subset[i])] -
                                           normals[static_cast<std::size_t>(subset[i])].dot(p);
      const auto lambda = solve_gram(normals, subset, rhs);
      if (!lambda || lambda->minCoeff() < -1e-12) return false;
      for (std::size_t i = 0; i < subset.size(); ++i)
        x += (*lambda)(static_cast<Eigen::Index>(i)) * normals[static_cast<std::size_t>(subset[i])];
    }
    if (!feasible(x)) return false;
    const double dist = (x - p).norm();
    if (dist < best_dist - 1e-15) {
      best_dist = dist;
      best = x;
    }
    return subset.empty();  // free point: nothing can be closer
  });
  if (best) return *best;

  // Dykstra
  Vec3 x = p;
  std::vector<Vec3> corrections(normals.size(), Vec3::Zero());
  for (int iter = 0; iter < 10000; ++iter) {
    for (std::size_t j = 0; j < normals.size(); ++j) {
      const Vec3 y = x + corrections[j];
      const double v = normals[j].dot(y) - offsets[j];
      const Vec3 projected = v < 0.0 ? Vec3(y - v * normals[j]) : y;
      corrections[j] = y - projected;
      x = projected;
    }
    if (feasible(x)) break;
  }
  return x;
}

}  // namespace detail

/**
 * Moves the constraint node as close to `desired` as the surface allows.
 *
 * Purely geometric: resolution never produces an actuation command. The
 * current point only has to be feasible; the result is the nearest feasible
 * point to `desired` (orthogonal projection for planes, active-set projection
 * for plane sets, vertical projection for heightfields, nearest surface point
 * for meshes).
 */
inline ResolvedMotion resolve_constrained_motion(const ProxySurface& surface, const Vec3& current,
                                                 const Vec3& desired) {
  if (signed_distance(surface, current).distance < -kFeasibilityTolerance)
    throw StateError("current constraint-node position is inside the proxy surface");

  const SurfaceDistance raw = signed_distance(surface, desired);
  ResolvedMotion out{desired, {}};
  out.contact.penetration_raw = std::max(0.0, -raw.distance);
  if (raw.distance > 0.0) return out;

  out.contact.in_contact = true;
  std::visit(Overloaded{
                 [&](const HorizontalPlane& plane) {
                   out.point.z() = plane.height;
                   out.contact.active_constraints = {Vec3::UnitZ()};
                 },
                 [&](const PlaneSet& set) {
                   out.point = detail::project_onto_polyhedron(set.planes, desired);
                   for (const auto& plane : set.planes) {
                     const bool tight = std::abs(plane.normal.dot(out.point) - plane.offset) <= 1e-9;
                     const bool pressed = plane.normal.dot(desired) - plane.offset <= 1e-12;
                     if (tight && pressed) out.contact.active_constraints.push_back(plane.normal);
                   }
                 },
                 [&](const HeightField& field) {
                   out.point.z() = height_at(field, desired.x(), desired.y());
                   out.contact.active_constraints = {raw.normal};
                 },
                 [&](const TriMesh& mesh) {
                   const auto f = detail::nearest_mesh_feature(mesh, desired);
                   out.point = f.point;
                   out.contact.active_constraints = {f.distance > 1e-12 ? raw.normal : f.face_normal};
                 },
             },
             surface);
  out.contact.dof_translational = 3 - detail::independent_count(out.contact.active_constraints);
  return out;
}

/**
 * Splits an interface-side applied force into what the proxy reacts and what slides.
 *
 * The constraint node sees f / alpha. Reactions are unilateral: a non-negative
 * combination of active normals that cancels the inward part of the force and
 * nothing else. The interface reaction is alpha times the constraint reaction.
 */
inline ContactState contact_reaction(const ContactState& contact, const Vec3& applied_interface_force,
                                     const LinkageGeometry& g) {
  if (!contact.in_contact) throw StateError("contact_reaction requires an active contact");
  ContactState out = contact;
  const Vec3 f = map_force(g, applied_interface_force);
  const auto& normals = contact.active_constraints;

  Vec3 best_reaction = Vec3::Zero();
  double best_residual = std::numeric_limits<double>::infinity();
  detail::for_each_subset(static_cast<int>(normals.size()), 3, [&](const std::vector<int>& subset) {
    Vec3 reaction = Vec3::Zero();
    if (!subset.empty()) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(subset.size()));
      for (std::size_t i = 0; i < subset.size(); ++i)
        rhs(static_cast<Eigen::Index>(i)) = -normals[static_cast<std::size_t>(subset[i])].dot(f);
      const auto lambda = detail::solve_gram(normals, subset, rhs);
      if (!lambda || lambda->minCoeff() < -1e-12) return false;
      for (std::size_t i = 0; i < subset.size(); ++i)
        reaction += std::max(0.0, (*lambda)(static_cast<Eigen::Index>(i))) * normals[static_cast<std::size_t>(subset[i])];
    }
    const Vec3 net = f + reaction;
    for (const auto& n : normals)
      if (n.dot(net) < -1e-9 * std::max(1.0, f.norm())) return false;
    const double residual = net.norm();
    if (residual < best_residual - 1e-15) {
      best_residual = residual;
      best_reaction = reaction;
    }
    return false;
  });
  out.reaction_constraint = best_reaction;
  out.reaction_interface = g.alpha * best_reaction;
  return out;
}

}  // namespace pantosim
