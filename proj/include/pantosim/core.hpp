// Shared value types, unit helpers and the exception hierarchy.
#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace pantosim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;  // m/s^2

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter set that violates a construction precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A joint coordinate outside its limits.
class JointLimitError : public Error {
 public:
  JointLimitError(std::string joint, const std::string& detail)
      : Error("joint '" + joint + "' out of range: " + detail), joint_(std::move(joint)) {}
  const std::string& joint() const noexcept { return joint_; }

 private:
  std::string joint_;
};

/// A target outside the reachable workspace. Carries the nearest reachable point.
class UnreachableError : public Error {
 public:
  UnreachableError(const std::string& detail, Vec3 nearest)
      : Error("target unreachable: " + detail), nearest_(std::move(nearest)) {}
  const Vec3& nearest() const noexcept { return nearest_; }

 private:
  Vec3 nearest_;
};

/// A query outside a surface's domain (heightfield footprint).
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// A state that violates an operation precondition (infeasible point, bad timestamps).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or message content. `key()` names the offending field when known.
class FormatError : public Error {
 public:
  FormatError(std::string key, const std::string& detail)
      : Error(key.empty() ? detail : "'" + key + "': " + detail), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace pantosim
