#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstddef>
#include <vector>

namespace pregrasp {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Canonical unit quaternion: normalized and sign-flipped so that w >= 0
/// (first nonzero component positive when w == 0).
Quat canonicalized(const Quat& q);

/// Quaternion for extrinsic XYZ Euler angles: rotations about the fixed
/// world x, y, z axes applied in that order. Throws std::invalid_argument
/// on non-finite input.
Quat euler_to_quaternion(const Vec3& euler_xyz);

/// Inverse of euler_to_quaternion (angles recovering the same rotation).
Vec3 quaternion_to_euler(const Quat& q);

/// Axis-angle vector of the relative rotation a^-1 * b with angle in [0, pi].
/// The norm is the geodesic angle between the two orientations.
Vec3 rotation_vector_between(const Quat& a, const Quat& b);

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec3 transform(const Vec3& local) const { return position + orientation * local; }
  Vec3 inverse_transform(const Vec3& world) const {
    return orientation.conjugate() * (world - position);
  }
  /// this * local (local expressed in this pose's frame).
  Pose compose(const Pose& local) const {
    return {position + orientation * local.position,
            canonicalized(orientation * local.orientation)};
  }
  Pose inverse() const {
    const Quat inv = orientation.conjugate();
    return {inv * -position, canonicalized(inv)};
  }
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

struct OrientedBox {
  Pose center;
  Vec3 half_extents = Vec3::Zero();

  std::vector<Vec3> corners() const;
  /// max over the box of d . p for a unit direction d (support function).
  Vec3 support(const Vec3& direction) const;
};

/// Rigid collision model as a set of oriented boxes, exactly one flagged
/// as the palm.
struct ShapeSet {
  std::vector<OrientedBox> boxes;
  std::size_t palm_index = 0;

  const OrientedBox& palm() const { return boxes[palm_index]; }
  ShapeSet transformed(const Pose& pose) const;
};

struct HullFace {
  Vec3 normal;    // outward unit normal
  double offset;  // supporting plane: normal . p <= offset inside
};

struct ConvexHull {
  std::vector<Vec3> vertices;
  std::vector<HullFace> faces;
  double volume = 0.0;

  ConvexHull transformed(const Pose& pose) const;
};

/// Convex hull of at least 4 non-coplanar points. Faces carry outward unit
/// normals; every input point satisfies every face inequality. Throws
/// std::invalid_argument on degenerate input.
ConvexHull build_convex_hull(const std::vector<Vec3>& points);

/// True iff normal . p <= offset + margin for every face.
bool hull_contains(const ConvexHull& hull, const Vec3& p, double margin);

/// Minimum Euclidean separation between two oriented boxes; 0 when they
/// overlap or touch.
double closest_distance(const OrientedBox& a, const OrientedBox& b);

struct Contact {
  Vec3 point;
  Vec3 normal;  // unit, from the gripper shape into the target
  double depth = 0.0;
  double force_magnitude = 0.0;
};

/// Penalty contacts between each gripper box and the target box. One contact
/// per penetrating pair with
///   force = max(0, stiffness * depth + damping * approach_speed)
/// where approach_speed is the closing speed of the target relative to the
/// gripper along the contact normal.
std::vector<Contact> collect_contacts(const ShapeSet& gripper, const OrientedBox& target,
                                      double stiffness, double damping,
                                      const Vec3& relative_velocity);

}  // namespace pregrasp
