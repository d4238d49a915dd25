#include "pregrasp/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pregrasp {

namespace {

constexpr double kPlaneTol = 1e-9;

bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

Quat canonicalized(const Quat& q) {
  Quat out = q.normalized();
  const double w = out.w();
  bool flip = w < 0.0;
  if (w == 0.0) {
    if (out.x() != 0.0)
      flip = out.x() < 0.0;
    else if (out.y() != 0.0)
      flip = out.y() < 0.0;
    else
      flip = out.z() < 0.0;
  }
  if (flip) out.coeffs() = -out.coeffs();
  return out;
}

Quat euler_to_quaternion(const Vec3& euler_xyz) {
  if (!all_finite(euler_xyz)) throw std::invalid_argument("euler_to_quaternion: non-finite angle");
  const Quat q = Eigen::AngleAxisd(euler_xyz.z(), Vec3::UnitZ()) *
                 Eigen::AngleAxisd(euler_xyz.y(), Vec3::UnitY()) *
                 Eigen::AngleAxisd(euler_xyz.x(), Vec3::UnitX());
  return canonicalized(q);
}

Vec3 quaternion_to_euler(const Quat& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  // r = Rz * Ry * Rx, so r(2,0) = -sin(y)
  const double sy = -r(2, 0);
  if (std::abs(sy) > 1.0 - 1e-12) {
    // pitch at +/-90 deg: roll and yaw are coupled, fold everything into yaw
    const double y = std::copysign(M_PI / 2.0, sy);
    const double z = std::atan2(-r(0, 1), r(1, 1));
    return {0.0, y, z};
  }
  return {std::atan2(r(2, 1), r(2, 2)), std::asin(sy), std::atan2(r(1, 0), r(0, 0))};
}

Vec3 rotation_vector_between(const Quat& a, const Quat& b) {
  const Quat rel = canonicalized(a.conjugate() * b);
  const double vec_norm = rel.vec().norm();
  if (vec_norm < 1e-15) return Vec3::Zero();
  const double angle = 2.0 * std::atan2(vec_norm, rel.w());  // in [0, pi] since w >= 0
  return rel.vec() * (angle / vec_norm);
}

std::vector<Vec3> OrientedBox::corners() const {
  std::vector<Vec3> out;
  out.reserve(8);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out.push_back(center.transform(
            {sx * half_extents.x(), sy * half_extents.y(), sz * half_extents.z()}));
  return out;
}

Vec3 OrientedBox::support(const Vec3& direction) const {
  const Vec3 local_dir = center.orientation.conjugate() * direction;
  const Vec3 local{std::copysign(half_extents.x(), local_dir.x()),
                   std::copysign(half_extents.y(), local_dir.y()),
                   std::copysign(half_extents.z(), local_dir.z())};
  return center.transform(local);
}

ShapeSet ShapeSet::transformed(const Pose& pose) const {
  ShapeSet out;
  out.palm_index = palm_index;
  out.boxes.reserve(boxes.size());
  for (const auto& b : boxes) out.boxes.push_back({pose.compose(b.center), b.half_extents});
  return out;
}

ConvexHull ConvexHull::transformed(const Pose& pose) const {
  ConvexHull out;
  out.volume = volume;
  out.vertices.reserve(vertices.size());
  for (const auto& v : vertices) out.vertices.push_back(pose.transform(v));
  out.faces.reserve(faces.size());
  for (const auto& f : faces) {
    const Vec3 n = pose.orientation * f.normal;
    out.faces.push_back({n, f.offset + n.dot(pose.position)});
  }
  return out;
}

namespace {

// Orders the vertices of one hull face counter-clockwise as seen from
// outside, then accumulates the fan-triangle contribution to the volume
// (divergence theorem over the closed outward-oriented surface).
double face_volume_contribution(const std::vector<Vec3>& verts, const HullFace& face,
                                std::vector<int> on_face) {
  if (on_face.size() < 3) return 0.0;
  Vec3 centroid = Vec3::Zero();
  for (int i : on_face) centroid += verts[i];
  centroid /= static_cast<double>(on_face.size());

  // 2-D basis in the face plane
  Vec3 u = (verts[on_face[0]] - centroid).normalized();
  Vec3 v = face.normal.cross(u);
  std::sort(on_face.begin(), on_face.end(), [&](int i, int j) {
    const Vec3 pi = verts[i] - centroid;
    const Vec3 pj = verts[j] - centroid;
    return std::atan2(pi.dot(v), pi.dot(u)) < std::atan2(pj.dot(v), pj.dot(u));
  });

  double vol = 0.0;
  for (std::size_t k = 1; k + 1 < on_face.size(); ++k) {
    const Vec3& a = verts[on_face[0]];
    const Vec3& b = verts[on_face[k]];
    const Vec3& c = verts[on_face[k + 1]];
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

}  // namespace

ConvexHull build_convex_hull(const std::vector<Vec3>& points) {
  // Deduplicate
  std::vector<Vec3> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    if (!all_finite(p)) throw std::invalid_argument("build_convex_hull: non-finite point");
    bool dup = false;
    for (const auto& q : pts)
      if ((p - q).norm() < 1e-12) {
        dup = true;
        break;
      }
    if (!dup) pts.push_back(p);
  }
  const std::size_t n = pts.size();
  if (n < 4) throw std::invalid_argument("build_convex_hull: need at least 4 distinct points");

  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
  scale = std::max(scale, 1.0);
  const double side_tol = kPlaneTol * scale;

  // Supporting-plane enumeration over all point triples. Quadratic-and-worse
  // in n, but hulls here are built once from small point sets.
  ConvexHull hull;
  std::vector<std::vector<int>> face_members;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Vec3 normal = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        const double len = normal.norm();
        if (len < 1e-12 * scale * scale) continue;
        normal /= len;
        double lo = 0.0, hi = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
          const double s = normal.dot(pts[m] - pts[i]);
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        int side;
        if (hi <= side_tol)
          side = +1;  // all points on or below: normal is outward
        else if (lo >= -side_tol)
          side = -1;  // outward is the flipped direction
        else
          continue;
        if (side < 0) normal = -normal;

        double offset = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < n; ++m) offset = std::max(offset, normal.dot(pts[m]));

        bool known = false;
        for (const auto& f : hull.faces)
          if (f.normal.dot(normal) > 1.0 - 1e-9 && std::abs(f.offset - offset) < side_tol * 4) {
            known = true;
            break;
          }
        if (known) continue;

        std::vector<int> members;
        for (std::size_t m = 0; m < n; ++m)
          if (offset - normal.dot(pts[m]) < side_tol * 4) members.push_back(static_cast<int>(m));
        hull.faces.push_back({normal, offset});
        face_members.push_back(std::move(members));
      }
    }
  }
  if (hull.faces.size() < 4) throw std::invalid_argument("build_convex_hull: degenerate point set");

  // Hull vertices are the points incident to at least three face planes.
  std::vector<int> incidence(n, 0);
  for (const auto& members : face_members)
    for (int m : members) ++incidence[m];
  std::vector<int> vertex_of_point(n, -1);
  for (std::size_t m = 0; m < n; ++m) {
    if (incidence[m] >= 3) {
      vertex_of_point[m] = static_cast<int>(hull.vertices.size());
      hull.vertices.push_back(pts[m]);
    }
  }
  if (hull.vertices.size() < 4) throw std::invalid_argument("build_convex_hull: degenerate point set");

  for (std::size_t f = 0; f < hull.faces.size(); ++f) {
    std::vector<int> verts;
    for (int m : face_members[f])
      if (vertex_of_point[m] >= 0) verts.push_back(vertex_of_point[m]);
    hull.volume += face_volume_contribution(hull.vertices, hull.faces[f], std::move(verts));
  }
  if (!(hull.volume > 1e-18)) throw std::invalid_argument("build_convex_hull: degenerate point set");
  return hull;
}

bool hull_contains(const ConvexHull& hull, const Vec3& p, double margin) {
  for (const auto& f : hull.faces)
    if (f.normal.dot(p) > f.offset + margin) return false;
  return true;
}

namespace {

// Closest point of the simplex to the origin by enumerating sub-simplices.
// Returns the best point and shrinks the simplex to the supporting subset.
Vec3 closest_on_simplex(std::vector<Vec3>& simplex) {
  const int n = static_cast<int>(simplex.size());
  double best_dist2 = std::numeric_limits<double>::infinity();
  Vec3 best_point = Vec3::Zero();
  std::vector<Vec3> best_subset;

  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());

    // Minimize |sum l_i p_i|^2 subject to sum l_i = 1 via the KKT system.
    Eigen::MatrixXd sys(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) sys(r, c) = 2.0 * simplex[idx[r]].dot(simplex[idx[c]]);
    for (int r = 0; r < k; ++r) {
      sys(r, k) = 1.0;
      sys(k, r) = 1.0;
    }
    sys(k, k) = 0.0;
    rhs(k) = 1.0;
    Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);

    bool valid = true;
    for (int r = 0; r < k; ++r)
      if (!(sol(r) > -1e-12)) valid = false;
    if (!valid) continue;

    Vec3 candidate = Vec3::Zero();
    for (int r = 0; r < k; ++r) candidate += sol(r) * simplex[idx[r]];
    const double d2 = candidate.squaredNorm();
    if (d2 < best_dist2) {
      best_dist2 = d2;
      best_point = candidate;
      best_subset.clear();
      for (int r = 0; r < k; ++r) best_subset.push_back(simplex[idx[r]]);
    }
  }
  simplex = std::move(best_subset);
  return best_point;
}

}  // namespace

double closest_distance(const OrientedBox& a, const OrientedBox& b) {
  // GJK on the Minkowski difference a - b
  const double scale =
      std::max(1e-9, a.half_extents.norm() + b.half_extents.norm() +
                         (a.center.position - b.center.position).norm());
  auto support = [&](const Vec3& d) { return a.support(d) - b.support(-d); };

  Vec3 dir = b.center.position - a.center.position;
  if (dir.squaredNorm() < 1e-18) dir = Vec3::UnitX();
  std::vector<Vec3> simplex{support(dir)};

  for (int iter = 0; iter < 128; ++iter) {
    const Vec3 v = closest_on_simplex(simplex);
    const double dist = v.norm();
    if (dist < 1e-10 * scale) return 0.0;  // origin inside the difference
    const Vec3 w = support(-v);
    // no further progress toward the origin
    if (v.dot(v) - v.dot(w) <= 1e-12 * scale * scale) return dist;
    if (simplex.size() == 4) return dist;
    for (const auto& p : simplex)
      if ((p - w).squaredNorm() < 1e-24 * scale * scale) return dist;
    simplex.push_back(w);
  }
  return closest_on_simplex(simplex).norm();
}

namespace {

struct Penetration {
  bool overlapping = false;
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();  // from a into b, minimum-translation direction
};

// Separating-axis test over the 15 candidate axes of a box pair. For boxes
// the minimum-overlap axis is the exact minimum translation direction.
Penetration box_penetration(const OrientedBox& a, const OrientedBox& b) {
  const Eigen::Matrix3d ra = a.center.orientation.toRotationMatrix();
  const Eigen::Matrix3d rb = b.center.orientation.toRotationMatrix();
  const Vec3 delta = b.center.position - a.center.position;

  std::array<Vec3, 15> axes;
  int count = 0;
  for (int i = 0; i < 3; ++i) axes[count++] = ra.col(i);
  for (int i = 0; i < 3; ++i) axes[count++] = rb.col(i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 cross = ra.col(i).cross(rb.col(j));
      if (cross.squaredNorm() > 1e-16) axes[count++] = cross.normalized();
    }

  Penetration out;
  out.depth = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const Vec3& axis = axes[i];
    double span_a = 0.0, span_b = 0.0;
    for (int k = 0; k < 3; ++k) {
      span_a += std::abs(axis.dot(ra.col(k))) * a.half_extents[k];
      span_b += std::abs(axis.dot(rb.col(k))) * b.half_extents[k];
    }
    const double centers = axis.dot(delta);
    const double overlap = span_a + span_b - std::abs(centers);
    if (overlap <= 0.0) return {};  // separating axis
    if (overlap < out.depth) {
      out.depth = overlap;
      out.normal = centers >= 0.0 ? axis : Vec3(-axis);
    }
  }
  out.overlapping = true;
  return out;
}

// Representative deepest point of a box against the plane direction d:
// mean of the corners within tolerance of the extreme projection.
Vec3 deepest_corner_mean(const OrientedBox& box, const Vec3& d) {
  const auto corners = box.corners();
  double extreme = -std::numeric_limits<double>::infinity();
  for (const auto& c : corners) extreme = std::max(extreme, d.dot(c));
  Vec3 mean = Vec3::Zero();
  int hits = 0;
  const double tol = 1e-9 * (1.0 + box.half_extents.norm());
  for (const auto& c : corners)
    if (extreme - d.dot(c) < tol) {
      mean += c;
      ++hits;
    }
  return mean / hits;
}

}  // namespace

std::vector<Contact> collect_contacts(const ShapeSet& gripper, const OrientedBox& target,
                                      double stiffness, double damping,
                                      const Vec3& relative_velocity) {
  std::vector<Contact> contacts;
  for (const auto& shape : gripper.boxes) {
    const Penetration pen = box_penetration(shape, target);
    if (!pen.overlapping || pen.depth <= 0.0) continue;
    Contact c;
    c.normal = pen.normal;
    c.depth = pen.depth;
    // midpoint between the deepest features of each box
    const Vec3 on_shape = deepest_corner_mean(shape, pen.normal);
    const Vec3 on_target = deepest_corner_mean(target, -pen.normal);
    c.point = 0.5 * (on_shape + on_target);
    const double approach_speed = -relative_velocity.dot(pen.normal);
    c.force_magnitude = std::max(0.0, stiffness * pen.depth + damping * approach_speed);
    contacts.push_back(c);
  }
  return contacts;
}

}  // namespace pregrasp
