#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pregrasp/geometry.hpp"
#include "pregrasp/rng.hpp"

using namespace pregrasp;

namespace {

OrientedBox random_box(RngStream& rng, double pos_range = 2.0) {
  OrientedBox box;
  box.center.position = rng.uniform_in_box(Vec3::Constant(-pos_range), Vec3::Constant(pos_range));
  box.center.orientation = canonicalized(rng.uniform_quaternion());
  box.half_extents = {rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8)};
  return box;
}

OrientedBox unit_cube_at(double x, double y = 0.0, double z = 0.0) {
  return {{Vec3{x, y, z}, Quat::Identity()}, Vec3::Constant(0.5)};
}

}  // namespace

TEST_CASE("euler_to_quaternion identity and half turns") {
  const Quat id = euler_to_quaternion(Vec3::Zero());
  CHECK(id.w() == doctest::Approx(1.0));
  CHECK(id.vec().norm() == doctest::Approx(0.0));

  const Quat half_x = euler_to_quaternion({M_PI, 0.0, 0.0});
  CHECK(std::abs(half_x.w()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(half_x.x()) == doctest::Approx(1.0));
}

TEST_CASE("euler_to_quaternion matches independent conversion oracle") {
  RngStream rng(11);
  std::vector<Vec3> angles = {{-2.86, -1.02, 2.52}, {-1.71, 0.28, 0.58}};
  for (int i = 0; i < 200; ++i)
    angles.push_back(rng.uniform_in_box(Vec3::Constant(-M_PI), Vec3::Constant(M_PI)));
  for (const auto& e : angles) {
    const Quat q = euler_to_quaternion(e);
    const Eigen::Vector4d ref =
        oracle::matrix_to_quaternion_wxyz(oracle::euler_xyz_matrix(e.x(), e.y(), e.z()));
    CHECK(std::abs(q.w() - ref(0)) < 1e-12);
    CHECK(std::abs(q.x() - ref(1)) < 1e-12);
    CHECK(std::abs(q.y() - ref(2)) < 1e-12);
    CHECK(std::abs(q.z() - ref(3)) < 1e-12);
  }
}

TEST_CASE("euler round trip recovers the rotation") {
  RngStream rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec3 e = rng.uniform_in_box(Vec3::Constant(-M_PI), Vec3::Constant(M_PI));
    const Quat q = euler_to_quaternion(e);
    const Quat q2 = euler_to_quaternion(quaternion_to_euler(q));
    CHECK(rotation_vector_between(q, q2).norm() < 1e-9);
  }
}

TEST_CASE("euler_to_quaternion rejects non-finite input") {
  CHECK_THROWS_AS(euler_to_quaternion({std::nan(""), 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(euler_to_quaternion({0, INFINITY, 0}), std::invalid_argument);
}

TEST_CASE("rotation_vector_between basic cases") {
  const Quat q = euler_to_quaternion({0.3, -0.7, 1.1});
  CHECK(rotation_vector_between(q, q).norm() == doctest::Approx(0.0));

  const Quat half_z = euler_to_quaternion({0, 0, M_PI});
  const Vec3 rv = rotation_vector_between(Quat::Identity(), half_z);
  CHECK(rv.x() == doctest::Approx(0.0));
  CHECK(rv.y() == doctest::Approx(0.0));
  CHECK(std::abs(rv.z()) == doctest::Approx(M_PI));
  CHECK(rv.norm() == doctest::Approx(M_PI));
}

TEST_CASE("rotation_vector_between norm equals geodesic angle oracle") {
  RngStream rng(13);
  for (int i = 0; i < 500; ++i) {
    const Quat a = canonicalized(rng.uniform_quaternion());
    const Quat b = canonicalized(rng.uniform_quaternion());
    const double angle = rotation_vector_between(a, b).norm();
    CHECK(angle == doctest::Approx(oracle::geodesic_angle(a, b)).epsilon(1e-9));
    CHECK(angle <= M_PI + 1e-12);
    // symmetric norms
    CHECK(rotation_vector_between(b, a).norm() == doctest::Approx(angle).epsilon(1e-9));
  }
}

TEST_CASE("quaternion norm preserved through long composition chains") {
  RngStream rng(14);
  Quat q = Quat::Identity();
  for (int i = 0; i < 10000; ++i) {
    q = canonicalized(q * euler_to_quaternion(0.01 * rng.uniform_in_box(Vec3::Constant(-1), Vec3::Constant(1))));
  }
  CHECK(std::abs(q.norm() - 1.0) < 1e-9);
  CHECK(q.w() >= 0.0);
}

TEST_CASE("build_convex_hull of a unit cube") {
  std::vector<Vec3> corners;
  for (int sx : {0, 1})
    for (int sy : {0, 1})
      for (int sz : {0, 1}) corners.push_back(Vec3(sx, sy, sz));

  const ConvexHull hull = build_convex_hull(corners);
  CHECK(hull.vertices.size() == 8);
  CHECK(hull.faces.size() == 6);
  CHECK(hull.volume == doctest::Approx(1.0).epsilon(1e-9));

  SUBCASE("interior point is absorbed") {
    auto with_interior = corners;
    with_interior.push_back({0.5, 0.5, 0.5});
    const ConvexHull hull2 = build_convex_hull(with_interior);
    CHECK(hull2.vertices.size() == 8);
    CHECK(hull2.volume == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("build_convex_hull rejects degenerate input") {
  CHECK_THROWS_AS(build_convex_hull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), std::invalid_argument);
  // coplanar set
  CHECK_THROWS_AS(build_convex_hull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.3, 0.2, 0}}),
                  std::invalid_argument);
  // collinear set
  CHECK_THROWS_AS(build_convex_hull({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}),
                  std::invalid_argument);
}

TEST_CASE("hull built from random points contains every input point") {
  RngStream rng(15);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i)
      pts.push_back(rng.uniform_in_box(Vec3::Constant(-1), Vec3::Constant(1)));
    const ConvexHull hull = build_convex_hull(pts);
    for (const auto& p : pts) CHECK(hull_contains(hull, p, 1e-9));
    CHECK(hull.volume > 0.0);
    // every hull vertex satisfies every face inequality
    for (const auto& v : hull.vertices)
      for (const auto& f : hull.faces) CHECK(f.normal.dot(v) <= f.offset + 1e-9);
  }
}

TEST_CASE("hull_contains on the unit cube") {
  std::vector<Vec3> corners;
  for (int sx : {0, 1})
    for (int sy : {0, 1})
      for (int sz : {0, 1}) corners.push_back(Vec3(sx, sy, sz));
  const ConvexHull hull = build_convex_hull(corners);

  CHECK(hull_contains(hull, {0.5, 0.5, 0.5}, 0.0));
  CHECK_FALSE(hull_contains(hull, {1.5, 0.5, 0.5}, 0.0));
  // margin widens the acceptance band
  CHECK(hull_contains(hull, {1.05, 0.5, 0.5}, 0.1));
}

TEST_CASE("hull_contains agrees with the exhaustive half-space oracle") {
  RngStream rng(16);
  int checked = 0;
  while (checked < 10000) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i)
      pts.push_back(rng.uniform_in_box(Vec3::Constant(-1), Vec3::Constant(1)));
    const ConvexHull hull = build_convex_hull(pts);
    const double margin = rng.uniform(0.0, 0.05);
    for (int i = 0; i < 100; ++i, ++checked) {
      const Vec3 p = rng.uniform_in_box(Vec3::Constant(-1.5), Vec3::Constant(1.5));
      // independent loop over the published face planes
      bool oracle_inside = true;
      double worst_slack = std::numeric_limits<double>::infinity();
      for (const auto& f : hull.faces) {
        const double slack = f.offset + margin - f.normal.dot(p);
        worst_slack = std::min(worst_slack, slack);
        if (slack < 0.0) oracle_inside = false;
      }
      // skip queries inside the +/- margin numerical band around a plane
      if (std::abs(worst_slack) < 1e-12) continue;
      CHECK(hull_contains(hull, p, margin) == oracle_inside);
    }
  }
}

TEST_CASE("closest_distance axis-aligned gap and overlap") {
  CHECK(closest_distance(unit_cube_at(0), unit_cube_at(3)) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(closest_distance(unit_cube_at(0), unit_cube_at(0)) == doctest::Approx(0.0));
  CHECK(closest_distance(unit_cube_at(0), unit_cube_at(0.9)) == doctest::Approx(0.0));
}

TEST_CASE("closest_distance matches the surface-sampling oracle") {
  RngStream rng(17);
  int tested = 0;
  while (tested < 120) {
    const OrientedBox a = random_box(rng);
    const OrientedBox b = random_box(rng);
    const double d = closest_distance(a, b);
    CHECK(d >= 0.0);
    // symmetry
    CHECK(closest_distance(b, a) == doctest::Approx(d).epsilon(1e-9));
    if (d == 0.0) continue;  // overlapping pairs are covered by the contact tests
    const double ref = oracle::sampled_box_distance(a, b);
    CHECK(std::abs(d - ref) < 1e-3);
    ++tested;
  }
}

TEST_CASE("collect_contacts basic spring arithmetic") {
  ShapeSet gripper;
  gripper.boxes.push_back(unit_cube_at(0));
  gripper.palm_index = 0;

  SUBCASE("separated shapes produce no contact") {
    const auto contacts = collect_contacts(gripper, unit_cube_at(3), 1000.0, 10.0, Vec3::Zero());
    CHECK(contacts.empty());
  }

  SUBCASE("penetration by 1 mm with k_p = 1000 gives 1 N") {
    const auto contacts =
        collect_contacts(gripper, unit_cube_at(0.999), 1000.0, 10.0, Vec3::Zero());
    REQUIRE(contacts.size() == 1);
    CHECK(contacts[0].depth == doctest::Approx(0.001).epsilon(1e-9));
    CHECK(contacts[0].force_magnitude == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(contacts[0].normal.x() == doctest::Approx(1.0));
  }

  SUBCASE("damping adds to force on approach and reduces it when separating") {
    const auto approaching =
        collect_contacts(gripper, unit_cube_at(0.999), 1000.0, 10.0, Vec3(-0.1, 0, 0));
    REQUIRE(approaching.size() == 1);
    CHECK(approaching[0].force_magnitude == doctest::Approx(2.0).epsilon(1e-6));

    const auto separating =
        collect_contacts(gripper, unit_cube_at(0.999), 1000.0, 10.0, Vec3(0.5, 0, 0));
    REQUIRE(separating.size() == 1);
    CHECK(separating[0].force_magnitude == doctest::Approx(0.0));
  }
}

TEST_CASE("contact depth matches the direction-sampling penetration oracle") {
  RngStream rng(18);
  int tested = 0;
  while (tested < 60) {
    OrientedBox a = random_box(rng, 0.5);
    OrientedBox b = random_box(rng, 0.5);
    b.center.position = a.center.position +
                        rng.uniform(0.0, 0.5) * rng.on_unit_sphere();
    ShapeSet set;
    set.boxes.push_back(a);
    const auto contacts = collect_contacts(set, b, 100.0, 0.0, Vec3::Zero());
    if (contacts.empty()) continue;
    REQUIRE(contacts.size() == 1);
    CHECK(contacts[0].force_magnitude >= 0.0);
    CHECK(contacts[0].depth > 0.0);
    const double ref = oracle::sampled_penetration_depth(a, b, 100000);
    CHECK(std::abs(contacts[0].depth - ref) < 1e-3);
    ++tested;
  }
}

TEST_CASE("closest_distance is zero exactly when contacts exist") {
  RngStream rng(19);
  for (int i = 0; i < 300; ++i) {
    const OrientedBox a = random_box(rng, 0.8);
    const OrientedBox b = random_box(rng, 0.8);
    ShapeSet set;
    set.boxes.push_back(a);
    const bool touching = closest_distance(a, b) < 1e-12;
    const bool has_contact = !collect_contacts(set, b, 1000.0, 0.0, Vec3::Zero()).empty();
    CHECK(touching == has_contact);
  }
}
