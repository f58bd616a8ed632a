// Copyright 2026 The coopsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coopsim/lidar_sim.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

namespace coopsim {
namespace {

Box3D MakeBox(double x, double y, double z, double l, double w, double h,
              double yaw = 0.0) {
  Box3D b;
  b.center = Vec3(x, y, z);
  b.length = l;
  b.width = w;
  b.height = h;
  b.yaw = yaw;
  return b;
}

testing::OracleBox ToOracle(const Box3D& b) {
  return {b.center.x(), b.center.y(), b.center.z(), b.length, b.width, b.height, b.yaw};
}

/// First entry distance found by marching then bisecting on the oracle's
/// containment predicate.
std::optional<double> MarchToBox(const Vec3& o, const Vec3& d, const Box3D& b,
                                 double max_t) {
  const auto ob = ToOracle(b);
  auto inside = [&](double t) {
    const Vec3 p = o + t * d;
    return ob.Contains(p.x(), p.y(), p.z());
  };
  if (inside(0.0)) return 0.0;
  const double step = 1e-3;
  for (double t = step; t <= max_t; t += step) {
    if (!inside(t)) continue;
    double lo = t - step, hi = t;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (inside(mid) ? hi : lo) = mid;
    }
    return hi;
  }
  return std::nullopt;
}

WorldSnapshot WorldOf(std::vector<Box3D> boxes) {
  WorldSnapshot w;
  int i = 0;
  for (const auto& b : boxes) {
    ActorBox a;
    a.id = "a" + std::to_string(i++);
    a.box = b;
    a.pose = Pose::FromYaw(b.yaw, b.center);
    w.actors.push_back(a);
  }
  return w;
}

double FaceResidual(const Box3D& b, const Vec3& p) {
  const Vec3 d = p - b.center;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double lx = std::abs(c * d.x() + s * d.y()) - b.length / 2;
  const double ly = std::abs(-s * d.x() + c * d.y()) - b.width / 2;
  const double lz = std::abs(d.z()) - b.height / 2;
  // On the surface: inside-or-on every slab, and on at least one face.
  const double outside = std::max({lx, ly, lz, 0.0});
  const double to_face = std::min({std::abs(lx), std::abs(ly), std::abs(lz)});
  return std::max(outside, to_face);
}

TEST_CASE("RayHit") {
  const Box3D cube = MakeBox(5, 0, 0, 1, 1, 1);
  const auto t = RayHit(Vec3::Zero(), Vec3::UnitX(), cube);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(4.5));
  CHECK_FALSE(RayHit(Vec3::Zero(), -Vec3::UnitX(), cube).has_value());
  CHECK_FALSE(RayHit(Vec3::Zero(), Vec3::UnitY(), cube).has_value());
  // From inside, the exit distance is the nearest non-negative hit.
  CHECK(*RayHit(Vec3(5, 0, 0), Vec3::UnitX(), cube) == doctest::Approx(0.5));

  SUBCASE("yawed box matches the marching oracle") {
    const Box3D yawed = MakeBox(6, 1, 0.5, 3, 1.5, 2, kPi / 4);
    const Vec3 o(0, 0, 0.5);
    const Vec3 d = (yawed.center - o).normalized();
    const auto hit = RayHit(o, d, yawed);
    const auto oracle = MarchToBox(o, d, yawed, 20.0);
    REQUIRE(hit.has_value());
    REQUIRE(oracle.has_value());
    CHECK(std::abs(*hit - *oracle) < 1e-6);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) {
      const Vec3 dir = (yawed.center + Vec3(u(rng), u(rng), u(rng)) * 2.0 - o).normalized();
      const auto h = RayHit(o, dir, yawed);
      const auto m = MarchToBox(o, dir, yawed, 20.0);
      REQUIRE(h.has_value() == m.has_value());
      if (h) CHECK(std::abs(*h - *m) < 1e-6);
    }
  }
}

TEST_CASE("LidarParams validation") {
  LidarParams p;
  CHECK_NOTHROW(ValidateLidarParams(p));
  CHECK(p.AzimuthSteps() == 900);
  p.vertical_min_deg = 10.0;
  CHECK_THROWS_AS(ValidateLidarParams(p), Error);
  p = LidarParams{};
  p.dropout_prob = 1.0;
  CHECK_THROWS_AS(ValidateLidarParams(p), Error);
  p = LidarParams{};
  p.azimuth_min_deg = -10;
  p.azimuth_max_deg = 10;
  p.azimuth_step_deg = 5;
  CHECK(p.AzimuthSteps() == 5);
  p.azimuth_step_deg = 25;
  CHECK_THROWS_AS(ValidateLidarParams(p), Error);
}

TEST_CASE("Scan of an empty world returns only ground") {
  LidarParams p;
  p.channels = 16;
  p.vertical_min_deg = -30;
  p.vertical_max_deg = -5;
  p.azimuth_step_deg = 2.0;
  const PointCloud cloud = Scan(Pose::Translation(0, 0, 2), p, WorldSnapshot{}, 1);
  CHECK(cloud.points.size() == static_cast<std::size_t>(16 * 180));
  for (const auto& pt : cloud.points) {
    CHECK(pt.z == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(pt.intensity == kGroundIntensity);
  }
  // Upward-looking channels never hit anything.
  p.vertical_min_deg = 1;
  p.vertical_max_deg = 10;
  CHECK(Scan(Pose::Translation(0, 0, 2), p, WorldSnapshot{}, 1).points.empty());
}

TEST_CASE("Scan occlusion") {
  LidarParams p;
  p.channels = 32;
  p.vertical_min_deg = -15;
  p.vertical_max_deg = 15;
  p.azimuth_min_deg = -30;
  p.azimuth_max_deg = 30;
  p.azimuth_step_deg = 0.2;
  const Box3D near = MakeBox(10, 0, 1, 2, 4, 4);
  const Box3D far = MakeBox(20, 0, 1, 2, 2, 2);
  const Pose sensor = Pose::Translation(0, 0, 1);

  const PointCloud alone = Scan(sensor, p, WorldOf({far}), 3);
  int on_far = 0;
  for (const auto& pt : alone.points) {
    if (FaceResidual(far, sensor.Apply(Vec3(pt.x, pt.y, pt.z))) < 1e-4) ++on_far;
  }
  CHECK(on_far > 50);

  const PointCloud blocked = Scan(sensor, p, WorldOf({near, far}), 3);
  for (const auto& pt : blocked.points) {
    CHECK(FaceResidual(far, sensor.Apply(Vec3(pt.x, pt.y, pt.z))) > 1e-4);
  }

  SUBCASE("ignored actor is transparent") {
    WorldSnapshot w = WorldOf({near, far});
    const PointCloud seen = Scan(sensor, p, w, 3, "lidar", "a0");
    int hits_far = 0;
    for (const auto& pt : seen.points) {
      if (FaceResidual(far, sensor.Apply(Vec3(pt.x, pt.y, pt.z))) < 1e-4) ++hits_far;
    }
    CHECK(hits_far == on_far);
  }
}

TEST_CASE("Noiseless scan points lie on box faces") {
  LidarParams p;
  p.vertical_min_deg = -20;
  p.vertical_max_deg = 10;
  const Box3D b = MakeBox(7, 2, 0.8, 4.5, 1.8, 1.6, 0.6);
  const Pose sensor = Pose::FromYaw(0.2, Vec3(0, 0, 1.8));
  const PointCloud cloud = Scan(sensor, p, WorldOf({b}), 9);
  int actor_points = 0;
  for (const auto& pt : cloud.points) {
    if (pt.intensity != kActorIntensity) continue;
    ++actor_points;
    CHECK(FaceResidual(b, sensor.Apply(Vec3(pt.x, pt.y, pt.z))) < 1e-6);
  }
  CHECK(actor_points > 100);
}

TEST_CASE("Scan properties on random worlds") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(-25, 25), dim(0.5, 5), ang(-kPi, kPi);
  LidarParams p;
  p.channels = 8;
  p.azimuth_step_deg = 1.0;
  p.max_range = 40.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Box3D> boxes;
    for (int i = 0; i < 6; ++i) {
      const double h = dim(rng);
      boxes.push_back(MakeBox(pos(rng), pos(rng), h / 2, dim(rng), dim(rng), h, ang(rng)));
    }
    const WorldSnapshot w = WorldOf(boxes);
    const Pose sensor = Pose::FromYaw(ang(rng), Vec3(0, 0, 1.7));
    const PointCloud cloud = Scan(sensor, p, w, trial);
    CHECK(cloud.points.size() <= static_cast<std::size_t>(p.channels * p.AzimuthSteps()));
    for (const auto& pt : cloud.points) {
      const Vec3 local(pt.x, pt.y, pt.z);
      CHECK(std::isfinite(local.norm()));
      CHECK(local.norm() <= p.max_range + 1e-4);
      // Nothing strictly between the sensor and the return.
      const Vec3 dir = sensor.ApplyRotation(local.normalized());
      for (const auto& b : boxes) {
        const auto entry = MarchToBox(sensor.position, dir, b, local.norm() - 1e-3);
        CHECK_FALSE(entry.has_value());
      }
    }
  }
}

TEST_CASE("Scan noise, dropout and determinism") {
  LidarParams p;
  p.range_noise_sigma = 0.05;
  p.dropout_prob = 0.3;
  const WorldSnapshot w = WorldOf({MakeBox(8, 0, 1, 4, 2, 2), MakeBox(-5, 5, 1, 2, 2, 2)});
  const Pose sensor = Pose::Translation(0, 0, 1.8);
  const PointCloud a = Scan(sensor, p, w, 123);
  const PointCloud b = Scan(sensor, p, w, 123);
  CHECK(a == b);
  const PointCloud c = Scan(sensor, p, w, 124);
  CHECK_FALSE(a == c);

  LidarParams clean = p;
  clean.range_noise_sigma = 0.0;
  clean.dropout_prob = 0.0;
  const auto full = Scan(sensor, clean, w, 123).points.size();
  const double kept = static_cast<double>(a.points.size()) / static_cast<double>(full);
  CHECK(kept == doctest::Approx(0.7).epsilon(0.05));
  for (const auto& pt : a.points) {
    CHECK(Vec3(pt.x, pt.y, pt.z).norm() <= p.max_range + 5 * p.range_noise_sigma + 1e-4);
  }
}

}  // namespace
}  // namespace coopsim
