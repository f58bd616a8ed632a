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

#include "coopsim/geometry.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

namespace coopsim {
namespace {

Pose RandomPose(std::mt19937_64& rng, bool full_rotation) {
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> tilt(-0.5, 0.5);
  Pose p;
  p.position = Vec3(pos(rng), pos(rng), pos(rng) / 10.0);
  p.yaw = ang(rng);
  if (full_rotation) {
    p.roll = tilt(rng);
    p.pitch = tilt(rng);
  }
  return p;
}

void CheckIdentity(const Pose& p) {
  CHECK(p.position.norm() < 1e-9);
  CHECK(std::abs(p.roll) < 1e-9);
  CHECK(std::abs(p.pitch) < 1e-9);
  CHECK(std::abs(p.yaw) < 1e-9);
}

Box3D MakeBox(double x, double y, double z, double l, double w, double h,
              double yaw) {
  Box3D b;
  b.center = Vec3(x, y, z);
  b.length = l;
  b.width = w;
  b.height = h;
  b.yaw = yaw;
  return b;
}

TEST_CASE("NormalizeAngle maps into (-pi, pi]") {
  CHECK(NormalizeAngle(kPi) == doctest::Approx(kPi));
  CHECK(NormalizeAngle(-kPi) == doctest::Approx(kPi));
  CHECK(NormalizeAngle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(NormalizeAngle(0.25) == doctest::Approx(0.25));
  CHECK(NormalizeAngle(-7.0 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("Compose") {
  SUBCASE("identity is neutral") {
    Pose p = Pose::FromYaw(0.7, Vec3(1, 2, 3));
    CHECK(Compose(Pose::Identity(), p) == p);
  }
  SUBCASE("pure translations add") {
    const Pose r = Compose(Pose::Translation(1, 0, 0), Pose::Translation(0, 2, 0));
    CHECK(r.position.isApprox(Vec3(1, 2, 0)));
    CHECK(r.yaw == 0.0);
  }
  SUBCASE("yaw pi/2 then translate: origin lands on (0,1,0)") {
    const Pose r = Compose(Pose::FromYaw(kPi / 2), Pose::Translation(1, 0, 0));
    const Vec3 p = r.Apply(Vec3::Zero());
    CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.y() == doctest::Approx(1.0));
    CHECK(p.z() == doctest::Approx(0.0));
  }
  SUBCASE("composition with the inverse is identity") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      const Pose p = RandomPose(rng, i % 2 == 0);
      CheckIdentity(Compose(p, Inverse(p)));
      CheckIdentity(Compose(Inverse(p), p));
    }
  }
  SUBCASE("associative on random triples") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 500; ++i) {
      const bool full = i % 3 == 0;
      const Pose a = RandomPose(rng, full), b = RandomPose(rng, full),
                 c = RandomPose(rng, full);
      const Eigen::Matrix4d lhs = Compose(Compose(a, b), c).Matrix();
      const Eigen::Matrix4d rhs = Compose(a, Compose(b, c)).Matrix();
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("maps through b then a") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
      const Pose a = RandomPose(rng, true), b = RandomPose(rng, true);
      const Vec3 x(1.5, -2.0, 0.3);
      CHECK((Compose(a, b).Apply(x) - a.Apply(b.Apply(x))).norm() < 1e-9);
    }
  }
}

TEST_CASE("TransformBox") {
  const Box3D b = MakeBox(1, 0, 0, 4, 2, 1.5, 0.0);
  CHECK(TransformBox(Pose::Identity(), b) == b);

  const Box3D r = TransformBox(Pose::FromYaw(kPi), b);
  CHECK(r.center.x() == doctest::Approx(-1.0));
  CHECK(std::abs(r.center.y()) < 1e-12);
  CHECK(r.yaw == doctest::Approx(kPi));

  SUBCASE("corners of the output equal transformed input corners") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-10, 10), d(0.5, 5), a(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
      const Box3D in = MakeBox(u(rng), u(rng), u(rng), d(rng), d(rng), d(rng), a(rng));
      const Pose p = RandomPose(rng, false);
      const Box3D out = TransformBox(p, in);
      const auto expected = in.Corners();
      const auto actual = out.Corners();
      for (std::size_t k = 0; k < 8; ++k) {
        CHECK((p.Apply(expected[k]) - actual[k]).norm() < 1e-9);
      }
      CHECK(out.Volume() == in.Volume());
    }
  }
}

TEST_CASE("IouBev") {
  const Box3D a = MakeBox(0, 0, 0, 2, 2, 1, 0);
  CHECK(IouBev(a, a) == doctest::Approx(1.0));
  CHECK(IouBev(a, MakeBox(100, 0, 0, 1, 1, 1, 0)) == 0.0);
  // 2x2 squares offset by 1: intersection 2, union 6.
  CHECK(IouBev(a, MakeBox(1, 0, 0, 2, 2, 1, 0)) == doctest::Approx(1.0 / 3.0));
  // Touching edges only.
  CHECK(IouBev(a, MakeBox(2, 0, 0, 2, 2, 1, 0)) == 0.0);
  // Square rotated 45 deg inside a bigger square: area ratio 2/(4*... )
  const Box3D big = MakeBox(0, 0, 0, 4, 4, 1, 0);
  const Box3D diamond = MakeBox(0, 0, 0, std::sqrt(2.0), std::sqrt(2.0), 1, kPi / 4);
  CHECK(IouBev(big, diamond) == doctest::Approx(2.0 / 16.0));

  SUBCASE("symmetric and bounded") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2, 2), d(0.5, 4), ang(-kPi, kPi);
    for (int i = 0; i < 500; ++i) {
      const Box3D x = MakeBox(u(rng), u(rng), 0, d(rng), d(rng), 1, ang(rng));
      const Box3D y = MakeBox(u(rng), u(rng), 0, d(rng), d(rng), 1, ang(rng));
      const double xy = IouBev(x, y);
      CHECK(xy == doctest::Approx(IouBev(y, x)).epsilon(1e-9));
      CHECK(xy >= 0.0);
      CHECK(xy <= 1.0);
    }
  }
  SUBCASE("yaw + pi describes the same footprint") {
    const Box3D x = MakeBox(1, 2, 0, 4, 2, 1, 0.3);
    Box3D y = x;
    y.yaw = NormalizeAngle(x.yaw + kPi);
    CHECK(IouBev(x, y) == doctest::Approx(1.0));
  }
}

TEST_CASE("Iou3d") {
  const Box3D a = MakeBox(0, 0, 0, 3, 2, 1.5, 0.4);
  CHECK(Iou3d(a, a) == doctest::Approx(1.0));
  Box3D above = a;
  above.center.z() += a.height;
  CHECK(Iou3d(a, above) == 0.0);
  Box3D half = a;
  half.center.z() += a.height / 2;
  CHECK(Iou3d(a, half) == doctest::Approx(1.0 / 3.0));

  SUBCASE("matches the sampling oracle") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.5, 1.5), d(0.5, 4), ang(-kPi, kPi);
    for (int i = 0; i < 10; ++i) {
      const Box3D x = MakeBox(u(rng), u(rng), u(rng) / 3, d(rng), d(rng), d(rng), ang(rng));
      const Box3D y = MakeBox(u(rng), u(rng), u(rng) / 3, d(rng), d(rng), d(rng), ang(rng));
      const testing::OracleBox ox{x.center.x(), x.center.y(), x.center.z(),
                                  x.length, x.width, x.height, x.yaw};
      const testing::OracleBox oy{y.center.x(), y.center.y(), y.center.z(),
                                  y.length, y.width, y.height, y.yaw};
      CHECK(std::abs(Iou3d(x, y) - testing::MonteCarloIou3d(ox, oy, 200000, i)) <= 0.02);
    }
  }
}

TEST_CASE("Hungarian") {
  SUBCASE("zero diagonal") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
    const auto r = Hungarian(c);
    REQUIRE(r.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(r[i] == std::pair{i, i});
  }
  SUBCASE("2x2") {
    Eigen::MatrixXd c(2, 2);
    c << 1, 2, 2, 1;
    const auto r = Hungarian(c);
    CHECK(r == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  }
  SUBCASE("rectangular and empty") {
    CHECK(Hungarian(Eigen::MatrixXd(0, 3)).empty());
    Eigen::MatrixXd wide(2, 3);
    wide << 5, 1, 9, 1, 5, 9;
    CHECK(Hungarian(wide) == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
    Eigen::MatrixXd tall = wide.transpose();
    CHECK(Hungarian(tall) == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
  }
  SUBCASE("equals brute force on random matrices") {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> val(-5.0, 10.0);
    for (int trial = 0; trial < 300; ++trial) {
      Eigen::MatrixXd c(dim(rng), dim(rng));
      for (int i = 0; i < c.size(); ++i) c.data()[i] = val(rng);
      const auto r = Hungarian(c);
      CHECK(r.size() == static_cast<std::size_t>(std::min(c.rows(), c.cols())));
      double total = 0.0;
      std::vector<int> used_rows, used_cols;
      for (const auto& [i, j] : r) {
        total += c(i, j);
        used_rows.push_back(i);
        used_cols.push_back(j);
      }
      std::sort(used_cols.begin(), used_cols.end());
      CHECK(std::adjacent_find(used_cols.begin(), used_cols.end()) == used_cols.end());
      CHECK(std::adjacent_find(used_rows.begin(), used_rows.end()) == used_rows.end());
      CHECK(total == doctest::Approx(testing::BruteForceMinCost(c)));
    }
  }
}

TEST_CASE("LatLonToLocal") {
  const GeoOrigin origin{49.0, 8.4, 110.0};
  CHECK(LatLonToLocal(origin, 49.0, 8.4, 110.0).norm() == 0.0);

  const GeoOrigin equator{0.0, 0.0, 0.0};
  // R * 1e-5 deg in radians = 6378137 * 1.745329e-7 = 1.11319 m.
  const Vec3 north = LatLonToLocal(equator, 1e-5, 0.0, 0.0);
  CHECK(north.y() == doctest::Approx(1.1132).epsilon(1e-4));
  CHECK(north.x() == 0.0);

  const Vec3 local = LatLonToLocal(origin, 49.001, 8.402, 115.0);
  const LatLonAlt back = LocalToLatLon(origin, local);
  CHECK(std::abs(back.lat - 49.001) < 1e-6);
  CHECK(std::abs(back.lon - 8.402) < 1e-6);
  CHECK(back.alt == doctest::Approx(115.0));

  CHECK_THROWS_AS(LatLonToLocal(origin, 90.0, 0.0, 0.0), Error);
  CHECK_THROWS_AS(LatLonToLocal(origin, -95.0, 0.0, 0.0), Error);
}

}  // namespace
}  // namespace coopsim
