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

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace coopsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vec3 = Eigen::Vector3d;

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
double NormalizeAngle(double rad);

/// Rigid transform. Rotation is applied as Rz(yaw) * Ry(pitch) * Rx(roll).
struct Pose {
  Vec3 position = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static Pose Identity() { return {}; }
  static Pose Translation(double x, double y, double z);
  static Pose FromYaw(double yaw, const Vec3& position = Vec3::Zero());

  Eigen::Matrix3d Rotation() const;
  Eigen::Matrix4d Matrix() const;
  static Pose FromMatrix(const Eigen::Matrix4d& m);

  /// Maps a point from the child frame into the parent frame.
  Vec3 Apply(const Vec3& point) const;
  Vec3 ApplyRotation(const Vec3& dir) const;

  bool operator==(const Pose&) const = default;
};

/// Pose that maps a point through `b` first, then `a`.
Pose Compose(const Pose& a, const Pose& b);
Pose Inverse(const Pose& p);

/// Gravity-aligned oriented box; `center` is the geometric center and `yaw`
/// rotates the length axis away from +x.
struct Box3D {
  Vec3 center = Vec3::Zero();
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;

  double Volume() const { return length * width * height; }
  /// Bottom face counter-clockwise, then top face in the same order.
  std::array<Vec3, 8> Corners() const;
  /// Footprint corners in counter-clockwise order.
  std::array<Eigen::Vector2d, 4> FootprintCorners() const;
  /// True if `p` lies strictly inside the box.
  bool ContainsStrict(const Vec3& p) const;

  bool operator==(const Box3D&) const = default;
};

/// Throws Error unless all dims are strictly positive and finite.
void ValidateBox(const Box3D& box);

Box3D TransformBox(const Pose& p, const Box3D& b);

/// Area of a convex polygon given in counter-clockwise order.
double PolygonArea(const std::vector<Eigen::Vector2d>& poly);

/// Sutherland-Hodgman clip of convex `subject` against convex `clip`; both
/// counter-clockwise.
std::vector<Eigen::Vector2d> ClipConvex(std::vector<Eigen::Vector2d> subject,
                                        const std::vector<Eigen::Vector2d>& clip);

double BevIntersectionArea(const Box3D& a, const Box3D& b);
double IouBev(const Box3D& a, const Box3D& b);
double Iou3d(const Box3D& a, const Box3D& b);

/// Minimum-cost assignment of a rectangular cost matrix. Returns
/// min(rows, cols) (row, col) pairs sorted by row.
std::vector<std::pair<int, int>> Hungarian(const Eigen::MatrixXd& cost);

struct GeoOrigin {
  double lat0 = 0.0;
  double lon0 = 0.0;
  double alt0 = 0.0;
};

constexpr double kEarthRadius = 6378137.0;

/// Flat-earth projection around `origin`: x east, y north, z up.
Vec3 LatLonToLocal(const GeoOrigin& origin, double lat, double lon, double alt);

struct LatLonAlt {
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;
};

LatLonAlt LocalToLatLon(const GeoOrigin& origin, const Vec3& local);

}  // namespace coopsim
