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

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

namespace coopsim {

double NormalizeAngle(double rad) {
  if (!std::isfinite(rad)) return rad;
  double r = std::fmod(rad, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

Pose Pose::Translation(double x, double y, double z) {
  Pose p;
  p.position = Vec3(x, y, z);
  return p;
}

Pose Pose::FromYaw(double yaw, const Vec3& position) {
  Pose p;
  p.position = position;
  p.yaw = NormalizeAngle(yaw);
  return p;
}

Eigen::Matrix3d Pose::Rotation() const {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Eigen::Matrix4d Pose::Matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = Rotation();
  m.topRightCorner<3, 1>() = position;
  return m;
}

Pose Pose::FromMatrix(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  Pose p;
  p.position = m.topRightCorner<3, 1>();
  p.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  p.roll = NormalizeAngle(std::atan2(r(2, 1), r(2, 2)));
  p.yaw = NormalizeAngle(std::atan2(r(1, 0), r(0, 0)));
  p.pitch = NormalizeAngle(p.pitch);
  return p;
}

Vec3 Pose::Apply(const Vec3& point) const {
  return Rotation() * point + position;
}

Vec3 Pose::ApplyRotation(const Vec3& dir) const { return Rotation() * dir; }

Pose Compose(const Pose& a, const Pose& b) {
  // Yaw-only poses are the common case; skip the matrix round trip for them.
  if (a.roll == 0.0 && a.pitch == 0.0 && b.roll == 0.0 && b.pitch == 0.0) {
    const double c = std::cos(a.yaw);
    const double s = std::sin(a.yaw);
    Pose out;
    out.position = Vec3(c * b.position.x() - s * b.position.y() + a.position.x(),
                        s * b.position.x() + c * b.position.y() + a.position.y(),
                        b.position.z() + a.position.z());
    out.yaw = NormalizeAngle(a.yaw + b.yaw);
    return out;
  }
  return Pose::FromMatrix(a.Matrix() * b.Matrix());
}

Pose Inverse(const Pose& p) {
  if (p.roll == 0.0 && p.pitch == 0.0) {
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    Pose out;
    out.position = Vec3(-(c * p.position.x() + s * p.position.y()),
                        -(-s * p.position.x() + c * p.position.y()),
                        -p.position.z());
    out.yaw = NormalizeAngle(-p.yaw);
    return out;
  }
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = p.Rotation().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * p.position;
  return Pose::FromMatrix(inv);
}

std::array<Eigen::Vector2d, 4> Box3D::FootprintCorners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hl = length / 2.0;
  const double hw = width / 2.0;
  const std::array<Eigen::Vector2d, 4> local = {
      Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw),
      Eigen::Vector2d(-hl, -hw), Eigen::Vector2d(hl, -hw)};
  std::array<Eigen::Vector2d, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = Eigen::Vector2d(center.x() + c * local[i].x() - s * local[i].y(),
                             center.y() + s * local[i].x() + c * local[i].y());
  }
  return out;
}

std::array<Vec3, 8> Box3D::Corners() const {
  const auto fp = FootprintCorners();
  std::array<Vec3, 8> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = Vec3(fp[i].x(), fp[i].y(), center.z() - height / 2.0);
    out[i + 4] = Vec3(fp[i].x(), fp[i].y(), center.z() + height / 2.0);
  }
  return out;
}

bool Box3D::ContainsStrict(const Vec3& p) const {
  const Vec3 d = p - center;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) < length / 2.0 && std::abs(ly) < width / 2.0 &&
         std::abs(d.z()) < height / 2.0;
}

void ValidateBox(const Box3D& box) {
  for (double v : {box.length, box.width, box.height}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error("box dims must be strictly positive");
    }
  }
}

Box3D TransformBox(const Pose& p, const Box3D& b) {
  Box3D out = b;
  out.center = p.Apply(b.center);
  out.yaw = NormalizeAngle(b.yaw + p.yaw);
  return out;
}

double PolygonArea(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return twice / 2.0;
}

namespace {

double Cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
             const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

Eigen::Vector2d LineIntersection(const Eigen::Vector2d& p1,
                                 const Eigen::Vector2d& p2,
                                 const Eigen::Vector2d& a,
                                 const Eigen::Vector2d& b) {
  const double d1 = Cross(a, b, p1);
  const double d2 = Cross(a, b, p2);
  const double t = d1 / (d1 - d2);
  return p1 + t * (p2 - p1);
}

}  // namespace

std::vector<Eigen::Vector2d> ClipConvex(
    std::vector<Eigen::Vector2d> subject,
    const std::vector<Eigen::Vector2d>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Eigen::Vector2d& a = clip[e];
    const Eigen::Vector2d& b = clip[(e + 1) % clip.size()];
    std::vector<Eigen::Vector2d> input;
    input.swap(subject);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Eigen::Vector2d& cur = input[i];
      const Eigen::Vector2d& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = Cross(a, b, cur) >= 0.0;
      const bool prev_in = Cross(a, b, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) subject.push_back(LineIntersection(prev, cur, a, b));
        subject.push_back(cur);
      } else if (prev_in) {
        subject.push_back(LineIntersection(prev, cur, a, b));
      }
    }
  }
  return subject;
}

double BevIntersectionArea(const Box3D& a, const Box3D& b) {
  const auto ca = a.FootprintCorners();
  const auto cb = b.FootprintCorners();
  const std::vector<Eigen::Vector2d> pa(ca.begin(), ca.end());
  const std::vector<Eigen::Vector2d> pb(cb.begin(), cb.end());
  const auto poly = ClipConvex(pa, pb);
  if (poly.size() < 3) return 0.0;
  const double area = PolygonArea(poly);
  return area < 1e-9 ? 0.0 : area;
}

double IouBev(const Box3D& a, const Box3D& b) {
  const double inter = BevIntersectionArea(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.length * a.width + b.length * b.width - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double Iou3d(const Box3D& a, const Box3D& b) {
  const double top = std::min(a.center.z() + a.height / 2.0,
                              b.center.z() + b.height / 2.0);
  const double bottom = std::max(a.center.z() - a.height / 2.0,
                                 b.center.z() - b.height / 2.0);
  const double dz = top - bottom;
  if (dz <= 0.0) return 0.0;
  const double inter = BevIntersectionArea(a, b) * dz;
  if (inter <= 0.0) return 0.0;
  const double uni = a.Volume() + b.Volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::pair<int, int>> Hungarian(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return {};
  const bool transposed = rows > cols;
  const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());

  // Shortest augmenting path with potentials, 1-indexed; column 0 is virtual.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<int, int>> out;
  out.reserve(n);
  for (int j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    if (transposed) {
      out.emplace_back(j - 1, match[j] - 1);
    } else {
      out.emplace_back(match[j] - 1, j - 1);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {
constexpr double kDeg = kPi / 180.0;

void CheckLatitude(double lat) {
  if (!(std::abs(lat) < 90.0)) {
    throw Error("latitude must satisfy |lat| < 90, got " + std::to_string(lat));
  }
}
}  // namespace

Vec3 LatLonToLocal(const GeoOrigin& origin, double lat, double lon,
                   double alt) {
  CheckLatitude(origin.lat0);
  CheckLatitude(lat);
  const double x = kEarthRadius * std::cos(origin.lat0 * kDeg) *
                   (lon - origin.lon0) * kDeg;
  const double y = kEarthRadius * (lat - origin.lat0) * kDeg;
  return {x, y, alt - origin.alt0};
}

LatLonAlt LocalToLatLon(const GeoOrigin& origin, const Vec3& local) {
  CheckLatitude(origin.lat0);
  LatLonAlt out;
  out.lat = origin.lat0 + local.y() / kEarthRadius / kDeg;
  out.lon = origin.lon0 +
            local.x() / (kEarthRadius * std::cos(origin.lat0 * kDeg)) / kDeg;
  out.alt = origin.alt0 + local.z();
  return out;
}

}  // namespace coopsim
