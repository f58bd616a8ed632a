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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/lidar_sim.hpp"

namespace coopsim::kitti {

/// Malformed or truncated KITTI input. Readers raise nothing else.
class ParseError : public Error {
 public:
  using Error::Error;
};

// --- velodyne_points ------------------------------------------------------

/// Little-endian float32 (x, y, z, intensity) quadruples, no header.
void WriteVelodyne(const PointCloud& cloud, std::ostream& out);
PointCloud ReadVelodyne(std::istream& in, std::string frame = "velodyne");

void WriteVelodyneFile(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud ReadVelodyneFile(const std::filesystem::path& path,
                            std::string frame = "velodyne");

// --- oxts -----------------------------------------------------------------

constexpr int kOxtsFieldCount = 30;

/// One GPS/IMU sample. Index order follows the KITTI raw dataformat.txt:
/// lat lon alt roll pitch yaw vn ve vf vl vu ax ay az af al au wx wy wz wf wl
/// wu pos_accuracy vel_accuracy navstat numsats posmode velmode orimode.
struct OxtsRecord {
  std::array<double, kOxtsFieldCount> values{};

  double lat() const { return values[0]; }
  double lon() const { return values[1]; }
  double alt() const { return values[2]; }
  double roll() const { return values[3]; }
  double pitch() const { return values[4]; }
  double yaw() const { return values[5]; }

  bool operator==(const OxtsRecord&) const = default;
};

/// Record for a simulated pose: geodetic position and attitude filled in,
/// dynamics zeroed, navstat 4, numsats 10, modes 0.
OxtsRecord OxtsFromPose(const GeoOrigin& origin, const Pose& pose);
/// Global pose recovered from the geodetic fields and attitude.
Pose PoseFromOxts(const GeoOrigin& origin, const OxtsRecord& record);

void WriteOxts(const OxtsRecord& record, std::ostream& out);
OxtsRecord ParseOxtsLine(const std::string& line);
OxtsRecord ReadOxts(std::istream& in);

// --- tracking labels ------------------------------------------------------

struct LabelRecord {
  int frame = 0;
  int track_id = -1;
  std::string type = "Car";
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{-1.0, -1.0, -1.0, -1.0};  ///< left top right bottom
  double height = 1.0;
  double width = 1.0;
  double length = 1.0;
  Vec3 location = Vec3::Zero();  ///< camera frame, bottom center
  double rotation_y = 0.0;
  std::optional<double> score;
};

/// One line per record, 6-decimal fixed floats.
void WriteLabels(const std::vector<LabelRecord>& records, std::ostream& out);
/// Accepts 17-field and 18-field (scored) lines; blank lines are skipped.
std::vector<LabelRecord> ReadLabels(std::istream& in);

// --- tracklet_labels.xml --------------------------------------------------

struct TrackletPose {
  double tx = 0.0, ty = 0.0, tz = 0.0;  ///< velodyne frame, box bottom center
  double rx = 0.0, ry = 0.0, rz = 0.0;
  int occlusion = 0;
  int truncation = 0;
};

struct Tracklet {
  std::string object_type;
  double h = 0.0, w = 0.0, l = 0.0;
  int first_frame = 0;
  std::vector<TrackletPose> poses;
};

std::vector<Tracklet> ReadTracklets(std::istream& in);
void WriteTracklets(const std::vector<Tracklet>& tracklets, std::ostream& out);

/// Per-frame labels for frames [0, frame_count); track_id is the tracklet's
/// list index.
std::vector<std::vector<LabelRecord>> TrackletsToFrameLabels(
    const std::vector<Tracklet>& tracklets, int frame_count);

// --- frame conventions ----------------------------------------------------

/// Camera frame is the velodyne frame rotated to x-right, y-down, z-forward.
Vec3 VelodyneToCamera(const Vec3& p);
Vec3 CameraToVelodyne(const Vec3& p);
/// Heading about velodyne +z to KITTI rotation_y about camera +y, and back.
double YawToRotationY(double yaw);
double RotationYToYaw(double rotation_y);

struct PinholeCamera {
  double focal = 721.5377;
  double cx = 609.5593;
  double cy = 172.854;
  int image_width = 1242;
  int image_height = 375;
};

/// Axis-aligned hull of the projected corners, clamped to the image;
/// (-1,-1,-1,-1) when no corner is in front of the camera.
std::array<double, 4> ProjectBox(const Box3D& velodyne_box,
                                 const PinholeCamera& camera = {});

/// Velodyne-frame box (geometric center) to a KITTI label.
LabelRecord BoxToLabel(const Box3D& velodyne_box, const std::string& type,
                       int frame, int track_id,
                       std::optional<double> score = std::nullopt);
/// Inverse of BoxToLabel's geometric part.
Box3D LabelToBox(const LabelRecord& label);

Box3D TrackletPoseToBox(const Tracklet& tracklet, const TrackletPose& pose);
TrackletPose BoxToTrackletPose(const Box3D& velodyne_box);

/// calib.txt for the built-in camera convention (tracking-benchmark keys).
void WriteCalib(std::ostream& out, const PinholeCamera& camera = {});

// --- directory layout -----------------------------------------------------

/// "0000000042" + extension.
std::string FrameFileName(int frame, const std::string& extension);
std::filesystem::path VelodynePath(const std::filesystem::path& root, int frame);
std::filesystem::path OxtsPath(const std::filesystem::path& root, int frame);
std::filesystem::path LabelPath(const std::filesystem::path& root, int sequence = 0);

}  // namespace coopsim::kitti
