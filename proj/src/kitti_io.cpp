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

#include "coopsim/kitti_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace coopsim::kitti {

namespace {

std::uint32_t ToLittleEndian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
}

std::vector<std::string> SplitWhitespace(const std::string& line) {
  std::istringstream in(line);
  return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

bool ParseDouble(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool ParseInt(const std::string& token, int& out) {
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

// --- velodyne_points ------------------------------------------------------

void WriteVelodyne(const PointCloud& cloud, std::ostream& out) {
  std::vector<std::uint32_t> words;
  words.reserve(cloud.points.size() * 4);
  for (const auto& p : cloud.points) {
    for (float f : {p.x, p.y, p.z, p.intensity}) {
      words.push_back(ToLittleEndian(std::bit_cast<std::uint32_t>(f)));
    }
  }
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
}

PointCloud ReadVelodyne(std::istream& in, std::string frame) {
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw ParseError("truncated velodyne payload: " + std::to_string(bytes.size()) +
                     " bytes is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.frame = std::move(frame);
  cloud.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    float f[4];
    for (int k = 0; k < 4; ++k) {
      std::uint32_t w;
      std::memcpy(&w, bytes.data() + i * 16 + k * 4, 4);
      f[k] = std::bit_cast<float>(ToLittleEndian(w));
    }
    cloud.points[i] = {f[0], f[1], f[2], f[3]};
  }
  return cloud;
}

void WriteVelodyneFile(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  WriteVelodyne(cloud, out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

PointCloud ReadVelodyneFile(const std::filesystem::path& path, std::string frame) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return ReadVelodyne(in, std::move(frame));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// --- oxts -----------------------------------------------------------------

OxtsRecord OxtsFromPose(const GeoOrigin& origin, const Pose& pose) {
  OxtsRecord r;
  const LatLonAlt g = LocalToLatLon(origin, pose.position);
  r.values[0] = g.lat;
  r.values[1] = g.lon;
  r.values[2] = g.alt;
  r.values[3] = pose.roll;
  r.values[4] = pose.pitch;
  r.values[5] = pose.yaw;
  r.values[25] = 4.0;   // navstat
  r.values[26] = 10.0;  // numsats
  return r;
}

Pose PoseFromOxts(const GeoOrigin& origin, const OxtsRecord& record) {
  Pose p;
  p.position = LatLonToLocal(origin, record.lat(), record.lon(), record.alt());
  p.roll = NormalizeAngle(record.roll());
  p.pitch = NormalizeAngle(record.pitch());
  p.yaw = NormalizeAngle(record.yaw());
  return p;
}

void WriteOxts(const OxtsRecord& record, std::ostream& out) {
  std::string line;
  for (int i = 0; i < kOxtsFieldCount; ++i) {
    if (i > 0) line += ' ';
    line += Format("%.15g", record.values[i]);
  }
  out << line << '\n';
}

OxtsRecord ParseOxtsLine(const std::string& line) {
  const auto tokens = SplitWhitespace(line);
  if (tokens.size() != kOxtsFieldCount) {
    throw ParseError("expected 30 fields, found " + std::to_string(tokens.size()));
  }
  OxtsRecord r;
  for (int i = 0; i < kOxtsFieldCount; ++i) {
    if (!ParseDouble(tokens[i], r.values[i])) {
      throw ParseError("oxts field " + std::to_string(i + 1) + " is not numeric: '" +
                       tokens[i] + "'");
    }
  }
  return r;
}

OxtsRecord ReadOxts(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return ParseOxtsLine(line);
  }
  throw ParseError("expected 30 fields, found 0");
}

// --- labels ---------------------------------------------------------------

void WriteLabels(const std::vector<LabelRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    char buf[512];
    int n = std::snprintf(
        buf, sizeof(buf),
        "%d %d %s %.6f %d %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f",
        r.frame, r.track_id, r.type.c_str(), r.truncated, r.occluded, r.alpha,
        r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3], r.height, r.width, r.length,
        r.location.x(), r.location.y(), r.location.z(), r.rotation_y);
    out.write(buf, n);
    if (r.score) out << ' ' << Format("%.6f", *r.score);
    out << '\n';
  }
}

std::vector<LabelRecord> ReadLabels(std::istream& in) {
  std::vector<LabelRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = SplitWhitespace(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (t.size() != 17 && t.size() != 18) {
      throw ParseError(where + "expected 17 or 18 fields, found " +
                       std::to_string(t.size()));
    }
    LabelRecord r;
    auto num = [&](std::size_t i, const char* name) {
      double v;
      if (!ParseDouble(t[i], v)) {
        throw ParseError(where + "field '" + name + "' is not numeric: '" + t[i] + "'");
      }
      return v;
    };
    auto integer = [&](std::size_t i, const char* name) {
      int v;
      if (!ParseInt(t[i], v)) {
        throw ParseError(where + "field '" + name + "' is not an integer: '" + t[i] + "'");
      }
      return v;
    };
    r.frame = integer(0, "frame");
    r.track_id = integer(1, "track_id");
    r.type = t[2];
    r.truncated = num(3, "truncated");
    r.occluded = integer(4, "occluded");
    r.alpha = num(5, "alpha");
    r.bbox = {num(6, "bbox_left"), num(7, "bbox_top"), num(8, "bbox_right"),
              num(9, "bbox_bottom")};
    r.height = num(10, "height");
    r.width = num(11, "width");
    r.length = num(12, "length");
    r.location = Vec3(num(13, "x"), num(14, "y"), num(15, "z"));
    r.rotation_y = num(16, "rotation_y");
    if (t.size() == 18) r.score = num(17, "score");
    records.push_back(std::move(r));
  }
  return records;
}

// --- tracklets ------------------------------------------------------------

namespace {

using boost::property_tree::ptree;

const ptree& Child(const ptree& node, const std::string& name,
                   const std::string& context) {
  const auto child = node.get_child_optional(name);
  if (!child) {
    throw ParseError("tracklet XML: missing element <" + name + "> in " + context);
  }
  return *child;
}

double ChildDouble(const ptree& node, const std::string& name,
                   const std::string& context) {
  const std::string text = Child(node, name, context).data();
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  double v;
  if (!ParseDouble(trimmed, v)) {
    throw ParseError("tracklet XML: element <" + name + "> in " + context +
                     " is not numeric: '" + text + "'");
  }
  return v;
}

int ChildInt(const ptree& node, const std::string& name,
             const std::string& context, std::optional<int> fallback = {}) {
  if (fallback && !node.get_child_optional(name)) return *fallback;
  const double v = ChildDouble(node, name, context);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ParseError("tracklet XML: element <" + name + "> in " + context +
                     " is not an integer");
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<Tracklet> ReadTracklets(std::istream& in) {
  ptree doc;
  try {
    boost::property_tree::read_xml(in, doc);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ParseError(std::string("malformed tracklet XML: ") + e.what());
  }
  const ptree& root = Child(doc, "boost_serialization", "document");
  const ptree& list = Child(root, "tracklets", "<boost_serialization>");
  std::vector<Tracklet> out;
  int index = 0;
  for (const auto& [tag, item] : list) {
    if (tag != "item") continue;
    const std::string ctx = "tracklet " + std::to_string(index++);
    Tracklet t;
    t.object_type = Child(item, "objectType", ctx).data();
    t.h = ChildDouble(item, "h", ctx);
    t.w = ChildDouble(item, "w", ctx);
    t.l = ChildDouble(item, "l", ctx);
    t.first_frame = ChildInt(item, "first_frame", ctx);
    const ptree& poses = Child(item, "poses", ctx);
    int pi = 0;
    for (const auto& [ptag, pnode] : poses) {
      if (ptag != "item") continue;
      const std::string pctx = ctx + " pose " + std::to_string(pi++);
      TrackletPose p;
      p.tx = ChildDouble(pnode, "tx", pctx);
      p.ty = ChildDouble(pnode, "ty", pctx);
      p.tz = ChildDouble(pnode, "tz", pctx);
      p.rx = pnode.get_child_optional("rx") ? ChildDouble(pnode, "rx", pctx) : 0.0;
      p.ry = pnode.get_child_optional("ry") ? ChildDouble(pnode, "ry", pctx) : 0.0;
      p.rz = ChildDouble(pnode, "rz", pctx);
      p.occlusion = ChildInt(pnode, "occlusion", pctx, 0);
      p.truncation = ChildInt(pnode, "truncation", pctx, 0);
      t.poses.push_back(p);
    }
    if (t.poses.empty()) {
      throw ParseError("tracklet XML: " + ctx + " has no pose <item> elements");
    }
    out.push_back(std::move(t));
  }
  return out;
}

void WriteTracklets(const std::vector<Tracklet>& tracklets, std::ostream& out) {
  auto num = [](double v) { return Format("%.9g", v); };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\" ?>\n"
      << "<!DOCTYPE boost_serialization>\n"
      << "<boost_serialization signature=\"serialization::archive\" version=\"9\">\n"
      << "<tracklets class_id=\"0\" tracking_level=\"0\" version=\"0\">\n"
      << "\t<count>" << tracklets.size() << "</count>\n"
      << "\t<item_version>1</item_version>\n";
  bool first_item = true;
  for (const auto& t : tracklets) {
    out << (first_item ? "\t<item class_id=\"1\" tracking_level=\"0\" version=\"1\">\n"
                       : "\t<item>\n");
    out << "\t\t<objectType>" << t.object_type << "</objectType>\n"
        << "\t\t<h>" << num(t.h) << "</h>\n"
        << "\t\t<w>" << num(t.w) << "</w>\n"
        << "\t\t<l>" << num(t.l) << "</l>\n"
        << "\t\t<first_frame>" << t.first_frame << "</first_frame>\n";
    out << (first_item ? "\t\t<poses class_id=\"2\" tracking_level=\"0\" version=\"0\">\n"
                       : "\t\t<poses>\n");
    out << "\t\t\t<count>" << t.poses.size() << "</count>\n"
        << "\t\t\t<item_version>2</item_version>\n";
    bool first_pose = first_item;
    for (const auto& p : t.poses) {
      out << (first_pose ? "\t\t\t<item class_id=\"3\" tracking_level=\"0\" version=\"2\">\n"
                         : "\t\t\t<item>\n");
      first_pose = false;
      out << "\t\t\t\t<tx>" << num(p.tx) << "</tx>\n"
          << "\t\t\t\t<ty>" << num(p.ty) << "</ty>\n"
          << "\t\t\t\t<tz>" << num(p.tz) << "</tz>\n"
          << "\t\t\t\t<rx>" << num(p.rx) << "</rx>\n"
          << "\t\t\t\t<ry>" << num(p.ry) << "</ry>\n"
          << "\t\t\t\t<rz>" << num(p.rz) << "</rz>\n"
          << "\t\t\t\t<state>1</state>\n"
          << "\t\t\t\t<occlusion>" << p.occlusion << "</occlusion>\n"
          << "\t\t\t\t<occlusion_kf>0</occlusion_kf>\n"
          << "\t\t\t\t<truncation>" << p.truncation << "</truncation>\n"
          << "\t\t\t\t<amt_occlusion>-1</amt_occlusion>\n"
          << "\t\t\t\t<amt_occlusion_kf>-1</amt_occlusion_kf>\n"
          << "\t\t\t\t<amt_border_l>-1</amt_border_l>\n"
          << "\t\t\t\t<amt_border_r>-1</amt_border_r>\n"
          << "\t\t\t\t<amt_border_kf>-1</amt_border_kf>\n"
          << "\t\t\t</item>\n";
    }
    out << "\t\t</poses>\n\t\t<finished>1</finished>\n\t</item>\n";
    first_item = false;
  }
  out << "</tracklets>\n</boost_serialization>\n";
}

std::vector<std::vector<LabelRecord>> TrackletsToFrameLabels(
    const std::vector<Tracklet>& tracklets, int frame_count) {
  std::vector<std::vector<LabelRecord>> frames(std::max(frame_count, 0));
  for (std::size_t id = 0; id < tracklets.size(); ++id) {
    const Tracklet& t = tracklets[id];
    for (std::size_t k = 0; k < t.poses.size(); ++k) {
      const int frame = t.first_frame + static_cast<int>(k);
      if (frame < 0 || frame >= frame_count) continue;
      LabelRecord r = BoxToLabel(TrackletPoseToBox(t, t.poses[k]), t.object_type,
                                 frame, static_cast<int>(id));
      r.occluded = t.poses[k].occlusion;
      r.truncated = t.poses[k].truncation;
      frames[frame].push_back(std::move(r));
    }
  }
  return frames;
}

// --- conventions ----------------------------------------------------------

Vec3 VelodyneToCamera(const Vec3& p) { return {-p.y(), -p.z(), p.x()}; }

Vec3 CameraToVelodyne(const Vec3& p) { return {p.z(), -p.x(), -p.y()}; }

double YawToRotationY(double yaw) { return NormalizeAngle(-yaw - kPi / 2.0); }

double RotationYToYaw(double rotation_y) {
  return NormalizeAngle(-rotation_y - kPi / 2.0);
}

std::array<double, 4> ProjectBox(const Box3D& velodyne_box,
                                 const PinholeCamera& camera) {
  double left = std::numeric_limits<double>::infinity();
  double top = left;
  double right = -left;
  double bottom = -left;
  bool any = false;
  for (const Vec3& corner : velodyne_box.Corners()) {
    const Vec3 c = VelodyneToCamera(corner);
    if (c.z() <= 0.1) continue;
    any = true;
    const double u = camera.focal * c.x() / c.z() + camera.cx;
    const double v = camera.focal * c.y() / c.z() + camera.cy;
    left = std::min(left, u);
    right = std::max(right, u);
    top = std::min(top, v);
    bottom = std::max(bottom, v);
  }
  if (!any) return {-1.0, -1.0, -1.0, -1.0};
  const double w = camera.image_width - 1.0;
  const double h = camera.image_height - 1.0;
  return {std::clamp(left, 0.0, w), std::clamp(top, 0.0, h),
          std::clamp(right, 0.0, w), std::clamp(bottom, 0.0, h)};
}

LabelRecord BoxToLabel(const Box3D& b, const std::string& type, int frame,
                       int track_id, std::optional<double> score) {
  LabelRecord r;
  r.frame = frame;
  r.track_id = track_id;
  r.type = type;
  r.height = b.height;
  r.width = b.width;
  r.length = b.length;
  const Vec3 bottom(b.center.x(), b.center.y(), b.center.z() - b.height / 2.0);
  r.location = VelodyneToCamera(bottom);
  r.rotation_y = YawToRotationY(b.yaw);
  r.alpha = NormalizeAngle(r.rotation_y - std::atan2(r.location.x(), r.location.z()));
  r.bbox = ProjectBox(b);
  r.score = score;
  return r;
}

Box3D LabelToBox(const LabelRecord& label) {
  Box3D b;
  b.length = label.length;
  b.width = label.width;
  b.height = label.height;
  b.center = CameraToVelodyne(label.location);
  b.center.z() += label.height / 2.0;
  b.yaw = RotationYToYaw(label.rotation_y);
  return b;
}

Box3D TrackletPoseToBox(const Tracklet& t, const TrackletPose& p) {
  Box3D b;
  b.center = Vec3(p.tx, p.ty, p.tz + t.h / 2.0);
  b.length = t.l;
  b.width = t.w;
  b.height = t.h;
  b.yaw = NormalizeAngle(p.rz);
  return b;
}

TrackletPose BoxToTrackletPose(const Box3D& b) {
  TrackletPose p;
  p.tx = b.center.x();
  p.ty = b.center.y();
  p.tz = b.center.z() - b.height / 2.0;
  p.rz = b.yaw;
  return p;
}

void WriteCalib(std::ostream& out, const PinholeCamera& c) {
  char p[256];
  std::snprintf(p, sizeof(p),
                "%.12e 0.000000000000e+00 %.12e 0.000000000000e+00 "
                "0.000000000000e+00 %.12e %.12e 0.000000000000e+00 "
                "0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 "
                "0.000000000000e+00",
                c.focal, c.cx, c.focal, c.cy);
  for (int i = 0; i < 4; ++i) out << "P" << i << ": " << p << '\n';
  out << "R_rect 1 0 0 0 1 0 0 0 1\n"
      << "Tr_velo_cam 0 -1 0 0 0 0 -1 0 1 0 0 0\n"
      << "Tr_imu_velo 1 0 0 0 0 1 0 0 0 0 1 0\n";
}

std::string FrameFileName(int frame, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%010d", frame);
  return buf + extension;
}

std::filesystem::path VelodynePath(const std::filesystem::path& root, int frame) {
  return root / "velodyne_points" / "data" / FrameFileName(frame, ".bin");
}

std::filesystem::path OxtsPath(const std::filesystem::path& root, int frame) {
  return root / "oxts" / "data" / FrameFileName(frame, ".txt");
}

std::filesystem::path LabelPath(const std::filesystem::path& root, int sequence) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d.txt", sequence);
  return root / "label" / buf;
}

}  // namespace coopsim::kitti
