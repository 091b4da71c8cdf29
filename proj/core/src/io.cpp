#include "rigcal/io.hpp"

#include <fmt/core.h>
#include <fmt/os.h>

#include <Eigen/Geometry>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed JSON in '{}': {}", path, e.what()));
  }
}

void dump_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out << j.dump(2) << '\n';
}

json matrix_to_json(const SE3Pose& pose) {
  const Mat4 m = pose.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) rows.push_back(m(r, c));
  }
  return rows;
}

SE3Pose pose_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 16) {
    throw ParseError(fmt::format("extrinsic in '{}' must be 16 row-major numbers", path));
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = j[static_cast<size_t>(4 * r + c)].get<double>();
  }
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    throw ParseError(fmt::format("extrinsic in '{}' has a non-rigid bottom row", path));
  }
  SE3Pose pose;
  pose.R = m.topLeftCorner<3, 3>();
  pose.t = m.topRightCorner<3, 1>();
  return pose;
}

json grid_to_json(const MatX& grid) {
  json out = json::array();
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) out.push_back(grid(r, c));
  }
  return out;
}

MatX grid_from_json(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n * n) {
    throw ParseError(fmt::format("grid in '{}' must hold {} values", path, n * n));
  }
  MatX grid(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) grid(r, c) = j[static_cast<size_t>(n * r + c)].get<double>();
  }
  return grid;
}

}  // namespace

namespace {

json rig_to_json(const RigModel& rig) {
  json cameras = json::array();
  for (const RigCamera& cam : rig.cameras) {
    const Intrinsics k = cam.effective_intrinsics();
    cameras.push_back({{"camera_id", cam.camera_id},
                       {"extrinsic", matrix_to_json(apply_right_delta(cam.extrinsic, cam.rho))},
                       {"intrinsics",
                        {{"fx", k.fx},
                         {"fy", k.fy},
                         {"cx", k.cx},
                         {"cy", k.cy},
                         {"width", k.width},
                         {"height", k.height}}}});
  }
  return json{{"schema_version", 1}, {"cameras", cameras}};
}

}  // namespace

void write_rig(const std::string& path, const RigModel& rig) {
  dump_json(path, rig_to_json(rig));
}

RigModel read_rig(const std::string& path) {
  json j = load_json(path);
  if (!j.contains("cameras") && j.contains("ground_truth_rig")) {
    j = j["ground_truth_rig"];
  }
  if (!j.contains("cameras") || !j["cameras"].is_array() || j["cameras"].empty()) {
    throw ParseError(fmt::format("rig '{}' must declare a non-empty cameras array", path));
  }
  RigModel rig;
  for (const json& cj : j["cameras"]) {
    RigCamera cam;
    try {
      cam.camera_id = cj.at("camera_id").get<std::string>();
      cam.extrinsic = pose_from_json(cj.at("extrinsic"), path);
      const json& kj = cj.at("intrinsics");
      cam.intrinsics = {kj.at("fx").get<double>(), kj.at("fy").get<double>(),
                        kj.at("cx").get<double>(), kj.at("cy").get<double>(),
                        kj.at("width").get<int>(), kj.at("height").get<int>()};
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("rig '{}': {}", path, e.what()));
    }
    if (cam.intrinsics.fx <= 0.0 || cam.intrinsics.fy <= 0.0) {
      throw ParseError(fmt::format("rig '{}': camera '{}' has non-positive focal length",
                                   path, cam.camera_id));
    }
    for (const RigCamera& existing : rig.cameras) {
      if (existing.camera_id == cam.camera_id) {
        throw ParseError(fmt::format("rig '{}': duplicate camera id '{}'", path, cam.camera_id));
      }
    }
    rig.cameras.push_back(std::move(cam));
  }
  return rig;
}

void write_trajectory(const std::string& path, const DeviceTrajectory& traj) {
  auto out = fmt::output_file(path);
  for (const TrajectoryFrame& frame : traj.frames) {
    const SE3Pose pose = apply_right_delta(frame.pose_hat, frame.phi);
    Eigen::Quaterniond q(pose.R);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    out.print("{} {} {} {} {} {} {} {}\n", frame.timestamp, pose.t.x(), pose.t.y(),
              pose.t.z(), q.x(), q.y(), q.z(), q.w());
  }
}

DeviceTrajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  DeviceTrajectory traj;
  std::string line;
  int line_no = 0;
  double prev_ts = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TrajectoryFrame frame;
    double qx = 0, qy = 0, qz = 0, qw = 1;
    if (!(ss >> frame.timestamp >> frame.pose_hat.t.x() >> frame.pose_hat.t.y() >>
          frame.pose_hat.t.z() >> qx >> qy >> qz >> qw)) {
      throw ParseError(fmt::format("trajectory '{}' line {}: expected 8 numbers", path, line_no));
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw ParseError(
          fmt::format("trajectory '{}' line {}: quaternion not unit length", path, line_no));
    }
    q.normalize();
    frame.pose_hat.R = q.toRotationMatrix();
    if (!traj.frames.empty() && frame.timestamp <= prev_ts) {
      throw ParseError(fmt::format("trajectory '{}' line {}: timestamps must strictly increase",
                                   path, line_no));
    }
    prev_ts = frame.timestamp;
    traj.frames.push_back(frame);
  }
  if (traj.frames.empty()) {
    throw ParseError(fmt::format("trajectory '{}' holds no frames", path));
  }
  return traj;
}

void write_matches(const std::string& path, const std::vector<MatchSet>& sets) {
  auto out = fmt::output_file(path);
  out.print("frame_i,cam_i,frame_j,cam_j,u_i,v_i,u_j,v_j\n");
  for (const MatchSet& set : sets) {
    for (Eigen::Index m = 0; m < set.size(); ++m) {
      out.print("{},{},{},{},{},{},{},{}\n", set.frame_i, set.camera_i, set.frame_j,
                set.camera_j, set.pixels_i(m, 0), set.pixels_i(m, 1), set.pixels_j(m, 0),
                set.pixels_j(m, 1));
    }
  }
}

std::vector<MatchSet> read_matches(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  std::string line;
  if (!std::getline(in, line) || line != "frame_i,cam_i,frame_j,cam_j,u_i,v_i,u_j,v_j") {
    throw ParseError(fmt::format("matches '{}': bad or missing CSV header", path));
  }

  struct Row {
    double u_i, v_i, u_j, v_j;
  };
  std::vector<MatchSet> sets;
  std::vector<std::vector<Row>> rows;
  std::map<std::string, size_t> index;  // set key -> position

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string fields[8];
    for (int f = 0; f < 8; ++f) {
      if (!std::getline(ss, fields[f], f < 7 ? ',' : '\n')) {
        throw ParseError(fmt::format("matches '{}' line {}: expected 8 fields", path, line_no));
      }
    }
    try {
      const int frame_i = std::stoi(fields[0]);
      const int frame_j = std::stoi(fields[2]);
      const Row row{std::stod(fields[4]), std::stod(fields[5]), std::stod(fields[6]),
                    std::stod(fields[7])};
      const std::string key =
          fmt::format("{}|{}|{}|{}", frame_i, fields[1], frame_j, fields[3]);
      auto [it, inserted] = index.try_emplace(key, sets.size());
      if (inserted) {
        MatchSet set;
        set.frame_i = frame_i;
        set.frame_j = frame_j;
        set.camera_i = fields[1];
        set.camera_j = fields[3];
        sets.push_back(std::move(set));
        rows.emplace_back();
      }
      rows[it->second].push_back(row);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("matches '{}' line {}: malformed number", path, line_no));
    }
  }

  for (size_t s = 0; s < sets.size(); ++s) {
    const auto& r = rows[s];
    sets[s].pixels_i.resize(static_cast<Eigen::Index>(r.size()), 2);
    sets[s].pixels_j.resize(static_cast<Eigen::Index>(r.size()), 2);
    for (size_t m = 0; m < r.size(); ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      sets[s].pixels_i(mi, 0) = r[m].u_i;
      sets[s].pixels_i(mi, 1) = r[m].v_i;
      sets[s].pixels_j(mi, 0) = r[m].u_j;
      sets[s].pixels_j(mi, 1) = r[m].v_j;
    }
  }
  return sets;
}

void write_scene(const std::string& path, const SyntheticScene& scene,
                 const NoiseSpec& noise, const std::vector<int>& n_offsets,
                 int max_per_set) {
  json landmarks = json::array();
  for (const Vec3& p : scene.landmarks) {
    landmarks.push_back({p.x(), p.y(), p.z()});
  }
  dump_json(path,
            json{{"schema_version", 1},
                 {"seed", scene.seed},
                 {"noise",
                  {{"device_rot_sigma_deg", noise.device_rot_sigma_deg},
                   {"device_trans_sigma_m", noise.device_trans_sigma_m},
                   {"rig_rot_sigma_deg", noise.rig_rot_sigma_deg},
                   {"point_sigma_m", noise.point_sigma_m},
                   {"pixel_sigma_px", noise.pixel_sigma_px},
                   {"seed", noise.seed}}},
                 {"matches", {{"n_offsets", n_offsets}, {"max_per_set", max_per_set}}},
                 {"num_frames", static_cast<int>(scene.trajectory.frames.size())},
                 {"num_cameras", static_cast<int>(scene.rig.cameras.size())},
                 {"num_landmarks", static_cast<int>(scene.landmarks.size())},
                 {"landmarks", landmarks},
                 {"ground_truth_rig", rig_to_json(scene.rig)}});
}

void write_offset(const std::string& path, const OffsetGrid& grid) {
  dump_json(path, json{{"schema_version", 1},
                       {"width", grid.target_width},
                       {"height", grid.target_height},
                       {"gain0", grid_to_json(grid.gain0)},
                       {"gain1", grid_to_json(grid.gain1)},
                       {"bias0", grid_to_json(grid.bias0)},
                       {"bias1", grid_to_json(grid.bias1)}});
}

OffsetGrid read_offset(const std::string& path) {
  const json j = load_json(path);
  OffsetGrid grid;
  try {
    grid.target_width = j.at("width").get<int>();
    grid.target_height = j.at("height").get<int>();
    grid.gain0 = grid_from_json(j.at("gain0"), OffsetGrid::kBase, path);
    grid.gain1 = grid_from_json(j.at("gain1"), OffsetGrid::kLevel1, path);
    grid.bias0 = grid_from_json(j.at("bias0"), OffsetGrid::kBase, path);
    grid.bias1 = grid_from_json(j.at("bias1"), OffsetGrid::kLevel1, path);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("offset '{}': {}", path, e.what()));
  }
  return grid;
}

}  // namespace rigcal
