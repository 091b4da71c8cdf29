#include "rigcal/rig.hpp"

#include <fmt/core.h>

#include "rigcal/errors.hpp"

namespace rigcal {

int RigModel::camera_index(const std::string& camera_id) const {
  for (size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].camera_id == camera_id) return static_cast<int>(i);
  }
  throw UnknownCameraError(fmt::format("unknown camera id '{}'", camera_id));
}

const TrajectoryFrame& DeviceTrajectory::frame(int frame_index) const {
  if (frame_index < 0 || frame_index >= static_cast<int>(frames.size())) {
    throw UnknownFrameError(fmt::format("frame index {} out of range [0, {})",
                                        frame_index, frames.size()));
  }
  return frames[frame_index];
}

const char* param_group_name(ParamGroupId id) {
  switch (id) {
    case ParamGroupId::kPhiRot: return "phi_rot";
    case ParamGroupId::kPhiTrans: return "phi_trans";
    case ParamGroupId::kRhoRot: return "rho_rot";
    case ParamGroupId::kRhoTrans: return "rho_trans";
    case ParamGroupId::kFx: return "fx";
    case ParamGroupId::kFy: return "fy";
    case ParamGroupId::kCx: return "cx";
    case ParamGroupId::kCy: return "cy";
  }
  return "?";
}

SE3Pose effective_pose(const DeviceTrajectory& traj, const RigModel& rig,
                       int frame_index, int camera_index) {
  if (camera_index < 0 || camera_index >= static_cast<int>(rig.cameras.size())) {
    throw UnknownCameraError(fmt::format("camera index {} out of range [0, {})",
                                         camera_index, rig.cameras.size()));
  }
  const TrajectoryFrame& f = traj.frame(frame_index);
  const RigCamera& cam = rig.cameras[camera_index];
  return compose(apply_right_delta(f.pose_hat, f.phi),
                 apply_right_delta(cam.extrinsic, cam.rho));
}

SE3Pose effective_pose(const DeviceTrajectory& traj, const RigModel& rig,
                       int frame_index, const std::string& camera_id) {
  return effective_pose(traj, rig, frame_index, rig.camera_index(camera_id));
}

int dof_count(const DeviceTrajectory& traj, const RigModel& rig, bool refine_intrinsics) {
  const int frames = static_cast<int>(traj.frames.size());
  const int cameras = static_cast<int>(rig.cameras.size());
  return 6 * frames + 6 * cameras + (refine_intrinsics ? 4 * cameras : 0);
}

FlatParams flatten_params(const DeviceTrajectory& traj, const RigModel& rig,
                          bool refine_intrinsics) {
  FlatParams out;
  out.values.resize(dof_count(traj, rig, refine_intrinsics));
  out.groups.resize(out.values.size());
  Eigen::Index at = 0;
  const auto push = [&](double v, ParamGroupId g) {
    out.values[at] = v;
    out.groups[at] = g;
    ++at;
  };
  for (const TrajectoryFrame& f : traj.frames) {
    for (int i = 0; i < 3; ++i) push(f.phi.rot[i], ParamGroupId::kPhiRot);
    for (int i = 0; i < 3; ++i) push(f.phi.trans[i], ParamGroupId::kPhiTrans);
  }
  for (const RigCamera& c : rig.cameras) {
    for (int i = 0; i < 3; ++i) push(c.rho.rot[i], ParamGroupId::kRhoRot);
    for (int i = 0; i < 3; ++i) push(c.rho.trans[i], ParamGroupId::kRhoTrans);
  }
  if (refine_intrinsics) {
    constexpr ParamGroupId kIntrinsicGroups[4] = {ParamGroupId::kFx, ParamGroupId::kFy,
                                                  ParamGroupId::kCx, ParamGroupId::kCy};
    for (const RigCamera& c : rig.cameras) {
      for (int i = 0; i < 4; ++i) push(c.intrinsic_delta[i], kIntrinsicGroups[i]);
    }
  }
  return out;
}

void unflatten_params(const VecX& values, bool refine_intrinsics,
                      DeviceTrajectory& traj, RigModel& rig) {
  if (values.size() != dof_count(traj, rig, refine_intrinsics)) {
    throw IndexMismatchError(fmt::format("parameter vector has {} entries, expected {}",
                                         values.size(),
                                         dof_count(traj, rig, refine_intrinsics)));
  }
  Eigen::Index at = 0;
  for (TrajectoryFrame& f : traj.frames) {
    for (int i = 0; i < 3; ++i) f.phi.rot[i] = values[at++];
    for (int i = 0; i < 3; ++i) f.phi.trans[i] = values[at++];
  }
  for (RigCamera& c : rig.cameras) {
    for (int i = 0; i < 3; ++i) c.rho.rot[i] = values[at++];
    for (int i = 0; i < 3; ++i) c.rho.trans[i] = values[at++];
  }
  if (refine_intrinsics) {
    for (RigCamera& c : rig.cameras) {
      for (int i = 0; i < 4; ++i) c.intrinsic_delta[i] = values[at++];
    }
  }
}

}  // namespace rigcal
