#pragma once

#include <string>
#include <vector>

#include "rigcal/camera.hpp"
#include "rigcal/se3.hpp"
#include "rigcal/types.hpp"

namespace rigcal {

// Per-camera rig entry: fixed extrinsic/intrinsics plus learnable corrections.
struct RigCamera {
  std::string camera_id;
  SE3Pose extrinsic;          // camera-to-device, E^j
  Intrinsics intrinsics;      // K_j
  TangentDelta rho;           // learnable extrinsic correction
  Vec4 intrinsic_delta = Vec4::Zero();  // (dfx, dfy, dcx, dcy), pixels

  Intrinsics effective_intrinsics() const {
    Intrinsics k = intrinsics;
    k.fx += intrinsic_delta[0];
    k.fy += intrinsic_delta[1];
    k.cx += intrinsic_delta[2];
    k.cy += intrinsic_delta[3];
    return k;
  }
};

struct RigModel {
  std::vector<RigCamera> cameras;

  int camera_index(const std::string& camera_id) const;  // throws UnknownCamera
};

struct TrajectoryFrame {
  double timestamp = 0.0;  // seconds
  SE3Pose pose_hat;        // device-to-world, P-hat^t
  TangentDelta phi;        // learnable device-pose correction
};

struct DeviceTrajectory {
  std::vector<TrajectoryFrame> frames;

  const TrajectoryFrame& frame(int frame_index) const;  // throws UnknownFrame
};

enum class ParamGroupId { kPhiRot, kPhiTrans, kRhoRot, kRhoTrans, kFx, kFy, kCx, kCy };

constexpr int kNumParamGroups = 8;

const char* param_group_name(ParamGroupId id);

// right_delta(P-hat, phi) * right_delta(E, rho): the effective camera-to-world
// pose of one camera at one frame.
SE3Pose effective_pose(const DeviceTrajectory& traj, const RigModel& rig,
                       int frame_index, const std::string& camera_id);

SE3Pose effective_pose(const DeviceTrajectory& traj, const RigModel& rig,
                       int frame_index, int camera_index);

int dof_count(const DeviceTrajectory& traj, const RigModel& rig, bool refine_intrinsics);

// Flattened view of every learnable scalar: frames ascending (phi_rot then
// phi_trans), then cameras ascending (rho_rot, rho_trans), then per-camera
// intrinsic deltas when enabled.
struct FlatParams {
  VecX values;
  std::vector<ParamGroupId> groups;  // one entry per scalar
};

FlatParams flatten_params(const DeviceTrajectory& traj, const RigModel& rig,
                          bool refine_intrinsics);

void unflatten_params(const VecX& values, bool refine_intrinsics,
                      DeviceTrajectory& traj, RigModel& rig);

}  // namespace rigcal
