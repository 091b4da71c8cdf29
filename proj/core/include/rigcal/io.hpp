#pragma once

#include <string>
#include <vector>

#include "rigcal/exposure.hpp"
#include "rigcal/matches.hpp"
#include "rigcal/rig.hpp"
#include "rigcal/synthetic.hpp"

namespace rigcal {

// All writers emit effective values (deltas folded in, then zeroed on read),
// so every produced file is directly re-ingestable.

// JSON rig: per camera a row-major 4x4 extrinsic and pinhole intrinsics.
// read_rig also accepts a scene.json, using its embedded ground_truth_rig.
void write_rig(const std::string& path, const RigModel& rig);
RigModel read_rig(const std::string& path);

// Simulate dataset bundle: generation settings, landmarks, and the
// ground-truth rig (same schema as a rig file, under "ground_truth_rig").
void write_scene(const std::string& path, const SyntheticScene& scene,
                 const NoiseSpec& noise, const std::vector<int>& n_offsets,
                 int max_per_set);

// Text trajectory: one `timestamp tx ty tz qx qy qz qw` line per frame
// (Hamilton quaternion, w last, canonicalized to w >= 0).
void write_trajectory(const std::string& path, const DeviceTrajectory& traj);
DeviceTrajectory read_trajectory(const std::string& path);

// CSV matches: header frame_i,cam_i,frame_j,cam_j,u_i,v_i,u_j,v_j; rows are
// grouped into MatchSets by their (frame_i, cam_i, frame_j, cam_j) key in
// first-appearance order.
void write_matches(const std::string& path, const std::vector<MatchSet>& sets);
std::vector<MatchSet> read_matches(const std::string& path);

// JSON exposure offset grids, row-major.
void write_offset(const std::string& path, const OffsetGrid& grid);
OffsetGrid read_offset(const std::string& path);

}  // namespace rigcal
