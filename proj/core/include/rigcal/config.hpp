#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rigcal/optimizer.hpp"
#include "rigcal/synthetic.hpp"

namespace rigcal {

// Dataset generation settings, consumed by `simulate` only.
struct SimulateConfig {
  SceneConfig scene;
  NoiseSpec noise;
  std::vector<int> n_offsets = {1, 2, 3};  // temporal match offsets
  int max_per_set = 40;
};

// One parsed + validated config file. Every field has a usable default
// except the paths and the seed, which the CLI demands where required.
struct RunConfig {
  // [paths]
  std::string rig_path;
  std::string trajectory_path;
  std::string matches_path;
  std::string output_dir;
  std::string ground_truth_trajectory;  // optional: adds pose errors to refine report
  std::string ground_truth_rig;

  LossWeights weights;                  // [weights]
  BarrierSpec bounds = default_bounds();  // [bounds]

  // [optimizer]
  LRSchedule lr;
  int max_iter = 5000;
  int batch_size = 32;
  double momentum = 0.9;
  int log_every = 50;
  double t_start = 1.0;
  double t_end = 1e4;
  int threads = 1;

  // [toggles]
  LossToggles toggles;
  bool precondition_enabled = true;

  SimulateConfig simulate;  // [simulate]

  // root-level `seed`
  bool has_seed = false;
  std::uint64_t seed = 0;

  RefineOptions refine_options() const;
};

// Parses `path` as TOML (a strict subset: sections, key = value, strings,
// numbers, booleans, flat numeric arrays, # comments) or, for .json files,
// as an equivalent two-level JSON object. Unknown sections or keys and
// out-of-range values raise ParseError naming the offending field.
RunConfig load_run_config(const std::string& path);

// Range checks shared by file loading and CLI flag overrides.
void validate_run_config(const RunConfig& config, const std::string& origin);

}  // namespace rigcal
