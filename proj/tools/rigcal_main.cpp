// rigcal: command-line front end for rig/trajectory refinement.
//
// Subcommands: simulate (synthetic dataset), refine (joint optimization),
// evaluate (metrics vs ground truth), expose (exposure offset fitting).
// Exit codes: 0 success, 2 input/config error, 3 numerical divergence.

#include <fmt/core.h>
#include <fmt/os.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rigcal/config.hpp"
#include "rigcal/errors.hpp"
#include "rigcal/exposure.hpp"
#include "rigcal/image.hpp"
#include "rigcal/io.hpp"
#include "rigcal/optimizer.hpp"
#include "rigcal/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json group_json(const std::array<double, rigcal::kNumParamGroups>& values) {
  json out;
  for (int g = 0; g < rigcal::kNumParamGroups; ++g) {
    out[rigcal::param_group_name(static_cast<rigcal::ParamGroupId>(g))] = values[g];
  }
  return out;
}

json pose_error_json(const rigcal::EvalReport& r) {
  return {{"mean_rot_deg", r.mean_rot_deg},
          {"max_rot_deg", r.max_rot_deg},
          {"mean_trans_m", r.mean_trans_m},
          {"max_trans_m", r.max_trans_m}};
}

json eval_report_json(const rigcal::EvalReport& r) {
  return {{"schema_version", 1},
          {"command", "evaluate"},
          {"pose_error", pose_error_json(r)},
          {"ep_e", r.ep_e},
          {"rp_e", r.rp_e},
          {"sets_evaluated", r.sets_evaluated},
          {"sets_skipped", r.sets_skipped},
          {"delta_utilization", group_json(r.delta_utilization)}};
}

void write_report(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw rigcal::Error(fmt::format("cannot write '{}'", path));
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw rigcal::Error(fmt::format("cannot create '{}': {}", dir, ec.message()));
}

std::string join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void require_field(const std::string& value, const char* field) {
  if (value.empty()) {
    throw rigcal::ParseError(
        fmt::format("missing required field '{}' (flag or config)", field));
  }
}

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;

  rigcal::RunConfig load() const {
    rigcal::RunConfig c;
    if (!config_path.empty()) c = rigcal::load_run_config(config_path);
    if (seed_given) {
      c.seed = seed;
      c.has_seed = true;
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  CommonArgs common;
  std::string output_dir;
  int frames = 0, cameras = 0, landmarks = 0;
  bool frames_given = false, cameras_given = false, landmarks_given = false;
  double device_rot = 0, device_trans = 0, rig_rot = 0, point = 0, pixel = 0;
  bool device_rot_given = false, device_trans_given = false, rig_rot_given = false,
       point_given = false, pixel_given = false;
};

int run_simulate(const SimulateArgs& a) {
  rigcal::RunConfig c = a.common.load();
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  rigcal::SceneConfig& scene_cfg = c.simulate.scene;
  rigcal::NoiseSpec& noise = c.simulate.noise;
  if (a.frames_given) scene_cfg.num_frames = a.frames;
  if (a.cameras_given) scene_cfg.num_cameras = a.cameras;
  if (a.landmarks_given) scene_cfg.num_landmarks = a.landmarks;
  if (a.device_rot_given) noise.device_rot_sigma_deg = a.device_rot;
  if (a.device_trans_given) noise.device_trans_sigma_m = a.device_trans;
  if (a.rig_rot_given) noise.rig_rot_sigma_deg = a.rig_rot;
  if (a.point_given) noise.point_sigma_m = a.point;
  if (a.pixel_given) noise.pixel_sigma_px = a.pixel;
  require_field(c.output_dir, "paths.output_dir");
  if (!c.has_seed) throw rigcal::ParseError("missing required field 'seed'");
  rigcal::validate_run_config(c, "command line");

  // Independent, documented seed streams derived from the run seed.
  scene_cfg.seed = c.seed;
  noise.seed = c.seed + 1;
  const std::uint64_t match_seed = c.seed + 2;

  const rigcal::SyntheticScene scene = rigcal::generate_scene(scene_cfg);
  const rigcal::PerturbedState noisy = rigcal::perturb(scene, noise);
  const std::vector<rigcal::MatchSet> matches = rigcal::synthesize_matches(
      scene, c.simulate.n_offsets, noise.pixel_sigma_px, match_seed,
      c.simulate.max_per_set);

  ensure_dir(c.output_dir);
  rigcal::write_rig(join(c.output_dir, "rig.json"), noisy.rig);
  rigcal::write_trajectory(join(c.output_dir, "trajectory_gt.txt"), scene.trajectory);
  rigcal::write_trajectory(join(c.output_dir, "trajectory_noisy.txt"), noisy.trajectory);
  rigcal::write_matches(join(c.output_dir, "matches.csv"), matches);
  rigcal::write_scene(join(c.output_dir, "scene.json"), scene, noise,
                      c.simulate.n_offsets, c.simulate.max_per_set);

  Eigen::Index total = 0;
  for (const rigcal::MatchSet& m : matches) total += m.size();
  fmt::print("simulate: {} frames, {} cameras, {} landmarks, {} match sets ({} matches)\n",
             scene_cfg.num_frames, scene_cfg.num_cameras, scene_cfg.num_landmarks,
             matches.size(), total);
  fmt::print("simulate: wrote rig.json trajectory_gt.txt trajectory_noisy.txt "
             "matches.csv scene.json to {}\n", c.output_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// refine

struct RefineArgs {
  CommonArgs common;
  std::string rig, trajectory, matches, output_dir, gt_trajectory, gt_rig;
  int max_iter = 0, batch_size = -1, log_every = 0, threads = 0;
  bool max_iter_given = false, batch_size_given = false, log_every_given = false,
       threads_given = false;
  bool no_intrinsics = false, no_barrier = false, no_precondition = false,
       no_epipolar = false, no_reproj = false;
};

void write_history(const std::string& path,
                   const std::vector<rigcal::IterationRecord>& history) {
  auto out = fmt::output_file(path);
  out.print("iter,loss,epipolar,reproj,barrier,ep_e,rp_e,temperature,lr_factor");
  for (int g = 0; g < rigcal::kNumParamGroups; ++g) {
    out.print(",util_{}", rigcal::param_group_name(static_cast<rigcal::ParamGroupId>(g)));
  }
  out.print("\n");
  for (const rigcal::IterationRecord& r : history) {
    out.print("{},{},{},{},{},{},{},{},{}", r.iter, r.loss, r.epipolar, r.reproj,
              r.barrier, r.ep_e, r.rp_e, r.temperature, r.lr_factor);
    for (double u : r.bound_utilization) out.print(",{}", u);
    out.print("\n");
  }
}

int run_refine(const RefineArgs& a) {
  rigcal::RunConfig c = a.common.load();
  if (!a.rig.empty()) c.rig_path = a.rig;
  if (!a.trajectory.empty()) c.trajectory_path = a.trajectory;
  if (!a.matches.empty()) c.matches_path = a.matches;
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  if (!a.gt_trajectory.empty()) c.ground_truth_trajectory = a.gt_trajectory;
  if (!a.gt_rig.empty()) c.ground_truth_rig = a.gt_rig;
  if (a.max_iter_given) c.max_iter = a.max_iter;
  if (a.batch_size_given) c.batch_size = a.batch_size;
  if (a.log_every_given) c.log_every = a.log_every;
  if (a.threads_given) c.threads = a.threads;
  if (a.no_intrinsics) c.toggles.intrinsics_learnable = false;
  if (a.no_barrier) c.toggles.barrier = false;
  if (a.no_precondition) c.precondition_enabled = false;
  if (a.no_epipolar) c.toggles.epipolar = false;
  if (a.no_reproj) c.toggles.reproj = false;
  require_field(c.rig_path, "paths.rig");
  require_field(c.trajectory_path, "paths.trajectory");
  require_field(c.matches_path, "paths.matches");
  require_field(c.output_dir, "paths.output_dir");
  if (!c.has_seed) throw rigcal::ParseError("missing required field 'seed'");
  if (c.ground_truth_trajectory.empty() != c.ground_truth_rig.empty()) {
    throw rigcal::ParseError(
        "ground_truth_trajectory and ground_truth_rig must be given together");
  }
  rigcal::validate_run_config(c, "command line");

  const rigcal::DeviceTrajectory traj = rigcal::read_trajectory(c.trajectory_path);
  const rigcal::RigModel rig = rigcal::read_rig(c.rig_path);
  const std::vector<rigcal::MatchSet> matches = rigcal::read_matches(c.matches_path);
  const rigcal::RefineOptions options = c.refine_options();

  const auto t0 = std::chrono::steady_clock::now();
  const rigcal::RefineResult result = rigcal::run_refinement(traj, rig, matches, options);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();

  ensure_dir(c.output_dir);
  rigcal::write_trajectory(join(c.output_dir, "refined_trajectory.txt"), result.traj);
  rigcal::write_rig(join(c.output_dir, "refined_rig.json"), result.rig);
  write_history(join(c.output_dir, "history.csv"), result.history);

  const rigcal::IterationRecord& first = result.history.front();
  const rigcal::IterationRecord& last = result.history.back();
  json pose_error;  // null unless ground truth was supplied
  if (!c.ground_truth_trajectory.empty()) {
    const rigcal::DeviceTrajectory gt_traj =
        rigcal::read_trajectory(c.ground_truth_trajectory);
    const rigcal::RigModel gt_rig = rigcal::read_rig(c.ground_truth_rig);
    pose_error = {
        {"initial", pose_error_json(
                        rigcal::evaluate(traj, rig, gt_traj, gt_rig, matches, c.bounds))},
        {"final", pose_error_json(rigcal::evaluate(result.traj, result.rig, gt_traj,
                                                   gt_rig, matches, c.bounds))}};
  }

  json report{
      {"schema_version", 1},
      {"command", "refine"},
      {"seed", c.seed},
      {"iterations", result.iterations},
      {"initial", {{"loss", first.loss}, {"ep_e", first.ep_e}, {"rp_e", first.rp_e}}},
      {"final", {{"loss", last.loss}, {"ep_e", last.ep_e}, {"rp_e", last.rp_e}}},
      {"reduction",
       {{"ep_e_factor", last.ep_e > 0.0 ? json(first.ep_e / last.ep_e) : json()},
        {"rp_e_percent",
         first.rp_e > 0.0 ? json(100.0 * (1.0 - last.rp_e / first.rp_e)) : json()}}},
      {"bound_utilization", group_json(result.max_utilization)},
      {"preconditioner", group_json(result.rates.multiplier)},
      {"pose_error", pose_error}};
  write_report(join(c.output_dir, "report.json"), report);

  fmt::print("refine: {} iterations in {:.2f} s\n", result.iterations, wall);
  fmt::print("refine: Ep-e {:.6g} -> {:.6g} px, RP-e {:.6g} -> {:.6g} px\n", first.ep_e,
             last.ep_e, first.rp_e, last.rp_e);
  fmt::print("refine: wrote refined_trajectory.txt refined_rig.json history.csv "
             "report.json to {}\n", c.output_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  CommonArgs common;
  std::string rig, trajectory, matches, gt_trajectory, gt_rig;
  std::string output = "report.json";
};

int run_evaluate(const EvaluateArgs& a) {
  rigcal::RunConfig c = a.common.load();
  if (!a.rig.empty()) c.rig_path = a.rig;
  if (!a.trajectory.empty()) c.trajectory_path = a.trajectory;
  if (!a.matches.empty()) c.matches_path = a.matches;
  if (!a.gt_trajectory.empty()) c.ground_truth_trajectory = a.gt_trajectory;
  if (!a.gt_rig.empty()) c.ground_truth_rig = a.gt_rig;
  require_field(c.rig_path, "paths.rig");
  require_field(c.trajectory_path, "paths.trajectory");
  require_field(c.matches_path, "paths.matches");
  require_field(c.ground_truth_trajectory, "paths.ground_truth_trajectory");
  require_field(c.ground_truth_rig, "paths.ground_truth_rig");

  const rigcal::EvalReport report = rigcal::evaluate(
      rigcal::read_trajectory(c.trajectory_path), rigcal::read_rig(c.rig_path),
      rigcal::read_trajectory(c.ground_truth_trajectory),
      rigcal::read_rig(c.ground_truth_rig), rigcal::read_matches(c.matches_path),
      c.bounds);

  write_report(a.output, eval_report_json(report));
  fmt::print("evaluate: rot mean {:.6g} deg max {:.6g} deg, trans mean {:.6g} m "
             "max {:.6g} m\n", report.mean_rot_deg, report.max_rot_deg,
             report.mean_trans_m, report.max_trans_m);
  fmt::print("evaluate: Ep-e {:.6g} px, RP-e {:.6g} px over {} sets ({} skipped)\n",
             report.ep_e, report.rp_e, report.sets_evaluated, report.sets_skipped);
  fmt::print("evaluate: wrote {}\n", a.output);
  return 0;
}

// ---------------------------------------------------------------------------
// expose

struct ExposeArgs {
  std::string source, target;
  std::string output_dir = ".";
  int iterations = 200;
};

int run_expose(const ExposeArgs& a) {
  const rigcal::ImageRGB source = rigcal::read_image(a.source);
  const rigcal::ImageRGB target = rigcal::read_image(a.target);
  const rigcal::FitResult fit = rigcal::fit_offset(source, target, a.iterations);

  ensure_dir(a.output_dir);
  rigcal::write_offset(join(a.output_dir, "offset.json"), fit.grid);
  rigcal::write_image(join(a.output_dir, "compensated.png"),
                      rigcal::apply_compensation(source, fit.grid));

  fmt::print("expose: residual {:.6e} -> {:.6e}\n", fit.initial_residual,
             fit.final_residual);
  fmt::print("expose: wrote offset.json compensated.png to {}\n", a.output_dir);
  return 0;
}

void add_common(CLI::App* sub, CommonArgs& common, bool with_seed = true) {
  sub->add_option("--config", common.config_path,
                  "TOML (or .json) config file; flags override its values");
  if (with_seed) {
    sub->add_option("--seed", common.seed, "RNG seed (required here or in config)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigcal: joint multi-camera rig, trajectory, and intrinsics refinement"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Generate a synthetic rig dataset (rig, trajectories, matches)");
  add_common(c_sim, sim.common);
  c_sim->add_option("-o,--output-dir", sim.output_dir, "Directory for the dataset files");
  auto* f1 = c_sim->add_option("--frames", sim.frames, "Number of device frames");
  auto* f2 = c_sim->add_option("--cameras", sim.cameras, "Number of rig cameras");
  auto* f3 = c_sim->add_option("--landmarks", sim.landmarks, "Number of landmarks");
  auto* f4 = c_sim->add_option("--device-rot-noise", sim.device_rot,
                               "Device rotation noise sigma, degrees");
  auto* f5 = c_sim->add_option("--device-trans-noise", sim.device_trans,
                               "Device translation noise sigma, meters");
  auto* f6 = c_sim->add_option("--rig-rot-noise", sim.rig_rot,
                               "Rig extrinsic rotation noise sigma, degrees");
  auto* f7 = c_sim->add_option("--point-noise", sim.point,
                               "Landmark jitter sigma, meters");
  auto* f8 = c_sim->add_option("--pixel-noise", sim.pixel,
                               "Match pixel noise sigma, pixels");

  RefineArgs ref;
  CLI::App* c_ref = app.add_subcommand(
      "refine", "Jointly refine device trajectory, rig extrinsics, and intrinsics");
  add_common(c_ref, ref.common);
  c_ref->add_option("--rig", ref.rig, "Input rig JSON");
  c_ref->add_option("--trajectory", ref.trajectory, "Input device trajectory");
  c_ref->add_option("--matches", ref.matches, "Input matches CSV");
  c_ref->add_option("-o,--output-dir", ref.output_dir, "Directory for refined outputs");
  c_ref->add_option("--gt-trajectory", ref.gt_trajectory,
                    "Optional ground-truth trajectory for report pose errors");
  c_ref->add_option("--gt-rig", ref.gt_rig,
                    "Optional ground-truth rig (rig or scene JSON)");
  auto* r1 = c_ref->add_option("--max-iter", ref.max_iter, "Optimization iterations");
  auto* r2 = c_ref->add_option("--batch-size", ref.batch_size,
                               "Match budget per iteration, in equivalent sets (0 = all)");
  auto* r3 = c_ref->add_option("--log-every", ref.log_every, "History logging interval");
  auto* r4 = c_ref->add_option("--threads", ref.threads,
                               "Worker threads for gradient evaluation (default 1)");
  c_ref->add_flag("--no-intrinsics", ref.no_intrinsics, "Freeze camera intrinsics");
  c_ref->add_flag("--no-barrier", ref.no_barrier, "Disable the log-barrier term");
  c_ref->add_flag("--no-precondition", ref.no_precondition,
                  "Disable sensitivity preconditioning");
  c_ref->add_flag("--no-epipolar", ref.no_epipolar, "Disable the Sampson epipolar loss");
  c_ref->add_flag("--no-reproj", ref.no_reproj, "Disable the reprojection loss");

  EvaluateArgs eva;
  CLI::App* c_eva = app.add_subcommand(
      "evaluate", "Compare a refined trajectory and rig against ground truth");
  add_common(c_eva, eva.common, /*with_seed=*/false);
  c_eva->add_option("--trajectory", eva.trajectory, "Refined trajectory");
  c_eva->add_option("--rig", eva.rig, "Refined rig JSON");
  c_eva->add_option("--gt-trajectory", eva.gt_trajectory, "Ground-truth trajectory");
  c_eva->add_option("--gt-rig", eva.gt_rig, "Ground-truth rig (rig or scene JSON)");
  c_eva->add_option("--matches", eva.matches, "Matches CSV for Ep-e / RP-e");
  c_eva->add_option("--output", eva.output, "Report path (default report.json)");

  ExposeArgs exp;
  CLI::App* c_exp = app.add_subcommand(
      "expose", "Fit a low-frequency exposure offset between two images");
  c_exp->add_option("--source", exp.source, "Source image (PNG or PPM)")->required();
  c_exp->add_option("--target", exp.target, "Target image (PNG or PPM)")->required();
  c_exp->add_option("-o,--output-dir", exp.output_dir,
                    "Directory for offset.json and compensated.png");
  c_exp->add_option("--iterations", exp.iterations, "Fitting iterations (default 200)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  sim.common.seed_given = c_sim->count("--seed") > 0;
  ref.common.seed_given = c_ref->count("--seed") > 0;
  sim.frames_given = f1->count() > 0;
  sim.cameras_given = f2->count() > 0;
  sim.landmarks_given = f3->count() > 0;
  sim.device_rot_given = f4->count() > 0;
  sim.device_trans_given = f5->count() > 0;
  sim.rig_rot_given = f6->count() > 0;
  sim.point_given = f7->count() > 0;
  sim.pixel_given = f8->count() > 0;
  ref.max_iter_given = r1->count() > 0;
  ref.batch_size_given = r2->count() > 0;
  ref.log_every_given = r3->count() > 0;
  ref.threads_given = r4->count() > 0;

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_ref->parsed()) return run_refine(ref);
    if (c_eva->parsed()) return run_evaluate(eva);
    if (c_exp->parsed()) return run_expose(exp);
  } catch (const rigcal::DivergedError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 2;
}
