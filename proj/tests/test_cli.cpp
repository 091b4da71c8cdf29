// Integration tests for the `rigcal` command-line tool.  Every case spawns
// the real binary as a subprocess and checks the documented contract: exit
// codes (0 success, 2 usage/parse error, 3 divergence), the exact set of
// files each subcommand writes, and determinism of the artifacts.

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "rigcal/exposure.hpp"
#include "rigcal/image.hpp"
#include "rigcal/io.hpp"
#include "test_util.hpp"

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Runs `rigcal <args>` and captures combined stdout/stderr plus exit status.
CmdResult run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} 2>&1", RIGCAL_CLI_PATH, args);
  CmdResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  while (size_t n = fread(buffer, 1, sizeof(buffer), pipe)) result.output.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

nlohmann::json read_json(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

// A small clean dataset most refine/evaluate cases start from.
void simulate_clean(const std::string& dir, int frames = 10, int cameras = 2,
                    int landmarks = 80, int seed = 7) {
  const CmdResult r = run_cli(fmt::format(
      "simulate -o \"{}\" --frames {} --cameras {} --landmarks {} --seed {}", dir,
      frames, cameras, landmarks, seed));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
}

const char* const kSimulateFiles[] = {"rig.json", "trajectory_gt.txt",
                                      "trajectory_noisy.txt", "matches.csv", "scene.json"};

}  // namespace

TEST_CASE("cli: --help exits 0 and lists all four subcommands") {
  const CmdResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* name : {"simulate", "refine", "evaluate", "expose"}) {
    CAPTURE(name);
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("cli: simulate writes the five dataset files and is seed-deterministic") {
  testutil::ScratchDir a("cli_sim_a");
  testutil::ScratchDir b("cli_sim_b");
  const std::string flags =
      "simulate --frames 12 --cameras 2 --landmarks 70 --seed 42 "
      "--device-rot-noise 0.4 --device-trans-noise 0.03 --rig-rot-noise 0.2 "
      "--point-noise 0.02 --pixel-noise 0.5 -o";
  const CmdResult ra = run_cli(fmt::format("{} \"{}\"", flags, a.str()));
  REQUIRE_MESSAGE(ra.exit_code == 0, ra.output);
  const CmdResult rb = run_cli(fmt::format("{} \"{}\"", flags, b.str()));
  REQUIRE_MESSAGE(rb.exit_code == 0, rb.output);
  for (const char* name : kSimulateFiles) {
    CAPTURE(name);
    REQUIRE(file_exists(a.file(name)));
    CHECK(read_file(a.file(name)) == read_file(b.file(name)));
  }
  // The noise flags were live: noisy trajectory differs from ground truth.
  CHECK(read_file(a.file("trajectory_gt.txt")) != read_file(a.file("trajectory_noisy.txt")));
}

TEST_CASE("cli: simulate rejects missing or invalid arguments with exit 2") {
  testutil::ScratchDir dir("cli_sim_bad");

  SUBCASE("missing output dir") {
    const CmdResult r = run_cli("simulate --seed 1");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("paths.output_dir") != std::string::npos);
  }
  SUBCASE("missing seed") {
    const CmdResult r = run_cli(fmt::format("simulate -o \"{}\"", dir.str()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("seed") != std::string::npos);
  }
  SUBCASE("zero cameras fails validation") {
    const CmdResult r =
        run_cli(fmt::format("simulate -o \"{}\" --seed 1 --cameras 0", dir.str()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("num_cameras") != std::string::npos);
  }
  SUBCASE("unknown flag") {
    const CmdResult r = run_cli(fmt::format("simulate -o \"{}\" --seed 1 --bogus", dir.str()));
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unknown subcommand") {
    const CmdResult r = run_cli("calibrate");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: config file drives simulate and bad configs exit 2") {
  testutil::ScratchDir dir("cli_cfg");

  SUBCASE("valid TOML config") {
    write_file(dir.file("run.toml"), fmt::format("seed = 9\n\n[paths]\noutput_dir = \"{}\"\n\n"
                                                 "[simulate]\nnum_frames = 8\nnum_cameras = 2\n"
                                                 "num_landmarks = 60\n", dir.str()));
    const CmdResult r = run_cli(fmt::format("simulate --config \"{}\"", dir.file("run.toml")));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    for (const char* name : kSimulateFiles) CHECK(file_exists(dir.file(name)));
  }
  SUBCASE("unknown config key") {
    write_file(dir.file("bad.toml"),
               fmt::format("seed = 9\nmystery = 1\n\n[paths]\noutput_dir = \"{}\"\n", dir.str()));
    const CmdResult r = run_cli(fmt::format("simulate --config \"{}\"", dir.file("bad.toml")));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("unknown config field") != std::string::npos);
  }
  SUBCASE("out-of-range config value") {
    write_file(dir.file("bad2.toml"),
               fmt::format("seed = 9\n\n[paths]\noutput_dir = \"{}\"\n\n[simulate]\n"
                           "num_frames = 1\n", dir.str()));
    const CmdResult r = run_cli(fmt::format("simulate --config \"{}\"", dir.file("bad2.toml")));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("num_frames") != std::string::npos);
  }
  SUBCASE("missing config file") {
    const CmdResult r = run_cli(fmt::format("simulate --config \"{}\"", dir.file("absent.toml")));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: refine runs end to end and writes the four outputs") {
  testutil::ScratchDir data("cli_ref_data");
  testutil::ScratchDir out("cli_ref_out");
  // A lightly-noised dataset so the refiner has something to do.
  const CmdResult sim = run_cli(fmt::format(
      "simulate -o \"{}\" --frames 10 --cameras 2 --landmarks 80 --seed 5 "
      "--device-rot-noise 0.3 --rig-rot-noise 0.2", data.str()));
  REQUIRE_MESSAGE(sim.exit_code == 0, sim.output);

  const CmdResult r = run_cli(fmt::format(
      "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_noisy.txt\" "
      "--matches \"{0}/matches.csv\" -o \"{1}\" --seed 3 --max-iter 60 --batch-size 8 "
      "--log-every 20", data.str(), out.str()));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("refine:") != std::string::npos);

  for (const char* name :
       {"refined_trajectory.txt", "refined_rig.json", "history.csv", "report.json"}) {
    CAPTURE(name);
    CHECK(file_exists(out.file(name)));
  }

  // History header is part of the external contract.
  std::ifstream hist(out.file("history.csv"));
  std::string header;
  REQUIRE(std::getline(hist, header));
  CHECK(header ==
        "iter,loss,epipolar,reproj,barrier,ep_e,rp_e,temperature,lr_factor,"
        "util_phi_rot,util_phi_trans,util_rho_rot,util_rho_trans,"
        "util_fx,util_fy,util_cx,util_cy");

  const nlohmann::json report = read_json(out.file("report.json"));
  CHECK(report.at("schema_version").get<int>() == 1);
  CHECK(report.at("command").get<std::string>() == "refine");
  CHECK(report.at("seed").get<std::uint64_t>() == 3);
  CHECK(report.at("iterations").get<int>() == 60);
  CHECK(report.at("initial").contains("ep_e"));
  CHECK(report.at("final").contains("rp_e"));
  CHECK(report.at("reduction").contains("ep_e_factor"));
  CHECK(report.at("bound_utilization").contains("phi_rot"));
  CHECK(report.at("preconditioner").contains("rho_trans"));
  // No ground truth supplied: pose_error must be null.
  CHECK(report.at("pose_error").is_null());

  // The refined outputs parse back through the library readers.
  const rigcal::DeviceTrajectory traj = rigcal::read_trajectory(out.file("refined_trajectory.txt"));
  CHECK(traj.frames.size() == 10);
  const rigcal::RigModel rig = rigcal::read_rig(out.file("refined_rig.json"));
  CHECK(rig.cameras.size() == 2);
}

TEST_CASE("cli: refine with ground truth reports pose error; a lone GT flag exits 2") {
  testutil::ScratchDir data("cli_ref_gt");
  testutil::ScratchDir out("cli_ref_gt_out");
  const CmdResult sim = run_cli(fmt::format(
      "simulate -o \"{}\" --frames 8 --cameras 2 --landmarks 70 --seed 11 "
      "--device-rot-noise 0.3", data.str()));
  REQUIRE_MESSAGE(sim.exit_code == 0, sim.output);

  SUBCASE("both GT inputs produce a pose_error block") {
    const CmdResult r = run_cli(fmt::format(
        "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_noisy.txt\" "
        "--matches \"{0}/matches.csv\" --gt-trajectory \"{0}/trajectory_gt.txt\" "
        "--gt-rig \"{0}/scene.json\" -o \"{1}\" --seed 2 --max-iter 30 --batch-size 8",
        data.str(), out.str()));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    const nlohmann::json report = read_json(out.file("report.json"));
    REQUIRE(report.at("pose_error").is_object());
    REQUIRE(report.at("pose_error").contains("initial"));
    REQUIRE(report.at("pose_error").contains("final"));
    CHECK(report.at("pose_error").at("initial").at("mean_rot_deg").get<double>() > 0.0);
    CHECK(report.at("pose_error").at("final").at("mean_rot_deg").get<double>() >= 0.0);
  }
  SUBCASE("gt-trajectory without gt-rig is rejected") {
    const CmdResult r = run_cli(fmt::format(
        "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_noisy.txt\" "
        "--matches \"{0}/matches.csv\" --gt-trajectory \"{0}/trajectory_gt.txt\" "
        "-o \"{1}\" --seed 2 --max-iter 10", data.str(), out.str()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("together") != std::string::npos);
  }
  SUBCASE("missing matches file exits 2") {
    const CmdResult r = run_cli(fmt::format(
        "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_noisy.txt\" "
        "--matches \"{0}/nope.csv\" -o \"{1}\" --seed 2 --max-iter 10",
        data.str(), out.str()));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: refine reports divergence with exit 3") {
  testutil::ScratchDir data("cli_div_data");
  testutil::ScratchDir out("cli_div_out");
  simulate_clean(data.str(), 10, 2, 80, 7);

  // Same frame schedule as the dataset, but translations far outside any
  // representable geometry: the first evaluated batch goes non-finite.
  std::string bad = "# frames with overflowing translations\n";
  for (int f = 0; f < 10; ++f)
    bad += fmt::format("{} 1e200 0 0 0 0 0 1\n", 0.1 * f);
  write_file(data.file("trajectory_bad.txt"), bad);

  const CmdResult r = run_cli(fmt::format(
      "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_bad.txt\" "
      "--matches \"{0}/matches.csv\" -o \"{1}\" --seed 1 --max-iter 5 "
      "--no-precondition", data.str(), out.str()));
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("non-finite") != std::string::npos);
}

TEST_CASE("cli: evaluate of a clean dataset against itself is near zero") {
  testutil::ScratchDir data("cli_eval");
  testutil::ScratchDir out("cli_eval_out");
  simulate_clean(data.str());

  const CmdResult r = run_cli(fmt::format(
      "evaluate --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_gt.txt\" "
      "--matches \"{0}/matches.csv\" --gt-trajectory \"{0}/trajectory_gt.txt\" "
      "--gt-rig \"{0}/scene.json\" --output \"{1}\"", data.str(), out.file("report.json")));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);

  const nlohmann::json report = read_json(out.file("report.json"));
  CHECK(report.at("schema_version").get<int>() == 1);
  CHECK(report.at("command").get<std::string>() == "evaluate");
  CHECK(report.at("pose_error").at("mean_rot_deg").get<double>() < 1e-9);
  CHECK(report.at("pose_error").at("max_trans_m").get<double>() < 1e-12);
  CHECK(report.at("ep_e").get<double>() < 1e-6);
  CHECK(report.at("rp_e").get<double>() < 1e-6);
  CHECK(report.at("sets_evaluated").get<int>() > 0);
  CHECK(report.at("sets_skipped").get<int>() == 0);
  for (const auto& [key, value] : report.at("delta_utilization").items()) {
    CAPTURE(key);
    CHECK(value.get<double>() == 0.0);
  }
}

TEST_CASE("cli: evaluate without ground truth exits 2") {
  testutil::ScratchDir data("cli_eval_bad");
  simulate_clean(data.str(), 8, 1, 60, 3);
  const CmdResult r = run_cli(fmt::format(
      "evaluate --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_gt.txt\" "
      "--matches \"{0}/matches.csv\"", data.str()));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("ground_truth") != std::string::npos);
}

TEST_CASE("cli: expose fits an identity pair exactly and validates inputs") {
  testutil::ScratchDir dir("cli_expose");
  rigcal::ImageRGB img = rigcal::ImageRGB::constant(64, 52, 0.0, 0.0, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = ((x * 3 + y * 5 + c * 7) % 256) / 255.0;
  rigcal::write_image(dir.file("frame.ppm"), img);

  SUBCASE("identity pair") {
    const CmdResult r = run_cli(fmt::format(
        "expose --source \"{0}\" --target \"{0}\" --output-dir \"{1}\" --iterations 5",
        dir.file("frame.ppm"), dir.str()));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    REQUIRE(file_exists(dir.file("offset.json")));
    REQUIRE(file_exists(dir.file("compensated.png")));

    const rigcal::OffsetMaps maps = rigcal::read_offset(dir.file("offset.json"));
    CHECK((maps.gain.array() == 1.0).all());
    CHECK((maps.bias.array() == 0.0).all());

    // Compensation by the identity grid leaves the image intact up to the
    // 8-bit PNG quantization of the round trip.
    const rigcal::ImageRGB comp = rigcal::read_image(dir.file("compensated.png"));
    REQUIRE(comp.width == img.width);
    REQUIRE(comp.height == img.height);
    double max_diff = 0.0;
    for (size_t i = 0; i < comp.pixels.size(); ++i)
      max_diff = std::max(max_diff, std::abs(comp.pixels[i] - img.pixels[i]));
    CHECK(max_diff <= 0.5 / 255.0 + 1e-12);
  }
  SUBCASE("size mismatch exits 2") {
    const rigcal::ImageRGB other = rigcal::ImageRGB::constant(52, 64, 0.25, 0.25, 0.25);
    rigcal::write_image(dir.file("other.ppm"), other);
    const CmdResult r = run_cli(fmt::format(
        "expose --source \"{}\" --target \"{}\" --output-dir \"{}\"",
        dir.file("frame.ppm"), dir.file("other.ppm"), dir.str()));
    CHECK(r.exit_code == 2);
  }
  SUBCASE("missing --source exits 2") {
    const CmdResult r =
        run_cli(fmt::format("expose --target \"{}\"", dir.file("frame.ppm")));
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unsupported image extension exits 2") {
    write_file(dir.file("frame.txt"), "not an image\n");
    const CmdResult r = run_cli(fmt::format(
        "expose --source \"{0}\" --target \"{0}\"", dir.file("frame.txt")));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: full pipeline report is byte-identical across reruns") {
  testutil::ScratchDir a("cli_pipe_a");
  testutil::ScratchDir b("cli_pipe_b");
  for (const auto* dir : {&a, &b}) {
    const CmdResult sim = run_cli(fmt::format(
        "simulate -o \"{}\" --frames 10 --cameras 2 --landmarks 80 --seed 21 "
        "--device-rot-noise 0.3 --rig-rot-noise 0.2", dir->str()));
    REQUIRE_MESSAGE(sim.exit_code == 0, sim.output);
    const CmdResult ref = run_cli(fmt::format(
        "refine --rig \"{0}/rig.json\" --trajectory \"{0}/trajectory_noisy.txt\" "
        "--matches \"{0}/matches.csv\" --gt-trajectory \"{0}/trajectory_gt.txt\" "
        "--gt-rig \"{0}/scene.json\" -o \"{0}\" --seed 4 --max-iter 40 --batch-size 8",
        dir->str()));
    REQUIRE_MESSAGE(ref.exit_code == 0, ref.output);
  }
  for (const char* name :
       {"refined_trajectory.txt", "refined_rig.json", "history.csv", "report.json"}) {
    CAPTURE(name);
    CHECK(read_file(a.file(name)) == read_file(b.file(name)));
  }
}
