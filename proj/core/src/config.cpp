#include "rigcal/config.hpp"

#include <fmt/core.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

struct ConfigValue {
  enum class Kind { kString, kNumber, kBool, kArray };
  Kind kind = Kind::kNumber;
  std::string text;  // string contents, or the raw numeric literal
  double number = 0.0;
  bool boolean = false;
  std::vector<std::string> array;  // raw numeric literals
};

using ConfigEntries = std::map<std::string, ConfigValue>;

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double* out) {
  const std::string t = trimmed(text);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

// Parses one TOML value; `raw` has comments already stripped except inside
// strings (strings are handled before comment stripping by the caller).
ConfigValue parse_toml_value(const std::string& raw, const std::string& where) {
  const std::string v = trimmed(raw);
  if (v.empty()) throw ParseError(fmt::format("{}: missing value", where));
  ConfigValue out;
  if (v == "true" || v == "false") {
    out.kind = ConfigValue::Kind::kBool;
    out.boolean = v == "true";
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw ParseError(fmt::format("{}: unterminated array", where));
    out.kind = ConfigValue::Kind::kArray;
    std::string body = v.substr(1, v.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trimmed(item);
      if (item.empty()) {
        // allow a single trailing comma
        if (ss.peek() == EOF && !out.array.empty()) break;
        throw ParseError(fmt::format("{}: empty array element", where));
      }
      double probe = 0.0;
      if (!parse_number(item, &probe)) {
        throw ParseError(fmt::format("{}: array element '{}' is not a number", where, item));
      }
      out.array.push_back(item);
    }
    return out;
  }
  out.kind = ConfigValue::Kind::kNumber;
  if (!parse_number(v, &out.number)) {
    throw ParseError(fmt::format("{}: cannot parse value '{}'", where, v));
  }
  out.text = v;
  return out;
}

ConfigEntries parse_toml(std::istream& in, const std::string& path) {
  ConfigEntries entries;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = fmt::format("{}:{}", path, line_no);
    std::string s = trimmed(line);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') {
      const size_t close = s.find(']');
      if (close == std::string::npos) {
        throw ParseError(fmt::format("{}: unterminated section header", where));
      }
      section = trimmed(s.substr(1, close - 1));
      const std::string rest = trimmed(s.substr(close + 1));
      if (section.empty() || (!rest.empty() && rest[0] != '#')) {
        throw ParseError(fmt::format("{}: malformed section header", where));
      }
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError(fmt::format("{}: expected key = value", where));
    }
    const std::string key = trimmed(s.substr(0, eq));
    if (key.empty()) throw ParseError(fmt::format("{}: empty key", where));
    for (char c : key) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
        throw ParseError(fmt::format("{}: invalid key '{}'", where, key));
      }
    }
    std::string value = trimmed(s.substr(eq + 1));
    ConfigValue parsed;
    if (!value.empty() && value.front() == '"') {
      const size_t close = value.find('"', 1);
      if (close == std::string::npos) {
        throw ParseError(fmt::format("{}: unterminated string", where));
      }
      const std::string rest = trimmed(value.substr(close + 1));
      if (!rest.empty() && rest[0] != '#') {
        throw ParseError(fmt::format("{}: trailing characters after string", where));
      }
      parsed.kind = ConfigValue::Kind::kString;
      parsed.text = value.substr(1, close - 1);
    } else {
      const size_t hash = value.find('#');
      if (hash != std::string::npos) value = trimmed(value.substr(0, hash));
      parsed = parse_toml_value(value, where);
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!entries.emplace(full, std::move(parsed)).second) {
      throw ParseError(fmt::format("{}: duplicate key '{}'", where, full));
    }
  }
  return entries;
}

ConfigValue from_json_value(const nlohmann::json& j, const std::string& where) {
  ConfigValue out;
  if (j.is_string()) {
    out.kind = ConfigValue::Kind::kString;
    out.text = j.get<std::string>();
  } else if (j.is_boolean()) {
    out.kind = ConfigValue::Kind::kBool;
    out.boolean = j.get<bool>();
  } else if (j.is_number()) {
    out.kind = ConfigValue::Kind::kNumber;
    out.number = j.get<double>();
    out.text = j.dump();
  } else if (j.is_array()) {
    out.kind = ConfigValue::Kind::kArray;
    for (const auto& item : j) {
      if (!item.is_number()) {
        throw ParseError(fmt::format("{}: array elements must be numbers", where));
      }
      out.array.push_back(item.dump());
    }
  } else {
    throw ParseError(fmt::format("{}: unsupported value type", where));
  }
  return out;
}

ConfigEntries parse_json(std::istream& in, const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  }
  if (!j.is_object()) throw ParseError(fmt::format("{}: top level must be an object", path));
  ConfigEntries entries;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [sub, leaf] : value.items()) {
        const std::string full = key + "." + sub;
        entries.emplace(full, from_json_value(leaf, fmt::format("{}: {}", path, full)));
      }
    } else {
      entries.emplace(key, from_json_value(value, fmt::format("{}: {}", path, key)));
    }
  }
  return entries;
}

// Typed, consumption-tracked access; leftover keys are reported as unknown.
class Reader {
 public:
  Reader(ConfigEntries entries, std::string path)
      : entries_(std::move(entries)), path_(std::move(path)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kString, key, "a string");
    return v->text;
  }

  double get_number(const std::string& key, double fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kNumber, key, "a number");
    return v->number;
  }

  int get_int(const std::string& key, int fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kNumber, key, "an integer");
    require(v->number == std::floor(v->number) && std::abs(v->number) < 1e15, key,
            "an integer");
    return static_cast<int>(v->number);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kNumber, key, "a non-negative integer");
    try {
      return std::stoull(v->text);
    } catch (const std::exception&) {
      throw ParseError(
          fmt::format("{}: field '{}' must be a non-negative integer", path_, key));
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kBool, key, "a boolean");
    return v->boolean;
  }

  std::vector<int> get_int_array(const std::string& key, std::vector<int> fallback) {
    const ConfigValue* v = take(key);
    if (!v) return fallback;
    require(v->kind == ConfigValue::Kind::kArray, key, "an array of integers");
    std::vector<int> out;
    for (const std::string& item : v->array) {
      double num = 0.0;
      parse_number(item, &num);
      require(num == std::floor(num) && std::abs(num) < 1e15, key, "an array of integers");
      out.push_back(static_cast<int>(num));
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : entries_) {
      if (!consumed_.count(key)) {
        throw ParseError(fmt::format("{}: unknown config field '{}'", path_, key));
      }
    }
  }

 private:
  const ConfigValue* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  void require(bool ok, const std::string& key, const char* what) const {
    if (!ok) throw ParseError(fmt::format("{}: field '{}' must be {}", path_, key, what));
  }

  ConfigEntries entries_;
  std::string path_;
  std::set<std::string> consumed_;
};

Interval symmetric(double half) { return Interval{-half, half}; }

void check(bool ok, const std::string& origin, const std::string& field, const char* why) {
  if (!ok) throw ParseError(fmt::format("{}: field '{}' {}", origin, field, why));
}

}  // namespace

RefineOptions RunConfig::refine_options() const {
  RefineOptions opt;
  opt.weights = weights;
  opt.bounds = bounds;
  opt.lr = lr;
  opt.toggles = toggles;
  opt.precondition = precondition_enabled;
  opt.t_start = t_start;
  opt.t_end = t_end;
  opt.momentum = momentum;
  opt.max_iter = max_iter;
  opt.batch_size = batch_size;
  opt.log_every = log_every;
  opt.threads = threads;
  opt.seed = seed;
  return opt;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open config '{}'", path));
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  Reader r(json ? parse_json(in, path) : parse_toml(in, path), path);

  RunConfig c;
  if (r.has("seed")) {
    c.seed = r.get_u64("seed", 0);
    c.has_seed = true;
  }

  c.rig_path = r.get_string("paths.rig", "");
  c.trajectory_path = r.get_string("paths.trajectory", "");
  c.matches_path = r.get_string("paths.matches", "");
  c.output_dir = r.get_string("paths.output_dir", "");
  c.ground_truth_trajectory = r.get_string("paths.ground_truth_trajectory", "");
  c.ground_truth_rig = r.get_string("paths.ground_truth_rig", "");

  c.weights.lambda_epi = r.get_number("weights.epipolar", c.weights.lambda_epi);
  c.weights.lambda_reproj = r.get_number("weights.reproj", c.weights.lambda_reproj);
  c.weights.lambda_barrier = r.get_number("weights.barrier", c.weights.lambda_barrier);

  const BarrierSpec defaults = default_bounds();
  c.bounds.phi_rot = symmetric(
      kDegToRad * r.get_number("bounds.phi_rot_deg", defaults.phi_rot.upper / kDegToRad));
  c.bounds.phi_trans =
      symmetric(r.get_number("bounds.phi_trans_m", defaults.phi_trans.upper));
  c.bounds.rho_rot = symmetric(
      kDegToRad * r.get_number("bounds.rho_rot_deg", defaults.rho_rot.upper / kDegToRad));
  c.bounds.rho_trans =
      symmetric(r.get_number("bounds.rho_trans_m", defaults.rho_trans.upper));
  c.bounds.intrinsic_rel = r.get_number("bounds.intrinsic_rel", defaults.intrinsic_rel);

  c.lr.base_extrinsic = r.get_number("optimizer.lr_extrinsic", c.lr.base_extrinsic);
  c.lr.base_intrinsic = r.get_number("optimizer.lr_intrinsic", c.lr.base_intrinsic);
  c.max_iter = r.get_int("optimizer.max_iter", c.max_iter);
  c.batch_size = r.get_int("optimizer.batch_size", c.batch_size);
  c.momentum = r.get_number("optimizer.momentum", c.momentum);
  c.log_every = r.get_int("optimizer.log_every", c.log_every);
  c.t_start = r.get_number("optimizer.t_start", c.t_start);
  c.t_end = r.get_number("optimizer.t_end", c.t_end);
  c.threads = r.get_int("optimizer.threads", c.threads);

  c.toggles.intrinsics_learnable =
      r.get_bool("toggles.intrinsics_learnable", c.toggles.intrinsics_learnable);
  c.toggles.barrier = r.get_bool("toggles.barrier_enabled", c.toggles.barrier);
  c.toggles.epipolar = r.get_bool("toggles.epipolar_enabled", c.toggles.epipolar);
  c.toggles.reproj = r.get_bool("toggles.reproj_enabled", c.toggles.reproj);
  c.precondition_enabled =
      r.get_bool("toggles.precondition_enabled", c.precondition_enabled);

  SceneConfig& scene = c.simulate.scene;
  scene.num_frames = r.get_int("simulate.num_frames", scene.num_frames);
  scene.num_cameras = r.get_int("simulate.num_cameras", scene.num_cameras);
  scene.num_landmarks = r.get_int("simulate.num_landmarks", scene.num_landmarks);
  scene.radius = r.get_number("simulate.radius", scene.radius);
  scene.arc_step_deg = r.get_number("simulate.arc_step_deg", scene.arc_step_deg);
  scene.frame_dt = r.get_number("simulate.frame_dt", scene.frame_dt);
  scene.min_gap = r.get_number("simulate.min_gap", scene.min_gap);
  scene.max_gap = r.get_number("simulate.max_gap", scene.max_gap);
  scene.camera_spacing_deg =
      r.get_number("simulate.camera_spacing_deg", scene.camera_spacing_deg);
  scene.camera_baseline = r.get_number("simulate.camera_baseline", scene.camera_baseline);
  scene.fx = r.get_number("simulate.fx", scene.fx);
  scene.fy = r.get_number("simulate.fy", scene.fy);
  scene.cx = r.get_number("simulate.cx", scene.cx);
  scene.cy = r.get_number("simulate.cy", scene.cy);
  scene.width = r.get_int("simulate.width", scene.width);
  scene.height = r.get_int("simulate.height", scene.height);

  NoiseSpec& noise = c.simulate.noise;
  noise.device_rot_sigma_deg =
      r.get_number("simulate.device_rot_sigma_deg", noise.device_rot_sigma_deg);
  noise.device_trans_sigma_m =
      r.get_number("simulate.device_trans_sigma_m", noise.device_trans_sigma_m);
  noise.rig_rot_sigma_deg =
      r.get_number("simulate.rig_rot_sigma_deg", noise.rig_rot_sigma_deg);
  noise.point_sigma_m = r.get_number("simulate.point_sigma_m", noise.point_sigma_m);
  noise.pixel_sigma_px = r.get_number("simulate.pixel_sigma_px", noise.pixel_sigma_px);

  c.simulate.n_offsets = r.get_int_array("simulate.n_offsets", c.simulate.n_offsets);
  c.simulate.max_per_set = r.get_int("simulate.max_per_set", c.simulate.max_per_set);

  r.finish();
  validate_run_config(c, path);
  return c;
}

void validate_run_config(const RunConfig& c, const std::string& origin) {
  check(c.weights.lambda_epi >= 0.0, origin, "weights.epipolar", "must be >= 0");
  check(c.weights.lambda_reproj >= 0.0, origin, "weights.reproj", "must be >= 0");
  check(c.weights.lambda_barrier >= 0.0, origin, "weights.barrier", "must be >= 0");

  check(c.bounds.phi_rot.range() > 0.0, origin, "bounds.phi_rot_deg", "must be > 0");
  check(c.bounds.phi_trans.range() > 0.0, origin, "bounds.phi_trans_m", "must be > 0");
  check(c.bounds.rho_rot.range() > 0.0, origin, "bounds.rho_rot_deg", "must be > 0");
  check(c.bounds.rho_trans.range() > 0.0, origin, "bounds.rho_trans_m", "must be > 0");
  check(c.bounds.intrinsic_rel > 0.0 && c.bounds.intrinsic_rel < 1.0, origin,
        "bounds.intrinsic_rel", "must be in (0, 1)");

  check(c.lr.base_extrinsic > 0.0, origin, "optimizer.lr_extrinsic", "must be > 0");
  check(c.lr.base_intrinsic > 0.0, origin, "optimizer.lr_intrinsic", "must be > 0");
  check(c.max_iter >= 1, origin, "optimizer.max_iter", "must be >= 1");
  check(c.batch_size >= 0, origin, "optimizer.batch_size", "must be >= 0");
  check(c.momentum >= 0.0 && c.momentum < 1.0, origin, "optimizer.momentum",
        "must be in [0, 1)");
  check(c.log_every >= 1, origin, "optimizer.log_every", "must be >= 1");
  check(c.t_start > 0.0, origin, "optimizer.t_start", "must be > 0");
  check(c.t_end >= c.t_start, origin, "optimizer.t_end", "must be >= t_start");
  check(c.threads >= 1, origin, "optimizer.threads", "must be >= 1");

  const SceneConfig& s = c.simulate.scene;
  check(s.num_frames >= 2, origin, "simulate.num_frames", "must be >= 2");
  check(s.num_cameras >= 1, origin, "simulate.num_cameras", "must be >= 1");
  check(s.num_landmarks >= 1, origin, "simulate.num_landmarks", "must be >= 1");
  check(s.radius > 0.0, origin, "simulate.radius", "must be > 0");
  check(s.arc_step_deg > 0.0, origin, "simulate.arc_step_deg", "must be > 0");
  check(s.frame_dt > 0.0, origin, "simulate.frame_dt", "must be > 0");
  check(s.min_gap > 0.0 && s.max_gap > s.min_gap, origin, "simulate.max_gap",
        "must exceed min_gap > 0");
  check(s.fx > 0.0 && s.fy > 0.0, origin, "simulate.fx", "must be > 0");
  check(s.width >= 2 && s.height >= 2, origin, "simulate.width", "must be >= 2");

  const NoiseSpec& n = c.simulate.noise;
  check(n.device_rot_sigma_deg >= 0.0, origin, "simulate.device_rot_sigma_deg",
        "must be >= 0");
  check(n.device_trans_sigma_m >= 0.0, origin, "simulate.device_trans_sigma_m",
        "must be >= 0");
  check(n.rig_rot_sigma_deg >= 0.0, origin, "simulate.rig_rot_sigma_deg", "must be >= 0");
  check(n.point_sigma_m >= 0.0, origin, "simulate.point_sigma_m", "must be >= 0");
  check(n.pixel_sigma_px >= 0.0, origin, "simulate.pixel_sigma_px", "must be >= 0");

  check(!c.simulate.n_offsets.empty(), origin, "simulate.n_offsets", "must be non-empty");
  for (int n_off : c.simulate.n_offsets) {
    check(n_off >= 1, origin, "simulate.n_offsets", "entries must be >= 1");
  }
  check(c.simulate.max_per_set >= 8, origin, "simulate.max_per_set", "must be >= 8");
}

}  // namespace rigcal
