#include "gift/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>

#include "gift/errors.hpp"
#include "json.hpp"

namespace gift {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kRoleCount> kRoleNames = {
    "standing", "running", "defending", "holding", "shooting", "laying-up", "dunking"};
constexpr std::array<std::string_view, 3> kPassingNames = {"NoPass", "OnePass", "MultiPass"};
constexpr std::array<std::string_view, 3> kPnrNames = {"NoPnR", "OnePnR", "MultiPnR"};
constexpr std::array<std::string_view, 3> kShotNames = {"Shoot", "Layup", "Dunk"};

template <std::size_t N>
int lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<int>(i);
  }
  return -1;
}

// --- schema helpers -------------------------------------------------------

std::string where(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& object, std::initializer_list<std::string_view> allowed,
                const std::string& path, bool strict) {
  if (!strict) return;
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError("unknown field '" + where(path, key) + "'");
    }
  }
}

const json& field(const json& object, std::string_view key, const std::string& path) {
  if (!object.is_object()) throw SchemaError("'" + path + "' must be an object");
  auto it = object.find(std::string(key));
  if (it == object.end()) throw SchemaError("missing field '" + where(path, key) + "'");
  return *it;
}

double real(const json& value, const std::string& path) {
  if (!value.is_number()) throw SchemaError("'" + path + "' must be a number");
  return value.get<double>();
}

int integer(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw SchemaError("'" + path + "' must be an integer");
  return value.get<int>();
}

std::string text(const json& value, const std::string& path) {
  if (!value.is_string()) throw SchemaError("'" + path + "' must be a string");
  return value.get<std::string>();
}

template <std::size_t N>
std::array<double, N> reals(const json& value, const std::string& path) {
  if (!value.is_array()) throw SchemaError("'" + path + "' must be an array");
  if (value.size() != N) {
    throw SchemaError("'" + path + "' must hold " + std::to_string(N) + " values, got " +
                      std::to_string(value.size()));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const json& v = value[i];
    if (!v.is_number()) throw SchemaError("'" + path + "[" + std::to_string(i) + "]' must be a number");
    out[i] = v.get<double>();
  }
  return out;
}

PlayerFrameAnnotation parse_player(const json& node, const std::string& path, bool strict) {
  if (!node.is_object()) throw SchemaError("'" + path + "' must be an object");
  check_keys(node, {"player_id", "bbox", "pose", "gaze", "headpose", "velocity", "role"}, path,
             strict);
  PlayerFrameAnnotation p;
  p.player_id = integer(field(node, "player_id", path), where(path, "player_id"));
  const auto box = reals<4>(field(node, "bbox", path), where(path, "bbox"));
  p.bbox = {box[0], box[1], box[2], box[3]};
  p.pose = reals<kPoseValues>(field(node, "pose", path), where(path, "pose"));
  const auto gaze = reals<2>(field(node, "gaze", path), where(path, "gaze"));
  p.gaze = {gaze[0], gaze[1]};
  const auto head = reals<3>(field(node, "headpose", path), where(path, "headpose"));
  p.headpose = {head[0], head[1], head[2]};
  if (auto it = node.find("velocity"); it != node.end()) {
    const auto v = reals<2>(*it, where(path, "velocity"));
    p.velocity = Velocity{v[0], v[1]};
  }
  const std::string role_text = text(field(node, "role", path), where(path, "role"));
  const auto role = parse_role(role_text);
  if (!role) throw SchemaError("'" + where(path, "role") + "' has unknown role '" + role_text + "'");
  p.role = *role;
  return p;
}

TacticLabel parse_tactic(const json& node, bool strict) {
  const std::string path = "tactic";
  if (!node.is_object()) throw SchemaError("'tactic' must be an object");
  check_keys(node, {"passing", "pnr", "drive", "shot"}, path, strict);
  TacticLabel t;
  const int passing = lookup(kPassingNames, text(field(node, "passing", path), "tactic.passing"));
  const int pnr = lookup(kPnrNames, text(field(node, "pnr", path), "tactic.pnr"));
  const int shot = lookup(kShotNames, text(field(node, "shot", path), "tactic.shot"));
  if (passing < 0) throw SchemaError("'tactic.passing' has unknown value");
  if (pnr < 0) throw SchemaError("'tactic.pnr' has unknown value");
  if (shot < 0) throw SchemaError("'tactic.shot' has unknown value");
  const json& drive = field(node, "drive", path);
  if (!drive.is_boolean()) throw SchemaError("'tactic.drive' must be a boolean");
  t.passing = static_cast<Passing>(passing);
  t.pnr = static_cast<PickAndRoll>(pnr);
  t.drive = drive.get<bool>();
  t.shot = static_cast<ShotType>(shot);
  return t;
}

json reals_json(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(quantize_real(v));
  return out;
}

bool is_shot_role(Role r) {
  return r == Role::kShooting || r == Role::kLayingUp || r == Role::kDunking;
}

bool finite_all(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

// --- enums ------------------------------------------------------------------

std::string_view to_string(Role role) { return kRoleNames.at(static_cast<std::size_t>(role)); }

std::optional<Role> parse_role(std::string_view text) {
  const int i = lookup(kRoleNames, text);
  if (i < 0) return std::nullopt;
  return static_cast<Role>(i);
}

std::string_view to_string(Passing value) { return kPassingNames.at(static_cast<std::size_t>(value)); }
std::string_view to_string(PickAndRoll value) { return kPnrNames.at(static_cast<std::size_t>(value)); }
std::string_view to_string(ShotType value) { return kShotNames.at(static_cast<std::size_t>(value)); }

int tactic_index(const TacticLabel& label) {
  return ((static_cast<int>(label.passing) * 3 + static_cast<int>(label.pnr)) * 2 +
          (label.drive ? 1 : 0)) * 3 +
         static_cast<int>(label.shot);
}

TacticLabel tactic_from_index(int index) {
  if (index < 0 || index >= kTacticCount) {
    throw RangeError("tactic index " + std::to_string(index) + " outside [0, 54)");
  }
  TacticLabel t;
  t.shot = static_cast<ShotType>(index % 3);
  index /= 3;
  t.drive = (index % 2) == 1;
  index /= 2;
  t.pnr = static_cast<PickAndRoll>(index % 3);
  t.passing = static_cast<Passing>(index / 3);
  return t;
}

// --- parse / serialize ------------------------------------------------------

ClipAnnotation parse_clip(std::string_view json_text, const ParseOptions& options) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.what());
  }
  if (!root.is_object()) throw SchemaError("clip document must be an object");
  check_keys(root, {"clip_id", "view", "tactic", "fps", "occurrence_frame", "frames"}, "",
             options.strict);

  ClipAnnotation clip;
  clip.clip_id = text(field(root, "clip_id", ""), "clip_id");
  const int view = integer(field(root, "view", ""), "view");
  if (view < 0 || view >= kViewCount) throw SchemaError("'view' must be in [0, 4]");
  clip.view = static_cast<View>(view);
  clip.tactic = parse_tactic(field(root, "tactic", ""), options.strict);
  clip.fps = real(field(root, "fps", ""), "fps");
  clip.occurrence_frame = integer(field(root, "occurrence_frame", ""), "occurrence_frame");

  const json& frames = field(root, "frames", "");
  if (!frames.is_array()) throw SchemaError("'frames' must be an array");
  clip.frames.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string path = "frames[" + std::to_string(k) + "]";
    const json& node = frames[k];
    if (!node.is_object()) throw SchemaError("'" + path + "' must be an object");
    check_keys(node, {"frame_id", "players"}, path, options.strict);
    FrameAnnotation frame;
    frame.frame_id = integer(field(node, "frame_id", path), where(path, "frame_id"));
    const json& players = field(node, "players", path);
    if (!players.is_array()) throw SchemaError("'" + path + ".players' must be an array");
    if (players.size() != kPlayersPerFrame) {
      throw SchemaError("'" + path + ".players' must hold 10 players, got " +
                        std::to_string(players.size()));
    }
    for (std::size_t i = 0; i < players.size(); ++i) {
      frame.players.push_back(
          parse_player(players[i], path + ".players[" + std::to_string(i) + "]", options.strict));
    }
    clip.frames.push_back(std::move(frame));
  }

  if (!options.validate) return clip;
  const ValidationReport report = validate_clip(clip);
  if (!report.ok()) {
    const Finding& f = report.findings.front();
    throw InvariantError(f.rule + ": " + f.message);
  }
  return clip;
}

double quantize_real(double value) {
  if (!std::isfinite(value)) return value;
  // to_chars with an explicit precision formats exactly like printf("%.6g")
  char buffer[32];
  const auto end = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 6).ptr;
  double out = 0.0;
  std::from_chars(buffer, end, out);
  return out;
}

ClipAnnotation quantize_clip(ClipAnnotation clip) {
  clip.fps = quantize_real(clip.fps);
  for (auto& frame : clip.frames) {
    for (auto& p : frame.players) {
      p.bbox = {quantize_real(p.bbox.x), quantize_real(p.bbox.y), quantize_real(p.bbox.h),
                quantize_real(p.bbox.w)};
      for (double& v : p.pose) v = quantize_real(v);
      p.gaze = {quantize_real(p.gaze.pitch), quantize_real(p.gaze.yaw)};
      p.headpose = {quantize_real(p.headpose.pitch), quantize_real(p.headpose.yaw),
                    quantize_real(p.headpose.roll)};
      if (p.velocity) p.velocity = Velocity{quantize_real(p.velocity->vx), quantize_real(p.velocity->vy)};
    }
  }
  return clip;
}

std::string serialize_clip(const ClipAnnotation& clip) {
  json root;
  root["clip_id"] = clip.clip_id;
  root["view"] = static_cast<int>(clip.view);
  root["tactic"] = {{"passing", std::string(to_string(clip.tactic.passing))},
                    {"pnr", std::string(to_string(clip.tactic.pnr))},
                    {"drive", clip.tactic.drive},
                    {"shot", std::string(to_string(clip.tactic.shot))}};
  root["fps"] = quantize_real(clip.fps);
  root["occurrence_frame"] = clip.occurrence_frame;
  json frames = json::array();
  for (const auto& frame : clip.frames) {
    json players = json::array();
    for (const auto& p : frame.players) {
      json node;
      node["player_id"] = p.player_id;
      const std::array<double, 4> box = {p.bbox.x, p.bbox.y, p.bbox.h, p.bbox.w};
      node["bbox"] = reals_json(box);
      node["pose"] = reals_json(p.pose);
      const std::array<double, 2> gaze = {p.gaze.pitch, p.gaze.yaw};
      node["gaze"] = reals_json(gaze);
      const std::array<double, 3> head = {p.headpose.pitch, p.headpose.yaw, p.headpose.roll};
      node["headpose"] = reals_json(head);
      if (p.velocity) {
        const std::array<double, 2> v = {p.velocity->vx, p.velocity->vy};
        node["velocity"] = reals_json(v);
      }
      node["role"] = std::string(to_string(p.role));
      players.push_back(std::move(node));
    }
    frames.push_back({{"frame_id", frame.frame_id}, {"players", std::move(players)}});
  }
  root["frames"] = std::move(frames);
  return root.dump() + "\n";
}

// --- derivation ---------------------------------------------------------------

ClipAnnotation derive_velocities(ClipAnnotation clip) {
  const double dt = 1.0 / clip.fps;
  for (std::size_t k = 0; k < clip.frames.size(); ++k) {
    for (auto& p : clip.frames[k].players) {
      if (k == 0) {
        p.velocity = Velocity{0.0, 0.0};
        continue;
      }
      const auto& prev_players = clip.frames[k - 1].players;
      auto prev = std::find_if(prev_players.begin(), prev_players.end(),
                               [&](const auto& q) { return q.player_id == p.player_id; });
      if (prev == prev_players.end()) {
        p.velocity = Velocity{0.0, 0.0};
        continue;
      }
      p.velocity = Velocity{(p.bbox.x - prev->bbox.x) / dt, (p.bbox.y - prev->bbox.y) / dt};
    }
  }
  return clip;
}

// --- validation ---------------------------------------------------------------

ValidationReport validate_clip(const ClipAnnotation& clip) {
  ValidationReport report;
  report.clip_id = clip.clip_id;
  auto add = [&](int frame_id, int player_id, std::string rule, std::string message) {
    report.findings.push_back({frame_id, player_id, std::move(rule), std::move(message)});
  };
  constexpr double kPi = std::numbers::pi;
  const int frame_count = clip.frame_count();

  if (!(std::isfinite(clip.fps) && clip.fps > 0.0)) add(0, 0, "fps.positive", "fps must be positive");
  if (static_cast<int>(clip.view) >= kViewCount) add(0, 0, "view.range", "view must be in [0, 4]");
  if (static_cast<int>(clip.tactic.passing) > 2 || static_cast<int>(clip.tactic.pnr) > 2 ||
      static_cast<int>(clip.tactic.shot) > 2) {
    add(0, 0, "tactic.range", "tactic digit out of range");
  }
  if (frame_count < 2) add(0, 0, "frames.min_count", "a clip needs at least 2 frames");
  if (clip.occurrence_frame < 1 || clip.occurrence_frame > frame_count) {
    add(0, 0, "occurrence.range",
        "occurrence_frame " + std::to_string(clip.occurrence_frame) + " outside [1, " +
            std::to_string(frame_count) + "]");
  }

  for (int k = 0; k < frame_count; ++k) {
    const FrameAnnotation& frame = clip.frames[static_cast<std::size_t>(k)];
    const int fid = frame.frame_id;
    if (fid != k + 1) {
      add(fid, 0, "frame_id.sequence",
          "expected frame_id " + std::to_string(k + 1) + ", got " + std::to_string(fid));
    }
    if (frame.players.size() != kPlayersPerFrame) {
      add(fid, 0, "players.count",
          "expected 10 players, got " + std::to_string(frame.players.size()));
    }
    std::set<int> seen;
    for (const auto& p : frame.players) {
      const int pid = p.player_id;
      if (pid < 1 || pid > kPlayersPerFrame) {
        add(fid, pid, "player_id.range", "player_id must be in [1, 10]");
      } else if (!seen.insert(pid).second) {
        add(fid, pid, "player_id.duplicate", "player_id repeated within the frame");
      }
      const std::array<double, 4> box = {p.bbox.x, p.bbox.y, p.bbox.h, p.bbox.w};
      if (!finite_all(box)) {
        add(fid, pid, "bbox.finite", "bbox values must be finite");
      } else if (!(p.bbox.h > 0.0 && p.bbox.w > 0.0)) {
        add(fid, pid, "bbox.size", "bbox h and w must be positive");
      }
      if (!finite_all(p.pose)) add(fid, pid, "pose.finite", "pose values must be finite");
      const bool gaze_ok = std::isfinite(p.gaze.pitch) && std::isfinite(p.gaze.yaw) &&
                           std::abs(p.gaze.pitch) <= kPi / 2 && std::abs(p.gaze.yaw) <= kPi;
      if (!gaze_ok) add(fid, pid, "gaze.range", "gaze pitch in [-pi/2, pi/2], yaw in [-pi, pi]");
      const std::array<double, 3> head = {p.headpose.pitch, p.headpose.yaw, p.headpose.roll};
      const bool head_ok = finite_all(head) && std::all_of(head.begin(), head.end(), [&](double a) {
                             return std::abs(a) <= kPi;
                           });
      if (!head_ok) add(fid, pid, "headpose.range", "headpose angles must be in [-pi, pi]");
      if (p.velocity) {
        if (!std::isfinite(p.velocity->vx) || !std::isfinite(p.velocity->vy)) {
          add(fid, pid, "velocity.finite", "velocity must be finite");
        } else if (k == 0 && (p.velocity->vx != 0.0 || p.velocity->vy != 0.0)) {
          add(fid, pid, "velocity.first_frame", "first-frame velocity must be (0, 0)");
        }
      }
      if (static_cast<int>(p.role) >= kRoleCount) add(fid, pid, "role.valid", "unknown role");
    }
  }

  if (clip.occurrence_frame >= 1 && clip.occurrence_frame <= frame_count) {
    const auto& frame = clip.frames[static_cast<std::size_t>(clip.occurrence_frame - 1)];
    const bool shot = std::any_of(frame.players.begin(), frame.players.end(), [](const auto& p) {
      return is_offense(p.player_id) && is_shot_role(p.role);
    });
    if (!shot) {
      add(frame.frame_id, 0, "occurrence.role",
          "no offensive player is shooting, laying-up or dunking at occurrence_frame");
    }
  }
  return report;
}

// --- statistics ---------------------------------------------------------------

DatasetStats& DatasetStats::operator+=(const DatasetStats& other) {
  clips += other.clips;
  frames += other.frames;
  bbox += other.bbox;
  pose += other.pose;
  gaze += other.gaze;
  headpose += other.headpose;
  velocity += other.velocity;
  role += other.role;
  for (std::size_t i = 0; i < role_histogram.size(); ++i) role_histogram[i] += other.role_histogram[i];
  for (std::size_t i = 0; i < view_histogram.size(); ++i) view_histogram[i] += other.view_histogram[i];
  for (std::size_t i = 0; i < tactic_histogram.size(); ++i) tactic_histogram[i] += other.tactic_histogram[i];
  duration_seconds += other.duration_seconds;
  return *this;
}

DatasetStats operator+(DatasetStats lhs, const DatasetStats& rhs) { return lhs += rhs; }

DatasetStats dataset_stats(std::span<const ClipAnnotation> clips) {
  DatasetStats stats;
  for (const auto& clip : clips) {
    ++stats.clips;
    stats.frames += clip.frames.size();
    ++stats.view_histogram.at(static_cast<std::size_t>(clip.view));
    ++stats.tactic_histogram.at(static_cast<std::size_t>(tactic_index(clip.tactic)));
    stats.duration_seconds += static_cast<double>(clip.frames.size()) / clip.fps;
    for (const auto& frame : clip.frames) {
      for (const auto& p : frame.players) {
        ++stats.bbox;
        ++stats.pose;
        ++stats.gaze;
        ++stats.headpose;
        ++stats.role;
        if (p.velocity) ++stats.velocity;
        ++stats.role_histogram.at(static_cast<std::size_t>(p.role));
      }
    }
  }
  return stats;
}

std::string report_to_json(const ValidationReport& report) {
  json findings = json::array();
  for (const auto& f : report.findings) {
    findings.push_back({{"frame_id", f.frame_id},
                        {"player_id", f.player_id},
                        {"rule", f.rule},
                        {"message", f.message}});
  }
  json root = {{"clip_id", report.clip_id}, {"ok", report.ok()}, {"findings", std::move(findings)}};
  return root.dump(2);
}

std::string stats_to_json(const DatasetStats& stats) {
  json roles = json::object();
  for (std::size_t i = 0; i < stats.role_histogram.size(); ++i) {
    roles[std::string(kRoleNames[i])] = stats.role_histogram[i];
  }
  json root = {
      {"clips", stats.clips},
      {"frames", stats.frames},
      {"annotations",
       {{"bbox", stats.bbox},
        {"pose", stats.pose},
        {"gaze", stats.gaze},
        {"headpose", stats.headpose},
        {"velocity", stats.velocity},
        {"role", stats.role}}},
      {"role_histogram", roles},
      {"view_histogram", stats.view_histogram},
      {"tactic_histogram", stats.tactic_histogram},
      {"duration_seconds", stats.duration_seconds},
  };
  return root.dump(2);
}

}  // namespace gift
