#ifndef GIFT_TESTS_FIXTURES_HPP
#define GIFT_TESTS_FIXTURES_HPP

#include <functional>
#include <string>
#include <vector>

#include "gift/annotation.hpp"
#include "json.hpp"

namespace gift::testing {

/// Hand-built valid clip: ten players on a line, player 1 shooting at the
/// last frame, which is also the occurrence frame.
inline ClipAnnotation fixture_clip(int frames = 2, bool with_velocity = true) {
  ClipAnnotation clip;
  clip.clip_id = "fixture";
  clip.view = View::kCenter;
  clip.tactic = {Passing::kOnePass, PickAndRoll::kNoPnR, true, ShotType::kLayup};
  clip.fps = 25.0;
  clip.occurrence_frame = frames;
  for (int t = 1; t <= frames; ++t) {
    FrameAnnotation frame;
    frame.frame_id = t;
    for (int id = 1; id <= kPlayersPerFrame; ++id) {
      PlayerFrameAnnotation p;
      p.player_id = id;
      p.bbox = {100.0 + 150.0 * (id - 1) + 5.0 * (t - 1), 400.0 + 2.0 * (t - 1), 180.0, 75.0};
      for (int k = 0; k < kKeypoints; ++k) {
        p.pose[2 * k] = p.bbox.x + 4.0 * k;
        p.pose[2 * k + 1] = p.bbox.y + 10.0 * k;
      }
      p.gaze = {-0.1, 0.25 * (id % 3)};
      p.headpose = {-0.05, 0.2 * (id % 3), 0.01};
      if (is_offense(id)) {
        p.role = (id == 1 && t == frames) ? Role::kShooting : Role::kRunning;
      } else {
        p.role = Role::kDefending;
      }
      frame.players.push_back(p);
    }
    clip.frames.push_back(std::move(frame));
  }
  clip = quantize_clip(std::move(clip));
  return with_velocity ? quantize_clip(derive_velocities(std::move(clip))) : clip;
}

enum class ErrorKind { kSyntax, kSchema, kInvariant };

struct InvalidFixture {
  std::string name;
  std::string text;
  ErrorKind kind;
  std::string rule;  // validation rule for invariant failures
};

/// Twenty malformed variants of fixture_clip(3), each with the error it must raise.
inline std::vector<InvalidFixture> invalid_fixtures() {
  using nlohmann::json;
  const std::string good = serialize_clip(fixture_clip(3));
  const json base = json::parse(good);
  std::vector<InvalidFixture> out;
  auto edit = [&](std::string name, ErrorKind kind, std::string rule, const std::function<void(json&)>& f) {
    json doc = base;
    f(doc);
    out.push_back({std::move(name), doc.dump(), kind, std::move(rule)});
  };
  auto player = [](json& doc, int frame, int index) -> json& { return doc["frames"][frame]["players"][index]; };

  out.push_back({"truncated", good.substr(0, good.size() / 2), ErrorKind::kSyntax, ""});
  out.push_back({"trailing garbage", good + "}", ErrorKind::kSyntax, ""});
  edit("missing clip_id", ErrorKind::kSchema, "", [](json& d) { d.erase("clip_id"); });
  edit("frames not an array", ErrorKind::kSchema, "", [](json& d) { d["frames"] = 3; });
  edit("nine players", ErrorKind::kSchema, "", [](json& d) { d["frames"][0]["players"].erase(6); });
  edit("bbox arity", ErrorKind::kSchema, "", [&](json& d) { player(d, 1, 2)["bbox"].erase(3); });
  edit("pose arity", ErrorKind::kSchema, "", [&](json& d) { player(d, 0, 4)["pose"].erase(0); });
  edit("unknown role", ErrorKind::kSchema, "", [&](json& d) { player(d, 2, 3)["role"] = "jumping"; });
  edit("unknown key", ErrorKind::kSchema, "", [](json& d) { d["extra"] = 1; });
  edit("unknown tactic value", ErrorKind::kSchema, "", [](json& d) { d["tactic"]["shot"] = "hook"; });
  edit("gaze yaw", ErrorKind::kInvariant, "gaze.range", [&](json& d) { player(d, 1, 1)["gaze"][1] = 7.0; });
  edit("occurrence after clip", ErrorKind::kInvariant, "occurrence.range",
       [](json& d) { d["occurrence_frame"] = 6; });
  edit("zero fps", ErrorKind::kInvariant, "fps.positive", [](json& d) { d["fps"] = 0.0; });
  edit("duplicate player", ErrorKind::kInvariant, "player_id.duplicate",
       [&](json& d) { player(d, 1, 7)["player_id"] = 3; });
  edit("player id 11", ErrorKind::kInvariant, "player_id.range",
       [&](json& d) { player(d, 2, 9)["player_id"] = 11; });
  edit("negative height", ErrorKind::kInvariant, "bbox.size", [&](json& d) { player(d, 0, 5)["bbox"][2] = -5.0; });
  edit("frame gap", ErrorKind::kInvariant, "frame_id.sequence", [](json& d) { d["frames"][2]["frame_id"] = 4; });
  edit("headpose roll", ErrorKind::kInvariant, "headpose.range",
       [&](json& d) { player(d, 2, 8)["headpose"][2] = 4.0; });
  edit("first-frame velocity", ErrorKind::kInvariant, "velocity.first_frame",
       [&](json& d) { player(d, 0, 1)["velocity"][0] = 12.5; });
  edit("nobody shoots", ErrorKind::kInvariant, "occurrence.role",
       [&](json& d) { player(d, 2, 0)["role"] = "holding"; });
  return out;
}

}  // namespace gift::testing

#endif  // GIFT_TESTS_FIXTURES_HPP
