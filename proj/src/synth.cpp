#include "gift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "gift/dataset.hpp"
#include "gift/errors.hpp"
#include "gift/features.hpp"
#include "gift/rng.hpp"
#include "json.hpp"

namespace gift {

namespace {

constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
double heading(Vec2 from, Vec2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// COCO keypoint order, as fractions of the bbox (u across, v down).
constexpr std::array<std::array<double, 2>, kKeypoints> kStandingTemplate = {{
    {0.50, 0.07}, {0.54, 0.05}, {0.46, 0.05}, {0.58, 0.07}, {0.42, 0.07},  // head
    {0.68, 0.20}, {0.32, 0.20},                                            // shoulders
    {0.76, 0.36}, {0.24, 0.36},                                            // elbows
    {0.78, 0.50}, {0.22, 0.50},                                            // wrists
    {0.62, 0.52}, {0.38, 0.52},                                            // hips
    {0.64, 0.74}, {0.36, 0.74},                                            // knees
    {0.65, 0.96}, {0.35, 0.96},                                            // ankles
}};

/// Per-difficulty knobs of the planted pre-shot behaviour.
struct CueProfile {
  int window;            // frames between arrival at the shot spot and the shot
  double decay;          // per-frame speed factor inside the window
  double speed_lo;       // approach speed range, px/s
  double speed_hi;
  double angle_spread;   // approach direction spread, rad
  double noise;          // multiplier on every jitter term
};

CueProfile cue_profile(Difficulty d) {
  if (d == Difficulty::kEasy) return {8, 0.75, 300.0, 300.0, 0.15, 1.0};
  return {4, 0.85, 200.0, 400.0, 0.8, 3.0};
}

struct Track {
  std::vector<Vec2> position;  // foot point per frame
  std::vector<double> yaw;     // gaze yaw per frame
  std::vector<double> pitch;   // gaze pitch per frame
  std::vector<Role> role;
};

Vec2 clamp_to_court(Vec2 p, const SynthConfig& cfg, double margin) {
  return {std::clamp(p.x, margin, cfg.court_width - margin), std::clamp(p.y, margin + 160.0, cfg.court_height - margin)};
}

}  // namespace

std::string_view to_string(Difficulty d) { return d == Difficulty::kEasy ? "easy" : "hard"; }

Difficulty parse_difficulty(std::string_view text) {
  if (text == "easy") return Difficulty::kEasy;
  if (text == "hard") return Difficulty::kHard;
  throw ConfigError("difficulty must be 'easy' or 'hard', got '" + std::string(text) + "'");
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(n_clips >= 1, "n_clips must be >= 1");
  require(frames >= 2, "frames must be >= 2");
  require(std::isfinite(fps) && fps > 0.0, "fps must be > 0");
  require(occurrence_min > 10, "occurrence range must start after frame 10");
  require(occurrence_min <= occurrence_max, "occurrence range is empty");
  require(occurrence_max <= frames, "occurrence range exceeds the clip length");
  require(occurrence_min - cue_profile(difficulty).window > 10,
          "occurrence range leaves no room for the pre-shot cue after frame 10");
  require(court_width >= 400.0 && court_height >= 400.0, "court must be at least 400 x 400 px");
  require(noise.position >= 0.0 && noise.pose >= 0.0 && noise.gaze >= 0.0 && noise.headpose >= 0.0,
          "noise scales must be >= 0");
}

int synth_shooter(const SynthConfig& cfg, int index) {
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(index));
  rng.uniform_int(cfg.occurrence_min, cfg.occurrence_max);
  return rng.uniform_int(1, kOffensePlayers);
}

ClipAnnotation generate_clip(const SynthConfig& cfg, int index) {
  cfg.validate();
  if (index < 0 || index >= cfg.n_clips) throw RangeError("clip index outside [0, n_clips)");
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(index));
  const CueProfile cue = cue_profile(cfg.difficulty);
  const int frames = cfg.frames;
  const double dt = 1.0 / cfg.fps;

  // Draw order is part of the determinism contract; synth_shooter mirrors it.
  const int occurrence = rng.uniform_int(cfg.occurrence_min, cfg.occurrence_max);
  const int shooter = rng.uniform_int(1, kOffensePlayers);
  const TacticLabel tactic = tactic_from_index(rng.uniform_int(0, kTacticCount - 1));
  const auto view = static_cast<View>(rng.uniform_int(0, kViewCount - 1));

  const Vec2 basket{0.88 * cfg.court_width, 0.5 * cfg.court_height};
  const double margin = 40.0;
  const double pos_noise = 1.5 * cfg.noise.position * cue.noise;
  const double pose_noise = 2.0 * cfg.noise.pose * cue.noise;
  const double gaze_noise = 0.03 * cfg.noise.gaze * cue.noise;
  const double head_noise = 0.04 * cfg.noise.headpose * cue.noise;

  std::array<Track, kPlayersPerFrame> tracks;
  for (auto& t : tracks) {
    t.position.resize(static_cast<std::size_t>(frames));
    t.yaw.resize(static_cast<std::size_t>(frames));
    t.pitch.resize(static_cast<std::size_t>(frames));
    t.role.resize(static_cast<std::size_t>(frames));
  }

  // Shooter: straight approach at constant speed, reaching the shot spot
  // `cue.window` frames before the shot, then slowing down while turning
  // towards the basket. Built backwards from the shot position.
  {
    Track& t = tracks[static_cast<std::size_t>(shooter - 1)];
    const double speed = rng.uniform(cue.speed_lo, cue.speed_hi);
    const double angle = kPi + rng.uniform(-cue.angle_spread, cue.angle_spread);
    const Vec2 away{std::cos(angle), std::sin(angle)};  // from basket towards the shooter
    const double spot_distance = 120.0;
    const int arrival = occurrence - cue.window;
    const double look_offset = 0.6;
    std::vector<double> step(static_cast<std::size_t>(frames) + 1, 0.0);  // displacement entering frame k
    for (int k = 2; k <= frames; ++k) {
      double v = 0.0;
      if (k <= arrival) {
        v = speed;
      } else if (k <= occurrence) {
        v = speed * std::pow(cue.decay, k - arrival);
      }
      step[static_cast<std::size_t>(k)] = v * dt;
    }
    double remaining = spot_distance;
    for (int k = occurrence; k >= 1; --k) {
      t.position[static_cast<std::size_t>(k - 1)] = basket + remaining * away;
      remaining += step[static_cast<std::size_t>(k)];
    }
    for (int k = occurrence + 1; k <= frames; ++k) {
      t.position[static_cast<std::size_t>(k - 1)] = t.position[static_cast<std::size_t>(occurrence - 1)];
    }
    for (int k = 1; k <= frames; ++k) {
      const auto i = static_cast<std::size_t>(k - 1);
      const double to_basket = heading(t.position[i], basket);
      double offset = look_offset;
      if (k >= occurrence) {
        offset = 0.0;
      } else if (k > arrival) {
        offset = look_offset * static_cast<double>(occurrence - k) / static_cast<double>(occurrence - arrival);
      }
      t.yaw[i] = wrap_angle(to_basket + offset);
      t.pitch[i] = k >= occurrence ? 0.25 : -0.1;
      t.role[i] = Role::kHolding;
      if (k >= occurrence) {
        t.role[i] = tactic.shot == ShotType::kShoot   ? Role::kShooting
                    : tactic.shot == ShotType::kLayup ? Role::kLayingUp
                                                      : Role::kDunking;
      }
    }
  }

  // Other attackers: momentum-damped random walks in the offensive half.
  for (int id = 1; id <= kOffensePlayers; ++id) {
    if (id == shooter) continue;
    Track& t = tracks[static_cast<std::size_t>(id - 1)];
    Vec2 p{rng.uniform(0.50, 0.85) * cfg.court_width, rng.uniform(0.20, 0.85) * cfg.court_height};
    Vec2 v{rng.normal(0.0, 80.0), rng.normal(0.0, 80.0)};
    double yaw = rng.uniform(-kPi, kPi);
    for (int k = 0; k < frames; ++k) {
      const auto i = static_cast<std::size_t>(k);
      if (k > 0) {
        v = 0.85 * v + Vec2{rng.normal(0.0, 45.0), rng.normal(0.0, 45.0)};
        const double s = norm(v);
        if (s > 350.0) v = (350.0 / s) * v;
        Vec2 next = p + dt * v;
        if (next.x < margin || next.x > cfg.court_width - margin) v.x = -v.x;
        if (next.y < margin + 160.0 || next.y > cfg.court_height - margin) v.y = -v.y;
        p = clamp_to_court(p + dt * v, cfg, margin);
        yaw = wrap_angle(yaw + rng.normal(0.0, 0.08));
      }
      t.position[i] = p;
      t.yaw[i] = yaw;
      t.pitch[i] = rng.normal(-0.1, 0.05);
      t.role[i] = norm(v) > 60.0 ? Role::kRunning : Role::kStanding;
    }
  }

  // Defenders: follow the nearest attacker, staying between it and the basket.
  std::array<Vec2, kOffensePlayers> defender_start{};
  for (int d = 0; d < kOffensePlayers; ++d) {
    const Vec2 mark = tracks[static_cast<std::size_t>(d)].position[0];
    defender_start[static_cast<std::size_t>(d)] =
        mark + Vec2{rng.normal(60.0, 20.0), rng.normal(0.0, 30.0)};
  }
  for (int d = 0; d < kOffensePlayers; ++d) {
    Track& t = tracks[static_cast<std::size_t>(kOffensePlayers + d)];
    Vec2 p = defender_start[static_cast<std::size_t>(d)];
    const double gain = rng.uniform(0.15, 0.30);
    for (int k = 0; k < frames; ++k) {
      const auto i = static_cast<std::size_t>(k);
      std::size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < kOffensePlayers; ++a) {
        const double dist = norm(tracks[a].position[i] - p);
        if (dist < best) {
          best = dist;
          nearest = a;
        }
      }
      const Vec2 mark = tracks[nearest].position[i];
      const double toward = heading(mark, basket);
      const Vec2 target = mark + 60.0 * Vec2{std::cos(toward), std::sin(toward)};
      if (k > 0) {
        p = clamp_to_court(p + gain * (target - p) + Vec2{rng.normal(0.0, 2.0), rng.normal(0.0, 2.0)}, cfg, margin);
      }
      t.position[i] = p;
      t.yaw[i] = heading(p, mark);
      t.pitch[i] = rng.normal(-0.1, 0.05);
      t.role[i] = Role::kDefending;
    }
  }

  // Annotation rendering.
  std::array<double, kPlayersPerFrame> height{};
  for (auto& h : height) h = rng.uniform(170.0, 200.0);

  ClipAnnotation clip;
  char id[32];
  std::snprintf(id, sizeof id, "synth-%06d", index);
  clip.clip_id = id;
  clip.view = view;
  clip.tactic = tactic;
  clip.fps = cfg.fps;
  clip.occurrence_frame = occurrence;
  clip.frames.resize(static_cast<std::size_t>(frames));
  for (int k = 0; k < frames; ++k) {
    FrameAnnotation& frame = clip.frames[static_cast<std::size_t>(k)];
    frame.frame_id = k + 1;
    for (int id_ = 1; id_ <= kPlayersPerFrame; ++id_) {
      const Track& t = tracks[static_cast<std::size_t>(id_ - 1)];
      const auto i = static_cast<std::size_t>(k);
      PlayerFrameAnnotation p;
      p.player_id = id_;
      const double h = height[static_cast<std::size_t>(id_ - 1)] + rng.normal(0.0, 1.0 * cue.noise);
      const double w = 0.42 * h;
      p.bbox = {t.position[i].x - 0.5 * w + rng.normal(0.0, pos_noise),
                t.position[i].y - h + rng.normal(0.0, pos_noise), h, w};
      const bool shooting = binarize_role(t.role[i]) == 1;
      for (int j = 0; j < kKeypoints; ++j) {
        double u = kStandingTemplate[static_cast<std::size_t>(j)][0];
        double v = kStandingTemplate[static_cast<std::size_t>(j)][1];
        if (shooting && j >= 7 && j <= 10) v = j <= 8 ? 0.02 : -0.08;  // arms raised
        p.pose[static_cast<std::size_t>(2 * j)] = p.bbox.x + u * w + rng.normal(0.0, pose_noise);
        p.pose[static_cast<std::size_t>(2 * j + 1)] = p.bbox.y + v * h + rng.normal(0.0, pose_noise);
      }
      p.gaze = {std::clamp(t.pitch[i] + rng.normal(0.0, gaze_noise), -kPi / 2, kPi / 2),
                wrap_angle(t.yaw[i] + rng.normal(0.0, gaze_noise))};
      p.headpose = {std::clamp(0.8 * p.gaze.pitch + rng.normal(0.0, head_noise), -kPi, kPi),
                    wrap_angle(p.gaze.yaw + rng.normal(0.0, head_noise)), rng.normal(0.0, head_noise)};
      p.role = t.role[i];
      frame.players.push_back(p);
    }
  }
  return quantize_clip(derive_velocities(quantize_clip(std::move(clip))));
}

SplitSizes split_sizes(int n_clips) {
  SplitSizes s;
  s.test = static_cast<int>(std::lround(0.2 * n_clips));
  const int rest = n_clips - s.test;
  s.val = static_cast<int>(std::lround(rest / 5.0));
  s.train = rest - s.val;
  return s;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::json j = {{"seed", cfg.seed},
                      {"n_clips", cfg.n_clips},
                      {"frames", cfg.frames},
                      {"fps", cfg.fps},
                      {"occurrence_min", cfg.occurrence_min},
                      {"occurrence_max", cfg.occurrence_max},
                      {"court_width", cfg.court_width},
                      {"court_height", cfg.court_height},
                      {"noise",
                       {{"position", cfg.noise.position},
                        {"pose", cfg.noise.pose},
                        {"gaze", cfg.noise.gaze},
                        {"headpose", cfg.noise.headpose}}},
                      {"difficulty", std::string(to_string(cfg.difficulty))}};
  return j.dump();
}

SynthManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  const SplitSizes sizes = split_sizes(cfg.n_clips);
  std::vector<int> order(static_cast<std::size_t>(cfg.n_clips));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::stream(cfg.seed, 0x53504c4954ULL);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(split_rng.uniform_int(0, static_cast<int>(i) - 1))]);
  }
  std::vector<std::string> split(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto rank = static_cast<int>(r);
    split[static_cast<std::size_t>(order[r])] =
        rank < sizes.test ? "test" : rank < sizes.test + sizes.val ? "val" : "train";
  }

  SynthManifest manifest{cfg, {}};
  DatasetManifest file_manifest;
  file_manifest.generator = synth_config_to_json(cfg);
  for (int index = 0; index < cfg.n_clips; ++index) {
    const ClipAnnotation clip = generate_clip(cfg, index);
    SynthClipInfo info{clip.clip_id, clip.clip_id + ".json", split[static_cast<std::size_t>(index)],
                       clip.occurrence_frame, synth_shooter(cfg, index), clip.tactic};
    write_text(out_dir / info.file, serialize_clip(clip));
    file_manifest.clips.push_back(
        {info.clip_id, info.file, info.split, info.occurrence_frame, info.shooter, info.tactic});
    manifest.clips.push_back(std::move(info));
  }
  write_text(out_dir / kManifestName, manifest_to_json(file_manifest));
  return manifest;
}

}  // namespace gift
