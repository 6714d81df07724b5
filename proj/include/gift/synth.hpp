#ifndef GIFT_SYNTH_HPP
#define GIFT_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gift/annotation.hpp"

namespace gift {

enum class Difficulty { kEasy, kHard };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view text);

/// Multipliers on the per-attribute jitter of generated annotations.
struct NoiseScale {
  double position = 1.0;
  double pose = 1.0;
  double gaze = 1.0;
  double headpose = 1.0;

  bool operator==(const NoiseScale&) const = default;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int n_clips = 100;
  int frames = 50;
  double fps = 25.0;
  int occurrence_min = 26;
  int occurrence_max = 45;
  double court_width = 1920.0;
  double court_height = 1080.0;
  NoiseScale noise;
  Difficulty difficulty = Difficulty::kEasy;

  /// Throws ConfigError.
  void validate() const;

  bool operator==(const SynthConfig&) const = default;
};

/// Ground truth that the generator knows about one clip.
struct SynthClipInfo {
  std::string clip_id;
  std::string file;
  std::string split;  // "train", "val" or "test"
  int occurrence_frame = 0;
  int shooter = 0;
  TacticLabel tactic;
};

struct SynthManifest {
  SynthConfig config;
  std::vector<SynthClipInfo> clips;
};

/// A valid clip that is a pure function of (cfg.seed, index).
ClipAnnotation generate_clip(const SynthConfig& cfg, int index);

/// Shooter id planted in clip `index`.
int synth_shooter(const SynthConfig& cfg, int index);

/// Writes one JSON file per clip plus manifest.json; splits 20% test, then
/// 4:1 train/validation over the remainder.
SynthManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Sizes of the (train, val, test) splits for n clips.
struct SplitSizes {
  int train = 0;
  int val = 0;
  int test = 0;
};
SplitSizes split_sizes(int n_clips);

std::string synth_config_to_json(const SynthConfig& cfg);

}  // namespace gift

#endif  // GIFT_SYNTH_HPP
