#ifndef GIFT_DATASET_HPP
#define GIFT_DATASET_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gift/annotation.hpp"

namespace gift {

inline constexpr std::string_view kDatasetFormat = "gift-dataset/1";
inline constexpr std::string_view kManifestName = "manifest.json";

struct ManifestEntry {
  std::string clip_id;
  std::string file;
  std::string split;
  int occurrence_frame = 0;
  int shooter = 0;  // 0 when unknown
  TacticLabel tactic;
};

/// A dataset is a directory holding clip files and this manifest.
struct DatasetManifest {
  std::string format_version = std::string(kDatasetFormat);
  std::string generator;  // JSON object text echoing the generator config, may be empty
  std::vector<ManifestEntry> clips;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

DatasetManifest load_manifest(const std::filesystem::path& dir);

/// Parses a clip file and derives velocities when any are missing.
ClipAnnotation load_clip_file(const std::filesystem::path& path, const ParseOptions& options = {});

/// Clips of one split in manifest order; split "all" selects every clip.
std::vector<ClipAnnotation> load_split(const std::filesystem::path& dir, std::string_view split);

/// Every *.json file of a directory except the manifest, sorted by name.
std::vector<std::filesystem::path> clip_files(const std::filesystem::path& dir);

}  // namespace gift

#endif  // GIFT_DATASET_HPP
