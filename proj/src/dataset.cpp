#include "gift/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gift/errors.hpp"
#include "json.hpp"

namespace gift {

using nlohmann::json;

std::string manifest_to_json(const DatasetManifest& m) {
  json clips = json::array();
  for (const auto& e : m.clips) {
    clips.push_back({{"clip_id", e.clip_id},
                     {"file", e.file},
                     {"split", e.split},
                     {"occurrence_frame", e.occurrence_frame},
                     {"shooter", e.shooter},
                     {"tactic_index", tactic_index(e.tactic)}});
  }
  json root = {{"format_version", m.format_version}, {"clips", std::move(clips)}};
  if (!m.generator.empty()) root["generator"] = json::parse(m.generator);
  return root.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json root = json::parse(text);
    m.format_version = root.at("format_version").get<std::string>();
    if (m.format_version != kDatasetFormat) {
      throw SchemaError("unsupported dataset format '" + m.format_version + "'");
    }
    if (root.contains("generator")) m.generator = root.at("generator").dump();
    for (const auto& node : root.at("clips")) {
      ManifestEntry e;
      e.clip_id = node.at("clip_id").get<std::string>();
      e.file = node.at("file").get<std::string>();
      e.split = node.at("split").get<std::string>();
      e.occurrence_frame = node.value("occurrence_frame", 0);
      e.shooter = node.value("shooter", 0);
      e.tactic = tactic_from_index(node.value("tactic_index", 0));
      if (e.split != "train" && e.split != "val" && e.split != "test") {
        throw SchemaError("clip '" + e.clip_id + "' has unknown split '" + e.split + "'");
      }
      m.clips.push_back(std::move(e));
    }
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.what());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad manifest: ") + e.what());
  }
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  return manifest_from_json(read_text(dir / kManifestName));
}

ClipAnnotation load_clip_file(const std::filesystem::path& path, const ParseOptions& options) {
  ClipAnnotation clip = parse_clip(read_text(path), options);
  const bool missing = std::any_of(clip.frames.begin(), clip.frames.end(), [](const auto& f) {
    return std::any_of(f.players.begin(), f.players.end(), [](const auto& p) { return !p.velocity; });
  });
  return missing ? derive_velocities(std::move(clip)) : clip;
}

std::vector<ClipAnnotation> load_split(const std::filesystem::path& dir, std::string_view split) {
  const DatasetManifest m = load_manifest(dir);
  std::vector<ClipAnnotation> out;
  for (const auto& e : m.clips) {
    if (split != "all" && e.split != split) continue;
    out.push_back(load_clip_file(dir / e.file));
  }
  return out;
}

std::vector<std::filesystem::path> clip_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    if (entry.path().filename() == kManifestName) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gift
