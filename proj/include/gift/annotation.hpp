#ifndef GIFT_ANNOTATION_HPP
#define GIFT_ANNOTATION_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gift {

inline constexpr int kPlayersPerFrame = 10;
inline constexpr int kOffensePlayers = 5;
inline constexpr int kKeypoints = 17;
inline constexpr int kPoseValues = 2 * kKeypoints;
inline constexpr int kTacticCount = 54;
inline constexpr int kViewCount = 5;
inline constexpr int kRoleCount = 7;

enum class Role : std::uint8_t {
  kStanding,
  kRunning,
  kDefending,
  kHolding,
  kShooting,
  kLayingUp,
  kDunking,
};

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

/// Camera views, ordered left to right; the central view is index 2.
enum class View : std::uint8_t { kFarLeft, kLeft, kCenter, kRight, kFarRight };

enum class Passing : std::uint8_t { kNoPass, kOnePass, kMultiPass };
enum class PickAndRoll : std::uint8_t { kNoPnR, kOnePnR, kMultiPnR };
enum class ShotType : std::uint8_t { kShoot, kLayup, kDunk };

std::string_view to_string(Passing value);
std::string_view to_string(PickAndRoll value);
std::string_view to_string(ShotType value);

struct TacticLabel {
  Passing passing = Passing::kNoPass;
  PickAndRoll pnr = PickAndRoll::kNoPnR;
  bool drive = false;
  ShotType shot = ShotType::kShoot;

  bool operator==(const TacticLabel&) const = default;
};

/// Mixed-radix code ((passing*3 + pnr)*2 + drive)*3 + shot, in [0, 54).
int tactic_index(const TacticLabel& label);
TacticLabel tactic_from_index(int index);

/// Top-left anchored box in image pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
  double w = 0.0;

  bool operator==(const BBox&) const = default;
};

/// 17 COCO keypoints flattened as x0, y0, x1, y1, ...
using Pose = std::array<double, kPoseValues>;

struct Gaze {
  double pitch = 0.0;
  double yaw = 0.0;

  bool operator==(const Gaze&) const = default;
};

struct HeadPose {
  double pitch = 0.0;
  double yaw = 0.0;
  double roll = 0.0;

  bool operator==(const HeadPose&) const = default;
};

/// Pixels per second.
struct Velocity {
  double vx = 0.0;
  double vy = 0.0;

  bool operator==(const Velocity&) const = default;
};

struct PlayerFrameAnnotation {
  int player_id = 0;
  BBox bbox;
  Pose pose{};
  Gaze gaze;
  HeadPose headpose;
  std::optional<Velocity> velocity;
  Role role = Role::kStanding;

  bool operator==(const PlayerFrameAnnotation&) const = default;
};

inline bool is_offense(int player_id) { return player_id >= 1 && player_id <= kOffensePlayers; }

struct FrameAnnotation {
  int frame_id = 0;
  std::vector<PlayerFrameAnnotation> players;

  bool operator==(const FrameAnnotation&) const = default;
};

struct ClipAnnotation {
  std::string clip_id;
  View view = View::kCenter;
  TacticLabel tactic;
  double fps = 25.0;
  int occurrence_frame = 1;
  std::vector<FrameAnnotation> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }

  bool operator==(const ClipAnnotation&) const = default;
};

struct ParseOptions {
  /// Reject unknown object keys instead of ignoring them.
  bool strict = true;
  /// Run validate_clip and throw on the first finding.
  bool validate = true;
};

/// Throws SyntaxError, SchemaError or InvariantError.
ClipAnnotation parse_clip(std::string_view json_text, const ParseOptions& options = {});

/// Deterministic text: sorted keys, every real rounded to 6 significant digits.
std::string serialize_clip(const ClipAnnotation& clip);

/// Rounds every real to the precision serialize_clip writes, so that
/// parse_clip(serialize_clip(c)) == c holds exactly for the result.
ClipAnnotation quantize_clip(ClipAnnotation clip);
double quantize_real(double value);

/// Fills velocities from consecutive bbox anchors; frame 1 is (0, 0).
ClipAnnotation derive_velocities(ClipAnnotation clip);

struct Finding {
  int frame_id = 0;   // 0 when the rule is clip-level
  int player_id = 0;  // 0 when the rule is not player-level
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::string clip_id;
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
};

ValidationReport validate_clip(const ClipAnnotation& clip);

struct DatasetStats {
  std::size_t clips = 0;
  std::size_t frames = 0;
  std::size_t bbox = 0;
  std::size_t pose = 0;
  std::size_t gaze = 0;
  std::size_t headpose = 0;
  std::size_t velocity = 0;
  std::size_t role = 0;
  std::array<std::size_t, kRoleCount> role_histogram{};
  std::array<std::size_t, kViewCount> view_histogram{};
  std::array<std::size_t, kTacticCount> tactic_histogram{};
  double duration_seconds = 0.0;

  DatasetStats& operator+=(const DatasetStats& other);
  bool operator==(const DatasetStats&) const = default;
};

DatasetStats operator+(DatasetStats lhs, const DatasetStats& rhs);

DatasetStats dataset_stats(std::span<const ClipAnnotation> clips);

std::string report_to_json(const ValidationReport& report);
std::string stats_to_json(const DatasetStats& stats);

}  // namespace gift

#endif  // GIFT_ANNOTATION_HPP
