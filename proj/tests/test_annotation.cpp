#include <gtest/gtest.h>

#include <set>

#include "gift/annotation.hpp"
#include "gift/errors.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"

namespace gift {
namespace {

using testing::fixture_clip;
using testing::invalid_fixtures;

TEST(Parse, TwoFrameFixture) {
  const ClipAnnotation clip = parse_clip(serialize_clip(fixture_clip(2)));
  EXPECT_EQ(clip.clip_id, "fixture");
  ASSERT_EQ(clip.frame_count(), 2);
  for (const auto& frame : clip.frames) EXPECT_EQ(frame.players.size(), 10u);
  EXPECT_EQ(clip.frames[1].players[0].role, Role::kShooting);
  EXPECT_EQ(clip.tactic.shot, ShotType::kLayup);
}

TEST(Parse, MissingPlayerIsSchemaError) {
  auto doc = nlohmann::json::parse(serialize_clip(fixture_clip(2)));
  doc["frames"][0]["players"].erase(6);
  EXPECT_THROW(parse_clip(doc.dump()), SchemaError);
}

TEST(Parse, NotJson) { EXPECT_THROW(parse_clip("{\"clip_id\": "), SyntaxError); }

TEST(Parse, InvalidFixturesRaiseDesignatedErrors) {
  const auto fixtures = invalid_fixtures();
  ASSERT_EQ(fixtures.size(), 20u);
  for (const auto& f : fixtures) {
    SCOPED_TRACE(f.name);
    switch (f.kind) {
      case testing::ErrorKind::kSyntax:
        EXPECT_THROW(parse_clip(f.text), SyntaxError);
        break;
      case testing::ErrorKind::kSchema:
        EXPECT_THROW(parse_clip(f.text), SchemaError);
        break;
      case testing::ErrorKind::kInvariant: {
        try {
          parse_clip(f.text);
          ADD_FAILURE() << "accepted";
        } catch (const InvariantError& e) {
          EXPECT_EQ(std::string(e.what()).rfind(f.rule, 0), 0u) << e.what();
        }
        break;
      }
    }
  }
}

TEST(Parse, LenientModeIgnoresUnknownKeys) {
  auto doc = nlohmann::json::parse(serialize_clip(fixture_clip(2)));
  doc["comment"] = "x";
  EXPECT_THROW(parse_clip(doc.dump()), SchemaError);
  EXPECT_NO_THROW(parse_clip(doc.dump(), {.strict = false}));
}

TEST(Serialize, RoundTripAndFixedPoint) {
  const ClipAnnotation clip = fixture_clip(5);
  const std::string text = serialize_clip(clip);
  const ClipAnnotation back = parse_clip(text);
  EXPECT_EQ(back, clip);
  EXPECT_EQ(serialize_clip(back), text);
}

TEST(Serialize, AbsentVelocityOmitted) {
  const ClipAnnotation clip = fixture_clip(3, false);
  const std::string text = serialize_clip(clip);
  EXPECT_EQ(text.find("velocity"), std::string::npos);
  const ClipAnnotation back = parse_clip(text);
  EXPECT_FALSE(back.frames[1].players[0].velocity.has_value());
}

TEST(Serialize, QuantizeIsIdempotent) {
  EXPECT_EQ(quantize_real(quantize_real(1.0 / 3.0)), quantize_real(1.0 / 3.0));
  EXPECT_DOUBLE_EQ(quantize_real(123.4564), 123.456);
}

TEST(Velocity, FiniteDifferenceOfAnchor) {
  ClipAnnotation clip = fixture_clip(2, false);
  clip.frames[0].players[0].bbox.x = 100.0;
  clip.frames[1].players[0].bbox.x = 105.0;
  clip.frames[0].players[0].bbox.y = 40.0;
  clip.frames[1].players[0].bbox.y = 40.0;
  clip = derive_velocities(clip);
  EXPECT_DOUBLE_EQ(clip.frames[1].players[0].velocity->vx, 125.0);
  EXPECT_DOUBLE_EQ(clip.frames[1].players[0].velocity->vy, 0.0);
}

TEST(Velocity, StationaryClipIsZero) {
  ClipAnnotation clip = fixture_clip(4, false);
  for (auto& frame : clip.frames) {
    for (auto& p : frame.players) p.bbox = clip.frames[0].players[p.player_id - 1].bbox;
  }
  clip = derive_velocities(clip);
  for (const auto& frame : clip.frames) {
    for (const auto& p : frame.players) EXPECT_EQ(*p.velocity, (Velocity{0.0, 0.0}));
  }
}

TEST(Velocity, FirstFrameIsZero) {
  const ClipAnnotation clip = derive_velocities(fixture_clip(3, false));
  for (const auto& p : clip.frames[0].players) EXPECT_EQ(*p.velocity, (Velocity{0.0, 0.0}));
}

TEST(Validate, FixtureIsClean) { EXPECT_TRUE(validate_clip(fixture_clip(3)).ok()); }

TEST(Validate, GazeYawOutOfRange) {
  ClipAnnotation clip = fixture_clip(3);
  clip.frames[1].players[2].gaze.yaw = 7.0;
  const auto report = validate_clip(clip);
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].rule, "gaze.range");
  EXPECT_EQ(report.findings[0].frame_id, 2);
  EXPECT_EQ(report.findings[0].player_id, 3);
}

TEST(Validate, OccurrenceBeyondClip) {
  ClipAnnotation clip = fixture_clip(3);
  clip.occurrence_frame = 6;
  const auto report = validate_clip(clip);
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].rule, "occurrence.range");
}

TEST(Tactic, IndexCorners) {
  EXPECT_EQ(tactic_index({Passing::kNoPass, PickAndRoll::kNoPnR, false, ShotType::kShoot}), 0);
  EXPECT_EQ(tactic_index({Passing::kMultiPass, PickAndRoll::kMultiPnR, true, ShotType::kDunk}), 53);
}

TEST(Tactic, IndicesDistinctAndInvertible) {
  std::set<int> seen;
  for (int p = 0; p < 3; ++p) {
    for (int r = 0; r < 3; ++r) {
      for (int d = 0; d < 2; ++d) {
        for (int s = 0; s < 3; ++s) {
          const TacticLabel t{static_cast<Passing>(p), static_cast<PickAndRoll>(r), d == 1,
                              static_cast<ShotType>(s)};
          const int i = tactic_index(t);
          EXPECT_GE(i, 0);
          EXPECT_LT(i, 54);
          EXPECT_EQ(tactic_from_index(i), t);
          seen.insert(i);
        }
      }
    }
  }
  EXPECT_EQ(seen.size(), 54u);
  EXPECT_THROW(tactic_from_index(54), RangeError);
}

TEST(Stats, FiftyFrameClip) {
  const std::vector<ClipAnnotation> clips = {fixture_clip(50)};
  const DatasetStats s = dataset_stats(clips);
  EXPECT_EQ(s.clips, 1u);
  EXPECT_EQ(s.frames, 50u);
  EXPECT_EQ(s.bbox, 500u);
  EXPECT_EQ(s.velocity, 500u);
  EXPECT_DOUBLE_EQ(s.duration_seconds, 2.0);
  EXPECT_EQ(s.role_histogram[static_cast<int>(Role::kShooting)], 1u);
}

TEST(Stats, EmptyCollection) {
  const DatasetStats s = dataset_stats({});
  EXPECT_EQ(s, DatasetStats{});
  EXPECT_EQ(s.bbox, 0u);
}

TEST(Stats, AdditiveOverConcatenation) {
  const std::vector<ClipAnnotation> a = {fixture_clip(4)};
  const std::vector<ClipAnnotation> b = {fixture_clip(7, false)};
  const std::vector<ClipAnnotation> ab = {a[0], b[0]};
  EXPECT_EQ(dataset_stats(ab), dataset_stats(a) + dataset_stats(b));
}

}  // namespace
}  // namespace gift
