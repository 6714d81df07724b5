#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "gift/cli.hpp"
#include "gift/dataset.hpp"
#include "gift/errors.hpp"

namespace gift {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "gift");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gift_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, SynthTenClips) {
  const fs::path dir = scratch("synth");
  const Invocation r = run({"synth", "--n-clips", "10", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(clip_files(dir).size(), 10u);
  EXPECT_EQ(load_manifest(dir).clips.size(), 10u);
  const Invocation v = run({"validate", "--data", dir.string()});
  EXPECT_EQ(v.code, 0) << v.out;
  const Invocation s = run({"stats", "--data", dir.string()});
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("\"bbox\": 5000"), std::string::npos) << s.out;
  fs::remove_all(dir);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"synth", "--banana"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"synth", "--out", "/tmp/x", "--difficulty", "medium"}).code, 2);
}

TEST(Cli, MissingCheckpointIsRuntimeFailure) {
  const fs::path dir = scratch("missing");
  ASSERT_EQ(run({"synth", "--n-clips", "5", "--out", dir.string()}).code, 0);
  const Invocation r = run({"eval", "--checkpoint", (dir / "nope.ckpt").string(), "--data", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  fs::remove_all(dir);
}

TEST(Cli, HelpOnEverySubcommand) {
  for (const char* sub : {"synth", "validate", "stats", "train", "forecast", "eval", "gradcheck", "plot-data"}) {
    const Invocation r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, InvalidClipFailsValidation) {
  const fs::path dir = scratch("invalid");
  ASSERT_EQ(run({"synth", "--n-clips", "3", "--out", dir.string()}).code, 0);
  std::string text = read_text(dir / "synth-000001.json");
  text.replace(text.find("\"fps\":25.0"), 10, "\"fps\":-1.0");
  write_text(dir / "synth-000001.json", text);
  const Invocation r = run({"validate", "--data", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("fps.positive"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Config, ParseAndReject) {
  const CliConfig c = parse_config_text("# comment\nseed = 42\n\nembed_dim=64 # trailing\ndifficulty = hard\n"
                                        "lambda_role = 0.5\nresidual = temporal\n");
  EXPECT_EQ(c.synth.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.train.embed_dim, 64);
  EXPECT_EQ(c.synth.difficulty, Difficulty::kHard);
  EXPECT_DOUBLE_EQ(c.train.lambda_feature[5], 0.5);
  EXPECT_EQ(c.train.residual, ResidualMode::kTemporal);
  EXPECT_THROW(parse_config_text("banana = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config_text("epochs 3\n"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  CliConfig c;
  apply_setting(c, "tau", "7");
  apply_setting(c, "lr", "0.0005");
  apply_setting(c, "delta", "2");
  const CliConfig back = parse_config_text(config_text(c));
  EXPECT_EQ(back.train, c.train);
  EXPECT_EQ(back.synth, c.synth);
  EXPECT_EQ(back.match.delta, 2);
  const auto keys = config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST(Cli, EndToEndPipeline) {
  const fs::path dir = scratch("e2e");
  const fs::path data = dir / "data";
  const fs::path run_dir = dir / "run";
  ASSERT_EQ(run({"synth", "--n-clips", "10", "--seed", "3", "--out", data.string()}).code, 0);
  const Invocation t = run({"train", "--data", data.string(), "--out", run_dir.string(), "--epochs", "2", "--embed-dim",
                     "8", "--quiet"});
  ASSERT_EQ(t.code, 0) << t.err;
  for (const char* f : {"model.ckpt", "history.csv", "history.json", "config.txt"}) {
    EXPECT_TRUE(fs::exists(run_dir / f)) << f;
  }
  const fs::path ckpt = run_dir / "model.ckpt";
  const Invocation e = run({"eval", "--checkpoint", ckpt.string(), "--data", data.string(), "--out",
                     (dir / "eval").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(dir / "eval" / "eval_report.json"));
  EXPECT_TRUE(fs::exists(dir / "eval" / "predictions.csv"));
  EXPECT_EQ(run({"eval", "--baseline", "--data", data.string()}).code, 0);

  const Invocation f = run({"forecast", "--checkpoint", ckpt.string(), "--clip", (data / "synth-000000.json").string()});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NE(f.out.find("point_estimate"), std::string::npos);

  const Invocation p = run({"plot-data", "--history", (run_dir / "history.json").string(), "--checkpoint", ckpt.string(),
                     "--data", data.string(), "--out", (dir / "plots").string()});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(fs::exists(dir / "plots" / "loss_curve.csv"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "clip_errors.csv"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace gift
