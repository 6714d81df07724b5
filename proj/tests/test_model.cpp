#include <gtest/gtest.h>

#include <cmath>

#include "gift/checkpoint.hpp"
#include "gift/errors.hpp"
#include "gift/model.hpp"
#include "gift/rng.hpp"
#include "gift/synth.hpp"

namespace gift {
namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.embed_dim = 16;
  return cfg;
}

ClipAnnotation synthetic_clip(int index = 0) {
  SynthConfig s;
  s.seed = 4;
  s.n_clips = 10;
  return generate_clip(s, index);
}

Tensor<double> random_tensor(int frames, Rng& rng) {
  Tensor<double> t(frames, 10, 46);
  for (Eigen::Index i = 0; i < t.values().size(); ++i) t.values().data()[i] = rng.normal();
  return t;
}

TEST(Config, PublishedDefaults) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.embed_dim, 128);
  EXPECT_EQ(cfg.encoder_blocks, 4);
  EXPECT_EQ(cfg.seen_frames, 10);
  EXPECT_DOUBLE_EQ(cfg.lambda_recon, 2.0);
  EXPECT_DOUBLE_EQ(cfg.lambda_fore, 0.01);
  EXPECT_DOUBLE_EQ(cfg.lambda_const, 10.0);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(cfg.weight_decay, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.dropout, 0.1);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);
}

TEST(Config, RejectsBadValues) {
  TrainConfig cfg;
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.embed_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Model, EmbedDimHonoured) {
  const auto model = model_init<double>(TrainConfig{}, 1);
  EXPECT_EQ(model.params["embed.weight"].value.cols(), 128);
  EXPECT_EQ(model_init<double>(small_config(), 1).params["embed.weight"].value.cols(), 16);
}

TEST(Model, ForwardShapeAndDeterminism) {
  const auto model = model_init<double>(TrainConfig{}, 2);
  const ClipAnnotation clip = synthetic_clip();
  const Tensor<double> out = forward_full(model, clip, 10);
  EXPECT_EQ(out.frames(), 50);
  EXPECT_EQ(out.players(), 10);
  EXPECT_EQ(out.channels(), 46);
  EXPECT_EQ(forward_full(model, clip, 10), out);
  EXPECT_THROW(forward_full(model, clip, 50), RangeError);
}

TEST(Model, SameSeedSameCheckpoint) {
  EXPECT_EQ(checkpoint_bytes(model_init<double>(small_config(), 7)),
            checkpoint_bytes(model_init<double>(small_config(), 7)));
  EXPECT_NE(checkpoint_bytes(model_init<double>(small_config(), 7)),
            checkpoint_bytes(model_init<double>(small_config(), 8)));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(3);
  Normalizer nz;
  for (int c = 0; c < 45; ++c) {
    nz.mean(c) = rng.normal(0.0, 100.0);
    nz.stddev(c) = rng.uniform(0.5, 50.0);
  }
  auto model = model_init<double>(small_config(), 9, nz);
  const std::string bytes = checkpoint_bytes(model);
  const auto back = model_from_bytes<double>(bytes);
  EXPECT_EQ(back.params, model.params);
  EXPECT_EQ(back.normalizer, model.normalizer);
  EXPECT_EQ(back.config, model.config);
  EXPECT_EQ(checkpoint_bytes(back), bytes);
  const ClipAnnotation clip = synthetic_clip(1);
  EXPECT_EQ(forward_full(back, clip, 10), forward_full(model, clip, 10));

  const auto path = std::filesystem::temp_directory_path() / "gift_test_model.ckpt";
  save_checkpoint(model, path);
  EXPECT_EQ(checkpoint_scalar_bytes(path), 8);
  EXPECT_EQ(load_checkpoint<double>(path).params, model.params);
  EXPECT_THROW(load_checkpoint<float>(path), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(model_from_bytes<double>(bytes.substr(0, bytes.size() - 3)), Error);
}

TEST(Loss, ZeroWhenPredictionIsTarget) {
  Rng rng(4);
  const Tensor<double> t = random_tensor(20, rng);
  const LossBreakdown l = compute_loss(t, t, 10, TrainConfig{});
  EXPECT_EQ(l.recon, 0.0);
  EXPECT_EQ(l.fore, 0.0);
  EXPECT_EQ(l.total, 0.0);
}

TEST(Loss, RolePerturbationTouchesOneTerm) {
  Rng rng(5);
  const TrainConfig cfg;
  const Tensor<double> target = random_tensor(50, rng);
  Tensor<double> pred = target;
  pred.values().array() += 0.25;
  const LossBreakdown before = compute_loss(pred, target, 10, cfg);
  const double delta = 0.7;
  pred(30, 2, kRoleChannel) += delta;
  const LossBreakdown after = compute_loss(pred, target, 10, cfg);
  const double count = 40.0 * 10.0;
  const double old_err = 0.25 * 0.25;
  const double new_err = (0.25 + delta) * (0.25 + delta);
  const double expected = cfg.lambda_feature[5] * (new_err - old_err) / count;
  for (int j = 0; j < 6; ++j) {
    EXPECT_EQ(after.recon_terms[j], before.recon_terms[j]);
    if (j != 5) {
      EXPECT_EQ(after.fore_terms[j], before.fore_terms[j]);
    }
  }
  EXPECT_NEAR(after.fore_terms[5] - before.fore_terms[5], expected, 1e-15);
}

TEST(Loss, RolePerturbationFromExactForecast) {
  Rng rng(6);
  const TrainConfig cfg;
  const Tensor<double> target = random_tensor(50, rng);
  Tensor<double> pred = target;
  const double delta = 0.3;
  pred(45, 0, kRoleChannel) += delta;
  const LossBreakdown l = compute_loss(pred, target, 10, cfg);
  EXPECT_NEAR(l.fore_terms[5], cfg.lambda_feature[5] * delta * delta / 400.0, 1e-18);
  EXPECT_NEAR(l.total, cfg.lambda_fore * l.fore_terms[5], 1e-18);
}

TEST(Loss, EachSliceMovesOnlyItsTerm) {
  Rng rng(7);
  const TrainConfig cfg;
  const Tensor<double> target = random_tensor(20, rng);
  const LossBreakdown base = compute_loss(target, target, 10, cfg);
  for (std::size_t j = 0; j < kFeatureSlices.size(); ++j) {
    Tensor<double> pred = target;
    pred(3, 4, kFeatureSlices[j].begin) += 1.0;
    pred(15, 6, kFeatureSlices[j].begin) += 1.0;
    const LossBreakdown l = compute_loss(pred, target, 10, cfg);
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_EQ(l.recon_terms[k] != base.recon_terms[k], k == j);
      EXPECT_EQ(l.fore_terms[k] != base.fore_terms[k], k == j);
    }
  }
}

TEST(Loss, RecombinationAndLinearityInWeights) {
  Rng rng(8);
  TrainConfig cfg;
  const Tensor<double> target = random_tensor(30, rng);
  const Tensor<double> pred = random_tensor(30, rng);
  const LossBreakdown a = compute_loss(pred, target, 10, cfg);
  EXPECT_NEAR(a.total, a.recombined(cfg), 1e-9);
  cfg.lambda_recon *= 2.0;
  const LossBreakdown b = compute_loss(pred, target, 10, cfg);
  EXPECT_EQ(b.recon, a.recon);
  EXPECT_NEAR(b.total - a.total, TrainConfig{}.lambda_recon * a.recon, 1e-12);
}

TEST(Occurrence, OracleCrossing) {
  Tensor<double> pred(50, 10, 46);
  for (int t = 29; t < 50; ++t) pred(t, 2, kRoleChannel) = 1.0;
  const auto o = occurrence_from_prediction(pred, 10, 0.5);
  EXPECT_EQ(o.point_estimate, 30);
  EXPECT_TRUE(o.crossed_threshold);
  EXPECT_EQ(o.peak_score, 1.0);
}

TEST(Occurrence, ArgmaxFallback) {
  Tensor<double> pred(50, 10, 46);
  pred(36, 1, kRoleChannel) = 0.4;
  const auto o = occurrence_from_prediction(pred, 10, 0.5);
  EXPECT_EQ(o.point_estimate, 37);
  EXPECT_FALSE(o.crossed_threshold);
  EXPECT_DOUBLE_EQ(o.peak_score, 0.4);
}

TEST(Occurrence, IgnoresDefendersAndSeenFrames) {
  Tensor<double> pred(50, 10, 46);
  pred(5, 0, kRoleChannel) = 0.9;
  pred(20, 7, kRoleChannel) = 0.9;
  pred(40, 4, kRoleChannel) = 0.6;
  EXPECT_EQ(occurrence_from_prediction(pred, 10, 0.5).point_estimate, 41);
}

TEST(Occurrence, MonotoneRescalingInvariant) {
  Rng rng(9);
  Tensor<double> pred(50, 10, 46);
  for (int t = 0; t < 50; ++t) {
    for (int i = 0; i < 10; ++i) pred(t, i, kRoleChannel) = rng.uniform(0.0, 0.8);
  }
  Tensor<double> cubed = pred;
  cubed.values().col(kRoleChannel) = pred.values().col(kRoleChannel).array().cube();
  for (double th : {0.5, 0.79, 2.0}) {
    EXPECT_EQ(occurrence_from_prediction(pred, 10, th).point_estimate,
              occurrence_from_prediction(cubed, 10, th * th * th).point_estimate);
  }
}

TEST(Occurrence, EstimateAfterSeenWindow) {
  const auto model = model_init<double>(small_config(), 11);
  for (int i = 0; i < 5; ++i) {
    const auto o = forecast_occurrence(model, synthetic_clip(i), 10, 0.5);
    EXPECT_GT(o.point_estimate, 10);
    EXPECT_LE(o.point_estimate, 50);
  }
}

}  // namespace
}  // namespace gift
