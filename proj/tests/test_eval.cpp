#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "gift/errors.hpp"
#include "gift/eval.hpp"
#include "gift/synth.hpp"

namespace gift {
namespace {

OccurrencePrediction crossed(int frame) { return {frame, true, 1.0}; }

std::vector<ClipAnnotation> synthetic_clips(int n, std::uint64_t seed = 8) {
  SynthConfig s;
  s.seed = seed;
  s.n_clips = n;
  std::vector<ClipAnnotation> out;
  for (int i = 0; i < n; ++i) out.push_back(generate_clip(s, i));
  return out;
}

TEST(Match, DecisionRules) {
  const TruthMap gts = {{"a", 30}};
  EXPECT_EQ(match_occurrences({{"a", crossed(30)}}, gts, {0}), (Counts{1, 0, 0}));
  EXPECT_EQ(match_occurrences({{"a", crossed(33)}}, gts, {0}), (Counts{0, 1, 1}));
  EXPECT_EQ(match_occurrences({{"a", crossed(33)}}, gts, {5}), (Counts{1, 0, 0}));
  EXPECT_EQ(match_occurrences({{"a", {30, false, 0.2}}}, gts, {0}), (Counts{0, 0, 1}));
  EXPECT_THROW(match_occurrences({{"a", crossed(30)}}, gts, {-1}), ConfigError);
}

TEST(Match, KeyMismatch) {
  EXPECT_THROW(match_occurrences({{"a", crossed(1)}}, {{"b", 1}}, {0}), KeyMismatch);
  EXPECT_THROW(mae({{"a", crossed(1)}}, {{"a", 1}, {"b", 2}}), KeyMismatch);
}

TEST(Prf1, PublishedOperatingPoint) {
  // 3 / 17 = 0.1765 precision, 3 / 375 = 0.0080 recall
  const Prf1 r = prf1({3, 14, 372});
  EXPECT_NEAR(r.precision, 0.1765, 5e-5);
  EXPECT_NEAR(r.recall, 0.0080, 5e-5);
  EXPECT_NEAR(r.f1, 0.0153, 5e-4);
  EXPECT_NEAR(r.f1, 2.0 * 0.1765 * 0.0080 / (0.1765 + 0.0080), 5e-4);
}

TEST(Prf1, PerfectAndDegenerate) {
  const Prf1 perfect = prf1({12, 0, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const Prf1 none = prf1({0, 4, 9});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  const Prf1 empty = prf1({0, 0, 0});
  EXPECT_EQ(empty.f1, 0.0);
}

TEST(Prf1, SymmetricAndBounded) {
  for (long tp = 0; tp < 6; ++tp) {
    for (long fp = 0; fp < 6; ++fp) {
      for (long fn = 0; fn < 6; ++fn) {
        const Prf1 r = prf1({tp, fp, fn});
        const Prf1 swapped = prf1({tp, fn, fp});
        EXPECT_DOUBLE_EQ(r.f1, swapped.f1);
        EXPECT_LE(r.f1, 2.0 * std::min(r.precision, r.recall) + 1e-15);
      }
    }
  }
}

TEST(Mae, Arithmetic) {
  const TruthMap gts = {{"x", 10}, {"y", 25}};
  EXPECT_DOUBLE_EQ(mae({{"x", crossed(12)}, {"y", crossed(20)}}, gts), 3.5);
  EXPECT_DOUBLE_EQ(mae({{"x", crossed(10)}, {"y", crossed(25)}}, gts), 0.0);
  EXPECT_DOUBLE_EQ(mae({{"y", crossed(20)}, {"x", {12, false, 0.0}}}, gts), 3.5);
}

TEST(Matching, MonotoneInDelta) {
  PredictionMap preds;
  TruthMap gts;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::string id = "c" + std::to_string(i);
    gts[id] = rng.uniform_int(26, 45);
    preds[id] = {gts[id] + rng.uniform_int(-8, 8), rng.bernoulli(0.7), 0.5};
  }
  Prf1 last = prf1(match_occurrences(preds, gts, {0}));
  long last_tp = match_occurrences(preds, gts, {0}).tp;
  for (int delta = 1; delta <= 10; ++delta) {
    const Counts c = match_occurrences(preds, gts, {delta});
    const Prf1 r = prf1(c);
    EXPECT_GE(c.tp, last_tp);
    EXPECT_GE(r.recall, last.recall);
    EXPECT_GE(r.precision, last.precision);
    last = r;
    last_tp = c.tp;
  }
}

TEST(Evaluate, OraclePredictor) {
  const auto clips = synthetic_clips(12);
  const Predictor oracle = [](const ClipAnnotation& c) { return crossed(c.occurrence_frame); };
  for (int delta : {0, 3}) {
    const EvalReport r = evaluate(oracle, clips, {delta});
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.mae, 0.0);
    EXPECT_EQ(r.coverage, 1.0);
    EXPECT_EQ(r.n_clips, 12);
  }
}

TEST(Evaluate, NeverCrossingPredictor) {
  const auto clips = synthetic_clips(12);
  const Predictor never = [](const ClipAnnotation&) { return OccurrencePrediction{40, false, 0.1}; };
  const EvalReport r = evaluate(never, clips, {0});
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.coverage, 0.0);
  EXPECT_EQ(r.fn, 12);
  EXPECT_TRUE(std::isfinite(r.mae));
  EXPECT_GT(r.mae, 0.0);
  EXPECT_THROW(evaluate(never, {}, {0}), EmptyInput);
}

TEST(Baseline, MeanOfTrainingOccurrences) {
  auto clips = synthetic_clips(2);
  clips[0].occurrence_frame = 20;
  clips[1].occurrence_frame = 30;
  const Predictor p = baseline_mean_predictor(clips);
  EXPECT_EQ(p(clips[0]), (OccurrencePrediction{25, true, 1.0}));
  EXPECT_EQ(p(clips[1]), p(clips[0]));
}

TEST(Baseline, UniformRangeAndClosedFormMae) {
  const auto train = synthetic_clips(400, 1);
  const Predictor p = baseline_mean_predictor(train);
  const int constant = p(train[0]).point_estimate;
  EXPECT_GE(constant, 34);
  EXPECT_LE(constant, 37);

  const auto test = synthetic_clips(40, 2);
  double expected = 0.0;
  for (const auto& c : test) expected += std::abs(c.occurrence_frame - constant);
  expected /= static_cast<double>(test.size());
  EXPECT_NEAR(evaluate(p, test, {0}).mae, expected, 1e-12);
}

TEST(Evaluate, IndependentOfThreadCount) {
  const auto clips = synthetic_clips(9);
  const Predictor p = [](const ClipAnnotation& c) {
    return OccurrencePrediction{c.occurrence_frame + (c.clip_id.back() % 3), c.clip_id.back() % 2 == 0, 0.5};
  };
  setenv("GIFT_THREADS", "1", 1);
  const EvalReport one = evaluate(p, clips, {1});
  setenv("GIFT_THREADS", "4", 1);
  const EvalReport four = evaluate(p, clips, {1});
  unsetenv("GIFT_THREADS");
  EXPECT_EQ(one, four);
  EXPECT_EQ(report_to_csv(one), report_to_csv(four));
}

TEST(Report, CsvAndJson) {
  EvalReport r;
  r.recall = 0.5;
  r.mae = 3.25;
  r.n_clips = 4;
  const std::string csv = report_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "recall,precision,f1,mae,coverage,n_clips,delta");
  EXPECT_NE(report_to_json(r).find("\"mae\""), std::string::npos);
  const TruthMap gts = {{"a", 30}};
  const std::string rows = per_clip_csv({{"a", crossed(33)}}, gts);
  EXPECT_NE(rows.find("a,30,33,1"), std::string::npos);
}

}  // namespace
}  // namespace gift
