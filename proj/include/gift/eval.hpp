#ifndef GIFT_EVAL_HPP
#define GIFT_EVAL_HPP

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gift/annotation.hpp"
#include "gift/model.hpp"

namespace gift {

struct MatchConfig {
  int delta = 0;  // frames

  void validate() const;
};

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  bool operator==(const Counts&) const = default;
};

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using PredictionMap = std::map<std::string, OccurrencePrediction>;
using TruthMap = std::map<std::string, int>;

/// Throws KeyMismatch when the two maps cover different clips.
Counts match_occurrences(const PredictionMap& preds, const TruthMap& gts, const MatchConfig& cfg);
Prf1 prf1(const Counts& counts);
double mae(const PredictionMap& preds, const TruthMap& gts);

struct EvalReport {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double mae = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long n_clips = 0;
  double coverage = 0.0;
  int delta = 0;

  bool operator==(const EvalReport&) const = default;
};

EvalReport make_report(const PredictionMap& preds, const TruthMap& gts, const MatchConfig& cfg);

std::string report_to_json(const EvalReport& report);
/// Header line plus one value line.
std::string report_to_csv(const EvalReport& report);

using Predictor = std::function<OccurrencePrediction(const ClipAnnotation&)>;

/// Runs the predictor over every clip. Clips are processed on up to
/// GIFT_THREADS threads; the result does not depend on the thread count.
PredictionMap predict_all(const Predictor& predictor, std::span<const ClipAnnotation> clips);

EvalReport evaluate(const Predictor& predictor, std::span<const ClipAnnotation> test_set, const MatchConfig& cfg);

template <typename Scalar>
EvalReport evaluate(const GiftModel<Scalar>& model, std::span<const ClipAnnotation> test_set, int seen_frames,
                    const MatchConfig& cfg, double threshold);

template <typename Scalar>
Predictor model_predictor(const GiftModel<Scalar>& model, int seen_frames, double threshold);

/// Always answers the rounded mean training occurrence frame, crossed.
Predictor baseline_mean_predictor(std::span<const ClipAnnotation> train_set);

TruthMap ground_truth(std::span<const ClipAnnotation> clips);

/// clip_id,gt,pred,crossed,peak,abs_error
std::string per_clip_csv(const PredictionMap& preds, const TruthMap& gts);

}  // namespace gift

#endif  // GIFT_EVAL_HPP
