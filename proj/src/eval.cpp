#include "gift/eval.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "gift/errors.hpp"
#include "json.hpp"

namespace gift {

namespace {

void check_keys(const PredictionMap& preds, const TruthMap& gts) {
  bool same = preds.size() == gts.size();
  auto g = gts.begin();
  for (auto p = preds.begin(); same && p != preds.end(); ++p, ++g) same = p->first == g->first;
  if (!same) {
    throw KeyMismatch("predictions cover " + std::to_string(preds.size()) + " clips, ground truth " +
                      std::to_string(gts.size()) + ", and the clip ids differ");
  }
}

std::string real_text(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

unsigned thread_count(std::size_t jobs) {
  unsigned n = 1;
  if (const char* env = std::getenv("GIFT_THREADS"); env != nullptr && *env != '\0') {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  } else {
    n = std::max(1u, std::thread::hardware_concurrency());
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

void MatchConfig::validate() const {
  if (delta < 0) throw ConfigError("delta must be >= 0");
}

Counts match_occurrences(const PredictionMap& preds, const TruthMap& gts, const MatchConfig& cfg) {
  cfg.validate();
  check_keys(preds, gts);
  Counts c;
  for (const auto& [id, pred] : preds) {
    const int gt = gts.at(id);
    if (!pred.crossed_threshold) {
      ++c.fn;
    } else if (std::abs(pred.point_estimate - gt) <= cfg.delta) {
      ++c.tp;
    } else {
      ++c.fp;
      ++c.fn;
    }
  }
  return c;
}

Prf1 prf1(const Counts& c) {
  Prf1 r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double mae(const PredictionMap& preds, const TruthMap& gts) {
  check_keys(preds, gts);
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, pred] : preds) sum += std::abs(pred.point_estimate - gts.at(id));
  return sum / static_cast<double>(preds.size());
}

EvalReport make_report(const PredictionMap& preds, const TruthMap& gts, const MatchConfig& cfg) {
  const Counts c = match_occurrences(preds, gts, cfg);
  const Prf1 s = prf1(c);
  EvalReport r;
  r.recall = s.recall;
  r.precision = s.precision;
  r.f1 = s.f1;
  r.mae = mae(preds, gts);
  r.tp = c.tp;
  r.fp = c.fp;
  r.fn = c.fn;
  r.n_clips = static_cast<long>(preds.size());
  long crossed = 0;
  for (const auto& [id, pred] : preds) crossed += pred.crossed_threshold ? 1 : 0;
  r.coverage = preds.empty() ? 0.0 : static_cast<double>(crossed) / static_cast<double>(preds.size());
  r.delta = cfg.delta;
  return r;
}

std::string report_to_json(const EvalReport& r) {
  const nlohmann::json j = {{"recall", r.recall},   {"precision", r.precision}, {"f1", r.f1},
                            {"mae", r.mae},         {"tp", r.tp},               {"fp", r.fp},
                            {"fn", r.fn},           {"n_clips", r.n_clips},     {"coverage", r.coverage},
                            {"delta", r.delta}};
  return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& r) {
  return "recall,precision,f1,mae,coverage,n_clips,delta\n" + real_text(r.recall) + "," + real_text(r.precision) +
         "," + real_text(r.f1) + "," + real_text(r.mae) + "," + real_text(r.coverage) + "," +
         std::to_string(r.n_clips) + "," + std::to_string(r.delta) + "\n";
}

PredictionMap predict_all(const Predictor& predictor, std::span<const ClipAnnotation> clips) {
  std::vector<OccurrencePrediction> out(clips.size());
  const unsigned n = thread_count(clips.size());
  if (n <= 1) {
    for (std::size_t i = 0; i < clips.size(); ++i) out[i] = predictor(clips[i]);
  } else {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < n; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < clips.size(); i += n) out[i] = predictor(clips[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  PredictionMap map;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (!map.emplace(clips[i].clip_id, out[i]).second) {
      throw KeyMismatch("duplicate clip id '" + clips[i].clip_id + "'");
    }
  }
  return map;
}

TruthMap ground_truth(std::span<const ClipAnnotation> clips) {
  TruthMap map;
  for (const auto& c : clips) {
    if (!map.emplace(c.clip_id, c.occurrence_frame).second) {
      throw KeyMismatch("duplicate clip id '" + c.clip_id + "'");
    }
  }
  return map;
}

EvalReport evaluate(const Predictor& predictor, std::span<const ClipAnnotation> test_set, const MatchConfig& cfg) {
  if (test_set.empty()) throw EmptyInput("test set is empty");
  return make_report(predict_all(predictor, test_set), ground_truth(test_set), cfg);
}

template <typename Scalar>
Predictor model_predictor(const GiftModel<Scalar>& model, int seen_frames, double threshold) {
  return [&model, seen_frames, threshold](const ClipAnnotation& clip) {
    return forecast_occurrence(model, clip, seen_frames, threshold);
  };
}

template <typename Scalar>
EvalReport evaluate(const GiftModel<Scalar>& model, std::span<const ClipAnnotation> test_set, int seen_frames,
                    const MatchConfig& cfg, double threshold) {
  return evaluate(model_predictor(model, seen_frames, threshold), test_set, cfg);
}

Predictor baseline_mean_predictor(std::span<const ClipAnnotation> train_set) {
  if (train_set.empty()) throw EmptyInput("baseline needs a non-empty training set");
  double sum = 0.0;
  for (const auto& c : train_set) sum += c.occurrence_frame;
  const int frame = static_cast<int>(std::lround(sum / static_cast<double>(train_set.size())));
  return [frame](const ClipAnnotation&) { return OccurrencePrediction{frame, true, 1.0}; };
}

std::string per_clip_csv(const PredictionMap& preds, const TruthMap& gts) {
  check_keys(preds, gts);
  std::string out = "clip_id,gt,pred,crossed,peak,abs_error\n";
  for (const auto& [id, p] : preds) {
    const int gt = gts.at(id);
    out += id + "," + std::to_string(gt) + "," + std::to_string(p.point_estimate) + "," +
           (p.crossed_threshold ? "1" : "0") + "," + real_text(p.peak_score) + "," +
           std::to_string(std::abs(p.point_estimate - gt)) + "\n";
  }
  return out;
}

template Predictor model_predictor<float>(const GiftModel<float>&, int, double);
template Predictor model_predictor<double>(const GiftModel<double>&, int, double);
template EvalReport evaluate<float>(const GiftModel<float>&, std::span<const ClipAnnotation>, int,
                                    const MatchConfig&, double);
template EvalReport evaluate<double>(const GiftModel<double>&, std::span<const ClipAnnotation>, int,
                                     const MatchConfig&, double);

}  // namespace gift
