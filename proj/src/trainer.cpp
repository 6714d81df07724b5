#include "gift/trainer.hpp"

#include <cstdio>
#include <numeric>

#include "json.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gift {

using nlohmann::json;

namespace {

std::string real_text(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

json breakdown_json(const LossBreakdown& b) {
  return {{"total", b.total},
          {"recon", b.recon},
          {"fore", b.fore},
          {"const", b.constant},
          {"recon_terms", b.recon_terms},
          {"fore_terms", b.fore_terms}};
}

LossBreakdown breakdown_from(const json& j) {
  LossBreakdown b;
  b.total = j.at("total").get<double>();
  b.recon = j.at("recon").get<double>();
  b.fore = j.at("fore").get<double>();
  b.constant = j.at("const").get<double>();
  b.recon_terms = j.at("recon_terms").get<std::array<double, 6>>();
  b.fore_terms = j.at("fore_terms").get<std::array<double, 6>>();
  return b;
}

template <typename Scalar>
std::vector<PreparedClip<Scalar>> prepare_all(const Normalizer& nz, std::span<const ClipAnnotation> clips,
                                              int seen_frames) {
  std::vector<PreparedClip<Scalar>> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(prepare_clip<Scalar>(nz, c, seen_frames));
  return out;
}

// Training allocates and frees the same large activation buffers for every
// clip; keeping them on the heap instead of fresh mmaps avoids page faults.
void keep_buffers_resident() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace

Normalizer fit_training_normalizer(std::span<const ClipAnnotation> clips, int seen_frames) {
  std::vector<WindowTensor> windows;
  windows.reserve(clips.size());
  for (const auto& c : clips) windows.push_back(window_tensor(c, seen_frames));
  return fit_normalizer(windows);
}

template <typename Scalar>
LossBreakdown mean_loss(const GiftModel<Scalar>& model, std::span<const PreparedClip<Scalar>> clips) {
  LossBreakdown sum;
  for (const auto& clip : clips) {
    Tape<Scalar> tape;
    ParamSource<Scalar> source = [&](const std::string& name) { return tape.constant(model.params[name].value); };
    ForwardContext ctx;
    const auto vars = forward_tape(tape, model, source, clip.window, clip.total_frames, ctx);
    sum += loss_tape(vars.prediction, clip.target, clip.window.frames(), model.config, &vars.decoder_seen,
                     &vars.encoder_latent)
               .values();
  }
  if (!clips.empty()) sum /= static_cast<double>(clips.size());
  return sum;
}

template <typename Scalar>
TrainResult<Scalar> train(std::span<const ClipAnnotation> train_set, std::span<const ClipAnnotation> val_set,
                          const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  keep_buffers_resident();
  if (train_set.empty()) throw EmptyInput("training split is empty");
  if (val_set.empty()) throw EmptyInput("validation split is empty");

  const Normalizer nz = fit_training_normalizer(train_set, cfg.seen_frames);
  TrainResult<Scalar> result{model_init<Scalar>(cfg, cfg.seed, nz), {}, 0};
  GiftModel<Scalar>& model = result.model;
  const auto train_clips = prepare_all<Scalar>(nz, train_set, cfg.seen_frames);
  const auto val_clips = prepare_all<Scalar>(nz, val_set, cfg.seen_frames);

  AdamW<Scalar> optimizer(model.params, cfg.learning_rate, cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2,
                          cfg.adam_epsilon);
  Rng order_rng = Rng::stream(cfg.seed, 0x5348554646ULL);
  Rng dropout_rng = Rng::stream(cfg.seed, 0x44524f50ULL);
  std::vector<std::size_t> order(train_clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ParameterSet<Scalar> best = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }
    LossBreakdown epoch_sum;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      model.params.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const PreparedClip<Scalar>& clip = train_clips[order[k]];
        Tape<Scalar> tape;
        ParamSource<Scalar> source = [&](const std::string& name) { return tape.parameter(model.params[name]); };
        ForwardContext ctx{true, cfg.dropout, &dropout_rng};
        LossBreakdown loss;
        try {
          const auto vars = forward_tape(tape, model, source, clip.window, clip.total_frames, ctx);
          const auto terms = loss_tape(vars.prediction, clip.target, cfg.seen_frames, cfg, &vars.decoder_seen,
                                       &vars.encoder_latent);
          loss = terms.values();
          tape.backward(terms.total);
        } catch (const NonFinite& e) {
          throw NonFinite("training diverged at epoch " + std::to_string(epoch) + ", clip '" + clip.clip_id +
                          "': " + e.what());
        }
        ++step;
        if (hooks.on_step) hooks.on_step(epoch, step, loss);
        epoch_sum += loss;
      }
      const auto scale = static_cast<Scalar>(1.0 / static_cast<double>(stop - start));
      for (auto& p : model.params) {
        p.grad *= scale;
        if (!p.grad.allFinite()) {
          throw NonFinite("non-finite gradient for '" + p.name + "' at epoch " + std::to_string(epoch));
        }
      }
      optimizer.step(model.params);
    }
    epoch_sum /= static_cast<double>(train_clips.size());

    EpochRecord record{epoch, epoch_sum, mean_loss<Scalar>(model, val_clips)};
    if (!std::isfinite(record.val.total)) {
      throw NonFinite("validation loss diverged at epoch " + std::to_string(epoch));
    }
    if (record.val.total < best_val) {
      best_val = record.val.total;
      best = model.params;
      result.best_epoch = epoch;
    }
    result.history.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);
  }
  model.params = std::move(best);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  static constexpr std::array<const char*, 6> kNames = {"bbox", "pose", "headpose", "gaze", "velocity", "role"};
  std::string out = "epoch";
  for (const char* split : {"train", "val"}) {
    for (const char* part : {"total", "recon", "fore", "const"}) out += std::string(",") + split + "_" + part;
    for (const char* part : {"recon", "fore"}) {
      for (const char* name : kNames) out += std::string(",") + split + "_" + part + "_" + name;
    }
  }
  out += "\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch);
    for (const LossBreakdown* b : {&r.train, &r.val}) {
      for (double v : {b->total, b->recon, b->fore, b->constant}) out += "," + real_text(v);
      for (double v : b->recon_terms) out += "," + real_text(v);
      for (double v : b->fore_terms) out += "," + real_text(v);
    }
    out += "\n";
  }
  return out;
}

std::string history_json(const std::vector<EpochRecord>& history, int best_epoch) {
  json epochs = json::array();
  for (const auto& r : history) {
    epochs.push_back({{"epoch", r.epoch}, {"train", breakdown_json(r.train)}, {"val", breakdown_json(r.val)}});
  }
  return json{{"best_epoch", best_epoch}, {"epochs", std::move(epochs)}}.dump(2) + "\n";
}

std::vector<EpochRecord> history_from_json(const std::string& text, int* best_epoch) {
  std::vector<EpochRecord> out;
  try {
    const json j = json::parse(text);
    if (best_epoch != nullptr) *best_epoch = j.at("best_epoch").get<int>();
    for (const auto& e : j.at("epochs")) {
      out.push_back({e.at("epoch").get<int>(), breakdown_from(e.at("train")), breakdown_from(e.at("val"))});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad history document: ") + e.what());
  }
  return out;
}

template TrainResult<float> train<float>(std::span<const ClipAnnotation>, std::span<const ClipAnnotation>,
                                         const TrainConfig&, const TrainHooks&);
template TrainResult<double> train<double>(std::span<const ClipAnnotation>, std::span<const ClipAnnotation>,
                                           const TrainConfig&, const TrainHooks&);
template LossBreakdown mean_loss<float>(const GiftModel<float>&, std::span<const PreparedClip<float>>);
template LossBreakdown mean_loss<double>(const GiftModel<double>&, std::span<const PreparedClip<double>>);

}  // namespace gift
