#ifndef GIFT_MODEL_HPP
#define GIFT_MODEL_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "gift/annotation.hpp"
#include "gift/features.hpp"
#include "gift/stgcn.hpp"

namespace gift {

/// Every knob of the model and its optimization. Defaults are the published
/// settings where those exist.
struct TrainConfig {
  // architecture
  int embed_dim = 128;
  int encoder_blocks = 4;
  int decoder_blocks = 4;
  int seen_frames = 10;  // tau
  int dct_keep = 0;      // coefficients of the padded window fed to the encoder; 0 means tau
  double dropout = 0.1;
  ResidualMode residual = ResidualMode::kInput;
  std::string graph = "full";  // "full" or "team"

  // objective
  double lambda_recon = 2.0;
  double lambda_fore = 0.01;
  double lambda_const = 10.0;
  bool use_const_loss = true;
  /// bbox, pose, headpose, gaze, velocity, role
  std::array<double, 6> lambda_feature = {0.1, 0.05, 0.001, 0.1, 10.0, 0.1};

  // optimization
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 100;
  int batch_size = 8;
  std::uint64_t seed = 0;

  double threshold = 0.5;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);

/// All learnable state plus the fixed pieces needed for inference.
template <typename Scalar>
struct GiftModel {
  TrainConfig config;
  Normalizer normalizer;
  PlayerGraph graph;
  ParameterSet<Scalar> params;

  int encoder_blocks() const { return config.encoder_blocks; }
};

template <typename Scalar>
GiftModel<Scalar> model_init(const TrainConfig& cfg, std::uint64_t seed,
                             const Normalizer& normalizer = Normalizer::identity());

PlayerGraph make_graph(const std::string& kind);

/// Tape handles produced by one forward pass (normalized feature space).
template <typename Scalar>
struct ForwardVars {
  Var<Scalar> prediction;      // total_frames x 10 x 46
  Var<Scalar> encoder_latent;  // tau x 10 x embed
  Var<Scalar> decoder_seen;    // decoder output on frames 1..tau
};

/// DCT embedding, encoder, decoder and IDCT readout on an already
/// normalized seen window.
template <typename Scalar>
ForwardVars<Scalar> forward_tape(Tape<Scalar>& tape, const GiftModel<Scalar>& model,
                                 const ParamSource<Scalar>& source, const Tensor<Scalar>& window,
                                 int total_frames, ForwardContext& ctx);

/// Predicted features for frames 1..T in original units (eval mode).
template <typename Scalar>
Tensor<double> forward_full(const GiftModel<Scalar>& model, const ClipAnnotation& clip, int seen_frames);

/// Scalar loss values. Sub-terms are already weighted by lambda_1..6, so
/// recon == sum(recon_terms) and likewise for fore.
struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;
  double fore = 0.0;
  double constant = 0.0;
  std::array<double, 6> recon_terms{};
  std::array<double, 6> fore_terms{};

  double recombined(const TrainConfig& cfg) const {
    return cfg.lambda_recon * recon + cfg.lambda_fore * fore + cfg.lambda_const * constant;
  }
  LossBreakdown& operator+=(const LossBreakdown& other);
  LossBreakdown& operator/=(double divisor);
};

template <typename Scalar>
struct LossVars {
  Var<Scalar> total;
  std::array<Var<Scalar>, 6> recon_terms;
  std::array<Var<Scalar>, 6> fore_terms;
  Var<Scalar> constant;

  LossBreakdown values() const;
};

/// Builds the weighted objective on the tape. `constant` may be null when
/// no latent states are available (the consistency term is then zero).
template <typename Scalar>
LossVars<Scalar> loss_tape(Var<Scalar> prediction, const MatrixX<Scalar>& target, int seen_frames,
                           const TrainConfig& cfg, const Var<Scalar>* decoder_seen = nullptr,
                           const Var<Scalar>* encoder_latent = nullptr);

/// Loss of a plain prediction against a target, both normalized.
LossBreakdown compute_loss(const Tensor<double>& prediction, const Tensor<double>& target, int seen_frames,
                           const TrainConfig& cfg);

struct OccurrencePrediction {
  int point_estimate = 0;
  bool crossed_threshold = false;
  double peak_score = 0.0;

  bool operator==(const OccurrencePrediction&) const = default;
};

/// First forecast frame whose best offensive role score reaches the
/// threshold, else the arg-max frame. Frames are 1-based; `prediction`
/// covers frames 1..T.
OccurrencePrediction occurrence_from_prediction(const Tensor<double>& prediction, int seen_frames,
                                                double threshold);

template <typename Scalar>
OccurrencePrediction forecast_occurrence(const GiftModel<Scalar>& model, const ClipAnnotation& clip,
                                         int seen_frames, double threshold);

/// Normalized seen window and full target of one clip.
template <typename Scalar>
struct PreparedClip {
  std::string clip_id;
  int occurrence_frame = 0;
  Tensor<Scalar> window;
  MatrixX<Scalar> target;
  int total_frames = 0;
};

template <typename Scalar>
PreparedClip<Scalar> prepare_clip(const Normalizer& nz, const ClipAnnotation& clip, int seen_frames);

}  // namespace gift

#endif  // GIFT_MODEL_HPP
