#include "gift/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace gift {

using nlohmann::json;

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(embed_dim >= 1, "embed_dim must be >= 1");
  require(encoder_blocks >= 1, "encoder_blocks must be >= 1");
  require(decoder_blocks >= 1, "decoder_blocks must be >= 1");
  require(seen_frames >= 1, "tau must be >= 1");
  require(dct_keep >= 0, "dct_keep must be >= 0");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(graph == "full" || graph == "team", "graph must be 'full' or 'team'");
  require(lambda_recon >= 0.0 && lambda_fore >= 0.0 && lambda_const >= 0.0, "loss weights must be >= 0");
  for (double l : lambda_feature) require(l >= 0.0, "feature loss weights must be >= 0");
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning rate must be >= 0");
  require(weight_decay >= 0.0, "weight decay must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "adam betas must be in [0, 1)");
  require(adam_epsilon > 0.0, "adam epsilon must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch size must be >= 1");
  require(threshold >= 0.0 && threshold <= 1.0, "threshold must be in [0, 1]");
}

std::string config_to_json(const TrainConfig& c) {
  json j = {
      {"embed_dim", c.embed_dim},
      {"encoder_blocks", c.encoder_blocks},
      {"decoder_blocks", c.decoder_blocks},
      {"tau", c.seen_frames},
      {"dct_keep", c.dct_keep},
      {"dropout", c.dropout},
      {"residual", std::string(to_string(c.residual))},
      {"graph", c.graph},
      {"lambda_recon", c.lambda_recon},
      {"lambda_fore", c.lambda_fore},
      {"lambda_const", c.lambda_const},
      {"use_const_loss", c.use_const_loss},
      {"lambda_feature", c.lambda_feature},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_epsilon", c.adam_epsilon},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"threshold", c.threshold},
  };
  return j.dump();
}

TrainConfig config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.embed_dim = j.at("embed_dim").get<int>();
    c.encoder_blocks = j.at("encoder_blocks").get<int>();
    c.decoder_blocks = j.at("decoder_blocks").get<int>();
    c.seen_frames = j.at("tau").get<int>();
    c.dct_keep = j.at("dct_keep").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.residual = parse_residual_mode(j.at("residual").get<std::string>());
    c.graph = j.at("graph").get<std::string>();
    c.lambda_recon = j.at("lambda_recon").get<double>();
    c.lambda_fore = j.at("lambda_fore").get<double>();
    c.lambda_const = j.at("lambda_const").get<double>();
    c.use_const_loss = j.at("use_const_loss").get<bool>();
    c.lambda_feature = j.at("lambda_feature").get<std::array<double, 6>>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_epsilon = j.at("adam_epsilon").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threshold = j.at("threshold").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config record: ") + e.what());
  }
  c.validate();
  return c;
}

PlayerGraph make_graph(const std::string& kind) {
  if (kind == "full") return PlayerGraph::fully_connected(kPlayersPerFrame);
  if (kind == "team") return PlayerGraph::team_partitioned(kPlayersPerFrame);
  throw ConfigError("unknown graph '" + kind + "'");
}

template <typename Scalar>
GiftModel<Scalar> model_init(const TrainConfig& cfg, std::uint64_t seed, const Normalizer& normalizer) {
  cfg.validate();
  GiftModel<Scalar> m;
  m.config = cfg;
  m.normalizer = normalizer;
  m.graph = make_graph(cfg.graph);
  Rng rng(seed);
  const int e = cfg.embed_dim;
  m.params.add("embed.weight", glorot_uniform<Scalar>(kFeatureDim, e, kFeatureDim, e, rng));
  m.params.add("embed.bias", MatrixX<Scalar>::Zero(1, e));
  for (int b = 0; b < cfg.encoder_blocks; ++b) {
    add_block_parameters(m.params, "encoder." + std::to_string(b), e, e, cfg.residual, rng);
  }
  for (int b = 0; b < cfg.decoder_blocks; ++b) {
    add_block_parameters(m.params, "decoder." + std::to_string(b), e, e, cfg.residual, rng);
  }
  m.params.add("readout.weight", glorot_uniform<Scalar>(e, kFeatureDim, e, kFeatureDim, rng));
  m.params.add("readout.bias", MatrixX<Scalar>::Zero(1, kFeatureDim));
  return m;
}

template <typename Scalar>
ForwardVars<Scalar> forward_tape(Tape<Scalar>& tape, const GiftModel<Scalar>& model,
                                 const ParamSource<Scalar>& source, const Tensor<Scalar>& window,
                                 int total_frames, ForwardContext& ctx) {
  const TrainConfig& cfg = model.config;
  const int seen = window.frames();
  if (window.channels() != kFeatureDim || window.players() != model.graph.players()) {
    throw ShapeError("window must be tau x 10 x 46");
  }
  if (total_frames < seen) throw RangeError("total frames shorter than the seen window");

  // The seen window is padded to the full horizon by repeating its last
  // frame, so encoder and readout share one frequency basis of length T.
  const int keep = std::min(cfg.dct_keep > 0 ? cfg.dct_keep : seen, total_frames);
  const MatrixX<Scalar> idct = dct_matrix<Scalar>(total_frames).transpose();
  MatrixX<Scalar> embed_transform = idct.transpose().topRows(keep).leftCols(seen);
  embed_transform.col(seen - 1) += idct.transpose().topRows(keep).rightCols(total_frames - seen).rowwise().sum();
  const MatrixX<Scalar> graph = model.graph.normalized.template cast<Scalar>();

  Var<Scalar> x = tape.constant(window.values(), seen);
  Var<Scalar> coeffs = ad::time_transform(x, embed_transform);
  Var<Scalar> h = ad::add_bias(ad::matmul(coeffs, source("embed.weight")), source("embed.bias"));
  Var<Scalar> latent = block_stack(h, source, "encoder", cfg.encoder_blocks, graph, cfg.residual, ctx);

  Var<Scalar> conditioned = ad::replicate_last_frame(latent, total_frames);
  Var<Scalar> decoded = block_stack(conditioned, source, "decoder", cfg.decoder_blocks, graph, cfg.residual, ctx);
  Var<Scalar> decoded_seen = ad::slice_frames(decoded, 0, keep);

  Var<Scalar> spectrum = ad::add_bias(ad::matmul(decoded, source("readout.weight")), source("readout.bias"));
  Var<Scalar> prediction = ad::time_transform(spectrum, idct);
  return {prediction, latent, decoded_seen};
}

template <typename Scalar>
PreparedClip<Scalar> prepare_clip(const Normalizer& nz, const ClipAnnotation& clip, int seen_frames) {
  if (seen_frames < 1 || seen_frames > clip.frame_count()) {
    throw RangeError("tau " + std::to_string(seen_frames) + " outside [1, " +
                     std::to_string(clip.frame_count()) + "]");
  }
  const WindowTensor full = apply_normalizer(nz, window_tensor(clip, clip.frame_count()));
  PreparedClip<Scalar> p;
  p.clip_id = clip.clip_id;
  p.occurrence_frame = clip.occurrence_frame;
  p.total_frames = clip.frame_count();
  p.target = full.values().template cast<Scalar>();
  p.window = Tensor<Scalar>(seen_frames, kPlayersPerFrame,
                            p.target.topRows(static_cast<Eigen::Index>(seen_frames) * kPlayersPerFrame));
  return p;
}

template <typename Scalar>
Tensor<double> forward_full(const GiftModel<Scalar>& model, const ClipAnnotation& clip, int seen_frames) {
  if (seen_frames >= clip.frame_count()) {
    throw RangeError("tau must be smaller than the clip length");
  }
  const PreparedClip<Scalar> prepared = prepare_clip<Scalar>(model.normalizer, clip, seen_frames);
  Tape<Scalar> tape;
  ParamSource<Scalar> source = [&](const std::string& name) { return tape.constant(model.params[name].value); };
  ForwardContext ctx;
  const ForwardVars<Scalar> vars = forward_tape(tape, model, source, prepared.window, prepared.total_frames, ctx);
  const WindowTensor normalized(prepared.total_frames, kPlayersPerFrame,
                                vars.prediction.value().template cast<double>());
  return invert_normalizer(model.normalizer, normalized);
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  total += o.total;
  recon += o.recon;
  fore += o.fore;
  constant += o.constant;
  for (std::size_t j = 0; j < 6; ++j) {
    recon_terms[j] += o.recon_terms[j];
    fore_terms[j] += o.fore_terms[j];
  }
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double d) {
  total /= d;
  recon /= d;
  fore /= d;
  constant /= d;
  for (std::size_t j = 0; j < 6; ++j) {
    recon_terms[j] /= d;
    fore_terms[j] /= d;
  }
  return *this;
}

template <typename Scalar>
LossBreakdown LossVars<Scalar>::values() const {
  LossBreakdown b;
  b.total = static_cast<double>(total.value()(0, 0));
  for (std::size_t j = 0; j < 6; ++j) {
    b.recon_terms[j] = static_cast<double>(recon_terms[j].value()(0, 0));
    b.fore_terms[j] = static_cast<double>(fore_terms[j].value()(0, 0));
    b.recon += b.recon_terms[j];
    b.fore += b.fore_terms[j];
  }
  b.constant = static_cast<double>(constant.value()(0, 0));
  return b;
}

template <typename Scalar>
LossVars<Scalar> loss_tape(Var<Scalar> prediction, const MatrixX<Scalar>& target, int seen_frames,
                           const TrainConfig& cfg, const Var<Scalar>* decoder_seen,
                           const Var<Scalar>* encoder_latent) {
  const Eigen::Index rows = prediction.value().rows();
  const Eigen::Index cols = prediction.value().cols();
  if (rows != target.rows() || cols != target.cols()) throw ShapeError("loss: shape mismatch");
  if (cols != kFeatureDim) throw ShapeError("loss: prediction must have 46 channels");
  const Eigen::Index players = kPlayersPerFrame;
  const Eigen::Index seen_rows = static_cast<Eigen::Index>(seen_frames) * players;
  if (seen_rows > rows) throw RangeError("loss: tau exceeds prediction length");
  Tape<Scalar>& tape = *prediction.tape;

  LossVars<Scalar> out;
  std::vector<Var<Scalar>> terms;
  std::vector<Scalar> weights;
  for (std::size_t j = 0; j < kFeatureSlices.size(); ++j) {
    const FeatureSlice& s = kFeatureSlices[j];
    const Scalar lambda = static_cast<Scalar>(cfg.lambda_feature[j]);
    Var<Scalar> recon = ad::mse(prediction, target, {0, s.begin, seen_rows, s.size});
    Var<Scalar> fore = ad::mse(prediction, target, {seen_rows, s.begin, rows - seen_rows, s.size});
    out.recon_terms[j] = ad::weighted_sum<Scalar>({recon}, {lambda});
    out.fore_terms[j] = ad::weighted_sum<Scalar>({fore}, {lambda});
    terms.push_back(out.recon_terms[j]);
    weights.push_back(static_cast<Scalar>(cfg.lambda_recon));
    terms.push_back(out.fore_terms[j]);
    weights.push_back(static_cast<Scalar>(cfg.lambda_fore));
  }
  if (cfg.use_const_loss && decoder_seen != nullptr && encoder_latent != nullptr) {
    out.constant = ad::mse(*decoder_seen, *encoder_latent);
  } else {
    out.constant = tape.constant(MatrixX<Scalar>::Zero(1, 1));
  }
  terms.push_back(out.constant);
  weights.push_back(static_cast<Scalar>(cfg.lambda_const));
  out.total = ad::weighted_sum(terms, weights);
  return out;
}

LossBreakdown compute_loss(const Tensor<double>& prediction, const Tensor<double>& target, int seen_frames,
                           const TrainConfig& cfg) {
  if (prediction.frames() != target.frames() || prediction.players() != target.players() ||
      prediction.channels() != target.channels()) {
    throw ShapeError("compute_loss: prediction and target shapes differ");
  }
  Tape<double> tape;
  Var<double> pred = tape.constant(prediction.values(), prediction.frames());
  return loss_tape(pred, target.values(), seen_frames, cfg).values();
}

OccurrencePrediction occurrence_from_prediction(const Tensor<double>& prediction, int seen_frames,
                                                double threshold) {
  const int total = prediction.frames();
  if (seen_frames < 1 || seen_frames >= total) throw RangeError("tau must lie in [1, T)");
  OccurrencePrediction out;
  out.peak_score = -std::numeric_limits<double>::infinity();
  int argmax = seen_frames + 1;
  for (int frame = seen_frames + 1; frame <= total; ++frame) {
    double score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kOffensePlayers; ++i) score = std::max(score, prediction(frame - 1, i, kRoleChannel));
    if (!out.crossed_threshold && score >= threshold) {
      out.crossed_threshold = true;
      out.point_estimate = frame;
    }
    if (score > out.peak_score) {
      out.peak_score = score;
      argmax = frame;
    }
  }
  if (!out.crossed_threshold) out.point_estimate = argmax;
  return out;
}

template <typename Scalar>
OccurrencePrediction forecast_occurrence(const GiftModel<Scalar>& model, const ClipAnnotation& clip,
                                         int seen_frames, double threshold) {
  return occurrence_from_prediction(forward_full(model, clip, seen_frames), seen_frames, threshold);
}

#define GIFT_INSTANTIATE(Scalar)                                                                          \
  template GiftModel<Scalar> model_init<Scalar>(const TrainConfig&, std::uint64_t, const Normalizer&);   \
  template ForwardVars<Scalar> forward_tape<Scalar>(Tape<Scalar>&, const GiftModel<Scalar>&,              \
                                                    const ParamSource<Scalar>&, const Tensor<Scalar>&,   \
                                                    int, ForwardContext&);                                \
  template Tensor<double> forward_full<Scalar>(const GiftModel<Scalar>&, const ClipAnnotation&, int);     \
  template struct LossVars<Scalar>;                                                                       \
  template LossVars<Scalar> loss_tape<Scalar>(Var<Scalar>, const MatrixX<Scalar>&, int, const TrainConfig&, \
                                              const Var<Scalar>*, const Var<Scalar>*);                    \
  template OccurrencePrediction forecast_occurrence<Scalar>(const GiftModel<Scalar>&,                     \
                                                            const ClipAnnotation&, int, double);          \
  template PreparedClip<Scalar> prepare_clip<Scalar>(const Normalizer&, const ClipAnnotation&, int);

GIFT_INSTANTIATE(float)
GIFT_INSTANTIATE(double)

#undef GIFT_INSTANTIATE

}  // namespace gift
