#include "gift/gradcheck.hpp"

#include "gift/features.hpp"
#include "gift/model.hpp"
#include "gift/synth.hpp"

namespace gift {

namespace {

using Mat = MatrixX<double>;
using Source = ParamSource<double>;
using LossFn = std::function<Var<double>(Tape<double>&, const Source&)>;

constexpr int kFrames = 6;
constexpr int kPlayers = kPlayersPerFrame;

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
  }
  return m;
}

/// Draws fresh parameters until no finite-difference probe crosses a kink.
GradCheckCase run_case(const std::string& name, std::uint64_t seed,
                       const std::function<ParameterSet<double>(Rng&)>& make_params,
                       const std::function<LossFn(Rng&)>& make_loss) {
  GradCheckCase out{name, {}, 0};
  for (int attempt = 0; attempt < 20; ++attempt) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(attempt));
    ParameterSet<double> params = make_params(rng);
    const LossFn loss = make_loss(rng);
    out.result = gradient_check<double>(params, loss);
    out.attempts = attempt + 1;
    if (out.result.kink_crossings == 0) break;
  }
  return out;
}

Var<double> input_of(Tape<double>& tape, const Mat& x) { return tape.constant(x, kFrames); }

std::vector<ClipAnnotation> short_clips(std::uint64_t seed, int count, int frames) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_clips = count;
  std::vector<ClipAnnotation> out;
  for (int i = 0; i < count; ++i) {
    ClipAnnotation c = generate_clip(cfg, i);
    c.frames.resize(static_cast<std::size_t>(frames));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed, bool include_full_model) {
  std::vector<GradCheckCase> cases;
  const int c_in = 5;
  const int c_out = 4;
  const Mat graph = PlayerGraph::team_partitioned(kPlayers).normalized;

  auto weights = [&](std::initializer_list<std::pair<const char*, std::pair<int, int>>> shapes) {
    return [shapes](Rng& rng) {
      ParameterSet<double> p;
      for (const auto& [name, shape] : shapes) p.add(name, random_matrix(shape.first, shape.second, rng, 0.5));
      return p;
    };
  };
  auto against_target = [](Var<double> y, const Mat& target) { return ad::mse(y, target, {0, 0, target.rows(), target.cols()}); };

  cases.push_back(run_case("linear", seed, weights({{"w", {c_in, c_out}}, {"b", {1, c_out}}}), [&](Rng& rng) {
    const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat t = random_matrix(kFrames * kPlayers, c_out, rng);
    return LossFn([=](Tape<double>& tape, const Source& s) {
      return against_target(ad::add_bias(ad::matmul(input_of(tape, x), s("w")), s("b")), t);
    });
  }));

  cases.push_back(run_case("gcn", seed + 1, weights({{"w", {c_in, c_out}}, {"b", {1, c_out}}}), [&](Rng& rng) {
    const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat t = random_matrix(kFrames * kPlayers, c_out, rng);
    return LossFn([=](Tape<double>& tape, const Source& s) {
      Var<double> b = s("b");
      return against_target(gcn_layer(input_of(tape, x), graph, s("w"), &b), t);
    });
  }));

  cases.push_back(
      run_case("temporal_conv", seed + 2, weights({{"k", {3 * c_in, c_out}}, {"b", {1, c_out}}}), [&](Rng& rng) {
        const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
        const Mat t = random_matrix(kFrames * kPlayers, c_out, rng);
        return LossFn([=](Tape<double>& tape, const Source& s) {
          Var<double> b = s("b");
          return against_target(temporal_conv(input_of(tape, x), s("k"), &b), t);
        });
      }));

  cases.push_back(run_case("relu", seed + 3, weights({{"w", {c_in, c_out}}}), [&](Rng& rng) {
    const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat t = random_matrix(kFrames * kPlayers, c_out, rng);
    return LossFn([=](Tape<double>& tape, const Source& s) {
      return against_target(ad::relu(ad::matmul(input_of(tape, x), s("w"))), t);
    });
  }));

  cases.push_back(run_case("dct_time", seed + 4, weights({{"w", {c_in, c_out}}}), [&](Rng& rng) {
    const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat t = random_matrix(12 * kPlayers, c_out, rng);
    const Mat dct = dct_matrix<double>(kFrames);
    const Mat idct = dct_matrix<double>(12).transpose();
    return LossFn([=](Tape<double>& tape, const Source& s) {
      Var<double> h = ad::matmul(ad::time_transform(input_of(tape, x), dct), s("w"));
      return against_target(ad::time_transform(ad::replicate_last_frame(h, 12), idct), t);
    });
  }));

  for (ResidualMode mode : {ResidualMode::kTemporal, ResidualMode::kInput}) {
    const std::string name = std::string("stgcn_block.") + std::string(to_string(mode));
    cases.push_back(run_case(
        name, seed + 5 + static_cast<std::uint64_t>(mode),
        [&](Rng& rng) {
          ParameterSet<double> p;
          add_block_parameters(p, "blk", c_in, c_out, mode, rng);
          for (auto& q : p) q.value += random_matrix(q.value.rows(), q.value.cols(), rng, 0.1);
          return p;
        },
        [&](Rng& rng) {
          const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
          const Mat t = random_matrix(kFrames * kPlayers, c_out, rng);
          return LossFn([=](Tape<double>& tape, const Source& s) {
            ForwardContext ctx;
            return against_target(stgcn_block(input_of(tape, x), block_params(s, "blk"), graph, mode, ctx), t);
          });
        }));
  }

  cases.push_back(run_case("slice_mse", seed + 7, weights({{"w", {c_in, c_out}}, {"v", {c_in, c_out}}}), [&](Rng& rng) {
    const Mat x = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat y = random_matrix(kFrames * kPlayers, c_in, rng);
    const Mat t = random_matrix(3 * kPlayers, c_out, rng);
    return LossFn([=](Tape<double>& tape, const Source& s) {
      Var<double> a = ad::slice_frames(ad::matmul(input_of(tape, x), s("w")), 1, 3);
      Var<double> b = ad::slice_frames(ad::matmul(input_of(tape, y), s("v")), 2, 3);
      return ad::weighted_sum<double>({ad::mse(a, b), ad::mse(b, t, {0, 1, 30, 2})}, {0.7, 1.3});
    });
  }));

  if (include_full_model) {
    TrainConfig cfg;
    cfg.embed_dim = 16;
    cfg.seen_frames = 5;
    cfg.dropout = 0.0;
    const auto clips = short_clips(seed, 2, 12);
    std::vector<WindowTensor> windows;
    for (const auto& c : clips) windows.push_back(window_tensor(c, cfg.seen_frames));
    const Normalizer nz = fit_normalizer(windows);
    std::vector<PreparedClip<double>> prepared;
    for (const auto& c : clips) prepared.push_back(prepare_clip<double>(nz, c, cfg.seen_frames));

    GiftModel<double> model = model_init<double>(cfg, seed, nz);
    cases.push_back(run_case(
        "gift_loss", seed + 8,
        [&](Rng& rng) {
          GiftModel<double> m = model_init<double>(cfg, rng.uniform_int(0, 1 << 30), nz);
          for (auto& q : m.params) q.value += random_matrix(q.value.rows(), q.value.cols(), rng, 0.05);
          model.params = m.params;
          return m.params;
        },
        [&](Rng&) {
          return LossFn([&](Tape<double>& tape, const Source& s) {
            std::vector<Var<double>> totals;
            for (const auto& p : prepared) {
              ForwardContext ctx;
              const auto vars = forward_tape(tape, model, s, p.window, p.total_frames, ctx);
              totals.push_back(
                  loss_tape(vars.prediction, p.target, cfg.seen_frames, cfg, &vars.decoder_seen, &vars.encoder_latent)
                      .total);
            }
            return ad::weighted_sum<double>(totals, std::vector<double>(totals.size(), 0.5));
          });
        }));
  }
  return cases;
}

}  // namespace gift
