#ifndef GIFT_STGCN_HPP
#define GIFT_STGCN_HPP

#include <functional>
#include <string>
#include <string_view>

#include "gift/autodiff.hpp"

namespace gift {

/// Symmetrically normalized player graph D^-1/2 (A + I) D^-1/2.
struct PlayerGraph {
  Eigen::MatrixXd normalized;

  int players() const { return static_cast<int>(normalized.rows()); }

  /// Every player connected to every other, plus self-loops.
  static PlayerGraph fully_connected(int players);
  /// Offense (first half) and defense (second half) as two cliques.
  static PlayerGraph team_partitioned(int players);
  /// From a symmetric 0/1 adjacency without self-loops.
  static PlayerGraph from_adjacency(const Eigen::MatrixXd& adjacency);

  bool operator==(const PlayerGraph&) const = default;
};

/// Fully connected normalized adjacency for n players.
PlayerGraph normalized_adjacency(int players);

/// How the block's residual branch is fed.
enum class ResidualMode {
  kTemporal,  // ReLU(F_t + Res(F_t)), the block equation taken literally
  kInput,     // ReLU(F_t + Res(X)), conventional skip from the block input
};

std::string_view to_string(ResidualMode mode);
ResidualMode parse_residual_mode(std::string_view text);

/// Training-time switches threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
};

/// Parameter handles of one STGCN block on a tape.
template <typename Scalar>
struct StgcnBlockParams {
  Var<Scalar> gcn_weight;
  Var<Scalar> gcn_bias;
  Var<Scalar> conv_kernel;  // (3 * c') x c'
  Var<Scalar> conv_bias;
  Var<Scalar> res_weight;
};

/// Names a block's parameters under `prefix` (e.g. "encoder.0").
struct BlockNames {
  std::string gcn_weight, gcn_bias, conv_kernel, conv_bias, res_weight;
  static BlockNames under(const std::string& prefix) {
    return {prefix + ".gcn.weight", prefix + ".gcn.bias", prefix + ".tconv.weight",
            prefix + ".tconv.bias", prefix + ".res.weight"};
  }
};

/// Glorot-uniform weights, zero biases.
template <typename Scalar>
MatrixX<Scalar> glorot_uniform(int fan_in, int fan_out, int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  MatrixX<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return m;
}

template <typename Scalar>
void add_block_parameters(ParameterSet<Scalar>& params, const std::string& prefix, int in_channels,
                          int out_channels, ResidualMode mode, Rng& rng) {
  const BlockNames names = BlockNames::under(prefix);
  params.add(names.gcn_weight, glorot_uniform<Scalar>(in_channels, out_channels, in_channels, out_channels, rng));
  params.add(names.gcn_bias, MatrixX<Scalar>::Zero(1, out_channels));
  params.add(names.conv_kernel,
             glorot_uniform<Scalar>(3 * out_channels, out_channels, 3 * out_channels, out_channels, rng));
  params.add(names.conv_bias, MatrixX<Scalar>::Zero(1, out_channels));
  const int res_in = mode == ResidualMode::kTemporal ? out_channels : in_channels;
  MatrixX<Scalar> res = glorot_uniform<Scalar>(res_in, out_channels, res_in, out_channels, rng);
  // A skip from the block input starts as the identity so deep stacks pass
  // their input through at initialization.
  if (mode == ResidualMode::kInput && res_in == out_channels) res.setIdentity();
  params.add(names.res_weight, std::move(res));
}

template <typename Scalar>
using ParamSource = std::function<Var<Scalar>(const std::string&)>;

template <typename Scalar>
StgcnBlockParams<Scalar> block_params(const ParamSource<Scalar>& source, const std::string& prefix) {
  const BlockNames names = BlockNames::under(prefix);
  return {source(names.gcn_weight), source(names.gcn_bias), source(names.conv_kernel),
          source(names.conv_bias), source(names.res_weight)};
}

/// graph * X * W (+ bias), applied at every time step.
template <typename Scalar>
Var<Scalar> gcn_layer(Var<Scalar> x, const MatrixX<Scalar>& graph, Var<Scalar> weight,
                      const Var<Scalar>* bias = nullptr) {
  // graph * (X W) == (graph X) W; the right-hand product is the cheaper one
  // whenever the layer does not widen the channels.
  Var<Scalar> h = ad::graph_aggregate(ad::matmul(x, weight), graph);
  return bias != nullptr ? ad::add_bias(h, *bias) : h;
}

/// Width-3 temporal convolution with zero padding (+ bias).
template <typename Scalar>
Var<Scalar> temporal_conv(Var<Scalar> x, Var<Scalar> kernel, const Var<Scalar>* bias = nullptr) {
  Var<Scalar> h = ad::temporal_conv(x, kernel);
  return bias != nullptr ? ad::add_bias(h, *bias) : h;
}

/// Spatial GCN, temporal convolution, residual projection and ReLU, with
/// dropout after the activation in training mode.
template <typename Scalar>
Var<Scalar> stgcn_block(Var<Scalar> x, const StgcnBlockParams<Scalar>& p, const MatrixX<Scalar>& graph,
                        ResidualMode mode, ForwardContext& ctx) {
  Var<Scalar> spatial = gcn_layer(x, graph, p.gcn_weight, &p.gcn_bias);
  Var<Scalar> temporal = temporal_conv(spatial, p.conv_kernel, &p.conv_bias);
  Var<Scalar> residual = ad::matmul(mode == ResidualMode::kTemporal ? temporal : x, p.res_weight);
  Var<Scalar> out = ad::relu(ad::add(temporal, residual));
  if (ctx.training && ctx.dropout > 0.0) {
    if (ctx.rng == nullptr) throw ConfigError("training-mode dropout needs a generator");
    out = ad::dropout(out, ctx.dropout, *ctx.rng);
  }
  return out;
}

/// Applies the named blocks "<prefix>.0" .. "<prefix>.<count-1>" in order.
template <typename Scalar>
Var<Scalar> block_stack(Var<Scalar> x, const ParamSource<Scalar>& source, const std::string& prefix,
                        int count, const MatrixX<Scalar>& graph, ResidualMode mode, ForwardContext& ctx) {
  for (int b = 0; b < count; ++b) {
    x = stgcn_block(x, block_params(source, prefix + "." + std::to_string(b)), graph, mode, ctx);
  }
  return x;
}

/// Central-difference gradient check.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Elements whose +/-h evaluation changed a ReLU activation pattern; they
  /// are excluded from max_rel_error and the caller should resample.
  std::size_t kink_crossings = 0;
  std::string worst_parameter;
};

/// `loss` must build a scalar on the given tape from parameters obtained
/// through the source, and be deterministic.
template <typename Scalar>
GradCheckResult gradient_check(ParameterSet<Scalar>& params,
                               const std::function<Var<Scalar>(Tape<Scalar>&, const ParamSource<Scalar>&)>& loss,
                               double step = 1e-5) {
  params.zero_grad();
  std::uint64_t base_signature = 0;
  {
    Tape<Scalar> tape;
    ParamSource<Scalar> source = [&](const std::string& name) { return tape.parameter(params[name]); };
    Var<Scalar> root = loss(tape, source);
    base_signature = tape.kink_signature();
    tape.backward(root);
  }
  auto evaluate = [&](std::uint64_t& signature) {
    Tape<Scalar> tape;
    ParamSource<Scalar> source = [&](const std::string& name) { return tape.constant(params[name].value); };
    Var<Scalar> root = loss(tape, source);
    signature = tape.kink_signature();
    return static_cast<double>(root.value()(0, 0));
  };

  GradCheckResult result;
  for (auto& p : params) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      Scalar& theta = p.value.data()[i];
      const Scalar saved = theta;
      std::uint64_t sig_plus = 0;
      std::uint64_t sig_minus = 0;
      theta = saved + static_cast<Scalar>(step);
      const double f_plus = evaluate(sig_plus);
      theta = saved - static_cast<Scalar>(step);
      const double f_minus = evaluate(sig_minus);
      theta = saved;
      if (sig_plus != base_signature || sig_minus != base_signature) {
        ++result.kink_crossings;
        continue;
      }
      const double fd = (f_plus - f_minus) / (2.0 * step);
      const double analytic = static_cast<double>(p.grad.data()[i]);
      const double rel = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace gift

#endif  // GIFT_STGCN_HPP
