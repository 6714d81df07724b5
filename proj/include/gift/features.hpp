#ifndef GIFT_FEATURES_HPP
#define GIFT_FEATURES_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string_view>

#include "gift/annotation.hpp"
#include "gift/tensor.hpp"

namespace gift {

inline constexpr int kFeatureDim = 46;

/// Contiguous channel range of one per-player attribute.
struct FeatureSlice {
  std::string_view name;
  int begin;
  int size;
};

/// Player vector layout [bbox, pose, headpose, gaze, velocity, role].
inline constexpr std::array<FeatureSlice, 6> kFeatureSlices = {{
    {"bbox", 0, 4},
    {"pose", 4, 34},
    {"headpose", 38, 3},
    {"gaze", 41, 2},
    {"velocity", 43, 2},
    {"role", 45, 1},
}};
inline constexpr int kRoleChannel = 45;

using PlayerVector = Eigen::Matrix<double, kFeatureDim, 1>;
using FrameMatrix = Eigen::Matrix<double, kPlayersPerFrame, kFeatureDim, Eigen::RowMajor>;
using WindowTensor = Tensor<double>;

/// 1 for the shot-executing roles, 0 otherwise.
int binarize_role(Role role);

PlayerVector player_vector(const PlayerFrameAnnotation& annotation);

/// Rows ordered by player_id regardless of input order.
FrameMatrix frame_matrix(const FrameAnnotation& frame);

/// Stacks frames 1..seen; throws RangeError unless 1 <= seen <= T.
WindowTensor window_tensor(const ClipAnnotation& clip, int seen);

/// Per-channel affine standardization; the role channel is left untouched.
struct Normalizer {
  static constexpr double kStdFloor = 1e-8;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kFeatureDim);
  Eigen::VectorXd stddev = Eigen::VectorXd::Ones(kFeatureDim);

  static Normalizer identity() { return {}; }
  bool operator==(const Normalizer&) const = default;
};

Normalizer fit_normalizer(std::span<const WindowTensor> windows);

WindowTensor apply_normalizer(const Normalizer& nz, const WindowTensor& w);
WindowTensor invert_normalizer(const Normalizer& nz, const WindowTensor& w);

/// Orthonormal DCT-II basis: row k holds a_k cos(pi (2t + 1) k / 2L).
template <typename Scalar>
MatrixX<Scalar> dct_matrix(int length) {
  MatrixX<Scalar> basis(length, length);
  const double scale0 = std::sqrt(1.0 / length);
  const double scale = std::sqrt(2.0 / length);
  for (int k = 0; k < length; ++k) {
    for (int t = 0; t < length; ++t) {
      const double angle = std::numbers::pi * (2.0 * t + 1.0) * k / (2.0 * length);
      basis(k, t) = static_cast<Scalar>((k == 0 ? scale0 : scale) * std::cos(angle));
    }
  }
  return basis;
}

/// out(t', i, :) = sum_t transform(t', t) * in(t, i, :).
template <typename Scalar>
Tensor<Scalar> apply_time_transform(const MatrixX<Scalar>& transform, const Tensor<Scalar>& in) {
  if (transform.cols() != in.frames()) throw ShapeError("time transform does not match frame count");
  const int out_frames = static_cast<int>(transform.rows());
  const int players = in.players();
  Tensor<Scalar> out(out_frames, players, in.channels());
  for (int c = 0; c < in.channels(); ++c) {
    Eigen::Map<const MatrixX<Scalar>> src(in.values().col(c).data(), players, in.frames());
    Eigen::Map<MatrixX<Scalar>> dst(out.values().col(c).data(), players, out_frames);
    dst.noalias() = src * transform.transpose();
  }
  return out;
}

/// Orthonormal DCT-II along the time axis of every (player, channel) series.
/// Coefficients with index >= keep are zeroed when keep is in [1, L).
template <typename Scalar>
Tensor<Scalar> dct_time(const Tensor<Scalar>& series, int keep = 0) {
  Tensor<Scalar> coeffs = apply_time_transform(dct_matrix<Scalar>(series.frames()), series);
  if (keep > 0 && keep < coeffs.frames()) {
    const auto players = static_cast<Eigen::Index>(coeffs.players());
    coeffs.values().bottomRows((coeffs.frames() - keep) * players).setZero();
  }
  return coeffs;
}

template <typename Scalar>
Tensor<Scalar> idct_time(const Tensor<Scalar>& coeffs) {
  return apply_time_transform<Scalar>(dct_matrix<Scalar>(coeffs.frames()).transpose(), coeffs);
}

}  // namespace gift

#endif  // GIFT_FEATURES_HPP
