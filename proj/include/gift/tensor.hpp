#ifndef GIFT_TENSOR_HPP
#define GIFT_TENSOR_HPP

#include <Eigen/Dense>
#include <string>

#include "gift/errors.hpp"

namespace gift {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Dense [frames x players x channels] block.
///
/// Stored as a (frames * players) x channels matrix whose row t * players + i
/// holds player i at time step t. Every sequence op in the library works on
/// this layout so per-frame linear maps become one matrix product.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int frames, int players, int channels)
      : frames_(frames), players_(players), values_(MatrixX<Scalar>::Zero(frames * players, channels)) {}
  Tensor(int frames, int players, MatrixX<Scalar> values)
      : frames_(frames), players_(players), values_(std::move(values)) {
    if (values_.rows() != static_cast<Eigen::Index>(frames) * players) {
      throw ShapeError("tensor rows " + std::to_string(values_.rows()) + " != frames * players");
    }
  }

  int frames() const { return frames_; }
  int players() const { return players_; }
  int channels() const { return static_cast<int>(values_.cols()); }

  const MatrixX<Scalar>& values() const { return values_; }
  MatrixX<Scalar>& values() { return values_; }

  Scalar& operator()(int frame, int player, int channel) {
    return values_(static_cast<Eigen::Index>(frame) * players_ + player, channel);
  }
  Scalar operator()(int frame, int player, int channel) const {
    return values_(static_cast<Eigen::Index>(frame) * players_ + player, channel);
  }

  /// players x channels block of one time step.
  auto frame(int t) { return values_.middleRows(static_cast<Eigen::Index>(t) * players_, players_); }
  auto frame(int t) const {
    return values_.middleRows(static_cast<Eigen::Index>(t) * players_, players_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(frames_, players_, values_.template cast<Other>());
  }

  bool operator==(const Tensor& other) const {
    return frames_ == other.frames_ && players_ == other.players_ &&
           values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
           values_ == other.values_;
  }

 private:
  int frames_ = 0;
  int players_ = 0;
  MatrixX<Scalar> values_;
};

}  // namespace gift

#endif  // GIFT_TENSOR_HPP
