#include "gift/features.hpp"

#include <algorithm>
#include <string>

#include "gift/errors.hpp"

namespace gift {

int binarize_role(Role role) {
  switch (role) {
    case Role::kShooting:
    case Role::kLayingUp:
    case Role::kDunking:
      return 1;
    case Role::kStanding:
    case Role::kRunning:
    case Role::kDefending:
    case Role::kHolding:
      return 0;
  }
  return 0;
}

PlayerVector player_vector(const PlayerFrameAnnotation& a) {
  if (!a.velocity) {
    throw MissingVelocity("player " + std::to_string(a.player_id) +
                          " has no velocity; run derive_velocities first");
  }
  PlayerVector v;
  v << a.bbox.x, a.bbox.y, a.bbox.h, a.bbox.w;
  for (int i = 0; i < kPoseValues; ++i) v(4 + i) = a.pose[static_cast<std::size_t>(i)];
  v(38) = a.headpose.pitch;
  v(39) = a.headpose.yaw;
  v(40) = a.headpose.roll;
  v(41) = a.gaze.pitch;
  v(42) = a.gaze.yaw;
  v(43) = a.velocity->vx;
  v(44) = a.velocity->vy;
  v(45) = binarize_role(a.role);
  return v;
}

FrameMatrix frame_matrix(const FrameAnnotation& frame) {
  if (frame.players.size() != kPlayersPerFrame) {
    throw ShapeError("frame " + std::to_string(frame.frame_id) + " does not hold 10 players");
  }
  FrameMatrix m;
  for (const auto& p : frame.players) {
    if (p.player_id < 1 || p.player_id > kPlayersPerFrame) {
      throw RangeError("player_id " + std::to_string(p.player_id) + " outside [1, 10]");
    }
    m.row(p.player_id - 1) = player_vector(p).transpose();
  }
  return m;
}

WindowTensor window_tensor(const ClipAnnotation& clip, int seen) {
  if (seen < 1 || seen > clip.frame_count()) {
    throw RangeError("seen window " + std::to_string(seen) + " outside [1, " +
                     std::to_string(clip.frame_count()) + "]");
  }
  WindowTensor w(seen, kPlayersPerFrame, kFeatureDim);
  for (int k = 0; k < seen; ++k) w.frame(k) = frame_matrix(clip.frames[static_cast<std::size_t>(k)]);
  return w;
}

Normalizer fit_normalizer(std::span<const WindowTensor> windows) {
  if (windows.empty()) throw EmptyInput("fit_normalizer needs at least one window");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kFeatureDim);
  double count = 0.0;
  for (const auto& w : windows) {
    if (w.channels() != kFeatureDim) throw ShapeError("window channel count must be 46");
    sum += w.values().colwise().sum().transpose();
    count += static_cast<double>(w.values().rows());
  }
  Normalizer nz;
  nz.mean = sum / count;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kFeatureDim);
  for (const auto& w : windows) {
    sq += (w.values().rowwise() - nz.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  nz.stddev = (sq / count).cwiseSqrt().cwiseMax(Normalizer::kStdFloor);
  nz.mean(kRoleChannel) = 0.0;
  nz.stddev(kRoleChannel) = 1.0;
  return nz;
}

WindowTensor apply_normalizer(const Normalizer& nz, const WindowTensor& w) {
  if (w.channels() != nz.mean.size()) throw ShapeError("normalizer channel count mismatch");
  Eigen::MatrixXd out =
      (w.values().rowwise() - nz.mean.transpose()).array().rowwise() / nz.stddev.transpose().array();
  return WindowTensor(w.frames(), w.players(), std::move(out));
}

WindowTensor invert_normalizer(const Normalizer& nz, const WindowTensor& w) {
  if (w.channels() != nz.mean.size()) throw ShapeError("normalizer channel count mismatch");
  Eigen::MatrixXd out =
      (w.values().array().rowwise() * nz.stddev.transpose().array()).rowwise() + nz.mean.transpose().array();
  return WindowTensor(w.frames(), w.players(), std::move(out));
}

}  // namespace gift
