#include "gift/stgcn.hpp"

namespace gift {

PlayerGraph PlayerGraph::from_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() < 1) {
    throw ShapeError("adjacency must be square and non-empty");
  }
  if (!adjacency.isApprox(adjacency.transpose(), 0.0)) throw InvariantError("adjacency must be symmetric");
  for (Eigen::Index i = 0; i < adjacency.size(); ++i) {
    const double a = adjacency.data()[i];
    if (a != 0.0 && a != 1.0) throw InvariantError("adjacency must be binary");
  }
  Eigen::MatrixXd with_loops = adjacency;
  with_loops.diagonal().setOnes();
  const Eigen::VectorXd inv_sqrt_degree = with_loops.rowwise().sum().cwiseSqrt().cwiseInverse();
  PlayerGraph g;
  g.normalized = inv_sqrt_degree.asDiagonal() * with_loops * inv_sqrt_degree.asDiagonal();
  return g;
}

PlayerGraph PlayerGraph::fully_connected(int players) {
  if (players < 1) throw RangeError("graph needs at least one player");
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(players, players);
  a.diagonal().setZero();
  return from_adjacency(a);
}

PlayerGraph PlayerGraph::team_partitioned(int players) {
  if (players < 2 || players % 2 != 0) throw RangeError("team graph needs an even player count");
  const int half = players / 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(players, players);
  a.topLeftCorner(half, half).setOnes();
  a.bottomRightCorner(half, half).setOnes();
  a.diagonal().setZero();
  return from_adjacency(a);
}

PlayerGraph normalized_adjacency(int players) { return PlayerGraph::fully_connected(players); }

std::string_view to_string(ResidualMode mode) {
  return mode == ResidualMode::kTemporal ? "temporal" : "input";
}

ResidualMode parse_residual_mode(std::string_view text) {
  if (text == "temporal") return ResidualMode::kTemporal;
  if (text == "input") return ResidualMode::kInput;
  throw ConfigError("residual mode must be 'temporal' or 'input', got '" + std::string(text) + "'");
}

}  // namespace gift
