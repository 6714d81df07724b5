#ifndef GIFT_AUTODIFF_HPP
#define GIFT_AUTODIFF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gift/errors.hpp"
#include "gift/rng.hpp"
#include "gift/tensor.hpp"

namespace gift {

/// Learnable matrix with its gradient accumulator.
template <typename Scalar>
struct Parameter {
  std::string name;
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
};

/// Ordered, name-addressable parameter collection. Insertion order is the
/// iteration order everywhere (optimizer state, checkpoints, gradient checks).
template <typename Scalar>
class ParameterSet {
 public:
  Parameter<Scalar>& add(const std::string& name, MatrixX<Scalar> value) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    MatrixX<Scalar> grad = MatrixX<Scalar>::Zero(value.rows(), value.cols());
    params_.push_back({name, std::move(value), std::move(grad)});
    return params_.back();
  }

  Parameter<Scalar>& operator[](const std::string& name) { return params_.at(lookup(name)); }
  const Parameter<Scalar>& operator[](const std::string& name) const { return params_.at(lookup(name)); }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  bool operator==(const ParameterSet& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& a = params_[i];
      const auto& b = other.params_[i];
      if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
          a.value != b.value) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  // Reallocation is fine: tapes refer to parameters by pointer only for the
  // lifetime of one forward/backward pass, during which no parameter is added.
  std::vector<Parameter<Scalar>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename Scalar>
class Tape;

/// Handle to a node on a Tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const MatrixX<Scalar>& value() const;
  int frames() const;
};

/// Reverse-mode recording of one computation.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const MatrixX<Scalar>& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(MatrixX<Scalar> value, int frames = 0) {
    return push(std::move(value), frames, false, nullptr, nullptr);
  }

  Var<Scalar> parameter(Parameter<Scalar>& param) {
    return push(param.value, 0, true, nullptr, &param);
  }

  /// Records an op output. `backward` receives the output gradient.
  Var<Scalar> emit(MatrixX<Scalar> value, int frames, std::initializer_list<Var<Scalar>> inputs,
                   Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
    return push(std::move(value), frames, needs, needs ? std::move(backward) : nullptr, nullptr);
  }

  const MatrixX<Scalar>& value(int id) const { return nodes_.at(id).value; }
  int frames(int id) const { return nodes_.at(id).frames; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }

  /// Adds `delta` into the gradient of node `id` when it is differentiable.
  template <typename Expr>
  void accumulate(int id, const Expr& delta) {
    Node& n = nodes_.at(id);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad.noalias() = delta;
    } else {
      n.grad.noalias() += delta;
    }
  }

  /// Backpropagates from a 1x1 root; parameter gradients are accumulated
  /// into their Parameter::grad.
  void backward(Var<Scalar> root) {
    Node& r = nodes_.at(root.id);
    if (r.value.size() != 1) throw ShapeError("backward root must be a scalar");
    r.grad = MatrixX<Scalar>::Ones(1, 1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.param != nullptr) {
        n.param->grad += n.grad;
      } else if (n.backward) {
        MatrixX<Scalar> g = std::move(n.grad);
        n.backward(*this, g);
      }
    }
  }

  /// Running hash of every ReLU activation pattern recorded so far.
  std::uint64_t kink_signature() const { return kink_signature_; }
  void mix_kink_signature(std::uint64_t bits) {
    kink_signature_ = Rng::splitmix64(kink_signature_ ^ bits);
  }

  /// Smallest |pre-activation| seen by any ReLU on this tape.
  Scalar min_kink_distance() const { return min_kink_distance_; }
  void observe_kink_distance(Scalar d) { min_kink_distance_ = std::min(min_kink_distance_, d); }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    MatrixX<Scalar> value;
    MatrixX<Scalar> grad;
    int frames = 0;
    bool requires_grad = false;
    Backward backward;
    Parameter<Scalar>* param = nullptr;
  };

  Var<Scalar> push(MatrixX<Scalar> value, int frames, bool requires_grad, Backward backward,
                   Parameter<Scalar>* param) {
    // x * 0 is NaN exactly for non-finite x; the sum vectorizes where allFinite() does not.
    if (!std::isfinite((value.array() * Scalar(0)).sum())) {
      throw NonFinite("non-finite value produced on tape node " + std::to_string(nodes_.size()));
    }
    nodes_.push_back({std::move(value), {}, frames, requires_grad, std::move(backward), param});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  std::deque<Node> nodes_;  // stable addresses: value() references survive later pushes
  std::uint64_t kink_signature_ = 0;
  Scalar min_kink_distance_ = std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar>
const MatrixX<Scalar>& Var<Scalar>::value() const {
  return tape->value(id);
}

template <typename Scalar>
int Var<Scalar>::frames() const {
  return tape->frames(id);
}

// --- ops -------------------------------------------------------------------
//
// Sequence values use the Tensor layout: (frames * players) x channels with
// frame-major rows. `frames` is carried on the node; players = rows / frames.

namespace ad {

namespace detail {

template <typename Scalar>
int players_of(const Var<Scalar>& x) {
  const int f = x.frames();
  if (f <= 0) throw ShapeError("op requires a sequence-valued input");
  return static_cast<int>(x.value().rows()) / f;
}

}  // namespace detail

/// a * b
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.value().cols() != b.value().rows()) {
    throw ShapeError("matmul: " + std::to_string(a.value().cols()) + " != " +
                     std::to_string(b.value().rows()));
  }
  MatrixX<Scalar> out = a.value() * b.value();
  return a.tape->emit(std::move(out), a.frames(), {a, b},
                      [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
                        if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
                      });
}

/// Adds a 1 x c row to every row of x.
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias) {
  if (bias.value().rows() != 1 || bias.value().cols() != x.value().cols()) {
    throw ShapeError("add_bias: bias must be 1 x channels");
  }
  MatrixX<Scalar> out = x.value().rowwise() + bias.value().row(0);
  return x.tape->emit(std::move(out), x.frames(), {x, bias},
                      [x, bias](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        t.accumulate(x.id, g);
                        if (t.requires_grad(bias.id)) t.accumulate(bias.id, g.colwise().sum());
                      });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
    throw ShapeError("add: shape mismatch");
  }
  MatrixX<Scalar> out = a.value() + b.value();
  return a.tape->emit(std::move(out), a.frames(), {a, b},
                      [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        t.accumulate(a.id, g);
                        t.accumulate(b.id, g);
                      });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  const MatrixX<Scalar>& v = x.value();
  MatrixX<Scalar> out = v.cwiseMax(Scalar(0));
  std::uint64_t bits = 0x51ed2701u;
  Scalar nearest = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar z = v.data()[i];
    bits = bits * 1099511628211ULL + (z > Scalar(0) ? 1u : 2u);
    nearest = std::min(nearest, std::abs(z));
  }
  x.tape->mix_kink_signature(bits);
  x.tape->observe_kink_distance(nearest);
  return x.tape->emit(std::move(out), x.frames(), {x},
                      [x](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        t.accumulate(x.id, (t.value(x.id).array() > Scalar(0)).select(g, Scalar(0)));
                      });
}

/// Inverted dropout with a caller-supplied generator.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  // One engine draw seeds a splitmix64 counter stream; each 64-bit output
  // gives two 32-bit keep/drop decisions.
  const auto cut = static_cast<std::uint64_t>(std::ldexp(rate, 32));
  const std::uint64_t base = rng.next();
  MatrixX<Scalar> mask(x.value().rows(), x.value().cols());
  Scalar* m = mask.data();
  const Eigen::Index n = mask.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const std::uint64_t bits = Rng::splitmix64(base + static_cast<std::uint64_t>(i));
    m[i] = (bits & 0xffffffffULL) < cut ? Scalar(0) : keep_scale;
    if (i + 1 < n) m[i + 1] = (bits >> 32) < cut ? Scalar(0) : keep_scale;
  }
  MatrixX<Scalar> out = x.value().cwiseProduct(mask);
  return x.tape->emit(std::move(out), x.frames(), {x},
                      [x, mask = std::move(mask)](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        t.accumulate(x.id, g.cwiseProduct(mask));
                      });
}

/// Per time step: out_t = graph * x_t (graph is players x players).
template <typename Scalar>
Var<Scalar> graph_aggregate(Var<Scalar> x, const MatrixX<Scalar>& graph) {
  const int players = detail::players_of(x);
  if (graph.rows() != players || graph.cols() != players) {
    throw ShapeError("graph_aggregate: graph is " + std::to_string(graph.rows()) + "x" +
                     std::to_string(graph.cols()) + ", input has " + std::to_string(players) +
                     " players");
  }
  const auto& v = x.value();
  const Eigen::Index blocks = v.size() / players;
  MatrixX<Scalar> out(v.rows(), v.cols());
  Eigen::Map<const MatrixX<Scalar>> src(v.data(), players, blocks);
  Eigen::Map<MatrixX<Scalar>> dst(out.data(), players, blocks);
  dst.noalias() = graph * src;
  return x.tape->emit(std::move(out), x.frames(), {x},
                      [x, graph, players, blocks](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        MatrixX<Scalar> dx(g.rows(), g.cols());
                        Eigen::Map<const MatrixX<Scalar>> gm(g.data(), players, blocks);
                        Eigen::Map<MatrixX<Scalar>> dm(dx.data(), players, blocks);
                        dm.noalias() = graph.transpose() * gm;
                        t.accumulate(x.id, dx);
                      });
}

/// Temporal convolution with a (3, 1) kernel and zero "same" padding.
///
/// `kernel` is (3 * c) x c' stacking the taps for the previous, current and
/// next time step.
template <typename Scalar>
Var<Scalar> temporal_conv(Var<Scalar> x, Var<Scalar> kernel) {
  const int players = detail::players_of(x);
  const auto& v = x.value();
  const Eigen::Index c = v.cols();
  const auto& k = kernel.value();
  if (k.rows() != 3 * c) throw ShapeError("temporal_conv: kernel rows must be 3 * channels");
  const Eigen::Index shifted = v.rows() - players;
  MatrixX<Scalar> out = v * k.middleRows(c, c);
  if (shifted > 0) {
    out.bottomRows(shifted).noalias() += v.topRows(shifted) * k.topRows(c);
    out.topRows(shifted).noalias() += v.bottomRows(shifted) * k.bottomRows(c);
  }
  return x.tape->emit(
      std::move(out), x.frames(), {x, kernel},
      [x, kernel, shifted, c](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
        const auto& xv = t.value(x.id);
        const auto& kv = t.value(kernel.id);
        if (t.requires_grad(x.id)) {
          MatrixX<Scalar> dx = g * kv.middleRows(c, c).transpose();
          if (shifted > 0) {
            dx.topRows(shifted).noalias() += g.bottomRows(shifted) * kv.topRows(c).transpose();
            dx.bottomRows(shifted).noalias() += g.topRows(shifted) * kv.bottomRows(c).transpose();
          }
          t.accumulate(x.id, dx);
        }
        if (t.requires_grad(kernel.id)) {
          MatrixX<Scalar> dk = MatrixX<Scalar>::Zero(kv.rows(), kv.cols());
          dk.middleRows(c, c).noalias() = xv.transpose() * g;
          if (shifted > 0) {
            dk.topRows(c).noalias() = xv.topRows(shifted).transpose() * g.bottomRows(shifted);
            dk.bottomRows(c).noalias() = xv.bottomRows(shifted).transpose() * g.topRows(shifted);
          }
          t.accumulate(kernel.id, dk);
        }
      });
}

/// Linear map along time: out(t') = sum_t transform(t', t) * x(t).
template <typename Scalar>
Var<Scalar> time_transform(Var<Scalar> x, const MatrixX<Scalar>& transform) {
  const int players = detail::players_of(x);
  const int in_frames = x.frames();
  if (transform.cols() != in_frames) throw ShapeError("time_transform: frame count mismatch");
  const int out_frames = static_cast<int>(transform.rows());
  const auto& v = x.value();
  const Eigen::Index channels = v.cols();
  MatrixX<Scalar> out(static_cast<Eigen::Index>(out_frames) * players, channels);
  for (Eigen::Index ch = 0; ch < channels; ++ch) {
    Eigen::Map<const MatrixX<Scalar>> src(v.col(ch).data(), players, in_frames);
    Eigen::Map<MatrixX<Scalar>> dst(out.col(ch).data(), players, out_frames);
    dst.noalias() = src * transform.transpose();
  }
  return x.tape->emit(std::move(out), out_frames, {x},
                      [x, transform, players, in_frames, out_frames](Tape<Scalar>& t,
                                                                      const MatrixX<Scalar>& g) {
                        MatrixX<Scalar> dx(static_cast<Eigen::Index>(in_frames) * players, g.cols());
                        for (Eigen::Index ch = 0; ch < g.cols(); ++ch) {
                          Eigen::Map<const MatrixX<Scalar>> gm(g.col(ch).data(), players, out_frames);
                          Eigen::Map<MatrixX<Scalar>> dm(dx.col(ch).data(), players, in_frames);
                          dm.noalias() = gm * transform;
                        }
                        t.accumulate(x.id, dx);
                      });
}

/// Extends a sequence to `total_frames` by repeating its last frame.
template <typename Scalar>
Var<Scalar> replicate_last_frame(Var<Scalar> x, int total_frames) {
  const int players = detail::players_of(x);
  const int frames = x.frames();
  if (total_frames < frames) throw RangeError("replicate_last_frame: target shorter than input");
  const auto& v = x.value();
  MatrixX<Scalar> out(static_cast<Eigen::Index>(total_frames) * players, v.cols());
  out.topRows(v.rows()) = v;
  for (int f = frames; f < total_frames; ++f) {
    out.middleRows(static_cast<Eigen::Index>(f) * players, players) = v.bottomRows(players);
  }
  return x.tape->emit(std::move(out), total_frames, {x},
                      [x, players, frames, total_frames](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        const Eigen::Index seen_rows = static_cast<Eigen::Index>(frames) * players;
                        MatrixX<Scalar> dx = g.topRows(seen_rows);
                        for (int f = frames; f < total_frames; ++f) {
                          dx.bottomRows(players) +=
                              g.middleRows(static_cast<Eigen::Index>(f) * players, players);
                        }
                        t.accumulate(x.id, dx);
                      });
}

/// Frames [first, first + count) of a sequence.
template <typename Scalar>
Var<Scalar> slice_frames(Var<Scalar> x, int first, int count) {
  const int players = detail::players_of(x);
  if (first < 0 || count < 0 || first + count > x.frames()) throw RangeError("slice_frames out of range");
  const Eigen::Index row0 = static_cast<Eigen::Index>(first) * players;
  const Eigen::Index rows = static_cast<Eigen::Index>(count) * players;
  MatrixX<Scalar> out = x.value().middleRows(row0, rows);
  return x.tape->emit(std::move(out), count, {x},
                      [x, row0, rows](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        MatrixX<Scalar> dx = MatrixX<Scalar>::Zero(t.value(x.id).rows(), g.cols());
                        dx.middleRows(row0, rows) = g;
                        t.accumulate(x.id, dx);
                      });
}

/// Rectangular region of a matrix, used to address feature slices.
struct Block {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// Mean squared difference between a block of x and the same block of a
/// constant target; a 1 x 1 result. An empty block yields 0.
template <typename Scalar>
Var<Scalar> mse(Var<Scalar> x, const MatrixX<Scalar>& target, Block b) {
  const auto& v = x.value();
  if (target.rows() != v.rows() || target.cols() != v.cols()) throw ShapeError("mse: shape mismatch");
  const Eigen::Index count = b.rows * b.cols;
  MatrixX<Scalar> out(1, 1);
  if (count == 0) {
    out(0, 0) = Scalar(0);
    return x.tape->emit(std::move(out), 0, {x}, [](Tape<Scalar>&, const MatrixX<Scalar>&) {});
  }
  const auto diff = (v.block(b.row, b.col, b.rows, b.cols) - target.block(b.row, b.col, b.rows, b.cols));
  out(0, 0) = diff.squaredNorm() / static_cast<Scalar>(count);
  return x.tape->emit(std::move(out), 0, {x},
                      [x, target, b, count](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        const auto& xv = t.value(x.id);
                        MatrixX<Scalar> dx = MatrixX<Scalar>::Zero(xv.rows(), xv.cols());
                        dx.block(b.row, b.col, b.rows, b.cols) =
                            (Scalar(2) * g(0, 0) / static_cast<Scalar>(count)) *
                            (xv.block(b.row, b.col, b.rows, b.cols) -
                             target.block(b.row, b.col, b.rows, b.cols));
                        t.accumulate(x.id, dx);
                      });
}

/// Mean squared difference between two variables of equal shape.
template <typename Scalar>
Var<Scalar> mse(Var<Scalar> a, Var<Scalar> b) {
  if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
    throw ShapeError("mse: shape mismatch");
  }
  const auto count = static_cast<Scalar>(a.value().size());
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = (a.value() - b.value()).squaredNorm() / count;
  return a.tape->emit(std::move(out), 0, {a, b},
                      [a, b, count](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                        MatrixX<Scalar> d = (Scalar(2) * g(0, 0) / count) * (t.value(a.id) - t.value(b.id));
                        if (t.requires_grad(b.id)) t.accumulate(b.id, -d);
                        t.accumulate(a.id, d);
                      });
}

/// sum_i weights[i] * terms[i] over 1 x 1 terms.
template <typename Scalar>
Var<Scalar> weighted_sum(const std::vector<Var<Scalar>>& terms, const std::vector<Scalar>& weights) {
  if (terms.empty() || terms.size() != weights.size()) throw ShapeError("weighted_sum: bad arity");
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(1, 1);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].value().size() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    out(0, 0) += weights[i] * terms[i].value()(0, 0);
  }
  Tape<Scalar>& tape = *terms.front().tape;
  // emit() only inspects inputs for requires_grad; pass the first
  // differentiable term so the node participates in backward.
  Var<Scalar> anchor = terms.front();
  for (const auto& term : terms) {
    if (tape.requires_grad(term.id)) anchor = term;
  }
  return tape.emit(std::move(out), 0, {anchor},
                   [terms, weights](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
                     for (std::size_t i = 0; i < terms.size(); ++i) {
                       t.accumulate(terms[i].id, MatrixX<Scalar>::Constant(1, 1, weights[i] * g(0, 0)));
                     }
                   });
}

}  // namespace ad

}  // namespace gift

#endif  // GIFT_AUTODIFF_HPP
