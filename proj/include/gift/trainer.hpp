#ifndef GIFT_TRAINER_HPP
#define GIFT_TRAINER_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gift/model.hpp"

namespace gift {

/// Adaptive-moment descent with decoupled weight decay.
template <typename Scalar>
class AdamW {
 public:
  AdamW(const ParameterSet<Scalar>& params, double learning_rate, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    for (const auto& p : params) {
      m_.push_back(MatrixX<Scalar>::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(MatrixX<Scalar>::Zero(p.value.rows(), p.value.cols()));
    }
  }

  /// Applies one update from the accumulated gradients.
  void step(ParameterSet<Scalar>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    const auto b1 = static_cast<Scalar>(beta1_);
    const auto b2 = static_cast<Scalar>(beta2_);
    const auto step_size = static_cast<Scalar>(lr_ / bc1);
    const auto inv_bc2 = static_cast<Scalar>(1.0 / bc2);
    const auto eps = static_cast<Scalar>(eps_);
    const auto decay = static_cast<Scalar>(1.0 - lr_ * wd_);
    std::size_t k = 0;
    for (auto& p : params) {
      auto& m = m_[k];
      auto& v = v_[k];
      ++k;
      m = b1 * m + (Scalar(1) - b1) * p.grad;
      v = b2 * v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      p.value *= decay;
      p.value.array() -= step_size * m.array() / ((v.array() * inv_bc2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatrixX<Scalar>> m_;
  std::vector<MatrixX<Scalar>> v_;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown val;
};

template <typename Scalar>
struct TrainResult {
  GiftModel<Scalar> model;  // parameters of the epoch with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Called after every per-clip forward/backward in training.
using StepObserver = std::function<void(int epoch, long step, const LossBreakdown& loss)>;
/// Called after every epoch.
using EpochObserver = std::function<void(const EpochRecord& record)>;

struct TrainHooks {
  StepObserver on_step;
  EpochObserver on_epoch;
};

template <typename Scalar>
TrainResult<Scalar> train(std::span<const ClipAnnotation> train_set, std::span<const ClipAnnotation> val_set,
                          const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Mean eval-mode loss over prepared clips.
template <typename Scalar>
LossBreakdown mean_loss(const GiftModel<Scalar>& model, std::span<const PreparedClip<Scalar>> clips);

/// Normalizer fitted on the seen windows of the training clips.
Normalizer fit_training_normalizer(std::span<const ClipAnnotation> clips, int seen_frames);

std::string history_csv(const std::vector<EpochRecord>& history);
std::string history_json(const std::vector<EpochRecord>& history, int best_epoch);
std::vector<EpochRecord> history_from_json(const std::string& text, int* best_epoch = nullptr);

}  // namespace gift

#endif  // GIFT_TRAINER_HPP
