#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "protoridge/embedding_store.hpp"
#include "protoridge/optim.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

enum class ProbeMode { kOnline, kOfflineEarlyStop };

std::string to_string(ProbeMode m);

struct ProbeHyper {
  double lr = 1e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;  // epochs without validation-loss improvement before stopping
  AdamConfig adam;
  bool shuffle = true;  // reshuffle every epoch
};

/// Softmax linear classifier on frozen embeddings: logits = x W + b.
///
/// All C output units exist from construction. Each probe_train call starts a fresh Adam state
/// and cosine schedule on top of the current weights.
class LinearProbe {
 public:
  /// Weights and bias uniform in +-1/sqrt(H), drawn from Rng(init_seed).
  LinearProbe(std::uint32_t dim, std::uint32_t class_count, std::uint64_t init_seed);

  std::uint32_t dim() const noexcept { return static_cast<std::uint32_t>(weights_.rows()); }
  std::uint32_t class_count() const noexcept { return static_cast<std::uint32_t>(weights_.cols()); }
  const Matrix& weights() const noexcept { return weights_; }
  const Matrix& bias() const noexcept { return bias_; }  // 1 x C
  std::uint64_t steps_taken() const noexcept { return step_; }

  /// Weight parameters H x C (the bias is not counted, matching the usual accounting).
  std::uint64_t parameter_count() const noexcept { return static_cast<std::uint64_t>(weights_.size()); }

  RowMatrix logits(const RowMatrix& x) const;
  Labels predict(const RowMatrix& x) const;

  /// Mean softmax cross-entropy over the rows of x.
  double loss(const RowMatrix& x, std::span<const std::uint32_t> labels) const;

  /// Analytic gradient of loss() with respect to W (H x C) and b (1 x C).
  void gradient(const RowMatrix& x, std::span<const std::uint32_t> labels, Matrix& grad_w, Matrix& grad_b) const;

  /// Begins a new optimization session: zero moments, step counter reset.
  void reset_optimizer();

  /// One Adam step on a mini-batch at learning rate lr. Returns the batch loss before the step.
  double train_step(const RowMatrix& x, std::span<const std::uint32_t> labels, double lr, const AdamConfig& cfg);

  /// Replaces parameters (checkpoint restore, finite-difference tests).
  void set_parameters(Matrix weights, Matrix bias);

 private:
  Matrix weights_;
  Matrix bias_;
  AdamMoments m_weights_;
  AdamMoments m_bias_;
  std::uint64_t step_ = 0;
};

struct ProbeTrainReport {
  std::size_t epochs = 0;
  std::uint64_t steps = 0;
  std::vector<double> train_loss;  // mean mini-batch loss per epoch
  std::vector<double> val_loss;    // offline mode only
  bool stopped_early = false;
  std::size_t best_epoch = 0;      // 1-based; offline mode restores this epoch's parameters
};

/// Trains with softmax cross-entropy, Adam and cosine annealing to zero.
///
/// Online: exactly one epoch, annealed over that epoch's step count.
/// Offline: up to max_epochs, annealed over max_epochs * steps_per_epoch; stops after
/// `patience` epochs without improvement of validation loss and restores the best epoch.
/// Throws InvariantError on empty data (or empty validation in offline mode) and
/// NumericalError on a non-finite loss.
ProbeTrainReport probe_train(LinearProbe& probe, const EmbeddingBatch& data, ProbeMode mode, const EmbeddingBatch& val,
                             const ProbeHyper& hyper, std::uint64_t shuffle_seed);

/// Joint probe: fresh initialization, trained on the concatenation of every batch in `history`
/// (the per-epoch shuffle mixes tasks). Validation sets are pooled the same way.
LinearProbe probe_joint_train(std::span<const EmbeddingBatch> history, std::span<const EmbeddingBatch> val_history,
                              std::uint32_t class_count, ProbeMode mode, const ProbeHyper& hyper,
                              std::uint64_t init_seed, std::uint64_t shuffle_seed, ProbeTrainReport* report = nullptr);

}  // namespace protoridge
