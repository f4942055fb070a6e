#include "protoridge/linear_probe.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "protoridge/rng.hpp"

namespace protoridge {

std::string to_string(ProbeMode m) { return m == ProbeMode::kOnline ? "online" : "offline"; }

LinearProbe::LinearProbe(std::uint32_t dim, std::uint32_t class_count, std::uint64_t init_seed) {
  if (dim == 0 || class_count == 0) throw InvariantError("linear probe: dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  Rng rng(init_seed);
  weights_.resize(dim, class_count);
  for (long i = 0; i < weights_.rows(); ++i) {
    for (long j = 0; j < weights_.cols(); ++j) weights_(i, j) = rng.uniform(-bound, bound);
  }
  bias_.resize(1, class_count);
  for (long j = 0; j < bias_.cols(); ++j) bias_(0, j) = rng.uniform(-bound, bound);
  reset_optimizer();
}

RowMatrix LinearProbe::logits(const RowMatrix& x) const {
  if (x.cols() != weights_.rows()) {
    throw DimensionError("linear probe: input width " + std::to_string(x.cols()) + " != H " +
                         std::to_string(weights_.rows()));
  }
  RowMatrix z = x * weights_;
  z.rowwise() += bias_.row(0);
  return z;
}

Labels LinearProbe::predict(const RowMatrix& x) const {
  const RowMatrix z = logits(x);
  Labels out(static_cast<std::size_t>(z.rows()));
  for (long i = 0; i < z.rows(); ++i) {
    long best = 0;
    for (long c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

namespace {

/// Row-wise softmax probabilities and per-row log-sum-exp of the logits.
RowMatrix softmax(const RowMatrix& z, Vector& log_norm) {
  RowMatrix p(z.rows(), z.cols());
  log_norm.resize(z.rows());
  for (long i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    p.row(i) = (z.row(i).array() - m).exp();
    const double s = p.row(i).sum();
    p.row(i) /= s;
    log_norm(i) = m + std::log(s);
  }
  return p;
}

void check_labels(std::span<const std::uint32_t> labels, long rows, std::uint32_t classes) {
  if (static_cast<long>(labels.size()) != rows) throw DimensionError("linear probe: label count != row count");
  for (auto y : labels) {
    if (y >= classes) throw InvariantError("linear probe: label " + std::to_string(y) + " out of range");
  }
}

}  // namespace

double LinearProbe::loss(const RowMatrix& x, std::span<const std::uint32_t> labels) const {
  check_labels(labels, x.rows(), class_count());
  if (labels.empty()) return 0.0;
  const RowMatrix z = logits(x);
  Vector log_norm;
  softmax(z, log_norm);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += log_norm(static_cast<long>(i)) - z(static_cast<long>(i), labels[i]);
  return total / static_cast<double>(labels.size());
}

void LinearProbe::gradient(const RowMatrix& x, std::span<const std::uint32_t> labels, Matrix& grad_w,
                           Matrix& grad_b) const {
  check_labels(labels, x.rows(), class_count());
  const RowMatrix z = logits(x);
  Vector log_norm;
  RowMatrix d = softmax(z, log_norm);
  for (std::size_t i = 0; i < labels.size(); ++i) d(static_cast<long>(i), labels[i]) -= 1.0;
  d /= static_cast<double>(std::max<std::size_t>(labels.size(), 1));
  grad_w = x.transpose() * d;
  grad_b = d.colwise().sum();
}

void LinearProbe::reset_optimizer() {
  m_weights_ = AdamMoments(weights_.rows(), weights_.cols());
  m_bias_ = AdamMoments(bias_.rows(), bias_.cols());
  step_ = 0;
}

double LinearProbe::train_step(const RowMatrix& x, std::span<const std::uint32_t> labels, double lr,
                               const AdamConfig& cfg) {
  const double before = loss(x, labels);
  if (!std::isfinite(before)) {
    throw NumericalError("linear probe: non-finite loss at step " + std::to_string(step_ + 1));
  }
  Matrix gw, gb;
  gradient(x, labels, gw, gb);
  ++step_;
  adam_update(weights_, gw, m_weights_, step_, lr, cfg);
  adam_update(bias_, gb, m_bias_, step_, lr, cfg);
  return before;
}

void LinearProbe::set_parameters(Matrix weights, Matrix bias) {
  if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols() || bias.rows() != 1 ||
      bias.cols() != weights_.cols()) {
    throw DimensionError("linear probe: parameter shapes do not match");
  }
  weights_ = std::move(weights);
  bias_ = std::move(bias);
}

ProbeTrainReport probe_train(LinearProbe& probe, const EmbeddingBatch& data, ProbeMode mode, const EmbeddingBatch& val,
                             const ProbeHyper& hyper, std::uint64_t shuffle_seed) {
  if (data.count() == 0) throw InvariantError("probe_train: training data is empty");
  if (mode == ProbeMode::kOfflineEarlyStop && val.count() == 0) {
    throw InvariantError("probe_train: offline mode needs a non-empty validation set");
  }
  if (hyper.batch_size == 0) throw InvariantError("probe_train: batch size must be positive");
  if (data.dim != probe.dim()) throw DimensionError("probe_train: data dim does not match probe");

  const std::size_t n = data.count();
  const std::size_t steps_per_epoch = (n + hyper.batch_size - 1) / hyper.batch_size;
  const std::size_t epochs = mode == ProbeMode::kOnline ? 1 : std::max<std::size_t>(hyper.max_epochs, 1);
  const CosineAnnealing schedule(hyper.lr, steps_per_epoch * epochs);

  probe.reset_optimizer();
  ProbeTrainReport report;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = std::numeric_limits<double>::infinity();
  Matrix best_w = probe.weights();
  Matrix best_b = probe.bias();
  std::size_t bad_epochs = 0;
  std::uint64_t global_step = 0;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    if (hyper.shuffle) {
      Rng rng(derive_seed(shuffle_seed, "epoch", epoch));
      rng.shuffle(order.begin(), order.end());
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t len = std::min(hyper.batch_size, n - start);
      RowMatrix x(static_cast<long>(len), data.dim);
      Labels y(len);
      for (std::size_t k = 0; k < len; ++k) {
        x.row(static_cast<long>(k)) = data.vectors.row(static_cast<long>(order[start + k]));
        y[k] = data.labels[order[start + k]];
      }
      epoch_loss += probe.train_step(x, y, schedule.lr(global_step), hyper.adam);
      ++global_step;
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
    report.epochs = epoch + 1;

    if (mode == ProbeMode::kOfflineEarlyStop) {
      const double v = probe.loss(val.vectors, val.labels);
      if (!std::isfinite(v)) throw NumericalError("probe_train: non-finite validation loss after epoch " + std::to_string(epoch + 1));
      report.val_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_w = probe.weights();
        best_b = probe.bias();
        report.best_epoch = epoch + 1;
        bad_epochs = 0;
      } else if (++bad_epochs >= hyper.patience) {
        report.stopped_early = true;
        break;
      }
    }
  }
  if (mode == ProbeMode::kOfflineEarlyStop) {
    probe.set_parameters(std::move(best_w), std::move(best_b));
  } else {
    report.best_epoch = 1;
  }
  report.steps = global_step;
  return report;
}

LinearProbe probe_joint_train(std::span<const EmbeddingBatch> history, std::span<const EmbeddingBatch> val_history,
                              std::uint32_t class_count, ProbeMode mode, const ProbeHyper& hyper,
                              std::uint64_t init_seed, std::uint64_t shuffle_seed, ProbeTrainReport* report) {
  if (history.empty()) throw InvariantError("probe_joint_train: empty history");
  const EmbeddingBatch pooled = EmbeddingBatch::concat(history);
  const EmbeddingBatch pooled_val =
      val_history.empty() ? EmbeddingBatch::empty(pooled.dim) : EmbeddingBatch::concat(val_history);
  LinearProbe probe(pooled.dim, class_count, init_seed);
  auto r = probe_train(probe, pooled, mode, pooled_val, hyper, shuffle_seed);
  if (report) *report = std::move(r);
  return probe;
}

}  // namespace protoridge
