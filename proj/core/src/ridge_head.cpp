#include "protoridge/ridge_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "binary_io.hpp"
#include "protoridge/rng.hpp"

namespace protoridge {

namespace {

/// Solves (gram + lambda I) X = rhs with an unpivoted blocked Cholesky factorization.
Matrix cholesky_solve(const Matrix& gram, double lambda, const Matrix& rhs) {
  Matrix a = gram;
  a.diagonal().array() += lambda;
  // Returns the failing column, or -1 when every pivot was positive.
  const Eigen::Index failed = Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(a);
  if (failed >= 0) {
    throw FactorizationError("ridge solve: Cholesky of G + lambda*I failed at pivot " + std::to_string(failed) +
                                 " (lambda=" + fmt::format("{:g}", lambda) +
                                 "); the accumulated Gram matrix is too ill-conditioned for this lambda",
                             static_cast<long>(failed));
  }
  Matrix x = rhs;
  a.triangularView<Eigen::Lower>().solveInPlace(x);
  a.triangularView<Eigen::Lower>().adjoint().solveInPlace(x);
  if (!x.allFinite()) {
    throw FactorizationError("ridge solve: non-finite solution (lambda=" + fmt::format("{:g}", lambda) + ")", -1);
  }
  return x;
}

double holdout_mse(const RowMatrix& features, std::span<const std::uint32_t> labels, const Matrix& weights) {
  RowMatrix residual = features * weights;
  for (std::size_t i = 0; i < labels.size(); ++i) residual(static_cast<long>(i), labels[i]) -= 1.0;
  return residual.squaredNorm() / static_cast<double>(residual.size());
}

/// Returns (fit rows, holdout rows).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_80_20(std::span<const std::uint32_t> labels,
                                                                          std::uint64_t seed, bool stratified) {
  Rng rng(seed);
  std::vector<std::size_t> fit, hold;
  auto deal = [&](std::vector<std::size_t> rows) {
    rng.shuffle(rows.begin(), rows.end());
    const auto n_fit = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(rows.size())));
    fit.insert(fit.end(), rows.begin(), rows.begin() + static_cast<long>(n_fit));
    hold.insert(hold.end(), rows.begin() + static_cast<long>(n_fit), rows.end());
  };
  if (stratified) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& [cls, rows] : by_class) deal(std::move(rows));
  } else {
    std::vector<std::size_t> rows(labels.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    deal(std::move(rows));
  }
  return {std::move(fit), std::move(hold)};
}

RowMatrix take_rows(const RowMatrix& m, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<long>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<long>(i)) = m.row(static_cast<long>(rows[i]));
  return out;
}

Labels take_labels(std::span<const std::uint32_t> labels, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace

double solve_residual(const SufficientStats& stats, const RidgeHead& head) {
  Matrix r = stats.gram() * head.weights + head.lambda * head.weights - stats.prototypes();
  return r.norm() / std::max(1.0, stats.prototypes().norm());
}

RidgeHead solve_head(const SufficientStats& stats, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvariantError("ridge solve: lambda must be positive and finite (got " + std::to_string(lambda) + ")");
  }
  return RidgeHead{cholesky_solve(stats.gram(), lambda, stats.prototypes()), lambda, stats.fingerprint()};
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -8; e <= 8; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

LambdaSelection select_lambda(const SufficientStats& persistent, const FeatureBatch& task, std::uint64_t split_seed,
                              const LambdaSearchOptions& options) {
  if (task.count() < 5) {
    throw InvariantError("lambda search: need at least 5 task samples for an 80/20 split (got " +
                         std::to_string(task.count()) + ")");
  }
  if (task.width() != persistent.q_dim()) {
    throw DimensionError("lambda search: feature width " + std::to_string(task.width()) + " != Q " +
                         std::to_string(persistent.q_dim()));
  }
  if (options.grid.empty()) throw InvariantError("lambda search: empty grid");

  auto [fit_rows, hold_rows] = split_80_20(task.labels, split_seed, options.stratified);
  if (hold_rows.empty()) throw InvariantError("lambda search: holdout split is empty");

  SufficientStats candidate = persistent;
  candidate.update(take_rows(task.features, fit_rows), take_labels(task.labels, fit_rows));
  const RowMatrix hold_features = take_rows(task.features, hold_rows);
  const Labels hold_labels = take_labels(task.labels, hold_rows);

  std::vector<double> grid = options.grid;
  std::sort(grid.begin(), grid.end());

  LambdaSelection sel;
  sel.fit_count = fit_rows.size();
  sel.holdout_count = hold_rows.size();
  sel.holdout_rows = hold_rows;
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double lambda : grid) {
    LambdaScore score{lambda, std::numeric_limits<double>::quiet_NaN(), false};
    try {
      const Matrix w = cholesky_solve(candidate.gram(), lambda, candidate.prototypes());
      score.mse = holdout_mse(hold_features, hold_labels, w);
      score.solved = std::isfinite(score.mse);
    } catch (const FactorizationError&) {
      score.solved = false;
    }
    // Ascending grid with <=: an exact tie moves the choice to the larger lambda.
    if (score.solved && score.mse <= best) {
      best = score.mse;
      sel.lambda = lambda;
      any = true;
    }
    sel.scores.push_back(score);
  }
  if (!any) throw FactorizationError("lambda search: every grid value failed to factorize", -1);
  return sel;
}

Labels argmax_rows(const RowMatrix& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()), 0);
  for (long i = 0; i < scores.rows(); ++i) {
    long best = 0;
    for (long c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

Prediction predict(const RidgeHead& head, const RowMatrix& features) {
  if (features.cols() != head.weights.rows()) {
    throw DimensionError("predict: feature width " + std::to_string(features.cols()) + " != head Q " +
                         std::to_string(head.weights.rows()));
  }
  Prediction p;
  p.scores = features * head.weights;
  p.labels = argmax_rows(p.scores);
  return p;
}

LearnResult learn_task(SufficientStats persistent, const FeatureBatch& task, std::uint64_t split_seed,
                       const LearnOptions& options) {
  if (task.count() == 0) throw InvariantError("learn_task: task has no samples");
  if (task.width() != persistent.q_dim()) {
    throw DimensionError("learn_task: feature width " + std::to_string(task.width()) + " != Q " +
                         std::to_string(persistent.q_dim()));
  }

  std::optional<LambdaSelection> selection;
  double lambda = 0.0;
  if (options.fixed_lambda) {
    lambda = *options.fixed_lambda;
  } else {
    selection = select_lambda(persistent, task, split_seed, options.search);
    lambda = selection->lambda;
  }

  persistent.update(task.features, task.labels);
  RidgeHead head = solve_head(persistent, lambda);
  return LearnResult{std::move(persistent), std::move(head), std::move(selection)};
}

LearnResult learn_task(SufficientStats persistent, const ProjectionMatrix& projection, const EmbeddingBatch& task,
                       std::uint64_t split_seed, const LearnOptions& options) {
  if (task.count() == 0) throw InvariantError("learn_task: task has no samples");
  return learn_task(std::move(persistent), project(projection, task), split_seed, options);
}

void save_head(const RidgeHead& head, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.magic("WOH1");
  w.put<std::uint32_t>(head.q_dim());
  w.put<std::uint32_t>(head.class_count());
  w.put<double>(head.lambda);
  w.put<std::uint64_t>(head.source_fingerprint);
  for (long i = 0; i < head.weights.rows(); ++i) {
    for (long j = 0; j < head.weights.cols(); ++j) w.put<double>(head.weights(i, j));
  }
  detail::write_file(path.string(), w.bytes());
}

RidgeHead load_head(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  const std::string what = "WOH1 '" + path.string() + "'";
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  r.expect_magic("WOH1");
  const auto q = r.get<std::uint32_t>("Q");
  const auto c = r.get<std::uint32_t>("C");
  RidgeHead head;
  head.lambda = r.get<double>("lambda");
  head.source_fingerprint = r.get<std::uint64_t>("fingerprint");
  if (r.remaining() != 8ull * q * c) {
    throw FormatError(what + ": payload of " + std::to_string(r.remaining()) + " bytes does not match " +
                      std::to_string(q) + "x" + std::to_string(c));
  }
  head.weights.resize(q, c);
  for (std::uint32_t i = 0; i < q; ++i) {
    for (std::uint32_t j = 0; j < c; ++j) head.weights(i, j) = r.get<double>("W_o");
  }
  return head;
}

}  // namespace protoridge
