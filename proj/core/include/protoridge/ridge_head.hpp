#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "protoridge/accumulator.hpp"
#include "protoridge/projector.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

/// Decorrelated class prototypes W_o = (G + lambda I)^{-1} K.
struct RidgeHead {
  Matrix weights;  // Q x C
  double lambda = 0.0;
  std::uint64_t source_fingerprint = 0;

  std::uint32_t q_dim() const noexcept { return static_cast<std::uint32_t>(weights.rows()); }
  std::uint32_t class_count() const noexcept { return static_cast<std::uint32_t>(weights.cols()); }

  /// Trainable-parameter count Q x C.
  std::uint64_t parameter_count() const noexcept { return static_cast<std::uint64_t>(weights.size()); }
};

/// ||(G + lambda I) W_o - K||_F / max(1, ||K||_F).
double solve_residual(const SufficientStats& stats, const RidgeHead& head);

/// Solves (G + lambda I) W_o = K by Cholesky factorization (no explicit inverse, no pivoting).
/// Throws InvariantError for lambda <= 0 and FactorizationError carrying the failing pivot.
RidgeHead solve_head(const SufficientStats& stats, double lambda);

/// {10^-8, 10^-7, ..., 10^8}.
std::vector<double> default_lambda_grid();

struct LambdaScore {
  double lambda = 0.0;
  double mse = 0.0;  // NaN when the solve failed
  bool solved = false;
};

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<LambdaScore> scores;  // one per grid point, ascending lambda
  std::size_t fit_count = 0;
  std::size_t holdout_count = 0;
  std::vector<std::size_t> holdout_rows;  // task row indices scored for MSE
};

struct LambdaSearchOptions {
  std::vector<double> grid = default_lambda_grid();
  bool stratified = false;  // split each class 80/20 separately
};

/// Picks lambda for the current task.
///
/// The task's samples are shuffled with `split_seed` and split 80/20 (fit = floor(0.8 N)).
/// One candidate accumulation persistent + stats(fit) is formed and solved for every grid
/// value; the score is the mean over holdout samples and all C classes of (one-hot - v W_o)^2.
/// The argmin wins, ties go to the larger lambda. Needs N >= 5.
LambdaSelection select_lambda(const SufficientStats& persistent, const FeatureBatch& task, std::uint64_t split_seed,
                              const LambdaSearchOptions& options = {});

struct Prediction {
  RowMatrix scores;  // N x C
  Labels labels;     // row-wise argmax, ties to the smallest class index
};

/// Row-wise argmax with ties broken toward the smallest column index.
Labels argmax_rows(const RowMatrix& scores);

Prediction predict(const RidgeHead& head, const RowMatrix& features);

struct LearnOptions {
  std::optional<double> fixed_lambda;  // skips the grid search when set
  LambdaSearchOptions search;
};

struct LearnResult {
  SufficientStats stats;
  RidgeHead head;
  std::optional<LambdaSelection> selection;
};

/// One incremental step on already-projected task features: select lambda (unless fixed) on
/// the 80/20 split, fold 100% of the task into the persistent stats, then solve.
/// Throws InvariantError for an empty task; `persistent` is taken by value and never mutated
/// on failure.
LearnResult learn_task(SufficientStats persistent, const FeatureBatch& task, std::uint64_t split_seed,
                       const LearnOptions& options = {});

/// Same, projecting the raw batch exactly once first.
LearnResult learn_task(SufficientStats persistent, const ProjectionMatrix& projection, const EmbeddingBatch& task,
                       std::uint64_t split_seed, const LearnOptions& options = {});

/// `WOH1`: magic, u32 Q, u32 C, f64 lambda, u64 fingerprint, row-major W_o (Q*C f64).
void save_head(const RidgeHead& head, const std::filesystem::path& path);
RidgeHead load_head(const std::filesystem::path& path);

}  // namespace protoridge
