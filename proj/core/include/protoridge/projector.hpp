#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "protoridge/embedding_store.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

enum class Nonlinearity : std::uint32_t { kIdentity = 0, kRelu = 1 };

std::string to_string(Nonlinearity n);

/// Projected samples: one Q-wide feature row per input row.
struct FeatureBatch {
  RowMatrix features;  // N x Q
  Labels labels;

  std::size_t count() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

/// Frozen random expansion from H to Q dimensions followed by an element-wise nonlinearity.
///
/// Entries are i.i.d. N(0, 1) drawn from `Rng(seed)` (mt19937_64 + Box-Muller), filled in
/// row-major order: W(0,0), W(0,1), ..., W(0,Q-1), W(1,0), ...  The weights are a pure function
/// of (seed, H, Q) and never change after construction.
class ProjectionMatrix {
 public:
  ProjectionMatrix(std::uint32_t in_dim, std::uint32_t out_dim, std::uint64_t seed,
                   Nonlinearity nonlinearity = Nonlinearity::kRelu);

  /// Wraps explicit weights (tests and ablation hooks). Such a projection has no seed and
  /// cannot be checkpointed.
  static ProjectionMatrix from_weights(Matrix weights, Nonlinearity nonlinearity);

  std::uint32_t in_dim() const noexcept { return static_cast<std::uint32_t>(weights_.rows()); }
  std::uint32_t out_dim() const noexcept { return static_cast<std::uint32_t>(weights_.cols()); }
  std::uint64_t seed() const noexcept { return seed_; }
  bool seeded() const noexcept { return seeded_; }
  Nonlinearity nonlinearity() const noexcept { return nonlinearity_; }
  const Matrix& weights() const noexcept { return weights_; }

  /// Frozen-parameter count H x Q.
  std::uint64_t parameter_count() const noexcept {
    return static_cast<std::uint64_t>(weights_.rows()) * static_cast<std::uint64_t>(weights_.cols());
  }

  /// psi(rows * W). `rows` is N x H.
  RowMatrix apply(const RowMatrix& rows) const;

 private:
  ProjectionMatrix(Matrix weights, std::uint64_t seed, bool seeded, Nonlinearity nonlinearity);

  Matrix weights_;
  std::uint64_t seed_ = 0;
  bool seeded_ = false;
  Nonlinearity nonlinearity_ = Nonlinearity::kRelu;
};

/// Same as ProjectionMatrix's constructor; throws InvariantError on zero dimensions.
ProjectionMatrix make_projection(std::uint32_t in_dim, std::uint32_t out_dim, std::uint64_t seed,
                                 Nonlinearity nonlinearity = Nonlinearity::kRelu);

/// Maps a batch through the projection. Throws DimensionError when batch.dim != in_dim.
FeatureBatch project(const ProjectionMatrix& p, const EmbeddingBatch& batch);

/// Features equal to the raw embeddings (the "no projection" path).
FeatureBatch identity_features(const EmbeddingBatch& batch);

/// `PRJ1` checkpoint: magic, u32 H, u32 Q, u64 seed, u32 nonlinearity, u32 distribution (0 = normal).
/// 28 bytes; weights are regenerated from the seed on load.
void save_projection(const ProjectionMatrix& p, const std::filesystem::path& path);
ProjectionMatrix load_projection(const std::filesystem::path& path);

}  // namespace protoridge
