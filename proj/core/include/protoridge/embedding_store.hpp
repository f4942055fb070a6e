#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "protoridge/types.hpp"

namespace protoridge {

/// N labeled embedding vectors of width H.
///
/// Values are held in 64-bit after load; the `EMB1` file stores them as 32-bit floats.
struct EmbeddingBatch {
  std::uint32_t dim = 0;
  RowMatrix vectors;  // count x dim
  Labels labels;      // count entries

  EmbeddingBatch() = default;
  EmbeddingBatch(std::uint32_t d, RowMatrix v, Labels l) : dim(d), vectors(std::move(v)), labels(std::move(l)) {}

  /// Empty batch of width `d`.
  static EmbeddingBatch empty(std::uint32_t d) { return EmbeddingBatch{d, RowMatrix(0, d), {}}; }

  std::size_t count() const noexcept { return labels.size(); }

  /// Throws InvariantError on shape mismatch, non-finite entries, or a label >= class_count.
  void validate(std::optional<std::uint32_t> class_count = std::nullopt) const;

  /// Rows whose index is listed in `rows`, in that order.
  EmbeddingBatch select(std::span<const std::size_t> rows) const;

  /// Rows whose label is in `classes`.
  EmbeddingBatch filter_classes(std::span<const std::uint32_t> classes) const;

  /// Row-wise concatenation. Dimensions must agree.
  static EmbeddingBatch concat(std::span<const EmbeddingBatch> parts);
};

inline constexpr std::size_t kEmbHeaderBytes = 16;

/// Serialized size of a batch: 16 + N * (4 + 4H).
constexpr std::uint64_t emb1_file_size(std::uint64_t dim, std::uint64_t count) {
  return kEmbHeaderBytes + count * (4 + 4 * dim);
}

/// Writes `EMB1`: magic, u32 H, u32 N, u32 class hint (0 = unknown), then N x (u32 label, H x f32).
/// All integers and floats little-endian. The batch is validated before any byte is written.
void write_batch(const EmbeddingBatch& batch, const std::filesystem::path& path, std::uint32_t class_hint = 0);

/// Reads an `EMB1` file, checking magic, exact length and label range against a nonzero hint.
EmbeddingBatch read_batch(const std::filesystem::path& path);

}  // namespace protoridge
