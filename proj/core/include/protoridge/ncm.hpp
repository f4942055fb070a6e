#pragma once

#include <cstdint>
#include <vector>

#include "protoridge/embedding_store.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

/// Nearest-class-mean classifier on raw embeddings with cosine similarity.
///
/// Per-class sums and counts are kept; the prototype of class y is sum_y / count_y and is
/// undefined while count_y == 0 (such classes never win a prediction).
class NcmModel {
 public:
  NcmModel(std::uint32_t dim, std::uint32_t class_count);

  std::uint32_t dim() const noexcept { return static_cast<std::uint32_t>(sums_.cols()); }
  std::uint32_t class_count() const noexcept { return static_cast<std::uint32_t>(sums_.rows()); }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  /// C x H matrix of class means; rows of unseen classes are zero.
  RowMatrix prototypes() const;
  bool seen(std::uint32_t cls) const { return counts_.at(cls) > 0; }

  void update(const EmbeddingBatch& batch);

  /// argmax over seen classes of cos(f, prototype). A zero-norm feature or prototype scores
  /// -inf for that pair; ties go to the smallest class index. Throws InvariantError when no
  /// class has been seen.
  Labels predict(const EmbeddingBatch& batch) const;

 private:
  RowMatrix sums_;  // C x H
  std::vector<std::uint64_t> counts_;
};

inline NcmModel ncm_update(NcmModel m, const EmbeddingBatch& batch) {
  m.update(batch);
  return m;
}

inline Labels ncm_predict(const NcmModel& m, const EmbeddingBatch& batch) { return m.predict(batch); }

}  // namespace protoridge
