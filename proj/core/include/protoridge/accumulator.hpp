#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "protoridge/types.hpp"

namespace protoridge {

/// Streaming sufficient statistics of ridge regression onto one-hot targets.
///
///   gram       G = sum_m v_m v_m^T            (Q x Q)
///   prototypes K = sum_m v_m y_m^T            (Q x C, column y is the unnormalized class sum)
///   counts     samples seen per class
///
/// G is updated on its upper triangle and mirrored, so it is exactly symmetric at all times.
/// All sums are plain sums over samples, hence order-invariant up to rounding and mergeable.
class SufficientStats {
 public:
  SufficientStats(std::uint32_t q_dim, std::uint32_t class_count);

  std::uint32_t q_dim() const noexcept { return q_dim_; }
  std::uint32_t class_count() const noexcept { return class_count_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Matrix& prototypes() const noexcept { return prototypes_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t samples_seen() const noexcept;

  /// Adds V^T V to G and V^T Y to K for the rows of `features` (N x Q) with labels `labels`.
  /// Validates everything before touching state, so a throwing call leaves the stats unchanged.
  void update(const RowMatrix& features, std::span<const std::uint32_t> labels);

  /// In-place elementwise sum with `other`.
  SufficientStats& operator+=(const SufficientStats& other);

  /// 64-bit content hash over dims, G, K and counts.
  std::uint64_t fingerprint() const;

  /// `STA1` layout: magic, u32 Q, u32 C, u32 version (=1); row-major G (Q*Q f64);
  /// row-major K (Q*C f64); counts (C u64). Little-endian throughout.
  std::vector<char> snapshot() const;
  static SufficientStats restore(std::span<const char> bytes);

  friend bool operator==(const SufficientStats&, const SufficientStats&) = default;

 private:
  std::uint32_t q_dim_;
  std::uint32_t class_count_;
  Matrix gram_;
  Matrix prototypes_;
  std::vector<std::uint64_t> counts_;
};

/// Byte size of an STA1 snapshot: 16 + 8 * (Q*Q + Q*C) + 8 * C.
constexpr std::uint64_t sta1_size(std::uint64_t q, std::uint64_t c) { return 16 + 8 * (q * q + q * c) + 8 * c; }

inline SufficientStats stats_new(std::uint32_t q_dim, std::uint32_t class_count) {
  return SufficientStats(q_dim, class_count);
}

/// Functional update: returns `s` with the batch folded in.
inline SufficientStats stats_update(SufficientStats s, const RowMatrix& features, std::span<const std::uint32_t> labels) {
  s.update(features, labels);
  return s;
}

/// Elementwise sum. Throws DimensionError on mismatched dims.
inline SufficientStats stats_merge(SufficientStats a, const SufficientStats& b) {
  a += b;
  return a;
}

}  // namespace protoridge
