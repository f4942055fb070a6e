#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace protoridge {

/// Lower-triangular accuracy matrix: at(t, j) is the accuracy on task j's test split after
/// learning task t, with 1 <= j <= t <= T (1-based on the public surface).
class MetricsLedger {
 public:
  MetricsLedger() = default;
  explicit MetricsLedger(std::size_t task_count);

  std::size_t task_count() const noexcept { return rows_.size(); }

  /// Throws InvariantError for j > t, indices out of range or a value outside [0, 1].
  void set(std::size_t t, std::size_t j, double accuracy);
  std::optional<double> get(std::size_t t, std::size_t j) const;
  double at(std::size_t t, std::size_t j) const;  // throws when absent

  bool row_complete(std::size_t t) const;

  friend bool operator==(const MetricsLedger&, const MetricsLedger&) = default;

 private:
  void check(std::size_t t, std::size_t j) const;

  std::vector<std::vector<std::optional<double>>> rows_;  // rows_[t-1] has t entries
};

/// AA_t = (1/t) sum_{j<=t} acc[t][j]. Throws InvariantError when row t is incomplete.
double average_accuracy(const MetricsLedger& ledger, std::size_t t);

/// FR_t = (1/(t-1)) sum_{j<t} ( max_{j <= s <= t-1} acc[s][j] - acc[t][j] ).
/// Needs t >= 2 and rows 1..t complete.
double average_forgetting(const MetricsLedger& ledger, std::size_t t);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n-1); 0 for a single value
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

}  // namespace protoridge
