#include "protoridge/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "protoridge/types.hpp"

namespace protoridge {

MetricsLedger::MetricsLedger(std::size_t task_count) {
  rows_.reserve(task_count);
  for (std::size_t t = 1; t <= task_count; ++t) rows_.emplace_back(t);
}

void MetricsLedger::check(std::size_t t, std::size_t j) const {
  if (t < 1 || t > rows_.size() || j < 1 || j > t) {
    throw InvariantError(fmt::format("ledger: cell ({}, {}) is outside the lower triangle of a {}-task ledger", t, j,
                                     rows_.size()));
  }
}

void MetricsLedger::set(std::size_t t, std::size_t j, double accuracy) {
  check(t, j);
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw InvariantError(fmt::format("ledger: accuracy {} at ({}, {}) is outside [0, 1]", accuracy, t, j));
  }
  rows_[t - 1][j - 1] = accuracy;
}

std::optional<double> MetricsLedger::get(std::size_t t, std::size_t j) const {
  if (t < 1 || t > rows_.size() || j < 1 || j > t) return std::nullopt;
  return rows_[t - 1][j - 1];
}

double MetricsLedger::at(std::size_t t, std::size_t j) const {
  check(t, j);
  const auto& v = rows_[t - 1][j - 1];
  if (!v) throw InvariantError(fmt::format("ledger: cell ({}, {}) has not been filled", t, j));
  return *v;
}

bool MetricsLedger::row_complete(std::size_t t) const {
  if (t < 1 || t > rows_.size()) return false;
  return std::all_of(rows_[t - 1].begin(), rows_[t - 1].end(), [](const auto& v) { return v.has_value(); });
}

double average_accuracy(const MetricsLedger& ledger, std::size_t t) {
  if (!ledger.row_complete(t)) throw InvariantError(fmt::format("average accuracy: row {} is incomplete", t));
  double sum = 0.0;
  for (std::size_t j = 1; j <= t; ++j) sum += ledger.at(t, j);
  return sum / static_cast<double>(t);
}

double average_forgetting(const MetricsLedger& ledger, std::size_t t) {
  if (t < 2) throw InvariantError("average forgetting: needs t >= 2");
  for (std::size_t s = 1; s <= t; ++s) {
    if (!ledger.row_complete(s)) throw InvariantError(fmt::format("average forgetting: row {} is incomplete", s));
  }
  double sum = 0.0;
  for (std::size_t j = 1; j < t; ++j) {
    double best = ledger.at(j, j);
    for (std::size_t s = j + 1; s < t; ++s) best = std::max(best, ledger.at(s, j));
    sum += best - ledger.at(t, j);
  }
  return sum / static_cast<double>(t - 1);
}

MeanStd mean_std(std::span<const double> values) {
  // Welford: identical values give exactly their value and a zero std.
  MeanStd out;
  double m2 = 0.0;
  for (double v : values) {
    ++out.n;
    const double delta = v - out.mean;
    out.mean += delta / static_cast<double>(out.n);
    m2 += delta * (v - out.mean);
  }
  if (out.n > 1) out.std = std::sqrt(m2 / static_cast<double>(out.n - 1));
  return out;
}

}  // namespace protoridge
