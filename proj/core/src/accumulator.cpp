#include "protoridge/accumulator.hpp"

#include <cstring>
#include <numeric>

#include "binary_io.hpp"
#include "protoridge/rng.hpp"

namespace protoridge {

namespace {

constexpr std::uint32_t kStaVersion = 1;

void mix(std::uint64_t& h, std::uint64_t word) { h = splitmix64(h ^ word); }

void mix_doubles(std::uint64_t& h, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data + i, sizeof(bits));
    mix(h, bits);
  }
}

}  // namespace

SufficientStats::SufficientStats(std::uint32_t q_dim, std::uint32_t class_count)
    : q_dim_(q_dim), class_count_(class_count) {
  if (q_dim == 0 || class_count == 0) {
    throw InvariantError("stats: dimensions must be positive (got Q=" + std::to_string(q_dim) +
                         ", C=" + std::to_string(class_count) + ")");
  }
  gram_ = Matrix::Zero(q_dim, q_dim);
  prototypes_ = Matrix::Zero(q_dim, class_count);
  counts_.assign(class_count, 0);
}

std::uint64_t SufficientStats::samples_seen() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void SufficientStats::update(const RowMatrix& features, std::span<const std::uint32_t> labels) {
  if (features.cols() != static_cast<long>(q_dim_)) {
    throw DimensionError("stats update: feature width " + std::to_string(features.cols()) + " != Q " +
                         std::to_string(q_dim_));
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DimensionError("stats update: " + std::to_string(features.rows()) + " feature rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count_) {
      throw InvariantError("stats update: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                           " is not below C=" + std::to_string(class_count_));
    }
  }
  if (!features.allFinite()) throw InvariantError("stats update: non-finite feature value");
  if (labels.empty()) return;

  // Blocked V^T V into the upper triangle, then mirror.
  gram_.selfadjointView<Eigen::Upper>().rankUpdate(features.transpose());
  gram_.triangularView<Eigen::StrictlyLower>() = gram_.transpose();

  for (std::size_t i = 0; i < labels.size(); ++i) {
    prototypes_.col(labels[i]) += features.row(static_cast<long>(i)).transpose();
    ++counts_[labels[i]];
  }
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  if (other.q_dim_ != q_dim_ || other.class_count_ != class_count_) {
    throw DimensionError("stats merge: (Q=" + std::to_string(q_dim_) + ", C=" + std::to_string(class_count_) +
                         ") vs (Q=" + std::to_string(other.q_dim_) + ", C=" + std::to_string(other.class_count_) +
                         ")");
  }
  gram_ += other.gram_;
  prototypes_ += other.prototypes_;
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += other.counts_[c];
  return *this;
}

std::uint64_t SufficientStats::fingerprint() const {
  std::uint64_t h = fnv1a("STA1");
  mix(h, q_dim_);
  mix(h, class_count_);
  mix_doubles(h, gram_.data(), static_cast<std::size_t>(gram_.size()));
  mix_doubles(h, prototypes_.data(), static_cast<std::size_t>(prototypes_.size()));
  for (auto c : counts_) mix(h, c);
  return h;
}

std::vector<char> SufficientStats::snapshot() const {
  detail::ByteWriter w;
  w.reserve(sta1_size(q_dim_, class_count_));
  w.magic("STA1");
  w.put<std::uint32_t>(q_dim_);
  w.put<std::uint32_t>(class_count_);
  w.put<std::uint32_t>(kStaVersion);
  for (std::uint32_t i = 0; i < q_dim_; ++i) {
    for (std::uint32_t j = 0; j < q_dim_; ++j) w.put<double>(gram_(i, j));
  }
  for (std::uint32_t i = 0; i < q_dim_; ++i) {
    for (std::uint32_t j = 0; j < class_count_; ++j) w.put<double>(prototypes_(i, j));
  }
  for (auto c : counts_) w.put<std::uint64_t>(c);
  return w.take();
}

SufficientStats SufficientStats::restore(std::span<const char> bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "STA1 snapshot");
  r.expect_magic("STA1");
  const auto q = r.get<std::uint32_t>("Q");
  const auto c = r.get<std::uint32_t>("C");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kStaVersion) throw FormatError("STA1 snapshot: unsupported version " + std::to_string(version));
  if (q == 0 || c == 0) throw FormatError("STA1 snapshot: zero dimension in header");
  if (bytes.size() != sta1_size(q, c)) {
    throw FormatError("STA1 snapshot: size " + std::to_string(bytes.size()) + " does not match header (expected " +
                      std::to_string(sta1_size(q, c)) + ")");
  }

  SufficientStats s(q, c);
  for (std::uint32_t i = 0; i < q; ++i) {
    for (std::uint32_t j = 0; j < q; ++j) s.gram_(i, j) = r.get<double>("G");
  }
  for (std::uint32_t i = 0; i < q; ++i) {
    for (std::uint32_t j = 0; j < c; ++j) s.prototypes_(i, j) = r.get<double>("K");
  }
  for (auto& n : s.counts_) n = r.get<std::uint64_t>("counts");
  for (std::uint32_t i = 0; i < q; ++i) {
    for (std::uint32_t j = i + 1; j < q; ++j) {
      if (s.gram_(i, j) != s.gram_(j, i)) throw FormatError("STA1 snapshot: G is not symmetric");
    }
  }
  return s;
}

}  // namespace protoridge
