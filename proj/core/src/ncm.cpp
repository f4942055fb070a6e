#include "protoridge/ncm.hpp"

#include <limits>

namespace protoridge {

NcmModel::NcmModel(std::uint32_t dim, std::uint32_t class_count) {
  if (dim == 0 || class_count == 0) throw InvariantError("ncm: dimensions must be positive");
  sums_ = RowMatrix::Zero(class_count, dim);
  counts_.assign(class_count, 0);
}

RowMatrix NcmModel::prototypes() const {
  RowMatrix p = RowMatrix::Zero(sums_.rows(), sums_.cols());
  for (long c = 0; c < sums_.rows(); ++c) {
    if (counts_[static_cast<std::size_t>(c)] > 0) {
      p.row(c) = sums_.row(c) / static_cast<double>(counts_[static_cast<std::size_t>(c)]);
    }
  }
  return p;
}

void NcmModel::update(const EmbeddingBatch& batch) {
  if (batch.count() == 0) return;
  if (batch.dim != dim()) {
    throw DimensionError("ncm update: batch dim " + std::to_string(batch.dim) + " != " + std::to_string(dim()));
  }
  batch.validate(class_count());
  for (std::size_t i = 0; i < batch.count(); ++i) {
    sums_.row(batch.labels[i]) += batch.vectors.row(static_cast<long>(i));
    ++counts_[batch.labels[i]];
  }
}

Labels NcmModel::predict(const EmbeddingBatch& batch) const {
  if (batch.dim != dim()) {
    throw DimensionError("ncm predict: batch dim " + std::to_string(batch.dim) + " != " + std::to_string(dim()));
  }
  std::vector<std::uint32_t> seen_classes;
  for (std::uint32_t c = 0; c < class_count(); ++c) {
    if (counts_[c] > 0) seen_classes.push_back(c);
  }
  if (seen_classes.empty()) throw InvariantError("ncm predict: no class has been seen");

  const RowMatrix protos = prototypes();
  std::vector<double> proto_norm(class_count(), 0.0);
  for (auto c : seen_classes) proto_norm[c] = protos.row(c).norm();

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Labels out(batch.count());
  for (std::size_t i = 0; i < batch.count(); ++i) {
    const auto f = batch.vectors.row(static_cast<long>(i));
    const double f_norm = f.norm();
    std::uint32_t best = seen_classes.front();
    double best_sim = kNegInf;
    bool first = true;
    for (auto c : seen_classes) {
      const double sim = (f_norm == 0.0 || proto_norm[c] == 0.0) ? kNegInf : f.dot(protos.row(c)) / (f_norm * proto_norm[c]);
      if (first || sim > best_sim) {
        best = c;
        best_sim = sim;
        first = false;
      }
    }
    out[i] = best;
  }
  return out;
}

}  // namespace protoridge
