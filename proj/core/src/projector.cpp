#include "protoridge/projector.hpp"

#include "binary_io.hpp"
#include "protoridge/rng.hpp"

namespace protoridge {

namespace {

constexpr std::uint32_t kNormalDistribution = 0;

Matrix generate_weights(std::uint32_t in_dim, std::uint32_t out_dim, std::uint64_t seed) {
  if (in_dim == 0 || out_dim == 0) {
    throw InvariantError("projection: dimensions must be positive (got " + std::to_string(in_dim) + "x" +
                         std::to_string(out_dim) + ")");
  }
  Matrix w(in_dim, out_dim);
  Rng rng(seed);
  for (std::uint32_t i = 0; i < in_dim; ++i) {
    for (std::uint32_t j = 0; j < out_dim; ++j) w(i, j) = rng.normal();
  }
  return w;
}

}  // namespace

std::string to_string(Nonlinearity n) { return n == Nonlinearity::kRelu ? "relu" : "identity"; }

ProjectionMatrix::ProjectionMatrix(std::uint32_t in_dim, std::uint32_t out_dim, std::uint64_t seed,
                                   Nonlinearity nonlinearity)
    : ProjectionMatrix(generate_weights(in_dim, out_dim, seed), seed, true, nonlinearity) {}

ProjectionMatrix::ProjectionMatrix(Matrix weights, std::uint64_t seed, bool seeded, Nonlinearity nonlinearity)
    : weights_(std::move(weights)), seed_(seed), seeded_(seeded), nonlinearity_(nonlinearity) {}

ProjectionMatrix ProjectionMatrix::from_weights(Matrix weights, Nonlinearity nonlinearity) {
  if (weights.rows() == 0 || weights.cols() == 0) throw InvariantError("projection: empty weight matrix");
  return ProjectionMatrix(std::move(weights), 0, false, nonlinearity);
}

RowMatrix ProjectionMatrix::apply(const RowMatrix& rows) const {
  if (rows.cols() != weights_.rows()) {
    throw DimensionError("projection: input width " + std::to_string(rows.cols()) + " != in_dim " +
                         std::to_string(weights_.rows()));
  }
  RowMatrix out = rows * weights_;
  if (nonlinearity_ == Nonlinearity::kRelu) out = out.cwiseMax(0.0);
  return out;
}

ProjectionMatrix make_projection(std::uint32_t in_dim, std::uint32_t out_dim, std::uint64_t seed,
                                 Nonlinearity nonlinearity) {
  return ProjectionMatrix(in_dim, out_dim, seed, nonlinearity);
}

FeatureBatch project(const ProjectionMatrix& p, const EmbeddingBatch& batch) {
  if (batch.dim != p.in_dim()) {
    throw DimensionError("project: batch dim " + std::to_string(batch.dim) + " != projection in_dim " +
                         std::to_string(p.in_dim()));
  }
  return FeatureBatch{p.apply(batch.vectors), batch.labels};
}

FeatureBatch identity_features(const EmbeddingBatch& batch) { return FeatureBatch{batch.vectors, batch.labels}; }

void save_projection(const ProjectionMatrix& p, const std::filesystem::path& path) {
  if (!p.seeded()) throw InvariantError("projection: explicit-weight projections cannot be checkpointed");
  detail::ByteWriter w;
  w.magic("PRJ1");
  w.put<std::uint32_t>(p.in_dim());
  w.put<std::uint32_t>(p.out_dim());
  w.put<std::uint64_t>(p.seed());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.nonlinearity()));
  w.put<std::uint32_t>(kNormalDistribution);
  detail::write_file(path.string(), w.bytes());
}

ProjectionMatrix load_projection(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  const std::string what = "PRJ1 '" + path.string() + "'";
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  r.expect_magic("PRJ1");
  const auto in_dim = r.get<std::uint32_t>("in_dim");
  const auto out_dim = r.get<std::uint32_t>("out_dim");
  const auto seed = r.get<std::uint64_t>("seed");
  const auto tag = r.get<std::uint32_t>("nonlinearity");
  const auto dist = r.get<std::uint32_t>("distribution");
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes");
  if (tag > 1) throw FormatError(what + ": unknown nonlinearity tag " + std::to_string(tag));
  if (dist != kNormalDistribution) throw FormatError(what + ": unknown distribution tag " + std::to_string(dist));
  return ProjectionMatrix(in_dim, out_dim, seed, static_cast<Nonlinearity>(tag));
}

}  // namespace protoridge
