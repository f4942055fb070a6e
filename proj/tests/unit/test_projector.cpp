#include <doctest.h>

#include <cmath>

#include <protoridge/projector.hpp>
#include <protoridge/rng.hpp>

#include "oracles.hpp"
#include "scratch.hpp"

using namespace protoridge;

TEST_CASE("full-size projection is reproducible from its seed") {
  const auto a = make_projection(2048, 8192, 7, Nonlinearity::kRelu);
  const auto b = make_projection(2048, 8192, 7, Nonlinearity::kRelu);
  CHECK(a.weights().rows() == 2048);
  CHECK(a.weights().cols() == 8192);
  CHECK(a.weights() == b.weights());
  CHECK(a.parameter_count() == 2048ull * 8192ull);
  CHECK(make_projection(2048, 8192, 8).weights()(0, 0) != a.weights()(0, 0));
}

TEST_CASE("small projection has mean near zero") {
  const auto p = make_projection(4, 4, 1);
  const double mean = p.weights().mean();
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(16.0));
}

TEST_CASE("entries follow the documented generator in row-major order") {
  const auto p = make_projection(3, 5, 11);
  Rng rng(11);
  for (long i = 0; i < 3; ++i) {
    for (long j = 0; j < 5; ++j) CHECK(p.weights()(i, j) == rng.normal());
  }
}

TEST_CASE("large projection moments match the standard normal") {
  const auto p = make_projection(64, 1024, 3);
  const double n = static_cast<double>(p.weights().size());
  const double mean = p.weights().mean();
  const double var = (p.weights().array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("zero dimensions are rejected") {
  CHECK_THROWS_AS(make_projection(4, 0, 1), InvariantError);
  CHECK_THROWS_AS(make_projection(0, 4, 1), InvariantError);
}

TEST_CASE("identity weights pass features through") {
  const auto id = ProjectionMatrix::from_weights(Matrix::Identity(2, 2), Nonlinearity::kIdentity);
  RowMatrix f(1, 2);
  f << 1, -2;
  const RowMatrix out = id.apply(f);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == -2.0);
}

TEST_CASE("relu clamps negatives") {
  const auto id = ProjectionMatrix::from_weights(Matrix::Identity(2, 2), Nonlinearity::kRelu);
  RowMatrix f(1, 2);
  f << 1, -2;
  const RowMatrix out = id.apply(f);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 0.0);
}

TEST_CASE("basis input selects a weight row, matching a naive matvec") {
  for (auto nl : {Nonlinearity::kIdentity, Nonlinearity::kRelu}) {
    const auto p = make_projection(3, 5, 11, nl);
    RowMatrix x = RowMatrix::Zero(1, 3);
    x(0, 0) = 1.0;
    const RowMatrix got = p.apply(x);
    const auto expect = oracle::matmul(oracle::from_eigen(x), oracle::from_eigen(p.weights()));
    for (long j = 0; j < 5; ++j) {
      const double w = expect[0][static_cast<std::size_t>(j)];
      CHECK(w == p.weights()(0, j));
      CHECK(got(0, j) == doctest::Approx(nl == Nonlinearity::kRelu ? std::max(w, 0.0) : w).epsilon(1e-15));
    }
  }
}

TEST_CASE("random batch matches the naive oracle") {
  const auto p = make_projection(6, 9, 4, Nonlinearity::kRelu);
  const RowMatrix x = oracle::gaussian_matrix(10, 6, 99);
  const RowMatrix got = p.apply(x);
  auto expect = oracle::matmul(oracle::from_eigen(x), oracle::from_eigen(p.weights()));
  for (auto& row : expect) {
    for (auto& v : row) v = std::max(v, 0.0);
  }
  CHECK(oracle::rel_frobenius(got, expect) < 1e-14);
}

TEST_CASE("project checks the batch width") {
  const auto p = make_projection(3, 5, 1);
  CHECK_THROWS_AS(project(p, EmbeddingBatch::empty(4)), DimensionError);
  const auto f = project(p, EmbeddingBatch{3, RowMatrix::Ones(2, 3), {0, 1}});
  CHECK(f.features.rows() == 2);
  CHECK(f.width() == 5);
  CHECK(f.labels == Labels{0, 1});
}

TEST_CASE("identity features copy the embeddings") {
  const EmbeddingBatch b{2, oracle::gaussian_matrix(3, 2, 1), {0, 1, 0}};
  const auto f = identity_features(b);
  CHECK(f.features == b.vectors);
  CHECK(f.labels == b.labels);
}

TEST_CASE("PRJ1 checkpoint is 28 bytes and regenerates the weights") {
  Scratch dir;
  const auto p = make_projection(16, 32, 1234, Nonlinearity::kIdentity);
  save_projection(p, dir / "p.prj");
  CHECK(std::filesystem::file_size(dir / "p.prj") == 28);
  CHECK(slurp_bytes(dir / "p.prj").substr(0, 4) == "PRJ1");
  const auto q = load_projection(dir / "p.prj");
  CHECK(q.seed() == 1234);
  CHECK(q.nonlinearity() == Nonlinearity::kIdentity);
  CHECK(q.weights() == p.weights());
}

TEST_CASE("PRJ1 rejects bad input") {
  Scratch dir;
  save_projection(make_projection(2, 2, 1), dir / "p.prj");
  std::string bytes = slurp_bytes(dir / "p.prj");
  SUBCASE("truncated") {
    spit_bytes(dir / "p.prj", bytes.substr(0, 20));
    CHECK_THROWS_AS(load_projection(dir / "p.prj"), FormatError);
  }
  SUBCASE("unknown distribution") {
    bytes[24] = 3;
    spit_bytes(dir / "p.prj", bytes);
    CHECK_THROWS_AS(load_projection(dir / "p.prj"), FormatError);
  }
  SUBCASE("unseeded weights cannot be saved") {
    CHECK_THROWS_AS(save_projection(ProjectionMatrix::from_weights(Matrix::Identity(2, 2), Nonlinearity::kRelu),
                                    dir / "x.prj"),
                    InvariantError);
  }
}
