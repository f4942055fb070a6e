#include <doctest.h>

#include <cmath>
#include <limits>

#include <protoridge/ncm.hpp>
#include <protoridge/synth.hpp>

#include "oracles.hpp"

using namespace protoridge;

namespace {

EmbeddingBatch batch(std::initializer_list<std::initializer_list<double>> rows, Labels labels) {
  const long n = static_cast<long>(rows.size());
  const long h = static_cast<long>(rows.begin()->size());
  RowMatrix v(n, h);
  long i = 0;
  for (const auto& r : rows) {
    long j = 0;
    for (double x : r) v(i, j++) = x;
    ++i;
  }
  return EmbeddingBatch{static_cast<std::uint32_t>(h), v, std::move(labels)};
}

// Independent cosine NCM: explicit per-class means and pairwise cosines.
Labels cosine_oracle(const EmbeddingBatch& train, const EmbeddingBatch& test, std::uint32_t classes) {
  const std::size_t h = train.dim;
  std::vector<std::vector<double>> mean(classes, std::vector<double>(h, 0.0));
  std::vector<double> count(classes, 0.0);
  for (std::size_t i = 0; i < train.count(); ++i) {
    for (std::size_t d = 0; d < h; ++d) mean[train.labels[i]][d] += train.vectors(static_cast<long>(i), static_cast<long>(d));
    count[train.labels[i]] += 1.0;
  }
  Labels out;
  for (std::size_t i = 0; i < test.count(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::uint32_t c = 0; c < classes; ++c) {
      if (count[c] == 0) continue;
      double dot = 0, nf = 0, np = 0;
      for (std::size_t d = 0; d < h; ++d) {
        const double f = test.vectors(static_cast<long>(i), static_cast<long>(d));
        const double p = mean[c][d] / count[c];
        dot += f * p;
        nf += f * f;
        np += p * p;
      }
      const double cos = dot / (std::sqrt(nf) * std::sqrt(np));
      if (cos > best) {
        best = cos;
        arg = c;
      }
    }
    out.push_back(arg);
  }
  return out;
}

}  // namespace

TEST_CASE("prototype is the class mean") {
  NcmModel m(2, 2);
  m.update(batch({{1, 1}, {3, 3}}, {0, 0}));
  CHECK(m.prototypes()(0, 0) == 2.0);
  CHECK(m.prototypes()(0, 1) == 2.0);
  CHECK(m.prototypes()(1, 0) == 0.0);
  CHECK(m.seen(0));
  CHECK_FALSE(m.seen(1));
}

TEST_CASE("empty update leaves the model unchanged") {
  NcmModel m(2, 2);
  m.update(batch({{1, 1}}, {1}));
  const auto before = m.prototypes();
  m.update(EmbeddingBatch::empty(2));
  CHECK(m.prototypes() == before);
  CHECK(m.counts() == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("streaming mean equals the batch mean") {
  const RowMatrix v = oracle::gaussian_matrix(100, 5, 4);
  NcmModel m(5, 1);
  for (long i = 0; i < 100; ++i) m.update(EmbeddingBatch{5, v.row(i), {0}});
  const Eigen::RowVectorXd mean = v.colwise().mean();
  CHECK((m.prototypes().row(0) - mean).norm() / mean.norm() < 1e-12);
}

TEST_CASE("cosine prediction is scale invariant") {
  NcmModel m(3, 2);
  m.update(batch({{1, 0, 0}, {0, 1, 0}}, {0, 1}));
  CHECK(m.predict(batch({{10, 0, 0}}, {0})) == Labels{0});
  CHECK(m.predict(batch({{0.001, 0.0005, 0}}, {0})) == Labels{0});
  CHECK(m.predict(batch({{0, 1e6, 0}}, {0})) == Labels{1});
}

TEST_CASE("equal angles go to the smaller class") {
  NcmModel m(2, 2);
  m.update(batch({{1, 0}, {0, 1}}, {0, 1}));
  CHECK(m.predict(batch({{1, 1}}, {0})) == Labels{0});
}

TEST_CASE("unseen classes never win and zero features fall back to the first seen") {
  NcmModel m(2, 3);
  m.update(batch({{1, 0}}, {2}));
  CHECK(m.predict(batch({{-1, 0}}, {0})) == Labels{2});
  CHECK(m.predict(batch({{0, 0}}, {0})) == Labels{2});
  CHECK_THROWS_AS(NcmModel(2, 3).predict(batch({{1, 0}}, {0})), InvariantError);
}

TEST_CASE("three-class fixture agrees with the brute-force oracle") {
  const auto s = gen_gaussian_mixture(3, 6, 60, 1.5, 12);
  const auto m = ncm_update(NcmModel(6, 3), s.splits.train);
  CHECK(ncm_predict(m, s.splits.test) == cosine_oracle(s.splits.train, s.splits.test, 3));
  CHECK(ncm_predict(m, s.splits.validation) == cosine_oracle(s.splits.train, s.splits.validation, 3));
}
