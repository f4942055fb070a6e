#include <doctest.h>

#include <random>

#include <protoridge/metrics.hpp>

#include "oracles.hpp"

using namespace protoridge;

namespace {

struct RandomLedger {
  MetricsLedger ledger;
  oracle::Dense table;  // full T x T, upper cells hold junk the formulas must ignore
};

RandomLedger random_ledger(std::size_t T, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomLedger r{MetricsLedger(T), oracle::zeros(T, T)};
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t j = 1; j <= T; ++j) {
      const double v = u(eng);
      if (j <= t) {
        r.ledger.set(t, j, v);
        r.table[t - 1][j - 1] = v;
      } else {
        r.table[t - 1][j - 1] = 99.0;
      }
    }
  }
  return r;
}

}  // namespace

TEST_CASE("hand case: average accuracy of [0.9, 0.8, 1.0]") {
  MetricsLedger l(3);
  for (std::size_t t = 1; t <= 3; ++t) {
    for (std::size_t j = 1; j <= t; ++j) l.set(t, j, 0.5);
  }
  l.set(3, 1, 0.9);
  l.set(3, 2, 0.8);
  l.set(3, 3, 1.0);
  CHECK(average_accuracy(l, 3) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("hand case: two-stage forgetting") {
  MetricsLedger l(2);
  l.set(1, 1, 0.9);
  l.set(2, 1, 0.7);
  l.set(2, 2, 1.0);
  CHECK(average_forgetting(l, 2) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("constant ledgers") {
  for (double c : {0.0, 0.37, 1.0}) {
    MetricsLedger l(5);
    for (std::size_t t = 1; t <= 5; ++t) {
      for (std::size_t j = 1; j <= t; ++j) l.set(t, j, c);
    }
    for (std::size_t t = 1; t <= 5; ++t) CHECK(average_accuracy(l, t) == doctest::Approx(c).epsilon(1e-15));
    for (std::size_t t = 2; t <= 5; ++t) CHECK(average_forgetting(l, t) == 0.0);
  }
}

TEST_CASE("improving columns give non-positive forgetting") {
  MetricsLedger l(3);
  l.set(1, 1, 0.5);
  l.set(2, 1, 0.6);
  l.set(2, 2, 0.5);
  l.set(3, 1, 0.8);
  l.set(3, 2, 0.9);
  l.set(3, 3, 0.5);
  CHECK(average_forgetting(l, 3) < 0.0);
  CHECK(average_forgetting(l, 3) == doctest::Approx(((0.6 - 0.8) + (0.5 - 0.9)) / 2));
}

TEST_CASE("random ledgers match the spreadsheet recomputation exactly") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const std::size_t T = 2 + seed % 9;
    const auto r = random_ledger(T, seed);
    for (std::size_t t = 1; t <= T; ++t) {
      CHECK(average_accuracy(r.ledger, t) == oracle::spreadsheet_aa(r.table, t));
      if (t >= 2) CHECK(average_forgetting(r.ledger, t) == oracle::spreadsheet_fr(r.table, t));
    }
  }
}

TEST_CASE("ledger bounds and triangularity") {
  MetricsLedger l(3);
  CHECK_THROWS_AS(l.set(1, 2, 0.5), InvariantError);
  CHECK_THROWS_AS(l.set(4, 1, 0.5), InvariantError);
  CHECK_THROWS_AS(l.set(0, 0, 0.5), InvariantError);
  CHECK_THROWS_AS(l.set(2, 1, 1.5), InvariantError);
  CHECK_THROWS_AS(l.set(2, 1, -0.1), InvariantError);
  CHECK_FALSE(l.get(2, 1).has_value());
  CHECK_THROWS_AS(l.at(2, 1), InvariantError);
  CHECK_THROWS_AS(average_accuracy(l, 1), InvariantError);
  l.set(1, 1, 1.0);
  CHECK(l.row_complete(1));
  CHECK_THROWS_AS(average_forgetting(l, 1), InvariantError);
  CHECK_THROWS_AS(average_forgetting(l, 2), InvariantError);
}

TEST_CASE("mean and sample standard deviation") {
  const double two[] = {0.8, 1.0};
  const auto m = mean_std(two);
  CHECK(m.mean == doctest::Approx(0.9));
  CHECK(m.std == doctest::Approx(0.1414213562).epsilon(1e-9));

  const double same[] = {0.7, 0.7, 0.7};
  CHECK(mean_std(same).std == 0.0);
  const double one[] = {0.4};
  CHECK(mean_std(one).std == 0.0);

  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> five(5);
  for (auto& v : five) v = u(eng);
  const auto s = mean_std(five);
  CHECK(std::abs(s.mean - oracle::textbook_mean(five)) <= 1e-12);
  CHECK(std::abs(s.std - oracle::textbook_sample_std(five)) <= 1e-12);
}
