#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mktsim/random.hpp"
#include "mktsim/sf_metrics.hpp"

using namespace mktsim;
using namespace mktsim::sf;

namespace {
std::vector<std::optional<double>> constant_mids(std::size_t n, double v) {
  return std::vector<std::optional<double>>(n, v);
}
}  // namespace

TEST_CASE("compute_returns") {
  SECTION("constant mids give zero returns") {
    const auto r = compute_returns(constant_mids(61, 100.0), minutes(1), seconds(60));
    REQUIRE(r.size() == 60);
    for (double x : r) CHECK(x == 0.0);
  }

  SECTION("single step log return") {
    std::vector<std::optional<double>> mids{100.0, 105.0};
    const auto r = compute_returns(mids, minutes(1), minutes(1));
    REQUIRE(r.size() == 1);
    CHECK_THAT(r[0], Catch::Matchers::WithinAbs(0.04879016417, 1e-9));  // ln(1.05)
  }

  SECTION("series of exactly the horizon yields one return") {
    std::vector<std::optional<double>> mids{100.0, 101.0, 102.0};
    const auto r = compute_returns(mids, minutes(2), minutes(1));
    REQUIRE(r.size() == 1);
    CHECK_THAT(r[0], Catch::Matchers::WithinAbs(std::log(102.0 / 100.0), 1e-12));
  }

  SECTION("gaps are skipped") {
    std::vector<std::optional<double>> mids{100.0, std::nullopt, 102.0, 103.0};
    const auto r = compute_returns(mids, minutes(1), minutes(1));
    REQUIRE(r.size() == 1);  // only the 102 -> 103 pair is complete
    CHECK_THAT(r[0], Catch::Matchers::WithinAbs(std::log(103.0 / 102.0), 1e-12));
  }

  SECTION("length property with no gaps") {
    const auto r = compute_returns(constant_mids(100, 50.0), minutes(7), minutes(1));
    CHECK(r.size() == 100 - 7);
  }

  SECTION("too-short input yields empty output") {
    CHECK(compute_returns(constant_mids(5, 50.0), minutes(10), minutes(1)).empty());
  }
}

TEST_CASE("autocorrelation") {
  SECTION("alternating series has acf(1) = -1") {
    std::vector<double> r;
    for (int i = 0; i < 40; ++i) r.push_back(i % 2 == 0 ? 1.0 : -1.0);
    const auto acf = autocorrelation(r, 3);
    REQUIRE(acf);
    CHECK_THAT((*acf)[0], Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK_THAT((*acf)[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  SECTION("iid coin flips have near-zero acf") {
    auto rng = make_rng(42, 0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<double> r;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) r.push_back(coin(rng) == 0 ? -1.0 : 1.0);
    const auto acf = autocorrelation(r, 10);
    REQUIRE(acf);
    for (double v : *acf) CHECK(std::abs(v) <= 0.02);  // ~3/sqrt(n) Monte Carlo bound
  }

  SECTION("zero variance comes back empty, not NaN") {
    const std::vector<double> flat(50, 3.0);
    CHECK(!autocorrelation(flat, 5));
  }

  SECTION("insufficient data comes back empty") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    CHECK(!autocorrelation(r, 5));
  }

  SECTION("affine rescaling leaves the curve unchanged") {
    auto rng = make_rng(43, 0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> r, scaled;
    for (int i = 0; i < 500; ++i) {
      const double x = g(rng) + (i > 0 ? 0.4 * r.back() : 0.0);
      r.push_back(x);
      scaled.push_back(2.5 * x + 7.0);
    }
    const auto a = autocorrelation(r, 5);
    const auto b = autocorrelation(scaled, 5);
    REQUIRE(a);
    REQUIRE(b);
    for (std::size_t i = 0; i < a->size(); ++i)
      CHECK_THAT((*a)[i], Catch::Matchers::WithinAbs((*b)[i], 1e-10));
  }
}

TEST_CASE("distribution distance") {
  const std::vector<double> a{0.0, 1.0};
  const std::vector<double> b{0.0, 2.0};

  SECTION("identical samples are at distance zero") {
    CHECK(distribution_distance(a, a) == 0.0);
  }

  SECTION("disjoint supports are at distance one") {
    const std::vector<double> lo{1.0, 2.0, 3.0};
    const std::vector<double> hi{10.0, 11.0};
    CHECK(distribution_distance(lo, hi) == 1.0);
  }

  SECTION("hand-checked half distance") { CHECK(distribution_distance(a, b) == 0.5); }

  SECTION("symmetry and bounds on random samples") {
    auto rng = make_rng(44, 0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x, y;
      for (int i = 0; i < 100; ++i) x.push_back(g(rng));
      for (int i = 0; i < 137; ++i) y.push_back(g(rng) + 0.3);
      const double dxy = distribution_distance(x, y);
      const double dyx = distribution_distance(y, x);
      CHECK(dxy == dyx);
      CHECK(dxy >= 0.0);
      CHECK(dxy <= 1.0);
    }
  }

  SECTION("empty samples are rejected") {
    const std::vector<double> none;
    CHECK_THROWS_AS(distribution_distance(none, a), std::invalid_argument);
  }
}

TEST_CASE("sf distance matrix diagonal is zero") {
  FactSamples s1{"s1", {0.1, 0.2, -0.1}, {0.3, -0.2}, {0.5, 0.1, -0.3}};
  FactSamples s2{"s2", {0.4, 0.5, 0.6}, {0.9, 1.0}, {0.2, 0.2, 0.1}};
  const std::vector<FactSamples> all{s1, s2};
  const DistanceMatrix m = sf_distance_matrix(all);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(1, 1) == 0.0);
  CHECK(m.at(0, 1) == m.at(1, 0));
  CHECK(m.at(0, 1) > 0.0);
}

TEST_CASE("average-linkage clustering") {
  auto block_matrix = [] {
    DistanceMatrix m = make_matrix({"a", "b", "c", "d", "e"});
    // Blocks {0,1,2} and {3,4}: 0.1 inside, 0.9 across.
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        if (i == j) continue;
        const bool same = (i < 3) == (j < 3);
        m.at(i, j) = same ? 0.1 : 0.9;
      }
    return m;
  }();

  SECTION("blocks are recovered exactly at k=2") {
    const auto clusters = cluster_scenarios(block_matrix, 2);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0] == std::vector<int>{0, 1, 2});
    CHECK(clusters[1] == std::vector<int>{3, 4});
  }

  SECTION("k=n gives singletons") {
    const auto clusters = cluster_scenarios(block_matrix, 5);
    REQUIRE(clusters.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(clusters[static_cast<std::size_t>(i)] ==
                                      std::vector<int>{i});
  }

  SECTION("k=1 gives one cluster of everything") {
    const auto clusters = cluster_scenarios(block_matrix, 1);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0] == std::vector<int>{0, 1, 2, 3, 4});
  }

  SECTION("k>n is rejected") {
    CHECK_THROWS_AS(cluster_scenarios(block_matrix, 6), std::invalid_argument);
  }

  SECTION("separation summary sees the block structure") {
    const auto clusters = cluster_scenarios(block_matrix, 2);
    const auto s = separation(block_matrix, clusters);
    CHECK_THAT(s.mean_within, Catch::Matchers::WithinAbs(0.1, 1e-12));
    CHECK_THAT(s.mean_across, Catch::Matchers::WithinAbs(0.9, 1e-12));
  }
}

TEST_CASE("histogram dump") {
  const std::vector<double> data{0.0, 0.5, 1.0, 1.5, 2.0};
  const Histogram h = histogram(data, 4);
  REQUIRE(h.edges.size() == 5);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 2.0);
  std::int64_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 5);
}
