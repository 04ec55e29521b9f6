#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kzsketch/coreset.hpp"
#include "kzsketch/error.hpp"
#include "support.hpp"

using namespace kz;

namespace {

bool is_member(const GridDataset& g, std::span<const double> c) {
  for (std::size_t i = 0; i < g.n; ++i) {
    bool eq = true;
    for (std::size_t j = 0; j < g.d; ++j) eq = eq && static_cast<double>(g.row(i)[j]) == c[j];
    if (eq) return true;
  }
  return false;
}

GridDataset head(const GridDataset& g, std::size_t m) {
  GridDataset out(m, g.d, g.delta);
  std::copy_n(g.coords.begin(), m * g.d, out.coords.begin());
  return out;
}

// Exhaustive optimum over all 3-subsets of the data points.
double exhaustive_opt3(const GridDataset& g, const ZRational& z) {
  auto p = RealDataset::from_grid(g);
  double best = 1e300;
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t b = a + 1; b < g.n; ++b)
      for (std::size_t c = b + 1; c < g.n; ++c) {
        CenterSet cs(0, g.d);
        cs.push_back(p.row(a));
        cs.push_back(p.row(b));
        cs.push_back(p.row(c));
        best = std::min(best, kztest::brute_cost(p, {}, cs, z.value()));
      }
  return best;
}

}  // namespace

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 100; ++t) seen.insert(derive_seed(42, t));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("approx_centers on k distinct points returns those points") {
  GridDataset g(3, 2, 10);
  g.coords = {1, 1, 5, 5, 9, 2};
  auto ac = approx_centers(g, 3, ZRational(2, 1), 1);
  CHECK(ac.cost == 0.0);
  std::multiset<std::size_t> idx(ac.source_indices.begin(), ac.source_indices.end());
  CHECK(idx == std::multiset<std::size_t>{0, 1, 2});
  CHECK_FALSE(ac.k_exceeds_n);
}

TEST_CASE("approx_centers with a single point") {
  GridDataset g(1, 3, 10);
  g.coords = {4, 5, 6};
  auto ac = approx_centers(g, 4, ZRational(1, 1), 9);
  CHECK(ac.centers.n == 4);
  CHECK(ac.cost == 0.0);
  CHECK(ac.k_exceeds_n);
  for (std::size_t j = 0; j < 4; ++j) CHECK(ac.source_indices[j] == 0);
}

TEST_CASE("approx_centers output is a subset of the dataset and deterministic") {
  auto g = kztest::random_grid(300, 6, 100, 5);
  for (auto z : {ZRational(1, 1), ZRational(2, 1)}) {
    auto a = approx_centers(g, 5, z, 77);
    auto b = approx_centers(g, 5, z, 77);
    CHECK(a.centers.coords == b.centers.coords);
    for (std::size_t j = 0; j < a.centers.n; ++j) CHECK(is_member(g, a.centers.row(j)));
    CHECK(a.cost == doctest::Approx(cost(g, a.centers, z)).epsilon(1e-12));
  }
}

TEST_CASE("approx_centers is within 25x of the exhaustive optimum on small instances") {
  auto z = ZRational(2, 1);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto g = kztest::random_grid(200, 4, 64, 100 + s);
    auto sub = head(g, 12);
    double opt = exhaustive_opt3(sub, z);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto ac = approx_centers(sub, 3, z, seed);
      CHECK(ac.cost <= 25.0 * opt);
    }
  }
}

TEST_CASE("sample size formula") {
  CHECK(sensitivity_sample_size(100000, 4, 16, 0.2) ==
        static_cast<std::size_t>(std::ceil(4.0 / 0.04 * (16.0 + std::log2(100.0)))));
  CHECK(sensitivity_sample_size(50, 4, 16, 0.2) == 50);
  CoresetOptions o;
  o.c0 = 0.5;
  o.delta = 0.5;
  CHECK(sensitivity_sample_size(100000, 2, 3, 0.5, o) == 16);
}

TEST_CASE("identity coreset") {
  auto g = kztest::random_grid(64, 3, 16, 1);
  auto cs = build_coreset(g, 2, ZRational(2, 1), 0.1, CoresetMethod::Identity, 0);
  CHECK(cs.size() == 64);
  CHECK(std::all_of(cs.weights.begin(), cs.weights.end(), [](double w) { return w == 1.0; }));
  CHECK(cs.weight_sum() == 64.0);
  CHECK(weight_sum_check(cs));
  auto c = kztest::random_centers(g, 3, 2);
  CHECK(weighted_cost(cs.points, cs.weights, c, ZRational(2, 1)) == cost(g, c, ZRational(2, 1)));

  auto doubled = cs;
  for (auto& w : doubled.weights) w *= 2.0;
  CHECK_FALSE(weight_sum_check(doubled));
}

TEST_CASE("sensitivity coreset approximates cost on random center sets") {
  auto g = kztest::random_grid(2000, 16, 1024, 31);
  const double eps = 0.2;
  auto z = ZRational(2, 1);
  auto cs = build_coreset(g, 4, z, eps, CoresetMethod::Sensitivity, 5);
  CHECK(cs.size() <= 2000);
  CHECK(weight_sum_check(cs));
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto c = kztest::random_centers(g, 4, 1000 + t);
    worst = std::max(worst, kztest::rel_err(weighted_cost(cs.points, cs.weights, c, z), cost(g, c, z)));
  }
  CHECK(worst <= eps);
}

TEST_CASE("sensitivity coreset weights sum to about n over seeds") {
  auto g = kztest::random_grid(1500, 8, 256, 3);
  for (double eps : {0.1, 0.2, 0.4}) {
    for (auto z : {ZRational(1, 1), ZRational(2, 1)}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CoresetOptions o;
        o.c0 = 0.05;  // small samples make the check meaningful
        auto cs = build_coreset(g, 3, z, eps, CoresetMethod::Sensitivity, seed, o);
        CHECK(cs.size() < 1500);
        CHECK(weight_sum_check(cs));
      }
    }
  }
}

TEST_CASE("sensitivity estimate is unbiased") {
  auto g = kztest::random_grid(300, 4, 64, 8);
  auto z = ZRational(2, 1);
  CoresetOptions o;
  o.c0 = 0.2;
  for (std::uint64_t cseed = 0; cseed < 3; ++cseed) {
    auto c = kztest::random_centers(g, 3, 500 + cseed);
    const double exact = cost(g, c, z);
    double sum = 0.0, sum2 = 0.0;
    const int runs = 200;
    for (int s = 0; s < runs; ++s) {
      auto cs = build_coreset(g, 3, z, 0.3, CoresetMethod::Sensitivity, 10000 + s, o);
      double v = weighted_cost(cs.points, cs.weights, c, z);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / runs;
    const double var = (sum2 - runs * mean * mean) / (runs - 1);
    const double se = std::sqrt(var / runs);
    CHECK(std::abs(mean - exact) <= 2.0 * se);
  }
}

TEST_CASE("weighted coreset input") {
  RealDataset p(4, 1);
  p.coords = {1, 2, 3, 4};
  std::vector<double> w{1, 0, 2, 1};
  auto cs = build_coreset_weighted(p, w, 4, 1, ZRational(2, 1), 0.5, 3);
  for (auto i : cs.source_indices) CHECK(i != 1);  // zero weight is never sampled
  std::vector<double> neg{1, -1, 1, 1};
  CHECK_THROWS_AS(build_coreset_weighted(p, neg, 4, 1, ZRational(2, 1), 0.5, 3), Error);
}
