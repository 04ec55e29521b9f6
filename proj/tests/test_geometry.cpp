#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kzsketch/anglelab.hpp"
#include "kzsketch/error.hpp"
#include "kzsketch/geometry.hpp"
#include "support.hpp"

using namespace kz;

namespace {

RealDataset rows(std::initializer_list<std::vector<double>> pts) {
  RealDataset r;
  for (const auto& p : pts) r.push_back(p);
  return r;
}

}  // namespace

TEST_CASE("z parsing keeps an exact fraction") {
  CHECK(ZRational::parse("2") == ZRational(2, 1));
  CHECK(ZRational::parse("3/2") == ZRational(3, 2));
  CHECK(ZRational::parse("1.5") == ZRational(3, 2));
  CHECK(ZRational::parse("4/2").is_two());
  CHECK_THROWS_AS(ZRational::parse("abc"), Error);
  CHECK_THROWS_AS(ZRational::parse("1/0"), Error);
}

TEST_CASE("config validation") {
  ProblemConfig c;
  c.validate();
  c.delta = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c.delta = 2;
  c.epsilon = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.epsilon = 0.5;
  c.z = ZRational(1, 2);
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("cost of two basis vectors against a symmetric center pair") {
  auto p = rows({{1, 0}, {0, 1}});
  auto c = rows({{1, 0}, {-1, 0}});
  CHECK(cost(p, c, ZRational(2, 1)) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("cost is zero when every point is a center") {
  auto g = kztest::random_grid(12, 3, 8, 7);
  auto c = RealDataset::from_grid(g);
  for (auto z : {ZRational(1, 1), ZRational(3, 2), ZRational(2, 1), ZRational(3, 1)}) CHECK(cost(g, c, z) == 0.0);
}

TEST_CASE("cost matches a brute-force oracle") {
  auto g = kztest::random_grid(10, 3, 8, 11);
  auto c = kztest::random_centers(g, 2, 12);
  auto p = RealDataset::from_grid(g);
  for (auto z : {ZRational(1, 1), ZRational(2, 1), ZRational(5, 2)})
    CHECK(cost(g, c, z) == doctest::Approx(kztest::brute_cost(p, {}, c, z.value())).epsilon(1e-13));
}

TEST_CASE("weighted cost") {
  auto g = kztest::random_grid(20, 4, 16, 3);
  auto p = RealDataset::from_grid(g);
  auto c = kztest::random_centers(g, 3, 4);
  std::vector<double> ones(p.n, 1.0);
  SUBCASE("unit weights equal cost exactly") {
    for (auto z : {ZRational(1, 1), ZRational(2, 1), ZRational(3, 2)})
      CHECK(weighted_cost(p, ones, c, z) == cost(p, c, z));
  }
  SUBCASE("single point on its own center") {
    auto one = rows({{3, 1, 4, 1}});
    std::vector<double> w{3.0};
    CHECK(weighted_cost(one, w, one, ZRational(2, 1)) == 0.0);
  }
  SUBCASE("matches naive weighted loop") {
    Pcg32 rng(99);
    std::vector<double> w(p.n);
    for (auto& v : w) v = rng.uniform() * 5.0;
    w[3] = 0.0;
    double oracle = kztest::brute_cost(p, w, c, 2.0);
    CHECK(weighted_cost(p, w, c, ZRational(2, 1)) == doctest::Approx(oracle).epsilon(1e-13));
  }
  SUBCASE("linear in weights") {
    Pcg32 rng(5);
    std::vector<double> w1(p.n), w2(p.n), w12(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
      w1[i] = rng.uniform();
      w2[i] = rng.uniform();
      w12[i] = 2.0 * w1[i] + 3.0 * w2[i];
    }
    auto z = ZRational(3, 2);
    CHECK(weighted_cost(p, w12, c, z) ==
          doctest::Approx(2.0 * weighted_cost(p, w1, c, z) + 3.0 * weighted_cost(p, w2, c, z)).epsilon(1e-12));
  }
  SUBCASE("negative weight is rejected") {
    auto w = ones;
    w[0] = -1.0;
    CHECK_THROWS_AS(weighted_cost(p, w, c, ZRational(2, 1)), Error);
  }
}

TEST_CASE("structured errors") {
  auto p = rows({{1, 2}});
  auto c3 = rows({{1, 2, 3}});
  try {
    cost(p, c3, ZRational(2, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  auto bad = rows({{1, std::nan("")}});
  try {
    cost(bad, p, ZRational(2, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("nearest assignment tie-breaks to the lowest index") {
  auto p = rows({{1, 0}, {0, 1}});
  auto c = rows({{1, 0}, {-1, 0}});
  CHECK(nearest_assignment(p, c) == std::vector<std::size_t>{0, 0});
  auto single = rows({{5, 5}});
  CHECK(nearest_assignment(p, single) == std::vector<std::size_t>{0, 0});

  auto g = kztest::random_grid(50, 3, 6, 21);
  auto cs = kztest::random_centers(g, 4, 22);
  // duplicate a center to force exact ties
  std::copy_n(cs.row(0).begin(), 3, cs.row(3).begin());
  auto got = nearest_assignment(g, cs);
  for (std::size_t i = 0; i < g.n; ++i) {
    std::size_t arg = 0;
    double best = 1e300;
    for (std::size_t j = 0; j < cs.n; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < 3; ++t) {
        double v = static_cast<double>(g.row(i)[t]) - cs.row(j)[t];
        s += v * v;
      }
      if (s < best) {
        best = s;
        arg = j;
      }
    }
    CHECK(got[i] == arg);
    CHECK(got[i] != 3);
  }
}

TEST_CASE("cost invariances") {
  auto g = kztest::random_grid(40, 5, 32, 8);
  auto p = RealDataset::from_grid(g);
  auto c = kztest::random_centers(g, 3, 9);
  auto z = ZRational(2, 1);
  SUBCASE("adding centers never increases cost") {
    auto more = c;
    auto extra = kztest::random_centers(g, 2, 10);
    for (std::size_t j = 0; j < extra.n; ++j) more.push_back(extra.row(j));
    CHECK(cost(p, more, z) <= cost(p, c, z));
  }
  SUBCASE("permutation of points") {
    RealDataset rev(0, p.d);
    for (std::size_t i = p.n; i-- > 0;) rev.push_back(p.row(i));
    CHECK(cost(rev, c, z) == doctest::Approx(cost(p, c, z)).epsilon(1e-14));
  }
}

TEST_CASE("closed form for orthonormal points and a symmetric pair") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto b = sample_haar_basis(30, 10, seed);
    Eigen::VectorXd u = sample_haar_basis(30, 1, seed + 1000).m.col(0);
    RealDataset pts(10, 30), cs(2, 30);
    double abs_sum = 0.0;
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 30; ++j) pts.row(i)[j] = b.m(j, i);
      abs_sum += std::abs(b.m.col(i).dot(u));
    }
    for (int j = 0; j < 30; ++j) {
      cs.row(0)[j] = u(j);
      cs.row(1)[j] = -u(j);
    }
    CHECK(std::abs(cost(pts, cs, ZRational(2, 1)) - (20.0 - 2.0 * abs_sum)) <= 1e-9);
  }
}

TEST_CASE("relaxed triangle inequality") {
  std::vector<double> a{1, 2, 3}, b{1, 2, 3};
  CHECK(check_relaxed_triangle(a, a, a, ZRational(2, 1), 0.1));
  std::vector<double> x{0, 0}, y{3, 0};
  CHECK(check_relaxed_triangle(x, y, y, ZRational(3, 1), 0.1));

  Pcg32 rng(2026);
  std::size_t checked = 0;
  for (auto z : {ZRational(1, 1), ZRational(3, 2), ZRational(2, 1), ZRational(3, 1)}) {
    for (double eps : {0.05, 0.2, 0.5}) {
      bool all = true;
      for (int t = 0; t < 100000 / 12 + 1; ++t) {
        std::vector<double> p1(8), p2(8), p3(8);
        const double scale = std::exp(rng.normal() * 2.0);
        for (int j = 0; j < 8; ++j) {
          p1[j] = rng.normal() * scale;
          p2[j] = rng.normal() * scale;
          p3[j] = p2[j] + rng.normal() * scale * rng.uniform();
        }
        all = all && check_relaxed_triangle(p1, p2, p3, z, eps);
        ++checked;
      }
      CHECK(all);
    }
  }
  CHECK(checked >= 100000);
}
