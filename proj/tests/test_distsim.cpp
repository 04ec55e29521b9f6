#include <doctest.h>

#include <cmath>

#include "kzsketch/distsim.hpp"
#include "kzsketch/error.hpp"
#include "support.hpp"

using namespace kz;

namespace {

ProblemConfig config_for(const GridDataset& g, std::size_t k, ZRational z, double eps) {
  ProblemConfig c;
  c.n = g.n;
  c.d = g.d;
  c.k = k;
  c.z = z;
  c.delta = g.delta;
  c.epsilon = eps;
  return c;
}

}  // namespace

TEST_CASE("site partition") {
  auto g = kztest::random_grid(10, 2, 8, 1);
  auto p = SitePartition::split(g, 3);
  REQUIRE(p.shards.size() == 3);
  CHECK(p.shards[0].n == 4);
  CHECK(p.shards[1].n == 3);
  CHECK(p.shards[2].n == 3);
  CHECK(p.total_n() == 10);
  CHECK(p.shards[1].coords[0] == g.row(4)[0]);
  CHECK_THROWS_AS(SitePartition::split(g, 11), Error);
  auto bad = p;
  bad.shards[1].delta = 9;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("single site matches the single-machine path") {
  auto g = kztest::random_grid(400, 4, 256, 2);
  auto z = ZRational(2, 1);
  auto r = run_coordinator(SitePartition::split(g, 1), 3, z, 0.2, 9);
  auto offline = compress(g, config_for(g, 3, z, 0.2), CoresetMethod::Sensitivity, 9);
  CHECK(r.site_sketches[0].bytes == offline.sketch.bytes);
  CHECK(r.ledger.total_bits == offline.sketch.ledger.total_bits);
  CHECK(r.ledger.rounds == 1);
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto c = kztest::random_centers(g, 3, t);
    CHECK(r.merged.estimate_cost(c) == estimate_cost(offline.sketch, c));
  }
}

TEST_CASE("four identity sites are within epsilon") {
  auto g = kztest::random_grid(2000, 5, 1024, 3);
  auto z = ZRational(2, 1);
  const double eps = 0.2;
  auto part = SitePartition::split(g, 4);
  auto r = run_coordinator(part, 4, z, eps, 5, CoresetMethod::Identity);
  CHECK(r.ledger.per_site_bits.size() == 4);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.ledger.per_site_bits[i] == r.site_sketches[i].ledger.total_bits);
    sum += r.ledger.per_site_bits[i];
  }
  CHECK(r.ledger.total_bits == sum);
  double worst = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto c = kztest::random_centers(g, 4, 300 + t);
    worst = std::max(worst, kztest::rel_err(r.merged.estimate_cost(c), cost(g, c, z)));
  }
  CHECK(worst <= eps);

  // Exact additivity of the merged estimate.
  auto ab = merge_sketches({r.site_sketches[0], r.site_sketches[1]});
  auto c = kztest::random_centers(g, 2, 77);
  CHECK(ab.estimate_cost(c) == estimate_cost(r.site_sketches[0], c) + estimate_cost(r.site_sketches[1], c));
  auto one = merge_sketches({r.site_sketches[2]});
  CHECK(one.estimate_cost(c) == estimate_cost(r.site_sketches[2], c));

  // Reproducible bytes.
  auto again = run_coordinator(part, 4, z, eps, 5, CoresetMethod::Identity);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.site_sketches[i].bytes == r.site_sketches[i].bytes);
}

TEST_CASE("merge rejects mismatched headers") {
  auto g1 = kztest::random_grid(50, 3, 64, 1);
  auto g2 = kztest::random_grid(50, 4, 64, 1);
  auto g3 = kztest::random_grid(50, 3, 128, 1);
  auto z = ZRational(2, 1);
  auto a = compress(g1, config_for(g1, 2, z, 0.2), CoresetMethod::Identity, 1).sketch;
  auto b = compress(g2, config_for(g2, 2, z, 0.2), CoresetMethod::Identity, 1).sketch;
  auto c = compress(g3, config_for(g3, 2, z, 0.2), CoresetMethod::Identity, 1).sketch;
  auto e = compress(g1, config_for(g1, 2, ZRational(1, 1), 0.2), CoresetMethod::Identity, 1).sketch;
  auto f = compress(g1, config_for(g1, 2, z, 0.4), CoresetMethod::Identity, 1).sketch;
  CHECK_THROWS_AS(merge_sketches({a, b}), Error);
  CHECK_THROWS_AS(merge_sketches({a, c}), Error);
  CHECK_THROWS_AS(merge_sketches({a, e}), Error);
  auto m = merge_sketches({a, f});
  CHECK(m.epsilon() == doctest::Approx(0.4));
}

TEST_CASE("short streams equal the offline path") {
  auto g = kztest::random_grid(300, 3, 128, 4);
  StreamOptions o;
  o.block_size = 300;
  auto s = run_stream(g, 3, ZRational(2, 1), 0.2, 8, o);
  REQUIRE(s.sketches.size() == 1);
  auto offline = compress(g, config_for(g, 3, ZRational(2, 1), 0.2), o.block_method, 8);
  CHECK(s.sketches[0].bytes == offline.sketch.bytes);
  CHECK(s.points_seen == 300);
  CHECK(s.blocks == 0);
}

TEST_CASE("stream bookkeeping") {
  auto g = kztest::random_grid(2300, 3, 128, 5);
  StreamOptions o;
  o.block_size = 200;
  o.level0_cap = 3;
  StreamSketcher s(3, 128, 2, ZRational(2, 1), 0.25, 3, o);
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    s.push(g.row(i));
    CHECK(s.buffered() <= o.block_size);
    CHECK(s.buffered() >= 1);
    prev = std::max(prev, s.resident_bits());
  }
  auto r = s.finish();
  CHECK(r.points_seen == 2300);
  CHECK(r.blocks == 12);
  CHECK(r.max_resident_bits >= prev);
  double wsum = 0;
  for (const auto& m : r.merged.members())
    for (double w : m.weights) wsum += w;
  CHECK(wsum == doctest::Approx(2300).epsilon(0.75));
  CHECK_THROWS_AS(s.finish(), Error);
  std::vector<std::int64_t> wrong(4, 1);
  StreamSketcher t(3, 128, 2, ZRational(2, 1), 0.25, 3, o);
  CHECK_THROWS_AS(t.push(wrong), Error);
  StreamOptions tiny;
  tiny.block_size = 2;
  CHECK_THROWS_AS(StreamSketcher(3, 128, 2, ZRational(2, 1), 0.25, 3, tiny), Error);
}

TEST_CASE("long stream is within three epsilon and under the space bound") {
  auto g = kztest::random_grid(10000, 4, 1024, 6);
  const double eps = 0.2;
  auto z = ZRational(2, 1);
  auto r = run_stream(g, 3, z, eps, 12);
  CHECK(r.blocks == 20);
  CHECK(r.merges >= 1);
  CHECK(r.sketches.size() <= 1 + StreamOptions{}.level0_cap + 1);
  double worst = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto c = kztest::random_centers(g, 3, 600 + t);
    worst = std::max(worst, kztest::rel_err(r.merged.estimate_cost(c), cost(g, c, z)));
  }
  CHECK(worst <= 3 * eps);
  CHECK(r.max_resident_ratio <= 16.0);
  CHECK(r.max_resident_ratio > 0.0);
}
