#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kzsketch/codec.hpp"

namespace kz {

struct SitePartition {
  std::vector<GridDataset> shards;

  // Contiguous split into l shards whose sizes differ by at most one.
  static SitePartition split(const GridDataset& data, std::size_t sites);
  std::size_t total_n() const;
  void validate() const;
};

// Union of decoded sketches answering cost queries as a left fold of member estimates.
class MergedSketch {
 public:
  MergedSketch() = default;
  explicit MergedSketch(std::vector<DecodedSketch> members);

  double estimate_cost(const CenterSet& centers) const;
  std::size_t size() const { return members_.size(); }
  const std::vector<DecodedSketch>& members() const { return members_; }
  double epsilon() const { return eps_; }

 private:
  std::vector<DecodedSketch> members_;
  double eps_ = 0.0;
};

// Requires equal d, z and delta; effective epsilon is the maximum.
MergedSketch merge_sketches(const std::vector<Sketch>& sketches);

struct CommLedger {
  std::vector<std::uint64_t> per_site_bits;
  std::uint64_t total_bits = 0;
  std::size_t rounds = 1;
  std::vector<double> per_site_formula;  // unit-constant bound per site
  double formula_total = 0.0;
};

struct CoordinatorResult {
  std::vector<Sketch> site_sketches;
  MergedSketch merged;
  CommLedger ledger;
};

// Site i compresses its shard with seed + i; sites run concurrently.
CoordinatorResult run_coordinator(const SitePartition& partition, std::size_t k, const ZRational& z, double eps,
                                  std::uint64_t seed, CoresetMethod method = CoresetMethod::Sensitivity);

struct StreamOptions {
  std::size_t block_size = 500;
  std::size_t level0_cap = 4;  // level-0 sketches kept before folding into level 1
  CoresetMethod block_method = CoresetMethod::Identity;
};

struct StreamResult {
  std::vector<Sketch> sketches;  // live sketches after the final flush
  MergedSketch merged;
  std::size_t points_seen = 0;
  std::size_t blocks = 0;
  std::size_t merges = 0;
  std::uint64_t max_resident_bits = 0;
  double max_resident_ratio = 0.0;  // resident bits over the matching formula budget
};

class StreamSketcher {
 public:
  StreamSketcher(std::size_t d, std::uint64_t delta, std::size_t k, const ZRational& z, double eps,
                 std::uint64_t seed, const StreamOptions& opts);

  void push(std::span<const std::int64_t> point);
  StreamResult finish();

  std::uint64_t resident_bits() const;
  std::size_t buffered() const { return buffer_.n; }

 private:
  void flush_block();
  void fold_level0();
  void record();
  ProblemConfig config_for(std::size_t n, double eps) const;
  double budget_bits() const;

  std::size_t d_;
  std::uint64_t delta_;
  std::size_t k_;
  ZRational z_;
  double eps_;
  std::uint64_t seed_;
  StreamOptions opts_;

  GridDataset buffer_;
  std::vector<Sketch> level0_;
  std::vector<Sketch> level1_;
  std::size_t points_seen_ = 0;
  std::size_t blocks_ = 0;
  std::size_t merges_ = 0;
  std::uint64_t max_resident_ = 0;
  double max_ratio_ = 0.0;
  bool finished_ = false;
};

StreamResult run_stream(const GridDataset& points, std::size_t k, const ZRational& z, double eps,
                        std::uint64_t seed, const StreamOptions& opts = {});

}  // namespace kz
