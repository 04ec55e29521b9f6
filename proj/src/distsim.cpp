#include "kzsketch/distsim.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "kzsketch/bitstream.hpp"
#include "kzsketch/error.hpp"

namespace kz {

SitePartition SitePartition::split(const GridDataset& data, std::size_t sites) {
  if (sites == 0 || sites > data.n) throw Error(ErrorCode::InvalidArgument, "need 1 <= sites <= n");
  SitePartition out;
  std::size_t start = 0;
  for (std::size_t s = 0; s < sites; ++s) {
    std::size_t len = data.n / sites + (s < data.n % sites ? 1 : 0);
    GridDataset g(len, data.d, data.delta);
    std::copy_n(data.coords.begin() + static_cast<std::ptrdiff_t>(start * data.d), len * data.d, g.coords.begin());
    out.shards.push_back(std::move(g));
    start += len;
  }
  return out;
}

std::size_t SitePartition::total_n() const {
  std::size_t n = 0;
  for (const auto& s : shards) n += s.n;
  return n;
}

void SitePartition::validate() const {
  if (shards.empty()) throw Error(ErrorCode::InvalidArgument, "partition has no sites");
  for (const auto& s : shards) {
    if (s.n == 0) throw Error(ErrorCode::InvalidArgument, "every site needs at least one point");
    if (s.d != shards[0].d || s.delta != shards[0].delta)
      throw Error(ErrorCode::HeaderMismatch, "sites disagree on dimension or grid");
    s.validate();
  }
}

MergedSketch::MergedSketch(std::vector<DecodedSketch> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to merge");
  const auto& h0 = members_[0].header;
  for (const auto& m : members_) {
    const auto& h = m.header;
    if (h.d != h0.d || !(h.z == h0.z) || h.delta != h0.delta)
      throw Error(ErrorCode::HeaderMismatch, "sketches disagree on d, z or delta");
    eps_ = std::max(eps_, h.eps.value());
  }
}

double MergedSketch::estimate_cost(const CenterSet& centers) const {
  double total = 0.0;
  for (const auto& m : members_) total += kz::estimate_cost(m, centers);
  return total;
}

MergedSketch merge_sketches(const std::vector<Sketch>& sketches) {
  std::vector<DecodedSketch> decoded;
  decoded.reserve(sketches.size());
  for (const auto& s : sketches) decoded.push_back(decode(s));
  return MergedSketch(std::move(decoded));
}

CoordinatorResult run_coordinator(const SitePartition& partition, std::size_t k, const ZRational& z, double eps,
                                  std::uint64_t seed, CoresetMethod method) {
  partition.validate();
  const auto& first = partition.shards[0];
  std::vector<std::future<Sketch>> jobs;
  for (std::size_t i = 0; i < partition.shards.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const auto& shard = partition.shards[i];
      ProblemConfig cfg{shard.n, shard.d, k, z, shard.delta, eps};
      return compress(shard, cfg, method, seed + i).sketch;
    }));
  }
  CoordinatorResult out;
  for (auto& j : jobs) out.site_sketches.push_back(j.get());
  for (std::size_t i = 0; i < out.site_sketches.size(); ++i) {
    const auto& s = out.site_sketches[i];
    out.ledger.per_site_bits.push_back(s.ledger.total_bits);
    out.ledger.total_bits += s.ledger.total_bits;
    double f = theoretical_upper_bound(partition.shards[i].n, k, first.d, first.delta, eps, z, s.header.size);
    out.ledger.per_site_formula.push_back(f);
    out.ledger.formula_total += f;
  }
  out.merged = merge_sketches(out.site_sketches);
  return out;
}

StreamSketcher::StreamSketcher(std::size_t d, std::uint64_t delta, std::size_t k, const ZRational& z, double eps,
                               std::uint64_t seed, const StreamOptions& opts)
    : d_(d), delta_(delta), k_(k), z_(z), eps_(eps), seed_(seed), opts_(opts), buffer_(0, d, delta) {
  ProblemConfig probe{1, d, k, z, delta, eps};
  probe.validate();
  if (opts.block_size < k + 1) throw Error(ErrorCode::InvalidArgument, "block_size must be at least k + 1");
  if (opts.level0_cap < 1) throw Error(ErrorCode::InvalidArgument, "level0_cap must be positive");
}

ProblemConfig StreamSketcher::config_for(std::size_t n, double eps) const {
  return ProblemConfig{n, d_, k_, z_, delta_, eps};
}

void StreamSketcher::push(std::span<const std::int64_t> point) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "stream already finished");
  if (point.size() != d_) throw Error(ErrorCode::DimensionMismatch, "point dimension does not match stream");
  for (auto v : point)
    if (v < 1 || static_cast<std::uint64_t>(v) > delta_) throw Error(ErrorCode::OutOfGrid, "stream point outside grid");
  // Flushing lazily, on the arrival after a full block, keeps a stream that
  // fits in one block on the offline path.
  if (buffer_.n == opts_.block_size) flush_block();
  buffer_.coords.insert(buffer_.coords.end(), point.begin(), point.end());
  ++buffer_.n;
  ++points_seen_;
  record();
}

void StreamSketcher::flush_block() {
  if (buffer_.n == 0) return;
  auto cfg = config_for(buffer_.n, eps_ / 2.0);
  level0_.push_back(compress(buffer_, cfg, opts_.block_method, derive_seed(seed_, 1000 + blocks_)).sketch);
  ++blocks_;
  buffer_.coords.clear();
  buffer_.n = 0;
  record();
  if (level0_.size() >= opts_.level0_cap) fold_level0();
}

void StreamSketcher::fold_level0() {
  RealDataset pts(0, d_);
  std::vector<double> weights;
  std::size_t source_n = 0;
  auto absorb = [&](const Sketch& s) {
    auto dec = decode(s);
    for (std::size_t i = 0; i < dec.points.n; ++i) pts.push_back(dec.points.row(i));
    weights.insert(weights.end(), dec.weights.begin(), dec.weights.end());
    source_n += dec.header.n;
  };
  for (const auto& s : level1_) absorb(s);
  for (const auto& s : level0_) absorb(s);

  const double eps = eps_ / 2.0;
  const auto tag = 5000 + merges_;
  auto coreset = build_coreset_weighted(pts, weights, source_n, k_, z_, eps, derive_seed(seed_, tag));
  auto ac = approx_centers(coreset.points, coreset.weights, k_, z_, derive_seed(seed_, tag + 1));
  CenterSet centers = ac.centers;
  for (auto& v : centers.coords) v = std::clamp(std::round(v), 1.0, static_cast<double>(delta_));
  EncodeOptions eo;
  eo.real_deltas = true;
  auto sketch = encode(coreset, centers, config_for(std::max<std::size_t>(source_n, 1), eps), eo);

  level1_.clear();
  level1_.push_back(std::move(sketch));
  level0_.clear();
  ++merges_;
  record();
}

std::uint64_t StreamSketcher::resident_bits() const {
  std::uint64_t bits = static_cast<std::uint64_t>(buffer_.n) * d_ * ceil_log2(delta_);
  for (const auto& s : level0_) bits += s.ledger.total_bits;
  for (const auto& s : level1_) bits += s.ledger.total_bits;
  return bits;
}

double StreamSketcher::budget_bits() const {
  double b = static_cast<double>(buffer_.n) * static_cast<double>(d_) * std::log2(static_cast<double>(delta_));
  auto add = [&](const Sketch& s) {
    const auto& h = s.header;
    b += theoretical_upper_bound(std::max<std::uint64_t>(h.n, 1), h.k, h.d, h.delta, h.eps.value(), h.z, h.size) +
         256.0;
  };
  for (const auto& s : level0_) add(s);
  for (const auto& s : level1_) add(s);
  return b;
}

void StreamSketcher::record() {
  const std::uint64_t r = resident_bits();
  max_resident_ = std::max(max_resident_, r);
  const double budget = budget_bits();
  if (budget > 0.0) max_ratio_ = std::max(max_ratio_, static_cast<double>(r) / budget);
}

StreamResult StreamSketcher::finish() {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "stream already finished");
  if (points_seen_ == 0) throw Error(ErrorCode::InvalidArgument, "empty stream");
  finished_ = true;
  StreamResult out;
  if (level0_.empty() && level1_.empty()) {
    // Whole stream fits in one block: the offline path at full epsilon.
    out.sketches.push_back(compress(buffer_, config_for(buffer_.n, eps_), opts_.block_method, seed_).sketch);
    buffer_.coords.clear();
    buffer_.n = 0;
  } else {
    flush_block();
    for (const auto& s : level1_) out.sketches.push_back(s);
    for (const auto& s : level0_) out.sketches.push_back(s);
  }
  out.merged = merge_sketches(out.sketches);
  out.points_seen = points_seen_;
  out.blocks = blocks_;
  out.merges = merges_;
  out.max_resident_bits = max_resident_;
  out.max_resident_ratio = max_ratio_;
  return out;
}

StreamResult run_stream(const GridDataset& points, std::size_t k, const ZRational& z, double eps,
                        std::uint64_t seed, const StreamOptions& opts) {
  points.validate();
  StreamSketcher s(points.d, points.delta, k, z, eps, seed, opts);
  for (std::size_t i = 0; i < points.n; ++i) s.push(points.row(i));
  return s.finish();
}

}  // namespace kz
