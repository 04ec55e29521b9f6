#include "kzsketch/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "kzsketch/error.hpp"
#include "kzsketch/rng.hpp"

namespace kz {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double WeightedCoreset::weight_sum() const { return pairwise_sum(weights); }

namespace {

std::vector<double> inclusive_prefix(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    out[i] = acc;
  }
  return out;
}

CenterSet rows_of(const RealDataset& data, const std::vector<std::size_t>& idx) {
  CenterSet c(idx.size(), data.d);
  for (std::size_t j = 0; j < idx.size(); ++j) std::copy_n(data.row(idx[j]).begin(), data.d, c.row(j).begin());
  return c;
}

double weighted_total(const RealDataset& data, std::span<const double> w, const CenterSet& c, const ZRational& z) {
  return weighted_cost(data, w, c, z);
}

}  // namespace

ApproxCenters approx_centers(const RealDataset& data, std::span<const double> weights, std::size_t k,
                             const ZRational& z, std::uint64_t seed) {
  if (data.n == 0) throw Error(ErrorCode::InvalidArgument, "approx_centers needs at least one point");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (weights.size() != data.n) throw Error(ErrorCode::DimensionMismatch, "weight count does not match point count");
  data.validate();

  Pcg32 rng(seed);
  const std::size_t n = data.n;
  std::vector<std::size_t> chosen;
  chosen.reserve(k);

  // D^z seeding. The first draw is proportional to weight alone.
  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  std::vector<double> mass(n);
  for (std::size_t step = 0; step < k; ++step) {
    for (std::size_t i = 0; i < n; ++i)
      mass[i] = step == 0 ? weights[i] : weights[i] * power_from_squared(best_d2[i], z);
    auto prefix = inclusive_prefix(mass);
    std::size_t pick = 0;
    if (prefix.back() > 0.0 && std::isfinite(prefix.back())) pick = sample_prefix(prefix, rng.uniform());
    chosen.push_back(pick);
    auto c = data.row(pick);
    for (std::size_t i = 0; i < n; ++i) best_d2[i] = std::min(best_d2[i], squared_distance(data.row(i), c));
  }

  CenterSet centers = rows_of(data, chosen);
  double current = weighted_total(data, weights, centers, z);

  // One local-improvement sweep: move each center to the data point of its
  // cluster nearest the cluster mean, keep the move only if the cost drops.
  {
    auto assign = nearest_assignment(data, centers);
    std::vector<double> sums(k * data.d, 0.0), wsum(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto a = assign[i];
      wsum[a] += weights[i];
      for (std::size_t j = 0; j < data.d; ++j) sums[a * data.d + j] += weights[i] * data.row(i)[j];
    }
    std::vector<std::size_t> cand = chosen;
    for (std::size_t c = 0; c < k; ++c) {
      if (wsum[c] <= 0.0) continue;
      std::vector<double> mean(data.d);
      for (std::size_t j = 0; j < data.d; ++j) mean[j] = sums[c * data.d + j] / wsum[c];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        double d2 = squared_distance(data.row(i), mean);
        if (d2 < best) {
          best = d2;
          cand[c] = i;
        }
      }
    }
    CenterSet moved = rows_of(data, cand);
    double moved_cost = weighted_total(data, weights, moved, z);
    if (moved_cost < current) {
      chosen = cand;
      centers = std::move(moved);
      current = moved_cost;
    }
  }

  ApproxCenters out;
  out.centers = std::move(centers);
  out.source_indices = std::move(chosen);
  out.cost = current;
  out.k_exceeds_n = k > n;
  return out;
}

ApproxCenters approx_centers(const GridDataset& data, std::size_t k, const ZRational& z, std::uint64_t seed) {
  std::vector<double> ones(data.n, 1.0);
  return approx_centers(RealDataset::from_grid(data), ones, k, z, seed);
}

std::size_t sensitivity_sample_size(std::size_t n, std::size_t k, std::size_t d, double eps,
                                    const CoresetOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  if (!(opts.delta > 0.0 && opts.delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  double m = std::ceil(opts.c0 * static_cast<double>(k) / (eps * eps) *
                       (static_cast<double>(d) + std::log2(1.0 / opts.delta)));
  if (!(m >= 1.0)) m = 1.0;
  if (m >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(m);
}

WeightedCoreset build_coreset_weighted(const RealDataset& points, std::span<const double> weights,
                                       std::size_t source_n, std::size_t k, const ZRational& z, double eps,
                                       std::uint64_t seed, const CoresetOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  if (points.n == 0) throw Error(ErrorCode::InvalidArgument, "cannot build a coreset of an empty set");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::NegativeWeight, "weights must be finite and >= 0");

  auto ac = approx_centers(points, weights, k, z, derive_seed(seed, 1));
  auto pc = point_costs(points, ac.centers, z);
  const std::size_t n = points.n;
  std::vector<double> wc(n);
  for (std::size_t i = 0; i < n; ++i) wc[i] = weights[i] * pc[i];
  const double total_wc = pairwise_sum(wc);
  const double total_w = pairwise_sum(weights);
  if (!(total_w > 0.0)) throw Error(ErrorCode::InvalidArgument, "total weight is zero");

  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    double uniform_part = weights[i] / total_w;
    q[i] = total_wc > 0.0 ? 0.5 * wc[i] / total_wc + 0.5 * uniform_part : uniform_part;
  }
  auto prefix = inclusive_prefix(q);
  const std::size_t m = sensitivity_sample_size(n, k, points.d, eps, opts);

  Pcg32 rng(derive_seed(seed, 2));
  std::map<std::size_t, double> merged;
  for (std::size_t s = 0; s < m; ++s) {
    std::size_t i = sample_prefix(prefix, rng.uniform());
    merged[i] += weights[i] / (static_cast<double>(m) * q[i]);
  }

  WeightedCoreset out;
  out.points = RealDataset(0, points.d);
  out.source_n = source_n;
  out.epsilon = eps;
  for (const auto& [i, w] : merged) {
    out.points.push_back(points.row(i));
    out.weights.push_back(w);
    out.source_indices.push_back(i);
  }
  return out;
}

WeightedCoreset build_coreset(const GridDataset& data, std::size_t k, const ZRational& z, double eps,
                              CoresetMethod method, std::uint64_t seed, const CoresetOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  data.validate();
  if (method == CoresetMethod::Identity) {
    WeightedCoreset out;
    out.points = RealDataset::from_grid(data);
    out.weights.assign(data.n, 1.0);
    out.source_indices.resize(data.n);
    std::iota(out.source_indices.begin(), out.source_indices.end(), std::size_t{0});
    out.source_n = data.n;
    out.epsilon = eps;
    return out;
  }
  std::vector<double> ones(data.n, 1.0);
  return build_coreset_weighted(RealDataset::from_grid(data), ones, data.n, k, z, eps, seed, opts);
}

bool weight_sum_check(const WeightedCoreset& coreset) {
  const double n = static_cast<double>(coreset.source_n);
  const double s = coreset.weight_sum();
  return s >= (1.0 - 4.0 * coreset.epsilon) * n && s <= (1.0 + 4.0 * coreset.epsilon) * n;
}

}  // namespace kz
