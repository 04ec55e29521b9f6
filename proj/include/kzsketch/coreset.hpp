#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kzsketch/geometry.hpp"

namespace kz {

// Mixes a base seed with a stream tag (splitmix64 finalizer) so that
// independent stages drawing from the same user seed do not share streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

struct ApproxCenters {
  CenterSet centers;                        // k rows, each equal to a dataset point
  std::vector<std::size_t> source_indices;  // row of the dataset each center came from
  double approx_factor = 2.0;               // target factor; not certified
  double cost = 0.0;                        // cost of the dataset against these centers
  bool k_exceeds_n = false;                 // centers necessarily repeat
};

struct WeightedCoreset {
  RealDataset points;  // grid points for offline coresets, reals after a merge
  std::vector<double> weights;
  std::vector<std::size_t> source_indices;
  std::size_t source_n = 0;
  double epsilon = 0.0;

  std::size_t size() const { return points.n; }
  double weight_sum() const;
};

enum class CoresetMethod { Identity, Sensitivity };

struct CoresetOptions {
  double c0 = 1.0;
  double delta = 0.01;  // failure probability feeding the sample size formula
};

ApproxCenters approx_centers(const GridDataset& data, std::size_t k, const ZRational& z, std::uint64_t seed);
// Weighted variant over real points; centers are still rows of the input.
ApproxCenters approx_centers(const RealDataset& data, std::span<const double> weights, std::size_t k,
                             const ZRational& z, std::uint64_t seed);

// min(n, ceil(c0 * k * eps^-2 * (d + log2(1/delta)))).
std::size_t sensitivity_sample_size(std::size_t n, std::size_t k, std::size_t d, double eps,
                                    const CoresetOptions& opts = {});

WeightedCoreset build_coreset(const GridDataset& data, std::size_t k, const ZRational& z, double eps,
                              CoresetMethod method, std::uint64_t seed, const CoresetOptions& opts = {});

// Sensitivity sampling over an already weighted point set. source_n is the
// number of original points the input stands for.
WeightedCoreset build_coreset_weighted(const RealDataset& points, std::span<const double> weights,
                                       std::size_t source_n, std::size_t k, const ZRational& z, double eps,
                                       std::uint64_t seed, const CoresetOptions& opts = {});

// sum w in [(1 - 4 eps) n, (1 + 4 eps) n].
bool weight_sum_check(const WeightedCoreset& coreset);

}  // namespace kz
