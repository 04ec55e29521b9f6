#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kzsketch/geometry.hpp"
#include "kzsketch/rng.hpp"

namespace kztest {

inline kz::GridDataset random_grid(std::size_t n, std::size_t d, std::uint64_t delta, std::uint64_t seed) {
  kz::Pcg32 rng(seed);
  kz::GridDataset g(n, d, delta);
  for (auto& c : g.coords) c = 1 + static_cast<std::int64_t>(rng.below(delta));
  return g;
}

// Half the centers uniform in [1, delta]^d, half data points plus Gaussian noise.
inline kz::CenterSet random_centers(const kz::GridDataset& data, std::size_t k, std::uint64_t seed) {
  kz::Pcg32 rng(seed);
  kz::CenterSet c(k, data.d);
  const double span = static_cast<double>(data.delta);
  for (std::size_t j = 0; j < k; ++j) {
    if (j % 2 == 0) {
      for (auto& v : c.row(j)) v = 1.0 + rng.uniform() * (span - 1.0);
    } else {
      auto p = data.row(rng.below(data.n));
      for (std::size_t t = 0; t < data.d; ++t) c.row(j)[t] = static_cast<double>(p[t]) + rng.normal() * span / 64.0;
    }
  }
  return c;
}

// Independent oracle: naive double loop, plain left-to-right sum.
inline double brute_cost(const kz::RealDataset& p, const std::vector<double>& w, const kz::CenterSet& c, double z) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < p.d; ++t) s += (p.row(i)[t] - c.row(j)[t]) * (p.row(i)[t] - c.row(j)[t]);
      best = std::min(best, std::pow(std::sqrt(s), z));
    }
    total += (w.empty() ? 1.0 : w[i]) * best;
  }
  return total;
}

inline double rel_err(double est, double exact) {
  if (exact == 0.0) return est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(est - exact) / exact;
}

}  // namespace kztest
