#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kz {

// Distance power z held as an exact fraction.
struct ZRational {
  std::int64_t num = 2;
  std::int64_t den = 1;

  ZRational() = default;
  ZRational(std::int64_t n, std::int64_t d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_one() const { return num == den; }
  bool is_two() const { return num == 2 * den; }
  std::string str() const;

  // Accepts "2", "3/2" or a short decimal such as "1.5".
  static ZRational parse(const std::string& text);
  friend bool operator==(const ZRational&, const ZRational&) = default;
};

struct ProblemConfig {
  std::size_t n = 1;
  std::size_t d = 1;
  std::size_t k = 1;
  ZRational z{2, 1};
  std::uint64_t delta = 2;
  double epsilon = 0.1;

  void validate() const;
};

// Row-major n x d block of integer grid points in [1, delta]^d.
struct GridDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t delta = 2;
  std::vector<std::int64_t> coords;

  GridDataset() = default;
  GridDataset(std::size_t n, std::size_t d, std::uint64_t delta);

  std::span<const std::int64_t> row(std::size_t i) const { return {coords.data() + i * d, d}; }
  std::span<std::int64_t> row(std::size_t i) { return {coords.data() + i * d, d}; }
  void validate() const;
};

// Row-major n x d block of reals. Also used for center sets (n = k).
struct RealDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> coords;

  RealDataset() = default;
  RealDataset(std::size_t n, std::size_t d) : n(n), d(d), coords(n * d, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {coords.data() + i * d, d}; }
  std::span<double> row(std::size_t i) { return {coords.data() + i * d, d}; }
  void push_back(std::span<const double> p);
  void validate() const;

  static RealDataset from_grid(const GridDataset& g);
};

using CenterSet = RealDataset;

// Tree summation with a fixed shape, so results do not depend on anything
// but the order of the input.
double pairwise_sum(std::span<const double> xs);

double squared_distance(std::span<const double> a, std::span<const double> b);
// ||a - b||^z from the squared distance; exact for z = 1 and z = 2.
double power_from_squared(double d2, const ZRational& z);
double dist_pow(std::span<const double> a, std::span<const double> b, const ZRational& z);

std::vector<std::size_t> nearest_assignment(const RealDataset& points, const CenterSet& centers);
std::vector<std::size_t> nearest_assignment(const GridDataset& points, const CenterSet& centers);

// Per-point min_c ||p - c||^z.
std::vector<double> point_costs(const RealDataset& points, const CenterSet& centers, const ZRational& z);

double cost(const RealDataset& points, const CenterSet& centers, const ZRational& z);
double cost(const GridDataset& points, const CenterSet& centers, const ZRational& z);

double weighted_cost(const RealDataset& points, std::span<const double> weights,
                     const CenterSet& centers, const ZRational& z);

// Both inequalities of the relaxed triangle inequality for the triple.
bool check_relaxed_triangle(std::span<const double> p1, std::span<const double> p2,
                            std::span<const double> p3, const ZRational& z, double eps);

}  // namespace kz
