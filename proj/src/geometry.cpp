#include "kzsketch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kzsketch/error.hpp"

namespace kz {

ZRational::ZRational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d <= 0 || n <= 0) throw Error(ErrorCode::InvalidArgument, "z must be a positive fraction");
  std::int64_t g = std::gcd(n, d);
  num = n / g;
  den = d / g;
}

std::string ZRational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

ZRational ZRational::parse(const std::string& text) {
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "cannot parse z from '" + text + "'"); };
  if (text.empty()) throw bad();
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t used1 = 0, used2 = 0;
      std::string a = text.substr(0, slash), b = text.substr(slash + 1);
      long long n = std::stoll(a, &used1);
      long long d = std::stoll(b, &used2);
      if (used1 != a.size() || used2 != b.size()) throw bad();
      return ZRational(n, d);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
      std::size_t used = 0;
      long long n = std::stoll(text, &used);
      if (used != text.size()) throw bad();
      return ZRational(n, 1);
    }
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::size_t frac_len = text.size() - dot - 1;
    if (frac_len > 9 || digits.empty()) throw bad();
    std::size_t used = 0;
    long long n = std::stoll(digits, &used);
    if (used != digits.size()) throw bad();
    std::int64_t d = 1;
    for (std::size_t i = 0; i < frac_len; ++i) d *= 10;
    return ZRational(n, d);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

void ProblemConfig::validate() const {
  if (n < 1 || d < 1 || k < 1) throw Error(ErrorCode::InvalidArgument, "n, d and k must be positive");
  if (delta < 2) throw Error(ErrorCode::InvalidArgument, "delta must be at least 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  if (z.num < z.den) throw Error(ErrorCode::InvalidArgument, "z must be at least 1");
}

GridDataset::GridDataset(std::size_t n_, std::size_t d_, std::uint64_t delta_)
    : n(n_), d(d_), delta(delta_), coords(n_ * d_, 1) {}

void GridDataset::validate() const {
  if (coords.size() != n * d) throw Error(ErrorCode::DimensionMismatch, "grid dataset storage does not match n*d");
  if (delta < 2) throw Error(ErrorCode::InvalidArgument, "delta must be at least 2");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    auto c = coords[i];
    if (c < 1 || static_cast<std::uint64_t>(c) > delta)
      throw Error(ErrorCode::OutOfGrid, "coordinate " + std::to_string(c) + " of point " +
                                            std::to_string(i / d) + " is outside [1, delta]");
  }
}

void RealDataset::push_back(std::span<const double> p) {
  if (n == 0 && coords.empty() && d == 0) d = p.size();
  if (p.size() != d) throw Error(ErrorCode::DimensionMismatch, "point dimension does not match dataset");
  coords.insert(coords.end(), p.begin(), p.end());
  ++n;
}

void RealDataset::validate() const {
  if (coords.size() != n * d) throw Error(ErrorCode::DimensionMismatch, "dataset storage does not match n*d");
  for (double v : coords)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite coordinate");
}

RealDataset RealDataset::from_grid(const GridDataset& g) {
  RealDataset r(g.n, g.d);
  std::transform(g.coords.begin(), g.coords.end(), r.coords.begin(),
                 [](std::int64_t v) { return static_cast<double>(v); });
  return r;
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

double power_from_squared(double d2, const ZRational& z) {
  if (z.is_two()) return d2;
  if (z.is_one()) return std::sqrt(d2);
  if (d2 == 0.0) return 0.0;
  return std::exp(0.5 * z.value() * std::log(d2));
}

double dist_pow(std::span<const double> a, std::span<const double> b, const ZRational& z) {
  return power_from_squared(squared_distance(a, b), z);
}

namespace {

void check_dims(const RealDataset& points, const CenterSet& centers) {
  if (centers.n == 0) throw Error(ErrorCode::InvalidArgument, "center set is empty");
  if (points.d != centers.d)
    throw Error(ErrorCode::DimensionMismatch, "points have dimension " + std::to_string(points.d) +
                                                  " but centers have " + std::to_string(centers.d));
  points.validate();
  centers.validate();
}

// Returns (index, squared distance) of the closest center; strict < keeps the lowest index on ties.
std::pair<std::size_t, double> closest(std::span<const double> p, const CenterSet& centers) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.n; ++c) {
    double d2 = squared_distance(p, centers.row(c));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return {best, best_d2};
}

}  // namespace

std::vector<std::size_t> nearest_assignment(const RealDataset& points, const CenterSet& centers) {
  check_dims(points, centers);
  std::vector<std::size_t> out(points.n);
  for (std::size_t i = 0; i < points.n; ++i) out[i] = closest(points.row(i), centers).first;
  return out;
}

std::vector<std::size_t> nearest_assignment(const GridDataset& points, const CenterSet& centers) {
  return nearest_assignment(RealDataset::from_grid(points), centers);
}

std::vector<double> point_costs(const RealDataset& points, const CenterSet& centers, const ZRational& z) {
  check_dims(points, centers);
  std::vector<double> out(points.n);
  for (std::size_t i = 0; i < points.n; ++i)
    out[i] = power_from_squared(closest(points.row(i), centers).second, z);
  return out;
}

double cost(const RealDataset& points, const CenterSet& centers, const ZRational& z) {
  auto pc = point_costs(points, centers, z);
  return pairwise_sum(pc);
}

double cost(const GridDataset& points, const CenterSet& centers, const ZRational& z) {
  return cost(RealDataset::from_grid(points), centers, z);
}

double weighted_cost(const RealDataset& points, std::span<const double> weights, const CenterSet& centers,
                     const ZRational& z) {
  if (weights.size() != points.n)
    throw Error(ErrorCode::DimensionMismatch, "weight count does not match point count");
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFinite, "non-finite weight");
    if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "negative weight");
  }
  auto pc = point_costs(points, centers, z);
  for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = weights[i] == 0.0 ? 0.0 : weights[i] * pc[i];
  return pairwise_sum(pc);
}

bool check_relaxed_triangle(std::span<const double> p1, std::span<const double> p2, std::span<const double> p3,
                            const ZRational& z, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (p1.size() != p2.size() || p1.size() != p3.size())
    throw Error(ErrorCode::DimensionMismatch, "triangle points differ in dimension");
  const double zv = z.value();
  const double d12 = dist_pow(p1, p2, z);
  const double d13 = dist_pow(p1, p3, z);
  const double d23 = dist_pow(p2, p3, z);
  const double rhs1 = std::pow(1.0 + eps, zv - 1.0) * d13 + std::pow((1.0 + eps) / eps, zv - 1.0) * d23;
  const double rhs2 = eps * d13 + std::pow((zv + eps) / eps, zv - 1.0) * d23;
  // Slack for the roundoff in the power evaluations only.
  auto slack = [](double lhs, double rhs) { return 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}); };
  const double lhs2 = std::abs(d12 - d13);
  return d12 <= rhs1 + slack(d12, rhs1) && lhs2 <= rhs2 + slack(lhs2, rhs2);
}

}  // namespace kz
