#include "kzsketch/coloring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "kzsketch/coreset.hpp"
#include "kzsketch/error.hpp"
#include "kzsketch/rng.hpp"

namespace kz {

double coloring_discrepancy(const Matrix& u, std::span<const int> zeta) {
  if (static_cast<Eigen::Index>(zeta.size()) != u.cols())
    throw Error(ErrorCode::DimensionMismatch, "coloring length does not match U");
  Vector z(u.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = zeta[static_cast<std::size_t>(i)];
  if (z.size() == 0) return 0.0;
  return (u * z).cwiseAbs().maxCoeff();
}

namespace {

struct Score {
  bool met = false;
  double disc = std::numeric_limits<double>::infinity();
  std::size_t zeros = 0;
};

// Lexicographic: guarantee first, then discrepancy, then fewer zeros.
bool better(const Score& a, const Score& b) {
  if (a.met != b.met) return a.met;
  if (a.disc != b.disc) return a.disc < b.disc;
  return a.zeros < b.zeros;
}

class Searcher {
 public:
  Searcher(const Matrix& u) : u_(u), n_(static_cast<std::size_t>(u.cols())), max_zeros_(n_ / 4) {}

  std::size_t max_zeros() const { return max_zeros_; }

  Score score(const std::vector<int>& zeta) const {
    Score s;
    s.zeros = static_cast<std::size_t>(std::count(zeta.begin(), zeta.end(), 0));
    s.disc = coloring_discrepancy(u_, zeta);
    s.met = s.zeros <= max_zeros_ && s.disc <= 0.5;
    return s;
  }

  // Best-improvement descent on (max |U zeta|, sum (U zeta)^2) over single
  // coordinate changes, keeping at most n/4 zeros.
  void descend(std::vector<int>& zeta) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      if (zeta[i] != 0) v += zeta[i] * u_.col(static_cast<Eigen::Index>(i));
    std::size_t zeros = static_cast<std::size_t>(std::count(zeta.begin(), zeta.end(), 0));
    double cur_max = n_ ? v.cwiseAbs().maxCoeff() : 0.0;
    double cur_ss = v.squaredNorm();
    const std::size_t max_steps = 4 * n_ + 4;
    for (std::size_t step = 0; step < max_steps; ++step) {
      if (cur_max <= 0.5 && zeros <= max_zeros_) return;
      double best_max = cur_max, best_ss = cur_ss;
      std::size_t best_i = n_;
      int best_t = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        for (int t : {-1, 0, 1}) {
          if (t == zeta[i]) continue;
          std::size_t nz = zeros + (t == 0 ? 1 : 0) - (zeta[i] == 0 ? 1 : 0);
          if (nz > max_zeros_) continue;
          const double delta = static_cast<double>(t - zeta[i]);
          double mx = 0.0, ss = 0.0;
          for (std::size_t r = 0; r < n_; ++r) {
            const double w = v(static_cast<Eigen::Index>(r)) +
                             delta * u_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
            mx = std::max(mx, std::abs(w));
            ss += w * w;
          }
          const bool improves = mx < best_max - 1e-15 || (mx <= best_max + 1e-15 && ss < best_ss - 1e-12);
          if (improves) {
            best_max = mx;
            best_ss = ss;
            best_i = i;
            best_t = t;
          }
        }
      }
      if (best_i == n_) return;
      v += static_cast<double>(best_t - zeta[best_i]) * u_.col(static_cast<Eigen::Index>(best_i));
      if (best_t == 0) ++zeros;
      if (zeta[best_i] == 0) --zeros;
      zeta[best_i] = best_t;
      cur_max = best_max;
      cur_ss = best_ss;
    }
  }

 private:
  const Matrix& u_;
  std::size_t n_;
  std::size_t max_zeros_;
};

std::vector<int> random_signs(Pcg32& rng, std::size_t n) {
  std::vector<int> z(n);
  for (auto& v : z) v = (rng.next_u32() & 1u) ? 1 : -1;
  return z;
}

}  // namespace

PartialColoring find_partial_coloring(const InnerProductMatrix& u, const AngleThresholds& th,
                                      std::size_t max_restarts, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(u.u.cols());
  if (n == 0 || u.u.rows() != u.u.cols()) throw Error(ErrorCode::InvalidArgument, "U must be a non-empty square matrix");
  Searcher search(u.u);
  PartialColoring out;
  out.precondition_ok = row_norm_profile(u, th).pass;

  Score best;
  std::vector<int> best_zeta(n, 1);
  auto consider = [&](const std::vector<int>& zeta) {
    Score s = search.score(zeta);
    if (better(s, best)) {
      best = s;
      best_zeta = zeta;
    }
  };

  Pcg32 rng(derive_seed(seed, 0));
  std::size_t r = 0;
  for (; r < max_restarts && !best.met; ++r) {
    auto zeta = random_signs(rng, n);
    search.descend(zeta);
    consider(zeta);
  }
  out.restarts_used = r;

  if (!best.met && max_restarts > 0) {
    // Bucket full colorings by the rounded vector U zeta; the half-difference
    // of two colorings in one bucket is a partial coloring with small
    // discrepancy. Take the farthest pair per bucket.
    Pcg32 prng(derive_seed(seed, 1));
    const std::size_t samples = std::min<std::size_t>(max_restarts, 512);
    std::map<std::vector<long long>, std::vector<std::vector<int>>> buckets;
    for (std::size_t s = 0; s < samples; ++s) {
      auto zeta = random_signs(prng, n);
      Vector z(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = zeta[i];
      Vector b = u.u * z;
      std::vector<long long> key(n);
      for (std::size_t i = 0; i < n; ++i) key[i] = std::llround(b(static_cast<Eigen::Index>(i)));
      buckets[key].push_back(std::move(zeta));
    }
    for (const auto& [key, members] : buckets) {
      if (members.size() < 2) continue;
      std::size_t bi = 0, bj = 1, bd = 0;
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          std::size_t h = 0;
          for (std::size_t t = 0; t < n; ++t) h += members[i][t] != members[j][t];
          if (h > bd) {
            bd = h;
            bi = i;
            bj = j;
          }
        }
      std::vector<int> zeta(n);
      for (std::size_t t = 0; t < n; ++t) zeta[t] = (members[bi][t] - members[bj][t]) / 2;
      // Too many zeros: refill the surplus with signs before descending.
      std::size_t zeros = static_cast<std::size_t>(std::count(zeta.begin(), zeta.end(), 0));
      for (std::size_t t = 0; t < n && zeros > search.max_zeros(); ++t)
        if (zeta[t] == 0) {
          zeta[t] = members[bi][t];
          --zeros;
        }
      search.descend(zeta);
      consider(zeta);
      if (best.met) break;
    }
  }

  out.zeta = best_zeta;
  out.zero_count = best.zeros;
  out.discrepancy = best.disc;
  out.guarantee_met = best.met;
  out.exhausted = !best.met;
  return out;
}

RealDataset columns_as_points(const Matrix& m) {
  RealDataset r(static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) r.row(static_cast<std::size_t>(j))[static_cast<std::size_t>(i)] = m(i, j);
  return r;
}

namespace {

// Unit vector orthogonal to every column of `m`.
Vector null_direction(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  const Eigen::Index rank = qr.rank();
  if (rank >= m.rows()) throw Error(ErrorCode::Precondition, "no direction orthogonal to both spans");
  Matrix q = qr.householderQ();
  return q.col(rank);
}

Matrix stack(const OrthonormalBasis& p, const OrthonormalBasis& q) {
  Matrix pq(p.d(), p.n() + q.n());
  pq << p.m, q.m;
  return pq;
}

CenterSet pair_centers(const Vector& c) {
  CenterSet cs(2, static_cast<std::size_t>(c.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    cs.row(0)[static_cast<std::size_t>(i)] = c(i);
    cs.row(1)[static_cast<std::size_t>(i)] = -c(i);
  }
  return cs;
}

void require_pair(const OrthonormalBasis& p, const OrthonormalBasis& q) {
  if (p.d() != q.d() || p.n() != q.n()) throw Error(ErrorCode::DimensionMismatch, "bases must share d and n");
}

}  // namespace

Vector adversarial_center(const OrthonormalBasis& q, const OrthonormalBasis& p, std::span<const int> zeta) {
  require_pair(p, q);
  const auto n = q.n();
  if (q.d() <= 2 * n)
    throw Error(ErrorCode::Precondition, "need d > 2n for the orthogonal completion (d=" + std::to_string(q.d()) +
                                             ", n=" + std::to_string(n) + ")");
  if (static_cast<Eigen::Index>(zeta.size()) != n) throw Error(ErrorCode::DimensionMismatch, "coloring length must be n");
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int v = zeta[static_cast<std::size_t>(i)];
    if (v < -1 || v > 1) throw Error(ErrorCode::InvalidArgument, "coloring entries must be -1, 0 or 1");
    z(i) = v;
  }
  Vector c = q.m * z / std::sqrt(static_cast<double>(n));
  const double rest = std::max(0.0, 1.0 - c.squaredNorm());
  c += std::sqrt(rest) * null_direction(stack(p, q));
  return c;
}

double cost_gap(const OrthonormalBasis& p, const OrthonormalBasis& q, const Vector& c, const ZRational& z) {
  require_pair(p, q);
  if (c.size() != p.d()) throw Error(ErrorCode::DimensionMismatch, "center dimension must equal d");
  if (std::abs(c.norm() - 1.0) > 1e-8) throw Error(ErrorCode::Precondition, "center must have unit norm");
  auto centers = pair_centers(c);
  return cost(columns_as_points(p.m), centers, z) - cost(columns_as_points(q.m), centers, z);
}

double inner_product_gap(const OrthonormalBasis& p, const OrthonormalBasis& q, const Vector& c) {
  require_pair(p, q);
  return 2.0 * ((q.m.transpose() * c).cwiseAbs().sum() - (p.m.transpose() * c).cwiseAbs().sum());
}

PowerCenter center_for_power(const OrthonormalBasis& p_in, const OrthonormalBasis& q_in, const Vector& c_hat,
                             const ZRational& z) {
  require_pair(p_in, q_in);
  const auto n = p_in.n();
  if (p_in.d() <= 2 * n) throw Error(ErrorCode::Precondition, "need d > 2n");
  if (c_hat.size() != p_in.d()) throw Error(ErrorCode::DimensionMismatch, "center dimension must equal d");
  if (std::abs(c_hat.norm() - 1.0) > 1e-8) throw Error(ErrorCode::Precondition, "c_hat must have unit norm");

  PowerCenter out;
  double g = (p_in.m.transpose() * c_hat).cwiseAbs().sum() - (q_in.m.transpose() * c_hat).cwiseAbs().sum();
  out.swapped = g < 0.0;
  const OrthonormalBasis& p = out.swapped ? q_in : p_in;
  const OrthonormalBasis& q = out.swapped ? p_in : q_in;
  out.input_gap = std::abs(g);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  if (!(out.input_gap > 0.5 * sqrt_n))
    throw Error(ErrorCode::Precondition, "inner-product gap " + std::to_string(out.input_gap) +
                                             " does not exceed sqrt(n)/2 = " + std::to_string(0.5 * sqrt_n));

  // Split c_hat into its part inside span(P) + span(Q) and the remainder.
  Matrix pq = stack(p, q);
  Eigen::ColPivHouseholderQR<Matrix> qr(pq);
  Matrix basis = Matrix(qr.householderQ()).leftCols(qr.rank());
  Vector inside = basis * (basis.transpose() * c_hat);
  Vector outside = c_hat - inside;
  Vector dir = null_direction(pq);
  if (outside.norm() > 1e-6) {
    dir = outside - basis * (basis.transpose() * outside);
    dir.normalize();
  }
  const double rest = std::max(0.0, 1.0 - inside.squaredNorm() / 4.0);
  out.c = inside / 2.0 + std::sqrt(rest) * dir;

  const double zv = z.value();
  const double scale = std::pow(2.0, zv / 2.0) * zv;
  out.leading_term = scale / 8.0 * sqrt_n;
  out.additive_term = zv <= 2.0 ? scale * (1.0 - zv / 2.0) / 4.0 : scale * (zv / 2.0 - 1.0) / 8.0;
  out.bound = out.leading_term - out.additive_term;
  out.measured_gap = std::abs(cost_gap(p, q, out.c, z));
  return out;
}

bool taylor_bounds_check(double x, double z) {
  if (!(x >= 0.0 && x <= 0.5)) throw Error(ErrorCode::InvalidArgument, "x must lie in [0, 1/2]");
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "z must be positive");
  const double h = z / 2.0;
  const double y = std::pow(1.0 - x, h);
  const double linear = 1.0 - h * x;
  constexpr double tol = 1e-12;
  bool ok = true;
  if (z <= 2.0) {
    const double lo = linear - z * (1.0 - h) * x * x;
    ok = ok && lo <= y + tol && y <= linear + tol;
  }
  if (z >= 2.0) {
    const double hi = linear + h * (h - 1.0) * x * x;
    ok = ok && linear <= y + tol && y <= hi + tol;
  }
  return ok;
}

RoundedInstance round_and_scale(const RealDataset& points, std::uint64_t delta) {
  if (delta < 3 || delta % 2 == 0) throw Error(ErrorCode::InvalidArgument, "delta must be an odd integer >= 3");
  points.validate();
  for (std::size_t i = 0; i < points.n; ++i) {
    double nrm = 0.0;
    for (double v : points.row(i)) nrm += v * v;
    if (std::sqrt(nrm) > 1.0 + 1e-9) throw Error(ErrorCode::Precondition, "points must lie in the unit ball");
  }
  const double half_scale = static_cast<double>(delta) / 2.0;
  const auto shift = static_cast<std::int64_t>((delta + 1) / 2);
  RoundedInstance out;
  out.grid = GridDataset(points.n, points.d, delta);
  out.scaled = RealDataset(points.n, points.d);
  for (std::size_t i = 0; i < points.n; ++i) {
    double disp2 = 0.0;
    for (std::size_t j = 0; j < points.d; ++j) {
      const double s = half_scale * points.row(i)[j];
      const double hat = s + static_cast<double>(shift);
      auto tilde = static_cast<std::int64_t>(std::ceil(s)) + shift;
      if (tilde > static_cast<std::int64_t>(delta)) {
        tilde = static_cast<std::int64_t>(delta);
        ++out.clamped;
      } else if (tilde < 1) {
        tilde = 1;
        ++out.clamped;
      }
      out.grid.row(i)[j] = tilde;
      out.scaled.row(i)[j] = hat;
      const double dv = static_cast<double>(tilde) - hat;
      disp2 += dv * dv;
    }
    out.max_displacement = std::max(out.max_displacement, std::sqrt(disp2));
  }
  return out;
}

std::vector<double> scale_center(std::span<const double> c, std::uint64_t delta) {
  const double half_scale = static_cast<double>(delta) / 2.0;
  const double shift = static_cast<double>((delta + 1) / 2);
  std::vector<double> out(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) out[j] = half_scale * c[j] + shift;
  return out;
}

std::uint64_t default_delta_tilde(std::size_t d, double eps, const ZRational& z) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  const double sd = std::sqrt(static_cast<double>(d));
  double v;
  if (z.is_two()) {
    v = std::ceil(10.0 * sd / eps);
  } else {
    const double zv = z.value();
    v = std::ceil(3072.0 * std::pow(2.0, zv / 2.0) * sd / (zv * zv * eps));
  }
  auto out = static_cast<std::uint64_t>(v);
  if (out % 2 == 0) ++out;
  return std::max<std::uint64_t>(out, 3);
}

GridDataset TiledInstance::all_p() const {
  GridDataset g(0, copies.empty() ? 0 : copies[0].p.d, delta);
  for (const auto& c : copies) {
    g.coords.insert(g.coords.end(), c.p.coords.begin(), c.p.coords.end());
    g.n += c.p.n;
  }
  return g;
}

GridDataset TiledInstance::all_q() const {
  GridDataset g(0, copies.empty() ? 0 : copies[0].q.d, delta);
  for (const auto& c : copies) {
    g.coords.insert(g.coords.end(), c.q.coords.begin(), c.q.coords.end());
    g.n += c.q.n;
  }
  return g;
}

CenterSet TiledInstance::place_centers(const std::vector<CenterSet>& local) const {
  if (local.size() != copies.size()) throw Error(ErrorCode::DimensionMismatch, "need one center set per copy");
  CenterSet out(0, copies.empty() ? 0 : copies[0].offset.size());
  for (std::size_t i = 0; i < copies.size(); ++i) {
    const auto& off = copies[i].offset;
    if (local[i].d != off.size()) throw Error(ErrorCode::DimensionMismatch, "center dimension mismatch");
    for (std::size_t r = 0; r < local[i].n; ++r) {
      std::vector<double> c(off.size());
      for (std::size_t j = 0; j < off.size(); ++j) c[j] = local[i].row(r)[j] + static_cast<double>(off[j]);
      out.push_back(c);
    }
  }
  return out;
}

TiledInstance tile_instances(const std::vector<std::pair<GridDataset, GridDataset>>& pairs, std::size_t k,
                             std::uint64_t delta_tilde) {
  if (k < 2 || k % 2 != 0) throw Error(ErrorCode::InvalidArgument, "k must be even and at least 2");
  if (pairs.size() != k / 2) throw Error(ErrorCode::InvalidArgument, "need exactly k/2 instance pairs");
  if (delta_tilde < 2) throw Error(ErrorCode::InvalidArgument, "delta_tilde must be at least 2");
  const std::size_t d = pairs[0].first.d;
  for (const auto& [p, q] : pairs) {
    if (p.d != d || q.d != d) throw Error(ErrorCode::DimensionMismatch, "all copies must share d");
    for (const GridDataset* g : {&p, &q})
      for (auto v : g->coords)
        if (v < 1 || static_cast<std::uint64_t>(v) > delta_tilde)
          throw Error(ErrorCode::OutOfGrid, "copy coordinate outside [1, delta_tilde]");
  }

  // Smallest m with m^d >= k, computed with saturation.
  auto power_at_least = [&](std::uint64_t m, std::uint64_t target) {
    std::uint64_t acc = 1;
    for (std::size_t j = 0; j < d; ++j) {
      if (acc >= target) return true;
      acc *= m;
    }
    return acc >= target;
  };
  std::uint64_t m = 1;
  while (!power_at_least(m, k)) ++m;
  if (!power_at_least(m, pairs.size())) throw Error(ErrorCode::Capacity, "not enough cells for the copies");

  TiledInstance out;
  out.total_k = k;
  out.delta_tilde = delta_tilde;
  out.cells_per_axis = m;
  out.delta = 4 * m * delta_tilde;
  const auto dt = static_cast<std::int64_t>(delta_tilde);
  const std::int64_t base = 2 * dt - (dt + 1) / 2;
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    TileCopy copy;
    copy.offset.assign(d, base);
    std::size_t rem = c;
    for (std::size_t j = d; j-- > 0 && rem > 0;) {
      copy.offset[j] += 4 * dt * static_cast<std::int64_t>(rem % m);
      rem /= m;
    }
    copy.p = pairs[c].first;
    copy.q = pairs[c].second;
    for (GridDataset* g : {&copy.p, &copy.q}) {
      g->delta = out.delta;
      for (std::size_t i = 0; i < g->n; ++i)
        for (std::size_t j = 0; j < d; ++j) g->row(i)[j] += copy.offset[j];
      g->validate();
    }
    out.copies.push_back(std::move(copy));
  }
  return out;
}

bool is_separated(double cost_p, double cost_q, double eps) {
  if (cost_q == 0.0) return cost_p > 0.0;
  return cost_p <= (1.0 - 3.0 * eps) * cost_q || cost_p >= (1.0 + 3.0 * eps) * cost_q;
}

SeparationWitness separation_witness(const GridDataset& p, const GridDataset& q, const CenterSet& c,
                                     const ZRational& z, double eps) {
  if (p.d != q.d) throw Error(ErrorCode::DimensionMismatch, "datasets must share d");
  SeparationWitness w;
  w.centers = c;
  w.cost_p = cost(p, c, z);
  w.cost_q = cost(q, c, z);
  w.separated = is_separated(w.cost_p, w.cost_q, eps);
  return w;
}

GridDataset loglog_family_instance(std::size_t k, std::size_t n, const GridDataset& anchors,
                                   std::vector<unsigned> m_choices, std::uint64_t seed) {
  if (k < 2 || k % 2 != 0) throw Error(ErrorCode::InvalidArgument, "k must be even and at least 2");
  if (n < k) throw Error(ErrorCode::InvalidArgument, "need n >= k");
  if ((2 * n) % k != 0) throw Error(ErrorCode::InvalidArgument, "2n/k must be an integer");
  const std::size_t groups = k / 2;
  if (anchors.n != groups) throw Error(ErrorCode::InvalidArgument, "need exactly k/2 anchors");
  anchors.validate();
  for (std::size_t i = 0; i < groups; ++i) {
    for (std::size_t j = i + 1; j < groups; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < anchors.d; ++t) {
        double v = static_cast<double>(anchors.row(i)[t] - anchors.row(j)[t]);
        d2 += v * v;
      }
      if (d2 < 100.0) throw Error(ErrorCode::Precondition, "anchors must be pairwise at least 10 apart");
    }
    if (static_cast<std::uint64_t>(anchors.row(i)[0]) + 1 > anchors.delta)
      throw Error(ErrorCode::Capacity, "anchor + e1 leaves the grid");
  }
  const std::size_t per_group = 2 * n / k;
  unsigned levels = 0;
  while ((std::size_t{2} << levels) <= n / k) ++levels;  // floor(log2(n/k))
  if (levels == 0) throw Error(ErrorCode::InvalidArgument, "need n >= 2k so that log2(n/k) >= 1");

  if (m_choices.empty()) {
    Pcg32 rng(seed);
    for (std::size_t i = 0; i < groups; ++i) m_choices.push_back(1 + static_cast<unsigned>(rng.below(levels)));
  }
  if (m_choices.size() != groups) throw Error(ErrorCode::InvalidArgument, "need one m choice per anchor");

  GridDataset out(0, anchors.d, anchors.delta);
  for (std::size_t i = 0; i < groups; ++i) {
    const unsigned m = m_choices[i];
    if (m < 1 || m > levels) throw Error(ErrorCode::InvalidArgument, "m choice outside [1, log2(n/k)]");
    const std::size_t moved = std::size_t{1} << m;
    for (std::size_t t = 0; t < per_group; ++t) {
      auto a = anchors.row(i);
      out.coords.insert(out.coords.end(), a.begin(), a.end());
      if (t < moved) out.coords[out.coords.size() - anchors.d] += 1;
      ++out.n;
    }
  }
  out.validate();
  return out;
}

CenterSet loglog_witness_centers(const GridDataset& anchors, std::size_t anchor) {
  if (anchor >= anchors.n) throw Error(ErrorCode::InvalidArgument, "anchor index out of range");
  CenterSet c(0, anchors.d);
  for (std::size_t i = 0; i < anchors.n; ++i) {
    std::vector<double> a(anchors.d);
    for (std::size_t j = 0; j < anchors.d; ++j) a[j] = static_cast<double>(anchors.row(i)[j]);
    c.push_back(a);
    a[0] += i == anchor ? 2.0 : 1.0;
    c.push_back(a);
  }
  return c;
}

std::vector<std::size_t> hamming_filter(const std::vector<std::vector<std::uint32_t>>& choices,
                                        std::size_t min_distance) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    bool ok = true;
    for (std::size_t j : kept) {
      if (choices[j].size() != choices[i].size())
        throw Error(ErrorCode::DimensionMismatch, "choice vectors differ in length");
      std::size_t h = 0;
      for (std::size_t t = 0; t < choices[i].size(); ++t) h += choices[i][t] != choices[j][t];
      if (h < min_distance) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

double code_log2_size_bound(std::size_t length, double log2_alphabet, std::size_t min_distance) {
  if (min_distance == 0) return static_cast<double>(length) * log2_alphabet;
  // log2 of (q - 1); equal to log2 q to double precision for large alphabets.
  const double q = std::exp2(log2_alphabet);
  const double log2_qm1 = log2_alphabet > 50.0 ? log2_alphabet : std::log2(std::max(q - 1.0, 1e-300));
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (std::size_t i = 0; i < min_distance && i <= length; ++i) {
    const double lc = (std::lgamma(static_cast<double>(length) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                       std::lgamma(static_cast<double>(length - i) + 1)) /
                      std::log(2.0);
    const double t = lc + static_cast<double>(i) * log2_qm1;
    terms.push_back(t);
    mx = std::max(mx, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp2(t - mx);
  return static_cast<double>(length) * log2_alphabet - (mx + std::log2(s));
}

}  // namespace kz
