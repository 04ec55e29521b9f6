#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kzsketch/anglelab.hpp"
#include "kzsketch/geometry.hpp"

namespace kz {

struct PartialColoring {
  std::vector<int> zeta;  // entries in {-1, 0, +1}
  std::size_t zero_count = 0;
  double discrepancy = 0.0;  // ||U zeta||_inf
  bool guarantee_met = false;
  bool precondition_ok = false;  // row-norm profile passed
  std::size_t restarts_used = 0;
  bool exhausted = false;  // hit max_restarts without meeting the guarantee
};

double coloring_discrepancy(const Matrix& u, std::span<const int> zeta);

PartialColoring find_partial_coloring(const InnerProductMatrix& u, const AngleThresholds& th,
                                      std::size_t max_restarts, std::uint64_t seed);

// Columns of a basis as a point set (one point per column).
RealDataset columns_as_points(const Matrix& m);

// Unit vector Q zeta / sqrt(n) + c_perp with c_perp orthogonal to span(P) and span(Q).
Vector adversarial_center(const OrthonormalBasis& q, const OrthonormalBasis& p, std::span<const int> zeta);

// cost_z(P, {c, -c}) - cost_z(Q, {c, -c}).
double cost_gap(const OrthonormalBasis& p, const OrthonormalBasis& q, const Vector& c, const ZRational& z);

// Inner-product form of the z = 2 gap: 2 (sum |<q_i,c>| - sum |<p_i,c>|).
double inner_product_gap(const OrthonormalBasis& p, const OrthonormalBasis& q, const Vector& c);

struct PowerCenter {
  Vector c;
  bool swapped = false;      // roles of P and Q exchanged to make the input gap positive
  double input_gap = 0.0;    // sum |<p,c_hat>| - sum |<q,c_hat>| after the swap
  double leading_term = 0.0;
  double additive_term = 0.0;
  double bound = 0.0;        // leading_term - additive_term
  double measured_gap = 0.0; // |cost_z(P,{c,-c}) - cost_z(Q,{c,-c})|
};

// Halves c_hat and completes it to unit norm orthogonally to both spans.
PowerCenter center_for_power(const OrthonormalBasis& p, const OrthonormalBasis& q, const Vector& c_hat,
                             const ZRational& z);

// Both inequality chains of the second-order expansion of (1-x)^(z/2).
bool taylor_bounds_check(double x, double z);

struct RoundedInstance {
  GridDataset grid;       // p~ = clamp(ceil((delta/2) p) + ceil(delta/2), 1, delta)
  RealDataset scaled;     // p^ = (delta/2) p + ceil(delta/2), before rounding
  double max_displacement = 0.0;  // max_i ||p~_i - p^_i||
  std::size_t clamped = 0;        // coordinates moved by the clamp
};

RoundedInstance round_and_scale(const RealDataset& points, std::uint64_t delta);
// The same affine map (no rounding) applied to a center.
std::vector<double> scale_center(std::span<const double> c, std::uint64_t delta);

// ceil(10 sqrt(d)/eps) for z = 2, ceil(3072 2^(z/2) sqrt(d) / (z^2 eps)) otherwise; made odd.
std::uint64_t default_delta_tilde(std::size_t d, double eps, const ZRational& z);

struct TileCopy {
  std::vector<std::int64_t> offset;
  GridDataset p;  // in global coordinates
  GridDataset q;
};

struct TiledInstance {
  std::vector<TileCopy> copies;
  std::size_t total_k = 0;
  std::uint64_t delta_tilde = 0;
  std::uint64_t delta = 0;
  std::size_t cells_per_axis = 0;

  GridDataset all_p() const;
  GridDataset all_q() const;
  // Shifts per-copy local centers by each copy's offset and concatenates.
  CenterSet place_centers(const std::vector<CenterSet>& local) const;
};

TiledInstance tile_instances(const std::vector<std::pair<GridDataset, GridDataset>>& pairs, std::size_t k,
                             std::uint64_t delta_tilde);

struct SeparationWitness {
  CenterSet centers;
  double cost_p = 0.0;
  double cost_q = 0.0;
  bool separated = false;
};

// separated iff cost_p lies outside the open interval ((1-3eps) cost_q, (1+3eps) cost_q);
// when cost_q == 0, iff cost_p > 0.
bool is_separated(double cost_p, double cost_q, double eps);
SeparationWitness separation_witness(const GridDataset& p, const GridDataset& q, const CenterSet& c,
                                     const ZRational& z, double eps);

GridDataset loglog_family_instance(std::size_t k, std::size_t n, const GridDataset& anchors,
                                   std::vector<unsigned> m_choices, std::uint64_t seed);
// Two centers per anchor at p_j and p_j + e_1, except p_i + 2 e_1 at `anchor`.
CenterSet loglog_witness_centers(const GridDataset& anchors, std::size_t anchor);

// Greedy filter keeping choice vectors pairwise at Hamming distance >= min_distance.
std::vector<std::size_t> hamming_filter(const std::vector<std::vector<std::uint32_t>>& choices,
                                        std::size_t min_distance);
// Gilbert-Varshamov style log2 lower bound on a code of `length` over `alphabet`
// symbols with minimum distance `min_distance`.
double code_log2_size_bound(std::size_t length, double log2_alphabet, std::size_t min_distance);

}  // namespace kz
