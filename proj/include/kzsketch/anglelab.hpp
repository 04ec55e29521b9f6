#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kz {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// d x n matrix with orthonormal columns.
struct OrthonormalBasis {
  Matrix m;

  OrthonormalBasis() = default;
  // Checks ||B^T B - I||_max <= tol and n <= d.
  explicit OrthonormalBasis(Matrix mat, double tol = 1e-10);

  Eigen::Index d() const { return m.rows(); }
  Eigen::Index n() const { return m.cols(); }
  double orthonormality_error() const;
};

struct InnerProductMatrix {
  Matrix u;                       // P^T Q
  std::vector<double> row_norms;  // Euclidean norms of the rows of u
};

struct PrincipalAngles {
  std::vector<double> sigmas;  // descending, clamped to [0, 1]
  std::vector<double> thetas;  // ascending, in [0, pi/2]
};

struct AngleThresholds {
  double a = 1e-6 / 32.0;
  double cos_star = 1e-3 / (4.0 * 1.4142135623730951);
  double row_norm_bound = 1e-2;
  double outlier_fraction = 1e-4 / 16.0;
  // 1-based index into the ascending angles; defaults to ceil(a * n).
  std::optional<std::size_t> theta_index;
  // Overrides arccos(cos_star) when set.
  std::optional<double> theta_star_override;

  double theta_star() const;
  std::size_t index_for(std::size_t n) const;
  void validate() const;
};

// Gaussian d x n matrix orthonormalized by QR with R_ii > 0.
OrthonormalBasis sample_haar_basis(std::size_t d, std::size_t n, std::uint64_t seed);

InnerProductMatrix inner_products(const OrthonormalBasis& p, const OrthonormalBasis& q);

PrincipalAngles principal_angles(const OrthonormalBasis& p, const OrthonormalBasis& q);

struct RowNormProfile {
  std::vector<std::size_t> small_rows;  // K: squared row norm <= row_norm_bound
  std::size_t outliers = 0;
  bool pass = false;
};

RowNormProfile row_norm_profile(const InnerProductMatrix& u, const AngleThresholds& th);

struct FamilyPair {
  std::size_t i = 0, j = 0;
  double theta = 0.0;
  bool pass = false;
};

struct FamilyReport {
  std::size_t theta_index = 1;
  double theta_star = 0.0;
  std::vector<FamilyPair> pairs;
  std::size_t passed = 0;
  double pass_fraction() const { return pairs.empty() ? 0.0 : static_cast<double>(passed) / pairs.size(); }
};

FamilyReport verify_family(std::span<const OrthonormalBasis> bases, const AngleThresholds& th);

struct AngleStatistics {
  std::size_t d = 0, n = 0, trials = 0;
  std::size_t theta_index = 1;
  std::vector<double> theta1;       // sorted ascending
  std::vector<double> theta_index_values;  // sorted ascending
  std::vector<double> sigma1;       // in trial order
  double mean_sigma1 = 0.0;

  // Type-7 (linear interpolation) sample quantile.
  static double quantile(const std::vector<double>& sorted, double q);
};

AngleStatistics angle_statistics(std::size_t d, std::size_t n, std::size_t trials, std::uint64_t seed,
                                 const AngleThresholds& th = {});

// m orthonormal columns spanning a subspace orthogonal to span(p).
Matrix orthogonal_complement(const Matrix& p, std::size_t m);

// Pair (P, Q) whose principal-angle cosines are exactly `cosines`
// (descending order not required). Needs d >= 2n.
std::pair<OrthonormalBasis, OrthonormalBasis> sample_pair_with_cosines(std::size_t d, std::size_t n,
                                                                        std::span<const double> cosines,
                                                                        std::uint64_t seed);

// Point at parameter t in [0,1] on the geodesic from span(q) (t=0) to span(p) (t=1).
OrthonormalBasis geodesic_toward(const OrthonormalBasis& q, const OrthonormalBasis& p, double t);

}  // namespace kz
