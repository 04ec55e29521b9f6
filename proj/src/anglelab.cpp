#include "kzsketch/anglelab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kzsketch/coreset.hpp"
#include "kzsketch/error.hpp"
#include "kzsketch/rng.hpp"

namespace kz {

OrthonormalBasis::OrthonormalBasis(Matrix mat, double tol) : m(std::move(mat)) {
  if (m.cols() > m.rows())
    throw Error(ErrorCode::InvalidArgument, "basis has more columns than rows");
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, "basis has non-finite entries");
  if (orthonormality_error() > tol)
    throw Error(ErrorCode::Precondition, "columns are not orthonormal");
}

double OrthonormalBasis::orthonormality_error() const {
  if (m.cols() == 0) return 0.0;
  Matrix g = m.transpose() * m;
  g -= Matrix::Identity(m.cols(), m.cols());
  return g.cwiseAbs().maxCoeff();
}

double AngleThresholds::theta_star() const {
  return theta_star_override ? *theta_star_override : std::acos(cos_star);
}

std::size_t AngleThresholds::index_for(std::size_t n) const {
  if (theta_index) return *theta_index;
  auto idx = static_cast<std::size_t>(std::ceil(a * static_cast<double>(n)));
  return std::max<std::size_t>(idx, 1);
}

void AngleThresholds::validate() const {
  auto unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!unit(a) || !unit(cos_star) || !unit(row_norm_bound) || !unit(outlier_fraction))
    throw Error(ErrorCode::InvalidArgument, "angle thresholds must lie in (0,1)");
  double ts = theta_star();
  if (!(ts > 0.0 && ts < std::numbers::pi / 2)) throw Error(ErrorCode::InvalidArgument, "theta* must lie in (0, pi/2)");
  if (theta_index && *theta_index == 0) throw Error(ErrorCode::InvalidArgument, "theta index is 1-based");
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Pcg32 rng(seed);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  return g;
}

// Thin Q of a QR factorization with the signs chosen so that diag(R) > 0.
Matrix sign_fixed_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

Vector singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

}  // namespace

OrthonormalBasis sample_haar_basis(std::size_t d, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > d) throw Error(ErrorCode::InvalidArgument, "need 1 <= n <= d");
  return OrthonormalBasis(sign_fixed_q(gaussian(d, n, seed)));
}

InnerProductMatrix inner_products(const OrthonormalBasis& p, const OrthonormalBasis& q) {
  if (p.d() != q.d() || p.n() != q.n())
    throw Error(ErrorCode::DimensionMismatch, "bases must share d and n");
  InnerProductMatrix out;
  out.u = p.m.transpose() * q.m;
  out.row_norms.resize(static_cast<std::size_t>(out.u.rows()));
  for (Eigen::Index i = 0; i < out.u.rows(); ++i) out.row_norms[static_cast<std::size_t>(i)] = out.u.row(i).norm();
  return out;
}

PrincipalAngles principal_angles(const OrthonormalBasis& p, const OrthonormalBasis& q) {
  if (p.d() != q.d() || p.n() != q.n())
    throw Error(ErrorCode::DimensionMismatch, "bases must share d and n");
  const Matrix m = p.m.transpose() * q.m;
  const Vector cosines = singular_values(m);          // descending
  const Vector sines = singular_values(q.m - p.m * m);  // descending
  const auto n = static_cast<std::size_t>(p.n());
  PrincipalAngles out;
  out.sigmas.resize(n);
  out.thetas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::clamp(cosines(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    out.sigmas[i] = c;
    // acos loses half the digits near 0; the sine of the residual does not.
    if (c * c >= 0.5) {
      const double s = std::clamp(sines(static_cast<Eigen::Index>(n - 1 - i)), 0.0, 1.0);
      out.thetas[i] = std::asin(s);
    } else {
      out.thetas[i] = std::acos(c);
    }
  }
  std::sort(out.thetas.begin(), out.thetas.end());
  return out;
}

RowNormProfile row_norm_profile(const InnerProductMatrix& u, const AngleThresholds& th) {
  RowNormProfile out;
  for (std::size_t i = 0; i < u.row_norms.size(); ++i) {
    const double r2 = u.row_norms[i] * u.row_norms[i];
    if (r2 <= th.row_norm_bound) out.small_rows.push_back(i);
    else ++out.outliers;
  }
  const double n = static_cast<double>(u.row_norms.size());
  out.pass = static_cast<double>(out.small_rows.size()) >= (1.0 - th.outlier_fraction) * n;
  return out;
}

FamilyReport verify_family(std::span<const OrthonormalBasis> bases, const AngleThresholds& th) {
  th.validate();
  if (bases.size() < 2) throw Error(ErrorCode::InvalidArgument, "a family needs at least two bases");
  const auto n = static_cast<std::size_t>(bases[0].n());
  FamilyReport rep;
  rep.theta_index = th.index_for(n);
  rep.theta_star = th.theta_star();
  if (rep.theta_index > n) throw Error(ErrorCode::InvalidArgument, "theta index exceeds n");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    for (std::size_t j = i + 1; j < bases.size(); ++j) {
      auto pa = principal_angles(bases[i], bases[j]);
      FamilyPair fp{i, j, pa.thetas[rep.theta_index - 1], false};
      fp.pass = fp.theta >= rep.theta_star;
      rep.passed += fp.pass ? 1 : 0;
      rep.pairs.push_back(fp);
    }
  }
  return rep;
}

double AngleStatistics::quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AngleStatistics angle_statistics(std::size_t d, std::size_t n, std::size_t trials, std::uint64_t seed,
                                 const AngleThresholds& th) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
  AngleStatistics st;
  st.d = d;
  st.n = n;
  st.trials = trials;
  st.theta_index = th.index_for(n);
  if (st.theta_index > n) throw Error(ErrorCode::InvalidArgument, "theta index exceeds n");
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto p = sample_haar_basis(d, n, derive_seed(seed, 2 * t));
    auto q = sample_haar_basis(d, n, derive_seed(seed, 2 * t + 1));
    auto pa = principal_angles(p, q);
    st.theta1.push_back(pa.thetas[0]);
    st.theta_index_values.push_back(pa.thetas[st.theta_index - 1]);
    st.sigma1.push_back(pa.sigmas[0]);
    sum += pa.sigmas[0];
  }
  std::sort(st.theta1.begin(), st.theta1.end());
  std::sort(st.theta_index_values.begin(), st.theta_index_values.end());
  st.mean_sigma1 = sum / static_cast<double>(trials);
  return st;
}

Matrix orthogonal_complement(const Matrix& p, std::size_t m) {
  const auto d = static_cast<std::size_t>(p.rows());
  Eigen::ColPivHouseholderQR<Matrix> qr(p);
  const auto rank = static_cast<std::size_t>(qr.rank());
  if (rank + m > d) throw Error(ErrorCode::Precondition, "complement has too few dimensions");
  Matrix full = qr.householderQ();
  return full.middleCols(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(m));
}

std::pair<OrthonormalBasis, OrthonormalBasis> sample_pair_with_cosines(std::size_t d, std::size_t n,
                                                                        std::span<const double> cosines,
                                                                        std::uint64_t seed) {
  if (cosines.size() != n) throw Error(ErrorCode::DimensionMismatch, "need one cosine per column");
  if (d < 2 * n) throw Error(ErrorCode::Precondition, "need d >= 2n");
  Matrix p = sample_haar_basis(d, n, derive_seed(seed, 0)).m;
  Matrix g = gaussian(d, n, derive_seed(seed, 1));
  g -= p * (p.transpose() * g);
  Matrix w = sign_fixed_q(g);
  w -= p * (p.transpose() * w);  // second pass keeps w orthogonal to p to roundoff
  w = sign_fixed_q(w);
  Matrix q(d, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::clamp(cosines[i], 0.0, 1.0);
    const double s = std::sqrt(1.0 - c * c);
    q.col(static_cast<Eigen::Index>(i)) = c * p.col(static_cast<Eigen::Index>(i)) + s * w.col(static_cast<Eigen::Index>(i));
  }
  Matrix r1 = sample_haar_basis(n, n, derive_seed(seed, 2)).m;
  Matrix r2 = sample_haar_basis(n, n, derive_seed(seed, 3)).m;
  return {OrthonormalBasis(p * r1), OrthonormalBasis(q * r2)};
}

OrthonormalBasis geodesic_toward(const OrthonormalBasis& q, const OrthonormalBasis& p, double t) {
  if (p.d() != q.d() || p.n() != q.n())
    throw Error(ErrorCode::DimensionMismatch, "bases must share d and n");
  Eigen::JacobiSVD<Matrix> svd(p.m.transpose() * q.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix pv = p.m * svd.matrixU();
  Matrix qv = q.m * svd.matrixV();
  Matrix out(q.d(), q.n());
  for (Eigen::Index i = 0; i < q.n(); ++i) {
    const double c = svd.singularValues()(i);
    Vector resid = qv.col(i) - c * pv.col(i);
    const double s = resid.norm();
    const double theta = std::atan2(s, c);
    const double nt = (1.0 - t) * theta;
    if (s > 1e-300) out.col(i) = std::cos(nt) * pv.col(i) + std::sin(nt) * (resid / s);
    else out.col(i) = pv.col(i);
  }
  return OrthonormalBasis(out, 1e-8);
}

}  // namespace kz
