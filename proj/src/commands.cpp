#include "kzsketch/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "kzsketch/anglelab.hpp"
#include "kzsketch/codec.hpp"
#include "kzsketch/coloring.hpp"
#include "kzsketch/coreset.hpp"
#include "kzsketch/dataset_io.hpp"
#include "kzsketch/distsim.hpp"
#include "kzsketch/error.hpp"
#include "kzsketch/rng.hpp"

namespace kz::cli {

Json ExperimentSpec::to_json() const {
  Json j;
  j["command"] = command;
  j["seed"] = seed;
  j["params"] = params;
  j["report_format"] = report_format;
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const Json& j) {
  ExperimentSpec s;
  try {
    s.command = j.at("command").get<std::string>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.params = j.value("params", Json::object());
    s.report_format = j.value("report_format", std::string("json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed experiment spec: ") + e.what());
  }
  return s;
}

CenterSet sample_query_centers(const GridDataset& data, std::size_t k, std::uint64_t seed) {
  if (data.n == 0) throw Error(ErrorCode::InvalidArgument, "query centers need a non-empty dataset");
  Pcg32 rng(seed);
  CenterSet c(k, data.d);
  const double span = static_cast<double>(data.delta);
  for (std::size_t j = 0; j < k; ++j) {
    auto row = c.row(j);
    if (j % 2 == 0) {
      for (auto& v : row) v = 1.0 + rng.uniform() * (span - 1.0);
    } else {
      auto p = data.row(rng.below(data.n));
      for (std::size_t t = 0; t < data.d; ++t) row[t] = static_cast<double>(p[t]) + rng.normal() * span / 64.0;
    }
  }
  return c;
}

std::string default_report_dir() {
  const char* v = std::getenv("KZSKETCH_REPORT_DIR");
  return v ? std::string(v) : std::string();
}

namespace {

// ---------------------------------------------------------------- parameters

const Json* find_param(const ExperimentSpec& s, const std::string& name) {
  auto it = s.params.find(name);
  if (it == s.params.end() || it->is_null()) return nullptr;
  return &*it;
}

template <class T>
T param(const ExperimentSpec& s, const std::string& name) {
  const Json* p = find_param(s, name);
  if (!p) throw Error(ErrorCode::InvalidArgument, "missing parameter '" + name + "'");
  try {
    return p->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "parameter '" + name + "' has the wrong type");
  }
}

template <class T>
T param_or(const ExperimentSpec& s, const std::string& name, T fallback) {
  return find_param(s, name) ? param<T>(s, name) : fallback;
}

std::string path_param(const ExperimentSpec& s, const std::string& name) {
  return param_or<std::string>(s, name, "");
}

std::size_t positive(const ExperimentSpec& s, const std::string& name) {
  const auto v = param<std::int64_t>(s, name);
  if (v < 1) throw Error(ErrorCode::InvalidArgument, "parameter '" + name + "' must be positive");
  return static_cast<std::size_t>(v);
}

double epsilon_param(const ExperimentSpec& s) {
  const double e = param<double>(s, "eps");
  if (!(e > 0.0 && e < 1.0)) throw Error(ErrorCode::InvalidArgument, "eps must lie in (0,1)");
  return e;
}

ZRational z_param(const ExperimentSpec& s) {
  const Json* p = find_param(s, "z");
  if (!p) return ZRational(2, 1);
  if (p->is_string()) return ZRational::parse(p->get<std::string>());
  if (p->is_number_integer()) return ZRational(p->get<std::int64_t>(), 1);
  return ZRational::parse(p->dump());
}

CoresetMethod method_from(const std::string& m) {
  if (m == "identity") return CoresetMethod::Identity;
  if (m == "sensitivity") return CoresetMethod::Sensitivity;
  throw Error(ErrorCode::InvalidArgument, "unknown coreset method '" + m + "'");
}

const char* method_name(CoresetMethod m) { return m == CoresetMethod::Identity ? "identity" : "sensitivity"; }

CoresetOptions coreset_options(const ExperimentSpec& s) {
  CoresetOptions o;
  o.c0 = param_or<double>(s, "c0", o.c0);
  o.delta = param_or<double>(s, "coreset_delta", o.delta);
  return o;
}

GridDataset load_data(const ExperimentSpec& s) {
  const auto path = path_param(s, "data");
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "missing parameter 'data'");
  return load_dataset(path, param_or<std::uint64_t>(s, "delta", 0));
}

ProblemConfig make_config(const GridDataset& g, std::size_t k, const ZRational& z, double eps) {
  ProblemConfig c;
  c.n = g.n;
  c.d = g.d;
  c.k = k;
  c.z = z;
  c.delta = g.delta;
  c.epsilon = eps;
  c.validate();
  return c;
}

// ---------------------------------------------------------------- reporting

class Certificates {
 public:
  void add(const std::string& name, double lhs, const std::string& relation, double rhs, bool pass) {
    Json c;
    c["name"] = name;
    c["lhs"] = lhs;
    c["relation"] = relation;
    c["rhs"] = rhs;
    c["pass"] = pass;
    list_.push_back(std::move(c));
    all_ = all_ && pass;
  }
  void at_most(const std::string& name, double lhs, double rhs) { add(name, lhs, "<=", rhs, lhs <= rhs); }
  void at_least(const std::string& name, double lhs, double rhs) { add(name, lhs, ">=", rhs, lhs >= rhs); }

  bool all() const { return all_; }
  const Json& list() const { return list_; }

 private:
  Json list_ = Json::array();
  bool all_ = true;
};

CommandResult finish(const ExperimentSpec& spec, Json results, const Certificates& certs) {
  CommandResult r;
  r.report["spec"] = spec.to_json();
  r.report["results"] = std::move(results);
  r.report["certificates"] = certs.list();
  r.report["pass"] = certs.all();
  r.exit_code = certs.all() ? kPass : kAssertionFailed;
  return r;
}

Json ledger_json(const BitLedger& l) {
  Json j;
  j["header_bits"] = l.header_bits;
  j["center_bits"] = l.center_bits;
  j["weight_bits"] = l.weight_bits;
  j["coordinate_bits"] = l.coordinate_bits;
  j["total_bits"] = l.total_bits;
  return j;
}

Json header_json(const SketchHeader& h) {
  Json j;
  j["k"] = h.k;
  j["d"] = h.d;
  j["z"] = h.z.str();
  j["delta"] = h.delta;
  j["eps"] = h.eps.value();
  j["n"] = h.n;
  j["size"] = h.size;
  j["f_w"] = h.f_w;
  j["f_x"] = h.f_x;
  j["real_deltas"] = h.real_deltas;
  return j;
}

// Constant-16 form of the bit bound used as a hard budget.
double bit_budget(std::uint64_t k, std::uint64_t d, std::uint64_t delta, std::uint64_t s, double eps, double z,
                  std::uint64_t n) {
  const double kd = static_cast<double>(k * d);
  const double dd = static_cast<double>(d);
  const double ld = std::log2(static_cast<double>(delta));
  double per_point = 0.0;
  if (s > 0) {
    const double inner = std::max(std::log2(4.0 * static_cast<double>(s) / eps), std::log2(static_cast<double>(n)));
    per_point = dd * std::log2(4.0 * z / eps) + dd * std::log2(ld) + std::log2(4.0 / eps) + std::log2(inner);
  }
  return 16.0 * (kd * ld + static_cast<double>(s) * per_point + 256.0);
}

struct ErrorStats {
  double worst = 0.0;
  double mean = 0.0;
};

template <class Estimator>
ErrorStats query_errors(const GridDataset& data, std::size_t k, const ZRational& z, std::size_t trials,
                        std::uint64_t seed, Estimator&& estimate) {
  ErrorStats st;
  for (std::size_t t = 0; t < trials; ++t) {
    auto c = sample_query_centers(data, k, derive_seed(seed, 100 + t));
    const double exact = cost(data, c, z);
    const double est = estimate(c);
    double e = 0.0;
    if (exact == 0.0)
      e = est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    else
      e = std::abs(est - exact) / exact;
    st.worst = std::max(st.worst, e);
    st.mean += e;
  }
  if (trials > 0) st.mean /= static_cast<double>(trials);
  return st;
}

void write_sketch(const std::string& path, const Sketch& s) {
  if (!path.empty()) write_file(path, s.bytes);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// ---------------------------------------------------------------- commands

CommandResult cmd_generate(const ExperimentSpec& s) {
  const std::size_t n = positive(s, "n");
  const std::size_t d = positive(s, "d");
  const auto delta = param<std::uint64_t>(s, "delta");
  if (delta < 2) throw Error(ErrorCode::InvalidArgument, "delta must be at least 2");
  const auto clusters = param_or<std::uint64_t>(s, "clusters", 0);
  const auto out = path_param(s, "out");

  Pcg32 rng(s.seed);
  GridDataset g(n, d, delta);
  if (clusters == 0) {
    for (auto& c : g.coords) c = 1 + static_cast<std::int64_t>(rng.below(delta));
  } else {
    std::vector<double> centers(clusters * d);
    for (auto& c : centers) c = 1.0 + static_cast<double>(rng.below(delta));
    const double spread = std::max(1.0, static_cast<double>(delta) / 32.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.below(clusters);
      for (std::size_t t = 0; t < d; ++t) {
        const double v = std::nearbyint(centers[j * d + t] + rng.normal() * spread);
        g.coords[i * d + t] = static_cast<std::int64_t>(std::clamp(v, 1.0, static_cast<double>(delta)));
      }
    }
  }

  std::uint64_t bytes = 0;
  if (!out.empty()) {
    if (std::filesystem::path(out).extension() == ".csv") {
      std::string text;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < d; ++t) {
          if (t) text += ',';
          text += std::to_string(g.row(i)[t]);
        }
        text += '\n';
      }
      write_text(out, text);
      bytes = text.size();
    } else {
      auto b = serialize_dataset(g);
      write_file(out, b);
      bytes = b.size();
    }
  }
  Json r;
  r["n"] = n;
  r["d"] = d;
  r["delta"] = delta;
  r["clusters"] = clusters;
  r["bytes_written"] = bytes;
  return finish(s, std::move(r), Certificates{});
}

CommandResult cmd_encode(const ExperimentSpec& s) {
  auto data = load_data(s);
  const auto z = z_param(s);
  const double eps = epsilon_param(s);
  auto cfg = make_config(data, positive(s, "k"), z, eps);
  const auto method = method_from(param_or<std::string>(s, "method", "identity"));
  auto res = compress(data, cfg, method, s.seed, coreset_options(s));
  write_sketch(path_param(s, "out"), res.sketch);

  const auto& L = res.sketch.ledger;
  const double budget = bit_budget(cfg.k, cfg.d, cfg.delta, res.coreset.size(), eps, z.value(), cfg.n);
  Json r;
  r["n"] = cfg.n;
  r["d"] = cfg.d;
  r["k"] = cfg.k;
  r["z"] = z.str();
  r["delta"] = cfg.delta;
  r["eps"] = eps;
  r["method"] = method_name(method);
  r["approx_cost"] = res.centers.cost;
  r["coreset_size"] = res.coreset.size();
  r["weight_sum"] = res.coreset.weight_sum();
  r["ledger"] = ledger_json(L);
  r["bytes"] = res.sketch.bytes.size();
  r["theoretical_upper_bound"] =
      theoretical_upper_bound(cfg.n, cfg.k, cfg.d, cfg.delta, eps, z, res.coreset.size());
  r["bit_budget"] = budget;

  Certificates c;
  if (method == CoresetMethod::Sensitivity) {
    const double n = static_cast<double>(cfg.n);
    const double e = res.coreset.epsilon;
    c.at_least("weight_sum_lower", res.coreset.weight_sum(), (1 - 4 * e) * n);
    c.at_most("weight_sum_upper", res.coreset.weight_sum(), (1 + 4 * e) * n);
  }
  c.at_most("total_bits_budget", static_cast<double>(L.total_bits), budget);
  return finish(s, std::move(r), c);
}

CommandResult cmd_eval(const ExperimentSpec& s) {
  const auto sketch_path = path_param(s, "sketch");
  if (sketch_path.empty()) throw Error(ErrorCode::InvalidArgument, "missing parameter 'sketch'");
  auto dec = decode(read_file(sketch_path));
  const auto centers_path = path_param(s, "centers");
  CenterSet c = centers_path.empty() ? dec.centers : load_real_csv(centers_path);
  const double est = estimate_cost(dec, c);
  Json r;
  r["query_centers"] = c.n;
  r["centers_source"] = centers_path.empty() ? "stored" : "file";
  r["estimate"] = est;
  Certificates certs;
  certs.add("estimate_finite_nonnegative", est, ">=", 0.0, std::isfinite(est) && est >= 0.0);
  const auto data_path = path_param(s, "data");
  if (!data_path.empty()) {
    auto data = load_dataset(data_path, dec.header.delta);
    const double exact = cost(RealDataset::from_grid(data), c, dec.header.z);
    r["exact"] = exact;
    const double rel = exact == 0.0 ? (est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                    : std::abs(est - exact) / exact;
    r["relative_error"] = rel;
  }
  return finish(s, std::move(r), certs);
}

CommandResult cmd_size(const ExperimentSpec& s) {
  const auto sketch_path = path_param(s, "sketch");
  if (sketch_path.empty()) throw Error(ErrorCode::InvalidArgument, "missing parameter 'sketch'");
  auto bytes = read_file(sketch_path);
  auto dec = decode(bytes);
  auto again = reencode(dec);
  const auto L = bit_size(again);
  const std::uint64_t file_bits = bytes.size() * 8;
  const auto& h = dec.header;
  Json r;
  r["header"] = header_json(h);
  r["ledger"] = ledger_json(L);
  r["file_bits"] = file_bits;
  r["pad_bits"] = file_bits - std::min(file_bits, L.total_bits);
  r["theoretical_upper_bound"] = theoretical_upper_bound(h.n, h.k, h.d, h.delta, h.eps.value(), h.z, h.size);
  r["bit_budget"] = bit_budget(h.k, h.d, h.delta, h.size, h.eps.value(), h.z.value(), h.n);
  Certificates c;
  c.at_least("file_bits_cover_ledger", static_cast<double>(file_bits), static_cast<double>(L.total_bits));
  c.at_most("padding_below_a_byte", static_cast<double>(file_bits), static_cast<double>(L.total_bits + 7));
  c.add("reencode_identical", again.bytes == bytes ? 1.0 : 0.0, "==", 1.0, again.bytes == bytes);
  return finish(s, std::move(r), c);
}

CommandResult cmd_verify(const ExperimentSpec& s) {
  auto data = load_data(s);
  const auto sketch_path = path_param(s, "sketch");
  DecodedSketch dec;
  std::string source;
  if (!sketch_path.empty()) {
    dec = decode(read_file(sketch_path));
    source = "file";
    if (dec.header.d != data.d || dec.header.delta != data.delta || dec.header.n != data.n)
      throw Error(ErrorCode::HeaderMismatch, "sketch header does not match the dataset");
  } else {
    auto cfg = make_config(data, positive(s, "k"), z_param(s), epsilon_param(s));
    auto method = method_from(param_or<std::string>(s, "method", "identity"));
    dec = decode(compress(data, cfg, method, s.seed, coreset_options(s)).sketch);
    source = method_name(method);
  }
  const double eps = dec.header.eps.value();
  const auto trials = param_or<std::uint64_t>(s, "trials", 200);
  auto qk = param_or<std::uint64_t>(s, "query_k", 0);
  if (qk == 0) qk = dec.header.k;
  auto st = query_errors(data, qk, dec.header.z, trials, s.seed,
                         [&](const CenterSet& c) { return estimate_cost(dec, c); });
  Json r;
  r["sketch_source"] = source;
  r["header"] = header_json(dec.header);
  r["trials"] = trials;
  r["query_k"] = qk;
  r["worst_relative_error"] = st.worst;
  r["mean_relative_error"] = st.mean;
  Certificates c;
  c.at_most("worst_relative_error", st.worst, eps);
  return finish(s, std::move(r), c);
}

AngleThresholds thresholds_from(const ExperimentSpec& s) {
  AngleThresholds th;
  th.a = param_or<double>(s, "a", th.a);
  th.cos_star = param_or<double>(s, "cos_star", th.cos_star);
  th.row_norm_bound = param_or<double>(s, "row_norm_bound", th.row_norm_bound);
  th.outlier_fraction = param_or<double>(s, "outlier_fraction", th.outlier_fraction);
  if (auto idx = param_or<std::uint64_t>(s, "theta_index", 0); idx > 0) th.theta_index = idx;
  if (auto ts = param_or<double>(s, "theta_star", 0.0); ts > 0.0) th.theta_star_override = ts;
  th.validate();
  return th;
}

Json quantiles_json(const std::vector<double>& sorted) {
  Json j;
  j["min"] = sorted.front();
  j["q01"] = AngleStatistics::quantile(sorted, 0.01);
  j["q05"] = AngleStatistics::quantile(sorted, 0.05);
  j["median"] = AngleStatistics::quantile(sorted, 0.5);
  j["max"] = sorted.back();
  return j;
}

CommandResult cmd_angles(const ExperimentSpec& s) {
  const auto th = thresholds_from(s);
  Json r;
  Certificates c;
  const auto fixture = param_or<std::string>(s, "fixture", "");
  if (!fixture.empty()) {
    if (fixture != "tilted-plane") throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + fixture + "'");
    Matrix x = Matrix::Zero(3, 2), y = Matrix::Zero(3, 2);
    x(0, 0) = 1;
    x(1, 1) = 1;
    y(0, 0) = 1;
    y(1, 1) = std::cos(std::numbers::pi / 3);
    y(2, 1) = std::sin(std::numbers::pi / 3);
    auto pa = principal_angles(OrthonormalBasis(x), OrthonormalBasis(y));
    r["fixture"] = fixture;
    r["thetas"] = pa.thetas;
    r["sigmas"] = pa.sigmas;
    c.at_most("theta1_error", std::abs(pa.thetas[0]), 1e-9);
    c.at_most("theta2_error", std::abs(pa.thetas[1] - std::numbers::pi / 3), 1e-9);
    return finish(s, std::move(r), c);
  }

  const std::size_t d = positive(s, "d");
  const std::size_t n = positive(s, "n");
  const std::size_t trials = positive(s, "trials");
  auto st = angle_statistics(d, n, trials, s.seed, th);
  r["d"] = d;
  r["n"] = n;
  r["trials"] = trials;
  r["theta_index"] = st.theta_index;
  r["theta_star"] = th.theta_star();
  r["mean_sigma1"] = st.mean_sigma1;
  r["theta1"] = quantiles_json(st.theta1);
  r["theta_at_index"] = quantiles_json(st.theta_index_values);
  const auto above = std::count_if(st.theta_index_values.begin(), st.theta_index_values.end(),
                                   [&](double t) { return t >= th.theta_star(); });
  r["fraction_at_least_theta_star"] = static_cast<double>(above) / static_cast<double>(trials);

  auto p = sample_haar_basis(d, n, derive_seed(s.seed, 0));
  auto q = sample_haar_basis(d, n, derive_seed(s.seed, 1));
  auto pa = principal_angles(p, q);
  auto ip = inner_products(p, q);
  r["first_trial_thetas"] = pa.thetas;
  double ssq = 0.0;
  for (double sg : pa.sigmas) ssq += sg * sg;
  c.at_most("sigma_frobenius_identity", std::abs(ssq - ip.u.squaredNorm()), 1e-8);

  const auto basis_out = path_param(s, "basis_out");
  if (!basis_out.empty()) {
    Matrix both(d, 2 * n);
    both << p.m, q.m;
    write_file(basis_out, serialize_matrix(both));
  }

  const auto family = param_or<std::uint64_t>(s, "family", 0);
  if (family >= 2) {
    std::vector<OrthonormalBasis> bases;
    for (std::uint64_t i = 0; i < family; ++i) bases.push_back(sample_haar_basis(d, n, derive_seed(s.seed, 900000 + i)));
    auto rep = verify_family(bases, th);
    Json f;
    f["size"] = family;
    f["pairs"] = rep.pairs.size();
    f["passed"] = rep.passed;
    f["pass_fraction"] = rep.pass_fraction();
    double worst = std::numbers::pi / 2;
    for (const auto& pr : rep.pairs) worst = std::min(worst, pr.theta);
    f["min_theta"] = worst;
    r["family"] = f;
  }
  return finish(s, std::move(r), c);
}

double max_sq_perturbation(const RoundedInstance& r, const std::vector<std::vector<double>>& centers) {
  double worst = 0.0;
  for (std::size_t i = 0; i < r.grid.n; ++i) {
    for (const auto& c : centers) {
      double a = 0.0, b = 0.0;
      for (std::size_t t = 0; t < r.grid.d; ++t) {
        const double hat = r.scaled.row(i)[t] - c[t];
        const double tilde = static_cast<double>(r.grid.row(i)[t]) - c[t];
        a += hat * hat;
        b += tilde * tilde;
      }
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return worst;
}

CommandResult cmd_lowerbound(const ExperimentSpec& s) {
  const std::size_t n = positive(s, "n");
  const std::size_t d = positive(s, "d");
  const auto z = z_param(s);
  const double eps = epsilon_param(s);
  const auto mode = param_or<std::string>(s, "mode", "orthogonal");
  const auto max_restarts = param_or<std::uint64_t>(s, "max_restarts", 10000);
  const auto th = thresholds_from(s);
  if (d <= 2 * n) throw Error(ErrorCode::InvalidArgument, "lowerbound needs d > 2n");

  OrthonormalBasis p, q;
  if (mode == "orthogonal") {
    Matrix big = sample_haar_basis(d, 2 * n, derive_seed(s.seed, 1)).m;
    p = OrthonormalBasis(big.leftCols(static_cast<Eigen::Index>(n)), 1e-9);
    q = OrthonormalBasis(big.middleCols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 1e-9);
  } else if (mode == "haar") {
    p = sample_haar_basis(d, n, derive_seed(s.seed, 1));
    q = sample_haar_basis(d, n, derive_seed(s.seed, 2));
  } else if (mode == "perturbed") {
    Pcg32 rng(derive_seed(s.seed, 3));
    std::vector<double> cosines(n);
    for (auto& v : cosines) v = th.cos_star * rng.uniform();
    auto pr = sample_pair_with_cosines(d, n, cosines, derive_seed(s.seed, 4));
    p = std::move(pr.first);
    q = std::move(pr.second);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + mode + "'");
  }

  Json r;
  Certificates c;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  r["mode"] = mode;
  r["n"] = n;
  r["d"] = d;
  r["z"] = z.str();
  r["eps"] = eps;

  auto pa = principal_angles(p, q);
  auto u = inner_products(p, q);
  auto prof = row_norm_profile(u, th);
  const std::size_t idx = th.index_for(n);
  Json ang;
  ang["sigma1"] = pa.sigmas.front();
  ang["theta1"] = pa.thetas.front();
  ang["theta_index"] = idx;
  ang["theta_at_index"] = pa.thetas[idx - 1];
  ang["theta_star"] = th.theta_star();
  ang["small_rows"] = prof.small_rows.size();
  r["angles"] = ang;
  c.at_least("row_norm_profile", static_cast<double>(prof.small_rows.size()),
             (1.0 - th.outlier_fraction) * static_cast<double>(n));

  auto col = find_partial_coloring(u, th, max_restarts, derive_seed(s.seed, 5));
  Json colj;
  colj["zero_count"] = col.zero_count;
  colj["discrepancy"] = col.discrepancy;
  colj["restarts_used"] = col.restarts_used;
  colj["guarantee_met"] = col.guarantee_met;
  r["coloring"] = colj;
  c.at_most("coloring_discrepancy", col.discrepancy, 0.5);
  c.at_most("coloring_zero_count", static_cast<double>(col.zero_count), static_cast<double>(n) / 4.0);

  Vector center = adversarial_center(q, p, col.zeta);
  const double gap2 = cost_gap(p, q, center, ZRational(2, 1));
  r["cost_gap_z2"] = gap2;
  r["inner_product_gap"] = inner_product_gap(p, q, center);
  c.at_least("cost_gap", gap2, 0.5 * sqrt_n);

  Vector witness = center;
  if (!z.is_two()) {
    auto pc = center_for_power(p, q, center, z);
    Json pj;
    pj["swapped"] = pc.swapped;
    pj["input_gap"] = pc.input_gap;
    pj["leading_term"] = pc.leading_term;
    pj["additive_term"] = pc.additive_term;
    pj["bound"] = pc.bound;
    pj["measured_gap"] = pc.measured_gap;
    r["power_center"] = pj;
    c.at_least("power_gap", pc.measured_gap, pc.bound);
    witness = pc.c;
  }

  auto dt = param_or<std::uint64_t>(s, "delta_tilde", 0);
  if (dt == 0) dt = default_delta_tilde(d, eps, z);
  auto rp = round_and_scale(columns_as_points(p.m), dt);
  auto rq = round_and_scale(columns_as_points(q.m), dt);

  // Candidate center pairs: the antipodal pair, and the normalized sums of the
  // two halves of Q's basis.
  std::vector<std::pair<std::string, std::vector<Vector>>> candidates;
  candidates.push_back({"antipodal", {witness, Vector(-witness)}});
  if (n >= 2) {
    const auto half = static_cast<Eigen::Index>(n / 2);
    Vector a = q.m.leftCols(half).rowwise().sum();
    Vector b = q.m.rightCols(static_cast<Eigen::Index>(n) - half).rowwise().sum();
    candidates.push_back({"split", {a.normalized(), b.normalized()}});
  }

  const double dd = static_cast<double>(d);
  const double ddt = static_cast<double>(dt);
  double worst_pert = 0.0;
  bool separated = false;
  Json cands = Json::array();
  for (const auto& [name, vecs] : candidates) {
    std::vector<std::vector<double>> scaled;
    CenterSet cs(0, d);
    for (const auto& v : vecs) {
      scaled.push_back(scale_center(std::span<const double>(v.data(), d), dt));
      cs.push_back(scaled.back());
    }
    worst_pert = std::max({worst_pert, max_sq_perturbation(rp, scaled), max_sq_perturbation(rq, scaled)});
    auto w = separation_witness(rp.grid, rq.grid, cs, z, eps);
    Json cj;
    cj["name"] = name;
    cj["cost_p"] = w.cost_p;
    cj["cost_q"] = w.cost_q;
    cj["ratio"] = w.cost_q > 0 ? w.cost_p / w.cost_q : std::numeric_limits<double>::infinity();
    cj["separated"] = w.separated;
    cands.push_back(cj);
    separated = separated || w.separated;
  }
  Json rounding;
  rounding["delta_tilde"] = dt;
  rounding["max_displacement"] = std::max(rp.max_displacement, rq.max_displacement);
  rounding["clamped"] = rp.clamped + rq.clamped;
  rounding["max_sq_perturbation"] = worst_pert;
  r["rounding"] = rounding;
  r["witness_candidates"] = cands;
  r["separated"] = separated;
  c.at_most("rounding_perturbation", worst_pert, 2.0 * ddt * std::sqrt(dd) + dd);
  c.at_most("perturbation_budget", 2.0 * ddt * std::sqrt(dd) + dd, ddt * ddt * eps / 4.0);
  c.add("separation_witness", separated ? 1.0 : 0.0, "==", 1.0, separated);
  return finish(s, std::move(r), c);
}

CommandResult cmd_distributed(const ExperimentSpec& s) {
  auto data = load_data(s);
  const auto z = z_param(s);
  const double eps = epsilon_param(s);
  const std::size_t k = positive(s, "k");
  const auto method = method_from(param_or<std::string>(s, "method", "sensitivity"));
  auto part = SitePartition::split(data, positive(s, "sites"));
  auto res = run_coordinator(part, k, z, eps, s.seed, method);
  const auto out_dir = path_param(s, "out_dir");
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < res.site_sketches.size(); ++i)
      write_sketch(join_path(out_dir, "site" + std::to_string(i) + ".kzsk"), res.site_sketches[i]);
  }
  const auto trials = param_or<std::uint64_t>(s, "trials", 100);
  auto st = query_errors(data, k, z, trials, s.seed, [&](const CenterSet& c) { return res.merged.estimate_cost(c); });

  std::uint64_t sum = 0;
  for (auto b : res.ledger.per_site_bits) sum += b;
  Json r;
  r["sites"] = part.shards.size();
  r["method"] = method_name(method);
  r["per_site_bits"] = res.ledger.per_site_bits;
  r["total_bits"] = res.ledger.total_bits;
  r["rounds"] = res.ledger.rounds;
  r["per_site_formula"] = res.ledger.per_site_formula;
  r["formula_total"] = res.ledger.formula_total;
  r["trials"] = trials;
  r["worst_relative_error"] = st.worst;
  r["mean_relative_error"] = st.mean;
  Certificates c;
  c.add("total_equals_site_sum", static_cast<double>(res.ledger.total_bits), "==", static_cast<double>(sum),
        res.ledger.total_bits == sum);
  c.at_most("worst_relative_error", st.worst, eps);
  return finish(s, std::move(r), c);
}

CommandResult cmd_stream(const ExperimentSpec& s) {
  auto data = load_data(s);
  const auto z = z_param(s);
  const double eps = epsilon_param(s);
  const std::size_t k = positive(s, "k");
  StreamOptions o;
  o.block_size = param_or<std::uint64_t>(s, "block", o.block_size);
  o.level0_cap = param_or<std::uint64_t>(s, "level0_cap", o.level0_cap);
  o.block_method = method_from(param_or<std::string>(s, "block_method", "identity"));
  auto res = run_stream(data, k, z, eps, s.seed, o);
  const auto out_dir = path_param(s, "out_dir");
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < res.sketches.size(); ++i)
      write_sketch(join_path(out_dir, "live" + std::to_string(i) + ".kzsk"), res.sketches[i]);
  }
  const auto trials = param_or<std::uint64_t>(s, "trials", 100);
  auto st = query_errors(data, k, z, trials, s.seed, [&](const CenterSet& c) { return res.merged.estimate_cost(c); });
  std::uint64_t live = 0;
  for (const auto& sk : res.sketches) live += sk.ledger.total_bits;
  Json r;
  r["points"] = res.points_seen;
  r["block"] = o.block_size;
  r["blocks"] = res.blocks;
  r["merges"] = res.merges;
  r["live_sketches"] = res.sketches.size();
  r["live_bits"] = live;
  r["max_resident_bits"] = res.max_resident_bits;
  r["max_resident_ratio"] = res.max_resident_ratio;
  r["trials"] = trials;
  r["worst_relative_error"] = st.worst;
  r["mean_relative_error"] = st.mean;
  Certificates c;
  c.at_most("worst_relative_error", st.worst, 3.0 * eps);
  c.at_most("resident_ratio", res.max_resident_ratio, 16.0);
  return finish(s, std::move(r), c);
}

using Handler = CommandResult (*)(const ExperimentSpec&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"generate", cmd_generate}, {"encode", cmd_encode},       {"eval", cmd_eval},
      {"size", cmd_size},         {"verify", cmd_verify},       {"angles", cmd_angles},
      {"lowerbound", cmd_lowerbound}, {"distributed", cmd_distributed}, {"stream", cmd_stream},
  };
  return h;
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
  } else {
    rows.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

}  // namespace

CommandResult run_spec(const ExperimentSpec& spec) {
  auto it = handlers().find(spec.command);
  if (it == handlers().end()) throw Error(ErrorCode::InvalidArgument, "unknown command '" + spec.command + "'");
  return it->second(spec);
}

std::string render_table(const Json& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(report, "", rows);
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
  return os.str();
}

std::string render_report(const Json& report, const std::string& format) {
  if (format == "table") return render_table(report);
  if (format == "json") return report.dump(2) + "\n";
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + format + "'");
}

namespace {

// Binds CLI11 options to typed storage and records how to copy each value into the spec.
class OptionBinder {
 public:
  explicit OptionBinder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& flag, const std::string& key, T& storage, const std::string& help) {
    auto* o = app_->add_option(flag, storage, help)->capture_default_str();
    writers_.push_back([&storage, key](Json& j) { j[key] = storage; });
    return o;
  }

  void fill(Json& params) const {
    for (const auto& w : writers_) w(params);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(Json&)>> writers_;
};

struct Storage {
  std::uint64_t seed = 0;
  std::string report = "json";
  std::string report_out;

  std::string data, sketch, centers, out, out_dir, basis_out, fixture;
  std::int64_t n = 1000, d = 8, k = 4, sites = 4, trials = 200;
  std::uint64_t delta = 1024, clusters = 0, query_k = 0, block = 500, level0_cap = 4, max_restarts = 10000,
                delta_tilde = 0, theta_index = 0, family = 0, data_delta = 0;
  std::string z = "2", method = "identity", site_method = "sensitivity", block_method = "identity",
              mode = "orthogonal";
  double eps = 0.2, c0 = 1.0, coreset_delta = 0.01, theta_star = 0.0;
  AngleThresholds th;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coreset sketches for (k,z)-clustering and lower-bound experiments", "kzsketch"};
  app.require_subcommand(1);
  Storage st;
  std::map<CLI::App*, std::unique_ptr<OptionBinder>> binders;

  auto sub = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--seed", st.seed, "Random seed")->capture_default_str();
    s->add_option("--report", st.report, "Report format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
    s->add_option("--report-out", st.report_out, "Write the JSON report to this file");
    binders[s] = std::make_unique<OptionBinder>(s);
    return std::pair<CLI::App*, OptionBinder*>{s, binders[s].get()};
  };
  auto problem = [&](OptionBinder* b) {
    b->add("--k", "k", st.k, "Number of centers");
    b->add("--z", "z", st.z, "Distance power (integer or rational such as 3/2)");
    b->add("--eps", "eps", st.eps, "Error parameter in (0,1)");
  };
  auto dataset = [&](OptionBinder* b, bool required) {
    auto* o = b->add("--data", "data", st.data, "Dataset file (KZDS binary or CSV)");
    if (required) o->required();
    b->add("--delta", "delta", st.data_delta, "Grid side for CSV input (0 infers it)");
  };
  auto coreset = [&](OptionBinder* b) {
    b->add("--method", "method", st.method, "Coreset method")->check(CLI::IsMember({"identity", "sensitivity"}));
    b->add("--c0", "c0", st.c0, "Sensitivity sample size constant");
    b->add("--coreset-delta", "coreset_delta", st.coreset_delta, "Sensitivity failure probability");
  };
  auto thresholds = [&](OptionBinder* b) {
    b->add("--a", "a", st.th.a, "Angle index fraction");
    b->add("--cos-star", "cos_star", st.th.cos_star, "Cosine threshold");
    b->add("--row-norm-bound", "row_norm_bound", st.th.row_norm_bound, "Squared row norm bound");
    b->add("--outlier-fraction", "outlier_fraction", st.th.outlier_fraction, "Allowed heavy-row fraction");
    b->add("--theta-index", "theta_index", st.theta_index, "1-based angle index (0 uses ceil(a n))");
    b->add("--theta-star", "theta_star", st.theta_star, "Angle threshold override (0 keeps arccos(cos*))");
  };

  {
    auto [s, b] = sub("generate", "Generate a grid dataset");
    b->add("--n", "n", st.n, "Number of points");
    b->add("--d", "d", st.d, "Dimension");
    b->add("--delta", "delta", st.delta, "Grid side");
    b->add("--clusters", "clusters", st.clusters, "Number of Gaussian clusters (0 for uniform)");
    b->add("--out", "out", st.out, "Output file (.csv for text)")->required();
    (void)s;
  }
  {
    auto [s, b] = sub("encode", "Build a coreset and encode it into a sketch");
    dataset(b, true);
    problem(b);
    coreset(b);
    b->add("--out", "out", st.out, "Sketch output file");
    (void)s;
  }
  {
    auto [s, b] = sub("eval", "Estimate a clustering cost from a sketch");
    b->add("--sketch", "sketch", st.sketch, "Sketch file")->required();
    b->add("--centers", "centers", st.centers, "CSV of query centers (defaults to the stored centers)");
    b->add("--data", "data", st.data, "Dataset for an exact comparison");
    (void)s;
  }
  {
    auto [s, b] = sub("size", "Report the exact bit ledger of a sketch");
    b->add("--sketch", "sketch", st.sketch, "Sketch file")->required();
    (void)s;
  }
  {
    auto [s, b] = sub("verify", "Compare sketch estimates with exact costs on random center sets");
    dataset(b, true);
    b->add("--sketch", "sketch", st.sketch, "Sketch file (encoded in-run when omitted)");
    problem(b);
    coreset(b);
    b->add("--trials", "trials", st.trials, "Number of random center sets");
    b->add("--query-k", "query_k", st.query_k, "Centers per query set (0 uses the sketch k)");
    (void)s;
  }
  {
    auto [s, b] = sub("angles", "Principal-angle statistics of random subspace pairs");
    b->add("--d", "d", st.d, "Ambient dimension");
    b->add("--n", "n", st.n, "Subspace dimension");
    b->add("--trials", "trials", st.trials, "Number of Haar pairs");
    b->add("--family", "family", st.family, "Size of a Haar family to verify pairwise (0 skips)");
    b->add("--fixture", "fixture", st.fixture, "Named fixture instead of sampling (tilted-plane)");
    b->add("--basis-out", "basis_out", st.basis_out, "Write the first pair [P Q] as a KZOB matrix");
    thresholds(b);
    (void)s;
  }
  {
    auto [s, b] = sub("lowerbound", "Run the hard-instance pipeline and emit a certificate");
    b->add("--n", "n", st.n, "Number of basis vectors");
    b->add("--d", "d", st.d, "Ambient dimension (must exceed 2n)");
    b->add("--z", "z", st.z, "Distance power");
    b->add("--eps", "eps", st.eps, "Error parameter in (0,1)");
    b->add("--mode", "mode", st.mode, "Pair construction")
        ->check(CLI::IsMember({"orthogonal", "haar", "perturbed"}));
    b->add("--max-restarts", "max_restarts", st.max_restarts, "Coloring search restarts");
    b->add("--delta-tilde", "delta_tilde", st.delta_tilde, "Grid side after rounding (0 uses the default)");
    thresholds(b);
    (void)s;
  }
  {
    auto [s, b] = sub("distributed", "Coordinator-model run with exact communication accounting");
    dataset(b, true);
    problem(b);
    b->add("--sites", "sites", st.sites, "Number of sites");
    b->add("--method", "method", st.site_method, "Per-site coreset method")
        ->check(CLI::IsMember({"identity", "sensitivity"}));
    b->add("--trials", "trials", st.trials, "Number of random center sets");
    b->add("--out-dir", "out_dir", st.out_dir, "Directory for the per-site sketches");
    (void)s;
  }
  {
    auto [s, b] = sub("stream", "Insertion-only streaming with merge and reduce");
    dataset(b, true);
    problem(b);
    b->add("--block", "block", st.block, "Block size");
    b->add("--level0-cap", "level0_cap", st.level0_cap, "Level-0 sketches kept before folding");
    b->add("--block-method", "block_method", st.block_method, "Block coreset method")
        ->check(CLI::IsMember({"identity", "sensitivity"}));
    b->add("--trials", "trials", st.trials, "Number of random center sets");
    b->add("--out-dir", "out_dir", st.out_dir, "Directory for the live sketches");
    (void)s;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "kzsketch: " << e.what() << "\n";
    return kUsage;
  }

  ExperimentSpec spec;
  for (auto& [s, b] : binders) {
    if (!s->parsed()) continue;
    spec.command = s->get_name();
    b->fill(spec.params);
  }
  spec.seed = st.seed;
  spec.report_format = st.report;

  try {
    auto res = run_spec(spec);
    out << render_report(res.report, spec.report_format);
    std::string path = st.report_out;
    if (path.empty() && !default_report_dir().empty()) {
      std::filesystem::create_directories(default_report_dir());
      path = join_path(default_report_dir(), spec.command + "-" + std::to_string(spec.seed) + ".json");
    }
    if (!path.empty()) write_text(path, res.report.dump(2) + "\n");
    return res.exit_code;
  } catch (const Error& e) {
    err << "kzsketch " << spec.command << ": " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "kzsketch " << spec.command << ": " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace kz::cli
