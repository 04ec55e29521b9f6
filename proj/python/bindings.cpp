#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kzsketch/anglelab.hpp"
#include "kzsketch/codec.hpp"
#include "kzsketch/coloring.hpp"
#include "kzsketch/commands.hpp"
#include "kzsketch/coreset.hpp"
#include "kzsketch/error.hpp"

namespace py = pybind11;
using namespace kz;

namespace {

using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

GridDataset grid_from(const IntArray& a, std::uint64_t delta) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "points must be a 2-d array");
  GridDataset g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), delta);
  std::copy_n(a.data(), g.coords.size(), g.coords.begin());
  if (delta == 0) {
    std::int64_t hi = 2;
    for (auto v : g.coords) hi = std::max(hi, v);
    g.delta = static_cast<std::uint64_t>(hi);
  }
  g.validate();
  return g;
}

RealDataset real_from(const RealArray& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "points must be a 2-d array");
  RealDataset r(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy_n(a.data(), r.coords.size(), r.coords.begin());
  r.validate();
  return r;
}

RealArray to_array(const RealDataset& r) {
  RealArray out({r.n, r.d});
  std::copy(r.coords.begin(), r.coords.end(), out.mutable_data());
  return out;
}

ZRational z_from(const py::object& z) {
  if (py::isinstance<py::str>(z)) return ZRational::parse(z.cast<std::string>());
  if (py::isinstance<py::int_>(z)) return ZRational(z.cast<std::int64_t>(), 1);
  return ZRational::parse(py::str(z).cast<std::string>());
}

std::vector<std::uint8_t> bytes_of(const py::bytes& b) {
  std::string s = b;
  return {s.begin(), s.end()};
}

py::dict ledger_dict(const BitLedger& l) {
  py::dict d;
  d["header_bits"] = l.header_bits;
  d["center_bits"] = l.center_bits;
  d["weight_bits"] = l.weight_bits;
  d["coordinate_bits"] = l.coordinate_bits;
  d["total_bits"] = l.total_bits;
  return d;
}

}  // namespace

PYBIND11_MODULE(_kzsketch, m) {
  m.doc() = "Coreset sketches for (k,z)-clustering";

  py::register_exception<Error>(m, "KzError", PyExc_ValueError);

  m.def(
      "cost",
      [](const RealArray& points, const RealArray& centers, const py::object& z, std::optional<RealArray> weights) {
        auto p = real_from(points);
        auto c = real_from(centers);
        if (!weights) return cost(p, c, z_from(z));
        std::vector<double> w(weights->data(), weights->data() + weights->size());
        return weighted_cost(p, w, c, z_from(z));
      },
      py::arg("points"), py::arg("centers"), py::arg("z") = "2", py::arg("weights") = py::none());

  m.def(
      "build_coreset",
      [](const IntArray& points, std::uint64_t delta, std::size_t k, const py::object& z, double eps,
         const std::string& method, std::uint64_t seed) {
        auto g = grid_from(points, delta);
        auto cs = build_coreset(g, k, z_from(z), eps,
                                method == "identity" ? CoresetMethod::Identity : CoresetMethod::Sensitivity, seed);
        return py::make_tuple(cs.source_indices, cs.weights);
      },
      py::arg("points"), py::arg("delta") = 0, py::arg("k") = 2, py::arg("z") = "2", py::arg("eps") = 0.2,
      py::arg("method") = "sensitivity", py::arg("seed") = 0);

  m.def(
      "compress",
      [](const IntArray& points, std::uint64_t delta, std::size_t k, const py::object& z, double eps,
         const std::string& method, std::uint64_t seed) {
        auto g = grid_from(points, delta);
        ProblemConfig cfg{g.n, g.d, k, z_from(z), g.delta, eps};
        cfg.validate();
        if (method != "identity" && method != "sensitivity")
          throw Error(ErrorCode::InvalidArgument, "method must be identity or sensitivity");
        auto r = compress(g, cfg, method == "identity" ? CoresetMethod::Identity : CoresetMethod::Sensitivity, seed);
        return py::bytes(reinterpret_cast<const char*>(r.sketch.bytes.data()), r.sketch.bytes.size());
      },
      py::arg("points"), py::arg("delta") = 0, py::arg("k") = 2, py::arg("z") = "2", py::arg("eps") = 0.2,
      py::arg("method") = "identity", py::arg("seed") = 0);

  m.def("decode", [](const py::bytes& b) {
    auto dec = decode(bytes_of(b));
    py::dict h;
    h["k"] = dec.header.k;
    h["d"] = dec.header.d;
    h["z"] = dec.header.z.str();
    h["delta"] = dec.header.delta;
    h["eps"] = dec.header.eps.value();
    h["n"] = dec.header.n;
    h["size"] = dec.header.size;
    py::dict out;
    out["header"] = h;
    out["centers"] = to_array(dec.centers);
    out["points"] = to_array(dec.points);
    out["weights"] = py::array_t<double>(dec.weights.size(), dec.weights.data());
    out["groups"] = dec.groups;
    return out;
  });

  m.def("estimate_cost", [](const py::bytes& b, const RealArray& centers) {
    return estimate_cost(decode(bytes_of(b)), real_from(centers));
  });

  m.def("bit_size", [](const py::bytes& b) { return ledger_dict(bit_size(reencode(decode(bytes_of(b))))); });

  m.def(
      "theoretical_upper_bound",
      [](std::uint64_t n, std::uint64_t k, std::uint64_t d, std::uint64_t delta, double eps, const py::object& z,
         std::uint64_t size) { return theoretical_upper_bound(n, k, d, delta, eps, z_from(z), size); },
      py::arg("n"), py::arg("k"), py::arg("d"), py::arg("delta"), py::arg("eps"), py::arg("z"),
      py::arg("coreset_size"));

  m.def("sample_haar_basis", [](std::size_t d, std::size_t n, std::uint64_t seed) {
    return sample_haar_basis(d, n, seed).m;
  });

  m.def("principal_angles", [](const Matrix& p, const Matrix& q) {
    auto pa = principal_angles(OrthonormalBasis(p, 1e-8), OrthonormalBasis(q, 1e-8));
    return py::make_tuple(pa.sigmas, pa.thetas);
  });

  m.def(
      "find_partial_coloring",
      [](const Matrix& u, std::size_t max_restarts, std::uint64_t seed) {
        InnerProductMatrix ip{u, {}};
        for (Eigen::Index i = 0; i < u.rows(); ++i) ip.row_norms.push_back(u.row(i).norm());
        auto pc = find_partial_coloring(ip, AngleThresholds{}, max_restarts, seed);
        py::dict out;
        out["zeta"] = pc.zeta;
        out["zero_count"] = pc.zero_count;
        out["discrepancy"] = pc.discrepancy;
        out["guarantee_met"] = pc.guarantee_met;
        return out;
      },
      py::arg("u"), py::arg("max_restarts") = 1000, py::arg("seed") = 0);

  m.def("run_spec", [](const std::string& spec_json) {
    auto spec = cli::ExperimentSpec::from_json(cli::Json::parse(spec_json));
    auto res = cli::run_spec(spec);
    return py::make_tuple(res.exit_code, res.report.dump());
  });
}
