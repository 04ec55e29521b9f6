#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "kzsketch/codec.hpp"
#include "kzsketch/commands.hpp"
#include "kzsketch/dataset_io.hpp"
#include "kzsketch/error.hpp"

using namespace kz;
using kz::cli::Json;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("kzsketch_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code = 0;
  std::string out, err;
  Json report() const { return Json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  auto b = read_file(path);
  return std::string(b.begin(), b.end());
}

const TempDir& tmp() {
  static TempDir t;
  return t;
}

std::string dataset_path() {
  static const std::string path = [] {
    auto p = tmp() / "data.kzds";
    auto r = run({"generate", "--n", "600", "--d", "6", "--delta", "1024", "--seed", "4", "--out", p});
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("experiment spec round trip") {
  cli::ExperimentSpec s;
  s.command = "angles";
  s.seed = 9;
  s.params["fixture"] = "tilted-plane";
  auto back = cli::ExperimentSpec::from_json(s.to_json());
  CHECK(back.command == "angles");
  CHECK(back.seed == 9);
  CHECK(back.params == s.params);
  auto res = cli::run_spec(back);
  CHECK(res.exit_code == 0);
  CHECK_THROWS_AS(cli::ExperimentSpec::from_json(Json::object()), Error);
  cli::ExperimentSpec bad;
  bad.command = "nope";
  CHECK_THROWS_AS(cli::run_spec(bad), Error);
}

TEST_CASE("tilted plane fixture") {
  auto r = run({"angles", "--fixture", "tilted-plane"});
  REQUIRE(r.code == 0);
  auto th = r.report()["results"]["thetas"];
  CHECK(std::abs(th[0].get<double>()) <= 1e-9);
  CHECK(std::abs(th[1].get<double>() - std::numbers::pi / 3) <= 1e-9);
}

TEST_CASE("encode, size, eval and verify") {
  const auto data = dataset_path();
  const auto sk = tmp() / "s.kzsk";
  auto enc = run({"encode", "--data", data, "--k", "4", "--eps", "0.2", "--out", sk, "--seed", "1"});
  REQUIRE(enc.code == 0);
  auto er = enc.report();
  CHECK(er["results"]["coreset_size"] == 600);
  CHECK(er["spec"]["params"]["k"] == 4);

  auto size = run({"size", "--sketch", sk});
  REQUIRE(size.code == 0);
  auto sr = size.report()["results"];
  const auto file_bits = fs::file_size(sk) * 8;
  CHECK(sr["file_bits"] == file_bits);
  CHECK(sr["ledger"]["total_bits"].get<std::uint64_t>() == file_bits - sr["pad_bits"].get<std::uint64_t>());
  CHECK(sr["pad_bits"].get<std::uint64_t>() <= 7);
  CHECK(sr["ledger"] == er["results"]["ledger"]);

  auto ev = run({"eval", "--sketch", sk});
  REQUIRE(ev.code == 0);
  const double est = ev.report()["results"]["estimate"].get<double>();
  CHECK(std::isfinite(est));
  CHECK(est >= 0.0);

  const auto centers = tmp() / "c.csv";
  write_text(centers, "1,2,3,4,5,6\n100.5,200,300,400,500,600\n");
  auto ev2 = run({"eval", "--sketch", sk, "--centers", centers, "--data", data});
  REQUIRE(ev2.code == 0);
  CHECK(ev2.report()["results"]["relative_error"].get<double>() <= 0.2);

  auto ver = run({"verify", "--data", data, "--sketch", sk, "--trials", "200"});
  CHECK(ver.code == 0);
  CHECK(ver.report()["results"]["worst_relative_error"].get<double>() <= 0.2);

  auto ver2 = run({"verify", "--data", data, "--k", "3", "--eps", "0.25", "--method", "sensitivity", "--trials", "50"});
  CHECK(ver2.code == 0);
}

TEST_CASE("distributed with one site equals the encode path") {
  const auto data = dataset_path();
  const auto sk = tmp() / "one.kzsk";
  const auto dir = tmp() / "sites";
  auto enc = run({"encode", "--data", data, "--k", "3", "--eps", "0.3", "--method", "sensitivity", "--seed", "7",
                  "--out", sk});
  REQUIRE(enc.code == 0);
  auto dist = run({"distributed", "--data", data, "--k", "3", "--eps", "0.3", "--sites", "1", "--seed", "7",
                   "--out-dir", dir, "--trials", "20"});
  CHECK(dist.code == 0);
  auto dr = dist.report()["results"];
  CHECK(dr["total_bits"] == enc.report()["results"]["ledger"]["total_bits"]);
  CHECK(read_file(dir + "/site0.kzsk") == read_file(sk));
}

TEST_CASE("stream and distributed reports") {
  const auto data = dataset_path();
  auto st = run({"stream", "--data", data, "--k", "3", "--eps", "0.2", "--block", "100", "--trials", "30"});
  CHECK(st.code == 0);
  CHECK(st.report()["results"]["blocks"] == 6);
  auto dist = run({"distributed", "--data", data, "--k", "3", "--eps", "0.2", "--sites", "4", "--method",
                   "identity", "--trials", "30"});
  CHECK(dist.code == 0);
  auto per = dist.report()["results"]["per_site_bits"];
  std::uint64_t sum = 0;
  for (const auto& b : per) sum += b.get<std::uint64_t>();
  CHECK(dist.report()["results"]["total_bits"] == sum);
}

TEST_CASE("lowerbound certificate") {
  auto r = run({"lowerbound", "--mode", "orthogonal", "--n", "100", "--d", "256", "--eps", "0.05", "--seed", "3"});
  CHECK(r.code == 0);
  auto rep = r.report();
  CHECK(rep["results"]["cost_gap_z2"].get<double>() >= 5.0);
  CHECK(rep["results"]["separated"] == true);
  bool found = false;
  for (const auto& c : rep["certificates"]) {
    CHECK(c.contains("lhs"));
    CHECK(c.contains("rhs"));
    if (c["name"] == "cost_gap") {
      found = true;
      CHECK(c["rhs"].get<double>() == doctest::Approx(5.0));
    }
  }
  CHECK(found);

  // Random Haar pairs at small d violate the row-norm precondition.
  auto h = run({"lowerbound", "--mode", "haar", "--n", "10", "--d", "30", "--eps", "0.2", "--max-restarts", "20"});
  CHECK(h.code == 1);
  CHECK(h.report()["pass"] == false);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"encode", "--k", "2"}).code == 2);
  CHECK(run({"encode", "--data", tmp() / "missing.kzds", "--k", "2"}).code == 2);
  CHECK(run({"encode", "--data", dataset_path(), "--k", "2", "--eps", "1.5"}).code == 2);
  CHECK(run({"encode", "--data", dataset_path(), "--k", "0"}).code == 2);
  CHECK(run({"encode", "--data", dataset_path(), "--k", "2", "--method", "magic"}).code == 2);
  CHECK(run({"lowerbound", "--n", "10", "--d", "20"}).code == 2);
  auto garbage = tmp() / "garbage.kzsk";
  write_text(garbage, "KZSK but not really");
  auto g = run({"size", "--sketch", garbage});
  CHECK(g.code == 2);
  CHECK_FALSE(g.err.empty());
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("same seed gives identical reports and sketches") {
  const auto data = dataset_path();
  for (const auto& method : {"identity", "sensitivity"}) {
    const auto a = tmp() / "a.kzsk";
    const auto b = tmp() / "b.kzsk";
    auto ra = run({"encode", "--data", data, "--k", "3", "--eps", "0.25", "--method", method, "--seed", "5", "--out", a});
    auto rb = run({"encode", "--data", data, "--k", "3", "--eps", "0.25", "--method", method, "--seed", "5", "--out", b});
    CHECK(read_file(a) == read_file(b));
    auto ja = ra.report(), jb = rb.report();
    ja["spec"]["params"].erase("out");
    jb["spec"]["params"].erase("out");
    CHECK(ja.dump() == jb.dump());
  }
  auto l1 = run({"lowerbound", "--n", "20", "--d", "50", "--mode", "perturbed", "--seed", "8"});
  auto l2 = run({"lowerbound", "--n", "20", "--d", "50", "--mode", "perturbed", "--seed", "8"});
  CHECK(l1.out == l2.out);
  auto s1 = run({"angles", "--d", "40", "--n", "4", "--trials", "30", "--family", "5", "--seed", "2"});
  auto s2 = run({"angles", "--d", "40", "--n", "4", "--trials", "30", "--family", "5", "--seed", "2"});
  CHECK(s1.out == s2.out);
}

TEST_CASE("report directory from the environment and table output") {
  const auto dir = tmp() / "reports";
  ::setenv("KZSKETCH_REPORT_DIR", dir.c_str(), 1);
  auto r = run({"angles", "--fixture", "tilted-plane", "--seed", "4"});
  ::unsetenv("KZSKETCH_REPORT_DIR");
  REQUIRE(r.code == 0);
  const auto file = dir + "/angles-4.json";
  REQUIRE(fs::exists(file));
  CHECK(slurp(file) == r.out);

  auto t = run({"angles", "--fixture", "tilted-plane", "--report", "table"});
  CHECK(t.code == 0);
  CHECK(t.out.find("results.thetas") != std::string::npos);
  CHECK(t.out.find("pass") != std::string::npos);
}

#ifdef KZSKETCH_BIN
TEST_CASE("command-line binary is deterministic across processes") {
  const auto data = dataset_path();
  std::string base = std::string(KZSKETCH_BIN) + " encode --data " + data +
                     " --k 3 --eps 0.2 --method sensitivity --seed 11 --out ";
  REQUIRE(std::system((base + (tmp() / "p1.kzsk") + " > " + (tmp() / "p1.json")).c_str()) == 0);
  REQUIRE(std::system((base + (tmp() / "p2.kzsk") + " > " + (tmp() / "p2.json")).c_str()) == 0);
  CHECK(read_file(tmp() / "p1.kzsk") == read_file(tmp() / "p2.kzsk"));
  auto j1 = Json::parse(slurp(tmp() / "p1.json"));
  auto j2 = Json::parse(slurp(tmp() / "p2.json"));
  j1["spec"]["params"].erase("out");
  j2["spec"]["params"].erase("out");
  CHECK(j1 == j2);
  CHECK(std::system((std::string(KZSKETCH_BIN) + " encode --eps 2 > /dev/null 2>&1").c_str()) != 0);
}
#endif
