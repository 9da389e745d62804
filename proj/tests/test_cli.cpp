#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maternfit/cli/benchmark.hpp"
#include "maternfit/cli/commands.hpp"
#include "maternfit/cli/dataset_io.hpp"
#include "maternfit/cli/run_record.hpp"
#include "maternfit/simulate.hpp"

using namespace maternfit;
using namespace maternfit::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("maternfit_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("csv round trip is exact") {
  SimulationPlan plan;
  plan.n = 49;
  plan.location_scheme = LocationScheme::UniformRandom;
  plan.rng_seed = 3;
  const SpatialDataset data = simulate_replicates(plan).front();
  std::stringstream s;
  write_dataset_csv(s, data);
  const std::string text = s.str();
  CHECK(text.rfind("x,y,z\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  const SpatialDataset back = read_dataset_csv(s);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.locations[i].x == data.locations[i].x);
    CHECK(back.locations[i].y == data.locations[i].y);
  }
  CHECK(back.values == data.values);
}

TEST_CASE("csv parse errors carry line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_dataset_csv(in, "d.csv");
  };
  CHECK_THROWS_WITH_AS(parse("x,y,z\n0,0,1\n1,2\n"), "d.csv:3: expected 3 columns, found 2", DatasetParseError);
  CHECK_THROWS_WITH_AS(parse("x,y,z\n0,0,abc\n"), "d.csv:2: not a finite number", DatasetParseError);
  CHECK_THROWS_WITH_AS(parse("a,b,c\n"), "d.csv:1: expected header x,y,z", DatasetParseError);
  CHECK_THROWS_WITH_AS(parse("x,y,z\n"), "d.csv: no observations", DatasetParseError);
  CHECK_THROWS_WITH_AS(parse(""), "d.csv: empty file", DatasetParseError);
  CHECK_THROWS_AS(parse("x,y,z\n0,0,1\n0,0,2\n"), DatasetParseError);
  const SpatialDataset ok = parse("x,y,z\r\n0,0,1\r\n1,0,2\r\n\n");
  CHECK(ok.size() == 2);
}

TEST_CASE("simulate command") {
  TempDir dir;
  const auto a = call({"simulate", dir / "a.csv", "--n", "400", "--theta", "1,0.1,0.5", "--seed", "7"});
  REQUIRE(a.code == 0);
  const auto b = call({"simulate", dir / "b.csv", "--n", "400", "--theta", "1,0.1,0.5", "--seed", "7"});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  const SpatialDataset data = read_dataset_csv(dir / "a.csv");
  CHECK(data.size() == 400);

  SimulationPlan plan;
  plan.n = 400;
  plan.rng_seed = 7;
  const SpatialDataset mem = simulate_replicates(plan).front();
  CHECK(data.values == mem.values);

  const auto meta = nlohmann::json::parse(slurp(dir / "a.csv.json"));
  CHECK(meta.at("seed") == 7);
  CHECK(meta.at("scheme") == "grid");
  CHECK(meta.at("generator") == std::string(Rng::kAlgorithm));
  CHECK(meta.at("theta_true").at("alpha") == 0.1);

  const auto bad = call({"simulate", dir / "c.csv", "--n", "5", "--scheme", "grid"});
  CHECK(bad.code == 2);
  CHECK(bad.err == "error: invalid plan: grid layout needs a perfect-square n (got 5)\n");
  CHECK_FALSE(fs::exists(dir / "c.csv"));

  const auto reps = call({"simulate", dir / "r.csv", "--n", "16", "--replicates", "3"});
  CHECK(reps.code == 0);
  CHECK(fs::exists(dir / "r.0.csv"));
  CHECK(fs::exists(dir / "r.2.csv"));
}

TEST_CASE("estimate command") {
  TempDir dir;
  REQUIRE(call({"simulate", dir / "d.csv", "--n", "100", "--seed", "11"}).code == 0);

  const auto r = call({"estimate", "--method", "both", "--lower", "0.01,0.01,0.01", "--upper", "5,5,2", "--out",
                       dir / "res.json", "--trace", dir / "d.csv"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "res.json"));
  REQUIRE(doc.at("runs").size() == 2);
  const RunRecord fbt = run_record_from_json(doc.at("runs")[0]);
  const RunRecord nm = run_record_from_json(doc.at("runs")[1]);
  CHECK(fbt.method == Method::FisherBT);
  CHECK(nm.method == Method::NelderMead);
  CHECK(fbt.loglik >= nm.loglik - 1e-3);
  REQUIRE(fbt.std_errors.has_value());
  CHECK((fbt.std_errors->array() > 0.0).all());
  CHECK(fbt.trace.size() >= 2);
  CHECK(fbt.trace.front().source == TracePoint::Source::Initial);

  const SpatialDataset data = read_dataset_csv(dir / "d.csv");
  for (const RunRecord* rec : {&fbt, &nm}) CHECK(std::abs(log_likelihood(data, rec->theta_hat) - rec->loglik) <= 1e-10);

  const auto lik = call({"loglik", dir / "d.csv", "--theta", "1,0.1,0.5"});
  REQUIRE(lik.code == 0);
  const auto ldoc = nlohmann::json::parse(lik.out);
  CHECK(ldoc.at("loglik").get<double>() == doctest::Approx(log_likelihood(data, {1, 0.1, 0.5})).epsilon(1e-14));
  CHECK(ldoc.at("grad").size() == 3);
}

TEST_CASE("error contract snapshots") {
  TempDir dir;
  write_file(dir / "bad.csv", "x,y,z\n0,0,1\n0.5,0.5\n");
  const auto bad = call({"estimate", dir / "bad.csv"});
  CHECK(bad.code == 2);
  CHECK(bad.err == "error: " + (dir / "bad.csv") + ":3: expected 3 columns, found 2\n");

  const auto missing = call({"estimate", dir / "nope.csv"});
  CHECK(missing.code == 2);
  CHECK(missing.err == "error: " + (dir / "nope.csv") + ": cannot open file\n");

  write_file(dir / "ok.csv", "x,y,z\n0,0,1\n1,0,-1\n0,1,0.5\n");
  const auto method = call({"estimate", "--method", "bfgs", dir / "ok.csv"});
  CHECK(method.code == 2);
  CHECK(method.err == "error: --method: expected fisher-bt, nelder-mead or both\n");

  const auto lower = call({"estimate", "--lower", "1,2", dir / "ok.csv"});
  CHECK(lower.code == 2);
  CHECK(lower.err == "error: --lower: expected 3 values, got 2\n");

  const auto cube = call({"estimate", "--lower", "1,1,1", "--upper", "0.5,2,2", dir / "ok.csv"});
  CHECK(cube.code == 2);
  CHECK(cube.err == "error: theta_lower must be componentwise below theta_upper\n");

  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"loglik", dir / "ok.csv"}).code == 2);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("optimization failure exits 3") {
  TempDir dir;
  // Two points 1e-300 apart: no starting candidate has a usable covariance.
  write_file(dir / "deg.csv", "x,y,z\n0,0,1\n1e-300,0,1\n");
  const auto r = call({"estimate", dir / "deg.csv"});
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error: fisher-bt: InitializationFailed", 0) == 0);
}

TEST_CASE("std errors from Fisher information") {
  std::string reason;
  const auto se = std_errors_from_fisher(Eigen::Vector3d(4, 16, 100).asDiagonal().toDenseMatrix(), reason);
  REQUIRE(se.has_value());
  CHECK(se->isApprox(Eigen::Vector3d(0.5, 0.25, 0.1)));
  Eigen::Matrix3d indefinite = Eigen::Matrix3d::Identity();
  indefinite(2, 2) = -1.0;
  CHECK_FALSE(std_errors_from_fisher(indefinite, reason).has_value());
  CHECK(reason == "Fisher information is not positive definite");

  RunRecord r;
  r.theta_hat = {1, 2, 3};
  r.std_errors_reason = reason;
  const RunRecord back = run_record_from_json(to_json(r));
  CHECK_FALSE(back.std_errors.has_value());
  CHECK(back.std_errors_reason == reason);
  CHECK(to_json(r).at("std_errors").is_null());
}

TEST_CASE("benchmark shape and determinism") {
  BenchmarkSpec spec;
  spec.theta_sets = {{1.0, 0.1, 0.5}};
  spec.sample_sizes = {16, 25};
  spec.replicates = 3;
  spec.master_seed = 99;
  const BenchmarkResult a = run_benchmark(spec);
  CHECK(a.runs.size() == 2 * 3 * 2);
  CHECK(a.summary.size() == 2 * 2 * 4);

  spec.jobs = 3;
  const BenchmarkResult b = run_benchmark(spec);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].record.ok == b.runs[i].record.ok);
    CHECK(a.runs[i].record.theta_hat == b.runs[i].record.theta_hat);
    CHECK(a.runs[i].record.loglik == b.runs[i].record.loglik);
    CHECK(a.runs[i].loglik_deficit >= 0.0);
  }
  for (std::size_t i = 0; i < a.summary.size(); ++i) {
    CHECK(same(a.summary[i].mean, b.summary[i].mean));
    CHECK(same(a.summary[i].sd, b.summary[i].sd));
    CHECK(a.summary[i].mean_loglik_calls == b.summary[i].mean_loglik_calls);
  }
  CHECK(cell_seed(99, 0, 1, 2) == a.runs[(3 + 2) * 2].seed);

  std::ostringstream csv;
  write_summary_csv(csv, a.summary);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "theta_set,n,method,param,mean,sd,mean_loglik_deficit,mean_loglik_calls,mean_grad_calls,mean_wall_time");
}

TEST_CASE("benchmark command tolerates failures") {
  TempDir dir;
  const auto r = call({"benchmark", "--out", dir / "bench", "--theta", "1,0.1,0.5", "--theta", "2,0.8,1", "--n",
                       "16", "--replicates", "2", "--seed", "5", "--jobs", "2"});
  REQUIRE(r.code == 0);
  const std::string summary = slurp(dir / "bench/summary.csv");
  std::size_t rows = 0;
  for (char c : summary) rows += c == '\n';
  CHECK(rows == 1 + 2 * 2 * 4);
  std::istringstream runs(slurp(dir / "bench/runs.jsonl"));
  std::size_t count = 0;
  for (std::string line; std::getline(runs, line); ++count) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("theta_set"));
    CHECK(j.contains("replicate"));
  }
  CHECK(count == 2 * 2 * 2);

  // With cov(theta) = 1 everywhere a 2-point grid dataset cannot be factored
  // for huge alpha, so every run fails yet the command completes.
  BenchmarkSpec spec;
  spec.theta_sets = {{1.0, 1e6, 2.0}};
  spec.sample_sizes = {4};
  spec.replicates = 2;
  const BenchmarkResult res = run_benchmark(spec);
  for (const auto& run : res.runs) {
    CHECK_FALSE(run.record.ok);
    CHECK_FALSE(run.record.failure.empty());
  }
  CHECK(std::isnan(res.summary.front().mean));
}
