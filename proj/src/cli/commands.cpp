#include "maternfit/cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "maternfit/cli/benchmark.hpp"
#include "maternfit/cli/dataset_io.hpp"
#include "maternfit/cli/run_record.hpp"
#include "maternfit/errors.hpp"
#include "maternfit/simulate.hpp"

namespace maternfit::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& flag, std::size_t expected) {
  std::vector<double> out;
  std::string_view s = text;
  while (true) {
    const std::size_t comma = s.find(',');
    std::string_view tok = s.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
      throw UsageError(flag + ": '" + text + "' is not a comma-separated list of numbers");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (expected != 0 && out.size() != expected)
    throw UsageError(flag + ": expected " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
  return out;
}

MaternParams parse_theta(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, flag, 3);
  const MaternParams p{v[0], v[1], v[2]};
  if (!p.valid()) throw UsageError(flag + ": parameters must be positive");
  return p;
}

std::vector<Method> parse_methods(const std::string& s) {
  if (s == "both") return {Method::FisherBT, Method::NelderMead};
  if (auto m = parse_method(s)) return {*m};
  throw UsageError("--method: expected fisher-bt, nelder-mead or both");
}

LocationScheme parse_scheme(const std::string& s) {
  if (s == "grid") return LocationScheme::UnitGrid;
  if (s == "uniform") return LocationScheme::UniformRandom;
  throw UsageError("--scheme: expected grid or uniform");
}

const char* scheme_name(LocationScheme s) { return s == LocationScheme::UnitGrid ? "grid" : "uniform"; }

nlohmann::json params_json(const MaternParams& p) {
  return {{"sigma2", p.sigma2}, {"alpha", p.alpha}, {"nu", p.nu}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f << text;
  if (!f) throw std::runtime_error(path + ": write failed");
}

void emit(const std::string& path, const nlohmann::json& doc, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty())
    out << text;
  else
    write_text(path, text);
}

FisherBTConfig make_config(const std::string& lower, const std::string& upper) {
  FisherBTConfig cfg;
  if (!lower.empty()) cfg.theta_lower = parse_theta(lower, "--lower");
  if (!upper.empty()) cfg.theta_upper = parse_theta(upper, "--upper");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct EstimateArgs {
  std::string input, method = "fisher-bt", lower, upper, out;
  std::uint64_t seed = 0;
  bool trace = false;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const auto methods = parse_methods(a.method);
  const FisherBTConfig cfg = make_config(a.lower, a.upper);
  const SpatialDataset data = read_dataset_csv(a.input);
  const GaussianLikelihood lik(data);

  nlohmann::json doc;
  doc["input"] = a.input;
  doc["n"] = data.size();
  doc["lower"] = params_json(cfg.theta_lower);
  doc["upper"] = params_json(cfg.theta_upper);
  doc["runs"] = nlohmann::json::array();
  bool failed = false;
  for (Method m : methods) {
    const RunRecord r = run_method(lik, m, cfg, a.seed, a.trace);
    if (!r.ok) {
      err << "error: " << method_name(m) << ": " << r.failure << "\n";
      failed = true;
    }
    doc["runs"].push_back(to_json(r));
  }
  emit(a.out, doc, out);
  return failed ? kExitOptimization : kExitOk;
}

struct SimulateArgs {
  std::string out, theta = "1,0.1,0.5", scheme = "grid", domain;
  std::size_t n = 400, replicates = 1;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationPlan plan;
  plan.n = a.n;
  plan.theta_true = parse_theta(a.theta, "--theta");
  plan.location_scheme = parse_scheme(a.scheme);
  plan.rng_seed = a.seed;
  plan.replicates = a.replicates;
  if (!a.domain.empty()) {
    const auto d = parse_numbers(a.domain, "--domain", 4);
    plan.domain = {d[0], d[1], d[2], d[3]};
  }
  plan.validate();
  const auto data = simulate_replicates(plan);

  const std::filesystem::path base(a.out);
  std::vector<std::string> files;
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::filesystem::path p = base;
    if (data.size() > 1) p.replace_filename(base.stem().string() + "." + std::to_string(r) + base.extension().string());
    write_dataset_csv(p.string(), data[r]);
    files.push_back(p.string());
  }

  nlohmann::json meta;
  meta["theta_true"] = params_json(plan.theta_true);
  meta["microergodic"] = microergodic(plan.theta_true);
  meta["n"] = plan.n;
  meta["replicates"] = plan.replicates;
  meta["scheme"] = scheme_name(plan.location_scheme);
  meta["domain"] = {plan.domain.x0, plan.domain.y0, plan.domain.x1, plan.domain.y1};
  meta["seed"] = plan.rng_seed;
  meta["generator"] = std::string(Rng::kAlgorithm);
  meta["files"] = files;
  write_text(a.out + ".json", meta.dump(2) + "\n");
  out << "wrote " << files.size() << " dataset(s) with n=" << plan.n << "\n";
  return kExitOk;
}

struct LoglikArgs {
  std::string input, theta, out;
};

int cmd_loglik(const LoglikArgs& a, std::ostream& out) {
  const MaternParams theta = parse_theta(a.theta, "--theta");
  const SpatialDataset data = read_dataset_csv(a.input);
  const LikelihoodEval e = GaussianLikelihood(data).grad_and_fisher(theta);
  nlohmann::json doc;
  doc["theta"] = params_json(theta);
  doc["loglik"] = e.loglik;
  doc["grad"] = {e.grad[0], e.grad[1], e.grad[2]};
  nlohmann::json fisher = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) fisher.push_back({e.fisher(i, 0), e.fisher(i, 1), e.fisher(i, 2)});
  doc["fisher"] = std::move(fisher);
  emit(a.out, doc, out);
  return kExitOk;
}

struct BenchmarkArgs {
  std::string out, n = "100,400", method = "both", lower, upper, scheme = "grid";
  std::vector<std::string> thetas;
  std::size_t replicates = 20;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
  BenchmarkSpec spec;
  if (a.thetas.empty())
    spec.theta_sets = {{1.0, 0.1, 0.5}};
  else
    for (const auto& t : a.thetas) spec.theta_sets.push_back(parse_theta(t, "--theta"));
  for (double v : parse_numbers(a.n, "--n", 0)) {
    if (!(v >= 2 && v == std::floor(v))) throw UsageError("--n: sample sizes must be integers >= 2");
    spec.sample_sizes.push_back(static_cast<std::size_t>(v));
  }
  spec.replicates = a.replicates;
  spec.methods = parse_methods(a.method);
  spec.master_seed = a.seed;
  spec.jobs = a.jobs;
  spec.location_scheme = parse_scheme(a.scheme);
  spec.config = make_config(a.lower, a.upper);
  spec.validate();

  const BenchmarkResult res = run_benchmark(spec);
  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  {
    std::ostringstream s;
    write_runs_jsonl(s, spec, res.runs);
    write_text((dir / "runs.jsonl").string(), s.str());
  }
  {
    std::ostringstream s;
    write_summary_csv(s, res.summary);
    write_text((dir / "summary.csv").string(), s.str());
  }
  std::size_t failures = 0;
  for (const auto& r : res.runs) failures += r.record.ok ? 0 : 1;
  out << "ran " << res.runs.size() << " estimations (" << failures << " failed); wrote " << (dir / "summary.csv").string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact Matern maximum-likelihood estimation", "maternfit"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Fit (sigma2, alpha, nu) to a dataset CSV");
  estimate->add_option("input", est.input, "CSV with header x,y,z")->required();
  estimate->add_option("--method", est.method, "fisher-bt, nelder-mead or both")->capture_default_str();
  estimate->add_option("--lower", est.lower, "initialization cube lower corner a,b,c");
  estimate->add_option("--upper", est.upper, "initialization cube upper corner a,b,c");
  estimate->add_option("--seed", est.seed, "seed recorded with the run");
  estimate->add_option("--out", est.out, "result JSON path (default stdout)");
  estimate->add_flag("--trace", est.trace, "include the iterate trace");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw Matern random fields to CSV");
  simulate->add_option("out", sim.out, "output CSV path")->required();
  simulate->add_option("--n", sim.n, "sample size")->capture_default_str();
  simulate->add_option("--theta", sim.theta, "true parameters sigma2,alpha,nu")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  simulate->add_option("--scheme", sim.scheme, "grid or uniform")->capture_default_str();
  simulate->add_option("--replicates", sim.replicates, "number of realizations")->capture_default_str();
  simulate->add_option("--domain", sim.domain, "x0,y0,x1,y1 (default unit square)");

  LoglikArgs ll;
  auto* loglik = app.add_subcommand("loglik", "Evaluate loglik, gradient and Fisher information");
  loglik->add_option("input", ll.input, "CSV with header x,y,z")->required();
  loglik->add_option("--theta", ll.theta, "sigma2,alpha,nu")->required();
  loglik->add_option("--out", ll.out, "result JSON path (default stdout)");

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Monte Carlo comparison of the estimators");
  benchmark->add_option("--out", bench.out, "output directory")->required();
  benchmark->add_option("--theta", bench.thetas, "true parameters sigma2,alpha,nu (repeatable)");
  benchmark->add_option("--n", bench.n, "comma-separated sample sizes")->capture_default_str();
  benchmark->add_option("--replicates", bench.replicates, "realizations per cell")->capture_default_str();
  benchmark->add_option("--method", bench.method, "fisher-bt, nelder-mead or both")->capture_default_str();
  benchmark->add_option("--seed", bench.seed, "master seed")->capture_default_str();
  benchmark->add_option("--jobs", bench.jobs, "worker threads")->capture_default_str();
  benchmark->add_option("--lower", bench.lower, "initialization cube lower corner a,b,c");
  benchmark->add_option("--upper", bench.upper, "initialization cube upper corner a,b,c");
  benchmark->add_option("--scheme", bench.scheme, "grid or uniform")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*estimate) return cmd_estimate(est, out, err);
    if (*simulate) return cmd_simulate(sim, out);
    if (*loglik) return cmd_loglik(ll, out);
    return cmd_benchmark(bench, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PlanError& e) {
    err << "error: invalid plan: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InitializationFailed& e) {
    err << "error: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const SingularInformation& e) {
    err << "error: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const NotPositiveDefinite& e) {
    err << "error: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace maternfit::cli
