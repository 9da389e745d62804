#include "maternfit/cli/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "maternfit/errors.hpp"

namespace maternfit::cli {

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct DatasetTask {
  std::size_t i, j, r;
};

}  // namespace

void BenchmarkSpec::validate() const {
  if (theta_sets.empty()) throw PlanError("benchmark needs at least one parameter set");
  if (sample_sizes.empty()) throw PlanError("benchmark needs at least one sample size");
  if (methods.empty()) throw PlanError("benchmark needs at least one method");
  if (replicates < 1) throw PlanError("at least one replicate is required");
  if (jobs < 1) throw PlanError("jobs must be at least 1");
  for (const auto& t : theta_sets)
    for (std::size_t n : sample_sizes) {
      SimulationPlan plan;
      plan.n = n;
      plan.theta_true = t;
      plan.location_scheme = location_scheme;
      plan.validate();
    }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw PlanError(e.what());
  }
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t i, std::size_t j, std::size_t r) {
  return derive_seed(master, {i, j, r});
}

std::string theta_label(const MaternParams& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%g;%g;%g", p.sigma2, p.alpha, p.nu);
  return buf;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::vector<DatasetTask> tasks;
  for (std::size_t i = 0; i < spec.theta_sets.size(); ++i)
    for (std::size_t j = 0; j < spec.sample_sizes.size(); ++j)
      for (std::size_t r = 0; r < spec.replicates; ++r) tasks.push_back({i, j, r});

  const std::size_t m = spec.methods.size();
  BenchmarkResult out;
  out.runs.resize(tasks.size() * m);

  auto run_task = [&](std::size_t t) {
    const DatasetTask& task = tasks[t];
    const std::uint64_t seed = cell_seed(spec.master_seed, task.i, task.j, task.r);
    SimulationPlan plan;
    plan.n = spec.sample_sizes[task.j];
    plan.theta_true = spec.theta_sets[task.i];
    plan.location_scheme = spec.location_scheme;
    plan.rng_seed = seed;

    std::string sim_failure;
    std::vector<SpatialDataset> data;
    try {
      data = simulate_replicates(plan);
    } catch (const NotPositiveDefinite& e) {
      sim_failure = std::string("simulation failed: ") + e.what();
    }
    for (std::size_t k = 0; k < m; ++k) {
      BenchmarkRun& run = out.runs[t * m + k];
      run.theta_index = task.i;
      run.n_index = task.j;
      run.replicate = task.r;
      run.seed = seed;
      if (!sim_failure.empty()) {
        run.record.method = spec.methods[k];
        run.record.seed = seed;
        run.record.ok = false;
        run.record.failure = sim_failure;
        continue;
      }
      const GaussianLikelihood lik(data.front());
      run.record = run_method(lik, spec.methods[k], spec.config, seed, false);
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) run_task(t);
  };
  const unsigned threads = std::min<std::size_t>(spec.jobs, tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      const RunRecord& r = out.runs[t * m + k].record;
      if (r.ok) best = std::max(best, r.loglik);
    }
    for (std::size_t k = 0; k < m; ++k) {
      BenchmarkRun& run = out.runs[t * m + k];
      run.loglik_deficit = run.record.ok ? best - run.record.loglik : std::numeric_limits<double>::quiet_NaN();
    }
  }

  static constexpr const char* kParams[] = {"sigma2", "alpha", "nu", "theta_m"};
  for (std::size_t i = 0; i < spec.theta_sets.size(); ++i)
    for (std::size_t j = 0; j < spec.sample_sizes.size(); ++j)
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<const BenchmarkRun*> ok;
        for (std::size_t r = 0; r < spec.replicates; ++r) {
          const std::size_t t = (i * spec.sample_sizes.size() + j) * spec.replicates + r;
          const BenchmarkRun& run = out.runs[t * m + k];
          if (run.record.ok) ok.push_back(&run);
        }
        const double cnt = static_cast<double>(ok.size());
        auto mean_of = [&](auto f) {
          double s = 0.0;
          for (const auto* run : ok) s += f(*run);
          return ok.empty() ? std::numeric_limits<double>::quiet_NaN() : s / cnt;
        };
        const double deficit = mean_of([](const BenchmarkRun& r) { return r.loglik_deficit; });
        const double lcalls = mean_of([](const BenchmarkRun& r) { return double(r.record.loglik_calls); });
        const double gcalls = mean_of([](const BenchmarkRun& r) { return double(r.record.grad_calls); });
        const double wall = mean_of([](const BenchmarkRun& r) { return r.record.wall_time; });
        for (int p = 0; p < 4; ++p) {
          auto value = [p](const BenchmarkRun& r) {
            const MaternParams& th = r.record.theta_hat;
            return p == 3 ? microergodic(th) : th.vec()[p];
          };
          const double mu = mean_of(value);
          double ss = 0.0;
          for (const auto* run : ok) ss += (value(*run) - mu) * (value(*run) - mu);
          SummaryRow row;
          row.theta_set = theta_label(spec.theta_sets[i]);
          row.n = spec.sample_sizes[j];
          row.method = spec.methods[k];
          row.param = kParams[p];
          row.successes = ok.size();
          row.mean = mu;
          row.sd = ok.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : std::numeric_limits<double>::quiet_NaN();
          row.mean_loglik_deficit = deficit;
          row.mean_loglik_calls = lcalls;
          row.mean_grad_calls = gcalls;
          row.mean_wall_time = wall;
          out.summary.push_back(std::move(row));
        }
      }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "theta_set,n,method,param,mean,sd,mean_loglik_deficit,mean_loglik_calls,mean_grad_calls,mean_wall_time\n";
  for (const auto& r : rows)
    out << r.theta_set << ',' << r.n << ',' << method_name(r.method) << ',' << r.param << ','
        << fmt(r.mean) << ',' << fmt(r.sd) << ',' << fmt(r.mean_loglik_deficit) << ',' << fmt(r.mean_loglik_calls)
        << ',' << fmt(r.mean_grad_calls) << ',' << fmt(r.mean_wall_time) << '\n';
}

void write_runs_jsonl(std::ostream& out, const BenchmarkSpec& spec, const std::vector<BenchmarkRun>& runs) {
  for (const auto& run : runs) {
    nlohmann::json j = to_json(run.record);
    j["theta_set"] = theta_label(spec.theta_sets[run.theta_index]);
    j["n"] = spec.sample_sizes[run.n_index];
    j["replicate"] = run.replicate;
    if (run.record.ok) j["loglik_deficit"] = run.loglik_deficit;
    out << j.dump() << '\n';
  }
}

}  // namespace maternfit::cli
