#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "maternfit/cli/run_record.hpp"
#include "maternfit/optimizer.hpp"
#include "maternfit/simulate.hpp"

namespace maternfit::cli {

struct BenchmarkSpec {
  std::vector<MaternParams> theta_sets;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 20;
  std::vector<Method> methods{Method::FisherBT, Method::NelderMead};
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;
  LocationScheme location_scheme = LocationScheme::UnitGrid;
  FisherBTConfig config{};

  void validate() const;
};

/// Seed of dataset (theta set i, sample size j, replicate r).
std::uint64_t cell_seed(std::uint64_t master, std::size_t i, std::size_t j, std::size_t r);

struct BenchmarkRun {
  std::size_t theta_index = 0, n_index = 0, replicate = 0;
  std::uint64_t seed = 0;
  RunRecord record;
  double loglik_deficit = 0.0;  // best successful loglik on this dataset minus this one
};

struct SummaryRow {
  std::string theta_set;
  std::size_t n = 0;
  Method method = Method::FisherBT;
  std::string param;  // sigma2, alpha, nu or theta_m
  std::size_t successes = 0;
  double mean = 0.0, sd = 0.0;
  double mean_loglik_deficit = 0.0;
  double mean_loglik_calls = 0.0, mean_grad_calls = 0.0, mean_wall_time = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRun> runs;  // ordered by (theta set, n, replicate, method)
  std::vector<SummaryRow> summary;
};

/// Runs the full factorial. Datasets are processed on up to spec.jobs threads;
/// the reduction is sequential in run order, so everything except wall times
/// depends only on the spec.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

std::string theta_label(const MaternParams& p);

/// Columns: theta_set,n,method,param,mean,sd,mean_loglik_deficit,
/// mean_loglik_calls,mean_grad_calls,mean_wall_time
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// One JSON object per line: cell indices plus the RunRecord fields.
void write_runs_jsonl(std::ostream& out, const BenchmarkSpec& spec, const std::vector<BenchmarkRun>& runs);

}  // namespace maternfit::cli
