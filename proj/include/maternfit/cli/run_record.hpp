#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "maternfit/likelihood.hpp"
#include "maternfit/optimizer.hpp"

namespace maternfit::cli {

enum class Method { FisherBT, NelderMead };

/// "fisher-bt" / "nelder-mead"
const char* method_name(Method m) noexcept;
std::optional<Method> parse_method(const std::string& s);

struct RunRecord {
  Method method = Method::FisherBT;
  bool ok = true;
  std::string failure;  // set when !ok

  MaternParams theta_hat;
  std::optional<Eigen::Vector3d> std_errors;
  std::string std_errors_reason;  // set when std_errors is absent
  Eigen::Matrix3d fisher = Eigen::Matrix3d::Zero();
  double loglik = 0.0;
  int loglik_calls = 0;
  int grad_calls = 0;
  double wall_time = 0.0;
  std::string termination;
  std::uint64_t seed = 0;
  std::vector<TracePoint> trace;
};

/// sqrt(diag(I^{-1})) when I is positive definite; otherwise nullopt and a reason.
std::optional<Eigen::Vector3d> std_errors_from_fisher(const Eigen::Matrix3d& fisher, std::string& reason);

/// Runs one estimator. Fisher-BT follows cfg; Nelder-Mead starts from the
/// midpoint of the initialization cube and is followed by one
/// grad_and_fisher call at its result. Optimizer failures are recorded in
/// the returned record (ok = false) rather than thrown.
RunRecord run_method(const LikelihoodModel& model, Method method, const FisherBTConfig& cfg, std::uint64_t seed,
                     bool keep_trace);

nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

}  // namespace maternfit::cli
