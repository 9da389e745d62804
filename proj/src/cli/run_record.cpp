#include "maternfit/cli/run_record.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "maternfit/errors.hpp"
#include "maternfit/simulate.hpp"

namespace maternfit::cli {

namespace {

nlohmann::json params_json(const MaternParams& p) {
  return {{"sigma2", p.sigma2}, {"alpha", p.alpha}, {"nu", p.nu}};
}

MaternParams params_from(const nlohmann::json& j) {
  return {j.at("sigma2").get<double>(), j.at("alpha").get<double>(), j.at("nu").get<double>()};
}

const char* source_name(TracePoint::Source s) {
  switch (s) {
    case TracePoint::Source::Initial: return "initial";
    case TracePoint::Source::FisherStep: return "fisher-step";
    case TracePoint::Source::NelderMead: return "nelder-mead";
  }
  return "?";
}

TracePoint::Source source_from(const std::string& s) {
  if (s == "fisher-step") return TracePoint::Source::FisherStep;
  if (s == "nelder-mead") return TracePoint::Source::NelderMead;
  return TracePoint::Source::Initial;
}

}  // namespace

const char* method_name(Method m) noexcept {
  return m == Method::FisherBT ? "fisher-bt" : "nelder-mead";
}

std::optional<Method> parse_method(const std::string& s) {
  if (s == "fisher-bt") return Method::FisherBT;
  if (s == "nelder-mead") return Method::NelderMead;
  return std::nullopt;
}

std::optional<Eigen::Vector3d> std_errors_from_fisher(const Eigen::Matrix3d& fisher, std::string& reason) {
  if (!fisher.allFinite()) {
    reason = "Fisher information is not finite";
    return std::nullopt;
  }
  const Eigen::LLT<Eigen::Matrix3d> llt(fisher);
  if (llt.info() != Eigen::Success) {
    reason = "Fisher information is not positive definite";
    return std::nullopt;
  }
  const Eigen::Vector3d var = llt.solve(Eigen::Matrix3d::Identity()).diagonal();
  if (!var.allFinite() || !(var.array() > 0.0).all()) {
    reason = "inverse Fisher information has a non-positive diagonal";
    return std::nullopt;
  }
  reason.clear();
  return var.cwiseSqrt();
}

RunRecord run_method(const LikelihoodModel& model, Method method, const FisherBTConfig& cfg, std::uint64_t seed,
                     bool keep_trace) {
  RunRecord r;
  r.method = method;
  r.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    LikelihoodEval at_hat;
    if (method == Method::FisherBT) {
      OptResult res = fisher_bt(model, cfg);
      r.theta_hat = res.theta_hat;
      r.loglik_calls = res.total_loglik_calls();
      r.grad_calls = res.grad_calls;
      r.termination = termination_name(res.termination);
      at_hat = {res.loglik_at_hat, res.grad_at_hat, res.fisher_at_hat};
      if (keep_trace) r.trace = std::move(res.iterate_trace);
    } else {
      cfg.validate();
      const MaternParams start = MaternParams::from_vec(0.5 * (cfg.theta_lower.vec() + cfg.theta_upper.vec()));
      const NelderMeadResult nm = nelder_mead(model, start, cfg.nm_tol, cfg.nm_max_evals);
      if (!std::isfinite(nm.loglik)) throw InitializationFailed("no finite log-likelihood near the starting point");
      r.theta_hat = nm.theta;
      r.loglik_calls = nm.calls;
      at_hat = model.grad_and_fisher(nm.theta);
      r.grad_calls = 1;
      r.termination = nm.converged ? "Converged" : "BudgetExhausted";
      if (keep_trace) {
        r.trace.push_back({start, model.log_likelihood(start), TracePoint::Source::Initial, 0.0, 0});
        r.trace.push_back({nm.theta, nm.loglik, TracePoint::Source::NelderMead, 0.0, 0});
      }
    }
    r.loglik = at_hat.loglik;
    r.fisher = at_hat.fisher;
    r.std_errors = std_errors_from_fisher(at_hat.fisher, r.std_errors_reason);
  } catch (const InitializationFailed& e) {
    r.ok = false;
    r.failure = std::string("InitializationFailed: ") + e.what();
  } catch (const SingularInformation& e) {
    r.ok = false;
    r.failure = std::string("SingularInformation: ") + e.what();
  } catch (const NotPositiveDefinite& e) {
    r.ok = false;
    r.failure = std::string("NotPositiveDefinite: ") + e.what();
  } catch (const DomainError& e) {
    r.ok = false;
    r.failure = std::string("DomainError: ") + e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["method"] = method_name(r.method);
  j["ok"] = r.ok;
  j["seed"] = r.seed;
  j["wall_time"] = r.wall_time;
  if (!r.ok) {
    j["failure"] = r.failure;
    return j;
  }
  j["theta_hat"] = params_json(r.theta_hat);
  j["microergodic"] = microergodic(r.theta_hat);
  if (r.std_errors) {
    j["std_errors"] = params_json(MaternParams::from_vec(*r.std_errors));
  } else {
    j["std_errors"] = nullptr;
    j["std_errors_reason"] = r.std_errors_reason;
  }
  nlohmann::json fisher = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) fisher.push_back({r.fisher(i, 0), r.fisher(i, 1), r.fisher(i, 2)});
  j["fisher"] = std::move(fisher);
  j["loglik"] = r.loglik;
  j["loglik_calls"] = r.loglik_calls;
  j["grad_calls"] = r.grad_calls;
  j["termination"] = r.termination;
  if (!r.trace.empty()) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : r.trace) {
      nlohmann::json p = params_json(t.theta);
      p["loglik"] = t.loglik;
      p["source"] = source_name(t.source);
      if (t.source == TracePoint::Source::FisherStep) p["halvings"] = t.halvings;
      trace.push_back(std::move(p));
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord r;
  const auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw std::invalid_argument("unknown method in run record");
  r.method = *m;
  r.ok = j.at("ok").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.wall_time = j.at("wall_time").get<double>();
  if (!r.ok) {
    r.failure = j.at("failure").get<std::string>();
    return r;
  }
  r.theta_hat = params_from(j.at("theta_hat"));
  if (j.at("std_errors").is_null()) {
    r.std_errors_reason = j.at("std_errors_reason").get<std::string>();
  } else {
    r.std_errors = params_from(j.at("std_errors")).vec();
  }
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.fisher(i, k) = j.at("fisher").at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
  r.loglik = j.at("loglik").get<double>();
  r.loglik_calls = j.at("loglik_calls").get<int>();
  r.grad_calls = j.at("grad_calls").get<int>();
  r.termination = j.at("termination").get<std::string>();
  if (j.contains("trace")) {
    for (const auto& p : j.at("trace")) {
      TracePoint t;
      t.theta = params_from(p);
      t.loglik = p.at("loglik").get<double>();
      t.source = source_from(p.at("source").get<std::string>());
      t.halvings = p.value("halvings", 0);
      r.trace.push_back(t);
    }
  }
  return r;
}

}  // namespace maternfit::cli
