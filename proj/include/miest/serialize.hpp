#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "miest/bench.hpp"
#include "miest/core.hpp"
#include "miest/ensemble.hpp"
#include "miest/inference.hpp"
#include "miest/synthetic.hpp"

namespace miest {

inline const char* kernel_name(const KernelSpec& k) {
  switch (k.profile) {
    case KernelProfile::Uniform:
      return "uniform";
    case KernelProfile::Epanechnikov:
      return "epanechnikov";
    case KernelProfile::Triangular:
      return "triangular";
    default:
      return "gaussian";
  }
}

inline KernelSpec kernel_from_name(const std::string& s) {
  if (s == "uniform") return KernelSpec::uniform();
  if (s == "epanechnikov") return KernelSpec::epanechnikov();
  if (s == "triangular") return KernelSpec::triangular();
  if (s == "gaussian") return KernelSpec::gaussian();
  throw std::invalid_argument("unknown kernel: " + s);
}

inline SolverStatus status_from_name(const std::string& s) {
  if (s == "optimal") return SolverStatus::Optimal;
  if (s == "infeasible") return SolverStatus::Infeasible;
  if (s == "tolerance_not_met") return SolverStatus::ToleranceNotMet;
  throw std::invalid_argument("unknown solver status: " + s);
}

inline nlohmann::json functional_to_json(const Functional& f) {
  nlohmann::json j;
  switch (f.kind) {
    case FunctionalKind::Shannon:
      j["kind"] = "shannon";
      break;
    case FunctionalKind::RenyiIntegral:
      j["kind"] = "renyi";
      j["alpha"] = f.alpha;
      break;
    default:
      throw std::invalid_argument("custom functionals are not serializable");
  }
  if (f.strict) j["strict"] = true;
  if (f.lipschitz_floor != 1e-12) j["floor"] = f.lipschitz_floor;
  return j;
}

inline Functional functional_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  Functional f;
  if (kind == "shannon") {
    f = Functional::shannon();
  } else if (kind == "renyi") {
    f = Functional::renyi(j.at("alpha").get<double>());
  } else {
    throw std::invalid_argument("unknown functional kind: " + kind);
  }
  if (j.contains("strict")) f.strict = j["strict"].get<bool>();
  if (j.contains("floor")) f.lipschitz_floor = j["floor"].get<double>();
  return f;
}

namespace detail {

inline std::string decimal_key(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double_strict(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0'))
    throw std::invalid_argument("bad numeric key: " + s);
  return v;
}

}  // namespace detail

// Weights are keyed by the member parameter as a decimal string, "l" for
// mixed schedules and "l_x,l_y" for the joint grid, so an offline solve can
// be cached and reapplied to any dataset with the same N and L.
inline nlohmann::json weight_solution_to_json(const WeightSolution& s) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["status"] = status_name(s.status);
  j["epsilon"] = s.epsilon;
  j["eta"] = s.eta;
  j["norm2"] = s.norm2;
  nlohmann::json w = nlohmann::json::object();
  for (std::size_t c = 0; c < s.w.size(); ++c) {
    std::string key = detail::decimal_key(s.member_lx[c]);
    if (!s.member_ly.empty())
      key += "," + detail::decimal_key(s.member_ly[c]);
    w[key] = s.w[c];
  }
  j["weights"] = std::move(w);
  j["residuals"] = s.residuals;
  return j;
}

inline WeightSolution weight_solution_from_json(const nlohmann::json& j) {
  WeightSolution s;
  s.status = status_from_name(j.at("status").get<std::string>());
  s.epsilon = j.at("epsilon").get<double>();
  s.eta = j.at("eta").get<double>();
  s.norm2 = j.at("norm2").get<double>();
  struct Row {
    double lx, ly, w;
    bool grid;
  };
  std::vector<Row> rows;
  for (const auto& [key, val] : j.at("weights").items()) {
    const auto comma = key.find(',');
    Row r{};
    if (comma == std::string::npos) {
      r.lx = detail::parse_double_strict(key);
      r.ly = 0.0;
      r.grid = false;
    } else {
      r.lx = detail::parse_double_strict(key.substr(0, comma));
      r.ly = detail::parse_double_strict(key.substr(comma + 1));
      r.grid = true;
    }
    r.w = val.get<double>();
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.lx != b.lx) return a.lx < b.lx;
    return a.ly < b.ly;
  });
  for (const Row& r : rows) {
    s.member_lx.push_back(r.lx);
    if (r.grid) s.member_ly.push_back(r.ly);
    s.w.push_back(r.w);
  }
  if (j.contains("residuals"))
    s.residuals = j["residuals"].get<std::map<std::string, double>>();
  return s;
}

inline nlohmann::json mixture_spec_to_json(const TruncGaussMixtureSpec& s) {
  nlohmann::json j;
  j["d"] = s.d;
  j["covariance_scale"] = s.covariance_scale;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [label, p] : s.class_probs) {
    nlohmann::json c;
    c["label"] = label;
    c["prob"] = p;
    c["mean"] = s.means.at(label);
    classes.push_back(std::move(c));
  }
  j["classes"] = std::move(classes);
  return j;
}

inline TruncGaussMixtureSpec mixture_spec_from_json(const nlohmann::json& j) {
  TruncGaussMixtureSpec s;
  s.d = j.at("d").get<int>();
  s.covariance_scale = j.value("covariance_scale", 0.1);
  for (const auto& c : j.at("classes")) {
    const int label = c.at("label").get<int>();
    s.class_probs[label] = c.at("prob").get<double>();
    s.means[label] = c.at("mean").get<std::vector<double>>();
  }
  s.check();
  return s;
}

inline nlohmann::json estimator_spec_to_json(const EstimatorSpec& e) {
  nlohmann::json j;
  j["name"] = e.name;
  j["kind"] = estimator_kind_name(e.kind);
  j["kernel"] = kernel_name(e.kernel);
  if (e.kind == EstimatorKind::Plugin) {
    j["l"] = e.plugin_l;
  } else {
    j["l_count"] = e.l_count;
    j["l_min"] = e.l_min;
    j["l_max"] = e.l_max;
    j["program"] =
        e.program == WeightProgram::Exact ? "exact" : "relaxed";
    if (e.eta_policy == EtaPolicy::Fixed)
      j["eta"] = e.eta;
    else
      j["eta"] = "auto";
    if (e.kind == EstimatorKind::EnsembleOdin2) j["delta"] = e.delta;
  }
  return j;
}

inline EstimatorSpec estimator_spec_from_json(const nlohmann::json& j) {
  EstimatorSpec e;
  e.name = j.at("name").get<std::string>();
  e.kind = estimator_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("kernel"))
    e.kernel = kernel_from_name(j["kernel"].get<std::string>());
  if (e.kind == EstimatorKind::Plugin) {
    e.plugin_l = j.value("l", 2.1);
    return e;
  }
  e.l_count = j.value("l_count", 40);
  e.l_min = j.value("l_min", 1.2);
  e.l_max = j.value("l_max", 3.0);
  e.delta = j.value("delta", 1.0);
  const std::string program = j.value("program", std::string("relaxed"));
  if (program == "exact")
    e.program = WeightProgram::Exact;
  else if (program == "relaxed")
    e.program = WeightProgram::Relaxed;
  else
    throw std::invalid_argument("unknown weight program: " + program);
  if (j.contains("eta") && j["eta"].is_number()) {
    e.eta_policy = EtaPolicy::Fixed;
    e.eta = j["eta"].get<double>();
  } else {
    e.eta_policy = EtaPolicy::EqualEpsilon;
  }
  return e;
}

inline nlohmann::json bench_plan_to_json(const BenchPlan& p) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = p.seed;
  j["trials"] = p.trials;
  j["paired"] = p.paired;
  j["timings"] = p.timings;
  j["sample_sizes"] = p.sample_sizes;
  j["functional"] = functional_to_json(p.functional);
  if (p.mixture) j["mixture"] = mixture_spec_to_json(*p.mixture);
  if (!p.dataset_path.empty()) j["dataset_path"] = p.dataset_path;
  nlohmann::json oracle;
  if (p.fixed_oracle) {
    oracle["method"] = "fixed";
    oracle["value"] = p.fixed_oracle->value;
    oracle["std_error"] = p.fixed_oracle->std_error;
  } else {
    oracle["method"] = p.oracle_method == OracleMethod::Quadrature
                           ? "quadrature"
                           : "monte-carlo";
    if (p.oracle_samples > 0) oracle["samples"] = p.oracle_samples;
  }
  j["oracle"] = std::move(oracle);
  nlohmann::json est = nlohmann::json::array();
  for (const EstimatorSpec& e : p.estimators)
    est.push_back(estimator_spec_to_json(e));
  j["estimators"] = std::move(est);
  j["max_drop_fraction"] = p.max_drop_fraction;
  return j;
}

inline BenchPlan bench_plan_from_json(const nlohmann::json& j) {
  BenchPlan p;
  p.seed = j.value("seed", std::uint64_t{0});
  p.trials = j.value("trials", 1);
  p.paired = j.value("paired", true);
  p.timings = j.value("timings", false);
  p.sample_sizes = j.at("sample_sizes").get<std::vector<std::int64_t>>();
  if (j.contains("functional"))
    p.functional = functional_from_json(j["functional"]);
  if (j.contains("mixture")) p.mixture = mixture_spec_from_json(j["mixture"]);
  if (j.contains("dataset_path"))
    p.dataset_path = j["dataset_path"].get<std::string>();
  if (j.contains("oracle")) {
    const nlohmann::json& o = j["oracle"];
    const std::string method = o.value("method", std::string("monte-carlo"));
    if (method == "fixed") {
      OracleResult r;
      r.value = o.at("value").get<double>();
      r.std_error = o.value("std_error", 0.0);
      p.fixed_oracle = r;
    } else if (method == "quadrature") {
      p.oracle_method = OracleMethod::Quadrature;
    } else if (method == "monte-carlo") {
      p.oracle_method = OracleMethod::MonteCarlo;
    } else {
      throw std::invalid_argument("unknown oracle method: " + method);
    }
    if (o.contains("samples"))
      p.oracle_samples = o["samples"].get<std::int64_t>();
  }
  for (const auto& e : j.at("estimators"))
    p.estimators.push_back(estimator_spec_from_json(e));
  p.max_drop_fraction = j.value("max_drop_fraction", 0.01);
  return p;
}

inline nlohmann::json bench_result_to_json(const BenchResult& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["oracle"] = {{"value", r.oracle_value},
                 {"std_error", r.oracle_std_error}};
  nlohmann::json cells = nlohmann::json::array();
  for (const BenchCell& c : r.cells) {
    nlohmann::json jc;
    jc["estimator"] = c.estimator;
    jc["N"] = c.n;
    jc["trials"] = c.trials;
    jc["mse"] = c.mse;
    jc["bias"] = c.bias;
    jc["variance"] = c.variance;
    jc["mean_runtime_s"] = c.mean_runtime_s;
    jc["dropped"] = c.dropped;
    jc["trial_values"] = c.trial_values;
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j;
}

inline BenchResult bench_result_from_json(const nlohmann::json& j) {
  BenchResult r;
  r.oracle_value = j.at("oracle").at("value").get<double>();
  r.oracle_std_error = j.at("oracle").at("std_error").get<double>();
  for (const auto& jc : j.at("cells")) {
    BenchCell c;
    c.estimator = jc.at("estimator").get<std::string>();
    c.n = jc.at("N").get<std::int64_t>();
    c.trials = jc.at("trials").get<int>();
    c.mse = jc.at("mse").get<double>();
    c.bias = jc.at("bias").get<double>();
    c.variance = jc.at("variance").get<double>();
    c.mean_runtime_s = jc.at("mean_runtime_s").get<double>();
    c.dropped = jc.at("dropped").get<int>();
    c.trial_values = jc.at("trial_values").get<std::vector<double>>();
    r.cells.push_back(std::move(c));
  }
  return r;
}

inline nlohmann::json estimate_report_to_json(const EstimateReport& r) {
  nlohmann::json j;
  j["value"] = r.value;
  j["case"] = case_name(r.case_kind);
  j["n_samples"] = r.n_samples;
  j["clamped"] = r.clamped;
  if (!r.per_class_values.empty()) {
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [label, v] : r.per_class_values)
      pc[std::to_string(label)] = v;
    j["per_class_values"] = std::move(pc);
  }
  if (!r.skipped_classes.empty()) j["skipped_classes"] = r.skipped_classes;
  if (r.weights_used) j["weights"] = weight_solution_to_json(*r.weights_used);
  return j;
}

inline nlohmann::json confidence_report_to_json(const ConfidenceReport& r) {
  nlohmann::json j;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["level"] = r.level;
  j["interval"] = {r.lo, r.hi};
  j["variance_method"] = variance_method_name(r.variance_method);
  return j;
}

}  // namespace miest
