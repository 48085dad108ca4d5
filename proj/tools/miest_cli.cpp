// miest — command-line front end for the MI estimation toolkit.
//
// Subcommands: estimate, weights, oracle, bench, selftest.
// Exit codes: 0 ok, 1 internal, 2 usage, 3 data, 4 numerical, 5 solver.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "miest/miest.hpp"
#include "miest/serialize.hpp"

namespace {

// Flag-combination problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    miest::write_file(out_path, text);
}

miest::Functional make_functional(const std::string& kind, double alpha,
                                  bool alpha_given, bool strict) {
  miest::Functional f;
  if (kind == "shannon") {
    f = miest::Functional::shannon();
  } else if (kind == "renyi") {
    if (!alpha_given)
      throw UsageError("--functional renyi requires --alpha");
    f = miest::Functional::renyi(alpha);
  } else {
    throw UsageError("unknown functional: " + kind);
  }
  f.strict = strict;
  return f;
}

double parse_eta(const std::string& s, miest::EtaPolicy& policy) {
  if (s == "auto") {
    policy = miest::EtaPolicy::EqualEpsilon;
    return 1.0;
  }
  policy = miest::EtaPolicy::Fixed;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !(v > 0.0))
    throw UsageError("--eta expects 'auto' or a positive number");
  return v;
}

// Force one of the three estimation cases by discarding the columns the
// requested case does not use; refuse when the needed columns are absent.
void apply_case_override(miest::Dataset& d, const std::string& mode) {
  if (mode.empty() || mode == "general") return;
  if (mode == "cont-cont") {
    if (!d.x_cont || !d.y_cont)
      throw UsageError("--case cont-cont needs x* and yc* columns");
    d.x_disc.reset();
    d.y_disc.reset();
  } else {  // "mixed"
    if (!d.x_cont || !d.y_disc)
      throw UsageError("--case mixed needs x* and y columns");
    d.y_cont.reset();
    d.x_disc.reset();
  }
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
  std::string input;
  std::string case_override;
  std::string functional = "shannon";
  double alpha = 0.5;
  bool alpha_given = false;
  bool use_plugin = false;
  double plugin_l = 2.1;
  int odin = 1;
  double delta = 1.0;
  int l_count = 40;
  double l_min = 0.0;
  double l_max = 0.0;
  bool range_given = false;
  std::string kernel = "uniform";
  bool unsafe_kernel = false;
  bool exact = false;
  std::string eta = "auto";
  double solver_tol = 1e-8;
  double ci_level = 0.0;
  bool ci_given = false;
  int ci_reps = 200;
  std::string ci_method = "bootstrap";
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool strict = false;
  int threads = 0;
};

miest::PluginConfig plugin_config_for(const miest::Dataset& data,
                                      const miest::KernelSpec& kernel,
                                      const miest::Functional& f, double l,
                                      int threads) {
  using miest::ScheduleKind;
  miest::PluginConfig cfg;
  cfg.kernel_x = kernel;
  cfg.kernel_y = kernel;
  cfg.functional = f;
  cfg.threads = threads;
  const std::int64_t n = data.n();
  switch (miest::infer_case(data)) {
    case miest::EstimationCase::ContCont: {
      const int dx = static_cast<int>(data.dx());
      const int dy = static_cast<int>(data.dy());
      cfg.h_x = miest::bandwidth_schedule(ScheduleKind::ContOdin1, l, n, dx, dy);
      cfg.h_y = cfg.h_x;
      break;
    }
    case miest::EstimationCase::ContDisc: {
      const int dx = static_cast<int>(data.dx());
      cfg.h_x = miest::bandwidth_schedule(ScheduleKind::MixedOdin1, l, n, dx);
      for (const auto& [label, m] : miest::class_counts(data))
        if (m >= 2)
          cfg.h_x_given_y[label] =
              miest::bandwidth_schedule(ScheduleKind::MixedOdin1, l, m, dx);
      break;
    }
    case miest::EstimationCase::MixedGeneral: {
      if (data.x_cont) {
        const int dx = static_cast<int>(data.dx());
        cfg.h_x = miest::bandwidth_schedule(ScheduleKind::MixedOdin1, l, n, dx);
        if (data.y_disc)
          for (const auto& [label, m] : miest::class_counts(data))
            if (m >= 2)
              cfg.h_x_given_y[label] =
                  miest::bandwidth_schedule(ScheduleKind::MixedOdin1, l, m, dx);
      }
      if (data.y_cont) {
        const int dy = static_cast<int>(data.dy());
        cfg.h_y = miest::bandwidth_schedule(ScheduleKind::MixedOdin1, l, n, dy);
      }
      break;
    }
  }
  return cfg;
}

int run_estimate(const EstimateOptions& o) {
  if (o.threads > 0) miest::set_max_threads(o.threads);
  if (o.format != "json")
    throw UsageError("estimate supports --format json only");

  miest::Dataset data = miest::load_dataset(o.input);
  apply_case_override(data, o.case_override);
  const miest::EstimationCase kase = miest::infer_case(data);
  const miest::Functional f =
      make_functional(o.functional, o.alpha, o.alpha_given, o.strict);
  const miest::KernelSpec kernel = miest::kernel_from_name(o.kernel);
  if (!o.use_plugin && !kernel.bounded() && !o.unsafe_kernel)
    throw UsageError(
        "unbounded kernels fall outside the ensemble guarantees; pass "
        "--unsafe-kernel (with an explicit --l-min/--l-max) to compare anyway");
  if (!o.use_plugin && kase == miest::EstimationCase::MixedGeneral)
    throw UsageError(
        "ensemble weighting covers the continuous and the mixed case; "
        "use --plugin for datasets with both categorical parts");

  // The estimator as a pure function of a dataset, reused by the bootstrap.
  // The parameter set L is fixed from the full data; weight solutions are
  // cached per sample count so resamples of equal size share one solve.
  std::optional<miest::EnsembleConfig> ens;
  if (!o.use_plugin) {
    miest::EnsembleConfig cfg;
    const bool mixed = kase == miest::EstimationCase::ContDisc;
    cfg.schedule = o.odin == 1
                       ? (mixed ? miest::ScheduleKind::MixedOdin1
                                : miest::ScheduleKind::ContOdin1)
                       : (mixed ? miest::ScheduleKind::MixedOdin2
                                : miest::ScheduleKind::ContOdin2);
    cfg.delta = o.delta;
    cfg.L = o.range_given
                ? miest::linspace_bandwidths(o.l_min, o.l_max, o.l_count)
                : miest::select_parameters(data, kernel, o.l_count,
                                           cfg.schedule, o.delta);
    cfg.program = o.exact ? miest::WeightProgram::Exact
                          : miest::WeightProgram::Relaxed;
    cfg.eta = parse_eta(o.eta, cfg.eta_policy);
    cfg.solver_tol = o.solver_tol;
    ens = cfg;
  }

  std::map<std::int64_t, miest::WeightSolution> weight_cache;
  auto run = [&](const miest::Dataset& d) -> miest::EstimateReport {
    miest::PluginConfig pc =
        plugin_config_for(d, kernel, f, o.plugin_l, o.threads);
    if (o.use_plugin) return miest::plugin_mi(d, pc);
    miest::EnsembleConfig cfg = *ens;
    const auto it = weight_cache.find(d.n());
    if (it != weight_cache.end()) {
      cfg.precomputed_weights = it->second;
      return miest::ensemble_estimate(d, cfg, pc);
    }
    miest::EstimateReport rep = miest::ensemble_estimate(d, cfg, pc);
    if (rep.weights_used) weight_cache.emplace(d.n(), *rep.weights_used);
    return rep;
  };

  const miest::EstimateReport rep = run(data);
  nlohmann::json j = miest::estimate_report_to_json(rep);

  if (o.ci_given) {
    miest::VarianceMethod method;
    if (o.ci_method == "bootstrap")
      method = miest::VarianceMethod::Bootstrap;
    else if (o.ci_method == "subsample")
      method = miest::VarianceMethod::Subsample;
    else
      throw UsageError("--ci-method expects bootstrap or subsample");
    const miest::ConfidenceReport cr = miest::confidence_interval(
        data, [&](const miest::Dataset& d) { return run(d).value; },
        o.ci_level, method, o.ci_reps, o.seed);
    j["confidence"] = miest::confidence_report_to_json(cr);
    std::cout << "ci: [" << g17(cr.lo) << ", " << g17(cr.hi) << "] at level "
              << g17(cr.level) << " (se " << g17(cr.std_error) << ")\n";
  }

  std::cout << "value: " << g17(rep.value) << "\n";
  std::cout << "case: " << miest::case_name(rep.case_kind) << "\n";
  std::cout << "n: " << rep.n_samples << "\n";
  if (rep.clamped > 0)
    std::cout << "warning: " << rep.clamped
              << " density evaluations clamped to the floor\n";
  for (int label : rep.skipped_classes)
    std::cout << "warning: skipped singleton class " << label << "\n";
  if (!rep.per_class_values.empty()) {
    std::cout << "per-class:\n";
    for (const auto& [label, v] : rep.per_class_values)
      std::cout << "  " << label << ": " << g17(v) << "\n";
  }
  if (rep.weights_used) {
    const miest::WeightSolution& w = *rep.weights_used;
    std::cout << "weights: " << w.w.size()
              << " members, status=" << miest::status_name(w.status)
              << ", epsilon=" << g17(w.epsilon) << ", norm2=" << g17(w.norm2)
              << "\n";
  }
  if (!o.out.empty()) miest::write_file(o.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// weights

struct WeightsOptions {
  int dx = 0;
  int dy = 0;
  bool dy_given = false;
  int odin = 1;
  double delta = 1.0;
  std::vector<double> l_values;
  int l_count = 40;
  double l_min = 0.0;
  double l_max = 0.0;
  bool range_given = false;
  std::int64_t n = 1000;
  bool exact = false;
  std::string eta = "auto";
  double solver_tol = 1e-8;
  std::string out;
};

int run_weights(const WeightsOptions& o) {
  using miest::ScheduleKind;
  if (o.dx < 1) throw UsageError("--dx must be a positive dimension");
  const ScheduleKind kind =
      o.odin == 1 ? (o.dy_given ? ScheduleKind::ContOdin1
                                : ScheduleKind::MixedOdin1)
                  : (o.dy_given ? ScheduleKind::ContOdin2
                                : ScheduleKind::MixedOdin2);
  miest::EnsembleConfig cfg;
  cfg.schedule = kind;
  cfg.delta = o.delta;
  cfg.basis = miest::BasisFamily::for_schedule(kind, o.dx, o.dy, o.delta);
  if (!o.l_values.empty()) {
    if (o.range_given)
      throw UsageError("give either --L or --l-min/--l-max, not both");
    cfg.L.values = o.l_values;
  } else if (o.range_given) {
    cfg.L = miest::linspace_bandwidths(o.l_min, o.l_max, o.l_count);
  } else {
    throw UsageError("list the parameter set with --L or --l-min/--l-max");
  }
  cfg.L.check();
  cfg.program =
      o.exact ? miest::WeightProgram::Exact : miest::WeightProgram::Relaxed;
  cfg.eta = parse_eta(o.eta, cfg.eta_policy);
  cfg.solver_tol = o.solver_tol;

  const miest::WeightSolution sol =
      cfg.program == miest::WeightProgram::Exact
          ? miest::solve_weights_exact(cfg, o.n)
          : miest::solve_weights_relaxed(cfg, o.n);
  emit(o.out, miest::weight_solution_to_json(sol).dump(2) + "\n");
  if (sol.status != miest::SolverStatus::Optimal) {
    std::cerr << "solver: " << miest::status_name(sol.status) << "\n";
    return 5;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleOptions {
  int builtin_case = 0;
  int d = 1;
  std::string spec_path;
  std::string functional = "shannon";
  double alpha = 0.5;
  bool alpha_given = false;
  std::string method = "auto";
  std::int64_t mc_samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

int run_oracle(const OracleOptions& o) {
  if (o.threads > 0) miest::set_max_threads(o.threads);
  if ((o.builtin_case != 0) == !o.spec_path.empty())
    throw UsageError("give exactly one of --case or --spec");
  miest::TruncGaussMixtureSpec spec;
  if (!o.spec_path.empty()) {
    spec = miest::mixture_spec_from_json(
        nlohmann::json::parse(miest::read_file(o.spec_path)));
  } else if (o.builtin_case == 1) {
    spec = miest::case1_spec(o.d);
  } else if (o.builtin_case == 2) {
    spec = miest::case2_spec();
  } else {
    throw UsageError("--case expects 1 or 2");
  }
  const miest::Functional f =
      make_functional(o.functional, o.alpha, o.alpha_given, false);

  miest::OracleMethod method;
  if (o.method == "quadrature")
    method = miest::OracleMethod::Quadrature;
  else if (o.method == "mc")
    method = miest::OracleMethod::MonteCarlo;
  else if (o.method == "auto")
    method = spec.d <= 2 ? miest::OracleMethod::Quadrature
                         : miest::OracleMethod::MonteCarlo;
  else
    throw UsageError("--method expects quadrature, mc or auto");

  const miest::OracleResult r =
      miest::oracle_mi(spec, f, method, o.seed, o.mc_samples, o.threads);
  nlohmann::json j;
  j["value"] = r.value;
  j["std_error"] = r.std_error;
  j["method"] =
      method == miest::OracleMethod::Quadrature ? "quadrature" : "mc";
  emit(o.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string plan_path;
  std::string out = "bench";
  std::vector<std::string> formats{"csv"};
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool timings = false;
  int threads = 0;
};

int run_bench_cmd(const BenchOptions& o) {
  miest::BenchPlan plan =
      miest::bench_plan_from_json(nlohmann::json::parse(miest::read_file(o.plan_path)));
  if (o.seed_given) plan.seed = o.seed;
  if (o.timings) plan.timings = true;
  if (o.threads > 0) plan.threads = o.threads;

  const miest::BenchResult res = miest::run_bench(plan);

  for (const std::string& fmt : o.formats) {
    const std::string path = o.out + "." + fmt;
    if (fmt == "csv")
      miest::write_file(path, miest::bench_to_csv(res));
    else if (fmt == "json")
      miest::write_file(path, miest::bench_result_to_json(res).dump(2) + "\n");
    else
      miest::write_file(path, miest::bench_to_svg(res));
    std::cout << "wrote " << path << "\n";
  }

  std::printf("oracle value %.10g (se %.3g)\n", res.oracle_value,
              res.oracle_std_error);
  std::printf("%-20s %8s %7s %12s %12s %12s %8s\n", "estimator", "N", "trials",
              "mse", "bias", "variance", "dropped");
  for (const miest::BenchCell& c : res.cells)
    std::printf("%-20s %8lld %7d %12.5g %+12.5g %12.5g %8d\n",
                c.estimator.c_str(), static_cast<long long>(c.n), c.trials,
                c.mse, c.bias, c.variance, c.dropped);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int run_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  check("epanechnikov(0.5) == 0.5625",
        miest::kernel_axis(miest::KernelSpec::epanechnikov(), 0.5) == 0.5625);

  {
    miest::RowMatrixXd x(3, 1);
    x << 0.0, 0.1, 0.5;
    miest::Dataset d;
    d.x_cont = x;
    miest::KdeContext ctx;
    ctx.data = &d;
    ctx.h_x = 0.3;
    check("hand leave-one-out density",
          std::abs(miest::kde_marginal_x(ctx, 1) - 5.0 / 3.0) < 1e-15);
  }

  {
    miest::EnsembleConfig cfg;
    cfg.schedule = miest::ScheduleKind::MixedOdin1;
    cfg.basis = miest::BasisFamily::mixed_odin1(1);
    cfg.L.values = {1.0, 2.0};
    const miest::WeightSolution s = miest::solve_weights_exact(cfg, 1000);
    check("exact weights on {1,2} are (2, -1)",
          s.status == miest::SolverStatus::Optimal &&
              std::abs(s.w[0] - 2.0) < 1e-9 && std::abs(s.w[1] + 1.0) < 1e-9);
  }

  {
    const double h = miest::bandwidth_schedule(miest::ScheduleKind::MixedOdin1,
                                               2.1, 10000, 4);
    check("bandwidth schedule l*N^{-1/(2d)}",
          std::abs(h - 2.1 * std::pow(10000.0, -0.125)) < 1e-15);
  }

  {
    miest::Rng a(42), b(42);
    bool same = true;
    for (int i = 0; i < 100; ++i)
      same = same && a.uniform() == b.uniform();
    check("seeded generator reproducibility", same);
  }

  {
    miest::Dataset d;
    miest::RowMatrixXd x(4, 2);
    x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8;
    d.x_cont = x;
    d.y_disc = std::vector<int>{0, 0, 1, 1};
    const miest::Dataset back =
        miest::dataset_from_csv(miest::dataset_to_csv(d));
    check("csv round trip",
          back.x_cont->isApprox(*d.x_cont, 0.0) && back.y_disc == d.y_disc);
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "miest: nonparametric mutual-information estimation "
      "(KDE plug-in and optimally weighted ensembles)"};
  app.require_subcommand(1);

  EstimateOptions eo;
  WeightsOptions wo;
  OracleOptions oo;
  BenchOptions bo;
  int rc = 0;

  CLI::App* est = app.add_subcommand(
      "estimate", "Estimate MI from a dataset (CSV or binary container)");
  est->add_option("input", eo.input, "dataset path")->required();
  est->add_option("--case", eo.case_override,
                  "force the estimation case instead of inferring it from "
                  "the columns")
      ->check(CLI::IsMember({"cont-cont", "mixed", "general"}));
  est->add_option("--functional", eo.functional, "shannon or renyi")
      ->check(CLI::IsMember({"shannon", "renyi"}));
  est->add_option("--alpha", eo.alpha, "order of the renyi integral, in (0,1)")
      ->trigger_on_parse()
      ->each([&eo](const std::string&) { eo.alpha_given = true; });
  est->add_flag("--plugin", eo.use_plugin,
                "single fixed-bandwidth plug-in estimate instead of the "
                "weighted ensemble");
  est->add_option("--plugin-l", eo.plugin_l,
                  "plug-in bandwidth parameter l in h = l*N^(-1/(2d))");
  est->add_option("--odin", eo.odin,
                  "weight-optimization basis family: 1 (bandwidth powers) or "
                  "2 (adds inverse-bandwidth terms; uses --delta)")
      ->check(CLI::IsMember({1, 2}));
  est->add_option("--delta", eo.delta,
                  "smoothness offset delta in the ODin2 schedule "
                  "h = l*N^(-1/(d+delta))");
  est->add_option("--L-count", eo.l_count,
                  "size of the bandwidth parameter set L");
  est->add_option("--l-min", eo.l_min, "smallest l in L (default: from data)")
      ->trigger_on_parse()
      ->each([&eo](const std::string&) { eo.range_given = true; });
  est->add_option("--l-max", eo.l_max, "largest l in L (default: from data)")
      ->trigger_on_parse()
      ->each([&eo](const std::string&) { eo.range_given = true; });
  est->add_option("--kernel", eo.kernel, "kernel profile")
      ->check(CLI::IsMember(
          {"uniform", "epanechnikov", "triangular", "gaussian"}));
  est->add_flag("--unsafe-kernel", eo.unsafe_kernel,
                "allow an unbounded kernel in the ensemble path (outside "
                "the supported theory; comparison runs only)");
  est->add_flag("--exact", eo.exact,
                "exact weight program (annihilate every basis term) instead "
                "of the relaxed epsilon-minimization");
  est->add_flag("--relaxed", [](std::int64_t) {},
                "relaxed weight program (default): minimize the slack "
                "epsilon under the norm cap eta");
  est->add_option("--eta", eo.eta,
                  "norm cap of the relaxed program: 'auto' ties the cap to "
                  "the slack epsilon, a number fixes it");
  est->add_option("--solver-tol", eo.solver_tol, "weight-solver tolerance");
  est->add_option("--ci", eo.ci_level,
                  "attach a confidence interval at this level, e.g. 0.95")
      ->trigger_on_parse()
      ->each([&eo](const std::string&) { eo.ci_given = true; });
  est->add_option("--ci-reps", eo.ci_reps, "resampling replicates");
  est->add_option("--ci-method", eo.ci_method, "bootstrap or subsample")
      ->check(CLI::IsMember({"bootstrap", "subsample"}));
  est->add_option("--out", eo.out, "write the full report as JSON here");
  est->add_option("--format", eo.format, "report format (json)");
  est->add_option("--seed", eo.seed, "seed for the resampling replicates");
  est->add_flag("--strict", eo.strict,
                "fail on nonpositive density estimates instead of clamping "
                "to the floor");
  est->add_option("--threads", eo.threads,
                  "worker threads (default: MIEST_THREADS or all cores)");
  est->callback([&] { rc = run_estimate(eo); });

  CLI::App* wts = app.add_subcommand(
      "weights", "Solve the offline ensemble weight program (no data needed)");
  wts->add_option("--dx", wo.dx, "continuous X dimension")->required();
  wts->add_option("--dy", wo.dy,
                  "continuous Y dimension (switches to the joint-grid basis)")
      ->trigger_on_parse()
      ->each([&wo](const std::string&) { wo.dy_given = true; });
  wts->add_option("--odin", wo.odin, "basis family, 1 or 2")
      ->check(CLI::IsMember({1, 2}));
  wts->add_option("--delta", wo.delta, "ODin2 smoothness offset delta");
  wts->add_option("--L", wo.l_values, "explicit parameter set, e.g. 1,2")
      ->delimiter(',');
  wts->add_option("--L-count", wo.l_count, "size of a linearly spaced L");
  wts->add_option("--l-min", wo.l_min, "smallest l")
      ->trigger_on_parse()
      ->each([&wo](const std::string&) { wo.range_given = true; });
  wts->add_option("--l-max", wo.l_max, "largest l")
      ->trigger_on_parse()
      ->each([&wo](const std::string&) { wo.range_given = true; });
  wts->add_option("--N", wo.n, "sample size the weights are scaled for");
  wts->add_flag("--exact", wo.exact, "exact annihilation program");
  wts->add_flag("--relaxed", [](std::int64_t) {},
                "relaxed program (default): minimize epsilon under the norm "
                "cap eta");
  wts->add_option("--eta", wo.eta, "norm cap: 'auto' or a positive number");
  wts->add_option("--solver-tol", wo.solver_tol, "solver tolerance");
  wts->add_option("--out", wo.out, "write the solution JSON here");
  wts->callback([&] { rc = run_weights(wo); });

  CLI::App* orc = app.add_subcommand(
      "oracle", "Ground-truth MI of a truncated-Gaussian-mixture model");
  orc->add_option("--case", oo.builtin_case,
                  "built-in model: 1 (three components, any d) or 2 (six "
                  "components, d=6)");
  orc->add_option("--d", oo.d, "dimension for --case 1");
  orc->add_option("--spec", oo.spec_path, "mixture model JSON");
  orc->add_option("--functional", oo.functional, "shannon or renyi")
      ->check(CLI::IsMember({"shannon", "renyi"}));
  orc->add_option("--alpha", oo.alpha, "renyi order, in (0,1)")
      ->trigger_on_parse()
      ->each([&oo](const std::string&) { oo.alpha_given = true; });
  orc->add_option("--method", oo.method, "quadrature, mc or auto")
      ->check(CLI::IsMember({"quadrature", "mc", "auto"}));
  orc->add_option("--mc-samples", oo.mc_samples,
                  "Monte-Carlo sample count (0 = dimension-based default)");
  orc->add_option("--seed", oo.seed, "Monte-Carlo seed");
  orc->add_option("--out", oo.out, "write the result JSON here");
  orc->add_option("--threads", oo.threads, "worker threads");
  orc->callback([&] { rc = run_oracle(oo); });

  CLI::App* ben = app.add_subcommand(
      "bench", "Monte-Carlo MSE comparison of estimators against the oracle");
  ben->add_option("plan", bo.plan_path, "benchmark plan JSON")->required();
  ben->add_option("--out", bo.out, "output stem (files get .csv/.json/.svg)");
  ben->add_option("--format", bo.formats, "formats to write")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  ben->add_option("--seed", bo.seed, "override the plan seed")
      ->trigger_on_parse()
      ->each([&bo](const std::string&) { bo.seed_given = true; });
  ben->add_flag("--timings", bo.timings, "record per-trial runtimes");
  ben->add_option("--threads", bo.threads, "worker threads");
  ben->callback([&] { rc = run_bench_cmd(bo); });

  CLI::App* self = app.add_subcommand("selftest", "Quick internal checks");
  self->callback([&] { rc = run_selftest(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "plan parse error: " << e.what() << "\n";
    return 2;
  } catch (const miest::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const miest::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const miest::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
