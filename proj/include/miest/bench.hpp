#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "miest/core.hpp"
#include "miest/ensemble.hpp"
#include "miest/io.hpp"
#include "miest/plugin.hpp"
#include "miest/rng.hpp"
#include "miest/synthetic.hpp"

namespace miest {

enum class EstimatorKind { Plugin, EnsembleOdin1, EnsembleOdin2 };

inline const char* estimator_kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Plugin:
      return "plugin";
    case EstimatorKind::EnsembleOdin1:
      return "ensemble-odin1";
    default:
      return "ensemble-odin2";
  }
}

inline EstimatorKind estimator_kind_from_name(const std::string& s) {
  if (s == "plugin") return EstimatorKind::Plugin;
  if (s == "ensemble-odin1") return EstimatorKind::EnsembleOdin1;
  if (s == "ensemble-odin2") return EstimatorKind::EnsembleOdin2;
  throw std::invalid_argument("unknown estimator kind: " + s);
}

struct EstimatorSpec {
  std::string name;
  EstimatorKind kind = EstimatorKind::Plugin;
  // Plug-in: fixed parameter l, bandwidths l*N^{-1/(2d)} and l*N_y^{-1/(2d)}.
  double plugin_l = 2.1;
  // Ensembles: linearly spaced parameter set and weight program.
  int l_count = 40;
  double l_min = 1.2;
  double l_max = 3.0;
  double delta = 1.0;
  WeightProgram program = WeightProgram::Relaxed;
  EtaPolicy eta_policy = EtaPolicy::EqualEpsilon;
  double eta = 1.0;
  KernelSpec kernel = KernelSpec::uniform();
  // Test hook: replaces the estimator entirely when set.
  std::function<double(const Dataset&)> override_fn;
};

struct BenchPlan {
  std::optional<TruncGaussMixtureSpec> mixture;
  std::string dataset_path;  // alternative to the mixture (fixed data)
  Functional functional = Functional::renyi(0.5);
  std::vector<EstimatorSpec> estimators;
  std::vector<std::int64_t> sample_sizes;
  int trials = 1;
  std::uint64_t seed = 0;
  // Paired trials share data across estimators (same per-trial seed chain);
  // unpaired trials fold the estimator name into the chain.
  bool paired = true;
  // Wall-clock timing is off by default so reruns stay byte-identical.
  bool timings = false;
  OracleMethod oracle_method = OracleMethod::MonteCarlo;
  std::int64_t oracle_samples = 0;
  std::optional<OracleResult> fixed_oracle;  // required with dataset_path
  double max_drop_fraction = 0.01;
  int threads = 0;
};

struct BenchCell {
  std::string estimator;
  std::int64_t n = 0;
  int trials = 0;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double mean_runtime_s = 0.0;
  int dropped = 0;
  std::vector<double> trial_values;
};

struct BenchResult {
  double oracle_value = 0.0;
  double oracle_std_error = 0.0;
  std::vector<BenchCell> cells;  // estimator-major, sample sizes ascending
};

namespace detail {

inline double run_planned_estimator(const EstimatorSpec& es,
                                    const Dataset& data,
                                    const Functional& functional, int threads,
                                    const std::optional<WeightSolution>& w) {
  if (es.override_fn) return es.override_fn(data);
  PluginConfig pc;
  pc.kernel_x = es.kernel;
  pc.kernel_y = es.kernel;
  pc.functional = functional;
  pc.threads = threads;
  const int dx = static_cast<int>(data.x_cont ? data.x_cont->cols() : 0);
  if (es.kind == EstimatorKind::Plugin) {
    pc.h_x = bandwidth_schedule(ScheduleKind::MixedOdin1, es.plugin_l,
                                data.n(), dx);
    for (const auto& [label, m] : class_counts(data))
      if (m >= 2)
        pc.h_x_given_y[label] =
            bandwidth_schedule(ScheduleKind::MixedOdin1, es.plugin_l, m, dx);
    return plugin_mi_mixed(data, pc).value;
  }
  EnsembleConfig ec;
  ec.L = {linspace_bandwidths(es.l_min, es.l_max, es.l_count)};
  ec.schedule = es.kind == EstimatorKind::EnsembleOdin1
                    ? ScheduleKind::MixedOdin1
                    : ScheduleKind::MixedOdin2;
  ec.delta = es.delta;
  ec.program = es.program;
  ec.eta_policy = es.eta_policy;
  ec.eta = es.eta;
  ec.precomputed_weights = w;
  return ensemble_estimate_mixed(data, ec, pc).value;
}

}  // namespace detail

// Ordinary-least-squares slope of log(mse) on log(N).
inline double fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("slope fit needs at least 3 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, mse] : points) {
    if (!(n > 0.0) || !(mse > 0.0))
      throw NonPositiveInput("slope fit needs positive N and MSE");
    const double lx = std::log(n), ly = std::log(mse);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(points.size());
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) throw NonPositiveInput("slope fit needs distinct N");
  return (k * sxy - sx * sy) / denom;
}

inline BenchResult run_bench(const BenchPlan& plan) {
  if (plan.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (plan.estimators.empty() && plan.sample_sizes.empty()) {
    // A fully empty plan still yields an (empty) result table.
  }
  for (std::size_t i = 1; i < plan.sample_sizes.size(); ++i)
    if (plan.sample_sizes[i] <= plan.sample_sizes[i - 1])
      throw std::invalid_argument("sample sizes must be ascending");

  const bool from_file = !plan.dataset_path.empty();
  std::optional<Dataset> fixed_data;
  if (from_file) {
    if (!plan.fixed_oracle)
      throw std::invalid_argument(
          "dataset-path plans need a fixed oracle value");
    fixed_data = load_dataset(plan.dataset_path);
  } else {
    if (!plan.mixture)
      throw std::invalid_argument("plan needs a mixture spec or dataset path");
    plan.mixture->check();
  }

  BenchResult result;
  if (plan.fixed_oracle) {
    result.oracle_value = plan.fixed_oracle->value;
    result.oracle_std_error = plan.fixed_oracle->std_error;
  } else {
    const OracleResult oracle = oracle_mi(
        *plan.mixture, plan.functional, plan.oracle_method,
        seed_combine(plan.seed, fnv1a("oracle")), plan.oracle_samples,
        plan.threads);
    result.oracle_value = oracle.value;
    result.oracle_std_error = oracle.std_error;
  }

  for (const EstimatorSpec& es : plan.estimators) {
    if (es.name.empty()) throw std::invalid_argument("estimator needs a name");
    for (const std::int64_t n : plan.sample_sizes) {
      // Ensemble weights depend only on (N, L, basis): solve once per cell.
      std::optional<WeightSolution> weights;
      if (!es.override_fn && es.kind != EstimatorKind::Plugin) {
        EnsembleConfig ec;
        ec.L = {linspace_bandwidths(es.l_min, es.l_max, es.l_count)};
        ec.schedule = es.kind == EstimatorKind::EnsembleOdin1
                          ? ScheduleKind::MixedOdin1
                          : ScheduleKind::MixedOdin2;
        ec.delta = es.delta;
        ec.program = es.program;
        ec.eta_policy = es.eta_policy;
        ec.eta = es.eta;
        const int dx = from_file
                           ? static_cast<int>(fixed_data->x_cont
                                                  ? fixed_data->x_cont->cols()
                                                  : 0)
                           : plan.mixture->d;
        const BasisFamily family =
            BasisFamily::for_schedule(ec.schedule, dx, 0, ec.delta);
        const ConstraintSystem sys = build_constraint_matrix(family, ec.L, n);
        WeightSolution sol =
            (ec.program == WeightProgram::Exact)
                ? solve_weights_exact(sys, ec.solver_tol)
                : solve_weights_relaxed(sys, ec.eta_policy, ec.eta,
                                        ec.solver_tol);
        if (sol.status == SolverStatus::Infeasible)
          throw InfeasibleProgram("weight program infeasible in plan cell");
        if (sol.status == SolverStatus::ToleranceNotMet)
          throw ToleranceNotMet("weight solver stalled in plan cell");
        weights = std::move(sol);
      }

      BenchCell cell;
      cell.estimator = es.name;
      cell.n = n;
      cell.trials = plan.trials;
      double runtime_total = 0.0;
      for (int t = 0; t < plan.trials; ++t) {
        std::uint64_t s = plan.seed;
        if (!plan.paired) s = seed_combine(s, fnv1a(es.name));
        s = seed_combine(s, static_cast<std::uint64_t>(n));
        s = seed_combine(s, static_cast<std::uint64_t>(t));
        try {
          Dataset data =
              from_file ? *fixed_data : sample_mixture(*plan.mixture, n, s);
          const auto t0 = std::chrono::steady_clock::now();
          const double v = detail::run_planned_estimator(
              es, data, plan.functional, plan.threads, weights);
          const auto t1 = std::chrono::steady_clock::now();
          if (plan.timings)
            runtime_total +=
                std::chrono::duration<double>(t1 - t0).count();
          cell.trial_values.push_back(v);
        } catch (const MiestError&) {
          ++cell.dropped;
        }
      }
      const auto kept = cell.trial_values.size();
      if (static_cast<double>(cell.dropped) >
          plan.max_drop_fraction * plan.trials)
        throw DataError("dropped " + std::to_string(cell.dropped) + " of " +
                        std::to_string(plan.trials) + " trials for " +
                        es.name + " at N=" + std::to_string(n));
      const double dk = static_cast<double>(kept);
      double mean = 0.0;
      for (double v : cell.trial_values) mean += v;
      mean /= dk;
      double mse = 0.0, var = 0.0;
      for (double v : cell.trial_values) {
        const double eo = v - result.oracle_value;
        mse += eo * eo;
        var += (v - mean) * (v - mean);
      }
      cell.mse = mse / dk;
      cell.variance = var / dk;
      cell.bias = mean - result.oracle_value;
      cell.mean_runtime_s = plan.timings ? runtime_total / dk : 0.0;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

namespace detail {

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace detail

inline std::string bench_to_csv(const BenchResult& result) {
  std::string out = "estimator,N,trials,mse,bias,variance,mean_runtime_s,dropped\n";
  for (const BenchCell& c : result.cells) {
    out += c.estimator;
    out += ',';
    out += std::to_string(c.n);
    out += ',';
    out += std::to_string(c.trials);
    out += ',';
    out += detail::format_g17(c.mse);
    out += ',';
    out += detail::format_g17(c.bias);
    out += ',';
    out += detail::format_g17(c.variance);
    out += ',';
    out += detail::format_g17(c.mean_runtime_s);
    out += ',';
    out += std::to_string(c.dropped);
    out += '\n';
  }
  return out;
}

// Standalone SVG 1.1: log10-log10 MSE-vs-N, one polyline per estimator,
// ticks at the distinct sample sizes and at integer powers of ten on the
// MSE axis. All coordinates use fixed two-decimal formatting so identical
// results render byte-identically.
inline std::string bench_to_svg(const BenchResult& result) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  const double W = 720.0, H = 520.0;
  const double ml = 80.0, mr = 190.0, mt = 40.0, mb = 60.0;

  std::vector<std::string> names;
  std::vector<double> xs, ys;
  for (const BenchCell& c : result.cells) {
    if (std::find(names.begin(), names.end(), c.estimator) == names.end())
      names.push_back(c.estimator);
    if (c.n > 0 && c.mse > 0.0) {
      xs.push_back(std::log10(static_cast<double>(c.n)));
      ys.push_back(std::log10(c.mse));
    }
  }
  double x0 = 0.0, x1 = 1.0, y0 = -1.0, y1 = 0.0;
  if (!xs.empty()) {
    x0 = *std::min_element(xs.begin(), xs.end());
    x1 = *std::max_element(xs.begin(), xs.end());
    y0 = *std::min_element(ys.begin(), ys.end());
    y1 = *std::max_element(ys.begin(), ys.end());
  }
  if (x1 - x0 < 1e-9) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-9) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double xpad = 0.04 * (x1 - x0), ypad = 0.08 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;
  const auto px = [&](double lx) {
    return ml + (lx - x0) / (x1 - x0) * (W - ml - mr);
  };
  const auto py = [&](double ly) {
    return H - mb - (ly - y0) / (y1 - y0) * (H - mt - mb);
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "width=\"720\" height=\"520\" viewBox=\"0 0 720 520\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"520\" "
         "fill=\"white\"/>\n";
  // Axes.
  svg += "<line x1=\"" + detail::format_fixed(ml, 2) + "\" y1=\"" +
         detail::format_fixed(H - mb, 2) + "\" x2=\"" +
         detail::format_fixed(W - mr, 2) + "\" y2=\"" +
         detail::format_fixed(H - mb, 2) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::format_fixed(ml, 2) + "\" y1=\"" +
         detail::format_fixed(mt, 2) + "\" x2=\"" +
         detail::format_fixed(ml, 2) + "\" y2=\"" +
         detail::format_fixed(H - mb, 2) + "\" stroke=\"black\"/>\n";
  // X ticks at distinct sample sizes.
  std::vector<std::int64_t> sizes;
  for (const BenchCell& c : result.cells)
    if (c.n > 0 &&
        std::find(sizes.begin(), sizes.end(), c.n) == sizes.end())
      sizes.push_back(c.n);
  std::sort(sizes.begin(), sizes.end());
  for (std::int64_t n : sizes) {
    const double x = px(std::log10(static_cast<double>(n)));
    svg += "<line x1=\"" + detail::format_fixed(x, 2) + "\" y1=\"" +
           detail::format_fixed(H - mb, 2) + "\" x2=\"" +
           detail::format_fixed(x, 2) + "\" y2=\"" +
           detail::format_fixed(H - mb + 6.0, 2) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::format_fixed(x, 2) + "\" y=\"" +
           detail::format_fixed(H - mb + 22.0, 2) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + std::to_string(n) +
           "</text>\n";
  }
  // Y ticks at integer powers of ten.
  const int k0 = static_cast<int>(std::ceil(y0));
  const int k1 = static_cast<int>(std::floor(y1));
  for (int k = k0; k <= k1; ++k) {
    const double y = py(static_cast<double>(k));
    svg += "<line x1=\"" + detail::format_fixed(ml - 6.0, 2) + "\" y1=\"" +
           detail::format_fixed(y, 2) + "\" x2=\"" +
           detail::format_fixed(ml, 2) + "\" y2=\"" +
           detail::format_fixed(y, 2) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::format_fixed(ml - 10.0, 2) + "\" y=\"" +
           detail::format_fixed(y + 4.0, 2) +
           "\" font-size=\"12\" text-anchor=\"end\">1e" + std::to_string(k) +
           "</text>\n";
  }
  // Axis labels.
  svg += "<text x=\"" + detail::format_fixed((ml + W - mr) / 2.0, 2) +
         "\" y=\"" + detail::format_fixed(H - 16.0, 2) +
         "\" font-size=\"14\" text-anchor=\"middle\">sample size N "
         "(log scale)</text>\n";
  svg += "<text x=\"22\" y=\"" +
         detail::format_fixed((mt + H - mb) / 2.0, 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "22 " +
         detail::format_fixed((mt + H - mb) / 2.0, 2) +
         ")\">MSE (log scale)</text>\n";
  // Polylines and legend.
  for (std::size_t e = 0; e < names.size(); ++e) {
    const char* color = palette[e % 6];
    std::string pts;
    for (const BenchCell& c : result.cells) {
      if (c.estimator != names[e] || c.n <= 0 || !(c.mse > 0.0)) continue;
      pts += detail::format_fixed(px(std::log10(static_cast<double>(c.n))), 2);
      pts += ',';
      pts += detail::format_fixed(py(std::log10(c.mse)), 2);
      pts += ' ';
    }
    if (!pts.empty()) pts.pop_back();
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = mt + 20.0 * static_cast<double>(e);
    svg += "<line x1=\"" + detail::format_fixed(W - mr + 16.0, 2) +
           "\" y1=\"" + detail::format_fixed(ly, 2) + "\" x2=\"" +
           detail::format_fixed(W - mr + 44.0, 2) + "\" y2=\"" +
           detail::format_fixed(ly, 2) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::format_fixed(W - mr + 50.0, 2) + "\" y=\"" +
           detail::format_fixed(ly + 4.0, 2) + "\" font-size=\"12\">" +
           names[e] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace miest
