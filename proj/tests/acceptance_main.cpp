// Acceptance gate. Eight end-to-end criteria, one PASS/FAIL line each,
// nonzero exit if any fail. Runs the full desk-scale benchmark grids, so
// expect minutes, not seconds.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "miest/miest.hpp"
#include "miest/serialize.hpp"
#include "support/cli.hpp"
#include "support/oracles.hpp"

namespace {

using miest::BandwidthSet;
using miest::BasisFamily;
using miest::BenchCell;
using miest::BenchPlan;
using miest::BenchResult;
using miest::Dataset;
using miest::EnsembleConfig;
using miest::EstimatorKind;
using miest::EstimatorSpec;
using miest::EtaPolicy;
using miest::Functional;
using miest::KernelSpec;
using miest::PluginConfig;
using miest::RowMatrixXd;
using miest::ScheduleKind;
using miest::TruncGaussMixtureSpec;
using miest::WeightSolution;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

EstimatorSpec plugin_spec() {
  EstimatorSpec e;
  e.name = "plugin";
  e.kind = EstimatorKind::Plugin;
  e.plugin_l = 2.1;
  return e;
}

EstimatorSpec ensemble_spec(int l_count = 40) {
  EstimatorSpec e;
  e.name = "ensemble-odin1";
  e.kind = EstimatorKind::EnsembleOdin1;
  e.l_count = l_count;
  e.l_min = 1.2;
  e.l_max = 3.0;
  return e;
}

// Mixed-case plug-in with the bandwidth schedule h = 2.1 * m^{-1/(2 dx)}
// applied to the pooled and the per-class sample counts, mirroring the
// benchmark harness.
double plugin_estimate(const Dataset& d, const Functional& f) {
  PluginConfig pc;
  pc.functional = f;
  const int dx = static_cast<int>(d.dx());
  pc.h_x = miest::bandwidth_schedule(ScheduleKind::MixedOdin1, 2.1, d.n(), dx);
  for (const auto& [label, m] : miest::class_counts(d))
    if (m >= 2)
      pc.h_x_given_y[label] =
          miest::bandwidth_schedule(ScheduleKind::MixedOdin1, 2.1, m, dx);
  return miest::plugin_mi(d, pc).value;
}

// --- 1. Ensemble beats the plug-in on the 4-D three-component model -------

Outcome fig1_desk_scale() {
  BenchPlan plan;
  plan.mixture = miest::case1_spec(4);
  plan.functional = Functional::renyi(0.5);
  plan.sample_sizes = {500, 1000, 2000, 3000};
  plan.trials = 100;
  plan.paired = true;
  plan.seed = 7041;
  plan.oracle_method = miest::OracleMethod::MonteCarlo;
  plan.estimators = {plugin_spec(), ensemble_spec()};
  const BenchResult res = miest::run_bench(plan);

  int better = 0;
  for (int i = 0; i < 4; ++i)
    if (res.cells[i].mse > res.cells[4 + i].mse) ++better;
  const BenchCell& p = res.cells[3];
  const BenchCell& e = res.cells[7];
  const double gap = p.mse - e.mse;
  // A 1-sigma oracle error u shifts each cell's MSE by u^2 - 2*u*bias; the
  // u^2 parts cancel in the gap, leaving 2*u*|bias_p - bias_e|. The gap must
  // clear twice that contribution.
  const double contribution =
      2.0 * res.oracle_std_error * std::abs(p.bias - e.bias);
  Outcome o;
  o.pass = gap > 2.0 * contribution && better >= 3;
  o.detail = fmt(
      "N=3000 mse plug-in %.4g vs ensemble %.4g (gap %.3g, needs > %.3g); "
      "ensemble better at %d/4 sizes; oracle %.6g (mc se %.2g)",
      p.mse, e.mse, gap, 2.0 * contribution, better, res.oracle_value,
      res.oracle_std_error);
  return o;
}

// --- 2. Near-parametric MSE decay on an easy 1-D two-class model ----------

Outcome rate_surrogate() {
  TruncGaussMixtureSpec spec;
  spec.d = 1;
  spec.covariance_scale = 0.01;  // sd 0.1: six sigmas between the means
  spec.class_probs = {{0, 0.5}, {1, 0.5}};
  spec.means = {{0, {0.2}}, {1, {0.8}}};
  spec.check();

  BenchPlan plan;
  plan.mixture = spec;
  plan.functional = Functional::renyi(0.5);
  plan.sample_sizes = {500, 1000, 2000, 4000};
  plan.trials = 100;
  plan.paired = true;
  plan.seed = 7042;
  plan.oracle_method = miest::OracleMethod::Quadrature;
  plan.estimators = {ensemble_spec(), plugin_spec()};
  const BenchResult res = miest::run_bench(plan);

  std::vector<std::pair<double, double>> ep, pp;
  for (int i = 0; i < 4; ++i) {
    ep.emplace_back(static_cast<double>(res.cells[i].n), res.cells[i].mse);
    pp.emplace_back(static_cast<double>(res.cells[4 + i].n),
                    res.cells[4 + i].mse);
  }
  const double slope_e = miest::fit_loglog_slope(ep);
  const double slope_p = miest::fit_loglog_slope(pp);
  Outcome o;
  o.pass = slope_e <= -0.7 && slope_p >= slope_e;
  o.detail = fmt("ensemble MSE slope %.3f (needs <= -0.7), plug-in %.3f "
                 "(must not be steeper)",
                 slope_e, slope_p);
  return o;
}

// --- 3. Weight programs against offline convex / pseudoinverse solutions --

Outcome weight_solver_equivalence() {
  struct Frozen {
    const char* name;
    BasisFamily basis;
    BandwidthSet L;
    std::int64_t n;
    EtaPolicy policy;
    double eta;
    double eps;  // independently solved optimum
  };
  const std::vector<Frozen> frozen = {
      {"d1 L2", BasisFamily::mixed_odin1(1), BandwidthSet{{1.0, 2.0}}, 1000,
       EtaPolicy::EqualEpsilon, 1.0, 1.0},
      {"d2 L8", BasisFamily::mixed_odin1(2), miest::linspace_bandwidths(1.0, 3.0, 8),
       500, EtaPolicy::EqualEpsilon, 1.0, 1.50686088681},
      {"d3 L10 inv", BasisFamily::mixed_odin2(3, 1.0),
       miest::linspace_bandwidths(1.2, 3.0, 10), 2000, EtaPolicy::EqualEpsilon,
       1.0, 2.71231079845},
      {"joint d1+1 L5", BasisFamily::cont_odin1(1, 1),
       miest::linspace_bandwidths(1.0, 2.0, 5), 1000, EtaPolicy::EqualEpsilon,
       1.0, 1.31086117508},
      {"joint d2+1 L6 inv", BasisFamily::cont_odin2(2, 1, 2.0),
       miest::linspace_bandwidths(1.2, 2.5, 6), 4096, EtaPolicy::EqualEpsilon,
       1.0, 3.14954369453},
      {"d4 L40", BasisFamily::mixed_odin1(4),
       miest::linspace_bandwidths(1.2, 3.0, 40), 10000,
       EtaPolicy::EqualEpsilon, 1.0, 6.68264352277},
      {"d2 L30 capped", BasisFamily::mixed_odin1(2),
       miest::linspace_bandwidths(1.2, 3.0, 30), 1000, EtaPolicy::Fixed, 0.5,
       2.07837480853},
  };
  double worst_rel = 0.0;
  for (const Frozen& f : frozen) {
    const miest::ConstraintSystem sys =
        miest::build_constraint_matrix(f.basis, f.L, f.n);
    const WeightSolution sol = miest::solve_weights_relaxed(sys, f.policy, f.eta);
    if (sol.status != miest::SolverStatus::Optimal)
      return {false, fmt("relaxed '%s' not optimal", f.name)};
    const double rel = std::abs(sol.epsilon - f.eps) / f.eps;
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-4)
      return {false, fmt("relaxed '%s': epsilon %.11g vs offline %.11g "
                         "(rel %.2g > 1e-4)",
                         f.name, sol.epsilon, f.eps, rel)};
  }

  // Exact program vs the Eigen pseudoinverse minimum-norm solution.
  miest::Rng rng(424242);
  double worst_abs = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    const int dx = 1 + static_cast<int>(rng.index(3));
    const BasisFamily fam = rep % 2 == 0
                                ? BasisFamily::mixed_odin1(dx)
                                : BasisFamily::cont_odin1(dx, 1);
    const auto T = static_cast<int>(fam.terms.size());
    BandwidthSet L;
    if (rep % 2 == 0) {
      const int C = T + 2 + static_cast<int>(rng.index(4));
      double v = 0.8 + 0.4 * rng.uniform();
      for (int c = 0; c < C; ++c) {
        L.values.push_back(v);
        v += 0.15 + 0.25 * rng.uniform();
      }
    } else {
      int side = 2;
      while (side * side < T + 2) ++side;
      double v = 0.9 + 0.3 * rng.uniform();
      for (int c = 0; c < side; ++c) {
        L.values.push_back(v);
        v += 0.2 + 0.3 * rng.uniform();
      }
    }
    const std::int64_t n = 200 + static_cast<std::int64_t>(rng.index(5000));
    const miest::ConstraintSystem sys = miest::build_constraint_matrix(fam, L, n);
    const WeightSolution sol = miest::solve_weights_exact(sys);
    if (sol.status != miest::SolverStatus::Optimal)
      return {false, fmt("exact rep %d not optimal", rep)};
    const auto C = static_cast<Eigen::Index>(sol.w.size());
    Eigen::MatrixXd A(T + 1, C);
    A.row(0).setOnes();
    A.bottomRows(T) = sys.psi;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(T + 1);
    b(0) = 1.0;
    const oracle::PinvSolution ps = oracle::pinv_min_norm(A, b);
    for (Eigen::Index c = 0; c < C; ++c)
      worst_abs = std::max(worst_abs,
                           std::abs(sol.w[static_cast<std::size_t>(c)] - ps.w(c)));
    if (worst_abs > 1e-8)
      return {false, fmt("exact rep %d departs from the pseudoinverse by %.2g",
                         rep, worst_abs)};
  }

  // The hand-derived two-member solution must come out exactly.
  EnsembleConfig cfg;
  cfg.schedule = ScheduleKind::MixedOdin1;
  cfg.basis = BasisFamily::mixed_odin1(1);
  cfg.L.values = {1.0, 2.0};
  const WeightSolution hand = miest::solve_weights_exact(cfg, 1000);
  if (!(hand.w.size() == 2 && hand.w[0] == 2.0 && hand.w[1] == -1.0))
    return {false, "two-member exact solution is not exactly (2, -1)"};

  return {true, fmt("7 relaxed optima within %.2g rel, 6 exact solves within "
                    "%.2g of the pseudoinverse, (2, -1) exact",
                    worst_rel, worst_abs)};
}

// --- 4. KDE fast paths against the naive double loop ----------------------

Outcome kde_brute_force() {
  const KernelSpec kernels[4] = {KernelSpec::uniform(), KernelSpec::epanechnikov(),
                                 KernelSpec::triangular(), KernelSpec::gaussian()};
  miest::Rng rng(5150);
  double worst = 0.0;
  long checks = 0;
  const auto rel_ok = [&](double got, double want) {
    if (got == want) {
      ++checks;
      return true;
    }
    const double rel = std::abs(got - want) / std::max(std::abs(got), std::abs(want));
    worst = std::max(worst, rel);
    ++checks;
    return rel <= 1e-12;
  };

  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(6 + rng.index(45));  // 6..50
    const int dx = 1 + static_cast<int>(rng.index(3));
    const KernelSpec kx = kernels[rng.index(4)];
    const KernelSpec ky = kernels[rng.index(4)];
    const double hx = 0.05 + rng.uniform();
    const double hy = 0.05 + rng.uniform();

    Dataset d;
    d.x_cont = oracle::random_block(rng, n, dx);
    const int shape = t % 3;  // 0: +yc, 1: +labels, 2: both
    if (shape == 0 || shape == 2) {
      const int dy = 1 + static_cast<int>(rng.index(3));
      d.y_cont = oracle::random_block(rng, n, dy);
    }
    std::map<int, double> h_cond;
    if (shape == 1 || shape == 2) {
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < labels.size(); ++i)
        labels[i] = static_cast<int>(i % 3);  // every class has >= 2 members
      d.y_disc = labels;
      for (int lab = 0; lab < 3; ++lab) h_cond[lab] = 0.1 + rng.uniform();
    }

    miest::KdeContext ctx;
    ctx.data = &d;
    ctx.kernel_x = kx;
    ctx.kernel_y = ky;
    ctx.h_x = hx;
    ctx.h_y = hy;
    ctx.h_x_given_y = h_cond;

    const auto all = oracle::everyone(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!rel_ok(miest::kde_marginal_x(ctx, j),
                  oracle::loo_density(*d.x_cont, j, all, kx, hx)))
        return {false, fmt("marginal X mismatch, dataset %d sample %lld (rel %.2g)",
                           t, static_cast<long long>(j), worst)};
      if (d.y_cont) {
        if (!rel_ok(miest::kde_marginal_y(ctx, j),
                    oracle::loo_density(*d.y_cont, j, all, ky, hy)))
          return {false, fmt("marginal Y mismatch, dataset %d sample %lld", t,
                             static_cast<long long>(j))};
        if (!rel_ok(miest::kde_joint(ctx, j),
                    oracle::loo_joint_density(*d.x_cont, *d.y_cont, j, kx, ky,
                                              hx, hy)))
          return {false, fmt("joint mismatch, dataset %d sample %lld", t,
                             static_cast<long long>(j))};
      }
      if (d.y_disc) {
        const int lab = (*d.y_disc)[static_cast<std::size_t>(j)];
        const auto members = oracle::with_label(*d.y_disc, lab);
        if (!rel_ok(miest::kde_conditional_x_given_y(ctx, j),
                    oracle::loo_density(*d.x_cont, j, members, kx,
                                        h_cond.at(lab))))
          return {false, fmt("conditional mismatch, dataset %d sample %lld", t,
                             static_cast<long long>(j))};
      }
    }

    // Multi-bandwidth sweep: raw kernel sums for a whole ladder at once.
    std::vector<double> hs;
    double v = 0.08 + 0.2 * rng.uniform();
    for (int k = 0; k < 5; ++k) {
      hs.push_back(v);
      v += 0.1 + 0.4 * rng.uniform();
    }
    std::vector<double> sums(static_cast<std::size_t>(n) * hs.size());
    miest::detail::loo_kernel_sums(*d.x_cont, kx, hs, all, all, sums.data(), 1);
    for (Eigen::Index j = 0; j < n; ++j)
      for (std::size_t k = 0; k < hs.size(); ++k) {
        double ref = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          if (i != j) ref += oracle::kernel_product(*d.x_cont, j, i, kx, hs[k]);
        if (!rel_ok(sums[static_cast<std::size_t>(j) * hs.size() + k], ref))
          return {false, fmt("bandwidth-ladder sum mismatch, dataset %d", t)};
      }

    if (d.y_cont) {
      const std::vector<double> hxs = {hs[0], hs[2]};
      const std::vector<double> hys = {hs[1], hs[3], hs[4]};
      std::vector<double> grid(static_cast<std::size_t>(n) * 6);
      miest::detail::loo_kernel_sums_grid(*d.x_cont, kx, hxs, *d.y_cont, ky,
                                          hys, all, all, grid.data(), 1);
      for (Eigen::Index j = 0; j < n; ++j)
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 3; ++b) {
            double ref = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
              if (i != j)
                ref += oracle::kernel_product(*d.x_cont, j, i, kx, hxs[a]) *
                       oracle::kernel_product(*d.y_cont, j, i, ky, hys[b]);
            if (!rel_ok(grid[(static_cast<std::size_t>(j) * 2 + a) * 3 + b], ref))
              return {false, fmt("grid sum mismatch, dataset %d", t)};
          }
    }

    // Fixed-point evaluation at external points.
    const RowMatrixXd pts = oracle::random_block(rng, 5, dx);
    const std::vector<double> at =
        miest::kde_at_points(pts, *d.x_cont, kx, hx, 1);
    for (Eigen::Index p = 0; p < 5; ++p) {
      double ref = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double term = 1.0;
        for (int a = 0; a < dx; ++a)
          term *= miest::kernel_axis(kx, (pts(p, a) - (*d.x_cont)(i, a)) / hx);
        ref += term;
      }
      ref /= static_cast<double>(n) * std::pow(hx, dx);
      if (!rel_ok(at[static_cast<std::size_t>(p)], ref))
        return {false, fmt("point-evaluation mismatch, dataset %d", t)};
    }
  }
  return {true, fmt("50 datasets, %ld density checks, worst rel %.2g", checks,
                    worst)};
}

// --- 5. Fixed points and independence --------------------------------------

Outcome invariants() {
  miest::Rng rng(31);
  Dataset d;
  RowMatrixXd x(50, 1);
  for (int i = 0; i < 50; ++i) x(i, 0) = rng.uniform();
  d.x_cont = x;
  d.y_disc = std::vector<int>(50, 0);

  PluginConfig pc;
  pc.h_x = miest::bandwidth_schedule(ScheduleKind::MixedOdin1, 2.1, 50, 1);
  pc.h_x_given_y[0] = pc.h_x;
  pc.functional = Functional::shannon();
  const double sh = miest::plugin_mi(d, pc).value;
  pc.functional = Functional::renyi(0.5);
  const double re = miest::plugin_mi(d, pc).value;

  EnsembleConfig ec;
  ec.schedule = ScheduleKind::MixedOdin1;
  ec.L = miest::linspace_bandwidths(1.2, 3.0, 40);
  PluginConfig epc;
  epc.functional = Functional::shannon();
  const double ens_sh = miest::ensemble_estimate(d, ec, epc).value;
  if (!(sh == 0.0 && re == 1.0 && ens_sh == 0.0))
    return {false, fmt("single-class fixed points off: shannon %.17g, "
                       "renyi %.17g, ensemble shannon %.17g",
                       sh, re, ens_sh)};

  // Independent X ~ U[0,1], Y ~ Bernoulli(1/2): the Shannon ensemble
  // estimate should average to zero.
  EnsembleConfig icfg;
  icfg.schedule = ScheduleKind::MixedOdin1;
  icfg.L = miest::linspace_bandwidths(1.2, 3.0, 40);
  PluginConfig ipc;
  ipc.functional = Functional::shannon();
  double mean = 0.0;
  for (int t = 0; t < 50; ++t) {
    miest::Rng r(miest::seed_combine(6001, static_cast<std::uint64_t>(t)));
    Dataset ind;
    RowMatrixXd xi(5000, 1);
    std::vector<int> yi(5000);
    for (int i = 0; i < 5000; ++i) {
      xi(i, 0) = r.uniform();
      yi[i] = static_cast<int>(r.index(2));
    }
    ind.x_cont = xi;
    ind.y_disc = yi;
    const miest::EstimateReport rep = miest::ensemble_estimate(ind, icfg, ipc);
    if (t == 0 && rep.weights_used) icfg.precomputed_weights = rep.weights_used;
    mean += rep.value;
  }
  mean /= 50.0;
  Outcome o;
  o.pass = std::abs(mean) <= 0.05;
  o.detail = fmt("fixed points exact; independent-data ensemble mean %.4g "
                 "over 50 trials (|.| <= 0.05)",
                 mean);
  return o;
}

// --- 6. Across-trial variance of the plug-in decays like 1/N --------------

Outcome variance_rate() {
  BenchPlan plan;
  plan.mixture = miest::case1_spec(1);
  plan.functional = Functional::renyi(0.5);
  plan.sample_sizes = {250, 500, 1000, 2000, 4000};
  plan.trials = 100;
  plan.seed = 7046;
  plan.fixed_oracle = miest::OracleResult{0.0, 0.0};  // variance needs no truth
  plan.estimators = {plugin_spec()};
  const BenchResult res = miest::run_bench(plan);
  std::vector<std::pair<double, double>> pts;
  for (const BenchCell& c : res.cells)
    pts.emplace_back(static_cast<double>(c.n), c.variance);
  const double slope = miest::fit_loglog_slope(pts);
  Outcome o;
  o.pass = slope >= -1.35 && slope <= -0.65;
  o.detail = fmt("variance log-log slope %.3f over N in [250, 4000] "
                 "(needs [-1.35, -0.65])",
                 slope);
  return o;
}

// --- 7. Asymptotic normality and interval coverage ------------------------

Outcome normality_and_coverage() {
  BenchPlan plan;
  plan.mixture = miest::case1_spec(4);
  plan.functional = Functional::renyi(0.5);
  plan.sample_sizes = {2000};
  plan.trials = 200;
  plan.seed = 7047;
  plan.fixed_oracle = miest::OracleResult{0.0, 0.0};  // standardized in-sample
  plan.estimators = {ensemble_spec()};
  const BenchResult res = miest::run_bench(plan);
  const miest::NormalityReport rep =
      miest::normality_diagnostic(res.cells[0].trial_values);
  if (!(rep.p_value > 0.01))
    return {false, fmt("KS p %.4g <= 0.01 (D = %.4g) on 200 standardized "
                       "ensemble estimates",
                       rep.p_value, rep.ks_statistic)};

  // Bootstrap interval coverage of the estimator's own expected value on a
  // cheap 1-D instance: the target is E[estimate] at N=500 (estimated from
  // 400 independent trials), not the population MI, so the estimator's bias
  // does not enter.
  const TruncGaussMixtureSpec spec = miest::case1_spec(1);
  const Functional f = Functional::renyi(0.5);
  const auto fn = [&](const Dataset& dd) { return plugin_estimate(dd, f); };
  double mu = 0.0;
  for (int t = 0; t < 400; ++t)
    mu += fn(miest::sample_mixture(
        spec, 500, miest::seed_combine(8101, static_cast<std::uint64_t>(t))));
  mu /= 400.0;
  int hits = 0;
  for (int t = 0; t < 100; ++t) {
    const Dataset data = miest::sample_mixture(
        spec, 500, miest::seed_combine(8202, static_cast<std::uint64_t>(t)));
    const miest::ConfidenceReport cr = miest::confidence_interval(
        data, fn, 0.95, miest::VarianceMethod::Bootstrap, 200,
        miest::seed_combine(8303, static_cast<std::uint64_t>(t)));
    if (cr.lo <= mu && mu <= cr.hi) ++hits;
  }
  Outcome o;
  o.pass = hits >= 88;
  o.detail = fmt("KS p %.3g on 200 estimates; 95%% bootstrap interval covered "
                 "E[estimate] in %d/100 trials (needs >= 88)",
                 rep.p_value, hits);
  return o;
}

// --- 8. Byte-identical reruns of seeded commands ---------------------------

Outcome determinism() {
  // weights: pure solver, no data.
  const std::string wcmd = "weights --dx 4 --l-min 1.2 --l-max 3 --L-count 40 --N 2000";
  const cli::RunResult w1 = cli::run(wcmd);
  const cli::RunResult w2 = cli::run(wcmd);
  if (w1.exit_code != 0 || w1.out != w2.out || w1.out.empty())
    return {false, "weights rerun differs"};

  // estimate with a seeded bootstrap interval.
  miest::Rng rng(99);
  Dataset d;
  RowMatrixXd x(60, 1);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    x(i, 0) = rng.uniform();
    y[i] = i % 2;
  }
  d.x_cont = x;
  d.y_disc = y;
  const std::string csv = cli::scratch_path("accept_est.csv");
  cli::spit(csv, miest::dataset_to_csv(d));
  const std::string ecmd =
      "estimate " + csv + " --plugin --functional renyi --alpha 0.5 "
      "--ci 0.95 --ci-reps 80 --seed 7";
  const cli::RunResult e1 = cli::run(ecmd);
  const cli::RunResult e2 = cli::run(ecmd);
  if (e1.exit_code != 0 || e1.out != e2.out || e1.out.empty())
    return {false, "estimate rerun differs"};

  // seeded Monte-Carlo oracle.
  const std::string ocmd =
      "oracle --case 1 --d 3 --method mc --mc-samples 1000000 --seed 9";
  const cli::RunResult o1 = cli::run(ocmd);
  const cli::RunResult o2 = cli::run(ocmd);
  if (o1.exit_code != 0 || o1.out != o2.out || o1.out.empty())
    return {false, "oracle rerun differs"};

  // benchmark grid, every output format.
  nlohmann::json plan;
  plan["seed"] = 3;
  plan["trials"] = 2;
  plan["sample_sizes"] = {32, 64};
  plan["functional"] = {{"kind", "renyi"}, {"alpha", 0.5}};
  plan["mixture"] = miest::mixture_spec_to_json(miest::case1_spec(1));
  plan["oracle"] = {{"method", "fixed"}, {"value", 1.05}, {"std_error", 0.0}};
  plan["estimators"] = {
      {{"name", "plugin"}, {"kind", "plugin"}, {"l", 2.1}},
      {{"name", "weighted"},
       {"kind", "ensemble-odin1"},
       {"l_count", 4},
       {"l_min", 1.2},
       {"l_max", 3.0}}};
  const std::string plan_path = cli::scratch_path("accept_plan.json");
  cli::spit(plan_path, plan.dump(2));
  const std::string sa = cli::scratch_path("accept_bench_a");
  const std::string sb = cli::scratch_path("accept_bench_b");
  const cli::RunResult b1 =
      cli::run("bench " + plan_path + " --out " + sa + " --format csv,json,svg");
  const cli::RunResult b2 =
      cli::run("bench " + plan_path + " --out " + sb + " --format csv,json,svg");
  if (b1.exit_code != 0 || b2.exit_code != 0)
    return {false, "bench run failed"};
  for (const char* ext : {".csv", ".json", ".svg"}) {
    const std::string fa = cli::slurp(sa + ext);
    if (fa.empty() || fa != cli::slurp(sb + ext))
      return {false, fmt("bench rerun differs in %s", ext)};
  }
  return {true, "weights, estimate+ci, mc oracle, and bench (csv/json/svg) "
                "reruns are byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "ensemble beats plug-in (4-D, three components)", fig1_desk_scale},
      {2, "near-parametric MSE decay (1-D, two components)", rate_surrogate},
      {3, "weight programs match offline solutions", weight_solver_equivalence},
      {4, "KDE fast paths match the naive double loop", kde_brute_force},
      {5, "fixed points and independence", invariants},
      {6, "plug-in variance decays like 1/N", variance_rate},
      {7, "normality and interval coverage", normality_and_coverage},
      {8, "seeded commands rerun byte-identically", determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s  %d. %s — %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id,
                c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n",
              criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures == 0 ? 0 : 1;
}
