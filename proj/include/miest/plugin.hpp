#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "miest/core.hpp"
#include "miest/kde.hpp"

namespace miest {

struct PluginConfig {
  KernelSpec kernel_x = KernelSpec::uniform();
  KernelSpec kernel_y = KernelSpec::uniform();
  Functional functional = Functional::shannon();
  double h_x = 0.0;
  double h_y = 0.0;
  std::map<int, double> h_x_given_y;  // class label -> conditional bandwidth
  SingletonPolicy singleton_policy = SingletonPolicy::SkipClassWithWarning;
  int threads = 0;
};

namespace detail {

// Classes a mixed estimator keeps (>= 2 members) and the ones it drops.
// With SingletonPolicy::Error a singleton class throws instead.
struct ClassSplit {
  std::vector<std::pair<int, std::int64_t>> retained;  // ascending by label
  std::vector<int> skipped;
  std::int64_t n_retained = 0;
};

inline ClassSplit split_classes(const std::map<int, std::int64_t>& counts,
                                SingletonPolicy policy) {
  ClassSplit s;
  for (const auto& [label, m] : counts) {
    if (m < 2) {
      if (policy == SingletonPolicy::Error)
        throw SingletonClass("class " + std::to_string(label) +
                             " has a single sample");
      s.skipped.push_back(label);
    } else {
      s.retained.emplace_back(label, m);
      s.n_retained += m;
    }
  }
  if (s.retained.empty())
    throw SingletonClass("every class has a single sample");
  return s;
}

inline std::vector<Eigen::Index> members_of(const std::vector<int>& labels,
                                            int label) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) idx.push_back(static_cast<Eigen::Index>(i));
  return idx;
}

}  // namespace detail

// Both blocks continuous: (1/N) sum_j g(f~_X(X_j) f~_Y(Y_j), f~_XY(Z_j)).
inline EstimateReport plugin_mi_cont(const Dataset& data,
                                     const PluginConfig& cfg) {
  validate(data);
  if (!data.x_cont) throw MissingParts("estimator needs a continuous X block");
  if (!data.y_cont)
    throw MissingContinuousY("estimator needs a continuous Y block");
  if (!(cfg.h_x > 0.0) || !(cfg.h_y > 0.0))
    throw std::invalid_argument("h_x and h_y must be positive");

  const RowMatrixXd& X = *data.x_cont;
  const RowMatrixXd& Y = *data.y_cont;
  const Eigen::Index n = data.n();
  const Eigen::Index dx = X.cols(), dy = Y.cols();
  const std::vector<Eigen::Index> idx = detail::all_indices(n);
  const std::vector<double> hx{cfg.h_x}, hy{cfg.h_y};

  std::vector<double> sx(n), sy(n), sz(n);
  detail::loo_kernel_sums(X, cfg.kernel_x, hx, idx, idx, sx.data(),
                          cfg.threads);
  detail::loo_kernel_sums(Y, cfg.kernel_y, hy, idx, idx, sy.data(),
                          cfg.threads);
  detail::loo_kernel_sums_grid(X, cfg.kernel_x, hx, Y, cfg.kernel_y, hy, idx,
                               idx, sz.data(), cfg.threads);

  const double nmx =
      static_cast<double>(n - 1) * detail::pow_dim(cfg.h_x, dx);
  const double nmy =
      static_cast<double>(n - 1) * detail::pow_dim(cfg.h_y, dy);
  const double nmz = static_cast<double>(n - 1) *
                     (detail::pow_dim(cfg.h_x, dx) *
                      detail::pow_dim(cfg.h_y, dy));

  EvalCounters counters;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double fx = sx[j] / nmx;
    const double fy = sy[j] / nmy;
    const double fz = sz[j] / nmz;
    acc += functional_eval(cfg.functional, fx * fy, fz, &counters);
  }

  EstimateReport rep;
  rep.value = acc / static_cast<double>(n);
  rep.case_kind = EstimationCase::ContCont;
  rep.n_samples = n;
  rep.clamped = counters.clamped;
  return rep;
}

// Continuous X with categorical Y:
// sum_y (N_y / N_ret) (1/N_y) sum_{j in y} g(f~_X(X_j), f~_{X|y}(X_j)).
inline EstimateReport plugin_mi_mixed(const Dataset& data,
                                      const PluginConfig& cfg) {
  validate(data);
  if (!data.x_cont) throw MissingParts("estimator needs a continuous X block");
  if (!data.y_disc) throw MissingParts("estimator needs categorical Y labels");
  if (!(cfg.h_x > 0.0)) throw std::invalid_argument("h_x must be positive");

  const RowMatrixXd& X = *data.x_cont;
  const Eigen::Index n = data.n();
  const Eigen::Index dx = X.cols();
  const auto counts = class_counts(data);
  const detail::ClassSplit split =
      detail::split_classes(counts, cfg.singleton_policy);

  const std::vector<Eigen::Index> idx = detail::all_indices(n);
  const std::vector<double> hx{cfg.h_x};
  std::vector<double> sx(n);
  detail::loo_kernel_sums(X, cfg.kernel_x, hx, idx, idx, sx.data(),
                          cfg.threads);
  const double nmx =
      static_cast<double>(n - 1) * detail::pow_dim(cfg.h_x, dx);

  EstimateReport rep;
  rep.case_kind = EstimationCase::ContDisc;
  rep.n_samples = n;
  rep.skipped_classes = split.skipped;

  EvalCounters counters;
  double value = 0.0;
  for (const auto& [label, m] : split.retained) {
    const auto it = cfg.h_x_given_y.find(label);
    if (it == cfg.h_x_given_y.end() || !(it->second > 0.0))
      throw std::invalid_argument("missing conditional bandwidth for class " +
                                  std::to_string(label));
    const double hc = it->second;
    const std::vector<Eigen::Index> mem =
        detail::members_of(*data.y_disc, label);
    std::vector<double> sc(mem.size());
    const std::vector<double> hcv{hc};
    detail::loo_kernel_sums(X, cfg.kernel_x, hcv, mem, mem, sc.data(),
                            cfg.threads);
    const double nmc = static_cast<double>(m - 1) * detail::pow_dim(hc, dx);

    double acc = 0.0;
    for (std::size_t p = 0; p < mem.size(); ++p) {
      const double fx = sx[mem[p]] / nmx;
      const double fc = sc[p] / nmc;
      acc += functional_eval(cfg.functional, fx, fc, &counters);
    }
    const double gy = acc / static_cast<double>(m);
    rep.per_class_values[label] = gy;
    value += (static_cast<double>(m) / static_cast<double>(split.n_retained)) *
             gy;
  }

  rep.value = value;
  rep.clamped = counters.clamped;
  return rep;
}

namespace detail {

// Joint discrete cell key; absent parts use a sentinel outside the label
// range so the map ordering matches iterating the present part alone.
constexpr int kNoLabel = std::numeric_limits<int>::min();

struct CellStat {
  std::vector<Eigen::Index> members;
};

}  // namespace detail

// General mixed form: any combination of {continuous, categorical} on each
// side, with at least one categorical part and at least one continuous part.
// Absent parts contribute exact 1.0 factors, so a dataset with only (X cont,
// Y cat) reproduces plugin_mi_mixed bit for bit.
inline EstimateReport plugin_mi_mixed_general(const Dataset& data,
                                              const PluginConfig& cfg) {
  validate(data);
  const bool has_xc = data.x_cont.has_value();
  const bool has_yc = data.y_cont.has_value();
  const bool has_xd = data.x_disc.has_value();
  const bool has_yd = data.y_disc.has_value();
  if (!has_xd && !has_yd)
    throw MissingParts("estimator needs a categorical part");
  if (!has_xc && !has_yc)
    throw MissingParts("estimator needs a continuous part");
  if (has_xc && !(cfg.h_x > 0.0))
    throw std::invalid_argument("h_x must be positive");
  if (has_yc && !(cfg.h_y > 0.0))
    throw std::invalid_argument("h_y must be positive");

  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);

  // Discrete cells and the marginal label counts.
  std::map<std::pair<int, int>, detail::CellStat> cells;
  std::map<int, std::int64_t> nx1, ny1;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int lx = has_xd ? (*data.x_disc)[static_cast<std::size_t>(j)]
                          : detail::kNoLabel;
    const int ly = has_yd ? (*data.y_disc)[static_cast<std::size_t>(j)]
                          : detail::kNoLabel;
    cells[{lx, ly}].members.push_back(j);
    ++nx1[lx];
    ++ny1[ly];
  }

  // Retained cells need >= 2 members (leave-one-out inside the cell).
  std::vector<std::pair<std::pair<int, int>, std::int64_t>> retained;
  std::vector<int> skipped;
  std::int64_t n_retained = 0;
  for (const auto& [key, st] : cells) {
    const auto m = static_cast<std::int64_t>(st.members.size());
    if (m < 2) {
      if (cfg.singleton_policy == SingletonPolicy::Error)
        throw SingletonClass("joint discrete cell has a single sample");
      skipped.push_back(has_yd ? key.second : key.first);
    } else {
      retained.emplace_back(key, m);
      n_retained += m;
    }
  }
  if (retained.empty())
    throw SingletonClass("every joint discrete cell has a single sample");

  // Conditional marginal KDEs, one sweep per discrete-conditioning group:
  // f~_{X2 | x1} over all samples sharing the X label, f~_{Y2 | y1} likewise.
  // Values are stored per sample for lookup from the cell loop.
  std::vector<double> fx_cond(has_xc ? n : 0), fy_cond(has_yc ? n : 0);
  const Eigen::Index dx = has_xc ? data.x_cont->cols() : 0;
  const Eigen::Index dy = has_yc ? data.y_cont->cols() : 0;
  if (has_xc) {
    const std::vector<double> hv{cfg.h_x};
    for (const auto& [label, m] : nx1) {
      std::vector<Eigen::Index> mem;
      if (has_xd)
        mem = detail::members_of(*data.x_disc, label);
      else
        mem = detail::all_indices(n);
      if (mem.size() < 2) continue;  // cell loop only touches retained cells
      std::vector<double> s(mem.size());
      detail::loo_kernel_sums(*data.x_cont, cfg.kernel_x, hv, mem, mem,
                              s.data(), cfg.threads);
      const double nm = static_cast<double>(mem.size() - 1) *
                        detail::pow_dim(cfg.h_x, dx);
      for (std::size_t p = 0; p < mem.size(); ++p) fx_cond[mem[p]] = s[p] / nm;
    }
  }
  if (has_yc) {
    const std::vector<double> hv{cfg.h_y};
    for (const auto& [label, m] : ny1) {
      std::vector<Eigen::Index> mem;
      if (has_yd)
        mem = detail::members_of(*data.y_disc, label);
      else
        mem = detail::all_indices(n);
      if (mem.size() < 2) continue;
      std::vector<double> s(mem.size());
      detail::loo_kernel_sums(*data.y_cont, cfg.kernel_y, hv, mem, mem,
                              s.data(), cfg.threads);
      const double nm = static_cast<double>(mem.size() - 1) *
                        detail::pow_dim(cfg.h_y, dy);
      for (std::size_t p = 0; p < mem.size(); ++p) fy_cond[mem[p]] = s[p] / nm;
    }
  }

  EstimateReport rep;
  rep.case_kind = infer_case(data);
  rep.n_samples = n;
  rep.skipped_classes = std::move(skipped);

  EvalCounters counters;
  double value = 0.0;
  for (const auto& [key, m] : retained) {
    const auto& mem = cells.at(key).members;

    // Joint conditional KDE within the cell. The x-part bandwidth follows
    // the per-class table when Y is categorical, otherwise h_x.
    double hjx = cfg.h_x;
    if (has_xc && has_yd) {
      const auto it = cfg.h_x_given_y.find(key.second);
      if (it == cfg.h_x_given_y.end() || !(it->second > 0.0))
        throw std::invalid_argument(
            "missing conditional bandwidth for class " +
            std::to_string(key.second));
      hjx = it->second;
    }

    std::vector<double> sj(mem.size());
    double nmj = 0.0;
    if (has_xc && has_yc) {
      detail::loo_kernel_sums_grid(*data.x_cont, cfg.kernel_x, {hjx},
                                   *data.y_cont, cfg.kernel_y, {cfg.h_y}, mem,
                                   mem, sj.data(), cfg.threads);
      nmj = static_cast<double>(m - 1) *
            (detail::pow_dim(hjx, dx) * detail::pow_dim(cfg.h_y, dy));
    } else if (has_xc) {
      detail::loo_kernel_sums(*data.x_cont, cfg.kernel_x, {hjx}, mem, mem,
                              sj.data(), cfg.threads);
      nmj = static_cast<double>(m - 1) * detail::pow_dim(hjx, dx);
    } else {
      detail::loo_kernel_sums(*data.y_cont, cfg.kernel_y, {cfg.h_y}, mem, mem,
                              sj.data(), cfg.threads);
      nmj = static_cast<double>(m - 1) * detail::pow_dim(cfg.h_y, dy);
    }

    // Empirical pmf ratio P(x1)P(y1)/P(z1). With one categorical part the
    // cell count equals the label count and the ratio is exactly 1.
    double pm = 1.0;
    if (has_xd && has_yd) {
      pm = (static_cast<double>(nx1.at(key.first)) *
            static_cast<double>(ny1.at(key.second))) /
           (dn * static_cast<double>(m));
    }

    double acc = 0.0;
    for (std::size_t p = 0; p < mem.size(); ++p) {
      double t1 = pm;
      if (has_xc) t1 *= fx_cond[mem[p]];
      if (has_yc) t1 *= fy_cond[mem[p]];
      const double t2 = sj[p] / nmj;
      acc += functional_eval(cfg.functional, t1, t2, &counters);
    }
    const double gcell = acc / static_cast<double>(m);
    if (!(has_xd && has_yd))  // unambiguous label only with one discrete part
      rep.per_class_values[has_yd ? key.second : key.first] = gcell;
    value +=
        (static_cast<double>(m) / static_cast<double>(n_retained)) * gcell;
  }

  rep.value = value;
  rep.clamped = counters.clamped;
  return rep;
}

// Dispatch on the dataset shape.
inline EstimateReport plugin_mi(const Dataset& data, const PluginConfig& cfg) {
  switch (infer_case(data)) {
    case EstimationCase::ContCont:
      return plugin_mi_cont(data, cfg);
    case EstimationCase::ContDisc:
      return plugin_mi_mixed(data, cfg);
    default:
      return plugin_mi_mixed_general(data, cfg);
  }
}

}  // namespace miest
