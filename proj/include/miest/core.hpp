#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miest/errors.hpp"

namespace miest {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ===========================================================================
// Samples
// ===========================================================================

// Which estimator family applies to a dataset.
enum class EstimationCase { ContCont, ContDisc, MixedGeneral };

// Sample container shared by every estimation case. Continuous blocks are
// row-per-sample matrices; discrete parts are integer labels. Which optional
// parts are present decides the case:
//   x_cont + y_cont                  -> ContCont
//   x_cont + y_disc                  -> ContDisc (categorical Y)
//   x_disc present, or y_cont+y_disc -> MixedGeneral
struct Dataset {
  std::optional<RowMatrixXd> x_cont;
  std::optional<RowMatrixXd> y_cont;
  std::optional<std::vector<int>> x_disc;
  std::optional<std::vector<int>> y_disc;

  Eigen::Index n() const {
    if (x_cont) return x_cont->rows();
    if (y_cont) return y_cont->rows();
    if (x_disc) return static_cast<Eigen::Index>(x_disc->size());
    if (y_disc) return static_cast<Eigen::Index>(y_disc->size());
    return 0;
  }
  Eigen::Index dx() const { return x_cont ? x_cont->cols() : 0; }
  Eigen::Index dy() const { return y_cont ? y_cont->cols() : 0; }
};

// Throws if part sizes disagree, N < 2, a present continuous block is empty,
// or no Y part exists at all.
inline void validate(const Dataset& d) {
  const Eigen::Index n = d.n();
  if (n < 2) throw DegenerateDataset("dataset needs at least 2 samples");
  auto check_n = [&](Eigen::Index m, const char* part) {
    if (m != n)
      throw DegenerateDataset(std::string("part '") + part +
                              "' size disagrees with the rest of the dataset");
  };
  if (d.x_cont) {
    check_n(d.x_cont->rows(), "x_cont");
    if (d.x_cont->cols() < 1)
      throw DegenerateDataset("x_cont present but has zero columns");
  }
  if (d.y_cont) {
    check_n(d.y_cont->rows(), "y_cont");
    if (d.y_cont->cols() < 1)
      throw DegenerateDataset("y_cont present but has zero columns");
  }
  if (d.x_disc) check_n(static_cast<Eigen::Index>(d.x_disc->size()), "x_disc");
  if (d.y_disc) check_n(static_cast<Eigen::Index>(d.y_disc->size()), "y_disc");
  if (!d.y_cont && !d.y_disc)
    throw DegenerateDataset("dataset has no Y part (need y_cont and/or y_disc)");
}

inline EstimationCase infer_case(const Dataset& d) {
  if (d.x_disc || (d.y_cont && d.y_disc)) return EstimationCase::MixedGeneral;
  if (d.y_disc) return EstimationCase::ContDisc;
  return EstimationCase::ContCont;
}

inline const char* case_name(EstimationCase c) {
  switch (c) {
    case EstimationCase::ContCont: return "cont-cont";
    case EstimationCase::ContDisc: return "cont-disc";
    case EstimationCase::MixedGeneral: return "mixed-general";
  }
  return "?";
}

// ===========================================================================
// Kernels
// ===========================================================================

enum class KernelProfile { Uniform, Epanechnikov, Triangular, Gaussian };

inline double natural_radius(KernelProfile p) {
  switch (p) {
    case KernelProfile::Uniform: return 1.0;
    case KernelProfile::Epanechnikov: return 1.0;
    case KernelProfile::Triangular: return 1.0;
    case KernelProfile::Gaussian:
      return std::numeric_limits<double>::infinity();
  }
  return 1.0;
}

// Product kernel built from a 1-D profile. Every profile integrates to one
// per axis and uses the textbook support [-1, 1] at its natural radius, so a
// bandwidth h admits neighbors within h per axis. Bounded supports are the
// supported theory path; the Gaussian profile exists for comparison runs, and
// data-driven parameter selection refuses it (no finite support to size the
// range against).
struct KernelSpec {
  KernelProfile profile = KernelProfile::Uniform;
  // Half-width of the support in normalized units (ignored for Gaussian).
  double support_radius = 1.0;

  static KernelSpec uniform() { return {KernelProfile::Uniform, 1.0}; }
  static KernelSpec epanechnikov() { return {KernelProfile::Epanechnikov, 1.0}; }
  static KernelSpec triangular() { return {KernelProfile::Triangular, 1.0}; }
  static KernelSpec gaussian() {
    return {KernelProfile::Gaussian, std::numeric_limits<double>::infinity()};
  }
  bool bounded() const { return profile != KernelProfile::Gaussian; }
};

namespace detail {
// Profile shape at its natural radius (unit integral).
inline double kernel_profile_1d(KernelProfile p, double u) {
  switch (p) {
    case KernelProfile::Uniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelProfile::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelProfile::Triangular:
      return std::abs(u) <= 1.0 ? 1.0 - std::abs(u) : 0.0;
    case KernelProfile::Gaussian:
      return 0.3989422804014327 * std::exp(-0.5 * u * u);
  }
  return 0.0;
}
}  // namespace detail

// Single-axis kernel value; rescaling a bounded profile to a nonstandard
// support radius keeps the unit integral.
inline double kernel_axis(const KernelSpec& ks, double u) {
  if (ks.profile == KernelProfile::Gaussian)
    return detail::kernel_profile_1d(ks.profile, u);
  if (!(ks.support_radius > 0.0))
    throw std::invalid_argument("kernel support_radius must be positive");
  const double r0 = natural_radius(ks.profile);
  if (ks.support_radius == r0) return detail::kernel_profile_1d(ks.profile, u);
  const double s = r0 / ks.support_radius;
  return s * detail::kernel_profile_1d(ks.profile, u * s);
}

// Product kernel over a normalized offset vector u.
template <class Vec>
double kernel_eval(const KernelSpec& ks, const Vec& u) {
  double v = 1.0;
  const auto d = static_cast<Eigen::Index>(u.size());
  for (Eigen::Index a = 0; a < d; ++a) {
    const double ka = kernel_axis(ks, u[a]);
    if (ka == 0.0) return 0.0;
    v *= ka;
  }
  return v;
}

inline double kernel_eval(const KernelSpec& ks,
                          std::initializer_list<double> u) {
  return kernel_eval(ks, std::vector<double>(u));
}

// ===========================================================================
// Functionals
// ===========================================================================

enum class FunctionalKind { Shannon, RenyiIntegral, Custom };

// g applied to the density ratio t1/t2: log for Shannon, the alpha-power
// integrand for the Renyi integral (identically 1 under independence; the
// log-form index is left to callers). Custom g must be Lipschitz away from 0,
// which is declared, not verified.
struct Functional {
  FunctionalKind kind = FunctionalKind::Shannon;
  double alpha = 0.5;              // Renyi order, required in (0,1)
  double lipschitz_floor = 1e-12;  // both ratio arguments clamp here by default
  bool strict = false;             // raise instead of clamping
  std::function<double(double)> custom;

  static Functional shannon() { return {}; }
  static Functional renyi(double a) {
    Functional f;
    f.kind = FunctionalKind::RenyiIntegral;
    f.alpha = a;
    return f;
  }
  static Functional custom_g(std::function<double(double)> g) {
    Functional f;
    f.kind = FunctionalKind::Custom;
    f.custom = std::move(g);
    return f;
  }
};

// Running counters surfaced in estimate reports.
struct EvalCounters {
  std::int64_t clamped = 0;  // how many ratio arguments hit the floor
};

// Evaluates g(t1/t2) under the configured floor policy. In the default mode
// each argument is clamped up to lipschitz_floor (events counted); in strict
// mode a nonpositive argument raises NonPositiveArgument.
inline double functional_eval(const Functional& f, double t1, double t2,
                              EvalCounters* counters = nullptr) {
  if (f.kind == FunctionalKind::RenyiIntegral &&
      !(f.alpha > 0.0 && f.alpha < 1.0))
    throw std::invalid_argument("Renyi alpha must lie in (0,1)");
  if (f.kind == FunctionalKind::Custom && !f.custom)
    throw std::invalid_argument("custom functional has no g callable");
  if (f.strict) {
    if (!(t1 > 0.0) || !(t2 > 0.0))
      throw NonPositiveArgument("density ratio argument <= 0 in strict mode");
  } else {
    if (!(f.lipschitz_floor > 0.0))
      throw std::invalid_argument("lipschitz_floor must be positive");
    if (!(t1 >= f.lipschitz_floor)) {
      t1 = f.lipschitz_floor;
      if (counters) ++counters->clamped;
    }
    if (!(t2 >= f.lipschitz_floor)) {
      t2 = f.lipschitz_floor;
      if (counters) ++counters->clamped;
    }
  }
  const double ratio = t1 / t2;
  switch (f.kind) {
    case FunctionalKind::Shannon: return std::log(ratio);
    case FunctionalKind::RenyiIntegral: return std::pow(ratio, f.alpha);
    case FunctionalKind::Custom: return f.custom(ratio);
  }
  return 0.0;
}

// ===========================================================================
// Bandwidths, weights, reports
// ===========================================================================

// Ascending positive bandwidth multipliers ("l" values); the N-dependent
// scale is applied by the schedule, not stored here.
struct BandwidthSet {
  std::vector<double> values;

  void check() const {
    if (values.empty()) throw std::invalid_argument("empty bandwidth set");
    double prev = 0.0;
    for (double v : values) {
      if (!(v > 0.0)) throw std::invalid_argument("bandwidth multipliers must be positive");
      if (!(v > prev))
        throw std::invalid_argument("bandwidth multipliers must be strictly ascending");
      prev = v;
    }
  }
};

inline BandwidthSet linspace_bandwidths(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("bad bandwidth range");
  BandwidthSet out;
  out.values.resize(count);
  if (count == 1) {
    out.values[0] = lo;
    return out;
  }
  for (int i = 0; i < count; ++i)
    out.values[i] = lo + (hi - lo) * (static_cast<double>(i) / (count - 1));
  return out;
}

enum class SolverStatus { Optimal, Infeasible, ToleranceNotMet };

inline const char* status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::ToleranceNotMet: return "tolerance_not_met";
  }
  return "?";
}

// Result of a weight program. Members are the l values (mixed case) or the
// row-major (l_X, l_Y) grid cells (continuous case); `w` is aligned with
// them. Serializable (see ensemble.hpp) so offline solves can be cached.
struct WeightSolution {
  std::vector<double> member_lx;  // l (mixed) or l_X (cont)
  std::vector<double> member_ly;  // empty in the mixed case
  std::vector<double> w;
  double epsilon = 0.0;  // achieved max scaled residual
  double eta = 0.0;      // norm cap in force (achieved norm^2 for exact)
  double norm2 = 0.0;    // ||w||_2
  std::map<std::string, double> residuals;  // basis-term label -> scaled residual
  SolverStatus status = SolverStatus::Optimal;

  double sum() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
};

enum class SingletonPolicy { SkipClassWithWarning, Error };

// What an estimator returns: the value plus enough context to audit it.
struct EstimateReport {
  double value = 0.0;
  EstimationCase case_kind = EstimationCase::ContDisc;
  std::int64_t n_samples = 0;
  std::optional<WeightSolution> weights_used;
  // Conditional estimates by class label (mixed cases).
  std::map<int, double> per_class_values;
  // Ensemble diagnostics: per-member plug-in estimates, aligned with
  // weights_used->w. Mixed case keys the inner map by class label; the
  // continuous case uses the single key -1.
  std::vector<std::map<int, double>> per_member_values;
  std::vector<int> skipped_classes;
  std::int64_t clamped = 0;
};

}  // namespace miest
