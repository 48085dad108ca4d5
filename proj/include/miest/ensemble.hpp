#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "miest/core.hpp"
#include "miest/kde.hpp"
#include "miest/plugin.hpp"

namespace miest {

// Bandwidth schedules h(l) = l * N^{-e}. Mixed schedules key off the
// continuous X dimension (conditional members substitute the class size for
// N); joint schedules key off both continuous dimensions. The Odin2 variants
// shift the exponent by a smoothness margin delta.
enum class ScheduleKind { MixedOdin1, MixedOdin2, ContOdin1, ContOdin2 };

inline const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::MixedOdin1:
      return "mixed-odin1";
    case ScheduleKind::MixedOdin2:
      return "mixed-odin2";
    case ScheduleKind::ContOdin1:
      return "cont-odin1";
    default:
      return "cont-odin2";
  }
}

inline ScheduleKind schedule_from_name(const std::string& s) {
  if (s == "mixed-odin1") return ScheduleKind::MixedOdin1;
  if (s == "mixed-odin2") return ScheduleKind::MixedOdin2;
  if (s == "cont-odin1") return ScheduleKind::ContOdin1;
  if (s == "cont-odin2") return ScheduleKind::ContOdin2;
  throw std::invalid_argument("unknown schedule: " + s);
}

inline bool schedule_is_mixed(ScheduleKind k) {
  return k == ScheduleKind::MixedOdin1 || k == ScheduleKind::MixedOdin2;
}

inline double schedule_exponent(ScheduleKind kind, int d_x, int d_y,
                                double delta) {
  if (d_x < 1) throw std::invalid_argument("d_x must be >= 1");
  switch (kind) {
    case ScheduleKind::MixedOdin1:
      return 1.0 / (2.0 * d_x);
    case ScheduleKind::MixedOdin2:
      if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
      return 1.0 / (d_x + delta);
    case ScheduleKind::ContOdin1:
      if (d_y < 1) throw std::invalid_argument("d_y must be >= 1");
      return 1.0 / (2.0 * (d_x + d_y));
    default:
      if (d_y < 1) throw std::invalid_argument("d_y must be >= 1");
      if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
      return 1.0 / (d_x + d_y + delta);
  }
}

inline double bandwidth_schedule(ScheduleKind kind, double l,
                                 std::int64_t n_effective, int d_x,
                                 int d_y = 0, double delta = 1.0) {
  if (!(l > 0.0)) throw std::invalid_argument("parameter l must be positive");
  if (n_effective < 2)
    throw std::invalid_argument("schedule needs at least 2 samples");
  const double e = schedule_exponent(kind, d_x, d_y, delta);
  return l * std::pow(static_cast<double>(n_effective), -e);
}

// One bias-direction constraint: psi(l) = l_x^px * l_y^py (py unused for
// mixed schedules) with decay rate phi(N) = N^{-phi_exp}.
struct BasisTerm {
  double px = 0.0;
  double py = 0.0;
  double phi_exp = 0.0;
  std::string label;
};

struct BasisFamily {
  ScheduleKind kind = ScheduleKind::MixedOdin1;
  int d_x = 1;
  int d_y = 0;
  double delta = 1.0;
  std::vector<BasisTerm> terms;  // the index set J

  static BasisFamily mixed_odin1(int d_x);
  static BasisFamily mixed_odin2(int d_x, double delta);
  static BasisFamily cont_odin1(int d_x, int d_y);
  static BasisFamily cont_odin2(int d_x, int d_y, double delta);

  static BasisFamily for_schedule(ScheduleKind kind, int d_x, int d_y,
                                  double delta) {
    switch (kind) {
      case ScheduleKind::MixedOdin1:
        return mixed_odin1(d_x);
      case ScheduleKind::MixedOdin2:
        return mixed_odin2(d_x, delta);
      case ScheduleKind::ContOdin1:
        return cont_odin1(d_x, d_y);
      default:
        return cont_odin2(d_x, d_y, delta);
    }
  }
};

namespace detail {

inline std::string term_label(const char* tag,
                              std::initializer_list<int> vals) {
  std::string s = tag;
  bool first = true;
  for (int v : vals) {
    s += first ? ":" : ",";
    s += std::to_string(v);
    first = false;
  }
  return s;
}

// Quantized key for deduplicating basis rows that coincide numerically.
inline std::string term_key(const BasisTerm& t) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.9f|%.9f|%.12f", t.px, t.py, t.phi_exp);
  return buf;
}

inline void push_unique(std::vector<BasisTerm>& out,
                        std::map<std::string, bool>& seen, BasisTerm t) {
  auto key = term_key(t);
  if (seen.emplace(std::move(key), true).second) out.push_back(std::move(t));
}

}  // namespace detail

inline BasisFamily BasisFamily::mixed_odin1(int d_x) {
  if (d_x < 1) throw std::invalid_argument("d_x must be >= 1");
  BasisFamily f;
  f.kind = ScheduleKind::MixedOdin1;
  f.d_x = d_x;
  for (int i = 1; i <= d_x; ++i) {
    BasisTerm t;
    t.px = static_cast<double>(i);
    t.phi_exp = static_cast<double>(i) / (2.0 * d_x);
    t.label = detail::term_label("i", {i});
    f.terms.push_back(std::move(t));
  }
  return f;
}

inline BasisFamily BasisFamily::mixed_odin2(int d_x, double delta) {
  if (d_x < 1) throw std::invalid_argument("d_x must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  BasisFamily f;
  f.kind = ScheduleKind::MixedOdin2;
  f.d_x = d_x;
  f.delta = delta;
  const double bound = 0.5 * (d_x + delta);
  std::map<std::string, bool> seen;
  const int mmax = static_cast<int>(std::floor(bound / delta)) + 1;
  const int imax = static_cast<int>(std::floor(bound)) + 1;
  for (int m = 0; m <= mmax; ++m) {
    for (int i = 0; i <= imax; ++i) {
      const double v = i + m * delta;
      if (!(v > 1e-12) || v > bound + 1e-12) continue;
      BasisTerm t;
      t.px = static_cast<double>(i) - static_cast<double>(m) * d_x;
      t.phi_exp = v / (d_x + delta);
      t.label = detail::term_label("i,m", {i, m});
      detail::push_unique(f.terms, seen, std::move(t));
    }
  }
  return f;
}

inline BasisFamily BasisFamily::cont_odin1(int d_x, int d_y) {
  if (d_x < 1 || d_y < 1)
    throw std::invalid_argument("block dimensions must be >= 1");
  BasisFamily f;
  f.kind = ScheduleKind::ContOdin1;
  f.d_x = d_x;
  f.d_y = d_y;
  const int D = d_x + d_y;
  for (int i = 0; i <= D; ++i) {
    for (int j = 0; j <= D; ++j) {
      const int v = i + j;
      if (v < 1 || v > D) continue;
      BasisTerm t;
      t.px = static_cast<double>(i);
      t.py = static_cast<double>(j);
      t.phi_exp = static_cast<double>(v) / (2.0 * D);
      t.label = detail::term_label("i,j", {i, j});
      f.terms.push_back(std::move(t));
    }
  }
  return f;
}

inline BasisFamily BasisFamily::cont_odin2(int d_x, int d_y, double delta) {
  if (d_x < 1 || d_y < 1)
    throw std::invalid_argument("block dimensions must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  BasisFamily f;
  f.kind = ScheduleKind::ContOdin2;
  f.d_x = d_x;
  f.d_y = d_y;
  f.delta = delta;
  const double denom = d_x + d_y + delta;
  const double bound = 0.5 * denom;
  std::map<std::string, bool> seen;
  const int imax = static_cast<int>(std::floor(bound)) + 1;
  // First family: independent inverse-bandwidth orders m (x) and n (y).
  const int mmax1 = static_cast<int>(std::floor(bound / (d_y + delta))) + 1;
  const int nmax1 = static_cast<int>(std::floor(bound / (d_x + delta))) + 1;
  for (int m = 0; m <= mmax1; ++m)
    for (int nn = 0; nn <= nmax1; ++nn)
      for (int i = 0; i <= imax; ++i)
        for (int j = 0; j <= imax; ++j) {
          const double v = i + j + m * (d_y + delta) + nn * (d_x + delta);
          if (!(v > 1e-12) || v > bound + 1e-12) continue;
          BasisTerm t;
          t.px = static_cast<double>(i) - static_cast<double>(m) * d_x;
          t.py = static_cast<double>(j) - static_cast<double>(nn) * d_y;
          t.phi_exp = v / denom;
          t.label = detail::term_label("i,j,m,n", {i, j, m, nn});
          detail::push_unique(f.terms, seen, std::move(t));
        }
  // Second family: matched inverse-bandwidth order m on both blocks.
  const int mmax2 = static_cast<int>(std::floor(bound / delta)) + 1;
  for (int m = 1; m <= mmax2; ++m)
    for (int i = 0; i <= imax; ++i)
      for (int j = 0; j <= imax; ++j) {
        const double v = i + j + m * delta;
        if (!(v > 1e-12) || v > bound + 1e-12) continue;
        BasisTerm t;
        t.px = static_cast<double>(i) - static_cast<double>(m) * d_x;
        t.py = static_cast<double>(j) - static_cast<double>(m) * d_y;
        t.phi_exp = v / denom;
        t.label = detail::term_label("i,j,m*", {i, j, m});
        detail::push_unique(f.terms, seen, std::move(t));
      }
  return f;
}

// Constraint rows over the ensemble members. Members are single parameters l
// for mixed schedules, and the row-major (l_x, l_y) grid for joint
// schedules. scale[t] = sqrt(N) * phi_t(N) = N^{1/2 - phi_exp}, so the
// slowest mixed-odin1 rate (phi_exp = 1/2) scales to exactly 1.
struct ConstraintSystem {
  Eigen::MatrixXd psi;            // |J| x C, unscaled psi_t(member_c)
  std::vector<double> scale;      // |J|
  std::vector<std::string> labels;
  std::vector<double> member_lx;  // C
  std::vector<double> member_ly;  // C (empty for mixed schedules)
};

inline ConstraintSystem build_constraint_matrix(const BasisFamily& family,
                                                const BandwidthSet& L,
                                                std::int64_t n_samples) {
  L.check();
  if (n_samples < 2)
    throw std::invalid_argument("constraint matrix needs N >= 2");
  ConstraintSystem sys;
  const bool mixed = schedule_is_mixed(family.kind);
  if (mixed) {
    sys.member_lx = L.values;
  } else {
    const std::size_t c = L.values.size();
    sys.member_lx.reserve(c * c);
    sys.member_ly.reserve(c * c);
    for (double lx : L.values)
      for (double ly : L.values) {
        sys.member_lx.push_back(lx);
        sys.member_ly.push_back(ly);
      }
  }
  const std::size_t C = sys.member_lx.size();
  const std::size_t T = family.terms.size();
  sys.psi.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(C));
  sys.scale.resize(T);
  sys.labels.resize(T);
  const double dN = static_cast<double>(n_samples);
  for (std::size_t t = 0; t < T; ++t) {
    const BasisTerm& bt = family.terms[t];
    sys.labels[t] = bt.label;
    sys.scale[t] = std::pow(dN, 0.5 - bt.phi_exp);
    for (std::size_t c = 0; c < C; ++c) {
      double v = std::pow(sys.member_lx[c], bt.px);
      if (!mixed) v *= std::pow(sys.member_ly[c], bt.py);
      sys.psi(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return sys;
}

enum class WeightProgram { Exact, Relaxed };
enum class EtaPolicy { EqualEpsilon, Fixed };

struct EnsembleConfig {
  BandwidthSet L;                    // the parameter set
  std::optional<BasisFamily> basis;  // default: built from schedule and dims
  ScheduleKind schedule = ScheduleKind::MixedOdin1;
  double delta = 1.0;
  WeightProgram program = WeightProgram::Relaxed;
  EtaPolicy eta_policy = EtaPolicy::EqualEpsilon;
  double eta = 1.0;  // norm-cap value under EtaPolicy::Fixed
  double solver_tol = 1e-8;
  // Reuse a previously solved weight vector (must match the member layout);
  // the solve depends only on (N, L, basis), so it can be cached offline.
  std::optional<WeightSolution> precomputed_weights;
};

namespace detail {

// Unpivoted LDLT of the small Gram system G = A A^T, carried in extended
// precision. Natural elimination order keeps integer-representable systems
// exact in binary arithmetic, which a pivoted factorization does not
// guarantee; the 64-bit mantissa absorbs the squared conditioning that the
// normal equations inflict on ill-scaled instances. factor() returns false
// on a vanishing pivot (rank-deficient G); callers then fall back.
class GramLdlt {
 public:
  explicit GramLdlt(const Eigen::MatrixXd& A)
      : m_(A.rows()), L_(static_cast<std::size_t>(m_ * m_), 0.0L), D_(static_cast<std::size_t>(m_)) {
    const Eigen::Index n = A.cols();
    std::vector<long double> G(static_cast<std::size_t>(m_ * m_));
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        long double s = 0.0L;
        for (Eigen::Index k = 0; k < n; ++k)
          s += static_cast<long double>(A(i, k)) * A(j, k);
        G[at(i, j)] = s;
        G[at(j, i)] = s;
      }
    long double diag_max = 1.0L;
    for (Eigen::Index i = 0; i < m_; ++i)
      diag_max = std::max(diag_max, std::fabs(G[at(i, i)]));
    const long double tiny = 1e-17L * diag_max;
    ok_ = true;
    for (Eigen::Index i = 0; i < m_ && ok_; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        long double s = G[at(i, j)];
        for (Eigen::Index k = 0; k < j; ++k)
          s -= L_[at(i, k)] * L_[at(j, k)] * D_[static_cast<std::size_t>(k)];
        L_[at(i, j)] = s / D_[static_cast<std::size_t>(j)];
      }
      long double d = G[at(i, i)];
      for (Eigen::Index k = 0; k < i; ++k)
        d -= L_[at(i, k)] * L_[at(i, k)] * D_[static_cast<std::size_t>(k)];
      if (!(std::fabs(d) > tiny)) ok_ = false;
      D_[static_cast<std::size_t>(i)] = d;
    }
  }

  bool ok() const { return ok_; }

  void solve_in_place(std::vector<long double>& x) const {
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index k = 0; k < i; ++k)
        x[static_cast<std::size_t>(i)] -= L_[at(i, k)] * x[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < m_; ++i)
      x[static_cast<std::size_t>(i)] /= D_[static_cast<std::size_t>(i)];
    for (Eigen::Index i = m_; i-- > 0;)
      for (Eigen::Index k = i + 1; k < m_; ++k)
        x[static_cast<std::size_t>(i)] -= L_[at(k, i)] * x[static_cast<std::size_t>(k)];
  }

 private:
  std::size_t at(Eigen::Index i, Eigen::Index j) const {
    return static_cast<std::size_t>(i * m_ + j);
  }
  Eigen::Index m_;
  std::vector<long double> L_;
  std::vector<long double> D_;
  bool ok_ = false;
};

}  // namespace detail

// Exact program: minimize ||w||_2 subject to sum(w) = 1 and psi_t . w = 0
// for every row. The psi rows are equilibrated by exact powers of two (the
// constraint set is scale invariant, the Gram conditioning is not), then the
// stacked system A w = b, A = [1^T; Psi~], is solved through its normal
// equations by an unpivoted LDLT with iterative refinement and a full-pivot
// LU fallback; the minimum-norm solution is A^T lambda. Declared infeasible
// when the residual ||A w - b||_inf stays above tol.
inline WeightSolution solve_weights_exact(const ConstraintSystem& sys,
                                          double tol = 1e-8) {
  const auto C = static_cast<Eigen::Index>(sys.member_lx.size());
  const auto T = sys.psi.rows();
  Eigen::MatrixXd A(T + 1, C);
  A.row(0).setOnes();
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mx = sys.psi.row(t).cwiseAbs().maxCoeff();
    double mult = 1.0;
    if (mx > 0.0) {
      int expo = 0;
      std::frexp(mx, &expo);
      mult = std::ldexp(1.0, 1 - expo);  // max|entry| lands in [1, 2)
    }
    A.row(t + 1) = mult * sys.psi.row(t);
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(T + 1);
  b(0) = 1.0;

  const auto m = static_cast<std::size_t>(T + 1);
  // lambda -> weights, accumulated in extended precision (with large
  // multipliers the bare double product A^T lambda alone costs ~1e-10 on
  // sum(w), no matter how accurate lambda is).
  const auto weights_of = [&](const std::vector<long double>& lam) {
    std::vector<long double> wl(static_cast<std::size_t>(C));
    for (Eigen::Index k = 0; k < C; ++k) {
      long double s = 0.0L;
      for (Eigen::Index j = 0; j <= T; ++j)
        s += static_cast<long double>(A(j, k)) * lam[static_cast<std::size_t>(j)];
      wl[static_cast<std::size_t>(k)] = s;
    }
    return wl;
  };
  const auto residual_of = [&](const std::vector<long double>& wl) {
    std::vector<long double> r(m);
    for (Eigen::Index j = 0; j <= T; ++j) {
      long double s = static_cast<long double>(b(j));
      for (Eigen::Index k = 0; k < C; ++k)
        s -= static_cast<long double>(A(j, k)) * wl[static_cast<std::size_t>(k)];
      r[static_cast<std::size_t>(j)] = s;
    }
    return r;
  };
  const auto max_abs = [](const std::vector<long double>& v) {
    long double mx = 0.0L;
    for (long double x : v) mx = std::max(mx, std::fabs(x));
    return mx;
  };

  const detail::GramLdlt ldlt(A);
  Eigen::VectorXd w(C);
  double resid = std::numeric_limits<double>::infinity();
  if (ldlt.ok()) {
    std::vector<long double> lam(m, 0.0L);
    lam[0] = 1.0L;
    ldlt.solve_in_place(lam);
    std::vector<long double> wl = weights_of(lam);
    std::vector<long double> r = residual_of(wl);
    long double rmax = max_abs(r);
    // One round of refinement mops up the factorization error; skipped when
    // already exact so clean systems stay bit-for-bit.
    for (int step = 0; step < 3 && rmax > 1e-18L; ++step) {
      ldlt.solve_in_place(r);
      for (std::size_t j = 0; j < m; ++j) lam[j] += r[j];
      std::vector<long double> wl2 = weights_of(lam);
      r = residual_of(wl2);
      const long double r2 = max_abs(r);
      if (r2 >= rmax) break;
      wl = std::move(wl2);
      rmax = r2;
    }
    for (Eigen::Index k = 0; k < C; ++k)
      w(k) = static_cast<double>(wl[static_cast<std::size_t>(k)]);
    resid = (A * w - b).cwiseAbs().maxCoeff();
  }
  if (!(resid <= tol)) {
    const Eigen::MatrixXd G = A * A.transpose();
    const Eigen::VectorXd lam = Eigen::FullPivLU<Eigen::MatrixXd>(G).solve(b);
    const Eigen::VectorXd w2 = A.transpose() * lam;
    const double r2 = (A * w2 - b).cwiseAbs().maxCoeff();
    if (r2 < resid) {
      w = w2;
      resid = r2;
    }
  }

  WeightSolution sol;
  sol.member_lx = sys.member_lx;
  sol.member_ly = sys.member_ly;
  sol.w.assign(w.data(), w.data() + C);
  sol.norm2 = w.norm();
  sol.eta = sol.norm2 * sol.norm2;
  double eps = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double r =
        sys.scale[static_cast<std::size_t>(t)] * sys.psi.row(t).dot(w);
    sol.residuals[sys.labels[static_cast<std::size_t>(t)]] = r;
    eps = std::max(eps, std::abs(r));
  }
  sol.epsilon = eps;
  sol.status =
      (resid <= tol) ? SolverStatus::Optimal : SolverStatus::Infeasible;
  return sol;
}

namespace detail {

// Minimum-norm point of {sum(w) = 1} intersected with the slabs
// |c_t . w| <= eps_t. The KKT conditions say w = nu 1 - rows^T beta where
// beta_t vanishes off the active slabs and carries the boundary sign on them,
// so a primal-dual active-set iteration (semismooth Newton on the activity
// pattern) finishes in a handful of tiny linear solves, exactly. Near-parallel
// rows that stall first-order methods are harmless here. A coordinate-ascent
// pass over the Lagrangian dual
//   max_{nu, beta}  -0.5 ||nu 1 - rows^T beta||^2 + nu - sum_t eps_t |beta_t|
// backs it up if the activity pattern ever cycles. Both exits are certified
// by primal feasibility plus the duality gap; an empty intersection fails the
// certificate (reported !converged).
struct MinNormResult {
  Eigen::VectorXd w;
  bool converged = false;
  double violation = 0.0;
};

inline MinNormResult min_norm_point(const Eigen::MatrixXd& rows,
                                    const Eigen::VectorXd& eps_t,
                                    Eigen::Index C, double tol,
                                    Eigen::VectorXd* warm_beta = nullptr) {
  const Eigen::Index T = rows.rows();
  const double dC = static_cast<double>(C);
  Eigen::VectorXd beta = (warm_beta && warm_beta->size() == T)
                             ? *warm_beta
                             : Eigen::VectorXd::Zero(T);
  Eigen::VectorXd row_sq(T);
  for (Eigen::Index t = 0; t < T; ++t) row_sq(t) = rows.row(t).squaredNorm();

  MinNormResult res;
  double nu = 0.0;
  Eigen::VectorXd u;

  const auto certify = [&]() {
    double viol = std::abs(u.sum() - 1.0);
    double slab_sum = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (row_sq(t) <= 0.0) continue;
      viol = std::max(viol, std::abs(rows.row(t).dot(u)) - eps_t(t));
      slab_sum += eps_t(t) * std::abs(beta(t));
    }
    const double pobj = u.squaredNorm();
    const double gap = pobj - nu + slab_sum;  // 0.5||u||^2 - g(nu, beta), x2
    // The gap cancels terms of size |nu| + slab_sum, so the zero test has to
    // be scaled by what was cancelled, not just by the objective.
    const double gap_tol =
        1e-11 * std::max({1.0, pobj, std::abs(nu) + slab_sum});
    res.violation = std::max(viol, 0.0);
    return viol <= tol && gap <= gap_tol;
  };

  // --- Active-set Newton on the slab activity pattern -----------------------
  std::vector<int> sigma(static_cast<std::size_t>(T), 0);
  for (Eigen::Index t = 0; t < T; ++t)
    sigma[static_cast<std::size_t>(t)] =
        (beta(t) > 0.0) ? 1 : (beta(t) < 0.0 ? -1 : 0);
  bool stable = false;
  for (int iter = 0; iter < 100 && !stable; ++iter) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index t = 0; t < T; ++t)
      if (sigma[static_cast<std::size_t>(t)] != 0 && row_sq(t) > 0.0)
        act.push_back(t);
    const auto m = static_cast<Eigen::Index>(act.size());
    // Stationarity: sum(w) = 1 and c_a . w = sigma_a eps_a on the pattern.
    Eigen::MatrixXd M(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    M(0, 0) = dC;
    rhs(0) = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double g = rows.row(act[static_cast<std::size_t>(i)]).sum();
      M(0, i + 1) = -g;
      M(i + 1, 0) = g;
      rhs(i + 1) = sigma[static_cast<std::size_t>(act[static_cast<std::size_t>(i)])] *
                   eps_t(act[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < m; ++j)
        M(i + 1, j + 1) = -rows.row(act[static_cast<std::size_t>(i)])
                               .dot(rows.row(act[static_cast<std::size_t>(j)]));
    }
    const Eigen::VectorXd x = Eigen::FullPivLU<Eigen::MatrixXd>(M).solve(rhs);
    if (!x.allFinite() || (M * x - rhs).cwiseAbs().maxCoeff() >
                              1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
      break;  // degenerate pattern; leave it to the fallback
    nu = x(0);
    beta.setZero();
    for (Eigen::Index i = 0; i < m; ++i)
      beta(act[static_cast<std::size_t>(i)]) = x(i + 1);
    u.setConstant(C, nu);
    for (Eigen::Index i = 0; i < m; ++i)
      u -= beta(act[static_cast<std::size_t>(i)]) *
           rows.row(act[static_cast<std::size_t>(i)]).transpose();
    stable = true;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (row_sq(t) <= 0.0) continue;
      auto& st = sigma[static_cast<std::size_t>(t)];
      int next = st;
      if (st == 0) {
        const double v = rows.row(t).dot(u);
        next = (v > eps_t(t)) ? 1 : (v < -eps_t(t) ? -1 : 0);
      } else if (st * beta(t) < 0.0) {
        next = 0;  // multiplier crossed zero: the slab releases
      }
      if (next != st) {
        st = next;
        stable = false;
      }
    }
  }
  if (stable && certify()) {
    res.converged = true;
    res.w = std::move(u);
    if (warm_beta) *warm_beta = beta;
    return res;
  }

  // --- Dual coordinate-ascent fallback (globally convergent, slower tail) ---
  beta.setZero();
  nu = 0.0;
  u = Eigen::VectorXd::Zero(C);
  const int max_sweeps = 200000;
  const double blow_up = 1e100;
  bool certified = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double shift = (1.0 - u.sum()) / dC;
    nu += shift;
    u.array() += shift;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (row_sq(t) <= 0.0) continue;  // vanished row: trivially satisfied
      const double z = rows.row(t).dot(u) + beta(t) * row_sq(t);
      const double e = eps_t(t);
      const double bn =
          (std::abs(z) <= e) ? 0.0 : (z > 0.0 ? z - e : z + e) / row_sq(t);
      const double db = bn - beta(t);
      if (db != 0.0) {
        u -= db * rows.row(t).transpose();
        beta(t) = bn;
      }
    }
    if ((sweep & 15) != 15) continue;
    if (T > 0 && beta.cwiseAbs().maxCoeff() > blow_up) break;  // dual unbounded
    // Rebuild u from (nu, beta) to drop incremental rounding drift before
    // checking the certificate.
    u.setConstant(nu);
    for (Eigen::Index t = 0; t < T; ++t)
      if (beta(t) != 0.0) u -= beta(t) * rows.row(t).transpose();
    if (certify()) {
      certified = true;
      break;
    }
  }
  {
    const double shift = (1.0 - u.sum()) / dC;
    u.array() += shift;
  }
  double viol = 0.0;
  for (Eigen::Index t = 0; t < T; ++t)
    viol = std::max(viol, std::abs(rows.row(t).dot(u)) - eps_t(t));
  res.violation = std::max(viol, 0.0);
  res.converged = certified && res.violation <= tol;
  res.w = std::move(u);
  // A diverged dual would poison the next warm start; hand back zeros instead.
  if (warm_beta) *warm_beta = res.converged ? beta : Eigen::VectorXd::Zero(T);
  return res;
}

}  // namespace detail

// Relaxed program: minimize eps subject to sum(w) = 1,
// |scale_t * psi_t . w| <= eps for every row, and ||w||_2^2 <= eta.
// EqualEpsilon couples the cap to the objective (eta = eps); Fixed uses the
// given cap and is infeasible when eta < 1/C (the sum constraint alone
// already forces ||w||^2 >= 1/C). Solved by bisection on eps over the
// minimum-norm feasibility oracle m(eps) <= eta_eff(eps).
inline WeightSolution solve_weights_relaxed(
    const ConstraintSystem& sys, EtaPolicy policy = EtaPolicy::EqualEpsilon,
    double eta = 1.0, double tol = 1e-8) {
  const auto C = static_cast<Eigen::Index>(sys.member_lx.size());
  const auto T = sys.psi.rows();
  const double dC = static_cast<double>(C);

  WeightSolution sol;
  sol.member_lx = sys.member_lx;
  sol.member_ly = sys.member_ly;

  if (policy == EtaPolicy::Fixed && eta < 1.0 / dC - 1e-12) {
    sol.status = SolverStatus::Infeasible;
    sol.w.assign(static_cast<std::size_t>(C), 1.0 / dC);
    sol.epsilon = std::numeric_limits<double>::quiet_NaN();
    sol.eta = eta;
    sol.norm2 = 1.0 / std::sqrt(dC);
    return sol;
  }

  if (C == 1) {
    // The sum constraint pins a lone member to weight one; the program
    // reduces to reading off its residuals.
    sol.w.assign(1, 1.0);
    sol.norm2 = 1.0;
    double maxabs = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double r =
          sys.scale[static_cast<std::size_t>(t)] * sys.psi(t, 0);
      sol.residuals[sys.labels[static_cast<std::size_t>(t)]] = r;
      maxabs = std::max(maxabs, std::abs(r));
    }
    sol.epsilon =
        (policy == EtaPolicy::EqualEpsilon) ? std::max(maxabs, 1.0) : maxabs;
    sol.eta = (policy == EtaPolicy::EqualEpsilon) ? sol.epsilon : eta;
    sol.status = SolverStatus::Optimal;
    return sol;
  }

  // Scaled rows, normalized to unit length with epsilon folded per row.
  Eigen::MatrixXd rows(T, C);
  Eigen::VectorXd inv_norm(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::RowVectorXd r =
        sys.scale[static_cast<std::size_t>(t)] * sys.psi.row(t);
    const double nrm = r.norm();
    if (nrm == 0.0) {
      rows.row(t).setZero();
      inv_norm(t) = 0.0;  // vanishing row; constraint trivially met
    } else {
      rows.row(t) = r / nrm;
      inv_norm(t) = 1.0 / nrm;
    }
  }

  const Eigen::VectorXd w_unif = Eigen::VectorXd::Constant(C, 1.0 / dC);
  const auto scaled_residual = [&](const Eigen::VectorXd& w, Eigen::Index t) {
    return sys.scale[static_cast<std::size_t>(t)] * sys.psi.row(t).dot(w);
  };
  double eps_u = 0.0;
  for (Eigen::Index t = 0; t < T; ++t)
    eps_u = std::max(eps_u, std::abs(scaled_residual(w_unif, t)));
  double hi =
      (policy == EtaPolicy::EqualEpsilon) ? std::max(eps_u, 1.0 / dC) : eps_u;
  double lo = 0.0;

  const auto eta_eff = [&](double eps) {
    return policy == EtaPolicy::EqualEpsilon ? eps : eta;
  };
  const double ptol = std::max(1e-11, tol * 1e-3);

  Eigen::VectorXd best = w_unif;
  Eigen::VectorXd warm_beta;  // duals carry across probes; epsilon moves little
  const auto probe = [&](double eps) {
    const Eigen::VectorXd eps_rows = inv_norm * eps;
    detail::MinNormResult r =
        detail::min_norm_point(rows, eps_rows, C, ptol, &warm_beta);
    if (!r.converged) return false;
    const double m = r.w.squaredNorm();
    if (m <= eta_eff(eps) + 1e-12 * std::max(1.0, eta_eff(eps))) {
      best = std::move(r.w);
      return true;
    }
    return false;
  };

  bool have_feasible = probe(hi);
  if (!have_feasible) {
    // The uniform vector is feasible at hi by construction; failing here
    // means the projection could not certify it.
    best = w_unif;
  }
  for (int it = 0;
       have_feasible && it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      hi = mid;
    else
      lo = mid;
  }

  const Eigen::VectorXd& w = best;
  sol.w.assign(w.data(), w.data() + C);
  sol.norm2 = w.norm();
  double maxabs = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double raw = scaled_residual(w, t);
    sol.residuals[sys.labels[static_cast<std::size_t>(t)]] = raw;
    maxabs = std::max(maxabs, std::abs(raw));
  }
  // Objective value achieved by the returned point (tighter than the
  // bisection bracket); under EqualEpsilon the norm side may bind.
  sol.epsilon = (policy == EtaPolicy::EqualEpsilon)
                    ? std::max(maxabs, sol.norm2 * sol.norm2)
                    : maxabs;
  sol.eta = eta_eff(policy == EtaPolicy::EqualEpsilon ? sol.epsilon : hi);
  const bool ok =
      have_feasible && std::abs(w.sum() - 1.0) <= 1e-7 &&
      maxabs <= hi * (1.0 + 1e-6) + 1e-12 &&
      sol.norm2 * sol.norm2 <= eta_eff(hi) * (1.0 + 1e-6) + 1e-12;
  sol.status = ok ? SolverStatus::Optimal : SolverStatus::ToleranceNotMet;
  return sol;
}

namespace detail {

inline const BasisFamily& require_basis(const EnsembleConfig& cfg) {
  if (!cfg.basis)
    throw std::invalid_argument("EnsembleConfig has no basis family");
  return *cfg.basis;
}

}  // namespace detail

// Contract-style overloads: build the constraint system from the config.
inline WeightSolution solve_weights_exact(const EnsembleConfig& cfg,
                                          std::int64_t n_samples) {
  return solve_weights_exact(
      build_constraint_matrix(detail::require_basis(cfg), cfg.L, n_samples),
      cfg.solver_tol);
}

inline WeightSolution solve_weights_relaxed(const EnsembleConfig& cfg,
                                            std::int64_t n_samples) {
  return solve_weights_relaxed(
      build_constraint_matrix(detail::require_basis(cfg), cfg.L, n_samples),
      cfg.eta_policy, cfg.eta, cfg.solver_tol);
}

namespace detail {

inline WeightSolution resolve_weights(const EnsembleConfig& cfg,
                                      const BasisFamily& family,
                                      std::int64_t n, std::size_t n_members) {
  if (cfg.precomputed_weights) {
    const WeightSolution& pre = *cfg.precomputed_weights;
    if (pre.w.size() != n_members)
      throw std::invalid_argument(
          "precomputed weights do not match the member count");
    if (pre.status != SolverStatus::Optimal)
      throw InfeasibleProgram("precomputed weights are not optimal");
    return pre;
  }
  const ConstraintSystem sys = build_constraint_matrix(family, cfg.L, n);
  WeightSolution sol =
      (cfg.program == WeightProgram::Exact)
          ? solve_weights_exact(sys, cfg.solver_tol)
          : solve_weights_relaxed(sys, cfg.eta_policy, cfg.eta,
                                  cfg.solver_tol);
  if (sol.status == SolverStatus::Infeasible)
    throw InfeasibleProgram("weight program is infeasible for this basis");
  if (sol.status == SolverStatus::ToleranceNotMet)
    throw ToleranceNotMet("weight solver failed to reach tolerance");
  return sol;
}

}  // namespace detail

// Weighted ensemble over the mixed-case plug-in members:
// sum_l w(l) sum_y (N_y / N_ret) G(h_x(l), h_{x|y}(l)).
inline EstimateReport ensemble_estimate_mixed(const Dataset& data,
                                              const EnsembleConfig& cfg,
                                              const PluginConfig& plugin_cfg) {
  validate(data);
  if (!data.x_cont) throw MissingParts("estimator needs a continuous X block");
  if (!data.y_disc) throw MissingParts("estimator needs categorical Y labels");
  if (!schedule_is_mixed(cfg.schedule))
    throw std::invalid_argument("mixed ensemble needs a mixed schedule");
  cfg.L.check();

  const RowMatrixXd& X = *data.x_cont;
  const Eigen::Index n = data.n();
  const int dx = static_cast<int>(X.cols());
  const BasisFamily family =
      cfg.basis ? *cfg.basis
                : BasisFamily::for_schedule(cfg.schedule, dx, 0, cfg.delta);
  if (family.d_x != dx)
    throw std::invalid_argument("basis dimension does not match the data");
  if (!schedule_is_mixed(family.kind))
    throw std::invalid_argument("basis family does not match the schedule");

  const auto counts = class_counts(data);
  const detail::ClassSplit split =
      detail::split_classes(counts, plugin_cfg.singleton_policy);

  const std::vector<double>& L = cfg.L.values;
  const std::size_t nl = L.size();
  WeightSolution weights = detail::resolve_weights(cfg, family, n, nl);

  std::vector<double> hx(nl);
  for (std::size_t k = 0; k < nl; ++k)
    hx[k] = bandwidth_schedule(cfg.schedule, L[k], n, dx, 0, cfg.delta);

  const std::vector<Eigen::Index> idx = detail::all_indices(n);
  const double dn1 = static_cast<double>(n - 1);

  // Marginal LOO densities for every member bandwidth.
  std::vector<double> fx(static_cast<std::size_t>(n) * nl);
  detail::loo_kernel_sums(X, plugin_cfg.kernel_x, hx, idx, idx, fx.data(),
                          plugin_cfg.threads);
  for (std::size_t k = 0; k < nl; ++k) {
    const double nm = dn1 * detail::pow_dim(hx[k], dx);
    for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j)
      fx[j * nl + k] /= nm;
  }

  // Per-member, per-class plug-in values.
  std::vector<std::map<int, double>> member_vals(nl);
  EvalCounters counters;
  for (const auto& [label, m] : split.retained) {
    const std::vector<Eigen::Index> mem =
        detail::members_of(*data.y_disc, label);
    std::vector<double> hc(nl);
    for (std::size_t k = 0; k < nl; ++k)
      hc[k] = bandwidth_schedule(cfg.schedule, L[k], m, dx, 0, cfg.delta);
    std::vector<double> sc(mem.size() * nl);
    detail::loo_kernel_sums(X, plugin_cfg.kernel_x, hc, mem, mem, sc.data(),
                            plugin_cfg.threads);
    const double dm1 = static_cast<double>(m - 1);
    for (std::size_t k = 0; k < nl; ++k) {
      const double nmc = dm1 * detail::pow_dim(hc[k], dx);
      double acc = 0.0;
      for (std::size_t p = 0; p < mem.size(); ++p) {
        const double t1 = fx[static_cast<std::size_t>(mem[p]) * nl + k];
        const double t2 = sc[p * nl + k] / nmc;
        acc += functional_eval(plugin_cfg.functional, t1, t2, &counters);
      }
      member_vals[k][label] = acc / static_cast<double>(m);
    }
  }

  EstimateReport rep;
  rep.case_kind = EstimationCase::ContDisc;
  rep.n_samples = n;
  rep.skipped_classes = split.skipped;
  rep.per_member_values = member_vals;

  double value = 0.0;
  for (std::size_t k = 0; k < nl; ++k) {
    double gk = 0.0;
    for (const auto& [label, m] : split.retained)
      gk += (static_cast<double>(m) / static_cast<double>(split.n_retained)) *
            member_vals[k].at(label);
    value += weights.w[k] * gk;
  }
  for (const auto& [label, m] : split.retained) {
    double gy = 0.0;
    for (std::size_t k = 0; k < nl; ++k)
      gy += weights.w[k] * member_vals[k].at(label);
    rep.per_class_values[label] = gy;
  }

  rep.value = value;
  rep.weights_used = std::move(weights);
  rep.clamped = counters.clamped;
  return rep;
}

// Weighted ensemble over the continuous-case plug-in members on the
// (l_x, l_y) grid: sum_{lx,ly} w(lx,ly) G(h_x(lx), h_y(ly)).
inline EstimateReport ensemble_estimate_cont(const Dataset& data,
                                             const EnsembleConfig& cfg,
                                             const PluginConfig& plugin_cfg) {
  validate(data);
  if (!data.x_cont) throw MissingParts("estimator needs a continuous X block");
  if (!data.y_cont)
    throw MissingContinuousY("estimator needs a continuous Y block");
  if (schedule_is_mixed(cfg.schedule))
    throw std::invalid_argument("continuous ensemble needs a joint schedule");
  cfg.L.check();

  const RowMatrixXd& X = *data.x_cont;
  const RowMatrixXd& Y = *data.y_cont;
  const Eigen::Index n = data.n();
  const int dx = static_cast<int>(X.cols());
  const int dy = static_cast<int>(Y.cols());
  const BasisFamily family =
      cfg.basis ? *cfg.basis
                : BasisFamily::for_schedule(cfg.schedule, dx, dy, cfg.delta);
  if (family.d_x != dx || family.d_y != dy)
    throw std::invalid_argument("basis dimension does not match the data");
  if (schedule_is_mixed(family.kind))
    throw std::invalid_argument("basis family does not match the schedule");

  const std::vector<double>& L = cfg.L.values;
  const std::size_t nl = L.size();
  const std::size_t ncells = nl * nl;
  WeightSolution weights = detail::resolve_weights(cfg, family, n, ncells);

  std::vector<double> hs(nl), pdx(nl), pdy(nl);
  for (std::size_t k = 0; k < nl; ++k) {
    hs[k] = bandwidth_schedule(cfg.schedule, L[k], n, dx, dy, cfg.delta);
    pdx[k] = detail::pow_dim(hs[k], dx);
    pdy[k] = detail::pow_dim(hs[k], dy);
  }

  const std::vector<Eigen::Index> idx = detail::all_indices(n);
  const double dn1 = static_cast<double>(n - 1);

  EvalCounters counters;
  std::vector<double> cell_acc(ncells, 0.0);

  // Stream evaluation blocks: marginal sums for X and Y plus the joint
  // bandwidth grid, then accumulate g in sample order.
  const std::size_t block =
      std::max<std::size_t>(std::size_t{1}, 262144 / ncells);
  std::vector<double> bx(block * nl), by(block * nl), bz(block * ncells);
  for (std::size_t start = 0; start < static_cast<std::size_t>(n);
       start += block) {
    const std::size_t stop =
        std::min(start + block, static_cast<std::size_t>(n));
    const std::vector<Eigen::Index> eval(
        idx.begin() + static_cast<std::ptrdiff_t>(start),
        idx.begin() + static_cast<std::ptrdiff_t>(stop));
    detail::loo_kernel_sums(X, plugin_cfg.kernel_x, hs, idx, eval, bx.data(),
                            plugin_cfg.threads);
    detail::loo_kernel_sums(Y, plugin_cfg.kernel_y, hs, idx, eval, by.data(),
                            plugin_cfg.threads);
    detail::loo_kernel_sums_grid(X, plugin_cfg.kernel_x, hs, Y,
                                 plugin_cfg.kernel_y, hs, idx, eval, bz.data(),
                                 plugin_cfg.threads);
    for (std::size_t p = 0; p < stop - start; ++p) {
      for (std::size_t kx = 0; kx < nl; ++kx) {
        const double fxv = bx[p * nl + kx] / (dn1 * pdx[kx]);
        for (std::size_t ky = 0; ky < nl; ++ky) {
          const double fyv = by[p * nl + ky] / (dn1 * pdy[ky]);
          const double fzv =
              bz[p * ncells + kx * nl + ky] / (dn1 * (pdx[kx] * pdy[ky]));
          cell_acc[kx * nl + ky] += functional_eval(plugin_cfg.functional,
                                                    fxv * fyv, fzv, &counters);
        }
      }
    }
  }

  EstimateReport rep;
  rep.case_kind = EstimationCase::ContCont;
  rep.n_samples = n;
  rep.per_member_values.resize(ncells);

  const double dn = static_cast<double>(n);
  double value = 0.0;
  for (std::size_t c = 0; c < ncells; ++c) {
    const double gc = cell_acc[c] / dn;
    rep.per_member_values[c][-1] = gc;
    value += weights.w[c] * gc;
  }

  rep.value = value;
  rep.weights_used = std::move(weights);
  rep.clamped = counters.clamped;
  return rep;
}

// Dispatch on the schedule family.
inline EstimateReport ensemble_estimate(const Dataset& data,
                                        const EnsembleConfig& cfg,
                                        const PluginConfig& plugin_cfg) {
  return schedule_is_mixed(cfg.schedule)
             ? ensemble_estimate_mixed(data, cfg, plugin_cfg)
             : ensemble_estimate_cont(data, cfg, plugin_cfg);
}

// Data-driven parameter range: the lower end is the smallest l whose
// scheduled bandwidth lets every sample see a neighbor in each scheduled
// KDE set; the upper end keeps every scheduled bandwidth below the data
// diameter of its set. Fully degenerate data falls back to [1.2, 3].
inline BandwidthSet select_parameters(
    const Dataset& data, const KernelSpec& kernel, int count,
    std::optional<ScheduleKind> schedule = std::nullopt, double delta = 1.0) {
  validate(data);
  if (count < 30 || count > 60)
    throw std::invalid_argument("parameter count must lie in [30, 60]");
  if (!kernel.bounded())
    throw std::invalid_argument(
        "parameter selection requires a bounded kernel");
  const double r = kernel.support_radius;
  const ScheduleKind kind =
      schedule.value_or(data.y_disc && data.x_cont ? ScheduleKind::MixedOdin1
                                                   : ScheduleKind::ContOdin1);

  struct SetRule {
    const RowMatrixXd* block;
    std::vector<Eigen::Index> idx;
    double scale;  // h(l) = l * scale
  };
  std::vector<SetRule> sets;

  int dx = 0, dy = 0;
  if (schedule_is_mixed(kind)) {
    if (!data.x_cont)
      throw MissingParts("parameter selection needs a continuous X block");
    if (!data.y_disc)
      throw MissingParts("parameter selection needs categorical Y labels");
    dx = static_cast<int>(data.x_cont->cols());
    const double e = schedule_exponent(kind, dx, 0, delta);
    sets.push_back({&*data.x_cont, detail::all_indices(data.n()),
                    std::pow(static_cast<double>(data.n()), -e)});
    for (const auto& [label, m] : class_counts(data)) {
      if (m < 2) continue;
      sets.push_back({&*data.x_cont, detail::members_of(*data.y_disc, label),
                      std::pow(static_cast<double>(m), -e)});
    }
  } else {
    if (!data.x_cont || !data.y_cont)
      throw MissingParts("parameter selection needs both continuous blocks");
    dx = static_cast<int>(data.x_cont->cols());
    dy = static_cast<int>(data.y_cont->cols());
    const double e = schedule_exponent(kind, dx, dy, delta);
    const double sc = std::pow(static_cast<double>(data.n()), -e);
    sets.push_back({&*data.x_cont, detail::all_indices(data.n()), sc});
    sets.push_back({&*data.y_cont, detail::all_indices(data.n()), sc});
  }

  // The returned set must leave the weight program feasible: more members
  // than constraint rows.
  const BasisFamily family = BasisFamily::for_schedule(kind, dx, dy, delta);
  const std::size_t n_members = schedule_is_mixed(kind)
                                    ? static_cast<std::size_t>(count)
                                    : static_cast<std::size_t>(count) *
                                          static_cast<std::size_t>(count);
  if (n_members <= family.terms.size())
    throw std::invalid_argument(
        "parameter count does not exceed the basis size");

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool any_upper = false;
  for (const SetRule& s : sets) {
    const RowMatrixXd& A = *s.block;
    const Eigen::Index d = A.cols();
    const std::size_t m = s.idx.size();
    // Largest nearest-neighbor Chebyshev distance in the set.
    double max_nn = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < m; ++q) {
        if (q == p) continue;
        double c = 0.0;
        for (Eigen::Index a = 0; a < d; ++a)
          c = std::max(c, std::abs(A(s.idx[p], a) - A(s.idx[q], a)));
        nn = std::min(nn, c);
      }
      max_nn = std::max(max_nn, nn);
    }
    lo = std::max(lo, max_nn / (r * s.scale) * (1.0 + 1e-9));
    // Per-axis data diameter (Chebyshev diameter of the set).
    double diam = 0.0;
    for (Eigen::Index a = 0; a < d; ++a) {
      double vmin = A(s.idx[0], a), vmax = vmin;
      for (std::size_t p = 1; p < m; ++p) {
        vmin = std::min(vmin, A(s.idx[p], a));
        vmax = std::max(vmax, A(s.idx[p], a));
      }
      diam = std::max(diam, vmax - vmin);
    }
    if (diam > 0.0) {
      hi = std::min(hi, diam / s.scale * (1.0 - 1e-9));
      any_upper = true;
    }
  }

  if (!any_upper && lo == 0.0) return {linspace_bandwidths(1.2, 3.0, count)};
  if (!any_upper) hi = std::max(3.0, 2.0 * lo);
  if (lo == 0.0) lo = std::min(1.2, 0.5 * hi);
  if (!(lo < hi))
    throw NoFeasibleRange("no parameter range satisfies both rules");
  return {linspace_bandwidths(lo, hi, count)};
}

}  // namespace miest
