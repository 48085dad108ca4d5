#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "miest/core.hpp"
#include "miest/parallel.hpp"

// Leave-one-out product-kernel density evaluation.
//
// The binding semantics are the reference double loop: for subset member j,
// sum kernel terms over the other subset members in ascending index order,
// then divide by (subset size - 1) * h^d. Two fast paths exist and both
// reproduce the reference sums bit for bit:
//  * uniform counting: for the uniform kernel at its natural radius every
//    term inside the Chebyshev window is the same exact power of two, so
//    per-sample threshold counting evaluates a whole bandwidth ladder in one
//    O(N^2) pass and a single exact scaling recovers the sums;
//  * axis-sorted pruning: for bounded kernels, only candidates inside the
//    first-axis window are visited; gathered indices are re-sorted ascending
//    so the accumulation order matches the reference exactly.

namespace miest {

namespace detail {

inline double pow_dim(double h, Eigen::Index d) {
  double v = 1.0;
  for (Eigen::Index a = 0; a < d; ++a) v *= h;
  return v;
}

inline bool uniform_count_eligible(const KernelSpec& k) {
  // Counting replaces summing only when every in-support term is the same
  // power of two (0.5 per axis at the natural radius), so count * term
  // reproduces the reference accumulation bit for bit.
  return k.profile == KernelProfile::Uniform &&
         k.support_radius == natural_radius(KernelProfile::Uniform);
}

// First index k (over ascending bandwidths hs) whose window admits Chebyshev
// distance c, using the same floating-point predicate as the reference
// per-axis test |delta/h| <= r. Monotone because fl(c/h) is monotone in h.
inline int first_admitting_bandwidth(const std::vector<double>& hs, double c,
                                     double r) {
  int lo = 0, hi = static_cast<int>(hs.size());
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    if (c / hs[mid] <= r)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

struct SortedBandwidths {
  std::vector<double> h;     // ascending
  std::vector<int> orig;     // h[k] == input[orig[k]]
};

inline SortedBandwidths sort_bandwidths(const std::vector<double>& hs) {
  SortedBandwidths s;
  s.orig.resize(hs.size());
  std::iota(s.orig.begin(), s.orig.end(), 0);
  std::sort(s.orig.begin(), s.orig.end(),
            [&](int a, int b) { return hs[a] < hs[b]; });
  s.h.resize(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) s.h[k] = hs[s.orig[k]];
  return s;
}

// Kernel sums for one continuous block, all bandwidths at once.
// out[p * hs.size() + k] = sum over i in cand (i != eval[p]) of the product
// kernel at bandwidth hs[k], evaluated at sample eval[p]. `cand` and `eval`
// are ascending; leave-one-out is by sample identity.
inline void loo_kernel_sums(const RowMatrixXd& A, const KernelSpec& kA,
                            const std::vector<double>& hs,
                            const std::vector<Eigen::Index>& cand,
                            const std::vector<Eigen::Index>& eval, double* out,
                            int threads = 0) {
  const std::size_t n = cand.size();
  const std::size_t ne = eval.size();
  const std::size_t L = hs.size();
  const Eigen::Index d = A.cols();
  for (double h : hs)
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");

  if (uniform_count_eligible(kA)) {
    const double r = kA.support_radius;
    const double term = std::ldexp(1.0, -static_cast<int>(d));  // 0.5 per axis
    const SortedBandwidths sb = sort_bandwidths(hs);
    parallel_for(
        ne,
        [&](std::size_t p) {
          const Eigen::Index j = eval[p];
          std::vector<std::int64_t> hist(L + 1, 0);
          const double* xj = A.row(j).data();
          for (std::size_t q = 0; q < n; ++q) {
            const Eigen::Index i = cand[q];
            if (i == j) continue;
            const double* xi = A.row(i).data();
            double c = 0.0;
            for (Eigen::Index a = 0; a < d; ++a)
              c = std::max(c, std::abs(xj[a] - xi[a]));
            ++hist[first_admitting_bandwidth(sb.h, c, r)];
          }
          double* row = out + p * L;
          std::int64_t running = 0;
          for (std::size_t k = 0; k < L; ++k) {
            running += hist[k];
            row[sb.orig[k]] = static_cast<double>(running) * term;
          }
        },
        threads);
    return;
  }

  // Axis-sorted pruning for a single bounded bandwidth, when the window
  // actually prunes. The candidate predicate |delta0/h| <= r is necessary
  // for a nonzero product term, so skipped terms are exact zeros; gathered
  // indices are re-sorted so accumulation order matches the reference.
  if (L == 1 && kA.bounded() && n >= 512) {
    const double h = hs[0];
    const double r = kA.support_radius;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return A(cand[a], 0) < A(cand[b], 0);
    });
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = A(cand[order[t]], 0);

    std::vector<std::uint32_t> wlo(ne), whi(ne);
    std::size_t total = 0;
    for (std::size_t p = 0; p < ne; ++p) {
      const double c0 = A(eval[p], 0);
      std::size_t lo = 0, hi = n;
      while (lo < hi) {  // first t with (c0 - v[t]) / h <= r
        std::size_t mid = lo + (hi - lo) / 2;
        if ((c0 - v[mid]) / h <= r)
          hi = mid;
        else
          lo = mid + 1;
      }
      const std::size_t first = lo;
      lo = first;
      hi = n;
      while (lo < hi) {  // first t with (v[t] - c0) / h > r
        std::size_t mid = lo + (hi - lo) / 2;
        if ((v[mid] - c0) / h > r)
          hi = mid;
        else
          lo = mid + 1;
      }
      wlo[p] = static_cast<std::uint32_t>(first);
      whi[p] = static_cast<std::uint32_t>(lo);
      total += lo - first;
    }

    if (total * 2 < ne * n) {
      parallel_for(
          ne,
          [&](std::size_t p) {
            const Eigen::Index j = eval[p];
            std::vector<Eigen::Index> window;
            window.reserve(whi[p] - wlo[p]);
            for (std::uint32_t t = wlo[p]; t < whi[p]; ++t) {
              const Eigen::Index i = cand[order[t]];
              if (i != j) window.push_back(i);
            }
            std::sort(window.begin(), window.end());
            const double* xj = A.row(j).data();
            double acc = 0.0;
            for (Eigen::Index i : window) {
              const double* xi = A.row(i).data();
              double term = 1.0;
              for (Eigen::Index a = 0; a < d; ++a) {
                const double ka = kernel_axis(kA, (xj[a] - xi[a]) / h);
                if (ka == 0.0) {
                  term = 0.0;
                  break;
                }
                term *= ka;
              }
              if (term != 0.0) acc += term;
            }
            out[p] = acc;
          },
          threads);
      return;
    }
  }

  // Reference path.
  parallel_for(
      ne,
      [&](std::size_t p) {
        const Eigen::Index j = eval[p];
        double* row = out + p * L;
        std::fill(row, row + L, 0.0);
        std::vector<double> delta(d);
        const double* xj = A.row(j).data();
        for (std::size_t q = 0; q < n; ++q) {
          const Eigen::Index i = cand[q];
          if (i == j) continue;
          const double* xi = A.row(i).data();
          for (Eigen::Index a = 0; a < d; ++a) delta[a] = xj[a] - xi[a];
          for (std::size_t k = 0; k < L; ++k) {
            const double h = hs[k];
            double term = 1.0;
            for (Eigen::Index a = 0; a < d; ++a) {
              const double ka = kernel_axis(kA, delta[a] / h);
              if (ka == 0.0) {
                term = 0.0;
                break;
              }
              term *= ka;
            }
            if (term != 0.0) row[k] += term;
          }
        }
      },
      threads);
}

// Product-kernel sums for two blocks over a full bandwidth grid.
// out[p * (|hxs|*|hys|) + kx * |hys| + ky]. Terms are computed as
// (x-block product) * (y-block product), matching kde_joint.
inline void loo_kernel_sums_grid(const RowMatrixXd& A, const KernelSpec& kA,
                                 const std::vector<double>& hxs,
                                 const RowMatrixXd& B, const KernelSpec& kB,
                                 const std::vector<double>& hys,
                                 const std::vector<Eigen::Index>& cand,
                                 const std::vector<Eigen::Index>& eval,
                                 double* out, int threads = 0) {
  const std::size_t n = cand.size();
  const std::size_t ne = eval.size();
  const std::size_t LX = hxs.size(), LY = hys.size();
  const Eigen::Index dA = A.cols(), dB = B.cols();
  for (double h : hxs)
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  for (double h : hys)
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");

  if (uniform_count_eligible(kA) && uniform_count_eligible(kB)) {
    const double rA = kA.support_radius, rB = kB.support_radius;
    const double term = std::ldexp(1.0, -static_cast<int>(dA + dB));
    const SortedBandwidths sx = sort_bandwidths(hxs);
    const SortedBandwidths sy = sort_bandwidths(hys);
    parallel_for(
        ne,
        [&](std::size_t p) {
          const Eigen::Index j = eval[p];
          std::vector<std::int64_t> hist((LX + 1) * (LY + 1), 0);
          const double* xj = A.row(j).data();
          const double* yj = B.row(j).data();
          for (std::size_t q = 0; q < n; ++q) {
            const Eigen::Index i = cand[q];
            if (i == j) continue;
            const double* xi = A.row(i).data();
            const double* yi = B.row(i).data();
            double cx = 0.0, cy = 0.0;
            for (Eigen::Index a = 0; a < dA; ++a)
              cx = std::max(cx, std::abs(xj[a] - xi[a]));
            for (Eigen::Index b = 0; b < dB; ++b)
              cy = std::max(cy, std::abs(yj[b] - yi[b]));
            const int kx = first_admitting_bandwidth(sx.h, cx, rA);
            const int ky = first_admitting_bandwidth(sy.h, cy, rB);
            ++hist[static_cast<std::size_t>(kx) * (LY + 1) + ky];
          }
          // 2-D prefix counts over the sorted grid.
          std::vector<std::int64_t> pref((LX) * (LY), 0);
          for (std::size_t kx = 0; kx < LX; ++kx) {
            std::int64_t rowrun = 0;
            for (std::size_t ky = 0; ky < LY; ++ky) {
              rowrun += hist[kx * (LY + 1) + ky];
              pref[kx * LY + ky] =
                  rowrun + (kx ? pref[(kx - 1) * LY + ky] : 0);
            }
          }
          double* row = out + p * LX * LY;
          for (std::size_t kx = 0; kx < LX; ++kx)
            for (std::size_t ky = 0; ky < LY; ++ky)
              row[static_cast<std::size_t>(sx.orig[kx]) * LY + sy.orig[ky]] =
                  static_cast<double>(pref[kx * LY + ky]) * term;
        },
        threads);
    return;
  }

  parallel_for(
      ne,
      [&](std::size_t p) {
        const Eigen::Index j = eval[p];
        double* row = out + p * LX * LY;
        std::fill(row, row + LX * LY, 0.0);
        std::vector<double> dAx(dA), dBy(dB), py(LY);
        const double* xj = A.row(j).data();
        const double* yj = B.row(j).data();
        for (std::size_t q = 0; q < n; ++q) {
          const Eigen::Index i = cand[q];
          if (i == j) continue;
          const double* xi = A.row(i).data();
          const double* yi = B.row(i).data();
          for (Eigen::Index a = 0; a < dA; ++a) dAx[a] = xj[a] - xi[a];
          for (Eigen::Index b = 0; b < dB; ++b) dBy[b] = yj[b] - yi[b];
          for (std::size_t ky = 0; ky < LY; ++ky) {
            double pb = 1.0;
            for (Eigen::Index b = 0; b < dB; ++b) {
              const double kb = kernel_axis(kB, dBy[b] / hys[ky]);
              if (kb == 0.0) {
                pb = 0.0;
                break;
              }
              pb *= kb;
            }
            py[ky] = pb;
          }
          for (std::size_t kx = 0; kx < LX; ++kx) {
            double pa = 1.0;
            for (Eigen::Index a = 0; a < dA; ++a) {
              const double ka = kernel_axis(kA, dAx[a] / hxs[kx]);
              if (ka == 0.0) {
                pa = 0.0;
                break;
              }
              pa *= ka;
            }
            if (pa == 0.0) continue;
            for (std::size_t ky = 0; ky < LY; ++ky) {
              const double term = pa * py[ky];
              if (term != 0.0) row[kx * LY + ky] += term;
            }
          }
        }
      },
      threads);
}

inline std::vector<Eigen::Index> all_indices(Eigen::Index n) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

}  // namespace detail

// Per-class sample counts from the categorical Y labels.
inline std::map<int, std::int64_t> class_counts(const Dataset& d) {
  if (!d.y_disc) throw MissingParts("dataset has no categorical Y labels");
  std::map<int, std::int64_t> counts;
  for (int y : *d.y_disc) ++counts[y];
  return counts;
}

// Binds a dataset to kernels and bandwidths for the per-point evaluators.
struct KdeContext {
  const Dataset* data = nullptr;
  KernelSpec kernel_x = KernelSpec::uniform();
  KernelSpec kernel_y = KernelSpec::uniform();
  double h_x = 0.0;
  double h_y = 0.0;
  std::map<int, double> h_x_given_y;  // class label -> conditional bandwidth
};

namespace detail {
inline const Dataset& checked_data(const KdeContext& ctx, Eigen::Index j) {
  if (!ctx.data) throw std::invalid_argument("KdeContext has no dataset");
  const Dataset& d = *ctx.data;
  if (d.n() < 2) throw DegenerateDataset("leave-one-out KDE needs N >= 2");
  if (j < 0 || j >= d.n())
    throw std::invalid_argument("sample index out of range");
  return d;
}
}  // namespace detail

// f~_X(X_j): leave-one-out marginal over the continuous X block.
inline double kde_marginal_x(const KdeContext& ctx, Eigen::Index j) {
  const Dataset& d = detail::checked_data(ctx, j);
  if (!d.x_cont) throw MissingParts("dataset has no continuous X block");
  if (!(ctx.h_x > 0.0)) throw std::invalid_argument("h_x must be positive");
  const RowMatrixXd& X = *d.x_cont;
  const Eigen::Index n = X.rows(), dx = X.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == j) continue;
    double term = 1.0;
    for (Eigen::Index a = 0; a < dx; ++a) {
      const double ka = kernel_axis(ctx.kernel_x, (X(j, a) - X(i, a)) / ctx.h_x);
      if (ka == 0.0) {
        term = 0.0;
        break;
      }
      term *= ka;
    }
    if (term != 0.0) acc += term;
  }
  return acc / (static_cast<double>(n - 1) * detail::pow_dim(ctx.h_x, dx));
}

// f~_Y(Y_j) over the continuous Y block.
inline double kde_marginal_y(const KdeContext& ctx, Eigen::Index j) {
  const Dataset& d = detail::checked_data(ctx, j);
  if (!d.y_cont) throw MissingContinuousY("dataset has no continuous Y block");
  if (!(ctx.h_y > 0.0)) throw std::invalid_argument("h_y must be positive");
  const RowMatrixXd& Y = *d.y_cont;
  const Eigen::Index n = Y.rows(), dy = Y.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == j) continue;
    double term = 1.0;
    for (Eigen::Index b = 0; b < dy; ++b) {
      const double kb = kernel_axis(ctx.kernel_y, (Y(j, b) - Y(i, b)) / ctx.h_y);
      if (kb == 0.0) {
        term = 0.0;
        break;
      }
      term *= kb;
    }
    if (term != 0.0) acc += term;
  }
  return acc / (static_cast<double>(n - 1) * detail::pow_dim(ctx.h_y, dy));
}

// f~_XY(X_j, Y_j): joint density with the product kernel K_X * K_Y.
inline double kde_joint(const KdeContext& ctx, Eigen::Index j) {
  const Dataset& d = detail::checked_data(ctx, j);
  if (!d.x_cont) throw MissingParts("dataset has no continuous X block");
  if (!d.y_cont) throw MissingContinuousY("dataset has no continuous Y block");
  if (!(ctx.h_x > 0.0) || !(ctx.h_y > 0.0))
    throw std::invalid_argument("joint KDE needs positive h_x and h_y");
  const RowMatrixXd& X = *d.x_cont;
  const RowMatrixXd& Y = *d.y_cont;
  const Eigen::Index n = X.rows(), dx = X.cols(), dy = Y.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == j) continue;
    double pa = 1.0;
    for (Eigen::Index a = 0; a < dx; ++a) {
      const double ka = kernel_axis(ctx.kernel_x, (X(j, a) - X(i, a)) / ctx.h_x);
      if (ka == 0.0) {
        pa = 0.0;
        break;
      }
      pa *= ka;
    }
    if (pa == 0.0) continue;
    double pb = 1.0;
    for (Eigen::Index b = 0; b < dy; ++b) {
      const double kb = kernel_axis(ctx.kernel_y, (Y(j, b) - Y(i, b)) / ctx.h_y);
      if (kb == 0.0) {
        pb = 0.0;
        break;
      }
      pb *= kb;
    }
    const double term = pa * pb;
    if (term != 0.0) acc += term;
  }
  return acc / (static_cast<double>(n - 1) * detail::pow_dim(ctx.h_x, dx) *
                detail::pow_dim(ctx.h_y, dy));
}

// f~_{X|y}(X_j) for y = the class of sample j, leave-one-out over the class.
inline double kde_conditional_x_given_y(const KdeContext& ctx, Eigen::Index j) {
  const Dataset& d = detail::checked_data(ctx, j);
  if (!d.x_cont) throw MissingParts("dataset has no continuous X block");
  if (!d.y_disc) throw MissingParts("dataset has no categorical Y labels");
  const int label = (*d.y_disc)[static_cast<std::size_t>(j)];
  const RowMatrixXd& X = *d.x_cont;
  const Eigen::Index n = X.rows(), dx = X.cols();
  std::int64_t m = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != j && (*d.y_disc)[static_cast<std::size_t>(i)] == label) ++m;
  if (m < 1)
    throw SingletonClass("class " + std::to_string(label) +
                         " has fewer than 2 members");
  auto it = ctx.h_x_given_y.find(label);
  if (it == ctx.h_x_given_y.end() || !(it->second > 0.0))
    throw std::invalid_argument("no positive conditional bandwidth for class " +
                                std::to_string(label));
  const double h = it->second;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((*d.y_disc)[static_cast<std::size_t>(i)] != label) continue;
    if (i == j) continue;
    double term = 1.0;
    for (Eigen::Index a = 0; a < dx; ++a) {
      const double ka = kernel_axis(ctx.kernel_x, (X(j, a) - X(i, a)) / h);
      if (ka == 0.0) {
        term = 0.0;
        break;
      }
      term *= ka;
    }
    if (term != 0.0) acc += term;
  }
  return acc / (static_cast<double>(m) * detail::pow_dim(h, dx));
}

// Non-leave-one-out evaluation at external points (mass checks, plots).
inline std::vector<double> kde_at_points(const RowMatrixXd& eval_points,
                                         const RowMatrixXd& samples,
                                         const KernelSpec& kernel, double h,
                                         int threads = 0) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (eval_points.cols() != samples.cols())
    throw std::invalid_argument("dimension mismatch between points and samples");
  const Eigen::Index m = eval_points.rows(), n = samples.rows(),
                     d = samples.cols();
  if (n < 1) throw DegenerateDataset("no samples");
  std::vector<double> out(static_cast<std::size_t>(m));
  const double norm = static_cast<double>(n) * detail::pow_dim(h, d);
  parallel_for(
      static_cast<std::size_t>(m),
      [&](std::size_t p) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double term = 1.0;
          for (Eigen::Index a = 0; a < d; ++a) {
            const double ka = kernel_axis(
                kernel, (eval_points(static_cast<Eigen::Index>(p), a) -
                         samples(i, a)) / h);
            if (ka == 0.0) {
              term = 0.0;
              break;
            }
            term *= ka;
          }
          if (term != 0.0) acc += term;
        }
        out[p] = acc / norm;
      },
      threads);
  return out;
}

}  // namespace miest
