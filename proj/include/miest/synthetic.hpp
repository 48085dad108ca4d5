#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "miest/core.hpp"
#include "miest/parallel.hpp"
#include "miest/rng.hpp"

namespace miest {

// Mixture of isotropic Gaussians truncated to the unit cube. The covariance
// scale is the untruncated Gaussian's variance; truncation renormalizes
// per axis (isotropy makes each conditional a product of 1-D truncated
// normals).
struct TruncGaussMixtureSpec {
  int d = 1;
  double covariance_scale = 0.1;
  std::map<int, double> class_probs;
  std::map<int, std::vector<double>> means;

  void check() const {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (!(covariance_scale > 0.0))
      throw std::invalid_argument("covariance scale must be positive");
    if (class_probs.empty())
      throw std::invalid_argument("mixture needs at least one class");
    double total = 0.0;
    for (const auto& [label, p] : class_probs) {
      if (!(p > 0.0)) throw std::invalid_argument("class probability <= 0");
      total += p;
      const auto it = means.find(label);
      if (it == means.end() ||
          it->second.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("class " + std::to_string(label) +
                                    " mean has wrong dimension");
      for (double mu : it->second)
        if (mu < 0.0 || mu > 1.0)
          throw std::invalid_argument("class mean outside the unit cube");
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("class probabilities must sum to 1");
  }

  double sigma() const { return std::sqrt(covariance_scale); }
};

// Three overlapping classes with probabilities (2/5, 2/5, 1/5) and means
// 0.25, 0.75, 0.5 along every axis.
inline TruncGaussMixtureSpec case1_spec(int d) {
  TruncGaussMixtureSpec s;
  s.d = d;
  s.covariance_scale = 0.1;
  s.class_probs = {{0, 0.4}, {1, 0.4}, {2, 0.2}};
  s.means[0] = std::vector<double>(static_cast<std::size_t>(d), 0.25);
  s.means[1] = std::vector<double>(static_cast<std::size_t>(d), 0.75);
  s.means[2] = std::vector<double>(static_cast<std::size_t>(d), 0.5);
  s.check();
  return s;
}

// Six classes at d = 6 with unequal probabilities; three means are
// axis-constant and three mix two levels across axis groups.
inline TruncGaussMixtureSpec case2_spec() {
  TruncGaussMixtureSpec s;
  s.d = 6;
  s.covariance_scale = 0.1;
  s.class_probs = {{0, 0.35}, {1, 0.2},  {2, 0.15},
                   {3, 0.15}, {4, 0.1},  {5, 0.05}};
  s.means[0] = std::vector<double>(6, 0.25);
  s.means[1] = std::vector<double>(6, 0.75);
  s.means[2] = std::vector<double>(6, 0.5);
  s.means[3] = {0.25, 0.25, 0.25, 0.25, 0.5, 0.5};
  s.means[4] = {0.75, 0.75, 0.375, 0.375, 0.375, 0.375};
  s.means[5] = {0.5, 0.5, 0.5, 0.5, 0.25, 0.25};
  s.check();
  return s;
}

namespace detail {

// Per-axis truncation mass Z(mu) = Phi((1-mu)/sigma) - Phi((0-mu)/sigma).
inline double trunc_mass(double mu, double sigma) {
  const double inv = 1.0 / (sigma * 1.4142135623730951);
  return 0.5 * (std::erf((1.0 - mu) * inv) - std::erf((0.0 - mu) * inv));
}

inline double normal_pdf(double z) {
  return 0.3989422804014327 * std::exp(-0.5 * z * z);
}

}  // namespace detail

// f_{X|y}(x): product over axes of the 1-D truncated-normal density.
inline double exact_density_conditional(const TruncGaussMixtureSpec& spec,
                                        const std::vector<double>& x,
                                        int label) {
  if (x.size() != static_cast<std::size_t>(spec.d))
    throw std::invalid_argument("point has wrong dimension");
  for (double v : x)
    if (v < 0.0 || v > 1.0)
      throw OutOfBox("evaluation point outside the unit cube");
  const auto it = spec.means.find(label);
  if (it == spec.means.end())
    throw std::invalid_argument("unknown class label " +
                                std::to_string(label));
  const double sigma = spec.sigma();
  double dens = 1.0;
  for (int a = 0; a < spec.d; ++a) {
    const double mu = it->second[static_cast<std::size_t>(a)];
    const double z = (x[static_cast<std::size_t>(a)] - mu) / sigma;
    dens *= detail::normal_pdf(z) / (sigma * detail::trunc_mass(mu, sigma));
  }
  return dens;
}

// Marginal f_X(x) = sum_y p_y f_{X|y}(x).
inline double exact_density(const TruncGaussMixtureSpec& spec,
                            const std::vector<double>& x) {
  double dens = 0.0;
  for (const auto& [label, p] : spec.class_probs)
    dens += p * exact_density_conditional(spec, x, label);
  return dens;
}

// Draw N samples: Y from the class pmf, then X | Y=y per axis by rejection
// into [0, 1] (axes are independent under the isotropic covariance).
inline Dataset sample_mixture(const TruncGaussMixtureSpec& spec,
                              std::int64_t n, std::uint64_t seed) {
  spec.check();
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  std::vector<int> labels;
  std::vector<double> probs;
  for (const auto& [label, p] : spec.class_probs) {
    labels.push_back(label);
    probs.push_back(p);
  }

  Rng rng(seed);
  RowMatrixXd X(n, spec.d);
  std::vector<int> y(static_cast<std::size_t>(n));
  const double sigma = spec.sigma();
  for (std::int64_t j = 0; j < n; ++j) {
    const int label = labels[rng.categorical(probs)];
    y[static_cast<std::size_t>(j)] = label;
    const std::vector<double>& mu = spec.means.at(label);
    for (int a = 0; a < spec.d; ++a) {
      double v;
      int attempts = 0;
      do {
        if (++attempts > 1000000)
          throw RejectionStall("rejection sampling acceptance below 1e-6");
        v = rng.normal(mu[static_cast<std::size_t>(a)], sigma);
      } while (v < 0.0 || v > 1.0);
      X(j, a) = v;
    }
  }

  Dataset out;
  out.x_cont = std::move(X);
  out.y_disc = std::move(y);
  return out;
}

// Gauss-Legendre nodes/weights on [0, 1] by Newton iteration on the
// Legendre recurrence.
inline void gauss_legendre_unit(int n, std::vector<double>& nodes,
                                std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(3.141592653589793 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    weights[static_cast<std::size_t>(i)] = 0.5 * w;
    weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
}

enum class OracleMethod { Quadrature, MonteCarlo };

struct OracleResult {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

// Tensor-product quadrature of sum_y p_y int g(f_X / f_{X|y}) f_{X|y} dx.
inline double oracle_quadrature_pass(const TruncGaussMixtureSpec& spec,
                                     const Functional& functional, int order) {
  std::vector<double> nodes, weights;
  gauss_legendre_unit(order, nodes, weights);
  double total = 0.0;
  std::vector<double> x(static_cast<std::size_t>(spec.d));
  if (spec.d == 1) {
    for (const auto& [label, p] : spec.class_probs) {
      double acc = 0.0;
      for (int i = 0; i < order; ++i) {
        x[0] = nodes[static_cast<std::size_t>(i)];
        const double fc = exact_density_conditional(spec, x, label);
        const double fx = exact_density(spec, x);
        acc += weights[static_cast<std::size_t>(i)] *
               functional_eval(functional, fx, fc) * fc;
      }
      total += p * acc;
    }
    return total;
  }
  for (const auto& [label, p] : spec.class_probs) {
    double acc = 0.0;
    for (int i = 0; i < order; ++i) {
      x[0] = nodes[static_cast<std::size_t>(i)];
      double inner = 0.0;
      for (int j = 0; j < order; ++j) {
        x[1] = nodes[static_cast<std::size_t>(j)];
        const double fc = exact_density_conditional(spec, x, label);
        const double fx = exact_density(spec, x);
        inner += weights[static_cast<std::size_t>(j)] *
                 functional_eval(functional, fx, fc) * fc;
      }
      acc += weights[static_cast<std::size_t>(i)] * inner;
    }
    total += p * acc;
  }
  return total;
}

}  // namespace detail

// Ground-truth divergence functional of the mixture: quadrature for d <= 2
// (std_error reports the order-doubling difference as an error bound), or
// Monte Carlo over joint draws with a chunked, deterministically reduced
// parallel accumulation. mc_samples = 0 picks 1e7 for d >= 4, else 1e6.
inline OracleResult oracle_mi(const TruncGaussMixtureSpec& spec,
                              const Functional& functional,
                              OracleMethod method, std::uint64_t seed = 0,
                              std::int64_t mc_samples = 0, int threads = 0) {
  spec.check();
  if (method == OracleMethod::Quadrature) {
    if (spec.d > 2)
      throw UnsupportedDimension("quadrature oracle supports d <= 2");
    const double coarse = detail::oracle_quadrature_pass(spec, functional, 64);
    const double fine = detail::oracle_quadrature_pass(spec, functional, 128);
    OracleResult r;
    r.value = fine;
    r.std_error = std::abs(fine - coarse);
    return r;
  }

  std::int64_t M = mc_samples;
  if (M == 0) M = spec.d >= 4 ? 10000000 : 1000000;
  if (M < 1000000)
    throw std::invalid_argument("Monte Carlo oracle needs at least 1e6 draws");

  std::vector<int> labels;
  std::vector<double> probs;
  for (const auto& [label, p] : spec.class_probs) {
    labels.push_back(label);
    probs.push_back(p);
  }
  const double sigma = spec.sigma();

  const std::int64_t chunk = 65536;
  const auto n_chunks = static_cast<std::size_t>((M + chunk - 1) / chunk);
  std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
  parallel_for(
      n_chunks,
      [&](std::size_t c) {
        Rng rng(seed_combine(seed, static_cast<std::uint64_t>(c)));
        const std::int64_t lo = static_cast<std::int64_t>(c) * chunk;
        const std::int64_t hi = std::min<std::int64_t>(lo + chunk, M);
        std::vector<double> x(static_cast<std::size_t>(spec.d));
        double s = 0.0, s2 = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
          const int label = labels[rng.categorical(probs)];
          const std::vector<double>& mu = spec.means.at(label);
          for (int a = 0; a < spec.d; ++a) {
            double v;
            int attempts = 0;
            do {
              if (++attempts > 1000000)
                throw RejectionStall("rejection sampling stalled");
              v = rng.normal(mu[static_cast<std::size_t>(a)], sigma);
            } while (v < 0.0 || v > 1.0);
            x[static_cast<std::size_t>(a)] = v;
          }
          const double fc = exact_density_conditional(spec, x, label);
          const double fx = exact_density(spec, x);
          const double g = functional_eval(functional, fx, fc);
          s += g;
          s2 += g * g;
        }
        sums[c] = s;
        sqs[c] = s2;
      },
      threads);

  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    s += sums[c];
    s2 += sqs[c];
  }
  const double dM = static_cast<double>(M);
  const double mean = s / dM;
  const double var = std::max(0.0, s2 / dM - mean * mean);
  OracleResult r;
  r.value = mean;
  r.std_error = std::sqrt(var / dM);
  return r;
}

}  // namespace miest
