#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dais/autodiff.hpp"
#include "dais/distributions.hpp"
#include "dais/inference.hpp"
#include "dais/rng.hpp"

namespace dais {

/**
 * Geometric annealing path between two diagonal Gaussians, where every
 * intermediate pi_beta is again a diagonal Gaussian in closed form:
 *   precision_beta = (1-beta)/s0^2 + beta/s1^2,
 *   mean_beta = ((1-beta) m0/s0^2 + beta m1/s1^2) / precision_beta.
 * target_log_z scales the unnormalized target, f = exp(target_log_z) * pdf.
 */
struct GaussianPath {
  DiagGaussian q0;
  DiagGaussian target;      // normalized target parameters
  double target_log_z = 0.0;
};

inline DiagGaussian path_point(const GaussianPath& path, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("path_point: beta outside [0,1]");
  if (beta == 0.0) return path.q0;
  if (beta == 1.0) return path.target;
  const int d = path.q0.dim();
  DiagGaussian out;
  out.mean.resize(static_cast<std::size_t>(d));
  out.log_std.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double p0 = std::exp(-2.0 * path.q0.log_std[static_cast<std::size_t>(i)]);
    const double p1 = std::exp(-2.0 * path.target.log_std[static_cast<std::size_t>(i)]);
    const double lam = (1.0 - beta) * p0 + beta * p1;
    out.mean[static_cast<std::size_t>(i)] =
        ((1.0 - beta) * path.q0.mean[static_cast<std::size_t>(i)] * p0 +
         beta * path.target.mean[static_cast<std::size_t>(i)] * p1) /
        lam;
    out.log_std[static_cast<std::size_t>(i)] = -0.5 * std::log(lam);
  }
  return out;
}

/// Gap of the N=1 chain with perfect transitions and equally spaced betas:
/// sum_k KL(pi_{(k-1)/K} || pi_{k/K}).
inline double perfect_gap(const GaussianPath& path, int n_transitions) {
  if (n_transitions < 1) throw std::invalid_argument("perfect_gap: K must be >= 1");
  double acc = 0.0;
  DiagGaussian prev = path.q0;
  for (int k = 1; k <= n_transitions; ++k) {
    DiagGaussian cur = path_point(path, static_cast<double>(k) / n_transitions);
    acc += kl_diag_gaussians(prev, cur);
    prev = std::move(cur);
  }
  return acc;
}

struct JsLimitRow {
  int K = 0;
  double k_gap = 0.0;      // K * perfect_gap
  double residual = 0.0;   // |K * gap - D_JS|
};

struct JsLimitResult {
  std::vector<JsLimitRow> rows;
  double d_js = 0.0;        // 0.5 KL(target || q0) + 0.5 KL(q0 || target)
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
};

/// Tabulates K * gap against the symmetrized KL divergence and fits the
/// log-log slope of the residual over rows with residual > 1e-13 (rows at
/// the floating-point floor carry no rate information).
inline JsLimitResult verify_js_limit(const GaussianPath& path, std::span<const int> k_list) {
  JsLimitResult res;
  res.d_js = 0.5 * kl_diag_gaussians(path.target, path.q0) + 0.5 * kl_diag_gaussians(path.q0, path.target);
  res.rows.reserve(k_list.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n_fit = 0;
  for (int k : k_list) {
    JsLimitRow row;
    row.K = k;
    row.k_gap = static_cast<double>(k) * perfect_gap(path, k);
    row.residual = std::fabs(row.k_gap - res.d_js);
    res.rows.push_back(row);
    if (row.residual > 1e-13) {
      const double x = std::log(static_cast<double>(k));
      const double y = std::log(row.residual);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n_fit;
    }
  }
  if (n_fit >= 2) {
    const double denom = n_fit * sxx - sx * sx;
    if (denom != 0.0) res.fitted_slope = (n_fit * sxy - sx * sy) / denom;
  }
  return res;
}

/**
 * Monte Carlo estimate of the N-particle gap under perfect transitions:
 * each z_{k-1}^{(i)} is an exact independent draw from pi_{beta_{k-1}},
 * and the gap is log Z - E[log((1/N) sum_i prod_k gamma ratios)].
 */
inline McEstimate n_particle_gap_mc(const GaussianPath& path, int n_particles, int n_transitions, int n_mc,
                                    Rng rng) {
  if (n_particles < 1 || n_transitions < 1 || n_mc < 1)
    throw std::invalid_argument("n_particle_gap_mc: invalid arguments");
  const int d = path.q0.dim();

  std::vector<DiagGaussian> points;
  points.reserve(static_cast<std::size_t>(n_transitions) + 1);
  for (int k = 0; k <= n_transitions; ++k)
    points.push_back(path_point(path, static_cast<double>(k) / n_transitions));

  auto log_gamma = [&](double beta, std::span<const double> z) {
    const double lq = log_prob(path.q0, z);
    const double lf = path.target_log_z + log_prob(path.target, z);
    return (1.0 - beta) * lq + beta * lf;
  };

  std::vector<double> terms(static_cast<std::size_t>(n_particles));
  std::vector<double> z(static_cast<std::size_t>(d));
  double sum = 0.0, sumsq = 0.0;
  for (int rep = 0; rep < n_mc; ++rep) {
    for (int i = 0; i < n_particles; ++i) {
      double acc = 0.0;
      for (int k = 1; k <= n_transitions; ++k) {
        const DiagGaussian& pk = points[static_cast<std::size_t>(k - 1)];
        for (int j = 0; j < d; ++j)
          z[static_cast<std::size_t>(j)] = pk.mean[static_cast<std::size_t>(j)] +
                                           std::exp(pk.log_std[static_cast<std::size_t>(j)]) * rng.normal();
        const double bk = static_cast<double>(k) / n_transitions;
        const double bk1 = static_cast<double>(k - 1) / n_transitions;
        acc += log_gamma(bk, z) - log_gamma(bk1, z);
      }
      terms[static_cast<std::size_t>(i)] = acc;
    }
    const double bound = log_sum_exp(std::span<const double>(terms)) - std::log(static_cast<double>(n_particles));
    const double gap = path.target_log_z - bound;
    sum += gap;
    sumsq += gap * gap;
  }
  const double mean = sum / n_mc;
  const double var = std::max(0.0, sumsq / n_mc - mean * mean);
  return {mean, std::sqrt(var / n_mc)};
}

/**
 * Numerically minimizes 0.5 KL(target || q) + 0.5 KL(q || target) over a
 * diagonal Gaussian q by Adam on a Monte Carlo estimate: the forward term
 * uses exact target samples (score only), the reverse term uses
 * reparameterized draws from q.
 */
inline DiagGaussian numeric_js_minimizer(const TargetDensity& target, const DiagGaussian& init, double lr,
                                         int iters, int n_mc, Rng rng) {
  if (!target.has_exact_sampler())
    throw std::invalid_argument("numeric_js_minimizer: target needs an exact sampler");
  const int d = target.dim();
  ParamVector q_mean("q_mean", init.mean);
  ParamVector q_log_std("q_log_std", init.log_std);
  AdamState adam_mean(q_mean.size(), lr), adam_log_std(q_log_std.size(), lr);

  ad::Tape tape;
  std::vector<ad::Value> zq(static_cast<std::size_t>(d));
  for (int it = 0; it < iters; ++it) {
    tape.clear();
    auto mean_leaves = make_leaves(tape, q_mean);
    auto log_std_leaves = make_leaves(tape, q_log_std);

    ad::Value loss;
    bool first = true;
    for (int s = 0; s < n_mc; ++s) {
      // forward-KL piece: -log q at a fixed target sample
      const auto zp = target.sample_exact(rng);
      ad::Value t1 = -gaussian_log_prob<ad::Value, double>(mean_leaves, log_std_leaves, zp) *
                     (0.5 / n_mc);
      // reverse-KL piece: log q - log f at a reparameterized sample
      for (int j = 0; j < d; ++j)
        zq[static_cast<std::size_t>(j)] = mean_leaves[static_cast<std::size_t>(j)] +
                                          exp(log_std_leaves[static_cast<std::size_t>(j)]) * rng.normal();
      ad::Value lq = gaussian_log_prob<ad::Value, ad::Value>(mean_leaves, log_std_leaves, zq);
      ad::Value lf = target_log_f(target, std::span<const ad::Value>(zq));
      ad::Value t2 = (lq - lf) * (0.5 / n_mc);
      loss = first ? t1 + t2 : loss + t1 + t2;
      first = false;
    }
    if (!std::isfinite(loss.value()))
      throw std::runtime_error("numeric_js_minimizer: divergent loss at iteration " + std::to_string(it));
    tape.backward(loss);
    q_mean.zero_grads();
    q_log_std.zero_grads();
    harvest_grads(mean_leaves, q_mean);
    harvest_grads(log_std_leaves, q_log_std);
    adam_step(adam_mean, q_mean.values, q_mean.grads);
    adam_step(adam_log_std, q_log_std.values, q_log_std.grads);
  }
  return DiagGaussian{q_mean.values, q_log_std.values};
}

}  // namespace dais
