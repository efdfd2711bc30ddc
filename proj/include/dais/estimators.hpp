#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dais/autodiff.hpp"
#include "dais/distributions.hpp"
#include "dais/linalg.hpp"
#include "dais/rng.hpp"
#include "dais/samplers.hpp"

namespace dais {

namespace detail {

inline double constant_like(double, double v) { return v; }
inline ad::Value constant_like(const ad::Value& exemplar, double v) {
  return exemplar.tape()->constant(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// annealing schedule
// ---------------------------------------------------------------------------

/**
 * Inverse-temperature schedule beta_0 = 0 < beta_1 < ... < beta_K = 1,
 * derived from an unconstrained raw vector of length K:
 *   beta_k = cumsum(softmax(raw))_k.
 * Monotonicity holds by construction; the endpoints are pinned to exactly
 * 0 and 1 (the endpoint carries no gradient, matching d(1)/d(raw) = 0).
 */
template <class S>
std::vector<S> schedule_betas(std::span<const S> raw) {
  if (raw.empty()) throw std::invalid_argument("schedule_betas: empty raw vector");
  using std::exp;
  const std::size_t k = raw.size();
  double shift = value_of(raw[0]);
  for (const S& r : raw) shift = std::max(shift, value_of(r));

  std::vector<S> cum;
  cum.reserve(k);
  S acc = exp(raw[0] - shift);
  cum.push_back(acc);
  for (std::size_t i = 1; i < k; ++i) {
    acc = acc + exp(raw[i] - shift);
    cum.push_back(acc);
  }
  std::vector<S> betas;
  betas.reserve(k + 1);
  betas.push_back(detail::constant_like(raw[0], 0.0));
  for (std::size_t i = 0; i + 1 < k; ++i) betas.push_back(cum[i] / cum[k - 1]);
  betas.push_back(detail::constant_like(raw[0], 1.0));
  return betas;
}

struct AnnealSchedule {
  std::vector<double> raw;

  explicit AnnealSchedule(int n_transitions) : raw(static_cast<std::size_t>(n_transitions), 0.0) {
    if (n_transitions < 1) throw std::invalid_argument("AnnealSchedule: K must be >= 1");
  }
  explicit AnnealSchedule(std::vector<double> raw_values) : raw(std::move(raw_values)) {}

  int transitions() const { return static_cast<int>(raw.size()); }
  std::vector<double> betas() const { return schedule_betas<double>(raw); }
};

// ---------------------------------------------------------------------------
// bound estimates
// ---------------------------------------------------------------------------

template <class S>
struct BoundEstimateT {
  S value{};
  std::vector<S> per_particle_log_w;

  // spread of the per-particle log weights; a cheap variance diagnostic
  double log_weight_variance() const {
    const std::size_t n = per_particle_log_w.size();
    if (n < 2) return 0.0;
    double m = 0.0;
    for (const S& w : per_particle_log_w) m += value_of(w);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (const S& w : per_particle_log_w) v += square(value_of(w) - m);
    return v / static_cast<double>(n - 1);
  }
};

using BoundEstimate = BoundEstimateT<double>;

/// Single-sample-average ELBO: mean of log f(z) - log q0(z) over n_mc
/// reparameterized draws.
template <class S>
BoundEstimateT<S> elbo_vi(const DiagGaussianT<S>& q0, const TargetDensity& target, int n_mc, Rng rng) {
  using std::exp;
  if (n_mc < 1) throw std::invalid_argument("elbo_vi: n_mc must be >= 1");
  const int d = q0.dim();
  std::vector<S> stds;
  stds.reserve(d);
  for (int i = 0; i < d; ++i) stds.push_back(exp(q0.log_std[i]));

  const std::uint64_t root = rng.next_u64();
  BoundEstimateT<S> out;
  out.per_particle_log_w.reserve(n_mc);
  std::vector<S> z(static_cast<std::size_t>(d), S{});
  for (int j = 0; j < n_mc; ++j) {
    Rng pr(root, static_cast<std::uint64_t>(j));
    for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i)] = q0.mean[i] + stds[i] * pr.normal();
    auto lf = target_log_f(target, std::span<const S>(z));
    auto lq = gaussian_log_prob<S, S>(q0.mean, q0.log_std, std::span<const S>(z));
    out.per_particle_log_w.push_back(lf - lq);
  }
  out.value = sum(std::span<const S>(out.per_particle_log_w)) / static_cast<double>(n_mc);
  return out;
}

/// Importance weighted bound: log-mean-exp of N particle weights,
/// averaged over n_batches independent batches.  N = 1 reduces to elbo_vi
/// under a shared generator state.
template <class S>
BoundEstimateT<S> elbo_iwvi(const DiagGaussianT<S>& q0, const TargetDensity& target, int n_particles,
                            int n_batches, Rng rng) {
  using std::exp;
  if (n_particles < 1 || n_batches < 1) throw std::invalid_argument("elbo_iwvi: N and n_batches must be >= 1");
  const int d = q0.dim();
  std::vector<S> stds;
  stds.reserve(d);
  for (int i = 0; i < d; ++i) stds.push_back(exp(q0.log_std[i]));

  const std::uint64_t root = rng.next_u64();
  BoundEstimateT<S> out;
  S total{};
  std::vector<S> z(static_cast<std::size_t>(d), S{});
  for (int b = 0; b < n_batches; ++b) {
    std::vector<S> log_w;
    log_w.reserve(n_particles);
    for (int j = 0; j < n_particles; ++j) {
      Rng pr(root, static_cast<std::uint64_t>(b) * static_cast<std::uint64_t>(n_particles) +
                       static_cast<std::uint64_t>(j));
      for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i)] = q0.mean[i] + stds[i] * pr.normal();
      auto lf = target_log_f(target, std::span<const S>(z));
      auto lq = gaussian_log_prob<S, S>(q0.mean, q0.log_std, std::span<const S>(z));
      log_w.push_back(lf - lq);
    }
    S batch = log_sum_exp(std::span<const S>(log_w)) - std::log(static_cast<double>(n_particles));
    total = (b == 0) ? batch : total + batch;
    out.per_particle_log_w = std::move(log_w);
  }
  out.value = (n_batches == 1) ? total : total / static_cast<double>(n_batches);
  return out;
}

// ---------------------------------------------------------------------------
// DAIS forward pass
// ---------------------------------------------------------------------------

/// Per-particle chain trace.  positions has K+1 slabs of n*d (slab k holds
/// z_k for every particle); momenta slabs are indexed by transition.
template <class S>
struct DaisRunT {
  int n_particles = 0;
  int n_transitions = 0;
  int dim = 0;
  std::vector<S> positions;
  std::vector<S> momenta_in;
  std::vector<S> momenta_out;
  std::vector<S> log_weights;

  std::span<const S> position(int particle, int k) const {
    const std::size_t off =
        (static_cast<std::size_t>(k) * static_cast<std::size_t>(n_particles) + static_cast<std::size_t>(particle)) *
        static_cast<std::size_t>(dim);
    return {positions.data() + off, static_cast<std::size_t>(dim)};
  }
  std::span<S> position(int particle, int k) {
    const std::size_t off =
        (static_cast<std::size_t>(k) * static_cast<std::size_t>(n_particles) + static_cast<std::size_t>(particle)) *
        static_cast<std::size_t>(dim);
    return {positions.data() + off, static_cast<std::size_t>(dim)};
  }
};

using DaisRun = DaisRunT<double>;

struct DaisOptions {
  int n_leapfrog = 1;
  // momentum carried between transitions: v_in,k = damping * v_out,k-1
  // + sqrt(1 - damping^2) * fresh draw.  0 is a full refresh per
  // transition, 1 keeps the initial momentum for the whole chain.  The
  // AR(1) refresh is reversible with respect to N(0, M), so the
  // momentum-ratio weight factors are unchanged.
  double momentum_damping = 0.0;
};

/**
 * Runs N annealed chains without accept/reject steps and assembles the
 * per-particle log importance weights
 *   log f(z_K) - log q0(z_0) + sum_k [log N(v_out_k; 0, M) - log N(v_in_k; 0, M)].
 * Everything is differentiable with respect to the q0 parameters, the
 * schedule, the step sizes, and the mass diagonal when S is ad::Value.
 *
 * The annealed gradient (1-beta_k) grad log q0 + beta_k grad log f reuses
 * the component gradients cached from the previous transition's final
 * evaluation, so each transition costs one fresh gradient pair.
 */
template <class S>
DaisRunT<S> dais_forward(const DiagGaussianT<S>& q0, const TargetDensity& target,
                         std::span<const S> betas, const HmcConfigT<S>& hmc, int n_particles, Rng rng,
                         const DaisOptions& opts = {}) {
  using std::exp;
  using std::sqrt;
  const int d = q0.dim();
  const int n_transitions = static_cast<int>(betas.size()) - 1;
  if (n_transitions < 1) throw std::invalid_argument("dais_forward: need K >= 1");
  if (static_cast<int>(hmc.mass_diag.size()) != d) throw std::invalid_argument("dais_forward: mass dimension mismatch");
  if (n_particles < 1) throw std::invalid_argument("dais_forward: N must be >= 1");

  std::vector<S> stds, inv_var, sqrt_m, inv_m;
  stds.reserve(d);
  inv_var.reserve(d);
  sqrt_m.reserve(d);
  inv_m.reserve(d);
  for (int i = 0; i < d; ++i) {
    stds.push_back(exp(q0.log_std[i]));
    inv_var.push_back(exp(-2.0 * q0.log_std[i]));
    sqrt_m.push_back(sqrt(hmc.mass_diag[i]));
    inv_m.push_back(1.0 / hmc.mass_diag[i]);
  }

  DaisRunT<S> run;
  run.n_particles = n_particles;
  run.n_transitions = n_transitions;
  run.dim = d;
  run.positions.resize(static_cast<std::size_t>(n_transitions + 1) * n_particles * d, S{});
  run.momenta_in.resize(static_cast<std::size_t>(n_transitions) * n_particles * d, S{});
  run.momenta_out.resize(static_cast<std::size_t>(n_transitions) * n_particles * d, S{});
  run.log_weights.reserve(n_particles);

  const std::uint64_t root = rng.next_u64();
  std::vector<S> z(static_cast<std::size_t>(d), S{});
  std::vector<S> v(static_cast<std::size_t>(d), S{});
  std::vector<S> g(static_cast<std::size_t>(d), S{});

  auto momentum_slab = [&](std::vector<S>& slab, int k, int i) {
    return slab.begin() +
           static_cast<std::ptrdiff_t>(
               (static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(n_particles) + static_cast<std::size_t>(i)) *
               static_cast<std::size_t>(d));
  };

  for (int i = 0; i < n_particles; ++i) {
    Rng pr(root, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) z[static_cast<std::size_t>(j)] = q0.mean[j] + stds[j] * pr.normal();
    std::copy(z.begin(), z.end(), run.position(i, 0).begin());

    auto lq0 = gaussian_log_prob<S, S>(q0.mean, q0.log_std, std::span<const S>(z));
    std::vector<S> gq = gaussian_log_prob_grad<S, S>(q0.mean, q0.log_std, std::span<const S>(z));
    std::vector<S> gf = target_grad_log_f(target, std::span<const S>(z));

    const double damping = opts.momentum_damping;
    if (!(damping >= 0.0 && damping <= 1.0)) throw std::invalid_argument("dais_forward: damping outside [0,1]");
    const double fresh_scale = std::sqrt(std::max(0.0, 1.0 - damping * damping));

    S kinetic_terms{};
    bool have_kinetic = false;
    for (int k = 1; k <= n_transitions; ++k) {
      const S& beta = betas[static_cast<std::size_t>(k)];
      const S& eps = hmc.step_for(k - 1);
      if (k == 1) {
        for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] = sqrt_m[static_cast<std::size_t>(j)] * pr.normal();
      } else if (damping == 0.0) {
        for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] = sqrt_m[static_cast<std::size_t>(j)] * pr.normal();
      } else if (damping < 1.0) {
        for (int j = 0; j < d; ++j)
          v[static_cast<std::size_t>(j)] = damping * v[static_cast<std::size_t>(j)] +
                                           (fresh_scale * pr.normal()) * sqrt_m[static_cast<std::size_t>(j)];
      }
      std::copy(v.begin(), v.end(), momentum_slab(run.momenta_in, k, i));

      S kin_in{};
      for (int j = 0; j < d; ++j) {
        auto t = 0.5 * square(v[static_cast<std::size_t>(j)]) * inv_m[static_cast<std::size_t>(j)];
        kin_in = (j == 0) ? t : kin_in + t;
      }

      auto omb = 1.0 - beta;
      // half kick from cached gradients at the current position
      for (int j = 0; j < d; ++j) {
        g[static_cast<std::size_t>(j)] = omb * gq[static_cast<std::size_t>(j)] + beta * gf[static_cast<std::size_t>(j)];
        v[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j)] + 0.5 * eps * g[static_cast<std::size_t>(j)];
      }
      for (int s = 0; s < opts.n_leapfrog; ++s) {
        for (int j = 0; j < d; ++j)
          z[static_cast<std::size_t>(j)] = z[static_cast<std::size_t>(j)] + eps * v[static_cast<std::size_t>(j)] * inv_m[static_cast<std::size_t>(j)];
        gq = gaussian_log_prob_grad<S, S>(q0.mean, q0.log_std, std::span<const S>(z));
        gf = target_grad_log_f(target, std::span<const S>(z));
        const double kick = (s + 1 == opts.n_leapfrog) ? 0.5 : 1.0;
        for (int j = 0; j < d; ++j) {
          g[static_cast<std::size_t>(j)] = omb * gq[static_cast<std::size_t>(j)] + beta * gf[static_cast<std::size_t>(j)];
          if (!std::isfinite(value_of(g[static_cast<std::size_t>(j)]))) {
            std::ostringstream os;
            os << "dais_forward: non-finite gradient (particle " << i << ", transition " << k << ")";
            throw std::runtime_error(os.str());
          }
          v[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j)] + kick * eps * g[static_cast<std::size_t>(j)];
        }
      }

      std::copy(v.begin(), v.end(), momentum_slab(run.momenta_out, k, i));
      std::copy(z.begin(), z.end(), run.position(i, k).begin());

      S kin_out{};
      for (int j = 0; j < d; ++j) {
        auto t = 0.5 * square(v[static_cast<std::size_t>(j)]) * inv_m[static_cast<std::size_t>(j)];
        kin_out = (j == 0) ? t : kin_out + t;
      }
      auto delta = kin_in - kin_out;  // log N(v_out;0,M) - log N(v_in;0,M)
      kinetic_terms = have_kinetic ? kinetic_terms + delta : delta;
      have_kinetic = true;
    }

    auto lf = target_log_f(target, std::span<const S>(z));
    S log_w = lf - lq0 + kinetic_terms;
    if (!std::isfinite(value_of(log_w))) {
      std::ostringstream os;
      os << "dais_forward: non-finite log weight (particle " << i << ", after transition " << n_transitions << ")";
      throw std::runtime_error(os.str());
    }
    run.log_weights.push_back(log_w);
  }
  return run;
}

/// ELBO of a completed run: log-mean-exp of the particle log weights.
template <class S>
BoundEstimateT<S> elbo_dais(const DaisRunT<S>& run, int n_particles) {
  if (static_cast<int>(run.log_weights.size()) != n_particles)
    throw std::invalid_argument("elbo_dais: weight count does not match N");
  BoundEstimateT<S> out;
  out.per_particle_log_w = run.log_weights;
  out.value = log_sum_exp(std::span<const S>(run.log_weights)) - std::log(static_cast<double>(n_particles));
  return out;
}

// ---------------------------------------------------------------------------
// the two algebraic forms of the chain weight
// ---------------------------------------------------------------------------

struct WeightForms {
  double log_w_general = 0.0;     // f(z_K)/q0(z_0) * prod_k B_k/F_k with B_k the reversal
  double log_w_telescoped = 0.0;  // prod_k gamma_{b_k}(z_{k-1}) / gamma_{b_{k-1}}(z_{k-1})
};

/// Evaluates both algebraic forms of the annealed importance weight on a
/// realized chain; they agree identically when B_k is the reversal of F_k.
inline WeightForms ais_weight_two_forms(const Matrix& chain, const DiagGaussian& q0,
                                        const TargetDensity& target, std::span<const double> betas) {
  const int n_transitions = static_cast<int>(betas.size()) - 1;
  if (chain.rows != betas.size()) throw std::invalid_argument("ais_weight_two_forms: chain/schedule mismatch");

  auto log_gamma = [&](double beta, std::span<const double> z) {
    return (1.0 - beta) * log_prob(q0, z) + beta * target.log_f(z);
  };

  WeightForms out;
  const auto z0 = chain.row(0);
  const auto zk = chain.row(static_cast<std::size_t>(n_transitions));
  out.log_w_general = target.log_f(zk) - log_prob(q0, z0);
  for (int k = 1; k <= n_transitions; ++k) {
    const auto z_prev = chain.row(static_cast<std::size_t>(k - 1));
    const auto z_cur = chain.row(static_cast<std::size_t>(k));
    out.log_w_general += log_gamma(betas[static_cast<std::size_t>(k)], z_prev) -
                         log_gamma(betas[static_cast<std::size_t>(k)], z_cur);
    out.log_w_telescoped += log_gamma(betas[static_cast<std::size_t>(k)], z_prev) -
                            log_gamma(betas[static_cast<std::size_t>(k - 1)], z_prev);
  }
  return out;
}

// ---------------------------------------------------------------------------
// moment estimation from DAIS samples
// ---------------------------------------------------------------------------

struct MomentRow {
  int n_samples = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
  double ess = 0.0;
  bool low_ess = false;  // effective sample size < 2; row kept, flagged
};

/// Self-normalized importance estimates of the target mean and standard
/// deviation from the final chain positions, for each prefix size.
inline std::vector<MomentRow> dais_moment_estimator(const DaisRun& run, std::span<const int> prefix_sizes) {
  std::vector<MomentRow> rows;
  rows.reserve(prefix_sizes.size());
  const int d = run.dim;
  for (int n : prefix_sizes) {
    if (n < 1 || n > run.n_particles) throw std::invalid_argument("dais_moment_estimator: prefix size out of range");
    std::span<const double> lw(run.log_weights.data(), static_cast<std::size_t>(n));
    const double lse = log_sum_exp(lw);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::exp(lw[static_cast<std::size_t>(i)] - lse);

    MomentRow row;
    row.n_samples = n;
    row.mean.assign(static_cast<std::size_t>(d), 0.0);
    row.stddev.assign(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto zi = run.position(i, run.n_transitions);
      for (int j = 0; j < d; ++j) row.mean[static_cast<std::size_t>(j)] += w[static_cast<std::size_t>(i)] * zi[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < n; ++i) {
      const auto zi = run.position(i, run.n_transitions);
      for (int j = 0; j < d; ++j)
        row.stddev[static_cast<std::size_t>(j)] += w[static_cast<std::size_t>(i)] * square(zi[static_cast<std::size_t>(j)] - row.mean[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < d; ++j) row.stddev[static_cast<std::size_t>(j)] = std::sqrt(row.stddev[static_cast<std::size_t>(j)]);
    double sum_w2 = 0.0;
    for (double wi : w) sum_w2 += wi * wi;
    row.ess = 1.0 / sum_w2;
    row.low_ess = row.ess < 2.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dais
