#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dais/autodiff.hpp"
#include "dais/distributions.hpp"
#include "dais/estimators.hpp"
#include "dais/rng.hpp"
#include "dais/samplers.hpp"

namespace dais {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate)
      : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

/// One Adam step with bias correction; params updated in place.
inline void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

// ---------------------------------------------------------------------------
// training configuration
// ---------------------------------------------------------------------------

enum class Method { VI, IWVI, DAIS, MSC };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::VI: return "vi";
    case Method::IWVI: return "iwvi";
    case Method::DAIS: return "dais";
    case Method::MSC: return "msc";
  }
  return "?";
}

struct TrainConfig {
  Method method = Method::VI;
  int n_particles = 1;       // N
  int n_transitions = 1;     // K, DAIS only
  int n_chains = 1;          // MSC only
  double lr = 1e-2;
  int iters = 1000;
  std::uint64_t seed = 1;

  int n_leapfrog = 1;
  double step_size_init = 0.05;
  bool shared_step_size = false;  // one learnable step width for all transitions
  double mass_init = 1.0;
  double grad_clip = 1e3;
  double momentum_damping = 0.0;
  // tail-averaged iterates (Polyak) instead of the final iterate when > 0;
  // averaging runs over the last fraction of iterations
  double average_tail_fraction = 0.0;
};

struct TrainResult {
  DiagGaussian q0;
  std::vector<double> betas;       // K+1, DAIS only
  HmcConfig hmc;                   // learned step sizes and mass, DAIS only
  std::vector<double> trace;       // bound per iteration (avg log q for MSC)
  long long clip_events = 0;
};

inline double softplus_inverse(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("softplus_inverse: argument must be positive");
  return std::log(std::expm1(y));
}

namespace detail {

inline double clip_global_norm(std::vector<ParamVector*>& params, double max_norm, long long& events) {
  double sq = 0.0;
  for (const ParamVector* p : params)
    for (double g : p->grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (ParamVector* p : params)
      for (double& g : p->grads) g *= scale;
    ++events;
  }
  return norm;
}

}  // namespace detail

/**
 * Adam ascent on the selected lower bound.  For DAIS the parameter set is
 * the q0 mean and log-std, the raw annealing schedule, the per-transition
 * step sizes (softplus-constrained) and the mass log-diagonal; schedule
 * monotonicity and positivity are asserted after every step.
 */
inline TrainResult train_bound(const TargetDensity& target, const TrainConfig& cfg,
                               const DiagGaussian& init_q) {
  if (cfg.method != Method::VI && cfg.method != Method::IWVI && cfg.method != Method::DAIS)
    throw std::invalid_argument("train_bound: method must be VI, IWVI or DAIS");
  if (cfg.method == Method::DAIS && cfg.n_transitions < 1)
    throw std::invalid_argument("train_bound: DAIS needs K >= 1");
  const int d = target.dim();
  if (init_q.dim() != d) throw std::invalid_argument("train_bound: init_q dimension mismatch");

  ParamVector q_mean("q_mean", init_q.mean);
  ParamVector q_log_std("q_log_std", init_q.log_std);
  ParamVector sched_raw("schedule_raw", std::vector<double>(std::max(cfg.n_transitions, 1), 0.0));
  ParamVector step_raw("step_raw",
                       std::vector<double>(cfg.shared_step_size ? 1 : std::max(cfg.n_transitions, 1),
                                           softplus_inverse(cfg.step_size_init)));
  ParamVector mass_raw("mass_log_diag", std::vector<double>(d, std::log(cfg.mass_init)));

  const bool is_dais = cfg.method == Method::DAIS;
  std::vector<ParamVector*> params{&q_mean, &q_log_std};
  if (is_dais) {
    params.push_back(&sched_raw);
    params.push_back(&step_raw);
    params.push_back(&mass_raw);
  }

  std::vector<AdamState> adam;
  adam.reserve(params.size());
  for (ParamVector* p : params) adam.emplace_back(p->size(), cfg.lr);

  TrainResult result;
  result.trace.reserve(cfg.iters);

  const int avg_start = cfg.average_tail_fraction > 0.0
                            ? cfg.iters - static_cast<int>(cfg.average_tail_fraction * cfg.iters)
                            : cfg.iters;
  std::vector<std::vector<double>> avg_acc(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) avg_acc[pi].assign(params[pi]->size(), 0.0);
  long long avg_count = 0;

  ad::Tape tape;
  for (int it = 0; it < cfg.iters; ++it) {
    tape.clear();
    DiagGaussianT<ad::Value> qv{make_leaves(tape, q_mean), make_leaves(tape, q_log_std)};
    Rng it_rng(cfg.seed, 0x5eed0000ull + static_cast<std::uint64_t>(it));

    ad::Value bound;
    std::vector<ad::Value> raw_leaves, step_leaves, mass_leaves;
    if (cfg.method == Method::VI) {
      bound = elbo_vi(qv, target, cfg.n_particles, it_rng).value;
    } else if (cfg.method == Method::IWVI) {
      bound = elbo_iwvi(qv, target, cfg.n_particles, 1, it_rng).value;
    } else {
      raw_leaves = make_leaves(tape, sched_raw);
      step_leaves = make_leaves(tape, step_raw);
      mass_leaves = make_leaves(tape, mass_raw);
      auto betas = schedule_betas<ad::Value>(raw_leaves);
      HmcConfigT<ad::Value> hmc;
      hmc.n_leapfrog = cfg.n_leapfrog;
      hmc.step_sizes.reserve(step_leaves.size());
      for (const auto& s : step_leaves) hmc.step_sizes.push_back(softplus(s));
      hmc.mass_diag.reserve(mass_leaves.size());
      for (const auto& m : mass_leaves) hmc.mass_diag.push_back(exp(m));

      DaisOptions opts;
      opts.n_leapfrog = cfg.n_leapfrog;
      opts.momentum_damping = cfg.momentum_damping;
      auto run = dais_forward<ad::Value>(qv, target, betas, hmc, cfg.n_particles, it_rng, opts);
      bound = elbo_dais<ad::Value>(run, cfg.n_particles).value;

      // constraint checks: strictly increasing schedule, positive steps/mass
      for (std::size_t k = 1; k < betas.size(); ++k)
        if (!(betas[k].value() > betas[k - 1].value()))
          throw std::runtime_error("train_bound: schedule not strictly increasing at iteration " + std::to_string(it));
      for (const auto& s : hmc.step_sizes)
        if (!(s.value() > 0.0)) throw std::runtime_error("train_bound: non-positive step size");
      for (const auto& m : hmc.mass_diag)
        if (!(m.value() > 0.0)) throw std::runtime_error("train_bound: non-positive mass entry");
    }

    if (!std::isfinite(bound.value()))
      throw std::runtime_error("train_bound: non-finite bound at iteration " + std::to_string(it));
    result.trace.push_back(bound.value());

    const ad::Value loss = -bound;
    tape.backward(loss);
    for (ParamVector* p : params) p->zero_grads();
    harvest_grads(qv.mean, q_mean);
    harvest_grads(qv.log_std, q_log_std);
    if (is_dais) {
      harvest_grads(raw_leaves, sched_raw);
      harvest_grads(step_leaves, step_raw);
      harvest_grads(mass_leaves, mass_raw);
    }
    detail::clip_global_norm(params, cfg.grad_clip, result.clip_events);
    for (std::size_t pi = 0; pi < params.size(); ++pi)
      adam_step(adam[pi], params[pi]->values, params[pi]->grads);

    if (it >= avg_start) {
      for (std::size_t pi = 0; pi < params.size(); ++pi)
        for (std::size_t j = 0; j < params[pi]->size(); ++j) avg_acc[pi][j] += params[pi]->values[j];
      ++avg_count;
    }
  }

  if (avg_count > 0) {
    for (std::size_t pi = 0; pi < params.size(); ++pi)
      for (std::size_t j = 0; j < params[pi]->size(); ++j)
        params[pi]->values[j] = avg_acc[pi][j] / static_cast<double>(avg_count);
  }

  result.q0 = DiagGaussian{q_mean.values, q_log_std.values};
  if (is_dais) {
    result.betas = schedule_betas<double>(sched_raw.values);
    result.hmc.n_leapfrog = cfg.n_leapfrog;
    result.hmc.step_sizes.clear();
    for (double s : step_raw.values) result.hmc.step_sizes.push_back(softplus(s));
    result.hmc.mass_diag.clear();
    for (double m : mass_raw.values) result.hmc.mass_diag.push_back(std::exp(m));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Markovian score climbing with the i-SIR kernel
// ---------------------------------------------------------------------------

struct MscChainState {
  std::vector<double> z;
};

/**
 * One i-SIR move per chain: the current state joins N-1 fresh proposals
 * from q, and the next state is drawn from the candidates with
 * probabilities softmax(log f - log q).
 */
inline void msc_isir_step(std::vector<MscChainState>& chains, const DiagGaussian& q,
                          const TargetDensity& target, int n_candidates, Rng& rng) {
  if (n_candidates < 2) throw std::invalid_argument("msc_isir_step: need at least 2 candidates");
  const int d = q.dim();
  std::vector<std::vector<double>> cand(static_cast<std::size_t>(n_candidates));
  std::vector<double> log_w(static_cast<std::size_t>(n_candidates));
  for (auto& chain : chains) {
    cand[0] = chain.z;
    for (int j = 1; j < n_candidates; ++j) cand[static_cast<std::size_t>(j)] = sample_reparam(q, rng).first;
    for (int j = 0; j < n_candidates; ++j) {
      const auto& zj = cand[static_cast<std::size_t>(j)];
      log_w[static_cast<std::size_t>(j)] = target.log_f(zj) - log_prob(q, zj);
    }
    const double lse = log_sum_exp(std::span<const double>(log_w));
    if (!std::isfinite(lse)) throw std::runtime_error("msc_isir_step: all candidate weights are -inf");
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = n_candidates - 1;
    for (int j = 0; j < n_candidates; ++j) {
      acc += std::exp(log_w[static_cast<std::size_t>(j)] - lse);
      if (u <= acc) {
        pick = j;
        break;
      }
    }
    chain.z = cand[static_cast<std::size_t>(pick)];
  }
  (void)d;
}

/**
 * Score ascent at the i-SIR chain states: each iteration advances every
 * chain one kernel step and moves the parameters along
 * (1/n_chains) sum_c grad log q(z_c) with plain gradient ascent.
 */
inline TrainResult train_msc(const TargetDensity& target, const TrainConfig& cfg, const DiagGaussian& init_q) {
  if (cfg.method != Method::MSC) throw std::invalid_argument("train_msc: method must be MSC");
  if (cfg.n_chains < 1) throw std::invalid_argument("train_msc: n_chains must be >= 1");
  const int d = target.dim();

  ParamVector q_mean("q_mean", init_q.mean);
  ParamVector q_log_std("q_log_std", init_q.log_std);
  std::vector<ParamVector*> params{&q_mean, &q_log_std};

  Rng rng(cfg.seed, 0x15c0ull);
  std::vector<MscChainState> chains(static_cast<std::size_t>(cfg.n_chains));
  for (auto& c : chains) c.z = sample_reparam(init_q, rng).first;

  TrainResult result;
  result.trace.reserve(cfg.iters);
  for (int it = 0; it < cfg.iters; ++it) {
    DiagGaussian q{q_mean.values, q_log_std.values};
    msc_isir_step(chains, q, target, cfg.n_particles, rng);

    q_mean.zero_grads();
    q_log_std.zero_grads();
    double avg_log_q = 0.0;
    for (const auto& c : chains) {
      avg_log_q += log_prob(q, c.z);
      for (int j = 0; j < d; ++j) {
        const double inv_var = std::exp(-2.0 * q.log_std[static_cast<std::size_t>(j)]);
        const double diff = c.z[static_cast<std::size_t>(j)] - q.mean[static_cast<std::size_t>(j)];
        q_mean.grads[static_cast<std::size_t>(j)] += diff * inv_var;
        q_log_std.grads[static_cast<std::size_t>(j)] += diff * diff * inv_var - 1.0;
      }
    }
    avg_log_q /= cfg.n_chains;
    if (!std::isfinite(avg_log_q))
      throw std::runtime_error("train_msc: non-finite chain log density at iteration " + std::to_string(it));
    result.trace.push_back(avg_log_q);

    const double inv_chains = 1.0 / cfg.n_chains;
    for (ParamVector* p : params)
      for (double& g : p->grads) g *= inv_chains;
    detail::clip_global_norm(params, cfg.grad_clip, result.clip_events);
    for (std::size_t j = 0; j < q_mean.size(); ++j) q_mean.values[j] += cfg.lr * q_mean.grads[j];
    for (std::size_t j = 0; j < q_log_std.size(); ++j) q_log_std.values[j] += cfg.lr * q_log_std.grads[j];
  }

  result.q0 = DiagGaussian{q_mean.values, q_log_std.values};
  return result;
}

}  // namespace dais
