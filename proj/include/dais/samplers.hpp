#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dais/distributions.hpp"
#include "dais/linalg.hpp"
#include "dais/rng.hpp"

namespace dais {

/// HMC transition configuration.  mass_diag is the diagonal of M; momenta
/// are drawn from N(0, M) and the kinetic energy is 0.5 * v' M^-1 v.
/// S is double for plain sampling or ad::Value when step sizes and the
/// mass matrix are learned.
template <class S>
struct HmcConfigT {
  std::vector<S> mass_diag;        // length d
  std::vector<S> step_sizes;       // one shared entry or one per transition
  int n_leapfrog = 1;

  const S& step_for(int k) const {
    return step_sizes.size() == 1 ? step_sizes[0] : step_sizes.at(static_cast<std::size_t>(k));
  }
};

using HmcConfig = HmcConfigT<double>;

inline HmcConfig make_hmc_config(int d, double step_size, int n_leapfrog = 1) {
  return HmcConfig{std::vector<double>(d, 1.0), std::vector<double>{step_size}, n_leapfrog};
}

namespace detail {

template <class S>
void check_grad_finite(std::span<const S> g, std::span<const S> z) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(value_of(g[i]))) {
      std::ostringstream os;
      os << "leapfrog: non-finite gradient at position (";
      for (std::size_t j = 0; j < z.size(); ++j) os << (j ? ", " : "") << value_of(z[j]);
      os << ")";
      throw std::runtime_error(os.str());
    }
  }
}

}  // namespace detail

/**
 * Standard leapfrog: half kick, n alternating drifts and kicks, half kick.
 * Deterministic and time-reversible; z and v are updated in place.
 * grad_log_gamma is called at each new position.
 */
template <class S, class GradFn>
void leapfrog_inplace(std::vector<S>& z, std::vector<S>& v, const S& eps, std::span<const S> mass_diag,
                      GradFn&& grad_log_gamma, int n_steps) {
  if (z.size() != v.size() || z.size() != mass_diag.size())
    throw std::invalid_argument("leapfrog: dimension mismatch");
  if (n_steps < 1) throw std::invalid_argument("leapfrog: n_steps must be >= 1");
  const std::size_t d = z.size();

  std::vector<S> g = grad_log_gamma(std::span<const S>(z));
  detail::check_grad_finite<S>(g, z);
  for (std::size_t i = 0; i < d; ++i) v[i] = v[i] + 0.5 * eps * g[i];
  for (int s = 0; s < n_steps; ++s) {
    for (std::size_t i = 0; i < d; ++i) z[i] = z[i] + eps * v[i] / mass_diag[i];
    g = grad_log_gamma(std::span<const S>(z));
    detail::check_grad_finite<S>(g, z);
    const double kick = (s + 1 == n_steps) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < d; ++i) v[i] = v[i] + kick * eps * g[i];
  }
}

template <class S, class GradFn>
std::pair<std::vector<S>, std::vector<S>> leapfrog(std::span<const S> z0, std::span<const S> v0, const S& eps,
                                                   std::span<const S> mass_diag, GradFn&& grad_log_gamma,
                                                   int n_steps) {
  std::vector<S> z(z0.begin(), z0.end());
  std::vector<S> v(v0.begin(), v0.end());
  leapfrog_inplace(z, v, eps, mass_diag, grad_log_gamma, n_steps);
  return {std::move(z), std::move(v)};
}

template <class S>
struct DaisTransitionResult {
  std::vector<S> z;      // new position
  std::vector<S> v_in;   // freshly drawn momentum
  std::vector<S> v_out;  // momentum after the leapfrog steps
};

/**
 * One unadjusted transition of the annealed chain: draw v ~ N(0, M), run
 * leapfrog under gamma_{beta_k}, return the new position and both momenta
 * (the in/out pair feeds the momentum-density ratio in the chain weight).
 * No accept/reject step.
 */
template <class S, class GradFn>
DaisTransitionResult<S> dais_transition_with_grad(std::span<const S> z_prev, const S& eps,
                                                  std::span<const S> mass_diag, GradFn&& grad_log_gamma,
                                                  int n_leapfrog, Rng& rng) {
  using std::exp;
  using std::sqrt;
  const std::size_t d = z_prev.size();
  DaisTransitionResult<S> out;
  out.v_in.reserve(d);
  for (std::size_t i = 0; i < d; ++i) out.v_in.push_back(sqrt(mass_diag[i]) * rng.normal());
  out.z.assign(z_prev.begin(), z_prev.end());
  out.v_out = out.v_in;
  leapfrog_inplace(out.z, out.v_out, eps, mass_diag, grad_log_gamma, n_leapfrog);
  return out;
}

inline DaisTransitionResult<double> dais_transition(std::span<const double> z_prev, double beta_k,
                                                    const HmcConfig& cfg, const AnnealedDensity& annealed,
                                                    Rng& rng) {
  if (!(beta_k > 0.0 && beta_k <= 1.0)) throw std::invalid_argument("dais_transition: beta_k outside (0, 1]");
  AnnealedDensity at = annealed;
  at.beta = beta_k;
  auto grad = [&](std::span<const double> z) { return annealed_grad(at, z); };
  return dais_transition_with_grad<double>(z_prev, cfg.step_for(0), cfg.mass_diag, grad, cfg.n_leapfrog, rng);
}

// ---------------------------------------------------------------------------
// Metropolis-corrected HMC (ground-truth sampler)
// ---------------------------------------------------------------------------

struct MhHmcConfig {
  double eps_hmc = 0.001;
  int n_l = 50;        // leapfrog steps per proposal
  int n_b = 10000;     // burn-in transitions
  int n_e = 10;        // thinning
  int n_t = 10000;     // retained samples
};

inline MhHmcConfig sonar_hmc_config() { return MhHmcConfig{0.001, 50, 10000, 10, 10000}; }
inline MhHmcConfig ionosphere_hmc_config() { return MhHmcConfig{0.001, 50, 10000, 5, 10000}; }

struct MhHmcResult {
  Matrix samples;          // n_t x d
  double acceptance_rate = 0.0;
};

/// MH-corrected HMC with identity mass matrix.  Emits a diagnostic warning
/// (not a failure) if the burn-in acceptance rate drops below 1%.
inline MhHmcResult mh_hmc_sample(const TargetDensity& target, const MhHmcConfig& cfg, Rng rng) {
  if (cfg.n_l < 1 || cfg.n_b < 0 || cfg.n_e < 1 || cfg.n_t < 1)
    throw std::invalid_argument("mh_hmc_sample: invalid configuration");
  const int d = target.dim();
  std::vector<double> z(d, 0.0);
  std::vector<double> ones(d, 1.0);
  double log_f_z = target.log_f(z);

  MhHmcResult result;
  result.samples = Matrix(static_cast<std::size_t>(cfg.n_t), static_cast<std::size_t>(d));

  auto grad = [&](std::span<const double> pos) { return target.grad_log_f(pos); };

  long long accepted = 0, proposed = 0;
  long long burn_accepted = 0;
  int retained = 0;
  const long long total = static_cast<long long>(cfg.n_b) + static_cast<long long>(cfg.n_e) * cfg.n_t;
  for (long long it = 0; it < total; ++it) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    double k0 = 0.0;
    for (double x : v) k0 += 0.5 * x * x;

    auto [z_prop, v_prop] = leapfrog<double>(z, v, cfg.eps_hmc, ones, grad, cfg.n_l);
    double k1 = 0.0;
    for (double x : v_prop) k1 += 0.5 * x * x;
    const double log_f_prop = target.log_f(z_prop);
    const double log_accept = (log_f_prop - k1) - (log_f_z - k0);
    ++proposed;
    if (std::log(rng.uniform()) < log_accept) {
      z = std::move(z_prop);
      log_f_z = log_f_prop;
      ++accepted;
      if (it < cfg.n_b) ++burn_accepted;
    }
    if (it == cfg.n_b - 1 && cfg.n_b > 0) {
      const double rate = static_cast<double>(burn_accepted) / cfg.n_b;
      if (rate < 0.01)
        std::cerr << "mh_hmc_sample: warning: burn-in acceptance rate " << rate << " below 1%\n";
    }
    if (it >= cfg.n_b && (it - cfg.n_b + 1) % cfg.n_e == 0 && retained < cfg.n_t) {
      for (int j = 0; j < d; ++j) result.samples.at(static_cast<std::size_t>(retained), static_cast<std::size_t>(j)) = z[static_cast<std::size_t>(j)];
      ++retained;
    }
  }
  result.acceptance_rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// sampling-importance-resampling
// ---------------------------------------------------------------------------

/// Draws n_draws rows from particles with replacement, with probabilities
/// softmax(log_weights).
inline Matrix sir_resample(const Matrix& particles, std::span<const double> log_weights, int n_draws,
                           Rng& rng) {
  if (particles.rows != log_weights.size() || particles.rows == 0)
    throw std::invalid_argument("sir_resample: weight/particle mismatch");
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw std::runtime_error("sir_resample: all weights are -inf");
  std::vector<double> cdf(log_weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    acc += std::exp(log_weights[i] - lse);
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  Matrix out(static_cast<std::size_t>(n_draws), particles.cols);
  for (int t = 0; t < n_draws; ++t) {
    const double u = rng.uniform();
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t i = std::min(idx, cdf.size() - 1);
    for (std::size_t j = 0; j < particles.cols; ++j) out.at(static_cast<std::size_t>(t), j) = particles.at(i, j);
  }
  return out;
}

}  // namespace dais
