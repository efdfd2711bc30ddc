#include <doctest.h>

#include <cmath>
#include <vector>

#include "dais/distributions.hpp"
#include "dais/inference.hpp"
#include "dais/rng.hpp"

using namespace dais;

TEST_CASE("adam single step magnitude") {
  AdamState s(1, 0.01);
  std::vector<double> p = {0.0};
  std::vector<double> g = {1.0};
  adam_step(s, p, g);
  CHECK(std::fabs(p[0] + 0.01) < 1e-6);
}

TEST_CASE("adam is a fixed point at zero gradient") {
  AdamState s(2, 0.1);
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> zero = {0.0, 0.0};
  for (int i = 0; i < 50; ++i) adam_step(s, p, zero);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
}

TEST_CASE("adam minimizes a quadratic within 200 steps") {
  AdamState s(1, 0.1);
  std::vector<double> p = {1.0};
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g = {2.0 * p[0]};
    adam_step(s, p, g);
  }
  CHECK(std::fabs(p[0]) < 0.1);
}

TEST_CASE("adam rejects non-finite gradients") {
  AdamState s(1, 0.1);
  std::vector<double> p = {0.0};
  const std::vector<double> g = {std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(adam_step(s, p, g), std::runtime_error);
}

TEST_CASE("VI training recovers a gaussian target") {
  GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);
  TrainConfig cfg;
  cfg.method = Method::VI;
  cfg.n_particles = 8;
  cfg.lr = 1e-2;
  cfg.iters = 2000;
  cfg.seed = 1;
  auto res = train_bound(target, cfg, standard_normal(1));
  CHECK(std::fabs(res.q0.mean[0] - 1.0) < 0.05);
  CHECK(std::fabs(std::exp(res.q0.log_std[0]) - 0.5) < 0.05);
  for (double v : res.trace) CHECK(std::isfinite(v));
}

TEST_CASE("DAIS with tiny steps tracks IWVI early in training") {
  GaussianTarget target(make_diag_gaussian({1.0}, {0.0}), 0.0);
  TrainConfig dais_cfg;
  dais_cfg.method = Method::DAIS;
  dais_cfg.n_particles = 4;
  dais_cfg.n_transitions = 1;
  dais_cfg.lr = 1e-2;
  dais_cfg.iters = 40;
  dais_cfg.seed = 3;
  dais_cfg.step_size_init = 1e-8;
  auto dais_res = train_bound(target, dais_cfg, standard_normal(1));

  TrainConfig iw_cfg = dais_cfg;
  iw_cfg.method = Method::IWVI;
  auto iw_res = train_bound(target, iw_cfg, standard_normal(1));

  // same per-iteration noise roots, so traces agree to within the
  // vanishing momentum contribution early on
  for (int i = 0; i < 10; ++i) CHECK(std::fabs(dais_res.trace[i] - iw_res.trace[i]) < 1e-3);
}

TEST_CASE("DAIS training keeps schedule and positivity invariants") {
  GaussianTarget target(make_diag_gaussian({1.0, -1.0}, {std::log(0.5), 0.0}), 0.0);
  TrainConfig cfg;
  cfg.method = Method::DAIS;
  cfg.n_particles = 4;
  cfg.n_transitions = 4;
  cfg.lr = 1e-2;
  cfg.iters = 300;
  cfg.seed = 7;
  auto res = train_bound(target, cfg, standard_normal(2));
  REQUIRE(res.betas.size() == 5);
  CHECK(res.betas.front() == 0.0);
  CHECK(res.betas.back() == 1.0);
  for (std::size_t i = 1; i < res.betas.size(); ++i) CHECK(res.betas[i] > res.betas[i - 1]);
  for (double s : res.hmc.step_sizes) CHECK(s > 0.0);
  for (double m : res.hmc.mass_diag) CHECK(m > 0.0);
  for (double v : res.trace) CHECK(std::isfinite(v));
}

TEST_CASE("i-SIR kernel") {
  SUBCASE("uniform weights pick uniformly among candidates") {
    auto q = standard_normal(1);
    GaussianTarget target(q, 0.0);  // f == q, all weights equal
    const int n_cand = 4, reps = 20000;
    Rng rng(5);
    int kept_current = 0;
    for (int r = 0; r < reps; ++r) {
      std::vector<MscChainState> chains = {MscChainState{{123.0}}};
      // far-out current state still has weight log f - log q = 0
      msc_isir_step(chains, q, target, n_cand, rng);
      if (chains[0].z[0] == 123.0) ++kept_current;
    }
    const double p = 1.0 / n_cand;
    CHECK(std::fabs(kept_current / double(reps) - p) < 4.0 * std::sqrt(p * (1 - p) / reps));
  }

  SUBCASE("mode state is retained against far-tail proposals") {
    // q centered far away: proposals land in the target tail, so the
    // current state at the mode keeps nearly all the weight
    auto q = make_diag_gaussian({8.0}, {std::log(0.25)});
    GaussianTarget target(standard_normal(1), 0.0);
    Rng rng(6);
    int kept = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
      std::vector<MscChainState> chains = {MscChainState{{0.0}}};
      msc_isir_step(chains, q, target, 8, rng);
      if (chains[0].z[0] == 0.0) ++kept;
    }
    CHECK(kept / double(reps) > 0.99);
  }

  SUBCASE("long-run chain mean matches the target") {
    auto q = make_diag_gaussian({0.0}, {std::log(2.0)});
    GaussianTarget target(standard_normal(1), 0.0);
    Rng rng(7);
    std::vector<MscChainState> chains = {MscChainState{{0.0}}};
    double acc = 0.0, accsq = 0.0;
    const int steps = 100000;
    for (int t = 0; t < steps; ++t) {
      msc_isir_step(chains, q, target, 8, rng);
      acc += chains[0].z[0];
      accsq += chains[0].z[0] * chains[0].z[0];
    }
    const double mean = acc / steps;
    // autocorrelation makes the naive stderr optimistic; use a safety factor
    CHECK(std::fabs(mean) < 4.0 * std::sqrt(1.0 / steps) * 5.0);
    CHECK(std::fabs(accsq / steps - 1.0) < 0.05);
  }

  SUBCASE("needs at least two candidates") {
    auto q = standard_normal(1);
    GaussianTarget target(q, 0.0);
    std::vector<MscChainState> chains = {MscChainState{{0.0}}};
    Rng rng(8);
    CHECK_THROWS_AS(msc_isir_step(chains, q, target, 1, rng), std::invalid_argument);
  }
}

TEST_CASE("MSC training") {
  SUBCASE("recovers a gaussian target") {
    GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);
    TrainConfig cfg;
    cfg.method = Method::MSC;
    cfg.n_chains = 1;
    cfg.n_particles = 8;
    cfg.lr = 1e-4;
    cfg.iters = 20000;
    cfg.seed = 2;
    auto res = train_msc(target, cfg, standard_normal(1));
    CHECK(std::fabs(res.q0.mean[0] - 1.0) < 0.1);
    CHECK(std::fabs(std::exp(res.q0.log_std[0]) - 0.5) < 0.1);
  }

  SUBCASE("zero learning rate is a fixed point") {
    GaussianTarget target(standard_normal(2), 0.0);
    TrainConfig cfg;
    cfg.method = Method::MSC;
    cfg.n_chains = 2;
    cfg.n_particles = 4;
    cfg.lr = 0.0;
    cfg.iters = 50;
    cfg.seed = 3;
    auto init = make_diag_gaussian({0.3, -0.3}, {0.1, 0.2});
    auto res = train_msc(target, cfg, init);
    CHECK(res.q0.mean == init.mean);
    CHECK(res.q0.log_std == init.log_std);
  }
}

TEST_CASE("tail averaging reduces the stationary wobble") {
  GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);
  TrainConfig cfg;
  cfg.method = Method::VI;
  cfg.n_particles = 2;
  cfg.lr = 2e-2;
  cfg.iters = 4000;
  cfg.seed = 5;
  auto final_it = train_bound(target, cfg, standard_normal(1));
  cfg.average_tail_fraction = 0.5;
  auto averaged = train_bound(target, cfg, standard_normal(1));
  // both near the optimum, the averaged one at least as close in the mean
  CHECK(std::fabs(averaged.q0.mean[0] - 1.0) < 0.1);
  CHECK(std::fabs(averaged.q0.mean[0] - 1.0) <= std::fabs(final_it.q0.mean[0] - 1.0) + 0.02);
}

TEST_CASE("bound methods converge to a shared gaussian optimum") {
  // forward, reverse and symmetrized KL share the minimizer when the
  // family contains the target
  GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);

  TrainConfig vi;
  vi.method = Method::VI;
  vi.n_particles = 8;
  vi.lr = 1e-2;
  vi.iters = 3000;
  vi.seed = 11;
  auto rvi = train_bound(target, vi, standard_normal(1));
  CHECK(std::fabs(rvi.q0.mean[0] - 1.0) < 0.05);
  CHECK(std::fabs(std::exp(rvi.q0.log_std[0]) - 0.5) < 0.05 * 0.5 + 0.03);

  TrainConfig dais_cfg;
  dais_cfg.method = Method::DAIS;
  dais_cfg.n_particles = 4;
  dais_cfg.n_transitions = 4;
  dais_cfg.lr = 1e-2;
  dais_cfg.iters = 3000;
  dais_cfg.seed = 12;
  auto rdais = train_bound(target, dais_cfg, standard_normal(1));
  CHECK(std::fabs(rdais.q0.mean[0] - 1.0) < 0.05);
  CHECK(std::fabs(std::exp(rdais.q0.log_std[0]) - 0.5) < 0.05);
}
