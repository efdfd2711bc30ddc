#include <doctest.h>

#include <cmath>
#include <vector>

#include "dais/distributions.hpp"
#include "dais/estimators.hpp"
#include "dais/rng.hpp"

using namespace dais;

TEST_CASE("annealing schedule construction") {
  AnnealSchedule sched(4);
  auto betas = sched.betas();
  REQUIRE(betas.size() == 5);
  CHECK(betas.front() == 0.0);
  CHECK(betas.back() == 1.0);
  for (std::size_t i = 1; i < betas.size(); ++i) CHECK(betas[i] > betas[i - 1]);
  // uniform raw gives equally spaced betas
  for (std::size_t i = 0; i < betas.size(); ++i) CHECK(betas[i] == doctest::Approx(i / 4.0).epsilon(1e-15));

  // random raw keeps the invariants
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> raw(6);
    for (auto& r : raw) r = 3.0 * rng.normal();
    auto b = schedule_betas<double>(raw);
    CHECK(b.front() == 0.0);
    CHECK(b.back() == 1.0);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] > b[i - 1]);
  }
}

TEST_CASE("elbo_vi exact cases") {
  // target equal to q0 and normalized: every sample gives exactly zero
  auto q0 = make_diag_gaussian({0.4, -0.2}, {0.1, -0.3});
  GaussianTarget same(q0, 0.0);
  auto est = elbo_vi<double>(q0, same, 8, Rng(1));
  for (double w : est.per_particle_log_w) CHECK(w == doctest::Approx(0.0).epsilon(1e-12));

  // constant ratio c * q0: estimate equals log c exactly
  GaussianTarget scaled(q0, 2.0);
  auto est2 = elbo_vi<double>(q0, scaled, 4, Rng(2));
  CHECK(est2.value == doctest::Approx(2.0).epsilon(1e-12));

  // N(0,1) vs normalized N(1,1): mean over many samples is -KL = -0.5
  GaussianTarget shifted(make_diag_gaussian({1.0}, {0.0}), 0.0);
  const int n = 100000;
  auto est3 = elbo_vi<double>(standard_normal(1), shifted, n, Rng(3));
  double var = 0.0;
  for (double w : est3.per_particle_log_w) var += square(w - est3.value);
  var /= (n - 1);
  CHECK(std::fabs(est3.value + 0.5) < 3.0 * std::sqrt(var / n));
}

TEST_CASE("elbo_iwvi reductions and monotonicity") {
  auto q0 = standard_normal(1);
  GaussianTarget target(make_diag_gaussian({1.0}, {0.0}), 0.0);

  // N=1 with a shared generator state reproduces elbo_vi
  {
    Rng a(7), b(7);
    auto vi = elbo_vi<double>(q0, target, 6, a);
    auto iw = elbo_iwvi<double>(q0, target, 1, 6, b);
    CHECK(iw.value == doctest::Approx(vi.value).epsilon(1e-15));
  }

  // constant weights: estimate equals log c for every N
  GaussianTarget scaled(q0, 2.0);
  for (int n : {1, 3, 16}) {
    auto est = elbo_iwvi<double>(q0, scaled, n, 2, Rng(9));
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-12));
  }

  // N=16 between -0.5 and 0, and above the N=1 bound on paired seeds
  const int batches = 2000;
  Rng a(11), b(11);
  auto e1 = elbo_iwvi<double>(q0, target, 1, batches, a);
  auto e16 = elbo_iwvi<double>(q0, target, 16, batches, b);
  CHECK(e16.value > -0.5);
  CHECK(e16.value < 0.0);
  CHECK(e16.value > e1.value);
}

TEST_CASE("dais_forward zero-step collapse and determinism") {
  auto q0 = make_diag_gaussian({0.2, -0.1}, {0.1, 0.0});
  GaussianTarget target(make_diag_gaussian({1.0, 0.5}, {std::log(0.7), 0.0}), 0.0);

  for (int n : {1, 4}) {
    for (int k : {2, 16}) {
      AnnealSchedule sched(k);
      auto betas = sched.betas();
      HmcConfigT<double> hmc;
      hmc.mass_diag = {1.0, 1.0};
      hmc.step_sizes = std::vector<double>(k, 0.0);
      auto run = dais_forward<double>(q0, target, betas, hmc, n, Rng(33));
      auto bound = elbo_dais<double>(run, n);
      auto iw = elbo_iwvi<double>(q0, target, n, 1, Rng(33));
      CHECK(std::fabs(bound.value - iw.value) < 1e-9);
      // zero-step chains keep their initial position
      for (int i = 0; i < n; ++i) {
        auto z0 = run.position(i, 0);
        auto zk = run.position(i, k);
        for (int j = 0; j < 2; ++j) CHECK(z0[j] == zk[j]);
      }
    }
  }

  // bit-exact reproducibility
  AnnealSchedule sched(4);
  auto betas = sched.betas();
  HmcConfigT<double> hmc;
  hmc.mass_diag = {1.0, 1.0};
  hmc.step_sizes = std::vector<double>(4, 0.05);
  auto r1 = dais_forward<double>(q0, target, betas, hmc, 3, Rng(5));
  auto r2 = dais_forward<double>(q0, target, betas, hmc, 3, Rng(5));
  CHECK(r1.log_weights == r2.log_weights);
  CHECK(r1.positions == r2.positions);
}

TEST_CASE("dais bound is near zero when q0 equals the normalized target") {
  auto q0 = standard_normal(2);
  GaussianTarget target(q0, 0.0);
  AnnealSchedule sched(8);
  auto betas = sched.betas();
  HmcConfigT<double> hmc;
  hmc.mass_diag = {1.0, 1.0};
  // small steps: the O(eps^4) integrator bias must sit below the MC noise
  hmc.step_sizes = std::vector<double>(8, 0.02);

  const int reps = 2000;
  double acc = 0.0, accsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto run = dais_forward<double>(q0, target, betas, hmc, 4, Rng(17, static_cast<std::uint64_t>(r)));
    const double b = elbo_dais<double>(run, 4).value;
    acc += b;
    accsq += b * b;
  }
  const double mean = acc / reps;
  const double se = std::sqrt(std::max(0.0, accsq / reps - mean * mean) / reps);
  // on the degenerate path every gamma ratio is constant, so the bound is 0
  CHECK(std::fabs(mean) < 3.0 * se + 1e-12);
}

TEST_CASE("elbo_dais aggregation arithmetic") {
  DaisRun run;
  run.n_particles = 2;
  run.n_transitions = 1;
  run.dim = 1;
  run.log_weights = {0.0, std::log(3.0)};
  CHECK(elbo_dais<double>(run, 2).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  run.log_weights = {-1.7, -1.7, -1.7};
  run.n_particles = 3;
  CHECK(elbo_dais<double>(run, 3).value == doctest::Approx(-1.7).epsilon(1e-12));

  run.log_weights = {0.42};
  run.n_particles = 1;
  CHECK(elbo_dais<double>(run, 1).value == doctest::Approx(0.42).epsilon(1e-15));
}

TEST_CASE("the two weight forms agree on random chains") {
  Rng rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.uniform_int(5));
    const int k = 1 + static_cast<int>(rng.uniform_int(16));
    std::vector<double> mean(d), log_std(d);
    for (auto& m : mean) m = rng.normal();
    for (auto& s : log_std) s = 0.3 * rng.normal();
    auto q0 = make_diag_gaussian(mean, log_std);
    GaussianTarget target(make_diag_gaussian(std::vector<double>(d, 1.0), std::vector<double>(d, -0.5)),
                          0.8);
    std::vector<double> raw(k);
    for (auto& r : raw) r = rng.normal();
    auto betas = schedule_betas<double>(raw);
    Matrix chain(k + 1, d);
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j < d; ++j) chain.at(i, j) = 2.0 * rng.normal();
    auto forms = ais_weight_two_forms(chain, q0, target, betas);
    CHECK(std::fabs(forms.log_w_general - forms.log_w_telescoped) < 1e-10);
  }
}

TEST_CASE("weight forms degenerate cases") {
  // q0 equal to the target: telescoped weight is exactly log Z
  auto q0 = standard_normal(2);
  GaussianTarget target(q0, 1.3);
  auto betas = AnnealSchedule(4).betas();
  Rng rng(2);
  Matrix chain(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) chain.at(i, j) = rng.normal();
  auto forms = ais_weight_two_forms(chain, q0, target, betas);
  CHECK(forms.log_w_telescoped == doctest::Approx(1.3).epsilon(1e-12));

  // K=1: weight reduces to log f(z0) - log q0(z0)
  GaussianTarget t2(make_diag_gaussian({0.5}, {0.0}), 0.0);
  auto q1 = standard_normal(1);
  Matrix single(2, 1);
  single.at(0, 0) = 0.3;
  single.at(1, 0) = 0.3;
  auto b1 = AnnealSchedule(1).betas();
  auto f2 = ais_weight_two_forms(single, q1, t2, b1);
  const std::vector<double> z = {0.3};
  CHECK(f2.log_w_telescoped == doctest::Approx(t2.log_f(z) - log_prob(q1, z)).epsilon(1e-12));
}

TEST_CASE("moment estimator") {
  SUBCASE("two equally weighted particles at 0 and 2") {
    DaisRun run;
    run.n_particles = 2;
    run.n_transitions = 0;
    run.dim = 1;
    run.positions = {0.0, 2.0};
    run.log_weights = {0.5, 0.5};
    const int sizes[2] = {1, 2};
    auto rows = dais_moment_estimator(run, sizes);
    CHECK(rows[0].stddev[0] == 0.0);  // single particle
    CHECK(rows[1].mean[0] == doctest::Approx(1.0));
    CHECK(rows[1].stddev[0] == doctest::Approx(1.0));
    CHECK(rows[0].low_ess);
    CHECK(!rows[1].low_ess);
  }

  SUBCASE("consistency on a gaussian target") {
    auto q0 = make_diag_gaussian({0.3}, {0.1});
    GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);
    auto betas = AnnealSchedule(4).betas();
    HmcConfigT<double> hmc;
    hmc.mass_diag = {1.0};
    hmc.step_sizes = std::vector<double>(4, 0.2);
    auto run = dais_forward<double>(q0, target, betas, hmc, 20000, Rng(4));
    const int sizes[1] = {20000};
    auto rows = dais_moment_estimator(run, sizes);
    const double se_mean = 0.5 / std::sqrt(rows[0].ess);
    CHECK(std::fabs(rows[0].mean[0] - 1.0) < 4.0 * se_mean + 0.02);
    CHECK(std::fabs(rows[0].stddev[0] - 0.5) < 0.05);
  }
}

TEST_CASE("dot_external matches the copying dot") {
  ad::Tape tape;
  std::vector<double> w = {0.5, -1.5, 2.0};
  std::vector<ad::Value> xs = {tape.leaf(1.0), tape.leaf(-2.0), tape.leaf(0.3)};
  ad::Value a = ad::dot(std::span<const ad::Value>(xs), std::span<const double>(w));
  ad::Value b = ad::dot_external(std::span<const ad::Value>(xs), std::span<const double>(w));
  CHECK(a.value() == b.value());
  ad::Value out = ad::square(a) + ad::square(b);
  tape.backward(out);
  // both nodes contribute the same adjoints
  CHECK(xs[0].adjoint() == doctest::Approx(2.0 * a.value() * 0.5 * 2.0));
}

TEST_CASE("partial momentum refresh keeps gradients and the collapse property") {
  GaussianTarget target(make_diag_gaussian({1.0, 0.0}, {std::log(0.6), 0.1}), 0.0);
  ParamVector mean("q_mean", {0.1, -0.2});
  ParamVector log_std("q_log_std", {0.05, -0.1});
  ParamVector raw("schedule_raw", {0.1, -0.2, 0.0});
  ParamVector steps("step_raw", {-2.0});
  ParamVector mass("mass_log_diag", {0.1, -0.1});
  DaisOptions opts;
  opts.momentum_damping = 0.7;
  auto f = [&](ad::Tape&, const std::vector<std::vector<ad::Value>>& leaves) {
    DiagGaussianT<ad::Value> q{leaves[0], leaves[1]};
    auto betas = schedule_betas<ad::Value>(leaves[2]);
    HmcConfigT<ad::Value> hmc;
    hmc.step_sizes.push_back(ad::softplus(leaves[3][0]));
    for (const auto& m : leaves[4]) hmc.mass_diag.push_back(ad::exp(m));
    auto run = dais_forward<ad::Value>(q, target, betas, hmc, 2, Rng(13), opts);
    return elbo_dais<ad::Value>(run, 2).value;
  };
  CHECK(finite_diff_check(f, {&mean, &log_std, &raw, &steps, &mass}, 1e-6) < 1e-5);

  // zero steps still collapse to IWVI under any damping
  auto q0 = make_diag_gaussian({0.2, -0.1}, {0.1, 0.0});
  auto betas = AnnealSchedule(4).betas();
  HmcConfigT<double> hmc;
  hmc.mass_diag = {1.0, 1.0};
  hmc.step_sizes = std::vector<double>(4, 0.0);
  auto run = dais_forward<double>(q0, target, betas, hmc, 4, Rng(33), opts);
  auto iw = elbo_iwvi<double>(q0, target, 4, 1, Rng(33));
  CHECK(std::fabs(elbo_dais<double>(run, 4).value - iw.value) < 1e-9);
}

TEST_CASE("dais gradients match finite differences at K=4, d=3") {
  GaussianTarget target(make_diag_gaussian({0.5, -0.5, 1.0}, {0.0, std::log(0.5), 0.2}), 0.0);
  ParamVector mean("q_mean", {0.1, 0.0, -0.1});
  ParamVector log_std("q_log_std", {0.0, 0.1, -0.1});
  ParamVector raw("schedule_raw", {0.0, 0.2, -0.1, 0.1});
  ParamVector steps("step_raw", {-2.0, -2.5, -2.2, -1.9});
  ParamVector mass("mass_log_diag", {0.0, 0.2, -0.2});
  auto f = [&](ad::Tape& t, const std::vector<std::vector<ad::Value>>& leaves) {
    DiagGaussianT<ad::Value> q{leaves[0], leaves[1]};
    auto betas = schedule_betas<ad::Value>(leaves[2]);
    HmcConfigT<ad::Value> hmc;
    for (const auto& s : leaves[3]) hmc.step_sizes.push_back(ad::softplus(s));
    for (const auto& m : leaves[4]) hmc.mass_diag.push_back(ad::exp(m));
    auto run = dais_forward<ad::Value>(q, target, betas, hmc, 2, Rng(21));
    return elbo_dais<ad::Value>(run, 2).value;
  };
  CHECK(finite_diff_check(f, {&mean, &log_std, &raw, &steps, &mass}, 1e-6) < 1e-5);
}

TEST_CASE("lower bound property on a normalized target") {
  // mean over many batches stays below log Z = 0 within noise
  auto q0 = standard_normal(1);
  GaussianTarget target(make_diag_gaussian({1.0}, {std::log(0.5)}), 0.0);
  const int reps = 3000;

  auto run_mean = [&](auto&& f) {
    double acc = 0.0, accsq = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double v = f(r);
      acc += v;
      accsq += v * v;
    }
    const double m = acc / reps;
    return std::pair<double, double>{m, std::sqrt(std::max(0.0, accsq / reps - m * m) / reps)};
  };

  auto [vi_m, vi_se] = run_mean([&](int r) { return elbo_vi<double>(q0, target, 1, Rng(100 + r)).value; });
  CHECK(vi_m <= 3.0 * vi_se);

  auto betas = AnnealSchedule(8).betas();
  HmcConfigT<double> hmc;
  hmc.mass_diag = {1.0};
  hmc.step_sizes = std::vector<double>(8, 0.05);
  auto [da_m, da_se] = run_mean([&](int r) {
    auto run = dais_forward<double>(q0, target, betas, hmc, 4, Rng(500 + r));
    return elbo_dais<double>(run, 4).value;
  });
  CHECK(da_m <= 3.0 * da_se);
}
