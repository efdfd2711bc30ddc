#include <doctest.h>

#include <cmath>
#include <vector>

#include "dais/autodiff.hpp"
#include "dais/distributions.hpp"
#include "dais/estimators.hpp"
#include "dais/rng.hpp"

using dais::ParamVector;
using dais::Rng;
using dais::ad::Tape;
using dais::ad::Value;

TEST_CASE("primitive forward values") {
  Tape t;
  Value a = t.leaf(0.0), b = t.leaf(0.0);
  const Value xs[2] = {a, b};
  CHECK(dais::ad::log_sum_exp(std::span<const Value>(xs, 2)).value() == doctest::Approx(std::log(2.0)));
  CHECK(dais::ad::sigmoid(t.leaf(0.0)).value() == doctest::Approx(0.5));
  CHECK(dais::ad::softplus(t.leaf(0.0)).value() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("product rule at x = 3") {
  Tape t;
  Value x = t.leaf(3.0);
  Value y = x * x;
  t.backward(y);
  CHECK(x.adjoint() == doctest::Approx(6.0));
}

TEST_CASE("backward of a sum is all ones") {
  Tape t;
  std::vector<Value> mu = {t.leaf(0.3), t.leaf(-1.0), t.leaf(2.5)};
  Value s = dais::ad::sum(mu);
  t.backward(s);
  for (const auto& m : mu) CHECK(m.adjoint() == doctest::Approx(1.0));
}

TEST_CASE("gaussian log density gradient wrt mean") {
  // d/dmu log N(x; mu, 1) at x=1, mu=0 equals 1; checked against central differences
  ParamVector mu("mu", {0.0});
  auto f = [](Tape&, std::span<const Value> leaves) {
    const double x = 1.0;
    Value u = x - leaves[0];
    return -0.5 * dais::kLog2Pi - 0.5 * dais::ad::square(u);
  };
  Tape t;
  auto leaves = dais::make_leaves(t, mu);
  Value out = f(t, leaves);
  t.backward(out);
  CHECK(leaves[0].adjoint() == doctest::Approx(1.0));
  CHECK(dais::finite_diff_check(f, mu, 1e-6) < 1e-8);
}

TEST_CASE("double backward without a new forward pass throws") {
  Tape t;
  Value x = t.leaf(2.0);
  Value y = dais::ad::square(x);
  t.backward(y);
  CHECK_THROWS_AS(t.backward(y), std::logic_error);
  // growing the graph counts as a new forward pass
  Value z = y * x;
  t.backward(z);
  CHECK(x.adjoint() == doctest::Approx(3.0 * 4.0));
}

TEST_CASE("domain errors") {
  Tape t;
  CHECK_THROWS_AS(dais::ad::log(t.leaf(-1.0)), std::domain_error);
  CHECK_THROWS_AS(dais::ad::log(t.leaf(0.0)), std::domain_error);
  CHECK_THROWS_AS(t.leaf(1.0) / t.leaf(0.0), std::domain_error);
}

TEST_CASE("log_sum_exp exact on constant vectors and softmax gradient") {
  Tape t;
  const int n = 7;
  std::vector<Value> xs;
  for (int i = 0; i < n; ++i) xs.push_back(t.leaf(-3.7));
  Value lse = dais::ad::log_sum_exp(xs);
  CHECK(lse.value() == doctest::Approx(-3.7 + std::log(double(n))).epsilon(1e-15));

  t.clear();
  xs.clear();
  Rng rng(7);
  for (int i = 0; i < n; ++i) xs.push_back(t.leaf(rng.normal() * 3.0));
  lse = dais::ad::log_sum_exp(xs);
  t.backward(lse);
  double total = 0.0;
  for (const auto& x : xs) {
    CHECK(x.adjoint() >= 0.0);
    total += x.adjoint();
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("finite_diff_check on square") {
  ParamVector p("x", {2.0});
  auto f = [](Tape&, std::span<const Value> leaves) { return dais::ad::square(leaves[0]); };
  CHECK(dais::finite_diff_check(f, p, 1e-6) < 1e-6);
  CHECK_THROWS_AS(dais::finite_diff_check(f, p, 1e-2), std::invalid_argument);
}

// random expressions over the primitive set, gradient vs central differences
TEST_CASE("random composed expressions match finite differences") {
  Rng rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    const int n_leaves = 2 + static_cast<int>(rng.uniform_int(3));
    std::vector<double> init;
    for (int i = 0; i < n_leaves; ++i) init.push_back(rng.normal());
    ParamVector p("x", init);
    const std::uint64_t expr_seed = rng.next_u64();

    auto f = [&](Tape& t, std::span<const Value> leaves) {
      Rng er(expr_seed);
      std::vector<Value> pool(leaves.begin(), leaves.end());
      for (int step = 0; step < 12; ++step) {
        const Value a = pool[er.uniform_int(pool.size())];
        const Value b = pool[er.uniform_int(pool.size())];
        Value out;
        switch (er.uniform_int(10)) {
          case 0: out = a + b; break;
          case 1: out = a - b; break;
          case 2: out = a * b; break;
          case 3: out = a / (dais::ad::softplus(b) + 1.0); break;
          case 4: out = dais::ad::exp(a * 0.3); break;
          case 5: out = dais::ad::log(dais::ad::softplus(a) + 0.5); break;
          case 6: out = dais::ad::sqrt(dais::ad::softplus(a) + 0.5); break;
          case 7: out = dais::ad::sigmoid(a); break;
          case 8: out = dais::ad::square(dais::ad::sigmoid(a) - 0.3); break;
          default: out = dais::ad::log_sum_exp_pair(a, -b); break;
        }
        pool.push_back(out);
      }
      Value acc = pool[leaves.size()];
      for (std::size_t i = leaves.size() + 1; i < pool.size(); ++i)
        acc = acc + pool[i] * (1.0 / static_cast<double>(i));
      return dais::ad::softplus(acc);
    };
    CHECK(dais::finite_diff_check(f, p, 1e-6) < 1e-5);
  }
}

TEST_CASE("one-sample VI objective gradient matches finite differences") {
  // fixed noise, q0 learnable, gaussian target
  dais::GaussianTarget target(dais::make_diag_gaussian({1.0, -0.5}, {std::log(0.5), 0.2}), 0.0);
  ParamVector mean("q_mean", {0.2, 0.1});
  ParamVector log_std("q_log_std", {-0.1, 0.3});
  const std::uint64_t noise_seed = 99;
  auto f = [&](Tape& t, const std::vector<std::vector<Value>>& leaves) {
    dais::DiagGaussianT<Value> q{leaves[0], leaves[1]};
    return dais::elbo_vi(q, target, 3, Rng(noise_seed)).value;
  };
  CHECK(dais::finite_diff_check(f, {&mean, &log_std}, 1e-6) < 1e-5);
}

TEST_CASE("IWVI objective gradient matches finite differences (N=4)") {
  dais::GaussianTarget target(dais::make_diag_gaussian({0.7}, {std::log(0.8)}), 0.0);
  ParamVector mean("q_mean", {0.0});
  ParamVector log_std("q_log_std", {0.0});
  auto f = [&](Tape& t, const std::vector<std::vector<Value>>& leaves) {
    dais::DiagGaussianT<Value> q{leaves[0], leaves[1]};
    return dais::elbo_iwvi(q, target, 4, 1, Rng(5)).value;
  };
  CHECK(dais::finite_diff_check(f, {&mean, &log_std}, 1e-6) < 1e-5);
}

TEST_CASE("one-sample DAIS objective gradient matches finite differences (K=2, d=2)") {
  dais::GaussianTarget target(dais::make_diag_gaussian({1.0, 0.0}, {std::log(0.6), 0.1}), 0.0);
  ParamVector mean("q_mean", {0.1, -0.2});
  ParamVector log_std("q_log_std", {0.05, -0.1});
  ParamVector raw("schedule_raw", {0.1, -0.2});
  ParamVector steps("step_raw", {-2.0, -2.3});
  ParamVector mass("mass_log_diag", {0.1, -0.1});
  auto f = [&](Tape& t, const std::vector<std::vector<Value>>& leaves) {
    dais::DiagGaussianT<Value> q{leaves[0], leaves[1]};
    auto betas = dais::schedule_betas<Value>(leaves[2]);
    dais::HmcConfigT<Value> hmc;
    for (const auto& s : leaves[3]) hmc.step_sizes.push_back(dais::ad::softplus(s));
    for (const auto& m : leaves[4]) hmc.mass_diag.push_back(dais::ad::exp(m));
    auto run = dais::dais_forward<Value>(q, target, betas, hmc, 1, Rng(11));
    return dais::elbo_dais<Value>(run, 1).value;
  };
  CHECK(dais::finite_diff_check(f, {&mean, &log_std, &raw, &steps, &mass}, 1e-6) < 1e-5);
}
