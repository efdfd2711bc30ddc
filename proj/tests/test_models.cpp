#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dais/models.hpp"
#include "dais/rng.hpp"

using namespace dais;

TEST_CASE("rbf kernel values") {
  CHECK(rbf_kernel(3.2, 3.2, 0.8) == doctest::Approx(1.0));
  CHECK(rbf_kernel(1.0, 1.8, 0.8) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(rbf_kernel(0.0, 3.0, 3.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(rbf_kernel(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gp data generation") {
  SUBCASE("noiseless limit reproduces the latent function") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.noise_var = 0.0;
    spec.observed_idx = {0, 10, 40};
    Rng rng(1);
    auto data = gp_generate(spec, rng);
    for (std::size_t i = 0; i < spec.observed_idx.size(); ++i)
      CHECK(data.y[i] == data.f_true[static_cast<std::size_t>(spec.observed_idx[i])]);
  }

  SUBCASE("fixed seed is reproducible") {
    auto a = make_gp_spec(0.8, 10, 7);
    auto b = make_gp_spec(0.8, 10, 7);
    CHECK(a.observed_idx == b.observed_idx);
    CHECK(a.y == b.y);
  }

  SUBCASE("prior marginal variance is one") {
    GpSpec spec;
    spec.rho = 3.0;
    spec.observed_idx = {5};
    double acc = 0.0, accsq = 0.0;
    const int reps = 4000;
    Rng rng(3);
    for (int r = 0; r < reps; ++r) {
      auto data = gp_generate(spec, rng);
      acc += data.f_true[30];
      accsq += square(data.f_true[30]);
    }
    const double var = accsq / reps - square(acc / reps);
    CHECK(std::fabs(var - 1.0) < 0.1);
  }
}

TEST_CASE("gp log target") {
  SUBCASE("single observed point optimum at y / (1 + noise)") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.observed_idx = {37};
    spec.y = {1.0};
    GpTarget target(spec);
    const std::vector<double> z_star = {1.0 / 1.1};
    auto g = target.grad_log_f(z_star);
    CHECK(std::fabs(g[0]) < 1e-6);
  }

  SUBCASE("z = 0, y = 0 leaves only the normalizers") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.observed_idx = {10, 50};
    spec.y = {0.0, 0.0};
    GpTarget target(spec);
    const std::vector<double> z = {0.0, 0.0};
    const auto xs = spec.grid();
    const std::vector<double> obs2 = {xs[10], xs[50]};
    Matrix k = kernel_matrix(obs2, spec.rho);
    const double expected = -0.5 * chol_logdet(cholesky(k)) - kLog2Pi - (kLog2Pi + std::log(0.1));
    CHECK(target.log_f(z) == doctest::Approx(expected).epsilon(1e-10));
  }

  SUBCASE("gradient matches finite differences") {
    auto spec = make_gp_spec(0.8, 6, 5);
    GpTarget target(spec);
    Rng rng(6);
    std::vector<double> z(6);
    for (auto& x : z) x = rng.normal();
    auto g = target.grad_log_f(z);
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-6;
      auto zp = z, zm = z;
      zp[static_cast<std::size_t>(i)] += h;
      zm[static_cast<std::size_t>(i)] -= h;
      const double fd = (target.log_f(zp) - target.log_f(zm)) / (2 * h);
      CHECK(std::fabs(g[static_cast<std::size_t>(i)] - fd) / (std::fabs(fd) + 1e-12) < 1e-6);
    }
  }
}

TEST_CASE("gp analytic posterior") {
  SUBCASE("scalar case") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.observed_idx = {0};
    spec.y = {1.0};
    auto [m, s] = gp_analytic_posterior(spec);
    CHECK(m[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-6));
    CHECK(s.at(0, 0) == doctest::Approx(1.0 - 1.0 / 1.1).epsilon(1e-6));
  }

  SUBCASE("uninformative likelihood keeps the prior") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.noise_var = 1e6;
    spec.observed_idx = {5, 20};
    spec.y = {3.0, -1.0};
    auto [m, s] = gp_analytic_posterior(spec);
    const auto xs = spec.grid();
    const std::vector<double> obs2 = {xs[5], xs[20]};
    Matrix prior = kernel_matrix(obs2, spec.rho);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::fabs(s.at(i, j) - prior.at(i, j)) < 1e-3);
  }

  SUBCASE("d=10: posterior covariance is PSD with diagonal in (0, 1]") {
    auto spec = make_gp_spec(0.8, 10, 11);
    auto [m, s] = gp_analytic_posterior(spec);
    Matrix jittered = s;
    for (int i = 0; i < 10; ++i) jittered.at(i, i) += 1e-10;
    CHECK_NOTHROW(cholesky(jittered));
    for (int i = 0; i < 10; ++i) {
      CHECK(s.at(i, i) > 0.0);
      CHECK(s.at(i, i) <= 1.0 + 1e-9);
    }
  }

  SUBCASE("stationarity: the analytic mean maximizes the log target") {
    auto spec = make_gp_spec(0.8, 8, 13);
    GpTarget target(spec);
    auto [m, s] = gp_analytic_posterior(spec);
    auto g = target.grad_log_f(m);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    CHECK(std::sqrt(norm) < 1e-8);

    // the long-lengthscale kernel is near-singular even with jitter, so the
    // residual there is conditioning-limited rather than formula-limited
    auto spec2 = make_gp_spec(3.0, 8, 13);
    GpTarget t2(spec2);
    auto [m2, s2] = gp_analytic_posterior(spec2);
    auto g2 = t2.grad_log_f(m2);
    double norm2 = 0.0;
    for (double x : g2) norm2 += x * x;
    CHECK(std::sqrt(norm2) < 1e-6);
  }

  SUBCASE("posterior covariance equals the inverse curvature") {
    auto spec = make_gp_spec(0.8, 5, 17);
    GpTarget target(spec);
    auto [m, s_plus] = gp_analytic_posterior(spec);
    // Hessian of -log f is constant: precision + I/noise
    const auto xs = spec.grid();
    std::vector<double> obs;
    for (int idx : spec.observed_idx) obs.push_back(xs[static_cast<std::size_t>(idx)]);
    Matrix prior = kernel_matrix(obs, spec.rho);
    Matrix hess = chol_inverse(cholesky(prior));
    for (int i = 0; i < 5; ++i) hess.at(i, i) += 1.0 / spec.noise_var;
    Matrix cov = chol_inverse(cholesky(hess));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) CHECK(std::fabs(cov.at(i, j) - s_plus.at(i, j)) < 1e-8);
  }
}

TEST_CASE("diagonalized reference") {
  auto spec = make_gp_spec(0.8, 10, 19);
  auto [m_plus, s_plus] = gp_analytic_posterior(spec);
  auto [m_ref, std_ref] = gp_diagonalized_reference(spec);
  CHECK(m_ref == m_plus);
  for (int i = 0; i < 10; ++i) {
    CHECK(std_ref[static_cast<std::size_t>(i)] ==
          doctest::Approx(std::sqrt(s_plus.at(i, i))).epsilon(1e-12));
    CHECK(std_ref[static_cast<std::size_t>(i)] > 0.0);
  }
}

TEST_CASE("joint predictive") {
  SUBCASE("full observed grid returns the posterior unchanged") {
    GpSpec spec;
    spec.grid_size = 5;
    spec.rho = 0.8;
    spec.observed_idx = {0, 1, 2, 3, 4};
    spec.y = {0.1, -0.2, 0.3, 0.0, 0.5};
    auto [m_plus, s_plus] = gp_analytic_posterior(spec);
    auto [mean, cov] = gp_joint_predictive(spec, m_plus, s_plus);
    for (int i = 0; i < 5; ++i) {
      CHECK(mean[static_cast<std::size_t>(i)] == doctest::Approx(m_plus[static_cast<std::size_t>(i)]));
      for (int j = 0; j < 5; ++j) CHECK(cov.at(i, j) == doctest::Approx(s_plus.at(i, j)));
    }
  }

  SUBCASE("predictive mean interpolates the posterior at observed points") {
    auto spec = make_gp_spec(3.0, 10, 23);
    auto [m_plus, s_plus] = gp_analytic_posterior(spec);
    auto [mean, cov] = gp_joint_predictive(spec, m_plus, s_plus);
    for (std::size_t i = 0; i < spec.observed_idx.size(); ++i)
      CHECK(mean[static_cast<std::size_t>(spec.observed_idx[i])] == doctest::Approx(m_plus[i]).epsilon(1e-10));
  }

  SUBCASE("zero posterior covariance gives zero predictive variance at observed points") {
    GpSpec spec;
    spec.rho = 0.8;
    spec.observed_idx = {10, 40};
    spec.y = {1.0, -1.0};
    Matrix zero(2, 2);
    auto [mean, cov] = gp_joint_predictive(spec, std::vector<double>{1.0, -1.0}, zero);
    CHECK(std::fabs(cov.at(10, 10)) < 1e-12);
    CHECK(std::fabs(cov.at(40, 40)) < 1e-12);
  }
}

TEST_CASE("logistic regression target") {
  SUBCASE("zero parameters give n log(1/2) plus the prior at zero") {
    LogRegSpec spec;
    spec.x = Matrix(3, 2);
    spec.x.at(0, 0) = 1.0;
    spec.x.at(1, 1) = -2.0;
    spec.x.at(2, 0) = 0.5;
    spec.y = {1, 0, 1};
    spec.d = 3;
    LogRegTarget target(spec);
    const std::vector<double> z = {0.0, 0.0, 0.0};
    CHECK(target.log_f(z) == doctest::Approx(3.0 * std::log(0.5) - 1.5 * kLog2Pi).epsilon(1e-12));
  }

  SUBCASE("saturated likelihood approaches zero from below") {
    LogRegSpec spec;
    spec.x = Matrix(1, 1);
    spec.x.at(0, 0) = 1.0;
    spec.y = {1};
    spec.d = 2;
    LogRegTarget target(spec);
    const std::vector<double> z = {30.0, 0.0};
    const double lik = target.log_f(z) - (-0.5 * (900.0) - kLog2Pi);
    CHECK(lik < 0.0);
    CHECK(lik > -1e-10);
  }

  SUBCASE("gradient matches finite differences") {
    Rng rng(9);
    LogRegSpec spec;
    spec.x = Matrix(20, 3);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 3; ++j) spec.x.at(i, j) = rng.normal();
    spec.y.assign(20, 0);
    for (auto& yy : spec.y) yy = rng.uniform() < 0.5 ? 0 : 1;
    spec.d = 4;
    LogRegTarget target(spec);
    std::vector<double> z(4);
    for (auto& x : z) x = rng.normal();
    auto g = target.grad_log_f(z);
    for (int i = 0; i < 4; ++i) {
      const double h = 1e-6;
      auto zp = z, zm = z;
      zp[static_cast<std::size_t>(i)] += h;
      zm[static_cast<std::size_t>(i)] -= h;
      const double fd = (target.log_f(zp) - target.log_f(zm)) / (2 * h);
      CHECK(std::fabs(g[static_cast<std::size_t>(i)] - fd) / (std::fabs(fd) + 1e-12) < 1e-6);
    }
  }

  SUBCASE("log density is concave along random probes") {
    Rng rng(10);
    LogRegSpec spec;
    spec.x = Matrix(15, 2);
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t j = 0; j < 2; ++j) spec.x.at(i, j) = rng.normal();
    spec.y.assign(15, 1);
    spec.d = 3;
    LogRegTarget target(spec);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> z(3), dir(3);
      for (auto& x : z) x = rng.normal();
      for (auto& x : dir) x = rng.normal();
      const double h = 1e-4;
      auto zp = z, zm = z;
      for (int i = 0; i < 3; ++i) {
        zp[static_cast<std::size_t>(i)] += h * dir[static_cast<std::size_t>(i)];
        zm[static_cast<std::size_t>(i)] -= h * dir[static_cast<std::size_t>(i)];
      }
      const double second = (target.log_f(zp) - 2.0 * target.log_f(z) + target.log_f(zm)) / (h * h);
      CHECK(second < 1e-6);
    }
  }
}

TEST_CASE("dataset loading") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dais_test_data";
  fs::create_directories(dir);

  SUBCASE("constant column is dropped") {
    const fs::path p = dir / "const_col.csv";
    {
      std::ofstream out(p);
      out << "a,b,c,label\n";
      out << "1.0,5.0,0.1,0\n";
      out << "2.0,5.0,0.3,1\n";
      out << "3.0,5.0,0.7,0\n";
      out << "4.0,5.0,0.2,1\n";
    }
    auto spec = load_dataset(p.string());
    CHECK(spec.d == 3);  // two kept features + bias
    CHECK(spec.x.cols == 2);
    // standardization invariants
    for (std::size_t j = 0; j < spec.x.cols; ++j) {
      double m = 0.0, v = 0.0;
      for (std::size_t i = 0; i < spec.x.rows; ++i) m += spec.x.at(i, j);
      m /= static_cast<double>(spec.x.rows);
      for (std::size_t i = 0; i < spec.x.rows; ++i) v += square(spec.x.at(i, j) - m);
      v /= static_cast<double>(spec.x.rows);
      CHECK(std::fabs(m) < 1e-10);
      CHECK(std::fabs(std::sqrt(v) - 1.0) < 1e-10);
    }
  }

  SUBCASE("unparseable rows are reported with their line") {
    const fs::path p = dir / "bad_row.csv";
    {
      std::ofstream out(p);
      out << "a,label\n1.0,0\nbroken,1\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(p.string()),
                         doctest::Contains("line 3"), std::runtime_error);
  }

  SUBCASE("non-binary labels are rejected") {
    const fs::path p = dir / "three_labels.csv";
    {
      std::ofstream out(p);
      out << "a,label\n1.0,0\n2.0,1\n3.0,2\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(p.string()), doctest::Contains("non-binary"), std::runtime_error);
  }

  SUBCASE("string labels map in lexicographic order") {
    const fs::path p = dir / "string_labels.csv";
    {
      std::ofstream out(p);
      out << "a,label\n1.0,g\n2.0,b\n3.0,g\n";
    }
    auto spec = load_dataset(p.string());
    CHECK(spec.y == std::vector<int>{1, 0, 1});
  }
}

TEST_CASE("shipped datasets have the expected dimensions") {
  // ctest runs this suite from the repository root
  namespace fs = std::filesystem;
  fs::path data_dir = "data";
  if (!fs::exists(data_dir)) data_dir = "../data";
  REQUIRE(fs::exists(data_dir));
  const std::vector<std::pair<std::string, int>> expected = {
      {"sonar", 61}, {"ionosphere", 35}, {"heart_disease", 16}, {"heart_attack", 14}, {"loan", 12}};
  for (const auto& [name, d] : expected) {
    auto spec = load_dataset((data_dir / (name + ".csv")).string());
    CHECK(spec.d == d);
  }
}
