#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dais/distributions.hpp"
#include "dais/linalg.hpp"
#include "dais/rng.hpp"

namespace dais {

// ---------------------------------------------------------------------------
// bimodal mixture
// ---------------------------------------------------------------------------

struct BimodalSpec {
  int d = 1;
  double component_std = 0.25;
};

inline MixtureTarget make_bimodal_target(const BimodalSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("BimodalSpec: d must be >= 1");
  return MixtureTarget(IsotropicPairMixture{spec.d, spec.component_std});
}

// moments of the mixture itself: mean 1/2 per dimension, variance s^2 + 1/4
inline std::pair<std::vector<double>, std::vector<double>> bimodal_moments(const BimodalSpec& spec) {
  std::vector<double> mean(static_cast<std::size_t>(spec.d), 0.5);
  std::vector<double> stddev(static_cast<std::size_t>(spec.d),
                             std::sqrt(spec.component_std * spec.component_std + 0.25));
  return {std::move(mean), std::move(stddev)};
}

// ---------------------------------------------------------------------------
// Gaussian process regression
// ---------------------------------------------------------------------------

inline double rbf_kernel(double t, double s, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rbf_kernel: rho must be positive");
  const double u = (t - s) / rho;
  return std::exp(-0.5 * u * u);
}

struct GpSpec {
  int grid_size = 75;
  double domain_lo = 0.0;
  double domain_hi = 10.0;
  double rho = 0.8;
  double noise_var = 0.1;
  std::vector<int> observed_idx;   // index set I, size d
  std::vector<double> y;           // observations at I (filled by gp_generate)
  std::uint64_t seed = 1;

  int observed_dim() const { return static_cast<int>(observed_idx.size()); }
  std::vector<double> grid() const {
    std::vector<double> xs(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i)
      xs[static_cast<std::size_t>(i)] = domain_lo + (domain_hi - domain_lo) * i / (grid_size - 1);
    return xs;
  }
};

inline constexpr double kGpJitter = 1e-8;

inline Matrix kernel_matrix(std::span<const double> xs, double rho, double jitter = kGpJitter) {
  const std::size_t n = xs.size();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k.at(i, j) = rbf_kernel(xs[i], xs[j], rho);
  for (std::size_t i = 0; i < n; ++i) k.at(i, i) += jitter;
  return k;
}

struct GpData {
  std::vector<double> f_true;  // latent process on the full grid
  std::vector<double> y;       // noisy observations at observed_idx
};

/// Samples a ground-truth function from the GP prior on the full grid and
/// observes it at the index set with Gaussian noise.
inline GpData gp_generate(const GpSpec& spec, Rng& rng) {
  const auto xs = spec.grid();
  const Matrix k = kernel_matrix(xs, spec.rho);
  Matrix l;
  try {
    l = cholesky(k);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("gp_generate: kernel Cholesky failed after jitter");
  }
  std::vector<double> eps(xs.size());
  for (auto& e : eps) e = rng.normal();
  GpData data;
  data.f_true.assign(xs.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += l.at(i, j) * eps[j];
    data.f_true[i] = acc;
  }
  data.y.reserve(spec.observed_idx.size());
  const double noise_std = std::sqrt(spec.noise_var);
  for (int idx : spec.observed_idx) data.y.push_back(data.f_true[static_cast<std::size_t>(idx)] + noise_std * rng.normal());
  return data;
}

/// Builds a GpSpec with a random index set and generated data, everything
/// keyed to the seed.  One instance per (rho, d, seed) is shared by all
/// methods compared on that cell.
inline GpSpec make_gp_spec(double rho, int d, std::uint64_t seed) {
  GpSpec spec;
  spec.rho = rho;
  spec.seed = seed;
  Rng rng(seed, 0x69b0ull);
  std::vector<int> all(static_cast<std::size_t>(spec.grid_size));
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < d; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + rng.uniform_int(static_cast<std::uint64_t>(spec.grid_size - i));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  spec.observed_idx.assign(all.begin(), all.begin() + d);
  std::sort(spec.observed_idx.begin(), spec.observed_idx.end());
  const GpData data = gp_generate(spec, rng);
  spec.y = data.y;
  return spec;
}

/// Unnormalized posterior over the latent values at the observed points:
/// log N(z; 0, S_oo) + log N(y; z, noise_var I).
class GpTarget final : public TargetBase<GpTarget> {
 public:
  explicit GpTarget(const GpSpec& spec) : spec_(spec) {
    if (spec.y.size() != spec.observed_idx.size())
      throw std::invalid_argument("GpTarget: spec has no observations");
    const auto xs = spec.grid();
    std::vector<double> obs;
    obs.reserve(spec.observed_idx.size());
    for (int idx : spec.observed_idx) obs.push_back(xs[static_cast<std::size_t>(idx)]);
    const std::size_t d = obs.size();
    sigma_oo_ = kernel_matrix(obs, spec.rho);
    const Matrix l = cholesky(sigma_oo_);
    precision_ = chol_inverse(l);
    prior_logdet_ = chol_logdet(l);

    // marginal likelihood N(y; 0, S_oo + noise I) gives the normalizer
    Matrix a = sigma_oo_;
    for (std::size_t i = 0; i < d; ++i) a.at(i, i) += spec.noise_var;
    const Matrix la = cholesky(a);
    const auto alpha = chol_solve(la, spec.y);
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) quad += spec.y[i] * alpha[i];
    log_z_ = -0.5 * quad - 0.5 * chol_logdet(la) - 0.5 * static_cast<double>(d) * kLog2Pi;

    // exact posterior N(m+, S+) used by the sampler
    const Matrix b = chol_solve_matrix(la, sigma_oo_);  // A^-1 S_oo
    post_mean_.resize(d);
    for (std::size_t i = 0; i < d; ++i) post_mean_[i] = spec.y[i] - spec.noise_var * alpha[i];
    Matrix s_plus = sigma_oo_;
    const Matrix sb = matmul(sigma_oo_, b);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s_plus.at(i, j) -= sb.at(i, j);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        const double sym = 0.5 * (s_plus.at(i, j) + s_plus.at(j, i));
        s_plus.at(i, j) = sym;
        s_plus.at(j, i) = sym;
      }
    for (std::size_t i = 0; i < d; ++i) s_plus.at(i, i) += kGpJitter;
    post_chol_ = cholesky(s_plus);
  }

  int dim() const override { return spec_.observed_dim(); }
  std::optional<double> log_norm() const override { return log_z_; }
  bool has_exact_sampler() const override { return true; }
  std::vector<double> sample_exact(Rng& rng) const override {
    const std::size_t d = post_mean_.size();
    std::vector<double> eps(d), z(d);
    for (auto& e : eps) e = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double acc = post_mean_[i];
      for (std::size_t j = 0; j <= i; ++j) acc += post_chol_.at(i, j) * eps[j];
      z[i] = acc;
    }
    return z;
  }

  const GpSpec& spec() const { return spec_; }

  template <class ZS>
  ZS log_f_impl(std::span<const ZS> z) const {
    const std::size_t d = static_cast<std::size_t>(dim());
    if (z.size() != d) throw std::invalid_argument("GpTarget: dimension mismatch");
    const double inv_noise = 1.0 / spec_.noise_var;
    // prior quadratic form through the precision rows
    std::vector<ZS> w;
    w.reserve(d);
    for (std::size_t j = 0; j < d; ++j) w.push_back(dot_external(z, precision_.row(j)));
    ZS quad = dot(z, std::span<const ZS>(w));
    ZS acc = -0.5 * quad - 0.5 * (prior_logdet_ + d * kLog2Pi) -
             0.5 * d * (kLog2Pi + std::log(spec_.noise_var));
    for (std::size_t j = 0; j < d; ++j)
      acc = acc - 0.5 * inv_noise * square(z[j] - spec_.y[j]);
    return acc;
  }

  template <class ZS>
  std::vector<ZS> grad_log_f_impl(std::span<const ZS> z) const {
    const std::size_t d = static_cast<std::size_t>(dim());
    const double inv_noise = 1.0 / spec_.noise_var;
    std::vector<ZS> g;
    g.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      ZS wj = dot_external(z, precision_.row(j));
      g.push_back(fma(z[j], -inv_noise, spec_.y[j] * inv_noise) - wj);
    }
    return g;
  }

 private:
  GpSpec spec_;
  Matrix sigma_oo_;
  Matrix precision_;
  double prior_logdet_ = 0.0;
  double log_z_ = 0.0;
  std::vector<double> post_mean_;
  Matrix post_chol_;
};

/// Closed-form posterior at the observed points with zero prior mean:
/// m+ = S_oo (S_oo + noise I)^-1 y,  S+ = S_oo - S_oo (S_oo + noise I)^-1 S_oo.
inline std::pair<std::vector<double>, Matrix> gp_analytic_posterior(const GpSpec& spec) {
  const auto xs = spec.grid();
  std::vector<double> obs;
  obs.reserve(spec.observed_idx.size());
  for (int idx : spec.observed_idx) obs.push_back(xs[static_cast<std::size_t>(idx)]);
  const std::size_t d = obs.size();
  const Matrix sigma_oo = kernel_matrix(obs, spec.rho);
  Matrix a = sigma_oo;
  for (std::size_t i = 0; i < d; ++i) a.at(i, i) += spec.noise_var;
  const Matrix la = cholesky(a);
  const auto ainv_y = chol_solve(la, spec.y);
  // S_oo (S_oo + nI)^-1 y written as y - n (S_oo + nI)^-1 y, which avoids
  // multiplying by the (possibly ill-conditioned) kernel matrix
  std::vector<double> m_plus(d);
  for (std::size_t i = 0; i < d; ++i) m_plus[i] = spec.y[i] - spec.noise_var * ainv_y[i];
  const Matrix b = chol_solve_matrix(la, sigma_oo);
  const Matrix sb = matmul(sigma_oo, b);
  Matrix s_plus = sigma_oo;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s_plus.at(i, j) -= sb.at(i, j);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double sym = 0.5 * (s_plus.at(i, j) + s_plus.at(j, i));
      s_plus.at(i, j) = sym;
      s_plus.at(j, i) = sym;
    }
  return {m_plus, s_plus};
}

/// Mean-field reference: the analytic mean with the square root of the
/// posterior covariance diagonal.  This is the comparison baseline for the
/// mean/std error tables.
inline std::pair<std::vector<double>, std::vector<double>> gp_diagonalized_reference(const GpSpec& spec) {
  auto [m_plus, s_plus] = gp_analytic_posterior(spec);
  std::vector<double> diag_std(m_plus.size());
  for (std::size_t i = 0; i < m_plus.size(); ++i) diag_std[i] = std::sqrt(s_plus.at(i, i));
  return {std::move(m_plus), std::move(diag_std)};
}

/**
 * Propagates a posterior (m+, S+) on the observed points to the full grid
 * through the prior conditional:
 *   mean_u = S_uo S_oo^-1 m+,
 *   cov = [S+, S+ A'; A S+, A S+ A' + S_uu - A S_ou],  A = S_uo S_oo^-1,
 * reassembled in grid order.
 */
inline std::pair<std::vector<double>, Matrix> gp_joint_predictive(const GpSpec& spec,
                                                                  std::span<const double> m_plus,
                                                                  const Matrix& s_plus) {
  const auto xs = spec.grid();
  const std::size_t n = xs.size();
  const std::size_t d = spec.observed_idx.size();
  std::vector<char> is_obs(n, 0);
  for (int idx : spec.observed_idx) is_obs[static_cast<std::size_t>(idx)] = 1;
  std::vector<int> unobserved;
  unobserved.reserve(n - d);
  for (std::size_t i = 0; i < n; ++i)
    if (!is_obs[i]) unobserved.push_back(static_cast<int>(i));
  const std::size_t u = unobserved.size();

  std::vector<double> mean(n, 0.0);
  Matrix cov(n, n);
  if (u == 0) {
    for (std::size_t i = 0; i < d; ++i) {
      mean[static_cast<std::size_t>(spec.observed_idx[i])] = m_plus[i];
      for (std::size_t j = 0; j < d; ++j)
        cov.at(static_cast<std::size_t>(spec.observed_idx[i]), static_cast<std::size_t>(spec.observed_idx[j])) =
            s_plus.at(i, j);
    }
    return {std::move(mean), std::move(cov)};
  }

  std::vector<double> obs_x, unobs_x;
  obs_x.reserve(d);
  unobs_x.reserve(u);
  for (int idx : spec.observed_idx) obs_x.push_back(xs[static_cast<std::size_t>(idx)]);
  for (int idx : unobserved) unobs_x.push_back(xs[static_cast<std::size_t>(idx)]);

  const Matrix sigma_oo = kernel_matrix(obs_x, spec.rho);
  Matrix sigma_uo(u, d);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < d; ++j) sigma_uo.at(i, j) = rbf_kernel(unobs_x[i], obs_x[j], spec.rho);
  Matrix sigma_uu(u, u);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j) sigma_uu.at(i, j) = rbf_kernel(unobs_x[i], unobs_x[j], spec.rho);

  const Matrix l_oo = cholesky(sigma_oo);
  // A = S_uo S_oo^-1 computed row-wise: A' = S_oo^-1 S_ou
  const Matrix a_t = chol_solve_matrix(l_oo, transpose(sigma_uo));  // d x u
  const Matrix a = transpose(a_t);                                  // u x d

  std::vector<double> mean_u = matvec(a, m_plus);

  Matrix s_plus_at(d, u);  // S+ A'
  {
    const Matrix tmp = matmul(s_plus, a_t);
    s_plus_at = tmp;
  }
  const Matrix a_splus = transpose(s_plus_at);          // A S+ (since S+ symmetric)
  const Matrix a_splus_at = matmul(a_splus, a_t);       // A S+ A'
  const Matrix a_sou = matmul(a, transpose(sigma_uo));  // A S_ou

  auto scatter = [&](int gi, int gj, double v) { cov.at(static_cast<std::size_t>(gi), static_cast<std::size_t>(gj)) = v; };
  for (std::size_t i = 0; i < d; ++i) {
    mean[static_cast<std::size_t>(spec.observed_idx[i])] = m_plus[i];
    for (std::size_t j = 0; j < d; ++j) scatter(spec.observed_idx[i], spec.observed_idx[j], s_plus.at(i, j));
    for (std::size_t j = 0; j < u; ++j) {
      scatter(spec.observed_idx[i], unobserved[j], s_plus_at.at(i, j));
      scatter(unobserved[j], spec.observed_idx[i], s_plus_at.at(i, j));
    }
  }
  for (std::size_t i = 0; i < u; ++i) {
    mean[static_cast<std::size_t>(unobserved[i])] = mean_u[i];
    for (std::size_t j = 0; j < u; ++j)
      scatter(unobserved[i], unobserved[j], a_splus_at.at(i, j) + sigma_uu.at(i, j) - a_sou.at(i, j));
  }
  return {std::move(mean), std::move(cov)};
}

// ---------------------------------------------------------------------------
// Bayesian logistic regression
// ---------------------------------------------------------------------------

struct LogRegSpec {
  Matrix x;                 // n x (d-1) standardized features
  std::vector<int> y;       // binary labels
  int d = 0;                // features + bias
  std::vector<std::string> feature_names;
};

/// Posterior of logistic regression with a standard normal prior on
/// z = (w, b); the bias is the last coordinate.
class LogRegTarget final : public TargetBase<LogRegTarget> {
 public:
  explicit LogRegTarget(const LogRegSpec& spec) : n_(spec.x.rows), d_(static_cast<std::size_t>(spec.d)), y_(spec.y) {
    if (spec.x.cols + 1 != d_) throw std::invalid_argument("LogRegTarget: d must equal features + 1");
    x_aug_ = Matrix(n_, d_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j + 1 < d_; ++j) x_aug_.at(i, j) = spec.x.at(i, j);
      x_aug_.at(i, d_ - 1) = 1.0;
    }
    x_aug_t_ = transpose(x_aug_);
  }

  int dim() const override { return static_cast<int>(d_); }

  template <class ZS>
  ZS log_f_impl(std::span<const ZS> z) const {
    if (z.size() != d_) throw std::invalid_argument("LogRegTarget: dimension mismatch");
    ZS lik{};
    for (std::size_t i = 0; i < n_; ++i) {
      ZS a = dot_external(z, x_aug_.row(i));
      ZS t = y_[i] ? -softplus(-a) : -softplus(a);
      lik = (i == 0) ? t : lik + t;
    }
    ZS prior_quad = dot(z, z);
    return lik - 0.5 * prior_quad - 0.5 * static_cast<double>(d_) * kLog2Pi;
  }

  template <class ZS>
  std::vector<ZS> grad_log_f_impl(std::span<const ZS> z) const {
    std::vector<ZS> s;
    s.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      ZS a = dot_external(z, x_aug_.row(i));
      s.push_back(fma(sigmoid(a), -1.0, static_cast<double>(y_[i])));  // y_i - sigmoid(a_i)
    }
    std::vector<ZS> g;
    g.reserve(d_);
    for (std::size_t j = 0; j < d_; ++j)
      g.push_back(dot_external(std::span<const ZS>(s), x_aug_t_.row(j)) - z[j]);
    return g;
  }

 private:
  std::size_t n_ = 0, d_ = 0;
  std::vector<int> y_;
  Matrix x_aug_;    // with trailing 1 column for the bias
  Matrix x_aug_t_;  // transposed copy so gradient dots run over contiguous rows
};

struct DatasetSchema {
  std::string label_column = "label";  // column name, or "#k" for index k
  bool has_header = true;
  bool standardize = true;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/**
 * Reads a CSV dataset into a LogRegSpec: the schema names the label column,
 * remaining numeric columns are features.  Features are standardized to
 * zero mean and unit variance; constant columns are dropped with a warning.
 * Labels must be binary (numeric 0/1, or exactly two distinct strings which
 * map to 0/1 in lexicographic order).
 */
inline LogRegSpec load_dataset(const std::string& path, const DatasetSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> raw;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (line_no == 1 && schema.has_header) {
      header = std::move(fields);
      continue;
    }
    if (!raw.empty() && fields.size() != raw.front().size())
      throw std::runtime_error("load_dataset: row at line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(raw.front().size()));
    raw.push_back(std::move(fields));
  }
  if (raw.empty()) throw std::runtime_error("load_dataset: no data rows in " + path);
  const std::size_t n_cols = raw.front().size();

  std::size_t label_idx;
  if (!schema.label_column.empty() && schema.label_column[0] == '#') {
    label_idx = static_cast<std::size_t>(std::stoul(schema.label_column.substr(1)));
    if (label_idx >= n_cols) throw std::runtime_error("load_dataset: label index out of range");
  } else {
    auto it = std::find(header.begin(), header.end(), schema.label_column);
    if (it == header.end())
      throw std::runtime_error("load_dataset: label column '" + schema.label_column + "' not found");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  // labels: collect distinct raw values
  std::vector<std::string> distinct;
  for (const auto& row : raw) {
    const std::string& v = row[label_idx];
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  }
  if (distinct.size() != 2) {
    if (distinct.size() == 1)
      throw std::runtime_error("load_dataset: label column has a single value");
    throw std::runtime_error("load_dataset: non-binary labels (" + std::to_string(distinct.size()) +
                             " distinct values)");
  }
  std::sort(distinct.begin(), distinct.end());
  std::vector<int> labels;
  labels.reserve(raw.size());
  for (const auto& row : raw) labels.push_back(row[label_idx] == distinct[1] ? 1 : 0);

  const std::size_t n = raw.size();
  const std::size_t n_feat = n_cols - 1;
  Matrix feats(n, n_feat);
  std::vector<std::string> names;
  names.reserve(n_feat);
  {
    std::size_t jj = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c == label_idx) continue;
      names.push_back(c < header.size() ? header[c] : "f" + std::to_string(c));
      ++jj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t jj = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c == label_idx) continue;
      const std::string& field = raw[i][c];
      try {
        std::size_t pos = 0;
        feats.at(i, jj) = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::runtime_error("load_dataset: unparseable value '" + field + "' at line " +
                                 std::to_string(i + (schema.has_header ? 2 : 1)));
      }
      ++jj;
    }
  }

  // standardize and drop constant columns
  std::vector<std::size_t> kept;
  std::vector<double> col_mean(n_feat, 0.0), col_std(n_feat, 0.0);
  for (std::size_t j = 0; j < n_feat; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += feats.at(i, j);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += square(feats.at(i, j) - m);
    v /= static_cast<double>(n);
    col_mean[j] = m;
    col_std[j] = std::sqrt(v);
    if (col_std[j] < 1e-12) {
      std::cerr << "load_dataset: warning: dropping constant column '" << names[j] << "'\n";
      continue;
    }
    kept.push_back(j);
  }

  LogRegSpec spec;
  spec.x = Matrix(n, kept.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
      const std::size_t j = kept[jj];
      spec.x.at(i, jj) = schema.standardize ? (feats.at(i, j) - col_mean[j]) / col_std[j] : feats.at(i, j);
    }
  for (std::size_t jj = 0; jj < kept.size(); ++jj) spec.feature_names.push_back(names[kept[jj]]);
  spec.y = std::move(labels);
  spec.d = static_cast<int>(kept.size()) + 1;
  return spec;
}

}  // namespace dais
