#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dais::ad {

class Tape;

/// Handle to a scalar node on a tape.  Cheap to copy; invalidated by
/// Tape::clear().
class Value {
 public:
  Value() = default;
  Value(Tape* tape, std::int32_t index) : tape_(tape), idx_(index) {}

  double value() const;
  double adjoint() const;
  Tape* tape() const { return tape_; }
  std::int32_t index() const { return idx_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::int32_t idx_ = -1;
};

/**
 * Tape for reverse-mode differentiation of scalar expressions.
 *
 * Nodes are appended in evaluation order, so the node array is already a
 * topological order and the backward pass is a single reverse sweep.
 * Parent indices and local partials live in side pools; the parents of
 * node i occupy the pool range [first_[i], first_[i+1]).
 *
 * A tape is single-threaded.  Distinct tapes are independent.
 */
class Tape {
 public:
  Value leaf(double v) { return emplace(v); }
  Value constant(double v) { return emplace(v); }

  std::size_t size() const { return val_.size(); }

  void clear() {
    val_.clear();
    adj_.clear();
    first_.clear();
    pfirst_.clear();
    parent_.clear();
    partial_.clear();
    ext_.clear();
    backward_done_ = false;
  }

  /// Accumulates d(output)/d(node) into every node's adjoint.
  /// Calling twice without growing the graph is an error: adjoints of a
  /// second sweep would silently shadow the first.
  void backward(const Value& output) {
    if (output.tape() != this) throw std::logic_error("backward: output from another tape");
    if (backward_done_) throw std::logic_error("backward: called twice without a new forward pass");
    backward_done_ = true;
    adj_.assign(val_.size(), 0.0);
    adj_[static_cast<std::size_t>(output.index())] = 1.0;
    for (std::int32_t i = static_cast<std::int32_t>(val_.size()) - 1; i >= 0; --i) {
      const double a = adj_[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      const std::int32_t b = first_[static_cast<std::size_t>(i)];
      const std::int32_t e = (static_cast<std::size_t>(i) + 1 < first_.size())
                                 ? first_[static_cast<std::size_t>(i) + 1]
                                 : static_cast<std::int32_t>(parent_.size());
      const std::int32_t pf = pfirst_[static_cast<std::size_t>(i)];
      const double* w = pf >= 0 ? partial_.data() + pf : ext_[static_cast<std::size_t>(-pf - 1)];
      for (std::int32_t j = b; j < e; ++j) {
        adj_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(j)])] += w[j - b] * a;
      }
    }
  }

  double value_at(std::int32_t i) const { return val_[static_cast<std::size_t>(i)]; }
  double adjoint_at(std::int32_t i) const {
    return static_cast<std::size_t>(i) < adj_.size() ? adj_[static_cast<std::size_t>(i)] : 0.0;
  }

  // --- node builders (used by the operator layer) ---

  Value emplace(double v) {
    first_.push_back(static_cast<std::int32_t>(parent_.size()));
    pfirst_.push_back(static_cast<std::int32_t>(partial_.size()));
    val_.push_back(v);
    backward_done_ = false;
    return Value(this, static_cast<std::int32_t>(val_.size()) - 1);
  }

  Value unary(double v, const Value& a, double pa) {
    Value out = emplace(v);
    parent_.push_back(a.index());
    partial_.push_back(pa);
    return out;
  }

  Value binary(double v, const Value& a, double pa, const Value& b, double pb) {
    Value out = emplace(v);
    parent_.push_back(a.index());
    partial_.push_back(pa);
    parent_.push_back(b.index());
    partial_.push_back(pb);
    return out;
  }

  // n-ary node; partials are pushed by the caller through these hooks
  Value nary_begin(double v) { return emplace(v); }
  void push_parent(const Value& a, double pa) {
    parent_.push_back(a.index());
    partial_.push_back(pa);
  }

  /// n-ary node whose local partials live in caller-owned storage (e.g. a
  /// fixed data matrix row).  The pointer must stay valid until the tape is
  /// cleared; nothing is copied.
  Value nary_external(double v, std::span<const Value> xs, const double* weights) {
    first_.push_back(static_cast<std::int32_t>(parent_.size()));
    pfirst_.push_back(-static_cast<std::int32_t>(ext_.size()) - 1);
    ext_.push_back(weights);
    val_.push_back(v);
    backward_done_ = false;
    for (const Value& x : xs) parent_.push_back(x.index());
    return Value(this, static_cast<std::int32_t>(val_.size()) - 1);
  }

 private:
  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<std::int32_t> first_;
  std::vector<std::int32_t> pfirst_;  // >= 0: offset into partial_; < 0: ext_[-v-1]
  std::vector<std::int32_t> parent_;
  std::vector<double> partial_;
  std::vector<const double*> ext_;
  bool backward_done_ = false;
};

inline double Value::value() const { return tape_->value_at(idx_); }
inline double Value::adjoint() const { return tape_->adjoint_at(idx_); }

// ---------------------------------------------------------------------------
// primitive operations
// ---------------------------------------------------------------------------

inline Value operator+(const Value& a, const Value& b) {
  return a.tape()->binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Value operator+(const Value& a, double c) { return a.tape()->unary(a.value() + c, a, 1.0); }
inline Value operator+(double c, const Value& a) { return a + c; }

inline Value operator-(const Value& a, const Value& b) {
  return a.tape()->binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Value operator-(const Value& a, double c) { return a.tape()->unary(a.value() - c, a, 1.0); }
inline Value operator-(double c, const Value& a) { return a.tape()->unary(c - a.value(), a, -1.0); }
inline Value operator-(const Value& a) { return a.tape()->unary(-a.value(), a, -1.0); }

inline Value operator*(const Value& a, const Value& b) {
  return a.tape()->binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Value operator*(const Value& a, double c) { return a.tape()->unary(a.value() * c, a, c); }
inline Value operator*(double c, const Value& a) { return a * c; }

inline Value operator/(const Value& a, const Value& b) {
  const double bv = b.value();
  if (bv == 0.0) throw std::domain_error("autodiff: division by zero");
  const double inv = 1.0 / bv;
  return a.tape()->binary(a.value() * inv, a, inv, b, -a.value() * inv * inv);
}
inline Value operator/(const Value& a, double c) {
  if (c == 0.0) throw std::domain_error("autodiff: division by zero");
  return a.tape()->unary(a.value() / c, a, 1.0 / c);
}
inline Value operator/(double c, const Value& a) {
  const double av = a.value();
  if (av == 0.0) throw std::domain_error("autodiff: division by zero");
  return a.tape()->unary(c / av, a, -c / (av * av));
}

inline Value neg(const Value& a) { return -a; }

inline Value exp(const Value& a) {
  const double e = std::exp(a.value());
  return a.tape()->unary(e, a, e);
}

inline Value log(const Value& a) {
  const double v = a.value();
  if (!(v > 0.0)) throw std::domain_error("autodiff: log of non-positive value");
  return a.tape()->unary(std::log(v), a, 1.0 / v);
}

inline Value sqrt(const Value& a) {
  const double v = a.value();
  if (v < 0.0) throw std::domain_error("autodiff: sqrt of negative value");
  const double s = std::sqrt(v);
  return a.tape()->unary(s, a, 0.5 / s);
}

inline Value square(const Value& a) {
  const double v = a.value();
  return a.tape()->unary(v * v, a, 2.0 * v);
}

inline Value sigmoid(const Value& a) {
  const double x = a.value();
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return a.tape()->unary(s, a, s * (1.0 - s));
}

inline Value softplus(const Value& a) {
  const double x = a.value();
  const double v = (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return a.tape()->unary(v, a, s);
}

// k*a + c as a single node
inline Value fma(const Value& a, double k, double c) {
  return a.tape()->unary(k * a.value() + c, a, k);
}

inline Value sum(std::span<const Value> xs) {
  if (xs.empty()) throw std::invalid_argument("sum: empty span");
  Tape* t = xs[0].tape();
  double acc = 0.0;
  for (const Value& x : xs) acc += x.value();
  Value out = t->nary_begin(acc);
  for (const Value& x : xs) t->push_parent(x, 1.0);
  return out;
}

inline Value dot(std::span<const Value> a, std::span<const Value> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("dot: size mismatch");
  Tape* t = a[0].tape();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].value() * b[i].value();
  Value out = t->nary_begin(acc);
  for (std::size_t i = 0; i < a.size(); ++i) {
    t->push_parent(a[i], b[i].value());
    t->push_parent(b[i], a[i].value());
  }
  return out;
}

inline Value dot(std::span<const Value> a, std::span<const double> w) {
  if (a.size() != w.size() || a.empty()) throw std::invalid_argument("dot: size mismatch");
  Tape* t = a[0].tape();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].value() * w[i];
  Value out = t->nary_begin(acc);
  for (std::size_t i = 0; i < a.size(); ++i) t->push_parent(a[i], w[i]);
  return out;
}

/// dot with constant weights held in caller-owned storage that outlives the
/// tape; avoids copying large fixed rows into the partial pool
inline Value dot_external(std::span<const Value> a, std::span<const double> w) {
  if (a.size() != w.size() || a.empty()) throw std::invalid_argument("dot_external: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].value() * w[i];
  return a[0].tape()->nary_external(acc, a, w.data());
}

inline Value log_sum_exp(std::span<const Value> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty span");
  Tape* t = xs[0].tape();
  double m = -std::numeric_limits<double>::infinity();
  for (const Value& x : xs) m = std::max(m, x.value());
  double acc = 0.0;
  for (const Value& x : xs) acc += std::exp(x.value() - m);
  const double lse = m + std::log(acc);
  Value out = t->nary_begin(lse);
  for (const Value& x : xs) t->push_parent(x, std::exp(x.value() - lse));
  return out;
}

inline Value log_sum_exp_pair(const Value& a, const Value& b) {
  const Value xs[2] = {a, b};
  return log_sum_exp(std::span<const Value>(xs, 2));
}

}  // namespace dais::ad

namespace dais {

// double counterparts so templated code instantiates with either scalar
inline double square(double x) { return x * x; }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double softplus(double x) {
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}
inline double fma(double a, double k, double c) { return k * a + c; }
inline double sum(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc;
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}
inline double dot_external(std::span<const double> a, std::span<const double> b) { return dot(a, b); }
inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}
inline double log_sum_exp_pair(double a, double b) {
  const double xs[2] = {a, b};
  return log_sum_exp(std::span<const double>(xs, 2));
}

inline double value_of(double x) { return x; }
inline double value_of(const ad::Value& x) { return x.value(); }

/// Named block of learnable parameters with matching gradient storage.
struct ParamVector {
  std::string name;
  std::vector<double> values;
  std::vector<double> grads;

  ParamVector() = default;
  ParamVector(std::string n, std::vector<double> v)
      : name(std::move(n)), values(std::move(v)), grads(values.size(), 0.0) {}

  std::size_t size() const { return values.size(); }
  void zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }
};

inline std::vector<ad::Value> make_leaves(ad::Tape& tape, const ParamVector& p) {
  std::vector<ad::Value> leaves;
  leaves.reserve(p.size());
  for (double v : p.values) leaves.push_back(tape.leaf(v));
  return leaves;
}

/// Adds leaf adjoints into p.grads.  Repeated use of a leaf in the graph has
/// already accumulated on the node, so this is a plain element-wise add.
inline void harvest_grads(std::span<const ad::Value> leaves, ParamVector& p) {
  for (std::size_t i = 0; i < leaves.size(); ++i) p.grads[i] += leaves[i].adjoint();
}

/**
 * Compares the tape gradient of a scalar objective against central finite
 * differences, sweeping every coordinate of every parameter block.
 *
 * F has signature (Tape&, const std::vector<std::vector<ad::Value>>&) -> ad::Value,
 * receiving one leaf vector per parameter block, and must be deterministic
 * (any randomness frozen by the caller).
 *
 * Returns max_i |grad_ad_i - grad_fd_i| / (|grad_fd_i| + 1e-12).
 */
template <class F>
double finite_diff_check(F&& f, std::vector<ParamVector*> params, double h) {
  if (!(h >= 1e-8 && h <= 1e-4)) throw std::invalid_argument("finite_diff_check: h outside [1e-8, 1e-4]");

  auto eval_value = [&]() {
    ad::Tape tape;
    std::vector<std::vector<ad::Value>> leaves;
    leaves.reserve(params.size());
    for (ParamVector* p : params) leaves.push_back(make_leaves(tape, *p));
    const double v = f(tape, leaves).value();
    if (!std::isfinite(v)) throw std::runtime_error("finite_diff_check: non-finite objective value");
    return v;
  };

  // reverse-mode gradient
  std::vector<std::vector<double>> ad_grads;
  {
    ad::Tape tape;
    std::vector<std::vector<ad::Value>> leaves;
    leaves.reserve(params.size());
    for (ParamVector* p : params) leaves.push_back(make_leaves(tape, *p));
    ad::Value out = f(tape, leaves);
    if (!std::isfinite(out.value())) throw std::runtime_error("finite_diff_check: non-finite objective value");
    tape.backward(out);
    for (auto& lv : leaves) {
      std::vector<double> g(lv.size());
      for (std::size_t i = 0; i < lv.size(); ++i) g[i] = lv[i].adjoint();
      ad_grads.push_back(std::move(g));
    }
  }

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ParamVector& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + h;
      const double fp = eval_value();
      p.values[i] = saved - h;
      const double fm = eval_value();
      p.values[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double rel = std::fabs(ad_grads[pi][i] - fd) / (std::fabs(fd) + 1e-12);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

template <class F>
double finite_diff_check(F&& f, ParamVector& params, double h) {
  auto wrap = [&](ad::Tape& t, const std::vector<std::vector<ad::Value>>& leaves) {
    return f(t, leaves[0]);
  };
  return finite_diff_check(wrap, std::vector<ParamVector*>{&params}, h);
}

}  // namespace dais
