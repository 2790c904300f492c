#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace imc {

/// Malformed or inconsistent input (dimension mismatch, invalid mass function, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure did not reach its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double last_width)
      : std::runtime_error(what), last_width_(last_width) {}
  double last_width() const noexcept { return last_width_; }

 private:
  double last_width_;
};

/// An operation that needs a PF-like operator was handed one that is not
/// (or could not be certified as such).
class NotPFLike : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checked property (martingale inequality, bound, ...) does not hold.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double mass_sum = 1e-12;    // |sum p - 1| at construction
  double comparison = 1e-12;  // property checks
};

/// A bounded real function on a finite state space.
class Gamble {
 public:
  Gamble() = default;
  explicit Gamble(std::vector<double> values) : values_(std::move(values)) { validate(); }
  Gamble(std::initializer_list<double> values) : values_(values) { validate(); }

  static Gamble constant(std::size_t n, double c) { return Gamble(std::vector<double>(n, c)); }
  static Gamble indicator(std::size_t n, std::size_t x) {
    if (x >= n) throw InputError("indicator index out of range");
    std::vector<double> v(n, 0.0);
    v[x] = 1.0;
    return Gamble(std::move(v));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  // ||h||_v = max h - min h
  double variation() const { return max() - min(); }
  bool is_constant() const { return variation() == 0.0; }

  Gamble operator-() const {
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](double a) { return -a; });
    return Gamble(std::move(v));
  }
  friend Gamble operator+(const Gamble& f, double mu) {
    std::vector<double> v(f.values_);
    for (double& a : v) a += mu;
    return Gamble(std::move(v));
  }
  friend Gamble operator*(double lambda, const Gamble& f) {
    std::vector<double> v(f.values_);
    for (double& a : v) a *= lambda;
    return Gamble(std::move(v));
  }
  friend Gamble operator+(const Gamble& f, const Gamble& g) {
    require_same_size(f, g);
    std::vector<double> v(f.values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += g.values_[i];
    return Gamble(std::move(v));
  }
  friend Gamble operator-(const Gamble& f, const Gamble& g) { return f + (-g); }
  friend bool operator==(const Gamble&, const Gamble&) = default;

  /// Pointwise f <= g.
  friend bool dominated(const Gamble& f, const Gamble& g) {
    require_same_size(f, g);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.values_[i] > g.values_[i]) return false;
    return true;
  }

 private:
  static void require_same_size(const Gamble& f, const Gamble& g) {
    if (f.size() != g.size()) throw InputError("gamble dimension mismatch");
  }
  void validate() const {
    if (values_.empty()) throw InputError("gamble must have dimension >= 1");
    for (double a : values_)
      if (!std::isfinite(a)) throw InputError("gamble entries must be finite");
  }

  std::vector<double> values_;
};

/// Gamble variant allowing +infinity entries (never -infinity). Used for
/// expected hitting times.
class ExtendedGamble {
 public:
  ExtendedGamble() = default;
  explicit ExtendedGamble(std::vector<double> values) : values_(std::move(values)) {
    for (double a : values_)
      if (std::isnan(a) || a == -std::numeric_limits<double>::infinity())
        throw InputError("extended gamble entries must lie in (-inf, +inf]");
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  bool is_finite(std::size_t i) const { return std::isfinite(values_[i]); }

 private:
  std::vector<double> values_;
};

/// A probability mass function on a finite state space.
class MassFunction {
 public:
  MassFunction() = default;
  explicit MassFunction(std::vector<double> probabilities, const Tolerances& tol = {})
      : p_(std::move(probabilities)) {
    if (p_.empty()) throw InputError("mass function must have dimension >= 1");
    double sum = 0.0;
    for (double a : p_) {
      if (!(a >= 0.0 && a <= 1.0)) throw InputError("mass function entries must lie in [0,1]");
      sum += a;
    }
    if (std::abs(sum - 1.0) > tol.mass_sum)
      throw InputError("mass function entries must sum to 1 (got " + std::to_string(sum) + ")");
  }

  static MassFunction degenerate(std::size_t n, std::size_t x) {
    if (x >= n) throw InputError("degenerate mass index out of range");
    std::vector<double> p(n, 0.0);
    p[x] = 1.0;
    return MassFunction(std::move(p));
  }
  static MassFunction uniform(std::size_t n) {
    if (n == 0) throw InputError("mass function must have dimension >= 1");
    return MassFunction(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probabilities() const noexcept { return p_; }

  /// Precise expectation sum_x p(x) f(x).
  double expectation(const Gamble& f) const {
    if (f.size() != p_.size()) throw InputError("dimension mismatch between mass function and gamble");
    double e = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) e += p_[i] * f[i];
    return e;
  }

  /// Expectation of an extended gamble with the convention 0 * (+inf) = 0.
  double expectation(const ExtendedGamble& f) const {
    if (f.size() != p_.size()) throw InputError("dimension mismatch between mass function and gamble");
    double e = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (p_[i] == 0.0) continue;
      e += p_[i] * f[i];
    }
    return e;
  }

  friend bool operator==(const MassFunction&, const MassFunction&) = default;

 private:
  std::vector<double> p_;
};

}  // namespace imc
