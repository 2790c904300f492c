#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "imc/chain.hpp"
#include "imc/credal.hpp"
#include "imc/gamble.hpp"
#include "imc/random.hpp"

namespace imc {

/// A situation x_1..x_n; the empty sequence is the initial situation.
using Situation = std::vector<std::size_t>;

inline constexpr std::size_t kMaxSituations = 20'000'000;

/// Shape of a finite-depth event tree: branching[k] = |X_{k+1}|. Situations
/// at depth k are numbered in mixed radix with x_1 most significant, so a
/// gamble on depth-k situations is a flat table in lexicographic order.
class TreeShape {
 public:
  TreeShape() = default;
  explicit TreeShape(std::vector<std::size_t> branching) : branching_(std::move(branching)) {
    if (branching_.empty()) throw InputError("tree depth must be >= 1");
    level_size_.push_back(1);
    std::size_t total = 1;
    for (std::size_t b : branching_) {
      if (b == 0) throw InputError("every level needs at least one state");
      if (level_size_.back() > kMaxSituations / b) throw InputError("tree too large to materialise");
      level_size_.push_back(level_size_.back() * b);
      total += level_size_.back();
      if (total > kMaxSituations) throw InputError("tree too large to materialise");
    }
  }

  std::size_t depth() const noexcept { return branching_.size(); }
  std::size_t branching(std::size_t level) const { return branching_.at(level); }
  const std::vector<std::size_t>& branching() const noexcept { return branching_; }
  std::size_t level_size(std::size_t level) const { return level_size_.at(level); }
  std::size_t situation_count() const {
    std::size_t total = 0;
    for (std::size_t s : level_size_) total += s;
    return total;
  }

  std::size_t index_of(const Situation& s) const {
    if (s.size() > depth()) throw InputError("unknown situation: deeper than the tree");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] >= branching_[k]) throw InputError("unknown situation: state index out of range");
      idx = idx * branching_[k] + s[k];
    }
    return idx;
  }
  Situation situation_at(std::size_t level, std::size_t index) const {
    Situation s(level);
    for (std::size_t k = level; k > 0; --k) {
      s[k - 1] = index % branching_[k - 1];
      index /= branching_[k - 1];
    }
    return s;
  }
  std::size_t child(std::size_t level, std::size_t index, std::size_t x) const {
    return index * branching_[level] + x;
  }
  /// First index and count of the depth-`to` descendants of situation
  /// (level, index).
  std::pair<std::size_t, std::size_t> descendants(std::size_t level, std::size_t index, std::size_t to) const {
    std::size_t span = 1;
    for (std::size_t k = level; k < to; ++k) span *= branching_[k];
    return {index * span, span};
  }

  friend bool operator==(const TreeShape&, const TreeShape&) = default;

 private:
  std::vector<std::size_t> branching_;
  std::vector<std::size_t> level_size_;
};

/// Event tree with a credal set attached to every non-leaf situation.
class ImpreciseProbabilityTree {
 public:
  using LocalFactory = std::function<CredalSet(const Situation&)>;

  ImpreciseProbabilityTree(TreeShape shape, const LocalFactory& local) : shape_(std::move(shape)) {
    local_.resize(shape_.depth());
    for (std::size_t k = 0; k < shape_.depth(); ++k) {
      local_[k].reserve(shape_.level_size(k));
      for (std::size_t i = 0; i < shape_.level_size(k); ++i) {
        local_[k].push_back(local(shape_.situation_at(k, i)));
        if (local_[k].back().dimension() != shape_.branching(k))
          throw InputError("local model dimension does not match the number of next states");
      }
    }
  }

  /// Same local model in every situation.
  static ImpreciseProbabilityTree homogeneous(std::size_t depth, const CredalSet& local) {
    return ImpreciseProbabilityTree(TreeShape(std::vector<std::size_t>(depth, local.dimension())),
                                    [&](const Situation&) { return local; });
  }

  const TreeShape& shape() const noexcept { return shape_; }
  std::size_t depth() const noexcept { return shape_.depth(); }
  const CredalSet& local(std::size_t level, std::size_t index) const { return local_.at(level).at(index); }
  const CredalSet& local(const Situation& s) const {
    if (s.size() >= depth()) throw InputError("leaf situations carry no local model");
    return local(s.size(), shape_.index_of(s));
  }

 private:
  TreeShape shape_;
  std::vector<std::vector<CredalSet>> local_;
};

/// Tree whose local model in x_1..x_n is row x_n, and the initial model in
/// the initial situation.
inline ImpreciseProbabilityTree markov_tree(const ImpreciseMarkovChain& chain, std::size_t depth) {
  return ImpreciseProbabilityTree(TreeShape(std::vector<std::size_t>(depth, chain.size())),
                                  [&](const Situation& s) { return s.empty() ? chain.initial : chain.op.row(s.back()); });
}

// ---------------------------------------------------------------------------
// Global lower expectations

namespace detail {
inline void check_leaf_gamble(const TreeShape& shape, std::size_t n, const std::vector<double>& f) {
  if (n > shape.depth()) throw InputError("gamble horizon exceeds tree depth");
  if (f.size() != shape.level_size(n)) throw InputError("gamble table does not match the depth-n situations");
}
}  // namespace detail

/// Lower expectation of an n-measurable gamble f (a table over depth-n
/// situations) conditional on every depth-m situation, by backward
/// recursion through the local models.
inline std::vector<double> conditional_lower_expectations(const ImpreciseProbabilityTree& tree, std::size_t n,
                                                          const std::vector<double>& f, std::size_t m) {
  const auto& shape = tree.shape();
  detail::check_leaf_gamble(shape, n, f);
  if (m > n) throw InputError("conditioning depth exceeds gamble horizon");
  std::vector<double> values = f;
  std::vector<double> slice;
  for (std::size_t k = n; k > m; --k) {
    const std::size_t b = shape.branching(k - 1);
    std::vector<double> up(shape.level_size(k - 1));
    slice.resize(b);
    for (std::size_t i = 0; i < up.size(); ++i) {
      for (std::size_t x = 0; x < b; ++x) slice[x] = values[i * b + x];
      up[i] = lower_expectation(tree.local(k - 1, i), Gamble(slice));
    }
    values = std::move(up);
  }
  return values;
}

/// Lower expectation of f conditional on situation s, recursing only
/// through the subtree below s.
inline double global_lower_expectation(const ImpreciseProbabilityTree& tree, std::size_t n,
                                       const std::vector<double>& f, const Situation& s) {
  const auto& shape = tree.shape();
  detail::check_leaf_gamble(shape, n, f);
  const std::size_t m = s.size();
  if (m > n) throw InputError("situation lies beyond the gamble horizon");
  const std::size_t root = shape.index_of(s);
  auto [first, count] = shape.descendants(m, root, n);
  std::vector<double> values(f.begin() + static_cast<std::ptrdiff_t>(first),
                             f.begin() + static_cast<std::ptrdiff_t>(first + count));
  std::vector<double> slice;
  for (std::size_t k = n; k > m; --k) {
    const std::size_t b = shape.branching(k - 1);
    const std::size_t base = shape.descendants(m, root, k - 1).first;
    std::vector<double> up(values.size() / b);
    slice.resize(b);
    for (std::size_t i = 0; i < up.size(); ++i) {
      for (std::size_t x = 0; x < b; ++x) slice[x] = values[i * b + x];
      up[i] = lower_expectation(tree.local(k - 1, base + i), Gamble(slice));
    }
    values = std::move(up);
  }
  return values.front();
}

inline double global_upper_expectation(const ImpreciseProbabilityTree& tree, std::size_t n,
                                       const std::vector<double>& f, const Situation& s) {
  std::vector<double> neg(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) neg[i] = -f[i];
  return -global_lower_expectation(tree, n, neg, s);
}

inline constexpr std::uint64_t kMaxOracleSelections = 10'000'000;

/// Minimum, over every choice of one vertex per non-leaf situation of the
/// subtree below s (depths |s|..n-1), of the precise conditional expectation
/// of f given s in the resulting precise tree.
inline double brute_force_oracle(const ImpreciseProbabilityTree& tree, std::size_t n, const std::vector<double>& f,
                                 const Situation& s) {
  const auto& shape = tree.shape();
  detail::check_leaf_gamble(shape, n, f);
  const std::size_t m = s.size();
  if (m > n) throw InputError("situation lies beyond the gamble horizon");
  const std::size_t root = shape.index_of(s);
  if (m == n) return f[root];

  // Per level k in [m, n], the descendants of s occupy [base[k], base[k]+count[k]).
  std::vector<std::size_t> base(n + 1), count(n + 1);
  for (std::size_t k = m; k <= n; ++k) std::tie(base[k], count[k]) = shape.descendants(m, root, k);

  struct Node {
    std::size_t level, index;
  };
  std::vector<Node> digits;  // odometer digits, deepest situations first
  std::uint64_t combos = 1;
  for (std::size_t k = n; k-- > m;) {
    for (std::size_t i = 0; i < count[k]; ++i) {
      const std::size_t vc = tree.local(k, base[k] + i).vertex_count();
      if (combos > kMaxOracleSelections / vc) throw InputError("brute-force oracle: too many vertex selections");
      combos *= vc;
      digits.push_back({k, base[k] + i});
    }
  }

  // val[k][i - base[k]]: precise expectation of f given that situation.
  std::vector<std::vector<double>> val(n + 1);
  val[n].assign(f.begin() + static_cast<std::ptrdiff_t>(base[n]),
                f.begin() + static_cast<std::ptrdiff_t>(base[n] + count[n]));
  for (std::size_t k = m; k < n; ++k) val[k].assign(count[k], 0.0);
  std::vector<std::vector<std::size_t>> choice(n);
  for (std::size_t k = m; k < n; ++k) choice[k].assign(count[k], 0);

  auto evaluate = [&](std::size_t k, std::size_t i) {
    const auto& p = tree.local(k, i).vertex(choice[k][i - base[k]]);
    const std::size_t b = shape.branching(k);
    double e = 0.0;
    for (std::size_t x = 0; x < b; ++x) e += p[x] * val[k + 1][shape.child(k, i, x) - base[k + 1]];
    val[k][i - base[k]] = e;
  };
  auto refresh_upwards = [&](std::size_t k, std::size_t i) {
    for (;;) {
      evaluate(k, i);
      if (k == m) break;
      i /= shape.branching(k - 1);
      --k;
    }
  };
  for (const auto& d : digits) evaluate(d.level, d.index);

  double best = val[m][0];
  for (std::uint64_t step = 1; step < combos; ++step) {
    // Advance the odometer and re-evaluate every situation whose choice changed.
    for (const auto& d : digits) {
      auto& c = choice[d.level][d.index - base[d.level]];
      const bool carry = ++c == tree.local(d.level, d.index).vertex_count();
      if (carry) c = 0;
      refresh_upwards(d.level, d.index);
      if (!carry) break;
    }
    best = std::min(best, val[m][0]);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Processes

/// Real-valued map on every situation of a tree shape (depths 0..depth).
class RealProcess {
 public:
  RealProcess() = default;
  explicit RealProcess(TreeShape shape, double fill = 0.0) : shape_(std::move(shape)) {
    values_.resize(shape_.depth() + 1);
    for (std::size_t k = 0; k <= shape_.depth(); ++k) values_[k].assign(shape_.level_size(k), fill);
  }
  RealProcess(TreeShape shape, const std::function<double(const Situation&)>& fn) : RealProcess(std::move(shape)) {
    for (std::size_t k = 0; k <= shape_.depth(); ++k)
      for (std::size_t i = 0; i < shape_.level_size(k); ++i) {
        const double v = fn(shape_.situation_at(k, i));
        if (!std::isfinite(v)) throw InputError("real process values must be finite");
        values_[k][i] = v;
      }
  }

  const TreeShape& shape() const noexcept { return shape_; }
  double at(std::size_t level, std::size_t index) const { return values_.at(level).at(index); }
  double& at(std::size_t level, std::size_t index) { return values_.at(level).at(index); }
  double at(const Situation& s) const { return at(s.size(), shape_.index_of(s)); }
  double& at(const Situation& s) { return at(s.size(), shape_.index_of(s)); }

  /// Process difference: the gamble x -> M(s x) - M(s) on the next state.
  Gamble difference(std::size_t level, std::size_t index) const {
    if (level >= shape_.depth()) throw InputError("leaf situations have no process difference");
    const std::size_t b = shape_.branching(level);
    std::vector<double> d(b);
    for (std::size_t x = 0; x < b; ++x) d[x] = values_[level + 1][shape_.child(level, index, x)] - values_[level][index];
    return Gamble(std::move(d));
  }

  RealProcess operator-() const {
    RealProcess out = *this;
    for (auto& level : out.values_)
      for (double& v : level) v = -v;
    return out;
  }

 private:
  TreeShape shape_;
  std::vector<std::vector<double>> values_;
};

/// {0,1}-valued process.
class SelectorProcess {
 public:
  SelectorProcess() = default;
  explicit SelectorProcess(TreeShape shape) : SelectorProcess(std::move(shape), true) {}
  template <std::same_as<bool> Fill>
  SelectorProcess(TreeShape shape, Fill fill) : shape_(std::move(shape)) {
    values_.resize(shape_.depth() + 1);
    for (std::size_t k = 0; k <= shape_.depth(); ++k) values_[k].assign(shape_.level_size(k), fill ? 1 : 0);
  }
  template <std::invocable<const Situation&> Fn>
  SelectorProcess(TreeShape shape, Fn&& fn) : SelectorProcess(std::move(shape)) {
    for (std::size_t k = 0; k <= shape_.depth(); ++k)
      for (std::size_t i = 0; i < shape_.level_size(k); ++i) {
        const int v = fn(shape_.situation_at(k, i));
        if (v != 0 && v != 1) throw InputError("selector process values must be 0 or 1");
        values_[k][i] = static_cast<unsigned char>(v);
      }
  }

  const TreeShape& shape() const noexcept { return shape_; }
  int at(std::size_t level, std::size_t index) const { return values_.at(level).at(index); }
  int at(const Situation& s) const { return at(s.size(), shape_.index_of(s)); }

 private:
  TreeShape shape_;
  std::vector<std::vector<unsigned char>> values_;
};

// ---------------------------------------------------------------------------
// Martingale checks

struct MartingaleViolation {
  Situation situation;
  double local_value;  // lower (sub) or upper (super) expectation of the difference
};

struct MartingaleReport {
  std::vector<MartingaleViolation> violations;
  std::size_t situations_checked = 0;
  bool ok() const { return violations.empty(); }
};

namespace detail {
template <typename Local>
MartingaleReport check_differences(const ImpreciseProbabilityTree& tree, const RealProcess& m, Local&& accept) {
  if (!(m.shape() == tree.shape())) throw InputError("process shape does not match the tree");
  MartingaleReport rep;
  const auto& shape = tree.shape();
  for (std::size_t k = 0; k < shape.depth(); ++k)
    for (std::size_t i = 0; i < shape.level_size(k); ++i) {
      ++rep.situations_checked;
      const auto [ok, value] = accept(tree.local(k, i), m.difference(k, i));
      if (!ok) rep.violations.push_back({shape.situation_at(k, i), value});
    }
  return rep;
}
}  // namespace detail

/// Reports every non-leaf situation where the local lower expectation of
/// the process difference is below -tol.
inline MartingaleReport verify_submartingale(const ImpreciseProbabilityTree& tree, const RealProcess& m,
                                             double tol = 1e-12) {
  return detail::check_differences(tree, m, [&](const CredalSet& local, const Gamble& d) {
    const double v = lower_expectation(local, d);
    return std::pair{v >= -tol, v};
  });
}

/// Reports every non-leaf situation where the local upper expectation of
/// the process difference exceeds tol.
inline MartingaleReport verify_supermartingale(const ImpreciseProbabilityTree& tree, const RealProcess& m,
                                               double tol = 1e-12) {
  return detail::check_differences(tree, m, [&](const CredalSet& local, const Gamble& d) {
    const double v = upper_expectation(local, d);
    return std::pair{v <= tol, v};
  });
}

struct PathStatistics {
  double avg = 0.0;    // path average of the differences
  double b_avg = 0.0;  // selector-weighted average, 0 when no step is selected
  std::size_t b_count = 0;
};

/// Path-averaged and selector-averaged differences of M along x_1..x_n.
inline PathStatistics process_statistics(const RealProcess& m, const SelectorProcess& b, const Situation& path) {
  const auto& shape = m.shape();
  if (!(b.shape() == shape)) throw InputError("selector shape does not match the process");
  shape.index_of(path);  // validates the path
  PathStatistics st;
  const std::size_t n = path.size();
  if (n == 0) return st;
  double sum = 0.0, bsum = 0.0;
  std::size_t idx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t next = shape.child(k, idx, path[k]);
    const double delta = m.at(k + 1, next) - m.at(k, idx);
    sum += delta;
    if (b.at(k, idx)) {
      bsum += delta;
      ++st.b_count;
    }
    idx = next;
  }
  st.avg = sum / static_cast<double>(n);
  st.b_avg = st.b_count == 0 ? 0.0 : bsum / static_cast<double>(st.b_count);
  return st;
}

// ---------------------------------------------------------------------------
// Random trees

struct RandomTreeOptions {
  std::size_t max_depth = 4;
  std::size_t max_states = 3;
  std::size_t max_vertices = 3;
  // Upper bound on the number of vertex selections, so the brute-force
  // oracle stays affordable. Vertex counts are reduced until it holds.
  std::uint64_t selection_budget = 200'000;
};

/// Random tree with depth in [1, max_depth], per-level state counts in
/// [2, max_states] and per-situation vertex counts in [1, max_vertices].
inline ImpreciseProbabilityTree random_tree(Rng& rng, const RandomTreeOptions& opt = {}) {
  const std::size_t depth = 1 + rng.index(opt.max_depth);
  std::vector<std::size_t> branching(depth);
  for (auto& b : branching) b = 2 + rng.index(opt.max_states - 1);
  TreeShape shape(branching);

  std::vector<std::vector<std::size_t>> vc(depth);
  long double log_combos = 0;
  std::vector<std::pair<std::size_t, std::size_t>> multi;  // situations with > 1 vertex
  for (std::size_t k = 0; k < depth; ++k) {
    vc[k].resize(shape.level_size(k));
    for (std::size_t i = 0; i < vc[k].size(); ++i) {
      vc[k][i] = 1 + rng.index(opt.max_vertices);
      log_combos += std::log(static_cast<long double>(vc[k][i]));
      if (vc[k][i] > 1) multi.emplace_back(k, i);
    }
  }
  const long double log_budget = std::log(static_cast<long double>(opt.selection_budget));
  while (log_combos > log_budget && !multi.empty()) {
    const std::size_t pick = rng.index(multi.size());
    auto [k, i] = multi[pick];
    log_combos -= std::log(static_cast<long double>(vc[k][i]));
    --vc[k][i];
    log_combos += std::log(static_cast<long double>(vc[k][i]));
    if (vc[k][i] == 1) {
      multi[pick] = multi.back();
      multi.pop_back();
    }
  }
  return ImpreciseProbabilityTree(shape, [&](const Situation& s) {
    return random_credal_set(rng, shape.branching(s.size()), vc[s.size()][shape.index_of(s)]);
  });
}

}  // namespace imc
