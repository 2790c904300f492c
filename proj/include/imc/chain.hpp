#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imc/credal.hpp"
#include "imc/gamble.hpp"

namespace imc {

/// Lower transition operator: one credal set per state, Tf(x) = lower
/// expectation of f under row x.
class LowerTransitionOperator {
 public:
  LowerTransitionOperator() = default;
  explicit LowerTransitionOperator(std::vector<CredalSet> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw InputError("operator needs at least one state");
    for (const auto& r : rows_)
      if (r.dimension() != rows_.size())
        throw InputError("every operator row must have dimension equal to the state count");
  }

  /// Rows given as a row-stochastic matrix.
  static LowerTransitionOperator precise(const std::vector<std::vector<double>>& matrix) {
    std::vector<CredalSet> rows;
    rows.reserve(matrix.size());
    for (const auto& r : matrix) rows.push_back(make_precise(MassFunction(r)));
    return LowerTransitionOperator(std::move(rows));
  }

  std::size_t dimension() const noexcept { return rows_.size(); }
  const std::vector<CredalSet>& rows() const noexcept { return rows_; }
  const CredalSet& row(std::size_t x) const { return rows_.at(x); }
  bool is_precise() const {
    for (const auto& r : rows_)
      if (!r.is_precise()) return false;
    return true;
  }

  friend bool operator==(const LowerTransitionOperator&, const LowerTransitionOperator&) = default;

 private:
  std::vector<CredalSet> rows_;
};

/// Initial (marginal) model plus a time-homogeneous lower transition operator.
struct ImpreciseMarkovChain {
  std::vector<std::string> states;
  CredalSet initial;
  LowerTransitionOperator op;

  ImpreciseMarkovChain() = default;
  ImpreciseMarkovChain(std::vector<std::string> labels, CredalSet init, LowerTransitionOperator t)
      : states(std::move(labels)), initial(std::move(init)), op(std::move(t)) {
    if (states.empty()) {
      for (std::size_t x = 0; x < op.dimension(); ++x) states.push_back(std::to_string(x));
    }
    if (states.size() != op.dimension() || initial.dimension() != op.dimension())
      throw InputError("chain dimensions disagree (labels, initial model, operator)");
  }

  std::size_t size() const noexcept { return op.dimension(); }
  std::size_t index_of(const std::string& label) const {
    for (std::size_t x = 0; x < states.size(); ++x)
      if (states[x] == label) return x;
    throw InputError("unknown state label '" + label + "'");
  }
};

// ---------------------------------------------------------------------------
// Application

inline Gamble apply_operator(const LowerTransitionOperator& t, const Gamble& f) {
  if (f.size() != t.dimension()) throw InputError("dimension mismatch between operator and gamble");
  std::vector<double> out(t.dimension());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = lower_expectation(t.row(x), f);
  return Gamble(std::move(out));
}

/// Conjugate upper operator: -T(-f).
inline Gamble apply_upper_operator(const LowerTransitionOperator& t, const Gamble& f) {
  return -apply_operator(t, -f);
}

inline Gamble operator_power_apply(const LowerTransitionOperator& t, std::size_t n, Gamble f) {
  for (std::size_t k = 0; k < n; ++k) f = apply_operator(t, f);
  return f;
}

/// Lower expectation of f(X_n), i.e. the initial model applied to T^{n-1} f.
inline double marginal_lower_expectation(const ImpreciseMarkovChain& chain, std::size_t n, const Gamble& f) {
  if (n < 1) throw InputError("marginal_lower_expectation needs n >= 1");
  return lower_expectation(chain.initial, operator_power_apply(chain.op, n - 1, f));
}

// ---------------------------------------------------------------------------
// Coefficient of ergodicity

struct CoefficientEstimate {
  double value = 0.0;
  // True when rows are precise: then the {0,1} search attains the maximum
  // over [0,1]^X and the value is the coefficient itself. Otherwise it is a
  // certified lower bound.
  bool exact = false;
  // Certified upper bound: max over events A and states x, y of
  // Tbar^r 1_A(x) - T^r 1_A(y). Equal to value when rows are precise.
  double upper = 1.0;
};

/// rho(T^r) = max_h ||T^r h||_v over the searched gambles h in [0,1]^X.
inline CoefficientEstimate ergodicity_coefficient(const LowerTransitionOperator& t, std::size_t r,
                                                  const GambleSearch& mode = {}) {
  if (r < 1) throw InputError("ergodicity_coefficient needs r >= 1");
  const bool precise = t.is_precise();
  double rho = 0.0, upper = 0.0;
  for_each_search_gamble(t.dimension(), mode, false, [&](const Gamble& h) {
    const Gamble lo = operator_power_apply(t, r, h);
    rho = std::max(rho, lo.variation());
    if (precise) return;
    // Only {0,1} gambles enter the bound; grid samples have fractional values.
    for (double v : h.values())
      if (v != 0.0 && v != 1.0) return;
    const Gamble hi = -operator_power_apply(t, r, -h);
    upper = std::max(upper, hi.max() - lo.min());
  });
  return {rho, precise, precise ? rho : std::clamp(std::max(upper, rho), 0.0, 1.0)};
}

// ---------------------------------------------------------------------------
// Stationary lower expectation

struct StationaryEstimate {
  double value = 0.0;  // midpoint of [min g, max g]
  double width = 0.0;  // ||g||_v, the interval length
  std::size_t iterations = 0;
  double lower() const { return value - width / 2; }
  double upper() const { return value + width / 2; }
};

/// Iterates g <- Tg from f until ||g||_v <= tol; the stationary lower
/// expectation lies in [min g, max g].
inline StationaryEstimate stationary_lower_expectation(const LowerTransitionOperator& t, const Gamble& f,
                                                       double tol = 1e-10, std::size_t max_iter = 1'000'000) {
  if (!(tol > 0.0)) throw InputError("stationary_lower_expectation needs tol > 0");
  if (f.size() != t.dimension()) throw InputError("dimension mismatch between operator and gamble");
  Gamble g = f;
  std::size_t k = 0;
  while (g.variation() > tol) {
    if (k == max_iter)
      throw NonConvergence("stationary lower expectation did not converge within " + std::to_string(max_iter) +
                               " iterations (width " + std::to_string(g.variation()) + ")",
                           g.variation());
    g = apply_operator(t, g);
    ++k;
  }
  const double lo = g.min(), hi = g.max();
  return {(lo + hi) / 2, hi - lo, k};
}

// ---------------------------------------------------------------------------
// Structure of the transition graph

namespace detail {

/// Adjacency of the graph with an edge x -> z whenever some vertex of row x
/// puts positive mass on z (the support of the upper transition probability).
inline std::vector<std::vector<bool>> upper_support(const LowerTransitionOperator& t) {
  const std::size_t n = t.dimension();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t x = 0; x < n; ++x)
    for (const auto& v : t.row(x).vertices())
      for (std::size_t z = 0; z < n; ++z)
        if (v[z] > 0.0) adj[x][z] = true;
  return adj;
}

inline std::vector<std::vector<bool>> bool_product(const std::vector<std::vector<bool>>& a,
                                                   const std::vector<std::vector<bool>>& b) {
  const std::size_t n = a.size();
  std::vector<std::vector<bool>> c(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (a[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (b[k][j]) c[i][j] = true;
  return c;
}

/// Strongly connected components (Tarjan); returns component id per node.
inline std::vector<std::size_t> strong_components(const std::vector<std::vector<bool>>& adj,
                                                  std::size_t& count) {
  const std::size_t n = adj.size();
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset), stack;
  std::vector<bool> on_stack(n, false);
  std::size_t next = 0;
  count = 0;
  auto visit = [&](auto&& self, std::size_t v) -> void {
    index[v] = low[v] = next++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (!adj[v][w]) continue;
      if (index[w] == unset) {
        self(self, w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = count;
      } while (w != v);
      ++count;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == unset) visit(visit, v);
  return comp;
}

struct PreciseStructure {
  std::size_t closed_classes = 0;
  std::size_t period = 1;  // of the unique closed class, when there is one
};

/// Closed communicating classes and the period of the closed class, for a
/// precise operator (edges where the single vertex is positive).
inline PreciseStructure precise_structure(const LowerTransitionOperator& t) {
  const auto adj = upper_support(t);
  const std::size_t n = adj.size();
  std::size_t count = 0;
  const auto comp = strong_components(adj, count);
  std::vector<bool> closed(count, true);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t z = 0; z < n; ++z)
      if (adj[x][z] && comp[x] != comp[z]) closed[comp[x]] = false;
  PreciseStructure s;
  std::size_t which = 0;
  for (std::size_t c = 0; c < count; ++c)
    if (closed[c]) {
      ++s.closed_classes;
      which = c;
    }
  if (s.closed_classes != 1) return s;
  // Period: gcd of level differences along edges inside the class (BFS levels).
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> level(n, unset);
  std::size_t root = 0;
  while (comp[root] != which) ++root;
  std::vector<std::size_t> queue{root};
  level[root] = 0;
  std::size_t g = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t v = queue[qi];
    for (std::size_t w = 0; w < n; ++w) {
      if (!adj[v][w] || comp[w] != which) continue;
      if (level[w] == unset) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      } else {
        const std::size_t a = level[v] + 1, b = level[w];
        const std::size_t diff = a > b ? a - b : b - a;
        std::size_t x = g, y = diff;
        while (y != 0) {
          const std::size_t r = x % y;
          x = y;
          y = r;
        }
        g = x;
      }
    }
  }
  s.period = g == 0 ? 1 : g;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PF-like detection

struct ErgodicityReport {
  enum class Verdict { PFLike, NotPFLikeCertified, Inconclusive };
  enum class Certificate { None, Coefficient, Reachability };

  std::vector<std::pair<std::size_t, double>> rho_by_power;  // (r, rho(T^r))
  std::vector<double> rho_upper_by_power;                   // certified upper bounds, same order
  Verdict verdict = Verdict::Inconclusive;
  Certificate certificate = Certificate::None;
  std::size_t r = 0;    // power attaining the verdict when PFLike
  double rho = 1.0;        // rho(T^r) at that power
  double rho_bound = 1.0;  // certified upper bound on rho(T^r) at that power
  bool rho_exact = false;
  bool reachability_ok = false;
  std::size_t reachability_steps = 0;  // n with min_x Tbar^n 1_y (x) > 0 for all y
  double stationary_interval_width = 0.0;

  bool pf_like() const { return verdict == Verdict::PFLike; }
};

inline std::string to_string(ErgodicityReport::Verdict v) {
  switch (v) {
    case ErgodicityReport::Verdict::PFLike: return "PFLike";
    case ErgodicityReport::Verdict::NotPFLikeCertified: return "NotPFLikeCertified";
    case ErgodicityReport::Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

/// Smallest n <= n_max with min_x Tbar^n 1_{y}(x) > 0 for every y: every
/// state reachable from every state with positive upper probability in
/// exactly n steps. Positivity is decided on the support graph, which is
/// exact: Tbar^n 1_y (x) > 0 iff an n-step path x -> y exists there.
inline std::optional<std::size_t> reachability_steps(const LowerTransitionOperator& t, std::size_t n_max) {
  const auto adj = detail::upper_support(t);
  auto power = adj;
  for (std::size_t n = 1; n <= n_max; ++n) {
    bool all = true;
    for (const auto& row : power)
      for (bool b : row) all = all && b;
    if (all) return n;
    power = detail::bool_product(power, adj);
  }
  return std::nullopt;
}

inline constexpr double kRhoStrictMargin = 1e-12;

/// r_max and n_reach default to 2|X|^2 when zero.
inline ErgodicityReport detect_pf_like(const LowerTransitionOperator& t, std::size_t r_max = 0,
                                       std::size_t n_reach = 0, const GambleSearch& mode = {}) {
  const std::size_t n = t.dimension();
  if (r_max == 0) r_max = 2 * n * n;
  if (n_reach == 0) n_reach = 2 * n * n;

  ErgodicityReport rep;
  rep.rho_exact = t.is_precise();
  // The certificate uses the upper bound: for imprecise rows the searched
  // value alone can sit below 1 while the coefficient itself does not.
  for (std::size_t r = 1; r <= r_max; ++r) {
    const auto c = ergodicity_coefficient(t, r, mode);
    rep.rho_by_power.emplace_back(r, c.value);
    rep.rho_upper_by_power.push_back(c.upper);
    if (c.upper < 1.0 - kRhoStrictMargin) {
      rep.verdict = ErgodicityReport::Verdict::PFLike;
      rep.certificate = ErgodicityReport::Certificate::Coefficient;
      rep.r = r;
      rep.rho = c.value;
      rep.rho_bound = c.upper;
      break;
    }
  }
  if (auto steps = reachability_steps(t, n_reach)) {
    rep.reachability_ok = true;
    rep.reachability_steps = *steps;
  }
  if (!rep.pf_like()) {
    if (rep.reachability_ok) {
      rep.verdict = ErgodicityReport::Verdict::PFLike;
      rep.certificate = ErgodicityReport::Certificate::Reachability;
      rep.r = rep.reachability_steps;
      if (rep.r <= rep.rho_by_power.size()) {
        rep.rho = rep.rho_by_power[rep.r - 1].second;
        rep.rho_bound = rep.rho_upper_by_power[rep.r - 1];
      } else {
        const auto c = ergodicity_coefficient(t, rep.r, mode);
        rep.rho = c.value;
        rep.rho_bound = c.upper;
      }
    } else if (rep.rho_exact) {
      const auto s = detail::precise_structure(t);
      if (s.closed_classes != 1 || s.period > 1) rep.verdict = ErgodicityReport::Verdict::NotPFLikeCertified;
    }
  }
  // Width of the stationary interval after r_max contractions of an
  // indicator-valued gamble, from the certified bound when it contracts.
  rep.stationary_interval_width =
      rep.pf_like() && rep.rho_bound < 1.0
          ? std::pow(rep.rho_bound, std::floor(static_cast<double>(r_max) / static_cast<double>(rep.r)))
          : 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-horizon joint lower expectations

inline constexpr std::size_t kMaxJointTable = 1'000'000;

namespace detail {

inline std::size_t checked_table_size(std::size_t states, std::size_t n) {
  std::size_t size = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (size > kMaxJointTable / states) throw InputError("joint gamble table exceeds 10^6 entries");
    size *= states;
  }
  return size;
}

/// Collapses a gamble on X^n (lexicographic, x_1 most significant) to a
/// gamble on X by backward recursion through the rows of t.
inline Gamble collapse_joint(const LowerTransitionOperator& t, std::size_t n, const std::vector<double>& table) {
  const std::size_t s = t.dimension();
  if (n < 1) throw InputError("joint gamble needs n >= 1");
  if (table.size() != checked_table_size(s, n)) throw InputError("joint gamble table has the wrong size");
  std::vector<double> g = table;
  for (std::size_t k = n; k > 1; --k) {
    // g is over X^k; produce g' over X^{k-1}: g'(x_1..x_{k-1}) = T_{x_{k-1}}(g(x_1..x_{k-1}, .)).
    std::vector<double> next(g.size() / s);
    std::vector<double> slice(s);
    for (std::size_t prefix = 0; prefix < next.size(); ++prefix) {
      for (std::size_t z = 0; z < s; ++z) slice[z] = g[prefix * s + z];
      next[prefix] = lower_expectation(t.row(prefix % s), Gamble(slice));
    }
    g = std::move(next);
  }
  return Gamble(std::move(g));
}

}  // namespace detail

/// Global lower expectation of a gamble on (X_1..X_n), given as a table
/// over X^n in lexicographic order with x_1 most significant.
inline double finite_horizon_joint(const ImpreciseMarkovChain& chain, std::size_t n, const std::vector<double>& table) {
  return lower_expectation(chain.initial, detail::collapse_joint(chain.op, n, table));
}

/// Lower expectation of f(X_1..X_r) under the stationary chain.
inline StationaryEstimate stationary_joint_lower_expectation(const LowerTransitionOperator& t, std::size_t r,
                                                             const std::vector<double>& table, double tol = 1e-10,
                                                             std::size_t max_iter = 1'000'000) {
  return stationary_lower_expectation(t, detail::collapse_joint(t, r, table), tol, max_iter);
}

// ---------------------------------------------------------------------------
// Stationarity

struct StationarityOptions {
  double tol = 1e-8;
  double stationary_tol = 1e-12;
  GambleSearch search = GambleSearch::grid(200, 0);
};

/// True iff the initial model matches the stationary lower expectation on
/// every searched gamble in [0,1]^X. Throws NotPFLike when the operator is
/// not certified PF-like.
inline bool check_stationarity(const ImpreciseMarkovChain& chain, const StationarityOptions& opt = {}) {
  const auto report = detect_pf_like(chain.op);
  if (!report.pf_like()) throw NotPFLike("check_stationarity: operator is not (certified) PF-like");
  const double d = functional_distance(
      chain.size(), [&](const Gamble& h) { return lower_expectation(chain.initial, h); },
      [&](const Gamble& h) { return stationary_lower_expectation(chain.op, h, opt.stationary_tol).value; },
      opt.search);
  return d <= opt.tol;
}

}  // namespace imc
