#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imc/chain.hpp"
#include "imc/credal.hpp"
#include "imc/gamble.hpp"
#include "imc/random.hpp"
#include "imc/tree.hpp"

namespace imc {

/// Finite path prefix x_1..x_n together with how it was produced.
struct Path {
  std::vector<std::size_t> states;
  std::uint64_t seed = 0;
  std::string policy_tag;

  std::size_t size() const noexcept { return states.size(); }
};

// ---------------------------------------------------------------------------
// Selection policies: which compatible mass function drives each step

/// Always the same vertex: `initial` for the first state, rows[x] after x.
struct FixedVertex {
  std::size_t initial = 0;
  std::vector<std::size_t> rows;
};
/// A uniformly drawn vertex at every step.
struct RandomVertex {};
/// Greedy one-step adversary: the vertex minimising the expectation of f.
struct AdversarialFor {
  Gamble f;
};

using SelectionPolicy = std::variant<FixedVertex, RandomVertex, AdversarialFor>;

inline std::string policy_tag(const SelectionPolicy& policy) {
  struct Tag {
    std::string operator()(const FixedVertex& p) const {
      std::string s = "fixed:" + std::to_string(p.initial);
      for (std::size_t v : p.rows) s += "," + std::to_string(v);
      return s;
    }
    std::string operator()(const RandomVertex&) const { return "random"; }
    std::string operator()(const AdversarialFor&) const { return "adversarial"; }
  };
  return std::visit(Tag{}, policy);
}

namespace detail {

inline std::size_t select_vertex(const CredalSet& model, const SelectionPolicy& policy, std::size_t fixed_index,
                                 Rng& rng) {
  if (const auto* fixed = std::get_if<FixedVertex>(&policy)) {
    (void)fixed;
    if (fixed_index >= model.vertex_count()) throw InputError("fixed vertex index out of range");
    return fixed_index;
  }
  if (std::holds_alternative<RandomVertex>(policy))
    return model.vertex_count() == 1 ? 0 : rng.index(model.vertex_count());
  return lower_expectation_argmin(model, std::get<AdversarialFor>(policy).f).vertex;
}

inline std::size_t draw(const MassFunction& p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (p[z] <= 0.0) continue;
    cum += p[z];
    last = z;
    if (u < cum) return z;
  }
  return last;
}

}  // namespace detail

/// Samples x_1..x_length from the precise process obtained by letting the
/// policy pick one vertex of the current local model at every step.
/// Deterministic in (seed, stream).
inline Path sample_path(const ImpreciseMarkovChain& chain, const SelectionPolicy& policy, std::size_t length,
                        std::uint64_t seed, std::uint64_t stream = 0) {
  if (length < 1) throw InputError("sample_path needs length >= 1");
  if (const auto* fixed = std::get_if<FixedVertex>(&policy); fixed && fixed->rows.size() != chain.size())
    throw InputError("fixed-vertex policy needs one vertex index per state");
  if (const auto* adv = std::get_if<AdversarialFor>(&policy); adv && adv->f.size() != chain.size())
    throw InputError("adversarial policy gamble has the wrong dimension");

  Rng rng(seed, stream);
  Path path{{}, seed, policy_tag(policy)};
  path.states.reserve(length);
  const auto* fixed = std::get_if<FixedVertex>(&policy);
  std::size_t v = detail::select_vertex(chain.initial, policy, fixed ? fixed->initial : 0, rng);
  path.states.push_back(detail::draw(chain.initial.vertex(v), rng));
  while (path.states.size() < length) {
    const std::size_t x = path.states.back();
    const auto& row = chain.op.row(x);
    v = detail::select_vertex(row, policy, fixed ? fixed->rows[x] : 0, rng);
    path.states.push_back(detail::draw(row.vertex(v), rng));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Gain, average gain and ergodic average

namespace detail {
inline void check_path(const ImpreciseMarkovChain& chain, const Path& path) {
  if (path.states.empty()) throw InputError("path must be nonempty");
  for (std::size_t x : path.states)
    if (x >= chain.size()) throw InputError("path state index out of range");
}
}  // namespace detail

/// G_f at the prefixes of length 1..n:
/// [f(X_1) - L_1(f)] + sum_{k=2..n} [f(X_k) - Tf(X_{k-1})].
inline std::vector<double> gain_process(const ImpreciseMarkovChain& chain, const Gamble& f, const Path& path) {
  detail::check_path(chain, path);
  const Gamble tf = apply_operator(chain.op, f);
  std::vector<double> g(path.size());
  double acc = f[path.states[0]] - lower_expectation(chain.initial, f);
  g[0] = acc;
  for (std::size_t k = 1; k < path.size(); ++k) {
    acc += f[path.states[k]] - tf[path.states[k - 1]];
    g[k] = acc;
  }
  return g;
}

/// (1/n) sum_{k=1..n} [f(X_k) - L_k(f)] at every n, with L_k(f) the
/// marginal lower expectation of f(X_k).
inline std::vector<double> ergodic_average(const ImpreciseMarkovChain& chain, const Gamble& f, const Path& path) {
  detail::check_path(chain, path);
  std::vector<double> out(path.size());
  Gamble power = f;  // T^{k-1} f
  double sum = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    sum += f[path.states[k]] - lower_expectation(chain.initial, power);
    out[k] = sum / static_cast<double>(k + 1);
    if (k + 1 < path.size()) power = apply_operator(chain.op, power);
  }
  return out;
}

struct GainDecomposition {
  double ergodic_avg = 0.0;
  double sum_avgains = 0.0;   // sum_{l=0..n-1} average gain of T^l f
  double corrective_a = 0.0;  // (1/n) sum_{k=1..n} T^n f(X_k)
  double corrective_b = 0.0;  // (1/n) sum_{l=1..n} T^l f(X_n)
  double residual = 0.0;      // ergodic_avg - sum_avgains - corrective_a + corrective_b
};

/// Evaluates each term of the ergodic-average / average-gain identity
/// separately along the full path and returns them with the residual.
inline GainDecomposition verify_identity(const ImpreciseMarkovChain& chain, const Gamble& f, const Path& path) {
  detail::check_path(chain, path);
  const std::size_t n = path.size();
  const double dn = static_cast<double>(n);
  const auto& xs = path.states;

  std::vector<Gamble> powers;  // T^l f, l = 0..n
  powers.reserve(n + 1);
  powers.push_back(f);
  for (std::size_t l = 1; l <= n; ++l) powers.push_back(apply_operator(chain.op, powers.back()));

  GainDecomposition d;
  {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += f[xs[k]] - lower_expectation(chain.initial, powers[k]);
    d.ergodic_avg = s / dn;
  }
  for (std::size_t l = 0; l < n; ++l) {
    const Gamble& h = powers[l];
    const Gamble& th = powers[l + 1];
    double s = h[xs[0]] - lower_expectation(chain.initial, h);
    for (std::size_t k = 1; k < n; ++k) s += h[xs[k]] - th[xs[k - 1]];
    d.sum_avgains += s / dn;
  }
  {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += powers[n][xs[k]];
    d.corrective_a = s / dn;
  }
  {
    double s = 0.0;
    for (std::size_t l = 1; l <= n; ++l) s += powers[l][xs[n - 1]];
    d.corrective_b = s / dn;
  }
  d.residual = d.ergodic_avg - d.sum_avgains - d.corrective_a + d.corrective_b;
  return d;
}

// ---------------------------------------------------------------------------
// Test supermartingale from a submartingale (tree form)

/// W(x_1..x_n) = prod_{k<n} [1 - xi B(x_1..x_k) dM(x_1..x_k)(x_{k+1})].
/// Requires |dM| <= bound everywhere and 0 < xi < 1/bound.
inline RealProcess hoeffding_supermartingale(const ImpreciseProbabilityTree& tree, const RealProcess& m,
                                             const SelectorProcess& b, double bound, double xi) {
  const auto& shape = tree.shape();
  if (!(m.shape() == shape) || !(b.shape() == shape)) throw InputError("process shapes do not match the tree");
  if (!(bound > 0.0)) throw InputError("difference bound must be positive");
  if (!(xi > 0.0 && xi < 1.0 / bound)) throw InputError("xi must lie in (0, 1/bound)");
  RealProcess w(shape, 1.0);
  for (std::size_t k = 0; k < shape.depth(); ++k)
    for (std::size_t i = 0; i < shape.level_size(k); ++i) {
      const Gamble d = m.difference(k, i);
      if (std::max(-d.min(), d.max()) > bound * (1.0 + 1e-12))
        throw InputError("process difference exceeds the stated bound");
      const int sel = b.at(k, i);
      for (std::size_t x = 0; x < shape.branching(k); ++x)
        w.at(k + 1, shape.child(k, i, x)) = w.at(k, i) * (1.0 - xi * sel * d[x]);
    }
  return w;
}

struct TestSupermartingaleReport {
  bool initial_is_one = false;
  std::size_t nonpositive = 0;
  MartingaleReport supermartingale;
  std::size_t growth_qualifying = 0;  // situations with B-average <= -eps
  std::vector<Situation> growth_violations;

  bool ok() const {
    return initial_is_one && nonpositive == 0 && supermartingale.ok() && growth_violations.empty();
  }
};

/// Checks W(initial) = 1, W > 0, the supermartingale inequality at every
/// non-leaf situation, and W >= exp(sum B * eps^2 / (4 bound^2)) wherever
/// the B-average of dM is <= -eps.
inline TestSupermartingaleReport check_test_supermartingale(const ImpreciseProbabilityTree& tree,
                                                            const RealProcess& w, const RealProcess& m,
                                                            const SelectorProcess& b, double bound, double eps,
                                                            double tol = 1e-12) {
  const auto& shape = tree.shape();
  TestSupermartingaleReport rep;
  rep.initial_is_one = w.at(0, 0) == 1.0;
  rep.supermartingale = verify_supermartingale(tree, w, tol);

  // Running (sum of B dM, sum of B) per situation, level by level.
  std::vector<double> bsum{0.0};
  std::vector<std::size_t> bcount{0};
  for (std::size_t k = 0;; ++k) {
    for (std::size_t i = 0; i < shape.level_size(k); ++i) {
      if (!(w.at(k, i) > 0.0)) ++rep.nonpositive;
      const double b_avg = bcount[i] == 0 ? 0.0 : bsum[i] / static_cast<double>(bcount[i]);
      if (b_avg <= -eps) {
        ++rep.growth_qualifying;
        const double floor = std::exp(static_cast<double>(bcount[i]) * eps * eps / (4.0 * bound * bound));
        if (w.at(k, i) < floor * (1.0 - tol)) rep.growth_violations.push_back(shape.situation_at(k, i));
      }
    }
    if (k == shape.depth()) break;
    const std::size_t br = shape.branching(k);
    std::vector<double> next_sum(shape.level_size(k + 1));
    std::vector<std::size_t> next_count(shape.level_size(k + 1));
    for (std::size_t i = 0; i < shape.level_size(k); ++i) {
      const int sel = b.at(k, i);
      for (std::size_t x = 0; x < br; ++x) {
        const std::size_t c = shape.child(k, i, x);
        next_sum[c] = bsum[i] + (sel ? m.at(k + 1, c) - m.at(k, i) : 0.0);
        next_count[c] = bcount[i] + static_cast<std::size_t>(sel);
      }
    }
    bsum = std::move(next_sum);
    bcount = std::move(next_count);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Processes on the (unbounded) Markov event tree, given by their differences

/// dM(x_1..x_k): gamble on the next state, for the history x_1..x_k (k >= 0).
using DifferenceProcess = std::function<Gamble(std::span<const std::size_t>)>;
/// B(x_1..x_k) in {0,1}.
using Selector = std::function<int(std::span<const std::size_t>)>;

/// Differences of the gain process G_f: f - L_1(f) initially, f - Tf(x_k) after x_k.
inline DifferenceProcess gain_differences(const ImpreciseMarkovChain& chain, const Gamble& f) {
  const Gamble tf = apply_operator(chain.op, f);
  const double l1 = lower_expectation(chain.initial, f);
  std::vector<Gamble> after(chain.size());
  for (std::size_t x = 0; x < chain.size(); ++x) after[x] = f + (-tf[x]);
  const Gamble first = f + (-l1);
  return [first, after](std::span<const std::size_t> h) { return h.empty() ? first : after[h.back()]; };
}

inline Selector always_selected() {
  return [](std::span<const std::size_t>) { return 1; };
}

/// Lifts a chain-level process to the explicit Markov tree of the given
/// depth, with M(initial) = 0.
inline RealProcess lift_process(const ImpreciseMarkovChain& chain, const DifferenceProcess& dm, std::size_t depth) {
  TreeShape shape(std::vector<std::size_t>(depth, chain.size()));
  RealProcess m(shape, 0.0);
  for (std::size_t k = 0; k < depth; ++k)
    for (std::size_t i = 0; i < shape.level_size(k); ++i) {
      const Situation s = shape.situation_at(k, i);
      const Gamble d = dm(s);
      for (std::size_t x = 0; x < chain.size(); ++x) m.at(k + 1, shape.child(k, i, x)) = m.at(k, i) + d[x];
    }
  return m;
}

// ---------------------------------------------------------------------------
// Monte Carlo checks

/// Gamble on r consecutive states, as a table over X^r (x_1 most significant).
struct WindowGamble {
  std::size_t r = 1;
  std::vector<double> table;

  static WindowGamble single(const Gamble& f) { return {1, f.values()}; }
  double operator()(std::span<const std::size_t> window, std::size_t states) const {
    std::size_t idx = 0;
    for (std::size_t x : window) idx = idx * states + x;
    return table[idx];
  }
};

struct PolicyOutcome {
  std::string tag;
  std::vector<double> averages;  // per path, at the horizon
  std::size_t passed = 0;
  double fraction = 0.0;
  double min = 0.0, median = 0.0, max = 0.0;
};

struct ErgodicCheckReport {
  double threshold = 0.0;  // stationary lower expectation of the (window) gamble
  double threshold_width = 0.0;
  double delta = 0.0;
  std::size_t length = 0;
  std::size_t window = 1;
  std::vector<PolicyOutcome> policies;
};

inline constexpr double kAverageSlack = 1e-12;

/// Writes one CSV row per path: path_index,n,running_average,threshold,pass.
inline void write_ergodic_csv(std::ostream& os, const ErgodicCheckReport& rep, const PolicyOutcome& outcome) {
  const auto old = os.precision(17);
  os << "path_index,n,running_average,threshold,pass\n";
  const std::size_t n = rep.length - rep.window + 1;
  for (std::size_t p = 0; p < outcome.averages.size(); ++p) {
    const bool pass = outcome.averages[p] >= rep.threshold - rep.delta - kAverageSlack;
    os << p << ',' << n << ',' << outcome.averages[p] << ',' << rep.threshold << ',' << (pass ? 1 : 0) << '\n';
  }
  os.precision(old);
}

/// For each policy, samples n_paths paths (path p uses stream p of the seed)
/// and records (1/n) sum_k f(X_k..X_{k+r-1}) at the horizon, together with
/// the fraction of paths at or above the stationary threshold minus delta.
inline ErgodicCheckReport empirical_ergodic_check(const ImpreciseMarkovChain& chain, const WindowGamble& f,
                                                  const std::vector<SelectionPolicy>& policies, std::size_t n_paths,
                                                  std::size_t length, double delta, std::uint64_t seed) {
  const std::size_t s = chain.size();
  if (f.r < 1 || length < f.r) throw InputError("window length must lie in [1, path length]");
  if (n_paths < 1) throw InputError("need at least one path");
  if (!detect_pf_like(chain.op).pf_like()) throw NotPFLike("empirical_ergodic_check: operator is not PF-like");
  const auto thr = stationary_joint_lower_expectation(chain.op, f.r, f.table, 1e-12);

  ErgodicCheckReport rep;
  rep.threshold = thr.value;
  rep.threshold_width = thr.width;
  rep.delta = delta;
  rep.length = length;
  rep.window = f.r;
  const std::size_t n = length - f.r + 1;
  for (const auto& policy : policies) {
    PolicyOutcome out;
    out.tag = policy_tag(policy);
    out.averages.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
      const Path path = sample_path(chain, policy, length, seed, p);
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) sum += f(std::span(path.states).subspan(k, f.r), s);
      const double avg = sum / static_cast<double>(n);
      out.averages.push_back(avg);
      if (avg >= rep.threshold - delta - kAverageSlack) ++out.passed;
    }
    out.fraction = static_cast<double>(out.passed) / static_cast<double>(n_paths);
    std::vector<double> sorted = out.averages;
    std::sort(sorted.begin(), sorted.end());
    out.min = sorted.front();
    out.max = sorted.back();
    const std::size_t mid = sorted.size() / 2;
    out.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
    rep.policies.push_back(std::move(out));
  }
  return rep;
}

struct SllnReport {
  std::size_t paths = 0;
  std::size_t eligible = 0;  // paths with sum B >= length / 2
  std::size_t passed = 0;    // eligible paths with B-average >= -delta
  double fraction = 0.0;     // passed / eligible (1 when nothing is eligible)
  double min_b_average = std::numeric_limits<double>::infinity();
  std::size_t situations_checked = 0;
};

/// Samples paths of the chain under the policy and checks the B-average of
/// the submartingale differences at the horizon. Every visited situation is
/// checked for the submartingale inequality (and |dM| <= bound when bound > 0);
/// a failure throws VerificationFailure.
inline SllnReport empirical_slln_check(const ImpreciseMarkovChain& chain, const DifferenceProcess& dm,
                                       const Selector& b, const SelectionPolicy& policy, std::size_t n_paths,
                                       std::size_t length, double delta, std::uint64_t seed, double bound = 0.0,
                                       double tol = 1e-12) {
  if (n_paths < 1 || length < 1) throw InputError("need at least one path of length >= 1");
  SllnReport rep;
  rep.paths = n_paths;
  for (std::size_t p = 0; p < n_paths; ++p) {
    const Path path = sample_path(chain, policy, length, seed, p);
    const std::span<const std::size_t> xs(path.states);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < length; ++k) {
      const auto history = xs.first(k);
      const Gamble d = dm(history);
      const CredalSet& local = k == 0 ? chain.initial : chain.op.row(xs[k - 1]);
      ++rep.situations_checked;
      if (lower_expectation(local, d) < -tol)
        throw VerificationFailure("process is not a submartingale at a visited situation (depth " +
                                  std::to_string(k) + ", path " + std::to_string(p) + ")");
      if (bound > 0.0 && std::max(-d.min(), d.max()) > bound * (1.0 + 1e-12))
        throw VerificationFailure("process difference exceeds the stated bound");
      if (b(history)) {
        sum += d[xs[k]];
        ++count;
      }
    }
    if (2 * count < length) continue;
    ++rep.eligible;
    const double avg = count == 0 ? 0.0 : sum / static_cast<double>(count);
    rep.min_b_average = std::min(rep.min_b_average, avg);
    if (avg >= -delta - kAverageSlack) ++rep.passed;
  }
  rep.fraction = rep.eligible == 0 ? 1.0 : static_cast<double>(rep.passed) / static_cast<double>(rep.eligible);
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence bounds along a sampled path

struct BoundReport {
  double stationary = 0.0;  // L_inf(f)
  double variation = 0.0;   // ||f||_v
  std::size_t avgain_checks = 0;
  std::size_t avgain_violations = 0;
  double worst_avgain_slack = 0.0;  // max of |avgain| - bound (<= 0 when all hold)
  double rate_bound = 0.0;          // ||f||_v (r / (1 - rho)) / n + tolerance
  double dev_fixed_power = 0.0;     // |(1/n) sum_k T^n f(X_k) - L_inf(f)|
  double dev_fixed_state = 0.0;     // |(1/n) sum_l T^l f(X_n) - L_inf(f)|
  double dev_marginals = 0.0;       // |(1/n) sum_k L_k(f) - L_inf(f)|

  bool ok() const {
    return avgain_violations == 0 && dev_fixed_power <= rate_bound && dev_fixed_state <= rate_bound &&
           dev_marginals <= rate_bound;
  }
};

/// Along one sampled path (random-vertex policy), checks
/// |avgain of T^l f (X_1..X_n)| <= ||f||_v rho^floor(l/r) for every prefix n
/// and every l < length, and that the three averaged terms of the identity
/// lie within ||f||_v (r/(1-rho))/n of the stationary lower expectation.
inline BoundReport bound_checks(const ImpreciseMarkovChain& chain, const Gamble& f, std::size_t r, double rho,
                                std::size_t length, std::uint64_t seed, double tol = 1e-10) {
  if (r < 1) throw InputError("bound_checks needs r >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("bound_checks needs 0 <= rho < 1");
  if (length < 1) throw InputError("bound_checks needs length >= 1");
  const Path path = sample_path(chain, RandomVertex{}, length, seed);
  const auto& xs = path.states;
  const std::size_t n = length;

  BoundReport rep;
  rep.variation = f.variation();
  const auto st = stationary_lower_expectation(chain.op, f, 1e-13);
  rep.stationary = st.value;

  std::vector<Gamble> powers{f};
  for (std::size_t l = 1; l <= n; ++l) powers.push_back(apply_operator(chain.op, powers.back()));

  rep.worst_avgain_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n; ++l) {
    const Gamble& h = powers[l];
    const Gamble& th = powers[l + 1];
    const double bound = rep.variation * std::pow(rho, static_cast<double>(l / r));
    double s = h[xs[0]] - lower_expectation(chain.initial, h);
    for (std::size_t k = 1; k <= n; ++k) {
      if (k > 1) s += h[xs[k - 1]] - th[xs[k - 2]];
      const double avg = std::abs(s / static_cast<double>(k));
      ++rep.avgain_checks;
      rep.worst_avgain_slack = std::max(rep.worst_avgain_slack, avg - bound);
      if (avg > bound + tol) ++rep.avgain_violations;
    }
  }

  const double dn = static_cast<double>(n);
  rep.rate_bound = rep.variation * (static_cast<double>(r) / (1.0 - rho)) / dn + tol + st.width;
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t k = 0; k < n; ++k) a += powers[n][xs[k]];
  for (std::size_t l = 1; l <= n; ++l) b += powers[l][xs[n - 1]];
  for (std::size_t k = 0; k < n; ++k) c += lower_expectation(chain.initial, powers[k]);
  rep.dev_fixed_power = std::abs(a / dn - rep.stationary);
  rep.dev_fixed_state = std::abs(b / dn - rep.stationary);
  rep.dev_marginals = std::abs(c / dn - rep.stationary);
  return rep;
}

}  // namespace imc
