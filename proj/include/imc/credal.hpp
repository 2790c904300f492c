#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "imc/gamble.hpp"
#include "imc/random.hpp"

namespace imc {

/// Closed convex set of mass functions, stored as a list of vertices.
/// Every lower expectation over the set is a finite minimum over the list.
class CredalSet {
 public:
  CredalSet() = default;
  explicit CredalSet(std::vector<MassFunction> vertices, std::string label = {})
      : vertices_(std::move(vertices)), label_(std::move(label)) {
    if (vertices_.empty()) throw InputError("credal set needs at least one vertex");
    const std::size_t n = vertices_.front().size();
    for (const auto& v : vertices_)
      if (v.size() != n) throw InputError("credal set vertices must share one dimension");
  }

  std::size_t dimension() const noexcept { return vertices_.empty() ? 0 : vertices_.front().size(); }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  const std::vector<MassFunction>& vertices() const noexcept { return vertices_; }
  const MassFunction& vertex(std::size_t i) const { return vertices_.at(i); }
  const std::string& label() const noexcept { return label_; }
  bool is_precise() const noexcept { return vertices_.size() == 1; }

  friend bool operator==(const CredalSet&, const CredalSet&) = default;

 private:
  std::vector<MassFunction> vertices_;
  std::string label_;
};

inline CredalSet make_precise(MassFunction p, std::string label = {}) {
  return CredalSet({std::move(p)}, std::move(label));
}

/// All degenerate mass functions: the lower envelope is min f.
inline CredalSet make_vacuous(std::size_t n, std::string label = {}) {
  std::vector<MassFunction> v;
  v.reserve(n);
  for (std::size_t x = 0; x < n; ++x) v.push_back(MassFunction::degenerate(n, x));
  return CredalSet(std::move(v), std::move(label));
}

/// Vertices (1-eps) p + eps delta_x; envelope (1-eps) E_p(h) + eps min h.
inline CredalSet make_linear_vacuous(const MassFunction& p, double eps, std::string label = {}) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("linear-vacuous eps must lie in [0,1]");
  const std::size_t n = p.size();
  if (eps == 0.0) return make_precise(p, std::move(label));
  std::vector<MassFunction> v;
  v.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> q(n);
    for (std::size_t z = 0; z < n; ++z) q[z] = (1.0 - eps) * p[z];
    q[x] += eps;
    v.emplace_back(std::move(q));
  }
  return CredalSet(std::move(v), std::move(label));
}

struct Extremum {
  double value;
  std::size_t vertex;  // lowest index among ties
};

inline Extremum lower_expectation_argmin(const CredalSet& m, const Gamble& f) {
  if (m.dimension() != f.size()) throw InputError("dimension mismatch between credal set and gamble");
  Extremum best{m.vertex(0).expectation(f), 0};
  for (std::size_t i = 1; i < m.vertex_count(); ++i) {
    const double e = m.vertex(i).expectation(f);
    if (e < best.value) best = {e, i};
  }
  return best;
}

inline double lower_expectation(const CredalSet& m, const Gamble& f) {
  return lower_expectation_argmin(m, f).value;
}

inline double upper_expectation(const CredalSet& m, const Gamble& f) { return -lower_expectation(m, -f); }

/// Lower expectation of an extended gamble (entries in (-inf, +inf]),
/// with 0 * (+inf) = 0.
inline double lower_expectation(const CredalSet& m, const ExtendedGamble& f) {
  if (m.dimension() != f.size()) throw InputError("dimension mismatch between credal set and gamble");
  double best = m.vertex(0).expectation(f);
  for (std::size_t i = 1; i < m.vertex_count(); ++i) best = std::min(best, m.vertex(i).expectation(f));
  return best;
}

inline double upper_expectation(const CredalSet& m, const ExtendedGamble& f) {
  if (m.dimension() != f.size()) throw InputError("dimension mismatch between credal set and gamble");
  double best = m.vertex(0).expectation(f);
  for (std::size_t i = 1; i < m.vertex_count(); ++i) best = std::max(best, m.vertex(i).expectation(f));
  return best;
}

/// Random credal set with the given number of Dirichlet-sampled vertices.
inline CredalSet random_credal_set(Rng& rng, std::size_t n, std::size_t vertices) {
  if (vertices < 1) throw InputError("random_credal_set needs at least one vertex");
  std::vector<MassFunction> v;
  v.reserve(vertices);
  for (std::size_t i = 0; i < vertices; ++i) v.emplace_back(random_simplex_point(rng, n));
  return CredalSet(std::move(v));
}

// ---------------------------------------------------------------------------
// Search over gambles in [0,1]^X

/// How the maximum over [0,1]^X gambles is searched: exhaustively over the
/// {0,1}-valued gambles, optionally augmented with seeded uniform samples.
struct GambleSearch {
  enum class Kind { Indicators01, Grid };
  Kind kind = Kind::Indicators01;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static GambleSearch indicators() { return {}; }
  static GambleSearch grid(std::size_t samples, std::uint64_t seed) { return {Kind::Grid, samples, seed}; }
};

inline constexpr std::size_t kMaxEnumerationStates = 20;

/// Calls visit(h) for every {0,1}-valued gamble on n states (constants
/// included only if requested), then for the random samples of a grid search.
template <typename Visitor>
void for_each_search_gamble(std::size_t n, const GambleSearch& mode, bool include_constants, Visitor&& visit) {
  if (n > kMaxEnumerationStates)
    throw InputError("state space too large for {0,1} enumeration (" + std::to_string(n) + " > " +
                     std::to_string(kMaxEnumerationStates) + ")");
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> h(n);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (!include_constants && (mask == 0 || mask == count - 1)) continue;
    for (std::size_t x = 0; x < n; ++x) h[x] = (mask >> x) & 1u ? 1.0 : 0.0;
    visit(Gamble(h));
  }
  if (mode.kind == GambleSearch::Kind::Grid) {
    Rng rng(mode.seed, 0x9e3779b97f4a7c15ULL);
    for (std::size_t s = 0; s < mode.samples; ++s) visit(Gamble(random_vector(rng, n, 0.0, 1.0)));
  }
}

/// max over searched h of |a(h) - b(h)| for two lower expectation
/// functionals on n states. Exact on {0,1} gambles; a lower bound on the
/// supremum over [0,1]^X in general.
template <typename FunctionalA, typename FunctionalB>
double functional_distance(std::size_t n, FunctionalA&& a, FunctionalB&& b, const GambleSearch& mode) {
  double d = 0.0;
  for_each_search_gamble(n, mode, false, [&](const Gamble& h) { d = std::max(d, std::abs(a(h) - b(h))); });
  return d;
}

inline double distance(const CredalSet& a, const CredalSet& b, const GambleSearch& mode = {}) {
  if (a.dimension() != b.dimension()) throw InputError("distance: credal sets differ in dimension");
  return functional_distance(
      a.dimension(), [&](const Gamble& h) { return lower_expectation(a, h); },
      [&](const Gamble& h) { return lower_expectation(b, h); }, mode);
}

// ---------------------------------------------------------------------------
// Coherence axioms

struct AxiomResult {
  std::string name;
  bool passed = true;
  std::size_t checks = 0;
  std::optional<std::string> counterexample;  // first violation
};

struct CoherenceReport {
  std::vector<AxiomResult> axioms;
  // Vertices never seen as the unique minimiser over the sampled gambles;
  // a soft hint of redundancy (a convex combination of the other vertices).
  std::vector<std::size_t> possibly_redundant;

  bool all_passed() const {
    for (const auto& a : axioms)
      if (!a.passed) return false;
    return true;
  }
  const AxiomResult& axiom(const std::string& name) const {
    for (const auto& a : axioms)
      if (a.name == name) return a;
    throw InputError("unknown axiom " + name);
  }
};

namespace detail {
inline std::string describe(const Gamble& f) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
  os << ')';
  return os.str();
}
}  // namespace detail

/// Samples seeded random gambles and checks LE1-LE8 for the envelope of m.
inline CoherenceReport check_coherence(const CredalSet& m, std::size_t trials, std::uint64_t seed,
                                       const Tolerances& tol = {}) {
  if (trials < 1) throw InputError("check_coherence needs trials >= 1");
  const std::size_t n = m.dimension();
  const double eps = tol.comparison;

  CoherenceReport report;
  const char* names[] = {"LE1", "LE2", "LE3", "LE4", "LE5", "LE6", "LE7", "LE8"};
  for (const char* name : names) report.axioms.push_back({name, true, 0, std::nullopt});
  auto record = [&](std::size_t axiom, bool ok, const std::function<std::string()>& what) {
    auto& a = report.axioms[axiom];
    ++a.checks;
    if (!ok && a.passed) {
      a.passed = false;
      a.counterexample = what();
    }
  };

  std::vector<std::size_t> strict_wins(m.vertex_count(), 0);
  Rng rng(seed, 0xc0437e11ULL);
  for (std::size_t t = 0; t < trials; ++t) {
    const Gamble f(random_vector(rng, n, -1.0, 1.0));
    const Gamble g(random_vector(rng, n, -1.0, 1.0));
    const double lambda = rng.uniform(0.0, 5.0);
    const double mu = rng.uniform(-5.0, 5.0);
    const Gamble bump(random_vector(rng, n, 0.0, 1.0));
    const Gamble above = f + bump;  // f <= above

    const double lf = lower_expectation(m, f), uf = upper_expectation(m, f);
    const double lg = lower_expectation(m, g), ug = upper_expectation(m, g);
    const double lfg = lower_expectation(m, f + g), ufg = upper_expectation(m, f + g);
    const double llam = lower_expectation(m, lambda * f), ulam = upper_expectation(m, lambda * f);
    const double lmu = lower_expectation(m, f + mu), umu = upper_expectation(m, f + mu);
    const double labove = lower_expectation(m, above), uabove = upper_expectation(m, above);

    auto ex = [&](const std::string& msg) {
      return [=, &f, &g] { return "f=" + detail::describe(f) + " g=" + detail::describe(g) + " " + msg; };
    };
    record(0, lf >= f.min() - eps, ex("lower(f) < min f"));
    record(1, lfg >= lf + lg - eps, ex("lower(f+g) < lower(f)+lower(g)"));
    record(2, std::abs(llam - lambda * lf) <= eps, ex("lower(lambda f) != lambda lower(f), lambda=" +
                                                      std::to_string(lambda)));
    record(3, labove >= lf - eps && uabove >= uf - eps, ex("monotonicity broken for f <= f+bump"));
    record(4, f.min() - eps <= lf && lf <= uf + eps && uf <= f.max() + eps, ex("min f <= L <= U <= max f broken"));
    record(5, ufg <= uf + ug + eps, ex("upper(f+g) > upper(f)+upper(g)"));
    record(6, std::abs(ulam - lambda * uf) <= eps, ex("upper(lambda f) != lambda upper(f), lambda=" +
                                                      std::to_string(lambda)));
    record(7, std::abs(lmu - lf - mu) <= eps && std::abs(umu - uf - mu) <= eps,
           ex("constant additivity broken, mu=" + std::to_string(mu)));

    // Unique strict minimiser bookkeeping for the redundancy hint.
    std::size_t best = 0;
    double best_v = m.vertex(0).expectation(f), second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < m.vertex_count(); ++i) {
      const double e = m.vertex(i).expectation(f);
      if (e < best_v) {
        second = best_v;
        best_v = e;
        best = i;
      } else {
        second = std::min(second, e);
      }
    }
    if (second - best_v > eps) ++strict_wins[best];
  }
  if (m.vertex_count() > 1)
    for (std::size_t i = 0; i < strict_wins.size(); ++i)
      if (strict_wins[i] == 0) report.possibly_redundant.push_back(i);
  return report;
}

}  // namespace imc
