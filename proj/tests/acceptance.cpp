// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "imc/imc.hpp"
#include "oracles.hpp"

using namespace imc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, 0: none
  std::function<Outcome()> body;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

std::string sample(const std::string& name) { return std::string(IMC_SAMPLES_DIR) + "/" + name; }

ImpreciseMarkovChain binary_chain(double eps) {
  const auto row = make_linear_vacuous(MassFunction::uniform(2), eps);
  return ImpreciseMarkovChain({"a", "b"}, row, LowerTransitionOperator({row, row}));
}

LowerTransitionOperator random_operator(Rng& rng, std::size_t n) {
  std::vector<CredalSet> rows;
  for (std::size_t x = 0; x < n; ++x) rows.push_back(random_credal_set(rng, n, 1 + rng.index(3)));
  return LowerTransitionOperator(rows);
}

// 1 -------------------------------------------------------------------------
Outcome binary_hitting() {
  double worst = 0;
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto h = hitting_times(binary_chain(eps).op, 0);
    const double lo = 2 / (1 + eps), up = 2 / (1 - eps);
    for (std::size_t x = 0; x < 2; ++x)
      worst = std::max({worst, std::abs(h.lower[x] - lo), std::abs(h.upper[x] - up)});
  }
  return {worst <= 1e-9, "max error " + fmt(worst)};
}

// 2 and 3 share the same 100 trees.
struct TreeCase {
  ImpreciseProbabilityTree tree;
  std::vector<double> f;
};

std::vector<TreeCase> random_tree_cases() {
  Rng rng(20240601);
  std::vector<TreeCase> cases;
  for (int i = 0; i < 100; ++i) {
    auto tree = random_tree(rng);
    auto f = random_vector(rng, tree.shape().level_size(tree.shape().depth()), -1, 1);
    cases.push_back({std::move(tree), std::move(f)});
  }
  return cases;
}

Outcome oracle_equivalence() {
  double worst = 0;
  for (const auto& c : random_tree_cases()) {
    const std::size_t n = c.tree.shape().depth();
    worst = std::max(worst, std::abs(global_lower_expectation(c.tree, n, c.f, {}) -
                                     brute_force_oracle(c.tree, n, c.f, {})));
  }
  return {worst <= 1e-10, "100 trees, max |recursion - oracle| " + fmt(worst)};
}

Outcome iterated_expectations() {
  double worst = 0;
  std::size_t pairs = 0;
  Rng rng(77);
  for (const auto& c : random_tree_cases()) {
    const std::size_t depth = c.tree.shape().depth();
    for (std::size_t n = 1; n <= depth; ++n) {
      // n-measurable gamble: a fresh table on the level-n situations.
      const auto f = n == depth ? c.f : random_vector(rng, c.tree.shape().level_size(n), -1, 1);
      const double direct = global_lower_expectation(c.tree, n, f, {});
      for (std::size_t m = 0; m < n; ++m) {
        const auto inner = conditional_lower_expectations(c.tree, n, f, m);
        const double staged = m == 0 ? inner.at(0) : global_lower_expectation(c.tree, m, inner, {});
        worst = std::max(worst, std::abs(direct - staged));
        ++pairs;
      }
    }
  }
  return {worst <= 1e-12, std::to_string(pairs) + " (m,n) pairs, max difference " + fmt(worst)};
}

// 4 -------------------------------------------------------------------------
Outcome identity_residual() {
  Rng rng(4242);
  double worst = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::size_t s = 2 + rng.index(3);
    const ImpreciseMarkovChain chain({}, random_credal_set(rng, s, 1 + rng.index(3)), random_operator(rng, s));
    const Gamble f(random_vector(rng, s, -1, 1));
    const std::size_t length = i % 10 == 0 ? 1000 : 1 + rng.index(1000);
    const auto path = sample_path(chain, RandomVertex{}, length, 4242, i);
    worst = std::max(worst, std::abs(verify_identity(chain, f, path).residual));
  }
  return {worst <= 1e-10, "100 triples, max residual " + fmt(worst)};
}

// 5 -------------------------------------------------------------------------
Outcome precise_reductions() {
  Rng rng(555);
  double rho_err = 0, stat_err = 0, hit_err = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.index(4);
    const auto p = oracle::random_stochastic(rng, n);
    const auto t = LowerTransitionOperator::precise(p);
    rho_err = std::max(rho_err, std::abs(ergodicity_coefficient(t, 1).value - oracle::dobrushin(p)));

    const auto pi = oracle::power_iteration(p);
    const Gamble f(random_vector(rng, n, -1, 1));
    double expect = 0;
    for (std::size_t x = 0; x < n; ++x) expect += pi[x] * f[x];
    stat_err = std::max(stat_err, std::abs(stationary_lower_expectation(t, f, 1e-12).value - expect));

    const std::size_t y = rng.index(n);
    const auto fp = oracle::first_passage_times(p, y);
    const auto h = hitting_times(t, y);
    for (std::size_t x = 0; x < n; ++x)
      hit_err = std::max({hit_err, std::abs(h.lower[x] - fp[x]), std::abs(h.upper[x] - fp[x])});
  }
  const bool ok = rho_err <= 1e-12 && stat_err <= 1e-9 && hit_err <= 1e-9;
  return {ok, "rho vs Dobrushin " + fmt(rho_err) + ", stationary " + fmt(stat_err) + ", hitting " + fmt(hit_err)};
}

// 6 -------------------------------------------------------------------------
Outcome coefficient_calculus() {
  Rng rng(66);
  double worst_excess = -1;
  bool in_range = true;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 2 + rng.index(3);
    const auto t = LowerTransitionOperator::precise(oracle::random_stochastic(rng, n));
    std::vector<double> rho(9);
    for (std::size_t r = 1; r <= 8; ++r) {
      rho[r] = ergodicity_coefficient(t, r).value;
      in_range = in_range && rho[r] >= 0 && rho[r] <= 1;
    }
    for (std::size_t m = 1; m <= 4; ++m)
      for (std::size_t k = 1; k <= 4; ++k) worst_excess = std::max(worst_excess, rho[m + k] - rho[m] * rho[k]);
  }
  // Range also on imprecise operators, where the value is a lower bound.
  for (int i = 0; i < 50; ++i) {
    const auto t = random_operator(rng, 2 + rng.index(3));
    for (std::size_t r = 1; r <= 3; ++r) {
      const double v = ergodicity_coefficient(t, r).value;
      in_range = in_range && v >= 0 && v <= 1;
    }
  }
  return {worst_excess <= 1e-12 && in_range,
          "max rho(T^(m+n)) - rho(T^m) rho(T^n) = " + fmt(worst_excess) + (in_range ? ", range ok" : ", OUT OF RANGE")};
}

// 7 -------------------------------------------------------------------------
Outcome ergodic_monte_carlo() {
  const auto chain = binary_chain(0.5);
  const Gamble f = Gamble::indicator(2, 0);
  const std::vector<SelectionPolicy> policies{FixedVertex{0, {0, 0}}, FixedVertex{1, {1, 1}}, AdversarialFor{f}};
  const auto single = empirical_ergodic_check(chain, WindowGamble::single(f), policies, 200, 10'000, 0.05, 7);

  const WindowGamble window{2, {1, 0, 0, 0}};  // both of two consecutive states equal a
  const std::vector<SelectionPolicy> window_policies{FixedVertex{0, {0, 0}}, FixedVertex{1, {1, 1}},
                                                     AdversarialFor{detail::collapse_joint(chain.op, 2, window.table)}};
  const auto pair = empirical_ergodic_check(chain, window, window_policies, 200, 10'000, 0.05, 8);

  bool ok = std::abs(single.threshold - 0.25) <= 1e-12;
  std::ostringstream d;
  d << "threshold " << single.threshold << ";";
  for (const auto& p : single.policies) {
    ok = ok && p.fraction == 1.0;
    d << ' ' << p.tag << '=' << p.fraction;
  }
  d << "; window r=2 threshold " << pair.threshold << ";";
  for (const auto& p : pair.policies) {
    ok = ok && p.fraction == 1.0;
    d << ' ' << p.tag << '=' << p.fraction;
  }
  return {ok, d.str()};
}

// 8 -------------------------------------------------------------------------
Outcome test_supermartingale() {
  const auto tree = ImpreciseProbabilityTree::homogeneous(10, make_precise(MassFunction::uniform(2)));
  const RealProcess walk(tree.shape(), [](const Situation& s) {
    double v = 0;
    for (std::size_t x : s) v += x == 0 ? 1.0 : -1.0;
    return v;
  });
  const SelectorProcess all(tree.shape(), true);
  const double bound = 1.0, eps = 0.5;
  const auto w = hoeffding_supermartingale(tree, walk, all, bound, eps / (2 * bound * bound));
  const auto rep = check_test_supermartingale(tree, w, walk, all, bound, eps);
  const std::size_t violations = (rep.initial_is_one ? 0 : 1) + rep.nonpositive +
                                 rep.supermartingale.violations.size() + rep.growth_violations.size();
  const bool ok = violations == 0 && rep.supermartingale.situations_checked == 1023;
  return {ok, std::to_string(rep.supermartingale.situations_checked) + " internal nodes, " +
                  std::to_string(rep.growth_qualifying) + " growth-qualifying, " + std::to_string(violations) +
                  " violations"};
}

// 9 -------------------------------------------------------------------------
Outcome coherence_suite() {
  Rng rng(999);
  std::size_t failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = random_credal_set(rng, 2 + rng.index(5), 1 + rng.index(5));
    if (!check_coherence(m, 1, rng.next()).all_passed()) ++failures;
  }
  return {failures == 0, "1000 instances, " + std::to_string(failures) + " failures"};
}

// 10 ------------------------------------------------------------------------
template <typename Opt, typename Fn>
std::string body_of(Fn fn, const Opt& opt) {
  std::ostringstream out, err;
  fn(opt, out, err);
  return out.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  using namespace imc::cli;
  std::size_t compared = 0, differing = 0;
  auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    if (a != b || a.empty()) ++differing;
  };

  AnalyzeOptions an;
  an.spec = sample("interval3.json");
  an.mode = "grid";
  an.seed = 5;
  same(body_of(cmd_analyze, an), body_of(cmd_analyze, an));

  HittingOptionsCli hi;
  hi.spec = sample("interval3.json");
  hi.target = "mid";
  same(body_of(cmd_hitting, hi), body_of(cmd_hitting, hi));

  const auto dir = std::filesystem::temp_directory_path();
  const std::string csv1 = (dir / "imc_acceptance_1.csv").string(), csv2 = (dir / "imc_acceptance_2.csv").string();
  SimulateOptions si;
  si.spec = sample("interval3.json");
  si.gamble = "0.5,-1,2";
  si.policy = "random";
  si.n_paths = 50;
  si.length = 2000;
  si.seed = 11;
  si.out_csv = csv1;
  const std::string s1 = body_of(cmd_simulate, si);
  si.out_csv = csv2;
  const std::string s2 = body_of(cmd_simulate, si);
  same(s1, s2);
  same(slurp(csv1), slurp(csv2));
  std::remove(csv1.c_str());
  std::remove(csv2.c_str());

  for (const char* suite : {"coherence", "identity", "oracle", "martingale"}) {
    VerifyOptions ve;
    ve.spec = sample("binary.json");
    ve.suite = suite;
    ve.instances = 10;
    ve.seed = 13;
    same(body_of(cmd_verify, ve), body_of(cmd_verify, ve));
  }
  return {differing == 0, std::to_string(compared) + " report/CSV pairs, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "binary hitting times", 1.0, binary_hitting},
      {2, "oracle equivalence", 60.0, oracle_equivalence},
      {3, "iterated lower expectations", 0.0, iterated_expectations},
      {4, "ergodic average identity", 30.0, identity_residual},
      {5, "precise reductions", 0.0, precise_reductions},
      {6, "coefficient calculus", 0.0, coefficient_calculus},
      {7, "long-run averages, Monte Carlo", 120.0, ergodic_monte_carlo},
      {8, "test supermartingale", 0.0, test_supermartingale},
      {9, "coherence axioms", 5.0, coherence_suite},
      {10, "determinism", 0.0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = std::to_string(secs).substr(0, std::to_string(secs).find('.') + 4) + " s";
    if (c.time_limit > 0) {
      timing += " (limit " + std::to_string(static_cast<int>(c.time_limit)) + " s)";
      if (secs >= c.time_limit) pass = false;
    }
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " | " << o.detail << " | "
              << timing << std::endl;
    if (!pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
