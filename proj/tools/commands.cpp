#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>

#include "imc/imc.hpp"

namespace imc::cli {
namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InputError(what + ": '" + s + "' is not a number");
  return v;
}

std::size_t parse_index(const std::string& s, const std::string& what) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw InputError(what + ": '" + s + "' is not a nonnegative integer");
  return static_cast<std::size_t>(std::stoull(s));
}

/// "indicator:L1[,L2..]" or a comma-separated value table over X^r.
WindowGamble parse_gamble(const ImpreciseMarkovChain& chain, const std::string& text) {
  const std::size_t s = chain.size();
  constexpr std::string_view kInd = "indicator:";
  if (text.rfind(kInd, 0) == 0) {
    const auto labels = split(std::string_view(text).substr(kInd.size()), ',');
    WindowGamble g;
    g.r = labels.size();
    std::size_t size = 1, idx = 0;
    for (const auto& l : labels) {
      size *= s;
      idx = idx * s + chain.index_of(l);
      if (size > kMaxJointTable) throw InputError("gamble window too long");
    }
    g.table.assign(size, 0.0);
    g.table[idx] = 1.0;
    return g;
  }
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(part, "gamble"));
  WindowGamble g;
  g.r = 0;
  for (std::size_t size = 1; size < values.size() && size <= kMaxJointTable; size *= s) ++g.r;
  std::size_t expect = 1;
  for (std::size_t k = 0; k < g.r; ++k) expect *= s;
  if (g.r == 0 || expect != values.size())
    throw InputError("gamble must have |X|^r values (|X| = " + std::to_string(s) + "), got " +
                     std::to_string(values.size()));
  Gamble check(values);  // finiteness
  g.table = std::move(values);
  return g;
}

std::string gamble_name(const std::string& text) { return text.empty() ? "?" : text; }

SelectionPolicy parse_policy(const ImpreciseMarkovChain& chain, const WindowGamble& f, const std::string& text) {
  if (text == "random") return RandomVertex{};
  if (text == "adversarial") {
    // Next-state gamble: lower expectation of the window starting there.
    return AdversarialFor{f.r == 1 ? Gamble(f.table) : detail::collapse_joint(chain.op, f.r, f.table)};
  }
  constexpr std::string_view kFixed = "fixed:";
  if (text.rfind(kFixed, 0) == 0) {
    const auto body = std::string_view(text).substr(kFixed.size());
    FixedVertex p;
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) {
      p.initial = parse_index(std::string(body), "policy");
      p.rows.assign(chain.size(), p.initial);
    } else {
      p.initial = parse_index(std::string(body.substr(0, colon)), "policy");
      for (const auto& part : split(body.substr(colon + 1), ',')) p.rows.push_back(parse_index(part, "policy"));
      if (p.rows.size() != chain.size()) throw InputError("fixed policy needs one vertex index per state");
    }
    if (p.initial >= chain.initial.vertex_count()) throw InputError("fixed policy: initial vertex out of range");
    for (std::size_t x = 0; x < chain.size(); ++x)
      if (p.rows[x] >= chain.op.row(x).vertex_count())
        throw InputError("fixed policy: vertex index out of range for state " + chain.states[x]);
    return p;
  }
  throw InputError("unknown policy '" + text + "' (adversarial | random | fixed:K | fixed:I:R0,R1,...)");
}

GambleSearch parse_mode(const std::string& mode, std::size_t samples, std::uint64_t seed) {
  if (mode == "indicators") return GambleSearch::indicators();
  if (mode == "grid") return GambleSearch::grid(samples, seed);
  throw InputError("unknown search mode '" + mode + "' (indicators | grid)");
}

void header(std::ostream& out, const std::string& command, const std::string& spec_bytes, const std::string& args,
            std::uint64_t seed) {
  out << "command: " << command << '\n';
  out << "inputs-digest: " << digest(spec_bytes + '\0' + args) << '\n';
  out << "seed: " << seed << '\n';
}

template <typename Body>
int run(const char* name, std::ostream& err, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  int code = kSuccess;
  try {
    code = body();
  } catch (const InputError& e) {
    err << name << ": input error: " << e.what() << '\n';
    code = kInputError;
  } catch (const NotPFLike& e) {
    err << name << ": " << e.what() << '\n';
    code = kInputError;
  } catch (const NonConvergence& e) {
    err << name << ": " << e.what() << '\n';
    code = kViolation;
  } catch (const VerificationFailure& e) {
    err << name << ": verification failed: " << e.what() << '\n';
    code = kViolation;
  }
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  err << "wall-time: " << std::fixed << std::setprecision(3) << wall.count() << " s\n" << std::defaultfloat;
  return code;
}

std::string join_vector(const ExtendedGamble& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) s += (i ? " " : "") + num(g[i]);
  return s;
}

}  // namespace

std::string digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  return run("analyze", err, [&] {
    const std::string bytes = read_file(opt.spec);
    const auto chain = to_chain(parse_chain_spec(bytes));
    const auto mode = parse_mode(opt.mode, opt.grid_samples, opt.seed);
    std::ostringstream args;
    args << "r_max=" << opt.r_max << ";tol=" << num(opt.tol) << ";mode=" << opt.mode << ";samples="
         << opt.grid_samples;
    for (const auto& g : opt.gambles) args << ";gamble=" << g;
    header(out, "analyze", bytes, args.str(), opt.seed);

    out << "states:";
    for (const auto& l : chain.states) out << ' ' << l;
    out << '\n';

    const auto rep = detect_pf_like(chain.op, opt.r_max, 0, mode);
    out << "search: " << opt.mode << (rep.rho_exact ? " (exact: precise rows)" : " (searched value is a lower bound)") << '\n';
    for (std::size_t i = 0; i < rep.rho_by_power.size(); ++i) {
      const auto& [r, rho] = rep.rho_by_power[i];
      out << "rho(T^" << r << ") = " << num(rho);
      if (!rep.rho_exact) out << " (certified upper bound " << num(rep.rho_upper_by_power[i]) << ')';
      out << '\n';
    }
    out << "verdict: " << to_string(rep.verdict);
    if (rep.pf_like()) out << '(' << rep.r << ')';
    out << '\n';
    if (rep.pf_like())
      out << "certificate: "
          << (rep.certificate == ErgodicityReport::Certificate::Coefficient ? "coefficient" : "reachability")
          << ", rho = " << num(rep.rho) << ", certified bound = " << num(rep.rho_bound) << '\n';
    out << "reachability: "
        << (rep.reachability_ok ? "yes, " + std::to_string(rep.reachability_steps) + " steps" : std::string("no"))
        << '\n';

    std::vector<std::pair<std::string, WindowGamble>> gambles;
    if (opt.gambles.empty()) {
      for (const auto& l : chain.states) gambles.emplace_back("indicator:" + l, parse_gamble(chain, "indicator:" + l));
    } else {
      for (const auto& g : opt.gambles) gambles.emplace_back(gamble_name(g), parse_gamble(chain, g));
    }

    out << "stationary lower expectations:\n";
    for (const auto& [name, g] : gambles) {
      out << "  " << name << ": ";
      if (!rep.pf_like()) {
        out << "n/a (not PF-like)\n";
        continue;
      }
      std::vector<double> neg(g.table.size());
      std::transform(g.table.begin(), g.table.end(), neg.begin(), [](double v) { return -v; });
      const auto lo = stationary_joint_lower_expectation(chain.op, g.r, g.table, opt.tol);
      const auto hi = stationary_joint_lower_expectation(chain.op, g.r, neg, opt.tol);
      out << "lower = " << num(lo.value) << " in [" << num(lo.lower()) << ", " << num(lo.upper())
          << "], upper = " << num(-hi.value) << " in [" << num(-hi.upper()) << ", " << num(-hi.lower()) << "], "
          << "iterations = " << lo.iterations << '\n';
    }

    out << "stationary: ";
    if (!rep.pf_like()) {
      out << "n/a (not PF-like)\n";
    } else {
      StationarityOptions so;
      so.search = opt.mode == "grid" ? mode : GambleSearch::grid(opt.grid_samples, opt.seed);
      out << (check_stationarity(chain, so) ? "true" : "false") << '\n';
    }
    return static_cast<int>(kSuccess);
  });
}

// ---------------------------------------------------------------------------

int cmd_hitting(const HittingOptionsCli& opt, std::ostream& out, std::ostream& err) {
  return run("hitting", err, [&] {
    const std::string bytes = read_file(opt.spec);
    const auto chain = to_chain(parse_chain_spec(bytes));
    const std::size_t y = chain.index_of(opt.target);
    std::ostringstream args;
    args << "target=" << opt.target << ";tol=" << num(opt.tol) << ";max_iter=" << opt.max_iter
         << ";cap=" << num(opt.cap);
    header(out, "hitting", bytes, args.str(), opt.seed);

    HittingOptions ho;
    ho.tol = opt.tol;
    ho.max_iter = opt.max_iter;
    ho.cap = opt.cap;
    const auto lo = lower_hitting_times(chain.op, y, ho);
    const auto up = upper_hitting_times(chain.op, y, ho);
    out << "target: " << opt.target << '\n';
    out << "states:";
    for (const auto& l : chain.states) out << ' ' << l;
    out << '\n';
    out << "lower: " << join_vector(lo.times) << '\n';
    out << "upper: " << join_vector(up.times) << '\n';
    out << "iterations: lower " << lo.iterations << ", upper " << up.iterations << '\n';
    auto flags = [](const HittingSolution& s) {
      std::string f;
      for (std::size_t i = 0; i < s.converged.size(); ++i) f += (i ? " " : "") + std::string(s.converged[i] ? "1" : "0");
      return f;
    };
    out << "converged lower: " << flags(lo) << '\n';
    out << "converged upper: " << flags(up) << '\n';
    return static_cast<int>(kSuccess);
  });
}

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  return run("simulate", err, [&] {
    const std::string bytes = read_file(opt.spec);
    const auto chain = to_chain(parse_chain_spec(bytes));
    if (opt.gamble.empty()) throw InputError("simulate needs a gamble");
    const auto f = parse_gamble(chain, opt.gamble);
    const auto policy = parse_policy(chain, f, opt.policy);
    if (opt.n_paths < 1 || opt.length < 1) throw InputError("simulate needs paths >= 1 and length >= 1");
    if (!(opt.delta >= 0.0)) throw InputError("delta must be nonnegative");
    std::ostringstream args;
    args << "gamble=" << opt.gamble << ";policy=" << opt.policy << ";paths=" << opt.n_paths
         << ";length=" << opt.length << ";delta=" << num(opt.delta) << ";require=" << num(opt.require_fraction);
    header(out, "simulate", bytes, args.str(), opt.seed);

    const auto rep = empirical_ergodic_check(chain, f, {policy}, opt.n_paths, opt.length, opt.delta, opt.seed);
    const auto& o = rep.policies.front();
    out << "gamble: " << opt.gamble << " (window " << rep.window << ")\n";
    out << "policy: " << o.tag << '\n';
    out << "paths: " << opt.n_paths << ", length: " << opt.length << '\n';
    out << "threshold: " << num(rep.threshold) << " (width " << num(rep.threshold_width) << ")\n";
    out << "delta: " << num(rep.delta) << '\n';
    out << "fraction: " << num(o.fraction) << " (" << o.passed << "/" << opt.n_paths << ")\n";
    out << "average min/median/max: " << num(o.min) << ' ' << num(o.median) << ' ' << num(o.max) << '\n';

    if (!opt.out_csv.empty()) {
      std::ofstream csv(opt.out_csv, std::ios::binary);
      if (!csv) throw InputError("cannot write CSV file '" + opt.out_csv + "'");
      write_ergodic_csv(csv, rep, o);
    }
    if (o.fraction < opt.require_fraction) {
      out << "result: FAIL (fraction below " << num(opt.require_fraction) << ")\n";
      return static_cast<int>(kViolation);
    }
    return static_cast<int>(kSuccess);
  });
}

// ---------------------------------------------------------------------------

namespace {

bool suite_coherence(const ImpreciseMarkovChain& chain, const VerifyOptions& opt, std::ostream& out) {
  bool ok = true;
  auto show = [&](const std::string& name, const CoherenceReport& rep) {
    out << name << ":";
    for (const auto& a : rep.axioms) out << ' ' << a.name << (a.passed ? "=ok" : "=FAIL");
    out << '\n';
    for (const auto& a : rep.axioms)
      if (a.counterexample) out << "  " << a.name << " counterexample: " << *a.counterexample << '\n';
    ok = ok && rep.all_passed();
  };
  show("initial", check_coherence(chain.initial, 1000, opt.seed));
  for (std::size_t x = 0; x < chain.size(); ++x)
    show("row " + chain.states[x], check_coherence(chain.op.row(x), 1000, opt.seed + x + 1));

  Rng rng(opt.seed, 0xc011);
  std::size_t failures = 0;
  const std::size_t random_instances = 10 * opt.instances;
  for (std::size_t i = 0; i < random_instances; ++i) {
    const std::size_t n = 2 + rng.index(4);
    const auto m = random_credal_set(rng, n, 1 + rng.index(4));
    if (!check_coherence(m, 1, rng.next()).all_passed()) ++failures;
  }
  out << "random instances: " << random_instances << ", failures: " << failures << '\n';
  return ok && failures == 0;
}

bool suite_identity(const ImpreciseMarkovChain& chain, const VerifyOptions& opt, std::ostream& out) {
  Rng rng(opt.seed, 0x1de);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.instances; ++i) {
    const Gamble f(random_vector(rng, chain.size(), -1.0, 1.0));
    const std::size_t length = 1 + rng.index(1000);
    const auto path = sample_path(chain, RandomVertex{}, length, opt.seed, i);
    worst = std::max(worst, std::abs(verify_identity(chain, f, path).residual));
  }
  const bool ok = worst <= 1e-10;
  out << "instances: " << opt.instances << '\n';
  out << "max residual: " << num(worst) << '\n';
  return ok;
}

bool suite_oracle(const ImpreciseMarkovChain& chain, const VerifyOptions& opt, std::ostream& out) {
  Rng rng(opt.seed, 0x0ac1e);
  double worst = 0.0, worst_lie = 0.0;
  for (std::size_t i = 0; i < opt.instances; ++i) {
    const auto tree = random_tree(rng);
    const auto& shape = tree.shape();
    const std::size_t n = shape.depth();
    const auto f = random_vector(rng, shape.level_size(n), -1.0, 1.0);
    const double direct = global_lower_expectation(tree, n, f, {});
    worst = std::max(worst, std::abs(direct - brute_force_oracle(tree, n, f, {})));
    for (std::size_t m = 1; m < n; ++m) {
      const auto inner = conditional_lower_expectations(tree, n, f, m);
      worst_lie = std::max(worst_lie, std::abs(direct - global_lower_expectation(tree, m, inner, {})));
    }
  }
  out << "random trees: " << opt.instances << '\n';
  out << "max |recursion - oracle|: " << num(worst) << '\n';
  out << "max |two-stage - direct|: " << num(worst_lie) << '\n';

  // The input chain itself, at the largest depth the oracle can afford.
  double chain_worst = 0.0;
  std::size_t depth = 0;
  for (std::size_t d = 1; d <= 4; ++d) {
    long double log_sel = 0;
    const auto shape = markov_tree(chain, d).shape();
    const auto tree = markov_tree(chain, d);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < shape.level_size(k); ++i)
        log_sel += std::log(static_cast<long double>(tree.local(k, i).vertex_count()));
    if (log_sel > std::log(1e6L)) break;
    depth = d;
    const auto f = random_vector(rng, shape.level_size(d), -1.0, 1.0);
    chain_worst = std::max(chain_worst, std::abs(finite_horizon_joint(chain, d, f) - brute_force_oracle(tree, d, f, {})));
  }
  out << "spec chain depth checked: " << depth << ", max |joint - oracle|: " << num(chain_worst) << '\n';
  return worst <= 1e-10 && worst_lie <= 1e-12 && chain_worst <= 1e-10;
}

bool suite_martingale(const ImpreciseMarkovChain& chain, const VerifyOptions& opt, std::ostream& out) {
  bool ok = true;
  std::size_t depth = 1;
  while (depth < 10 && std::pow(static_cast<double>(chain.size()), static_cast<double>(depth + 1)) <= 1e5) ++depth;
  const auto tree = markov_tree(chain, depth);
  Rng rng(opt.seed, 0x3a7);
  const std::size_t count = std::min<std::size_t>(opt.instances, 10);
  std::size_t sub_fail = 0, w_fail = 0, qualifying = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Gamble f(random_vector(rng, chain.size(), -1.0, 1.0));
    const double bound = f.variation();
    if (bound == 0.0) continue;
    const auto g = lift_process(chain, gain_differences(chain, f), depth);
    if (!verify_submartingale(tree, g).ok()) ++sub_fail;
    const double eps = bound / 2;
    const double xi = eps / (2 * bound * bound);
    const SelectorProcess b(tree.shape(), [&](const Situation& s) { return static_cast<int>((s.size() + i) % 3 != 0); });
    const auto w = hoeffding_supermartingale(tree, g, b, bound, xi);
    const auto rep = check_test_supermartingale(tree, w, g, b, bound, eps);
    qualifying += rep.growth_qualifying;
    if (!rep.ok()) ++w_fail;
  }
  out << "gain processes: " << count << " on depth " << depth << '\n';
  out << "submartingale failures: " << sub_fail << '\n';
  out << "test supermartingale failures: " << w_fail << " (growth-qualifying situations " << qualifying << ")\n";
  ok = ok && sub_fail == 0 && w_fail == 0;

  // Fair coin, centered +-1 walk, B = 1, bound 1, eps 1/2.
  const auto coin = ImpreciseProbabilityTree::homogeneous(10, make_precise(MassFunction::uniform(2)));
  const RealProcess walk(coin.shape(), [](const Situation& s) {
    double v = 0;
    for (std::size_t x : s) v += x == 0 ? 1.0 : -1.0;
    return v;
  });
  const SelectorProcess all(coin.shape(), true);
  const auto w = hoeffding_supermartingale(coin, walk, all, 1.0, 0.25);
  const auto rep = check_test_supermartingale(coin, w, walk, all, 1.0, 0.5);
  out << "fair coin depth 10: " << (rep.ok() ? "ok" : "FAIL") << ", internal nodes "
      << rep.supermartingale.situations_checked << ", growth-qualifying " << rep.growth_qualifying << '\n';
  return ok && rep.ok();
}

}  // namespace

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  return run("verify", err, [&] {
    const std::string bytes = read_file(opt.spec);
    const auto chain = to_chain(parse_chain_spec(bytes));
    std::ostringstream args;
    args << "suite=" << opt.suite << ";instances=" << opt.instances;
    bool ok = false;
    auto go = [&](auto&& suite) {
      header(out, "verify", bytes, args.str(), opt.seed);
      out << "suite: " << opt.suite << '\n';
      ok = suite(chain, opt, out);
    };
    if (opt.suite == "coherence") go(suite_coherence);
    else if (opt.suite == "identity") go(suite_identity);
    else if (opt.suite == "oracle") go(suite_oracle);
    else if (opt.suite == "martingale") go(suite_martingale);
    else throw InputError("unknown suite '" + opt.suite + "' (coherence | identity | oracle | martingale)");
    out << "result: " << (ok ? "PASS" : "FAIL") << '\n';
    return static_cast<int>(ok ? kSuccess : kViolation);
  });
}

}  // namespace imc::cli
