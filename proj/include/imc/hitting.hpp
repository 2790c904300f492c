#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "imc/chain.hpp"
#include "imc/credal.hpp"
#include "imc/gamble.hpp"

namespace imc {

struct HittingOptions {
  // Stop once the estimated distance to the fixed point, relative to
  // max(1, |h(x)|), is at most tol.
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  // Components exceeding cap are declared +infinity (and not converged).
  double cap = 1e12;
};

/// One side (lower or upper) of the expected transition times to a target.
struct HittingSolution {
  ExtendedGamble times;
  std::vector<bool> converged;
  std::size_t iterations = 0;

  bool all_converged() const {
    for (bool c : converged)
      if (!c) return false;
    return true;
  }
};

struct HittingTimes {
  std::size_t target = 0;
  ExtendedGamble lower;  // values in [1, +inf]
  ExtendedGamble upper;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline bool subset_of(const MassFunction& p, const std::vector<bool>& allowed, std::size_t target) {
  for (std::size_t z = 0; z < p.size(); ++z)
    if (p[z] > 0.0 && z != target && !allowed[z]) return false;
  return true;
}

inline bool touches(const MassFunction& p, const std::vector<bool>& set) {
  for (std::size_t z = 0; z < p.size(); ++z)
    if (p[z] > 0.0 && set[z]) return true;
  return false;
}

/// States x from which some selection of row vertices reaches the target
/// (at time >= 1) with probability one: exactly those with finite lower
/// expected transition time. Greatest fixed point of "can reach the target
/// with positive probability using only vertices that stay inside the set".
inline std::vector<bool> almost_sure_reach(const LowerTransitionOperator& t, std::size_t y) {
  const std::size_t n = t.dimension();
  std::vector<bool> w(n, true);
  for (;;) {
    // Backward search over vertices whose support stays in w (entering y is fine).
    std::vector<bool> reach(n, false);
    std::vector<bool> hit(n, false);  // y, or a state already known to reach it
    hit[y] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t x = 0; x < n; ++x) {
        if (reach[x] || !w[x]) continue;
        for (const auto& v : t.row(x).vertices()) {
          if (subset_of(v, w, y) && touches(v, hit)) {
            reach[x] = true;
            if (x != y) hit[x] = true;
            grew = true;
            break;
          }
        }
      }
    }
    if (reach == w) return w;
    w = std::move(reach);
  }
}

/// States x from which some selection avoids the target forever with
/// positive probability: exactly those with infinite upper expected
/// transition time.
inline std::vector<bool> can_avoid(const LowerTransitionOperator& t, std::size_t y) {
  const std::size_t n = t.dimension();
  // Trap: greatest set of non-target states each having a vertex supported in it.
  std::vector<bool> trap(n, true);
  trap[y] = false;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t x = 0; x < n; ++x) {
      if (!trap[x]) continue;
      bool stays = false;
      for (const auto& v : t.row(x).vertices()) {
        bool inside = true;
        for (std::size_t z = 0; z < n && inside; ++z)
          if (v[z] > 0.0 && !trap[z]) inside = false;
        if (inside) {
          stays = true;
          break;
        }
      }
      if (!stays) {
        trap[x] = false;
        changed = true;
      }
    }
  }
  // Positive-probability reachability of the trap through non-target states.
  std::vector<bool> avoid(n, false);
  std::vector<bool> via = trap;  // non-target states known to lead into the trap
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t x = 0; x < n; ++x) {
      if (avoid[x]) continue;
      for (const auto& v : t.row(x).vertices()) {
        if (touches(v, via)) {
          avoid[x] = true;
          if (x != y) via[x] = true;
          grew = true;
          break;
        }
      }
    }
  }
  return avoid;
}

template <typename Expect>
HittingSolution solve_hitting(const LowerTransitionOperator& t, std::size_t y, const HittingOptions& opt,
                              const std::vector<bool>& finite, Expect&& expect) {
  const std::size_t n = t.dimension();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> h(n);
  HittingSolution sol;
  sol.converged.assign(n, true);
  for (std::size_t x = 0; x < n; ++x) h[x] = finite[x] ? 0.0 : inf;

  double prev_worst = 0.0;
  for (;;) {
    std::vector<double> g(h);
    g[y] = 0.0;
    const ExtendedGamble eg(g);
    double worst = 0.0;
    bool active = false;
    for (std::size_t x = 0; x < n; ++x) {
      if (!std::isfinite(h[x])) continue;
      double next = 1.0 + expect(t.row(x), eg);
      if (next > opt.cap) {
        next = inf;
        sol.converged[x] = false;
      } else {
        worst = std::max(worst, std::abs(next - h[x]) / std::max(1.0, std::abs(next)));
        active = true;
      }
      h[x] = next;
    }
    ++sol.iterations;
    // Iterates approach the fixed point geometrically; the distance left is
    // about step * q / (1 - q) for the observed step ratio q.
    const double q = prev_worst > 0.0 ? worst / prev_worst : 1.0;
    const double tail = q < 1.0 ? std::max(1.0, q / (1.0 - q)) : std::numeric_limits<double>::infinity();
    prev_worst = worst;
    if (!active || worst == 0.0 || worst * tail <= opt.tol) break;
    if (sol.iterations >= opt.max_iter) {
      for (std::size_t x = 0; x < n; ++x)
        if (std::isfinite(h[x])) sol.converged[x] = false;
      break;
    }
  }
  sol.times = ExtendedGamble(std::move(h));
  return sol;
}

inline void check_hitting_args(const LowerTransitionOperator& t, std::size_t y, const HittingOptions& opt) {
  if (y >= t.dimension()) throw InputError("hitting target out of range");
  if (!(opt.tol > 0.0)) throw InputError("hitting times need tol > 0");
  if (!(opt.cap > 1.0)) throw InputError("hitting times need cap > 1");
}

}  // namespace detail

/// Least solution of h(x) = 1 + T(sum_{z != y} 1_z h(z))(x), by monotone
/// iteration from h = 0. States that cannot reach y almost surely under any
/// vertex selection are +infinity from the start.
inline HittingSolution lower_hitting_times(const LowerTransitionOperator& t, std::size_t y,
                                           const HittingOptions& opt = {}) {
  detail::check_hitting_args(t, y, opt);
  return detail::solve_hitting(t, y, opt, detail::almost_sure_reach(t, y),
                               [](const CredalSet& row, const ExtendedGamble& g) { return lower_expectation(row, g); });
}

/// Same system with the upper operator.
inline HittingSolution upper_hitting_times(const LowerTransitionOperator& t, std::size_t y,
                                           const HittingOptions& opt = {}) {
  detail::check_hitting_args(t, y, opt);
  auto finite = detail::can_avoid(t, y);
  finite.flip();
  return detail::solve_hitting(t, y, opt, finite,
                               [](const CredalSet& row, const ExtendedGamble& g) { return upper_expectation(row, g); });
}

inline HittingTimes hitting_times(const LowerTransitionOperator& t, std::size_t y, const HittingOptions& opt = {}) {
  auto lo = lower_hitting_times(t, y, opt);
  auto up = upper_hitting_times(t, y, opt);
  HittingTimes out;
  out.target = y;
  out.iterations = std::max(lo.iterations, up.iterations);
  out.converged = lo.all_converged() && up.all_converged();
  out.lower = std::move(lo.times);
  out.upper = std::move(up.times);
  return out;
}

/// Binary chain with every row linear-vacuous around the uniform mass
/// function: lower and upper transition/return times 2/(1+eps), 2/(1-eps).
inline std::pair<double, double> binary_closed_form(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("binary_closed_form needs 0 < eps < 1");
  return {2.0 / (1.0 + eps), 2.0 / (1.0 - eps)};
}

}  // namespace imc
