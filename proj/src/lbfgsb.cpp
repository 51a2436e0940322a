#include "turtle/lbfgsb.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace turtle {

namespace {

constexpr double kC1 = 1e-4; // Armijo
constexpr double kC2 = 0.1;  // curvature
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pair {
  Vec s, y;
  double rho;
};

// Two-loop recursion with H0 = (s'y / y'y) I from the newest pair.
Vec two_loop(const std::deque<Pair>& hist, const Vec& g) {
  Vec q = g;
  const int m = static_cast<int>(hist.size());
  std::vector<double> alpha(m);
  for (int j = m - 1; j >= 0; --j) {
    alpha[j] = hist[j].rho * hist[j].s.dot(q);
    q -= alpha[j] * hist[j].y;
  }
  if (m > 0) {
    const Pair& last = hist.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (int j = 0; j < m; ++j) {
    double beta = hist[j].rho * hist[j].y.dot(q);
    q += (alpha[j] - beta) * hist[j].s;
  }
  return q;
}

// Coordinates pinned to a bound with the (minimization) gradient pushing
// outward do not participate in the quasi-Newton direction.
void mask_active(const Vec& x, const Vec& g, const Bounds& b, Vec& masked) {
  for (int i = 0; i < x.size(); ++i) {
    bool at_lo = x[i] <= b.lower[i] + 1e-12 * (1.0 + std::abs(b.lower[i]));
    bool at_hi = x[i] >= b.upper[i] - 1e-12 * (1.0 + std::abs(b.upper[i]));
    if ((at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0)) masked[i] = 0.0;
  }
}

} // namespace

MaximizeResult maximize(const FgFunc& fg, const Vec& x0, const Bounds& bounds,
                        const OptimizerConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  MaximizeResult res;
  Vec x = bounds.clamp(x0);

  int evals = 0;
  auto eval = [&](const Vec& pt, Vec& g) {
    ++evals;
    double phi = -fg(pt, g);
    g = -g;
    if (!std::isfinite(phi) || !g.allFinite())
      throw NumericalError("non-finite objective or gradient", pt);
    return phi;
  };

  Vec g(n);
  double phi = eval(x, g);
  std::deque<Pair> hist;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    Vec pg = x - bounds.clamp(x - g);
    double pgnorm = pg.lpNorm<Eigen::Infinity>();
    res.trace.objective.push_back(-phi);
    res.trace.pg_norm.push_back(pgnorm);
    if (pgnorm < cfg.grad_tol) {
      res.trace.reason = StopReason::grad_tol;
      break;
    }

    Vec gm = g;
    mask_active(x, g, bounds, gm);
    Vec d = -two_loop(hist, gm);
    mask_active(x, g, bounds, d);
    double dg = d.dot(g);
    if (!(dg < 0.0)) { // not a descent direction: fall back to projected steepest
      d = -gm;
      dg = d.dot(g);
      if (!(dg < 0.0)) {
        res.trace.reason = StopReason::grad_tol;
        break;
      }
    }

    // longest feasible step along d
    double amax = kInf;
    for (int i = 0; i < n; ++i) {
      if (d[i] > 0.0 && std::isfinite(bounds.upper[i]))
        amax = std::min(amax, (bounds.upper[i] - x[i]) / d[i]);
      else if (d[i] < 0.0 && std::isfinite(bounds.lower[i]))
        amax = std::min(amax, (bounds.lower[i] - x[i]) / d[i]);
    }
    if (amax <= 0.0) {
      res.trace.reason = StopReason::line_search;
      break;
    }

    // strong Wolfe search on [0, amax] (bracket + zoom, cubic interpolation)
    Vec g_trial(n);
    const double phi0 = phi, dphi0 = dg;
    double a_prev = 0.0, phi_prev = phi0, dphi_prev = dphi0;
    double a = std::min(1.0, amax);
    double a_lo = 0.0, phi_lo = 0.0, dphi_lo = 0.0;
    double a_hi = 0.0, phi_hi = 0.0, dphi_hi = 0.0;
    double a_star = -1.0, phi_star = 0.0;
    bool found = false, bracketed = false;
    Vec g_star;

    // minimizer of the cubic through (a0,f0,d0), (a1,f1,d1), safeguarded
    auto interp = [](double a0, double f0, double d0, double a1, double f1,
                     double d1) {
      double d1v = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
      double disc = d1v * d1v - d0 * d1;
      if (disc >= 0.0) {
        double d2v = std::copysign(std::sqrt(disc), a1 - a0);
        double r = a1 - (a1 - a0) * (d1 + d2v - d1v) / (d1 - d0 + 2.0 * d2v);
        if (std::isfinite(r)) return r;
      }
      return 0.5 * (a0 + a1);
    };

    for (int ls = 0; ls < 25; ++ls) {
      Vec xt = bounds.clamp(x + a * d);
      double phit = eval(xt, g_trial);
      double dphit = g_trial.dot(d);
      if (phit > phi0 + kC1 * a * dphi0 || (ls > 0 && phit >= phi_prev)) {
        a_lo = a_prev; phi_lo = phi_prev; dphi_lo = dphi_prev;
        a_hi = a; phi_hi = phit; dphi_hi = dphit;
        bracketed = true;
        break;
      }
      if (std::abs(dphit) <= -kC2 * dphi0) {
        a_star = a; phi_star = phit; g_star = g_trial;
        found = true;
        break;
      }
      if (dphit >= 0.0) {
        a_lo = a; phi_lo = phit; dphi_lo = dphit;
        a_hi = a_prev; phi_hi = phi_prev; dphi_hi = dphi_prev;
        bracketed = true;
        break;
      }
      if (a >= amax) { // bound hit while still descending: accept it
        a_star = a; phi_star = phit; g_star = g_trial;
        found = true;
        break;
      }
      a_prev = a; phi_prev = phit; dphi_prev = dphit;
      a = std::min(2.0 * a, amax);
    }
    if (!found && bracketed) {
      for (int z = 0; z < 30; ++z) {
        double lo = std::min(a_lo, a_hi), hi = std::max(a_lo, a_hi);
        a = interp(a_lo, phi_lo, dphi_lo, a_hi, phi_hi, dphi_hi);
        double margin = 0.1 * (hi - lo);
        a = std::clamp(a, lo + margin, hi - margin);
        Vec xt = bounds.clamp(x + a * d);
        double phit = eval(xt, g_trial);
        double dphit = g_trial.dot(d);
        if (phit > phi0 + kC1 * a * dphi0 || phit >= phi_lo) {
          a_hi = a; phi_hi = phit; dphi_hi = dphit;
        } else {
          if (std::abs(dphit) <= -kC2 * dphi0) {
            a_star = a; phi_star = phit; g_star = g_trial;
            found = true;
            break;
          }
          if (dphit * (a_hi - a_lo) >= 0.0) {
            a_hi = a_lo; phi_hi = phi_lo; dphi_hi = dphi_lo;
          }
          a_lo = a; phi_lo = phit; dphi_lo = dphit;
        }
        if (std::abs(a_hi - a_lo) < 1e-14 * std::max(1.0, std::abs(a_lo))) {
          if (phi_lo < phi0 && a_lo > 0.0) { // Armijo point found, curvature stalled
            a = a_lo;
            xt = bounds.clamp(x + a * d);
            phit = eval(xt, g_trial);
            a_star = a; phi_star = phit; g_star = g_trial;
            found = true;
          }
          break;
        }
      }
    }
    if (!found) {
      res.trace.reason = StopReason::line_search;
      break;
    }

    Vec x_new = bounds.clamp(x + a_star * d);
    Vec s = x_new - x;
    Vec yv = g_star - g;
    double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      hist.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(hist.size()) > cfg.memory) hist.pop_front();
    }
    double change = std::abs(phi - phi_star);
    x = x_new;
    phi = phi_star;
    g = g_star;
    if (change < cfg.f_tol * (std::abs(phi) + std::abs(phi_star) + 1.0)) {
      res.trace.objective.push_back(-phi);
      res.trace.pg_norm.push_back((x - bounds.clamp(x - g)).lpNorm<Eigen::Infinity>());
      res.trace.reason = StopReason::f_tol;
      break;
    }
  }

  res.x = x;
  res.f = -phi;
  res.evals = evals;
  return res;
}

MaximizeResult maximize(const std::function<double(const Vec&)>& f,
                        const std::function<Vec(const Vec&)>& grad, const Vec& x0,
                        const Bounds& bounds, const OptimizerConfig& cfg) {
  return maximize(
      [&](const Vec& x, Vec& g) {
        g = grad(x);
        return f(x);
      },
      x0, bounds, cfg);
}

} // namespace turtle
