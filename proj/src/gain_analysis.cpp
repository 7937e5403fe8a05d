#include "wptlab/gain_analysis.hpp"

#include <cmath>
#include <numbers>

#include "wptlab/error.hpp"

namespace wptlab {

namespace {

constexpr int kMaxDoublings = 80;

// Running budget shared by all pieces of one integral.
struct Budget {
  const QuadratureSettings& q;
  int used = 0;

  QuadratureResult run(auto&& f, double lo, double hi) {
    auto r = integrate_adaptive(f, lo, hi, 0.1 * q.abs_tol, q.rel_tol, q.max_subdivisions - used);
    used += r.subdivisions;
    return r;
  }

  double tail_tolerance(double total) const { return 1e-2 * std::max(q.abs_tol, q.rel_tol * std::abs(total)); }
};

}  // namespace

double fading_exponent(const LogPolyFitModel& model, double p_rf_avg) {
  require(p_rf_avg > 0.0, "p_rf_avg must be > 0");
  return 2.0 * model.a * std::log(p_rf_avg) + model.b;
}

double fading_integral(double a, double d, double x_min, const QuadratureSettings& q) {
  q.validate();
  require(x_min >= 0.0 && std::isfinite(a) && std::isfinite(d), "fading_integral: invalid arguments");
  if (a > 0.0) throw DivergentIntegralError("fading gain diverges for a > 0 (super-linear fit)");
  if (a == 0.0 && d <= -1.0 && x_min == 0.0) throw DivergentIntegralError("fading gain diverges at 0 for a = 0, d <= -1");

  Budget budget{q};
  double total = 0.0;

  // [x_min, 1] in t = ln x: the integrand exp((d+1) t + a t^2 - e^t) is smooth
  // and has no end-point singularity.
  if (x_min < 1.0) {
    auto in_log = [a, d](double t) { return std::exp((d + 1.0) * t + a * t * t - std::exp(t)); };
    if (x_min > 0.0) {
      total += budget.run(in_log, std::log(x_min), 0.0).value;
    } else {
      double hi = 0.0;
      double lo = -1.0;
      for (int k = 0;; ++k) {
        total += budget.run(in_log, lo, hi).value;
        // exp((d+1)t + a t^2) is concave in the exponent, so the tangent at -T
        // bounds the tail below -T.
        const double big_t = -lo;
        const double slope = (d + 1.0) - 2.0 * a * big_t;
        if (slope > 0.0) {
          const double tail = std::exp(-(d + 1.0) * big_t + a * big_t * big_t) / slope;
          if (tail <= budget.tail_tolerance(total)) break;
        }
        if (k >= kMaxDoublings) throw ConvergenceError("fading integral: left tail did not decay");
        hi = lo;
        lo *= 2.0;
      }
    }
  }

  // [max(1, x_min), inf) by interval doubling; for x >= X the integrand is at
  // most X^q e^(-x) with q = d + a ln X since a <= 0.
  auto in_x = [a, d](double x) {
    const double l = std::log(x);
    return std::exp((d + a * l) * l - x);
  };
  double lo = std::max(1.0, x_min);
  for (int k = 0;; ++k) {
    const double hi = 2.0 * lo;
    total += budget.run(in_x, lo, hi).value;
    const double q_exp = d + a * std::log(hi);
    const double head = std::exp(q_exp * std::log(hi) - hi);
    double tail = -1.0;
    if (q_exp <= 0.0) {
      tail = head;
    } else if (hi > q_exp) {
      tail = head * hi / (hi - q_exp);
    }
    if (tail >= 0.0 && tail <= budget.tail_tolerance(total)) break;
    if (k >= kMaxDoublings) throw ConvergenceError("fading integral: right tail did not decay");
    lo = hi;
  }
  return total;
}

double td2_integral(double a, double d, double x_min, const QuadratureSettings& q) {
  q.validate();
  require(x_min >= 0.0 && std::isfinite(a) && std::isfinite(d), "td2_integral: invalid arguments");
  if (a > 0.0) throw DivergentIntegralError("transmit-diversity gain diverges for a > 0");
  if (a == 0.0 && d <= 0.0) throw DivergentIntegralError("transmit-diversity gain requires d > 0 when a = 0");
  if (x_min >= 2.0) return 0.0;

  // Fold onto [0, pi] about u = pi and write v = pi - u, so 1 + cos u = 2 sin^2(v/2)
  // without cancellation near the zero. The integrand there extends
  // continuously to 0.
  auto integrand = [a, d](double v) {
    const double s = std::sin(0.5 * v);
    const double x = 2.0 * s * s;
    if (x <= 0.0) return 0.0;
    const double l = std::log(x);
    return std::exp((d + a * l) * l);
  };
  const double v_lo = x_min > 0.0 ? 2.0 * std::asin(std::sqrt(0.5 * x_min)) : 0.0;
  Budget budget{q};
  return budget.run(integrand, v_lo, std::numbers::pi).value / std::numbers::pi;
}

double e_fading(const LogPolyFitModel& model, double p_rf_avg, const QuadratureSettings& q) {
  model.validate();
  const double d = fading_exponent(model, p_rf_avg);
  const double x_min = model.p_rf_min_w ? *model.p_rf_min_w / p_rf_avg : 0.0;
  return fading_integral(model.a, d, x_min, q);
}

double e_td2(const LogPolyFitModel& model, double p_rf_avg, const QuadratureSettings& q) {
  model.validate();
  const double d = fading_exponent(model, p_rf_avg);
  const double x_min = model.p_rf_min_w ? *model.p_rf_min_w / p_rf_avg : 0.0;
  return td2_integral(model.a, d, x_min, q);
}

GainDecomposition decompose(const LogPolyFitModel& model, double p_rf_avg, GainMode mode,
                            const QuadratureSettings& q) {
  model.validate();
  GainDecomposition g;
  g.e_rfdc = eval_polynomial(model, p_rf_avg) / p_rf_avg;
  g.gain_factor = mode == GainMode::Fading ? e_fading(model, p_rf_avg, q) : e_td2(model, p_rf_avg, q);
  g.combined = g.e_rfdc * g.gain_factor;
  return g;
}

}  // namespace wptlab
