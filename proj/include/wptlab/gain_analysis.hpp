#pragma once

#include "wptlab/closed_form_gains.hpp"
#include "wptlab/harvester_models.hpp"
#include "wptlab/quadrature.hpp"

namespace wptlab {

// Efficiency split bar(e) = e_rfdc * gain, where gain is e_fading or e_td.
struct GainDecomposition {
  double e_rfdc = 0.0;
  double gain_factor = 0.0;
  double combined = 0.0;
};

enum class GainMode { Fading, Td2 };

// d = 2 a ln(P) + b, the exponent offset seen by a power fluctuation X at mean P.
double fading_exponent(const LogPolyFitModel& model, double p_rf_avg);

// Integral of x^(d + a ln x) e^(-x) over [x_min, inf). Rayleigh fading gain:
// E[X^(d + a ln X)] for X ~ Exp(1). Throws DivergentIntegralError for a > 0,
// or a = 0 with d <= -1 and x_min = 0.
double fading_integral(double a, double d, double x_min, const QuadratureSettings& q = {});

// (1/2pi) integral over [0, 2pi) of (1+cos u)^(d + a ln(1+cos u)), restricted to
// 1+cos u >= x_min. Throws DivergentIntegralError for a > 0, or a = 0 with d <= 0.
double td2_integral(double a, double d, double x_min, const QuadratureSettings& q = {});

// Model-level wrappers; the sensitivity floor, when set, becomes
// x_min = p_rf_min / p_rf_avg.
double e_fading(const LogPolyFitModel& model, double p_rf_avg, const QuadratureSettings& q = {});
double e_td2(const LogPolyFitModel& model, double p_rf_avg, const QuadratureSettings& q = {});

// e_rfdc is the fitted polynomial at p_rf_avg divided by p_rf_avg, without the
// sensitivity floor, so combined is always the mean harvested power over p_rf_avg.
GainDecomposition decompose(const LogPolyFitModel& model, double p_rf_avg, GainMode mode,
                            const QuadratureSettings& q = {});

}  // namespace wptlab
