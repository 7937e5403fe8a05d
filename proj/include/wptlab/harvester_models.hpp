#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wptlab/closed_form_gains.hpp"

namespace wptlab {

// Shockley diode i_d = i_s (exp(v_d / (n v_t)) - 1).
struct DiodeParams {
  double i_s = 5e-6;     // A
  double n = 1.05;
  double v_t = 0.02586;  // V

  void validate() const;
};

// Truncated (order 4) Taylor model of the rectifier; only the coefficients of
// the z_dc figure of merit are kept.
struct TaylorDiodeModel {
  double k2 = 0.0;     // A/V^2
  double k4 = 0.0;     // A/V^4
  double r_ant = 0.0;  // ohm

  void validate() const;
};

// k_i = i_s / (i! (n v_t)^i) for i in {2, 4}.
TaylorDiodeModel taylor_from_diode(const DiodeParams& diode, double r_ant);

// z_dc = k2 R E[y^2] + k4 R^2 E[y^4]. Throws InvalidMomentsError when
// m4 < m2^2 (1 - 1e-9), which no real signal can produce.
double zdc_from_moments(const TaylorDiodeModel& model, double m2, double m4);

// Transmit schemes with closed-form fourth-order factors.
struct CwNoFading {};
struct CwCscgFading {};
struct TdCw {
  int m = 1;
};
struct TdMod {
  int m = 1;
  InputDistribution dist = Cscg{};
};
struct TdWf {
  int m = 1;
  int n = 1;
};

using Scheme = std::variant<CwNoFading, CwCscgFading, TdCw, TdMod, TdWf>;

// Multiplier F of the fourth-order term relative to an unfaded CW.
double fourth_order_factor(const Scheme& scheme);

struct ZdcTerms {
  double second_order = 0.0;
  double fourth_order = 0.0;

  double total() const { return second_order + fourth_order; }
};

// k2 R P + (3/2) k4 R^2 P^2 F for average RF input power P.
ZdcTerms zdc_closed_form_terms(const TaylorDiodeModel& model, double p_rf_avg, const Scheme& scheme);
double zdc_closed_form(const TaylorDiodeModel& model, double p_rf_avg, const Scheme& scheme);

// ln p_dc = a (ln p_rf)^2 + b ln p_rf + c, powers in watts, natural log.
struct LogPolyFitModel {
  int degree = 2;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double p_min_w = 0.0;  // range of the data the model was fitted on
  double p_max_w = 0.0;
  // Rectifier sensitivity: below this input the harvested power is zero.
  std::optional<double> p_rf_min_w;

  void validate() const;
};

struct FitSample {
  double p_rf_w = 0.0;
  double p_dc_w = 0.0;
};

struct FitDataset {
  std::vector<FitSample> samples;
};

// Least-squares fit in the log-log domain; degree 1 fixes a = 0.
LogPolyFitModel fit_logpoly(const FitDataset& data, int degree);

// Root-mean-square residual of ln p_dc.
double fit_rmse_log(const LogPolyFitModel& model, const FitDataset& data);

// exp(polynomial) with no sensitivity floor.
double eval_polynomial(const LogPolyFitModel& model, double p_rf);

// Harvested power including the sensitivity floor.
double eval_fit(const LogPolyFitModel& model, double p_rf);

struct FitEvaluation {
  double p_dc_w = 0.0;
  bool extrapolated = false;  // p_rf outside the fitted range
};

FitEvaluation eval_fit_checked(const LogPolyFitModel& model, double p_rf);

// CSV with header "prf_dbm,pdc_dbm" or "prf_w,pdc_w".
FitDataset read_fit_csv(std::istream& in);
FitDataset read_fit_csv_file(const std::string& path);

// {degree, a, b, c, valid_range_w: [lo, hi], p_rf_min_w: number|null}
std::string model_to_json(const LogPolyFitModel& model, int indent = 2);
LogPolyFitModel model_from_json(std::string_view text);
LogPolyFitModel read_model_file(const std::string& path);

}  // namespace wptlab
