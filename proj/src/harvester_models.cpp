#include "wptlab/harvester_models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "wptlab/error.hpp"
#include "wptlab/units.hpp"

namespace wptlab {

void DiodeParams::validate() const {
  require(i_s > 0.0, "diode: i_s must be > 0");
  require(n >= 1.0, "diode: ideality factor must be >= 1");
  require(v_t > 0.0, "diode: thermal voltage must be > 0");
}

void TaylorDiodeModel::validate() const {
  require(k2 > 0.0 && k4 > 0.0, "taylor model: k2 and k4 must be > 0");
  require(r_ant > 0.0, "taylor model: r_ant must be > 0");
}

TaylorDiodeModel taylor_from_diode(const DiodeParams& diode, double r_ant) {
  diode.validate();
  require(r_ant > 0.0, "taylor_from_diode: r_ant must be > 0");
  const double nvt = diode.n * diode.v_t;
  const double nvt2 = nvt * nvt;
  return {diode.i_s / (2.0 * nvt2), diode.i_s / (24.0 * nvt2 * nvt2), r_ant};
}

double zdc_from_moments(const TaylorDiodeModel& model, double m2, double m4) {
  model.validate();
  if (m2 < 0.0) throw InvalidMomentsError("second moment is negative");
  if (m4 < m2 * m2 * (1.0 - 1e-9)) {
    throw InvalidMomentsError("fourth moment below the Jensen bound m2^2");
  }
  return model.k2 * model.r_ant * m2 + model.k4 * model.r_ant * model.r_ant * m4;
}

double fourth_order_factor(const Scheme& scheme) {
  struct Visitor {
    double operator()(const CwNoFading&) const { return 1.0; }
    double operator()(const CwCscgFading&) const { return 2.0; }
    double operator()(const TdCw& s) const { return g_td(s.m); }
    double operator()(const TdMod& s) const { return g_td(s.m) * g_mod(s.dist); }
    double operator()(const TdWf& s) const { return g_td(s.m) * g_wf(s.n); }
  };
  return std::visit(Visitor{}, scheme);
}

ZdcTerms zdc_closed_form_terms(const TaylorDiodeModel& model, double p_rf_avg, const Scheme& scheme) {
  model.validate();
  require(p_rf_avg > 0.0, "zdc_closed_form: p_rf_avg must be > 0");
  const double factor = fourth_order_factor(scheme);
  const double r = model.r_ant;
  return {model.k2 * r * p_rf_avg, 1.5 * model.k4 * r * r * p_rf_avg * p_rf_avg * factor};
}

double zdc_closed_form(const TaylorDiodeModel& model, double p_rf_avg, const Scheme& scheme) {
  return zdc_closed_form_terms(model, p_rf_avg, scheme).total();
}

void LogPolyFitModel::validate() const {
  require(degree == 1 || degree == 2, "fit model: degree must be 1 or 2");
  require(degree == 2 || a == 0.0, "fit model: degree-1 models must have a = 0");
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c), "fit model: non-finite coefficient");
  require(p_min_w > 0.0 && p_min_w <= p_max_w, "fit model: valid range must be nonempty and positive");
  require(!p_rf_min_w || *p_rf_min_w >= 0.0, "fit model: p_rf_min must be >= 0");
}

LogPolyFitModel fit_logpoly(const FitDataset& data, int degree) {
  require(degree == 1 || degree == 2, "fit_logpoly: degree must be 1 or 2");
  std::set<double> distinct;
  for (const auto& s : data.samples) {
    require(s.p_rf_w > 0.0 && s.p_dc_w > 0.0, "fit_logpoly: powers must be strictly positive");
    distinct.insert(s.p_rf_w);
  }
  if (distinct.size() < static_cast<std::size_t>(degree) + 1) {
    throw FitError("fit_logpoly: need at least degree+1 distinct p_rf values");
  }

  const auto n = static_cast<Eigen::Index>(data.samples.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = std::log(data.samples[i].p_rf_w);
    y[i] = std::log(data.samples[i].p_dc_w);
  }
  // Centre the regressors: u = x - mean(x), and the quadratic column around
  // its own mean, so the intercept decouples and the remaining system is tiny
  // and well conditioned.
  const double x_mean = x.mean();
  const double y_mean = y.mean();
  const Eigen::VectorXd u = x.array() - x_mean;
  const Eigen::VectorXd u2 = u.array().square();
  const double u2_mean = u2.mean();

  const int cols = degree;
  Eigen::MatrixXd design(n, cols);
  design.col(cols - 1) = u;
  if (degree == 2) design.col(0) = u2.array() - u2_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  const Eigen::MatrixXd normal = design.transpose() * design;
  const Eigen::VectorXd rhs = design.transpose() * yc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const double scale = normal.diagonal().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * scale) {
    throw FitError("fit_logpoly: rank-deficient design matrix");
  }
  const Eigen::VectorXd beta = ldlt.solve(rhs);

  LogPolyFitModel model;
  model.degree = degree;
  const double alpha = degree == 2 ? beta[0] : 0.0;
  const double slope = beta[cols - 1];
  // y = alpha (u^2 - u2_mean) + slope u + y_mean, with u = x - x_mean.
  model.a = alpha;
  model.b = slope - 2.0 * alpha * x_mean;
  model.c = y_mean - alpha * u2_mean + alpha * x_mean * x_mean - slope * x_mean;
  model.p_min_w = *distinct.begin();
  model.p_max_w = *distinct.rbegin();
  return model;
}

namespace {

double log_poly(const LogPolyFitModel& m, double p_rf) {
  const double l = std::log(p_rf);
  return (m.a * l + m.b) * l + m.c;
}

}  // namespace

double fit_rmse_log(const LogPolyFitModel& model, const FitDataset& data) {
  require(!data.samples.empty(), "fit_rmse_log: empty dataset");
  double sum = 0.0;
  for (const auto& s : data.samples) {
    const double r = std::log(s.p_dc_w) - log_poly(model, s.p_rf_w);
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(data.samples.size()));
}

double eval_polynomial(const LogPolyFitModel& model, double p_rf) {
  require(p_rf > 0.0, "eval_fit: p_rf must be > 0");
  return std::exp(log_poly(model, p_rf));
}

double eval_fit(const LogPolyFitModel& model, double p_rf) {
  require(p_rf > 0.0, "eval_fit: p_rf must be > 0");
  if (model.p_rf_min_w && p_rf < *model.p_rf_min_w) return 0.0;
  return std::exp(log_poly(model, p_rf));
}

FitEvaluation eval_fit_checked(const LogPolyFitModel& model, double p_rf) {
  return {eval_fit(model, p_rf), p_rf < model.p_min_w || p_rf > model.p_max_w};
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(std::string_view field, std::size_t line) {
  const std::string t = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError("not a number: '" + t + "'", line);
  }
  return value;
}

}  // namespace

FitDataset read_fit_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool in_dbm = false;
  bool have_header = false;
  FitDataset data;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      std::string header;
      for (char ch : t) {
        if (ch != ' ' && ch != '\t') header.push_back(ch);
      }
      if (header == "prf_dbm,pdc_dbm") {
        in_dbm = true;
      } else if (header != "prf_w,pdc_w") {
        throw ParseError("expected header 'prf_dbm,pdc_dbm' or 'prf_w,pdc_w'", line_no);
      }
      have_header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw ParseError("expected exactly two comma-separated fields", line_no);
    }
    double p_rf = parse_number(std::string_view(t).substr(0, comma), line_no);
    double p_dc = parse_number(std::string_view(t).substr(comma + 1), line_no);
    if (in_dbm) {
      p_rf = dbm_to_watts(p_rf);
      p_dc = dbm_to_watts(p_dc);
    }
    if (!(p_rf > 0.0) || !(p_dc > 0.0) || !std::isfinite(p_rf) || !std::isfinite(p_dc)) {
      throw ParseError("powers must be finite and strictly positive", line_no);
    }
    data.samples.push_back({p_rf, p_dc});
  }
  if (!have_header) throw ParseError("empty input", 0);
  return data;
}

FitDataset read_fit_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return read_fit_csv(in);
}

std::string model_to_json(const LogPolyFitModel& model, int indent) {
  nlohmann::ordered_json j;
  j["degree"] = model.degree;
  j["a"] = model.a;
  j["b"] = model.b;
  j["c"] = model.c;
  j["valid_range_w"] = {model.p_min_w, model.p_max_w};
  if (model.p_rf_min_w) {
    j["p_rf_min_w"] = *model.p_rf_min_w;
  } else {
    j["p_rf_min_w"] = nullptr;
  }
  return j.dump(indent);
}

LogPolyFitModel model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    LogPolyFitModel m;
    m.degree = j.at("degree").get<int>();
    m.a = j.at("a").get<double>();
    m.b = j.at("b").get<double>();
    m.c = j.at("c").get<double>();
    const auto& range = j.at("valid_range_w");
    if (!range.is_array() || range.size() != 2) throw ParseError("valid_range_w must be [lo, hi]", 0);
    m.p_min_w = range[0].get<double>();
    m.p_max_w = range[1].get<double>();
    if (j.contains("p_rf_min_w") && !j["p_rf_min_w"].is_null()) {
      m.p_rf_min_w = j["p_rf_min_w"].get<double>();
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what(), 0);
  }
}

LogPolyFitModel read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace wptlab
