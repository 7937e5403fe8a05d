#include "wptlab/circuit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wptlab/error.hpp"
#include "wptlab/parallel.hpp"
#include "wptlab/units.hpp"

namespace wptlab {

void CircuitParams::validate() const {
  require(r_ant > 0.0, "circuit: r_ant must be > 0");
  require(c1 >= 0.0, "circuit: c1 must be >= 0");
  require(l1 >= 0.0, "circuit: l1 must be >= 0");
  require(c2 > 0.0, "circuit: c2 must be > 0");
  require(r_load > 0.0, "circuit: r_load must be > 0");
  require(freq_scale > 0.0, "circuit: freq_scale must be > 0");
  diode.validate();
}

CircuitParams CircuitParams::scaled() const {
  CircuitParams s = *this;
  s.c1 *= freq_scale;
  s.l1 *= freq_scale;
  s.c2 *= freq_scale;
  s.freq_scale = 1.0;
  return s;
}

CircuitParams read_circuit_config(std::istream& in) {
  CircuitParams p;
  const std::map<std::string, double*> keys{
      {"r_ant_ohm", &p.r_ant}, {"c1_f", &p.c1},   {"l1_h", &p.l1},           {"is_a", &p.diode.i_s},
      {"n", &p.diode.n},       {"vt_v", &p.diode.v_t}, {"c2_f", &p.c2}, {"rload_ohm", &p.r_load},
      {"freq_scale", &p.freq_scale}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "c1_node") {
      if (value == "source") {
        p.c1_node = ShuntNode::Source;
      } else if (value == "diode") {
        p.c1_node = ShuntNode::Diode;
      } else {
        throw ParseError("c1_node must be source or diode", line_no);
      }
      continue;
    }
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError("unknown key '" + key + "'", line_no);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw ParseError("bad number for '" + key + "'", line_no);
    *it->second = v;
  }
  try {
    p.validate();
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), 0);
  }
  return p;
}

CircuitParams read_circuit_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return read_circuit_config(in);
}

RectifierSolver::RectifierSolver(const CircuitParams& params, double step_s, SolverOptions options)
    : p_(params), step_(step_s), opt_(options), nvt_(params.diode.n * params.diode.v_t) {
  p_.validate();
  require(step_s > 0.0, "solver: step must be > 0");
  require(opt_.residual_tol_a > 0.0, "solver: residual tolerance must be > 0");
  require(opt_.max_newton_iterations >= 1, "solver: need at least one Newton iteration");
  require(opt_.max_step_halvings >= 0, "solver: max_step_halvings must be >= 0");
  nominal_ = coefficients(step_);
}

void RectifierSolver::set_state(const CircuitState& s) {
  state_ = s;
  vd_last_ = vd_prev_ = s.v_in - s.v_out;
}

RectifierSolver::Coefficients RectifierSolver::coefficients(double h) const {
  const double k = opt_.method == Integrator::Trapezoidal ? 2.0 : 1.0;
  Coefficients c;
  c.g1 = k * p_.c1 / h;
  c.g2 = k * p_.c2 / h;
  c.ro = 1.0 / (c.g2 + 1.0 / p_.r_load);
  if (p_.l1 > 0.0) {
    c.gl = h / (k * p_.l1);
    c.norton = 1.0 / (1.0 + c.gl * p_.r_ant);
    c.geq = c.gl * c.norton;
  } else {
    c.norton = 1.0;
    c.geq = 1.0 / p_.r_ant;
  }
  c.ra = p_.c1_node == ShuntNode::Source ? 1.0 / (1.0 / p_.r_ant + c.g1) : 1.0 / (c.geq + c.g1);
  return c;
}

RectifierSolver::Attempt RectifierSolver::try_step(const CircuitState& from, double v_source, double h,
                                                   double guess) const {
  const bool trap = opt_.method == Integrator::Trapezoidal;
  const Coefficients c = h == step_ ? nominal_ : coefficients(h);
  const bool c1_at_source = p_.c1_node == ShuntNode::Source;
  const bool has_l = p_.l1 > 0.0;

  const double j1 = -c.g1 * (c1_at_source ? from.v_a : from.v_in) - (trap ? from.i_c1 : 0.0);
  const double j2 = -c.g2 * from.v_out - (trap ? from.i_c2 : 0.0);
  // Inductor: i = i0 + gl (v_a - v_in).
  const double i0 = has_l ? from.i_l + (trap ? c.gl * (from.v_a - from.v_in) : 0.0) : 0.0;

  // Thevenin seen by the diode: v_d = voc - rth * i. Node voltages are
  // recovered from i with the same linear relations afterwards.
  double drive = 0.0;  // open-circuit voltage of the node feeding L1 or the diode
  double voc = 0.0;
  double rth = 0.0;
  if (c1_at_source) {
    drive = (v_source / p_.r_ant - j1) * c.ra;
    voc = drive + (has_l ? i0 / c.gl : 0.0) + j2 * c.ro;
    rth = c.ra + (has_l ? 1.0 / c.gl : 0.0) + c.ro;
  } else {
    // R1 and L1 in series form a Norton source into the anode node.
    const double ieq = has_l ? (i0 + c.gl * v_source) * c.norton : v_source / p_.r_ant;
    drive = (ieq - j1) * c.ra;
    voc = drive + j2 * c.ro;
    rth = c.ra + c.ro;
  }
  const double is = p_.diode.i_s;
  const double inv_rth = 1.0 / rth;

  double lo = std::min(0.0, voc);
  double hi = std::max(0.0, voc);
  double v = std::clamp(guess, lo, hi);
  double g = 0.0;
  bool ok = false;
  for (int it = 0; it < opt_.max_newton_iterations; ++it) {
    const double e = std::exp(v / nvt_);
    g = is * (e - 1.0) - (voc - v) * inv_rth;
    if (std::abs(g) <= opt_.residual_tol_a) {
      ok = true;
      break;
    }
    if (g > 0.0) {
      hi = v;
    } else {
      lo = v;
    }
    double next = v - g / (is * e / nvt_ + inv_rth);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == v) break;
    v = next;
  }

  Attempt a;
  const double i = (voc - v) * inv_rth;
  CircuitState& s = a.next;
  s.v_source = v_source;
  s.v_out = (i - j2) * c.ro;
  if (c1_at_source) {
    s.v_a = drive - i * c.ra;
    s.v_in = has_l ? s.v_a - (i - i0) / c.gl : s.v_a;
    s.i_l = i;
    s.i_c1 = c.g1 * s.v_a + j1;
  } else {
    s.v_in = drive - i * c.ra;
    s.i_c1 = c.g1 * s.v_in + j1;
    s.i_l = i + s.i_c1;
    s.v_a = v_source - p_.r_ant * s.i_l;
  }
  s.i_c2 = c.g2 * s.v_out + j2;
  a.report.i_d = i;
  a.report.residual = std::abs(g);
  a.report.converged = ok;
  return a;
}

bool RectifierSolver::advance_substeps(double v_from, double v_to, double h, int depth, StepReport& report) {
  // Linear extrapolation of the diode voltage; only exact for full steps.
  const double guess = depth == 0 ? 2.0 * vd_last_ - vd_prev_ : state_.v_in - state_.v_out;
  Attempt a = try_step(state_, v_to, h, guess);
  if (a.report.converged) {
    state_ = a.next;
    vd_prev_ = vd_last_;
    vd_last_ = state_.v_in - state_.v_out;
    report.i_d = a.report.i_d;
    report.residual = std::max(report.residual, a.report.residual);
    return true;
  }
  if (depth >= opt_.max_step_halvings) return false;
  const double v_mid = 0.5 * (v_from + v_to);
  report.substeps += 1;
  return advance_substeps(v_from, v_mid, 0.5 * h, depth + 1, report) &&
         advance_substeps(v_mid, v_to, 0.5 * h, depth + 1, report);
}

StepReport RectifierSolver::advance(double v_source) {
  StepReport report;
  const CircuitState before = state_;
  if (!advance_substeps(before.v_source, v_source, step_, 0, report)) {
    state_ = before;
    throw SolverError("rectifier: Newton failed after step halving", steps_);
  }
  report.converged = true;
  ++steps_;
  return report;
}

namespace {

double source_voltage(const CircuitParams& p, double y) { return 2.0 * y * std::sqrt(p.r_ant); }

}  // namespace

TransientTrace transient(const CircuitParams& params, const SampledSignal& drive, double step_s, double t_end_s,
                         const SolverOptions& options, const CircuitState& initial) {
  params.validate();
  require(step_s > 0.0 && t_end_s > 0.0, "transient: step and t_end must be > 0");
  require(drive.sample_rate_hz > 0.0 && drive.samples.size() >= 2, "transient: drive needs at least two samples");
  if (drive.carrier_hz > 0.0) {
    require(step_s <= (1.0 + 1e-9) / (32.0 * drive.carrier_hz), "transient: step exceeds 1/(32 f0)");
  }
  const double covered = static_cast<double>(drive.samples.size() - 1) / drive.sample_rate_hz;
  require(t_end_s <= covered * (1.0 + 1e-12), "transient: drive does not cover t_end");

  const double s = params.freq_scale;
  RectifierSolver solver(params.scaled(), step_s * s, options);
  auto drive_at = [&](double t) {
    const double x = std::min(t * drive.sample_rate_hz, static_cast<double>(drive.samples.size() - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(x));
    const std::size_t i1 = std::min(i0 + 1, drive.samples.size() - 1);
    const double f = x - static_cast<double>(i0);
    return drive.samples[i0] + f * (drive.samples[i1] - drive.samples[i0]);
  };

  CircuitState st = initial;
  st.v_source = source_voltage(params, drive_at(0.0));
  solver.set_state(st);

  const auto steps = static_cast<std::size_t>(std::ceil(t_end_s / step_s * (1.0 - 1e-12)));
  TransientTrace tr;
  auto push = [&](double t, const CircuitState& c, double i_d, double residual, bool converged) {
    tr.t.push_back(t);
    tr.v_a.push_back(c.v_a);
    tr.v_in.push_back(c.v_in);
    tr.v_out.push_back(c.v_out);
    tr.i_d.push_back(i_d);
    tr.i_l.push_back(c.i_l);
    tr.residual.push_back(residual);
    tr.converged.push_back(converged ? 1 : 0);
  };
  push(0.0, st, st.i_l, 0.0, true);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = std::min(static_cast<double>(k) * step_s, t_end_s);
    const StepReport r = solver.advance(source_voltage(params, drive_at(t)));
    push(t, solver.state(), r.i_d, r.residual, r.converged);
  }
  return tr;
}

void write_trace_csv(const TransientTrace& trace, std::ostream& out) {
  out << "t_s,v_in,v_out,i_d\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_double(trace.t[i]) << ',' << format_double(trace.v_in[i]) << ','
        << format_double(trace.v_out[i]) << ',' << format_double(trace.i_d[i]) << '\n';
  }
}

namespace {

bool is_stochastic(const WaveformSpec& w, const TransmitConfig& cfg) {
  return cfg.m_antennas > 1 || std::holds_alternative<Modulated>(w.family);
}

double received_power(const WaveformSpec& w, const TransmitConfig& cfg) {
  double sum = 0.0;
  for (const auto& h : cfg.channel) sum += std::norm(h);
  return w.power_w / cfg.path_loss * sum / cfg.m_antennas;
}

struct Chain {
  RectifierSolver solver;
  SignalGenerator gen;
  double v_scale;

  // Mean of v_out over the next `samples` steps.
  double window_mean(std::size_t samples) {
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      solver.advance(v_scale * gen.next());
      acc += solver.state().v_out;
    }
    return acc / static_cast<double>(samples);
  }
};

}  // namespace

SteadyStateResult steady_state_pdc(const CircuitParams& params, const WaveformSpec& w, const TransmitConfig& cfg,
                                   std::size_t realizations, std::uint64_t seed,
                                   const SteadyStateOptions& options) {
  params.validate();
  w.validate();
  cfg.validate();
  require(realizations >= 1, "steady_state_pdc: realizations must be >= 1");
  require(options.analysis_windows >= 1, "steady_state_pdc: analysis_windows must be >= 1");
  require(options.max_windows >= 2, "steady_state_pdc: max_windows must be >= 2");
  require(options.settle_rel_tol > 0.0, "steady_state_pdc: settle_rel_tol must be > 0");

  const double fs = default_sample_rate(w, cfg, options.samples_per_carrier);
  double window_s = options.window_s;
  if (window_s <= 0.0) {
    const auto* ms = std::get_if<Multisine>(&w.family);
    window_s = ms != nullptr ? 1.0 / ms->delta_f_hz : 1.0 / cfg.phase_rate_hz;
  }
  const auto window_samples = static_cast<std::size_t>(std::llround(window_s * fs));
  require(window_samples >= 1, "steady_state_pdc: window shorter than one sample");

  const CircuitParams scaled = params.scaled();
  const double step = params.freq_scale / fs;
  const double v_scale = 2.0 * std::sqrt(params.r_ant);

  // Deterministic counterpart: same received power, one antenna, CW in place of modulation.
  WaveformSpec w_det = w;
  if (std::holds_alternative<Modulated>(w.family)) w_det.family = Cw{};
  TransmitConfig cfg_det = TransmitConfig::unit_channels(1, cfg.phase_rate_hz);
  cfg_det.path_loss = cfg.path_loss;
  w_det.power_w = received_power(w, cfg) * cfg.path_loss;

  Chain det{RectifierSolver(scaled, step, options.solver), SignalGenerator(w_det, cfg_det, fs, seed), v_scale};
  double prev = det.window_mean(window_samples);
  double last = prev;
  int windows = 1;
  bool settled = false;
  while (windows < options.max_windows) {
    last = det.window_mean(window_samples);
    ++windows;
    if (std::abs(last - prev) <= options.settle_rel_tol * std::abs(last)) {
      settled = true;
      break;
    }
    prev = last;
  }
  if (!settled) {
    throw TimeoutError("steady_state_pdc: v_out did not settle within " + std::to_string(options.max_windows) +
                       " windows");
  }

  SteadyStateResult res;
  res.settle_time_s = windows * static_cast<double>(window_samples) / fs;
  res.p_rf_avg_w = received_power(w, cfg);

  if (!is_stochastic(w, cfg)) {
    res.v_out_avg = last;
    res.p_dc_w = last * last / params.r_load;
    res.realizations = 1;
    return res;
  }

  const CircuitState warm = det.solver.state();
  const std::size_t burn_samples = static_cast<std::size_t>(windows) * window_samples;
  const std::size_t analysis_samples = static_cast<std::size_t>(options.analysis_windows) * window_samples;
  std::vector<double> v_avg(realizations);
  parallel_for(realizations, options.threads, [&](std::size_t r) {
    Chain c{RectifierSolver(scaled, step, options.solver), SignalGenerator(w, cfg, fs, derive_seed(seed, r)),
            v_scale};
    c.solver.set_state(warm);
    for (std::size_t i = 0; i < burn_samples; ++i) c.solver.advance(v_scale * c.gen.next());
    v_avg[r] = c.window_mean(analysis_samples);
  });

  double sum_p = 0.0;
  double sum_v = 0.0;
  for (double v : v_avg) {
    sum_p += v * v / params.r_load;
    sum_v += v;
  }
  const auto n = static_cast<double>(realizations);
  res.p_dc_w = sum_p / n;
  res.v_out_avg = sum_v / n;
  res.realizations = realizations;
  if (realizations > 1) {
    double ss = 0.0;
    for (double v : v_avg) {
      const double d = v * v / params.r_load - res.p_dc_w;
      ss += d * d;
    }
    res.p_dc_std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return res;
}

std::vector<SweepRow> sweep(const CircuitParams& params, const std::vector<CircuitScheme>& schemes,
                            const std::vector<double>& prf_dbm, std::size_t realizations, std::uint64_t seed,
                            double carrier_hz, const SteadyStateOptions& options) {
  require(!schemes.empty(), "sweep: no schemes");
  require(!prf_dbm.empty(), "sweep: empty power range");
  std::vector<SweepRow> rows;
  rows.reserve(schemes.size() * prf_dbm.size());
  for (const auto& scheme : schemes) {
    for (double dbm : prf_dbm) {
      WaveformSpec w;
      w.family = scheme.family;
      w.carrier_hz = carrier_hz;
      w.power_w = 1.0;
      w.power_w = dbm_to_watts(dbm) / received_power(w, scheme.cfg);
      SteadyStateResult r;
      const std::string ctx = scheme.label + " at " + format_double(dbm) + " dBm: ";
      try {
        r = steady_state_pdc(params, w, scheme.cfg, realizations, seed, options);
      } catch (const SolverError& e) {
        throw e.with_context(ctx);
      } catch (const TimeoutError& e) {
        throw TimeoutError(ctx + e.what());
      }
      SweepRow row;
      row.scheme = scheme.label;
      row.prf_dbm = dbm;
      row.p_dc_w = r.p_dc_w;
      row.efficiency = r.efficiency();
      row.p_dc_std_error = r.p_dc_std_error;
      row.realizations = r.realizations;
      row.unmodeled_region = dbm > kBreakdownOnsetDbm;
      rows.push_back(row);
    }
  }
  // Pair every multi-antenna scheme with a single-antenna scheme of the same family.
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    if (schemes[s].cfg.m_antennas <= 1) continue;
    const std::string family = to_string(schemes[s].family);
    for (std::size_t b = 0; b < schemes.size(); ++b) {
      if (schemes[b].cfg.m_antennas != 1 || to_string(schemes[b].family) != family) continue;
      for (std::size_t k = 0; k < prf_dbm.size(); ++k) {
        const SweepRow& base = rows[b * prf_dbm.size() + k];
        SweepRow& row = rows[s * prf_dbm.size() + k];
        if (base.p_dc_w > 0.0) row.e_td = row.p_dc_w / base.p_dc_w;
      }
      break;
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "scheme,prf_dbm,p_dc_w,efficiency,std_error,realizations,e_td,unmodeled_region\n";
  for (const auto& r : rows) {
    out << r.scheme << ',' << format_double(r.prf_dbm) << ',' << format_double(r.p_dc_w) << ','
        << format_double(r.efficiency) << ',' << format_double(r.p_dc_std_error) << ',' << r.realizations << ','
        << (r.e_td ? format_double(*r.e_td) : std::string{}) << ',' << (r.unmodeled_region ? 1 : 0) << '\n';
  }
}

}  // namespace wptlab
