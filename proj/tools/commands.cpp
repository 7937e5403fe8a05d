#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "wptlab/circuit_sim.hpp"
#include "wptlab/closed_form_gains.hpp"
#include "wptlab/error.hpp"
#include "wptlab/gain_analysis.hpp"
#include "wptlab/harvester_models.hpp"
#include "wptlab/manifest.hpp"
#include "wptlab/monte_carlo.hpp"
#include "wptlab/parallel.hpp"
#include "wptlab/rng.hpp"
#include "wptlab/signal_synthesis.hpp"
#include "wptlab/units.hpp"

namespace wptlab::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kDefaultSeed = 1;

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + '"';
    }
  };
  return std::visit(Visitor{}, c);
}

void write_table(const Table& t, const std::string& format, std::ostream& out) {
  if (format == "json") {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        const Cell& c = row[i];
        if (const auto* d = std::get_if<double>(&c)) {
          obj[t.columns[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
        } else if (const auto* n = std::get_if<long long>(&c)) {
          obj[t.columns[i]] = *n;
        } else if (const auto* s = std::get_if<std::string>(&c)) {
          obj[t.columns[i]] = *s;
        } else {
          obj[t.columns[i]] = nullptr;
        }
      }
      arr.push_back(std::move(obj));
    }
    out << arr.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw PreconditionError("not a number: '" + s + "'");
  return v;
}

InputDistribution parse_dist(const std::string& name, double l) {
  if (name == "cscg") return Cscg{};
  if (name == "real-gaussian") return RealGaussian{};
  if (name == "flash") return Flash{l};
  throw PreconditionError("unknown distribution '" + name + "'");
}

// State shared by every subcommand.
struct Common {
  std::string format = "csv";
  std::string out_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> argv;
  std::string command;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("WPTLAB_SEED"); env != nullptr && *env != '\0') {
      std::uint64_t v = 0;
      const std::string s(env);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) throw PreconditionError("WPTLAB_SEED is not an unsigned integer");
      return v;
    }
    return kDefaultSeed;
  }

  // Writes the table to --out (plus manifest) or to the given stream.
  void emit(const Table& t, std::ostream& out, std::optional<std::uint64_t> used_seed) const {
    if (out_path.empty()) {
      write_table(t, format, out);
      return;
    }
    {
      std::ofstream f(out_path);
      if (!f) throw Error("cannot write " + out_path);
      write_table(t, format, f);
    }
    manifest(used_seed);
  }

  void manifest(std::optional<std::uint64_t> used_seed) const {
    RunManifest m;
    m.command = command;
    m.args = argv;
    m.seed = used_seed;
    m.timestamp_utc = utc_timestamp();
    m.rng_algorithm = used_seed ? kRngAlgorithm : "";
    m.output = out_path;
    write_manifest(m);
  }
};

// ---- gains

struct GainsArgs {
  std::string scheme = "td-cw";
  int m = 1;
  int n = 1;
  std::string dist = "cscg";
  double l = 1.0;
  int sweep_m = 0;
};

Table cmd_gains(const GainsArgs& a) {
  Table t{{"scheme", "m", "n", "dist", "l", "g_td", "g_mod", "g_wf", "gain"}, {}};
  auto row_for = [&](int m) {
    const InputDistribution dist = parse_dist(a.dist, a.l);
    Cell g_td_c, g_mod_c, g_wf_c;
    Scheme s;
    if (a.scheme == "cw") {
      s = CwNoFading{};
    } else if (a.scheme == "cw-fading") {
      s = CwCscgFading{};
    } else if (a.scheme == "td-cw") {
      s = TdCw{m};
      g_td_c = g_td(m);
    } else if (a.scheme == "td-mod") {
      s = TdMod{m, dist};
      g_td_c = g_td(m);
      g_mod_c = g_mod(dist);
    } else if (a.scheme == "td-wf") {
      s = TdWf{m, a.n};
      g_td_c = g_td(m);
      g_wf_c = g_wf(a.n);
    } else {
      throw PreconditionError("unknown scheme '" + a.scheme + "'");
    }
    const bool uses_dist = a.scheme == "td-mod";
    t.rows.push_back({a.scheme, static_cast<long long>(m), a.scheme == "td-wf" ? Cell{static_cast<long long>(a.n)} : Cell{},
                      uses_dist ? Cell{a.dist} : Cell{}, uses_dist && a.dist == "flash" ? Cell{a.l} : Cell{}, g_td_c,
                      g_mod_c, g_wf_c, fourth_order_factor(s)});
  };
  if (a.sweep_m > 0) {
    for (int m = 1; m <= a.sweep_m; ++m) row_for(m);
  } else {
    row_for(a.m);
  }
  return t;
}

// ---- fit

struct FitArgs {
  std::string input;
  int degree = 2;
  std::optional<double> sensitivity_dbm;
};

// ---- gain-sweep

struct GainSweepArgs {
  std::string model;
  std::string mode = "fading";
  std::string range = "-40:-5:1";
  std::optional<double> sensitivity_dbm;
  std::size_t trials = 1000000;
  std::string mc_of = "fading";
};

Table cmd_gain_sweep(const GainSweepArgs& a, const Common& common, bool& any_error) {
  LogPolyFitModel model = read_model_file(a.model);
  if (a.sensitivity_dbm) model.p_rf_min_w = dbm_to_watts(*a.sensitivity_dbm);
  const std::vector<double> grid = parse_range(a.range);
  const bool mc = a.mode == "mc";
  Table t{{"prf_dbm", "e_rfdc", "gain", "combined", "extrapolated_flag"}, {}};
  if (mc) t.columns.push_back("std_error");
  t.columns.push_back("error_flag");

  struct Row {
    double e_rfdc = kNaN, gain = kNaN, combined = kNaN, se = kNaN;
    bool extrapolated = false, error = false;
  };
  std::vector<Row> rows(grid.size());
  auto compute = [&](std::size_t i) {
    const double p = dbm_to_watts(grid[i]);
    Row& r = rows[i];
    r.extrapolated = eval_fit_checked(model, p).extrapolated;
    try {
      if (mc) {
        McResult res;
        if (a.mc_of == "fading") {
          res = mc_fading_gain(model, p, a.trials, common.resolved_seed(), common.threads);
        } else {
          const std::vector<std::complex<double>> h(2, {1.0, 0.0});
          res = mc_td_gain(model, p, h, a.trials, common.resolved_seed(), common.threads);
        }
        r.e_rfdc = eval_polynomial(model, p) / p;
        r.gain = res.estimate;
        r.combined = r.e_rfdc * r.gain;
        r.se = res.std_error;
      } else {
        const auto d = decompose(model, p, a.mode == "fading" ? GainMode::Fading : GainMode::Td2);
        r.e_rfdc = d.e_rfdc;
        r.gain = d.gain_factor;
        r.combined = d.combined;
      }
    } catch (const DivergentIntegralError&) {
      r.error = true;
    } catch (const ConvergenceError&) {
      r.error = true;
    }
  };
  if (mc) {
    for (std::size_t i = 0; i < grid.size(); ++i) compute(i);
  } else {
    parallel_for(grid.size(), common.threads, compute);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Row& r = rows[i];
    std::vector<Cell> cells{grid[i], r.e_rfdc, r.gain, r.combined, static_cast<long long>(r.extrapolated)};
    if (mc) cells.emplace_back(r.se);
    cells.emplace_back(static_cast<long long>(r.error));
    any_error = any_error || r.error;
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---- mc

struct McArgs {
  int m = 2;
  std::size_t trials = 1000000;
};

Table cmd_mc(const McArgs& a, const Common& common) {
  require(a.m >= 1, "mc: --m must be >= 1");
  const std::vector<std::complex<double>> h(static_cast<std::size_t>(a.m), {1.0, 0.0});
  const McResult r = mc_channel_fourth_moment(h, a.trials, common.resolved_seed(), common.threads);
  return Table{{"m", "estimate", "std_error", "trials", "seed", "closed_form"},
               {{static_cast<long long>(a.m), r.estimate, r.std_error, static_cast<long long>(r.trials),
                 std::to_string(r.seed), g_td(a.m)}}};
}

// ---- moments

Table cmd_moments(const std::string& input) {
  const SampledSignal sig = read_signal_file(input);
  const MomentEstimate e = estimate_moments(sig);
  return Table{{"m2", "m4", "se_m2", "se_m4", "count", "m4_over_1p5_m2sq"},
               {{e.m2, e.m4, e.se_m2, e.se_m4, static_cast<long long>(e.count), e.m4 / (1.5 * e.m2 * e.m2)}}};
}

// ---- synth

struct SynthArgs {
  std::string family = "cw";
  int n = 4;
  double delta_f = 2.5e6;
  std::string dist = "cscg";
  double l = 1.0;
  double symbol_rate = 2.5e6;
  double power_dbm = -20.0;
  double carrier = 2.45e9;
  int m = 1;
  double phase_rate = 2.5e6;
  double duration = 4e-7;
  double sample_rate = 0.0;
};

WaveformFamily make_family(const std::string& family, int n, double delta_f, const std::string& dist, double l,
                           double symbol_rate) {
  if (family == "cw") return Cw{};
  if (family == "multisine") return Multisine{n, delta_f};
  if (family == "modulated") return Modulated{parse_dist(dist, l), symbol_rate};
  throw PreconditionError("unknown waveform family '" + family + "'");
}

void cmd_synth(const SynthArgs& a, const Common& common, std::ostream& out) {
  WaveformSpec w;
  w.family = make_family(a.family, a.n, a.delta_f, a.dist, a.l, a.symbol_rate);
  w.power_w = dbm_to_watts(a.power_dbm);
  w.carrier_hz = a.carrier;
  const TransmitConfig cfg = TransmitConfig::unit_channels(a.m, a.phase_rate);
  const double fs = a.sample_rate > 0.0 ? a.sample_rate : default_sample_rate(w, cfg);
  const std::uint64_t seed = common.resolved_seed();
  const SampledSignal sig = synthesize(w, cfg, a.duration, fs, seed);
  if (common.out_path.empty()) {
    write_signal_csv(sig, out);
    return;
  }
  const bool csv = common.out_path.size() >= 4 && common.out_path.compare(common.out_path.size() - 4, 4, ".csv") == 0;
  {
    std::ofstream f(common.out_path, csv ? std::ios::out : std::ios::out | std::ios::binary);
    if (!f) throw Error("cannot write " + common.out_path);
    if (csv) {
      write_signal_csv(sig, f);
    } else {
      write_signal_binary(sig, f);
    }
  }
  common.manifest(seed);
}

// ---- circuit

struct CircuitArgs {
  std::string config;
  std::vector<std::string> schemes{"cw"};
  int m = 2;
  int n = 4;
  std::string range = "-25:-10:5";
  std::size_t realizations = 150;
  int spc = 64;
  std::string integrator = "trap";
  double carrier = 2.45e9;
  double phase_rate = 2.5e6;
};

CircuitScheme make_circuit_scheme(const std::string& name, int m, int n, double phase_rate) {
  CircuitScheme s;
  s.label = name;
  if (name == "cw") {
    s.family = Cw{};
    s.cfg = TransmitConfig::unit_channels(1, phase_rate);
  } else if (name == "ms") {
    s.family = Multisine{n, 2.5e6};
    s.cfg = TransmitConfig::unit_channels(1, phase_rate);
  } else if (name == "td-cw") {
    s.family = Cw{};
    s.cfg = TransmitConfig::unit_channels(m, phase_rate);
  } else if (name == "td-ms") {
    s.family = Multisine{n, 2.5e6};
    s.cfg = TransmitConfig::unit_channels(m, phase_rate);
  } else if (name == "mod") {
    s.family = Modulated{Cscg{}, 2.5e6};
    s.cfg = TransmitConfig::unit_channels(1, phase_rate);
  } else {
    throw PreconditionError("unknown circuit scheme '" + name + "'");
  }
  return s;
}

Table cmd_circuit(const CircuitArgs& a, const Common& common) {
  const CircuitParams params = a.config.empty() ? CircuitParams{} : read_circuit_config_file(a.config);
  std::vector<CircuitScheme> schemes;
  for (const auto& s : a.schemes) schemes.push_back(make_circuit_scheme(s, a.m, a.n, a.phase_rate));
  SteadyStateOptions opt;
  opt.samples_per_carrier = a.spc;
  opt.solver.method = a.integrator == "be" ? Integrator::BackwardEuler : Integrator::Trapezoidal;
  opt.threads = common.threads;
  const auto rows = sweep(params, schemes, parse_range(a.range), a.realizations, common.resolved_seed(), a.carrier, opt);
  Table t{{"scheme", "prf_dbm", "p_dc_w", "efficiency", "std_error", "realizations", "e_td", "unmodeled_region"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.scheme, r.prf_dbm, r.p_dc_w, r.efficiency, r.p_dc_std_error,
                      static_cast<long long>(r.realizations), r.e_td ? Cell{*r.e_td} : Cell{},
                      static_cast<long long>(r.unmodeled_region)});
  }
  return t;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, sep);) parts.push_back(p);
  require(!parts.empty(), "range: empty");
  std::vector<double> values;
  if (sep == ',') {
    for (const auto& p : parts) values.push_back(parse_number(p));
    return values;
  }
  require(parts.size() == 3, "range: expected start:stop:step");
  const double start = parse_number(parts[0]);
  const double stop = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  require(step > 0.0 && stop >= start, "range: need step > 0 and stop >= start");
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  require(count <= 1000000, "range: too many points");
  for (long long i = 0; i < count; ++i) values.push_back(start + static_cast<double>(i) * step);
  return values;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rectenna harvesting models, transmit-diversity gains and rectifier simulation", "wptlab"};
  app.require_subcommand(1);
  Common common;
  common.argv = args;
  app.add_option("--format", common.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", common.out_path, "Output file (a .manifest.json is written next to it)");
  app.add_option("--threads", common.threads, "Worker threads, 0 = OpenMP default")->check(CLI::NonNegativeNumber);
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed (default: $WPTLAB_SEED, else 1)");

  GainsArgs ga;
  auto* gains = app.add_subcommand("gains", "Closed-form fourth-order gains");
  gains->add_option("--scheme", ga.scheme)->check(CLI::IsMember({"cw", "cw-fading", "td-cw", "td-mod", "td-wf"}));
  gains->add_option("--m", ga.m, "Transmit antennas")->check(CLI::PositiveNumber);
  gains->add_option("--n", ga.n, "Multisine tones")->check(CLI::PositiveNumber);
  gains->add_option("--dist", ga.dist)->check(CLI::IsMember({"cscg", "real-gaussian", "flash"}));
  gains->add_option("--l", ga.l, "Flash signaling parameter, >= 1");
  gains->add_option("--sweep-m", ga.sweep_m, "Emit rows for M = 1..K")->check(CLI::PositiveNumber);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Least-squares log-log fit of measured (p_rf, p_dc)");
  fit->add_option("input", fa.input, "CSV with prf_dbm,pdc_dbm or prf_w,pdc_w")->required();
  fit->add_option("--degree", fa.degree)->check(CLI::IsMember({1, 2}));
  fit->add_option("--sensitivity-dbm", fa.sensitivity_dbm, "Store a sensitivity floor in the model");

  GainSweepArgs gs;
  auto* gsweep = app.add_subcommand("gain-sweep", "Fading / transmit-diversity gains of a fitted model");
  gsweep->add_option("model", gs.model, "Model JSON from `fit`")->required();
  gsweep->add_option("--mode", gs.mode)->check(CLI::IsMember({"fading", "td2", "mc"}));
  gsweep->add_option("--prf-dbm", gs.range, "start:stop:step or a,b,c (use --prf-dbm=-40:-5:1)");
  gsweep->add_option("--sensitivity-dbm", gs.sensitivity_dbm, "Override the model's sensitivity floor");
  gsweep->add_option("--trials", gs.trials)->check(CLI::PositiveNumber);
  gsweep->add_option("--mc-of", gs.mc_of, "Gain estimated in mc mode")->check(CLI::IsMember({"fading", "td2"}));

  McArgs ma;
  auto* mcc = app.add_subcommand("mc", "Monte Carlo E|h|^4 for M unit-gain antennas with random phases");
  mcc->add_option("--m", ma.m)->check(CLI::PositiveNumber);
  mcc->add_option("--trials", ma.trials)->check(CLI::PositiveNumber);

  std::string moments_input;
  auto* moments = app.add_subcommand("moments", "Second and fourth moments of a sampled signal");
  moments->add_option("input", moments_input, "Signal file (.csv or binary)")->required();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize the received RF signal y(t)");
  synth->add_option("--family", sa.family)->check(CLI::IsMember({"cw", "multisine", "modulated"}));
  synth->add_option("--n", sa.n)->check(CLI::PositiveNumber);
  synth->add_option("--delta-f", sa.delta_f, "Tone spacing, Hz");
  synth->add_option("--dist", sa.dist)->check(CLI::IsMember({"cscg", "real-gaussian", "flash"}));
  synth->add_option("--l", sa.l);
  synth->add_option("--symbol-rate", sa.symbol_rate, "Hz");
  synth->add_option("--power-dbm", sa.power_dbm, "Average transmit power (use --power-dbm=-20)");
  synth->add_option("--carrier", sa.carrier, "Hz");
  synth->add_option("--m", sa.m)->check(CLI::PositiveNumber);
  synth->add_option("--phase-rate", sa.phase_rate, "Hz");
  synth->add_option("--duration", sa.duration, "s");
  synth->add_option("--sample-rate", sa.sample_rate, "Hz, 0 = 64 samples per carrier period");

  CircuitArgs ca;
  auto* circuit = app.add_subcommand("circuit", "Transient rectifier simulation swept over input power");
  circuit->add_option("--config", ca.config, "key=value circuit file");
  circuit->add_option("--scheme", ca.schemes, "cw, ms, td-cw, td-ms, mod (repeatable)")
      ->check(CLI::IsMember({"cw", "ms", "td-cw", "td-ms", "mod"}));
  circuit->add_option("--m", ca.m, "Antennas for td-* schemes")->check(CLI::PositiveNumber);
  circuit->add_option("--n", ca.n, "Tones for *ms schemes")->check(CLI::PositiveNumber);
  circuit->add_option("--prf-dbm", ca.range, "start:stop:step or a,b,c (use --prf-dbm=-25:-10:5)");
  circuit->add_option("--realizations", ca.realizations)->check(CLI::PositiveNumber);
  circuit->add_option("--spc", ca.spc, "Time steps per carrier period")->check(CLI::Range(32, 1 << 16));
  circuit->add_option("--integrator", ca.integrator)->check(CLI::IsMember({"trap", "be"}));
  circuit->add_option("--carrier", ca.carrier, "Hz");
  circuit->add_option("--phase-rate", ca.phase_rate, "Hz");

  for (auto* sub : {gains, fit, gsweep, mcc, moments, synth, circuit}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) common.seed = seed_value;

  try {
    bool any_error = false;
    if (gains->parsed()) {
      common.command = "gains";
      common.emit(cmd_gains(ga), out, std::nullopt);
    } else if (fit->parsed()) {
      common.command = "fit";
      const FitDataset data = read_fit_csv_file(fa.input);
      LogPolyFitModel model = fit_logpoly(data, fa.degree);
      if (fa.sensitivity_dbm) model.p_rf_min_w = dbm_to_watts(*fa.sensitivity_dbm);
      Table report{{"degree", "a", "b", "c", "rmse_log", "samples"},
                   {{static_cast<long long>(model.degree), model.a, model.b, model.c, fit_rmse_log(model, data),
                     static_cast<long long>(data.samples.size())}}};
      if (common.out_path.empty()) {
        out << model_to_json(model) << '\n';
      } else {
        std::ofstream f(common.out_path);
        if (!f) throw Error("cannot write " + common.out_path);
        f << model_to_json(model) << '\n';
        f.close();
        common.manifest(std::nullopt);
        write_table(report, common.format, out);
      }
    } else if (gsweep->parsed()) {
      common.command = "gain-sweep";
      const Table t = cmd_gain_sweep(gs, common, any_error);
      common.emit(t, out, gs.mode == "mc" ? std::optional(common.resolved_seed()) : std::nullopt);
    } else if (mcc->parsed()) {
      common.command = "mc";
      common.emit(cmd_mc(ma, common), out, common.resolved_seed());
    } else if (moments->parsed()) {
      common.command = "moments";
      common.emit(cmd_moments(moments_input), out, std::nullopt);
    } else if (synth->parsed()) {
      common.command = "synth";
      cmd_synth(sa, common, out);
    } else if (circuit->parsed()) {
      common.command = "circuit";
      common.emit(cmd_circuit(ca, common), out, common.resolved_seed());
    }
    return any_error ? 1 : 0;
  } catch (const Error& e) {
    err << "wptlab: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace wptlab::cli
