// Acceptance checks. One line per criterion, tolerances fixed here.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "wptlab/circuit_sim.hpp"
#include "wptlab/closed_form_gains.hpp"
#include "wptlab/gain_analysis.hpp"
#include "wptlab/harvester_models.hpp"
#include "wptlab/monte_carlo.hpp"
#include "wptlab/signal_synthesis.hpp"
#include "wptlab/units.hpp"

using namespace wptlab;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

LogPolyFitModel coeffs(double a, double b, double c) {
  LogPolyFitModel m;
  m.a = a;
  m.b = b;
  m.c = c;
  m.p_min_w = 1e-7;
  m.p_max_w = dbm_to_watts(-5.0);
  return m;
}

const LogPolyFitModel kFig4b = coeffs(-0.0669, -0.1317, -6.3801);
const LogPolyFitModel kFig5b = coeffs(-0.1105, -1.1468, -11.4342);

std::vector<double> dbm_grid(double start, double stop, double step) {
  std::vector<double> g;
  for (double x = start; x <= stop + 1e-9; x += step) g.push_back(x);
  return g;
}

void closed_form_gains() {
  const bool ok = g_td(2) == 1.5 && g_td(4) == 1.75 && g_mod(Cscg{}) == 2.0 && g_mod(RealGaussian{}) == 3.0 &&
                  g_mod(Flash{3.0}) == 9.0 && g_mod(Flash{1.7}) == 1.7 * 1.7 && g_wf(1) == 1.0 && g_wf(8) == 5.375;
  report(1, "closed-form gains", ok,
         fmt("g_td(2)=%.17g g_td(4)=%.17g g_mod={%.17g,%.17g,l^2} g_wf(1)=%.17g g_wf(8)=%.17g (tol exact)", g_td(2),
             g_td(4), g_mod(Cscg{}), g_mod(RealGaussian{}), g_wf(1), g_wf(8)));
}

void fading_doubling() {
  const auto model = taylor_from_diode(DiodeParams{}, 50.0);
  bool ok = true;
  double worst = 0.0;
  for (double p : {1e-6, 1e-5, 1e-4, 1e-3}) {
    const double cw = zdc_closed_form_terms(model, p, CwNoFading{}).fourth_order;
    const double fad = zdc_closed_form_terms(model, p, CwCscgFading{}).fourth_order;
    ok = ok && fad == 2.0 * cw;
    worst = std::max(worst, std::abs(fad / cw - 2.0));
  }
  report(2, "fading doubles the fourth-order term", ok, fmt("max |ratio-2|=%.3g (tol exact)", worst));
}

void quadrature_oracles() {
  double worst_f = 0.0, worst_t = 0.0;
  for (double d : {0.5, 1.0, 2.0, 3.7}) worst_f = std::max(worst_f, rel(fading_integral(0.0, d, 0.0), std::tgamma(d + 1)));
  for (int k = 1; k <= 6; ++k) {
    // C(2k,k) by the multiplicative formula
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (k + i) / i;
    worst_t = std::max(worst_t, rel(td2_integral(0.0, k, 0.0), c / std::pow(2.0, k)));
  }
  report(3, "quadrature oracles", worst_f <= 1e-8 && worst_t <= 1e-8,
         fmt("max rel err fading=%.3g td2=%.3g (tol 1e-8)", worst_f, worst_t));
}

void mc_vs_quadrature() {
  const std::vector<std::complex<double>> h(2, 1.0);
  double worst = 0.0;
  std::string where;
  std::uint64_t seed = 1000;
  for (const auto* model : {&kFig4b, &kFig5b}) {
    for (double dbm : {-40.0, -30.0, -20.0, -10.0, -5.0}) {
      const double p = dbm_to_watts(dbm);
      const auto f = mc_fading_gain(*model, p, 1000000, seed++);
      const auto t = mc_td_gain(*model, p, h, 1000000, seed++);
      const double zf = std::abs(f.estimate - e_fading(*model, p)) / f.std_error;
      const double zt = std::abs(t.estimate - e_td2(*model, p)) / t.std_error;
      if (zf > worst) worst = zf, where = fmt("%s fading %g dBm", model == &kFig4b ? "4b" : "5b", dbm);
      if (zt > worst) worst = zt, where = fmt("%s td2 %g dBm", model == &kFig4b ? "4b" : "5b", dbm);
    }
  }
  report(4, "MC agrees with quadrature", worst <= 3.0,
         fmt("20 comparisons, 1e6 trials, seeds 1000..1019, worst %.2f SE at %s (tol 3 SE)", worst, where.c_str()));
}

void trend_reproduction() {
  const auto grid = dbm_grid(-40.0, -5.0, 1.0);
  int fad_above = 0, td_above = 0, floor_lower = 0;
  double last_fad_above = 0.0, last_td_above = 0.0;
  LogPolyFitModel floored = kFig4b;
  floored.p_rf_min_w = 3e-7;
  for (double dbm : grid) {
    const double p = dbm_to_watts(dbm);
    const double ef = e_fading(kFig4b, p);
    const double et = e_td2(kFig4b, p);
    if (ef > 1.0) ++fad_above, last_fad_above = dbm;
    if (et > 1.0) ++td_above, last_td_above = dbm;
    if (e_fading(floored, p) < ef) ++floor_lower;
  }
  const int n = static_cast<int>(grid.size());
  const double need = 0.9 * n;
  report(5, "gain above one over most of the grid", fad_above >= need && td_above >= need && floor_lower == n,
         fmt("1 dB grid of %d points: e_fading>1 on %d (up to %g dBm), e_td>1 on %d (up to %g dBm), floor lowers "
             "e_fading on %d (tol >= 90%% and all)",
             n, fad_above, last_fad_above, td_above, last_td_above, floor_lower));
}

void moments_vs_waveform_theory() {
  double worst = 0.0;
  for (int n : {1, 2, 4, 8}) {
    WaveformSpec w;
    w.family = Multisine{n, 2.5e6};
    w.power_w = 1.0;
    const TransmitConfig cfg{};
    const auto sig = synthesize(w, cfg, 2.0 / 2.5e6, default_sample_rate(w, cfg), 1);
    const auto mom = estimate_moments(sig);
    worst = std::max(worst, rel(mom.m4 / (1.5 * w.power_w * w.power_w), g_wf(n)));
  }
  report(6, "multisine moments match waveform gain", worst <= 5e-3,
         fmt("N in {1,2,4,8}, max rel err %.3g (tol 5e-3)", worst));
}

void channel_fourth_moment() {
  const auto r2 = mc_channel_fourth_moment(std::vector<std::complex<double>>(2, 1.0), 1000000, 7);
  const auto r4 = mc_channel_fourth_moment(std::vector<std::complex<double>>(4, 1.0), 1000000, 8);
  const double z2 = std::abs(r2.estimate - 1.5) / r2.std_error;
  const double z4 = std::abs(r4.estimate - 1.75) / r4.std_error;
  // midpoint grid over both phases, no reference antenna
  const int g = 1024;
  double sum = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int k = 0; k < g; ++k) {
      const double a = 2.0 * std::numbers::pi * (i + 0.5) / g;
      const double b = 2.0 * std::numbers::pi * (k + 0.5) / g;
      const double mag2 = std::norm(std::polar(1.0, a) + std::polar(1.0, b));
      sum += mag2 * mag2 / 4.0;
    }
  }
  const double grid = sum / (static_cast<double>(g) * g);
  report(7, "channel fourth moment", z2 <= 3.0 && z4 <= 3.0 && std::abs(grid - 1.5) <= 1e-4,
         fmt("M=2 %.6f (%.2f SE), M=4 %.6f (%.2f SE), grid %.10f (tol 3 SE, grid 1e-4)", r2.estimate, z2,
             r4.estimate, z4, grid));
}

void circuit_properties() {
  const CircuitParams params;
  SteadyStateOptions opt;
  const std::vector<CircuitScheme> schemes{{"cw", Cw{}, TransmitConfig::unit_channels(1)},
                                           {"ms4", Multisine{4, 2.5e6}, TransmitConfig::unit_channels(1)},
                                           {"td-cw", Cw{}, TransmitConfig::unit_channels(2)}};
  const std::size_t realizations = 150;
  const auto rows = sweep(params, schemes, dbm_grid(-25.0, -10.0, 5.0), realizations, 2024, 2.45e9, opt);

  bool eff_ok = true;
  double cw20 = 0.0, ms20 = 0.0, best_td = 0.0, best_td_dbm = 0.0;
  for (const auto& r : rows) {
    eff_ok = eff_ok && r.efficiency >= 0.0 && r.efficiency <= 1.0;
    if (r.prf_dbm == -20.0 && r.scheme == "cw") cw20 = r.p_dc_w;
    if (r.prf_dbm == -20.0 && r.scheme == "ms4") ms20 = r.p_dc_w;
    if (r.scheme == "td-cw" && r.e_td && *r.e_td > best_td) best_td = *r.e_td, best_td_dbm = r.prf_dbm;
  }
  report(8, "(a) efficiency within [0,1]", eff_ok, fmt("%zu sweep points", rows.size()));
  report(8, "(b) multisine above CW at -20 dBm", ms20 > cw20, fmt("p_dc ms4=%.4e W cw=%.4e W", ms20, cw20));
  report(8, "(c) TD-CW above CW by 10%", best_td >= 1.10,
         fmt("best p_dc ratio %.3f at %g dBm, %zu realizations (tol >= 1.10)", best_td, best_td_dbm, realizations));

  SteadyStateOptions fine = opt;
  fine.samples_per_carrier = 2 * opt.samples_per_carrier;
  double worst = 0.0;
  for (const WaveformFamily& f : {WaveformFamily{Cw{}}, WaveformFamily{Multisine{4, 2.5e6}}}) {
    WaveformSpec w;
    w.family = f;
    w.power_w = dbm_to_watts(-20.0);
    const double a = steady_state_pdc(params, w, TransmitConfig{}, 1, 1, opt).p_dc_w;
    const double b = steady_state_pdc(params, w, TransmitConfig{}, 1, 1, fine).p_dc_w;
    worst = std::max(worst, rel(a, b));
  }
  report(8, "(d) step halving", worst < 5e-3,
         fmt("CW and multisine at -20 dBm, %d vs %d steps per carrier, max change %.3g (tol 5e-3)",
             opt.samples_per_carrier, fine.samples_per_carrier, worst));
}

void hardware_context() {
  std::ifstream in(WPTLAB_README_PATH);
  std::stringstream ss;
  ss << in.rdbuf();
  const bool ok = ss.str().find("## Hardware results") != std::string::npos;
  report(9, "hardware results documented as context only", ok,
         "nothing to compute; README carries a hardware section");
}

void determinism() {
  bool ok = true;
  const std::vector<std::complex<double>> h(3, 1.0);
  const auto a = mc_channel_fourth_moment(h, 200000, 5, 1);
  const auto b = mc_channel_fourth_moment(h, 200000, 5, 1);
  const auto c = mc_channel_fourth_moment(h, 200000, 5, 4);
  ok = ok && to_json(a) == to_json(b) && to_json(a) == to_json(c);
  const double p = dbm_to_watts(-20.0);
  ok = ok && to_json(mc_td_gain(kFig4b, p, h, 200000, 6, 1)) == to_json(mc_td_gain(kFig4b, p, h, 200000, 6, 4));
  ok = ok && to_json(mc_fading_gain(kFig4b, p, 200000, 6, 1)) == to_json(mc_fading_gain(kFig4b, p, 200000, 6, 4));

  WaveformSpec w;
  w.family = Modulated{Flash{2.0}, 2.5e6};
  w.power_w = 1e-3;
  const auto cfg = TransmitConfig::unit_channels(2);
  const double fs = default_sample_rate(w, cfg);
  ok = ok && synthesize(w, cfg, 2e-6, fs, 3).samples == synthesize(w, cfg, 2e-6, fs, 3).samples;

  SteadyStateOptions so;
  so.analysis_windows = 2;
  so.threads = 1;
  WaveformSpec cw;
  cw.power_w = p;
  const double s1 = steady_state_pdc(CircuitParams{}, cw, cfg, 2, 9, so).p_dc_w;
  so.threads = 2;
  const double s2 = steady_state_pdc(CircuitParams{}, cw, cfg, 2, 9, so).p_dc_w;
  ok = ok && s1 == s2;

  auto cli = [](const std::string& threads) {
    std::ostringstream out, err;
    cli::run_cli({"--threads", threads, "mc", "--m", "2", "--trials", "100000", "--seed", "5"}, out, err);
    return out.str();
  };
  const std::string c1 = cli("1");
  ok = ok && c1 == cli("1") && c1 == cli("4") && !c1.empty();
  report(10, "determinism", ok, "MC, synthesis, circuit and CLI output identical across runs and 1/2/4 threads");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> checks{closed_form_gains, fading_doubling,   quadrature_oracles,
                                                  mc_vs_quadrature,  trend_reproduction, moments_vs_waveform_theory,
                                                  channel_fourth_moment, circuit_properties,  hardware_context,
                                                  determinism};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      report(0, "unexpected exception", false, e.what());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d failing, %.1f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
