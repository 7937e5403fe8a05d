#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wptlab/harvester_models.hpp"
#include "wptlab/signal_synthesis.hpp"

namespace wptlab {

// Single series-diode rectifier driven by an antenna source:
//
//   V1 = 2 y sqrt(R1) --R1--(v_a)--L1--+--|>|--+--------+
//                                  (v_in)   (v_out)     |
//                                      C1       C2    R_load
//                                      |        |       |
//   ground ----------------------------+--------+-------+
//
// Values are physical. freq_scale divides every frequency and multiplies every
// L and C; that is an exact change of time unit, so p_dc is unchanged up to
// rounding.
// Where the shunt matching capacitor C1 sits: at the diode anode (drawn
// above) or at v_a, between R1 and L1.
enum class ShuntNode { Source, Diode };

struct CircuitParams {
  double r_ant = 50.0;
  double c1 = 0.4e-12;
  double l1 = 8.8e-9;
  DiodeParams diode{};
  double c2 = 1e-9;
  double r_load = 10e3;
  double freq_scale = 1000.0;
  ShuntNode c1_node = ShuntNode::Diode;

  void validate() const;
  // Time-scaled copy: C and L multiplied by freq_scale, freq_scale reset to 1.
  CircuitParams scaled() const;
};

// Flat key=value file: r_ant_ohm, c1_f, l1_h, is_a, n, vt_v, c2_f, rload_ohm,
// freq_scale, and c1_node = diode|source. Missing keys keep their defaults;
// '#' starts a comment.
CircuitParams read_circuit_config(std::istream& in);
CircuitParams read_circuit_config_file(const std::string& path);

enum class Integrator { BackwardEuler, Trapezoidal };

struct SolverOptions {
  Integrator method = Integrator::Trapezoidal;
  double residual_tol_a = 1e-12;  // |i_network - i_diode| at acceptance
  int max_newton_iterations = 50;
  int max_step_halvings = 10;
};

struct CircuitState {
  double v_a = 0.0;    // node between R1, C1 and L1
  double v_in = 0.0;   // diode anode
  double v_out = 0.0;  // load
  double i_l = 0.0;    // L1 current towards the diode (= i_d)
  double i_c1 = 0.0;
  double i_c2 = 0.0;
  double v_source = 0.0;
};

struct StepReport {
  double i_d = 0.0;
  double residual = 0.0;
  bool converged = false;
  int substeps = 1;
};

// Per-step nodal solve with companion models for C1, L1, C2. The linear part
// collapses to Thevenin equivalents each step, leaving one scalar equation in
// the diode voltage that is solved by bracketed, damped Newton.
class RectifierSolver {
 public:
  RectifierSolver(const CircuitParams& params, double step_s, SolverOptions options = {});

  // Advance by one step to the given source voltage V1. Non-convergence falls
  // back to recursive step halving; throws SolverError when that is exhausted.
  StepReport advance(double v_source);

  const CircuitState& state() const { return state_; }
  void set_state(const CircuitState& s);
  std::size_t steps_taken() const { return steps_; }
  double step() const { return step_; }

 private:
  struct Attempt {
    CircuitState next;
    StepReport report;
  };
  // Step-size dependent companion conductances.
  struct Coefficients {
    double g1 = 0.0;
    double g2 = 0.0;
    double ro = 0.0;
    double gl = 0.0;
    double geq = 0.0;  // R1 + L1 Norton conductance (C1 at the diode)
    double norton = 0.0;  // 1 / (1 + gl R1)
    double ra = 0.0;   // source-side resistance, C1 at v_a
  };
  Coefficients coefficients(double h) const;
  Attempt try_step(const CircuitState& from, double v_source, double h, double guess) const;
  bool advance_substeps(double v_from, double v_to, double h, int depth, StepReport& report);

  CircuitParams p_;
  double step_;
  SolverOptions opt_;
  CircuitState state_;
  Coefficients nominal_;
  double nvt_;
  double vd_last_ = 0.0;
  double vd_prev_ = 0.0;
  std::size_t steps_ = 0;
};

struct TransientTrace {
  std::vector<double> t;
  std::vector<double> v_a;
  std::vector<double> v_in;
  std::vector<double> v_out;
  std::vector<double> i_d;
  std::vector<double> i_l;
  std::vector<double> residual;
  std::vector<std::uint8_t> converged;

  std::size_t size() const { return t.size(); }
};

// Drive samples are linearly interpolated to the step grid; V1 = 2 y sqrt(R1).
// Row 0 is the initial state at t = 0.
TransientTrace transient(const CircuitParams& params, const SampledSignal& drive, double step_s, double t_end_s,
                         const SolverOptions& options = {}, const CircuitState& initial = {});

void write_trace_csv(const TransientTrace& trace, std::ostream& out);

struct SteadyStateOptions {
  int samples_per_carrier = 64;
  double settle_rel_tol = 1e-4;
  int max_windows = 200;
  // Windows of v_out averaged per stochastic realization after settling.
  int analysis_windows = 25;
  // 0 selects 1/delta_f for multisine drives and 1/phase_rate otherwise.
  double window_s = 0.0;
  SolverOptions solver{};
  int threads = 0;
};

struct SteadyStateResult {
  double p_dc_w = 0.0;  // mean over realizations of v_out_avg^2 / R_load
  double v_out_avg = 0.0;
  double settle_time_s = 0.0;  // physical (unscaled) seconds
  std::size_t realizations = 0;
  double p_dc_std_error = 0.0;
  double p_rf_avg_w = 0.0;  // average RF power available at the antenna

  double efficiency() const { return p_dc_w / p_rf_avg_w; }
};

// Deterministic drives (one antenna, unmodulated) run once until consecutive
// window means of v_out agree to settle_rel_tol. Drives with swept phases or
// random symbols first settle their deterministic counterpart (same average
// power, one antenna, CW for modulated), then each realization starts from
// that state, runs the same settle time plus analysis_windows and averages
// v_out over the analysis part. Throws TimeoutError if the counterpart does
// not settle within max_windows.
SteadyStateResult steady_state_pdc(const CircuitParams& params, const WaveformSpec& w, const TransmitConfig& cfg,
                                   std::size_t realizations, std::uint64_t seed,
                                   const SteadyStateOptions& options = {});

struct CircuitScheme {
  std::string label;
  WaveformFamily family = Cw{};
  TransmitConfig cfg{};
};

struct SweepRow {
  std::string scheme;
  double prf_dbm = 0.0;
  double p_dc_w = 0.0;
  double efficiency = 0.0;
  double p_dc_std_error = 0.0;
  std::size_t realizations = 0;
  bool unmodeled_region = false;  // above the diode-breakdown onset, not modeled
  std::optional<double> e_td;     // p_dc / p_dc of the single-antenna scheme with the same family
};

// Input power above which the real rectifier enters breakdown.
inline constexpr double kBreakdownOnsetDbm = -5.0;

// Rows ordered by scheme, then by power. The same seed is used at every power
// of a scheme (common random numbers along the sweep).
std::vector<SweepRow> sweep(const CircuitParams& params, const std::vector<CircuitScheme>& schemes,
                            const std::vector<double>& prf_dbm, std::size_t realizations, std::uint64_t seed,
                            double carrier_hz = 2.45e9, const SteadyStateOptions& options = {});

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace wptlab
