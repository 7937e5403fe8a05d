#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wptlab/closed_form_gains.hpp"
#include "wptlab/rng.hpp"

namespace wptlab {

// Baseband families, all normalised to E[|s|^2] = 1.
struct Cw {};
// s(t) = sum_{n<N} e^{j 2 pi n delta_f t} / sqrt(N)
struct Multisine {
  int n_tones = 4;
  double delta_f_hz = 2.5e6;
};
// Piecewise-constant i.i.d. symbols, one per 1/symbol_rate.
struct Modulated {
  InputDistribution dist = Cscg{};
  double symbol_rate_hz = 2.5e6;
};

using WaveformFamily = std::variant<Cw, Multisine, Modulated>;

struct WaveformSpec {
  WaveformFamily family = Cw{};
  double power_w = 1.0;  // average total transmit power P
  double carrier_hz = 2.45e9;

  void validate() const;
  // One-sided occupied bandwidth above the carrier.
  double bandwidth_hz() const;
};

std::string to_string(const WaveformFamily& family);

// M dumb antennas, equal power split, phases redrawn every 1/phase_rate.
struct TransmitConfig {
  int m_antennas = 1;
  double phase_rate_hz = 2.5e6;
  std::vector<std::complex<double>> channel{1.0};  // h_m
  double path_loss = 1.0;                          // linear, >= 1

  void validate() const;

  static TransmitConfig unit_channels(int m_antennas, double phase_rate_hz = 2.5e6);
};

// Real receive-antenna signal y in sqrt(W).
struct SampledSignal {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
  double carrier_hz = 0.0;  // 0 when unknown (e.g. read from a file)

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

std::complex<double> draw_symbol(const InputDistribution& dist, Rng& rng);
std::vector<std::complex<double>> sample_modulation(const InputDistribution& dist, std::size_t count,
                                                    std::uint64_t seed);

// h = sum_m h_m exp(j psi_m)
std::complex<double> effective_channel(const TransmitConfig& cfg, std::span<const double> phases);

// >= samples_per_carrier samples per carrier period, rounded up to a multiple
// of delta_f, the symbol rate and the phase rate where that is possible.
double default_sample_rate(const WaveformSpec& w, const TransmitConfig& cfg, int samples_per_carrier = 64);

// Sequential sample source for
//   y(t) = sqrt(2P/M) Re{ L^{-1/2} h(t) s(t) e^{j w0 t} }.
// Antenna 0 is the phase reference (psi = 0); antennas m >= 1 redraw a
// uniform phase at the start of every hold interval from their own
// sub-stream. Output is a pure function of the constructor arguments.
class SignalGenerator {
 public:
  SignalGenerator(const WaveformSpec& w, const TransmitConfig& cfg, double sample_rate_hz,
                  std::uint64_t seed);

  double next();

  std::size_t position() const { return index_; }
  std::size_t hold_samples() const { return hold_samples_; }
  double sample_rate_hz() const { return sample_rate_; }
  std::complex<double> current_channel() const { return h_now_; }

 private:
  void redraw_phases();

  WaveformSpec w_;
  TransmitConfig cfg_;
  double sample_rate_;
  double amplitude_;
  std::size_t hold_samples_;
  std::size_t symbol_samples_ = 0;
  std::size_t index_ = 0;
  std::vector<Rng> phase_streams_;
  Rng symbol_stream_;
  std::vector<double> phases_;
  std::complex<double> h_now_{0.0, 0.0};
  std::complex<double> symbol_{1.0, 0.0};
  int n_tones_ = 1;
  double delta_f_hz_ = 0.0;
};

// Throws PreconditionError on a Nyquist violation or when a multisine is
// shorter than one period 1/delta_f.
SampledSignal synthesize(const WaveformSpec& w, const TransmitConfig& cfg, double duration_s,
                         double sample_rate_hz, std::uint64_t seed);

void write_signal_csv(const SampledSignal& sig, std::ostream& out);
// Little-endian: f64 sample_rate, u64 count, count x f64 samples.
void write_signal_binary(const SampledSignal& sig, std::ostream& out);
SampledSignal read_signal_binary(std::istream& in);
SampledSignal read_signal_csv(std::istream& in);
SampledSignal read_signal_file(const std::string& path);

}  // namespace wptlab
