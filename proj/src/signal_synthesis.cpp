#include "wptlab/signal_synthesis.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "wptlab/error.hpp"
#include "wptlab/units.hpp"

namespace wptlab {

namespace {

// Sub-stream ids; antenna m uses kPhaseStreamBase + m.
constexpr std::uint64_t kSymbolStream = 0;
constexpr std::uint64_t kPhaseStreamBase = 1;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cycles_to_angle(double cycles) { return kTwoPi * (cycles - std::floor(cycles)); }

std::size_t samples_per(double sample_rate, double rate) {
  const double n = std::floor(sample_rate / rate * (1.0 + 1e-12));
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

}  // namespace

void WaveformSpec::validate() const {
  require(power_w > 0.0, "waveform: power must be > 0");
  require(carrier_hz > 0.0, "waveform: carrier must be > 0");
  if (const auto* ms = std::get_if<Multisine>(&family)) {
    require(ms->n_tones >= 1, "waveform: multisine needs N >= 1");
    require(ms->delta_f_hz > 0.0, "waveform: delta_f must be > 0");
  } else if (const auto* mod = std::get_if<Modulated>(&family)) {
    require(mod->symbol_rate_hz > 0.0, "waveform: symbol rate must be > 0");
    if (const auto* f = std::get_if<Flash>(&mod->dist)) require(f->l >= 1.0, "waveform: flash needs l >= 1");
  }
}

double WaveformSpec::bandwidth_hz() const {
  if (const auto* ms = std::get_if<Multisine>(&family)) return (ms->n_tones - 1) * ms->delta_f_hz;
  if (const auto* mod = std::get_if<Modulated>(&family)) return mod->symbol_rate_hz;
  return 0.0;
}

std::string to_string(const WaveformFamily& family) {
  struct Visitor {
    std::string operator()(const Cw&) const { return "cw"; }
    std::string operator()(const Multisine& m) const { return "multisine(N=" + std::to_string(m.n_tones) + ")"; }
    std::string operator()(const Modulated& m) const { return "modulated(" + to_string(m.dist) + ")"; }
  };
  return std::visit(Visitor{}, family);
}

void TransmitConfig::validate() const {
  require(m_antennas >= 1, "transmit config: M must be >= 1");
  require(channel.size() == static_cast<std::size_t>(m_antennas), "transmit config: need one channel gain per antenna");
  require(phase_rate_hz > 0.0, "transmit config: phase rate must be > 0");
  require(path_loss >= 1.0, "transmit config: path loss must be >= 1");
}

TransmitConfig TransmitConfig::unit_channels(int m_antennas, double phase_rate_hz) {
  require(m_antennas >= 1, "transmit config: M must be >= 1");
  TransmitConfig cfg;
  cfg.m_antennas = m_antennas;
  cfg.phase_rate_hz = phase_rate_hz;
  cfg.channel.assign(static_cast<std::size_t>(m_antennas), {1.0, 0.0});
  return cfg;
}

std::complex<double> draw_symbol(const InputDistribution& dist, Rng& rng) {
  struct Visitor {
    Rng& rng;
    std::complex<double> operator()(const Cscg&) const {
      const double re = rng.normal() * std::numbers::sqrt2 / 2.0;
      const double im = rng.normal() * std::numbers::sqrt2 / 2.0;
      return {re, im};
    }
    std::complex<double> operator()(const RealGaussian&) const { return {rng.normal(), 0.0}; }
    std::complex<double> operator()(const Flash& f) const {
      // One uniform picks the amplitude, one the phase, always both.
      const double u = rng.uniform();
      const double phase = rng.uniform_phase();
      const double r = u < 1.0 / (f.l * f.l) ? f.l : 0.0;
      return std::polar(r, phase);
    }
  };
  return std::visit(Visitor{rng}, dist);
}

std::vector<std::complex<double>> sample_modulation(const InputDistribution& dist, std::size_t count,
                                                    std::uint64_t seed) {
  require(count >= 1, "sample_modulation: count must be >= 1");
  if (const auto* f = std::get_if<Flash>(&dist)) require(f->l >= 1.0, "sample_modulation: flash needs l >= 1");
  Rng rng(derive_seed(seed, kSymbolStream));
  std::vector<std::complex<double>> out(count);
  for (auto& s : out) s = draw_symbol(dist, rng);
  return out;
}

std::complex<double> effective_channel(const TransmitConfig& cfg, std::span<const double> phases) {
  if (phases.size() != cfg.channel.size()) {
    throw PreconditionError("effective_channel: phase vector length must equal M");
  }
  std::complex<double> h{0.0, 0.0};
  for (std::size_t m = 0; m < phases.size(); ++m) h += cfg.channel[m] * std::polar(1.0, phases[m]);
  return h;
}

double default_sample_rate(const WaveformSpec& w, const TransmitConfig& cfg, int samples_per_carrier) {
  require(samples_per_carrier >= 3, "default_sample_rate: need at least 3 samples per carrier period");
  double fs = samples_per_carrier * w.carrier_hz;
  std::vector<double> units{cfg.phase_rate_hz};
  if (const auto* ms = std::get_if<Multisine>(&w.family)) units.push_back(ms->delta_f_hz);
  if (const auto* mod = std::get_if<Modulated>(&w.family)) units.push_back(mod->symbol_rate_hz);
  for (int pass = 0; pass < 2; ++pass) {
    for (double u : units) {
      const double k = fs / u;
      if (std::abs(k - std::round(k)) > 1e-9 * k) fs = std::ceil(k) * u;
    }
  }
  return fs;
}

SignalGenerator::SignalGenerator(const WaveformSpec& w, const TransmitConfig& cfg, double sample_rate_hz,
                                 std::uint64_t seed)
    : w_(w), cfg_(cfg), sample_rate_(sample_rate_hz), symbol_stream_(derive_seed(seed, kSymbolStream)) {
  w_.validate();
  cfg_.validate();
  require(sample_rate_ > 2.0 * (w_.carrier_hz + w_.bandwidth_hz()),
          "synthesize: sample rate violates Nyquist for carrier plus bandwidth");
  amplitude_ = std::sqrt(2.0 * w_.power_w / (cfg_.m_antennas * cfg_.path_loss));
  hold_samples_ = samples_per(sample_rate_, cfg_.phase_rate_hz);
  if (const auto* ms = std::get_if<Multisine>(&w_.family)) {
    n_tones_ = ms->n_tones;
    delta_f_hz_ = ms->delta_f_hz;
  } else if (const auto* mod = std::get_if<Modulated>(&w_.family)) {
    symbol_samples_ = samples_per(sample_rate_, mod->symbol_rate_hz);
  }
  phase_streams_.reserve(static_cast<std::size_t>(cfg_.m_antennas));
  for (int m = 0; m < cfg_.m_antennas; ++m) {
    phase_streams_.emplace_back(derive_seed(seed, kPhaseStreamBase + static_cast<std::uint64_t>(m)));
  }
  phases_.assign(static_cast<std::size_t>(cfg_.m_antennas), 0.0);
}

void SignalGenerator::redraw_phases() {
  phases_[0] = 0.0;
  for (std::size_t m = 1; m < phases_.size(); ++m) phases_[m] = phase_streams_[m].uniform_phase();
  h_now_ = effective_channel(cfg_, phases_);
}

double SignalGenerator::next() {
  const std::size_t i = index_++;
  if (i % hold_samples_ == 0) redraw_phases();
  if (symbol_samples_ > 0 && i % symbol_samples_ == 0) {
    symbol_ = draw_symbol(std::get<Modulated>(w_.family).dist, symbol_stream_);
  }
  const double t_index = static_cast<double>(i) / sample_rate_;
  const std::complex<double> hs = h_now_ * symbol_;
  double acc = 0.0;
  if (n_tones_ == 1) {
    const double angle = cycles_to_angle(w_.carrier_hz * t_index);
    acc = hs.real() * std::cos(angle) - hs.imag() * std::sin(angle);
  } else {
    for (int n = 0; n < n_tones_; ++n) {
      const double angle = cycles_to_angle((w_.carrier_hz + n * delta_f_hz_) * t_index);
      acc += hs.real() * std::cos(angle) - hs.imag() * std::sin(angle);
    }
    acc /= std::sqrt(static_cast<double>(n_tones_));
  }
  return amplitude_ * acc;
}

SampledSignal synthesize(const WaveformSpec& w, const TransmitConfig& cfg, double duration_s,
                         double sample_rate_hz, std::uint64_t seed) {
  require(duration_s > 0.0, "synthesize: duration must be > 0");
  if (const auto* ms = std::get_if<Multisine>(&w.family)) {
    require(duration_s * ms->delta_f_hz >= 1.0 - 1e-9, "synthesize: duration shorter than one multisine period");
  }
  SignalGenerator gen(w, cfg, sample_rate_hz, seed);
  SampledSignal sig;
  sig.sample_rate_hz = sample_rate_hz;
  sig.carrier_hz = w.carrier_hz;
  const auto count = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  sig.samples.resize(count);
  for (auto& y : sig.samples) y = gen.next();
  return sig;
}

void write_signal_csv(const SampledSignal& sig, std::ostream& out) {
  out << "t_s,y\n";
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    out << format_double(static_cast<double>(i) / sig.sample_rate_hz) << ',' << format_double(sig.samples[i]) << '\n';
  }
}

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("truncated binary signal", 0);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | bytes[k];
  return v;
}

}  // namespace

void write_signal_binary(const SampledSignal& sig, std::ostream& out) {
  put_u64_le(out, std::bit_cast<std::uint64_t>(sig.sample_rate_hz));
  put_u64_le(out, sig.samples.size());
  for (double y : sig.samples) put_u64_le(out, std::bit_cast<std::uint64_t>(y));
}

SampledSignal read_signal_binary(std::istream& in) {
  SampledSignal sig;
  sig.sample_rate_hz = std::bit_cast<double>(get_u64_le(in));
  if (!(sig.sample_rate_hz > 0.0)) throw ParseError("binary signal: sample rate must be > 0", 0);
  const std::uint64_t count = get_u64_le(in);
  // Grow while reading so a corrupt count fails on the short read, not in the allocator.
  sig.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) sig.samples.push_back(std::bit_cast<double>(get_u64_le(in)));
  return sig;
}

SampledSignal read_signal_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> times;
  SampledSignal sig;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "t_s,y") throw ParseError("expected header 't_s,y'", line_no);
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected two fields", line_no);
    double t = 0.0, y = 0.0;
    const char* b = line.data();
    auto r1 = std::from_chars(b, b + comma, t);
    auto r2 = std::from_chars(b + comma + 1, b + line.size(), y);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != b + line.size()) {
      throw ParseError("not a number", line_no);
    }
    times.push_back(t);
    sig.samples.push_back(y);
  }
  if (times.size() < 2) throw ParseError("csv signal needs at least two samples", 0);
  sig.sample_rate_hz = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  return sig;
}

SampledSignal read_signal_file(const std::string& path) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0);
  return csv ? read_signal_csv(in) : read_signal_binary(in);
}

}  // namespace wptlab
