#include "wptlab/monte_carlo.hpp"

#include <cmath>
#include <vector>

#include <json.hpp>

#include "wptlab/error.hpp"
#include "wptlab/parallel.hpp"
#include "wptlab/rng.hpp"

namespace wptlab {

namespace {

struct BatchStats {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Weighted overall mean and batch-means standard error.
BatchStats summarize(const std::vector<double>& sums, const std::vector<std::size_t>& counts) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    total += sums[b];
    n += counts[b];
  }
  BatchStats s;
  s.estimate = total / static_cast<double>(n);
  const std::size_t batches = sums.size();
  if (batches < 2) return s;
  double ss = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double dev = sums[b] / static_cast<double>(counts[b]) - s.estimate;
    ss += dev * dev;
  }
  const double var_batch = ss / static_cast<double>(batches - 1);
  s.std_error = std::sqrt(var_batch / static_cast<double>(batches));
  return s;
}

// trial(rng) -> sample value; batch b uses sub-stream b of `seed`.
template <class Trial>
McResult run_batches(std::size_t trials, std::uint64_t seed, int threads, Trial&& trial) {
  require(trials >= 1, "Monte Carlo: trials must be >= 1");
  const std::size_t batches = std::min(kMcBatches, trials);
  std::vector<double> sums(batches, 0.0);
  std::vector<std::size_t> counts(batches, 0);
  for (std::size_t b = 0; b < batches; ++b) counts[b] = trials / batches + (b < trials % batches ? 1 : 0);
  parallel_for(batches, threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    double acc = 0.0;
    for (std::size_t i = 0; i < counts[b]; ++i) acc += trial(rng);
    sums[b] = acc;
  });
  const BatchStats s = summarize(sums, counts);
  return {s.estimate, s.std_error, trials, seed};
}

double channel_gain(std::span<const std::complex<double>> channel, Rng& rng) {
  std::complex<double> h = channel[0];
  for (std::size_t m = 1; m < channel.size(); ++m) h += channel[m] * std::polar(1.0, rng.uniform_phase());
  return std::norm(h);
}

}  // namespace

MomentEstimate estimate_moments(const SampledSignal& sig) {
  const std::size_t n = sig.samples.size();
  if (n < 2) throw PreconditionError("estimate_moments: signal too short (need >= 2 samples)");
  const std::size_t batches = std::min(kMcBatches, n);
  std::vector<double> s2(batches, 0.0), s4(batches, 0.0);
  std::vector<std::size_t> counts(batches);
  std::size_t start = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    counts[b] = n / batches + (b < n % batches ? 1 : 0);
    for (std::size_t i = start; i < start + counts[b]; ++i) {
      const double y2 = sig.samples[i] * sig.samples[i];
      s2[b] += y2;
      s4[b] += y2 * y2;
    }
    start += counts[b];
  }
  const BatchStats st2 = summarize(s2, counts);
  const BatchStats st4 = summarize(s4, counts);
  return {st2.estimate, st4.estimate, st2.std_error, st4.std_error, n};
}

McResult mc_channel_fourth_moment(std::span<const std::complex<double>> channel, std::size_t trials,
                                  std::uint64_t seed, int threads) {
  require(!channel.empty(), "mc_channel_fourth_moment: need M >= 1");
  const double m = static_cast<double>(channel.size());
  return run_batches(trials, seed, threads, [&](Rng& rng) {
    const double g = channel_gain(channel, rng);
    return g * g / (m * m);
  });
}

McResult mc_fading_gain(const LogPolyFitModel& model, double p_rf_avg, std::size_t trials, std::uint64_t seed,
                        int threads) {
  model.validate();
  const double denom = eval_polynomial(model, p_rf_avg);
  return run_batches(trials, seed, threads, [&](Rng& rng) {
    const double p = rng.exponential() * p_rf_avg;
    return p > 0.0 ? eval_fit(model, p) / denom : 0.0;
  });
}

McResult mc_td_gain(const LogPolyFitModel& model, double p_rf_avg, std::span<const std::complex<double>> channel,
                    std::size_t trials, std::uint64_t seed, int threads) {
  model.validate();
  require(!channel.empty(), "mc_td_gain: need M >= 1");
  const double denom = eval_polynomial(model, p_rf_avg);
  const double m = static_cast<double>(channel.size());
  return run_batches(trials, seed, threads, [&](Rng& rng) {
    const double p = channel_gain(channel, rng) / m * p_rf_avg;
    return p > 0.0 ? eval_fit(model, p) / denom : 0.0;
  });
}

std::string to_json(const McResult& r) {
  nlohmann::ordered_json j;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  return j.dump();
}

}  // namespace wptlab
