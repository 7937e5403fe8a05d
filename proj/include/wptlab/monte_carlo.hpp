#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>

#include "wptlab/harvester_models.hpp"
#include "wptlab/signal_synthesis.hpp"

namespace wptlab {

struct MomentEstimate {
  double m2 = 0.0;  // W
  double m4 = 0.0;  // W^2
  double se_m2 = 0.0;
  double se_m4 = 0.0;
  std::size_t count = 0;
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

// Trials are split into this many batches; batch b draws from sub-stream b and
// the batch means give the standard error.
inline constexpr std::size_t kMcBatches = 100;

// Time averages of y^2 and y^4 with batch-means standard errors over 100
// contiguous blocks. Caller supplies whole beat periods where that matters.
MomentEstimate estimate_moments(const SampledSignal& sig);

// E[|sum_m h_m e^{j psi_m}|^4] / M^2 over uniform phases. Antenna 0 is the
// phase reference; only relative phases affect |h|.
McResult mc_channel_fourth_moment(std::span<const std::complex<double>> channel, std::size_t trials,
                                  std::uint64_t seed, int threads = 0);

// Mean of eval_fit(X P) / poly(P) with X ~ Exp(1). The denominator is the
// polynomial without the sensitivity floor, matching fading_integral.
McResult mc_fading_gain(const LogPolyFitModel& model, double p_rf_avg, std::size_t trials, std::uint64_t seed,
                        int threads = 0);

// Same with X = |sum_m h_m e^{j psi_m}|^2 / M.
McResult mc_td_gain(const LogPolyFitModel& model, double p_rf_avg, std::span<const std::complex<double>> channel,
                    std::size_t trials, std::uint64_t seed, int threads = 0);

std::string to_json(const McResult& r);

}  // namespace wptlab
