#pragma once

#include <string>
#include <variant>

namespace wptlab {

// Input distributions for energy-modulated single-carrier symbols s, all with E[|s|^2] = 1.
struct Cscg {};          // CN(0, 1)
struct RealGaussian {};  // N(0, 1), real valued
// Amplitude 0 w.p. 1 - 1/l^2 and l w.p. 1/l^2, uniform phase.
struct Flash {
  double l = 1.0;
};

using InputDistribution = std::variant<Cscg, RealGaussian, Flash>;

std::string to_string(const InputDistribution& dist);

// Fourth-order gain of M phase-swept antennas: E[|h|^4]/M^2 = 1 + (M-1)/M.
double g_td(int m_antennas);

// E[|s|^4] of the input distribution.
double g_mod(const InputDistribution& dist);

// Time-average |s|^4 of an in-phase, equal-power N-tone multisine: (2N^2+1)/(3N).
double g_wf(int n_tones);

}  // namespace wptlab
