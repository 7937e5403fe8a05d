#include "wptlab/closed_form_gains.hpp"

#include "wptlab/error.hpp"
#include "wptlab/units.hpp"

namespace wptlab {

std::string to_string(const InputDistribution& dist) {
  struct Visitor {
    std::string operator()(const Cscg&) const { return "cscg"; }
    std::string operator()(const RealGaussian&) const { return "real-gaussian"; }
    std::string operator()(const Flash& f) const { return "flash(l=" + format_double(f.l) + ")"; }
  };
  return std::visit(Visitor{}, dist);
}

double g_td(int m_antennas) {
  require(m_antennas >= 1, "g_td: M must be >= 1");
  const double m = m_antennas;
  return 1.0 + (m - 1.0) / m;
}

double g_mod(const InputDistribution& dist) {
  struct Visitor {
    double operator()(const Cscg&) const { return 2.0; }
    double operator()(const RealGaussian&) const { return 3.0; }
    double operator()(const Flash& f) const {
      require(f.l >= 1.0, "flash signaling requires l >= 1");
      return f.l * f.l;
    }
  };
  return std::visit(Visitor{}, dist);
}

double g_wf(int n_tones) {
  require(n_tones >= 1, "g_wf: N must be >= 1");
  const double n = n_tones;
  return (2.0 * n * n + 1.0) / (3.0 * n);
}

}  // namespace wptlab
