#pragma once

#include <string>

namespace wptlab {

// P_W = 10^((dBm - 30) / 10). Only used at I/O boundaries; everything inside is watts.
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Shortest representation that round-trips, '.' decimal separator regardless of locale.
std::string format_double(double value);

}  // namespace wptlab
