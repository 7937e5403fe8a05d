#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wptlab {

inline constexpr const char* kVersion = "0.1.0";

// Everything needed to re-run a command: argv after the program name, the
// resolved seed and the RNG algorithm that produced any random numbers.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::optional<std::uint64_t> seed;
  std::string version = kVersion;
  std::string timestamp_utc;
  std::string rng_algorithm;
  std::string output;
};

std::string utc_timestamp();

std::string to_json(const RunManifest& m);
RunManifest manifest_from_json(std::string_view text);

// Writes <output>.manifest.json next to the output file.
std::string write_manifest(const RunManifest& m);
RunManifest read_manifest(const std::string& path);

}  // namespace wptlab
