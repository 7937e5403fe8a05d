#include "wptlab/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include "wptlab/error.hpp"

namespace wptlab {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["args"] = m.args;
  j["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json(nullptr);
  j["version"] = m.version;
  j["timestamp_utc"] = m.timestamp_utc;
  j["rng_algorithm"] = m.rng_algorithm;
  j["output"] = m.output;
  return j.dump(2);
}

RunManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.timestamp_utc = j.value("timestamp_utc", "");
    m.rng_algorithm = j.value("rng_algorithm", "");
    m.output = j.value("output", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
}

std::string write_manifest(const RunManifest& m) {
  const std::string path = m.output + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json(m) << '\n';
  return path;
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

}  // namespace wptlab
