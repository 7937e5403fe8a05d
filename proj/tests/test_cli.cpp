#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "wptlab/manifest.hpp"

using wptlab::cli::parse_range;
using wptlab::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string field(const std::string& line, int index) {
  std::istringstream in(line);
  std::string f;
  for (int i = 0; i <= index; ++i) std::getline(in, f, ',');
  return f;
}

const char* kFig4bModel = R"({"degree":2,"a":-0.0669,"b":-0.1317,"c":-6.3801,"valid_range_w":[1e-7,3.1622776601683794e-4],"p_rf_min_w":null})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("range parsing") {
    CHECK(parse_range("-40:-5:5") == std::vector<double>{-40, -35, -30, -25, -20, -15, -10, -5});
    CHECK(parse_range("-20") == std::vector<double>{-20});
    CHECK(parse_range("1,2.5,-3") == std::vector<double>{1, 2.5, -3});
    CHECK(parse_range("0:1:0.1").size() == 11);
    CHECK(parse_range("0:1:0.1").back() == doctest::Approx(1.0));
    CHECK_THROWS(parse_range("5:1:1"));
    CHECK_THROWS(parse_range("0:1"));
    CHECK_THROWS(parse_range("a,b"));
  }

  TEST_CASE("gains examples") {
    auto r = run({"gains", "--scheme", "td-cw", "--m", "2"});
    CHECK(r.code == 0);
    CHECK(field(lines(r.out).at(1), 8) == "1.5");
    r = run({"gains", "--scheme", "td-wf", "--m", "2", "--n", "8"});
    CHECK(field(lines(r.out).at(1), 8) == "8.0625");
    r = run({"gains", "--scheme", "td-mod", "--m", "1", "--dist", "flash", "--l", "1"});
    CHECK(field(lines(r.out).at(1), 8) == "1");
    r = run({"gains", "--scheme", "cw-fading"});
    CHECK(field(lines(r.out).at(1), 8) == "2");
  }

  TEST_CASE("gains sweep over M as JSON") {
    const auto r = run({"--format", "json", "gains", "--scheme", "td-cw", "--sweep-m", "64"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.size() == 64);
    CHECK(j[1]["gain"].get<double>() == 1.5);
    CHECK(j[63]["m"].get<int>() == 64);
    CHECK(j[0]["n"].is_null());
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(run({"gains", "--scheme", "nope"}).code == 2);
    CHECK(run({"gains", "--m", "0"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"gains", "--scheme", "td-mod", "--dist", "flash", "--l", "0.5"}).code == 2);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("fit writes a model, a report and a manifest") {
    write_file("cli_fit.csv", "prf_dbm,pdc_dbm\n-40,-64\n-30,-50\n-20,-38\n-10,-28\n");
    const auto r = run({"fit", "cli_fit.csv", "--degree", "2", "--out", "cli_model.json"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("degree,a,b,c,rmse_log,samples\n", 0) == 0);
    const auto model = nlohmann::json::parse(slurp("cli_model.json"));
    CHECK(model["degree"] == 2);
    const auto manifest = wptlab::read_manifest("cli_model.json.manifest.json");
    CHECK(manifest.command == "fit");
    CHECK(manifest.version == "0.1.0");
    CHECK(manifest.args.at(1) == "cli_fit.csv");
    CHECK_FALSE(manifest.seed.has_value());

    write_file("cli_bad.csv", "prf_dbm,pdc_dbm\n-40,-64\n-30,oops\n");
    const auto bad = run({"fit", "cli_bad.csv"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 3") != std::string::npos);
    write_file("cli_flat.csv", "prf_dbm,pdc_dbm\n-40,-64\n-40,-63\n");
    CHECK(run({"fit", "cli_flat.csv", "--degree", "1"}).code == 2);
  }

  TEST_CASE("identity model has unit fading gain on every row") {
    write_file("cli_identity.json",
               R"({"degree":1,"a":0,"b":1,"c":0,"valid_range_w":[1e-7,1e-3],"p_rf_min_w":null})");
    const auto r = run({"gain-sweep", "cli_identity.json", "--mode", "fading", "--prf-dbm=-40:-5:5"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls.at(0) == "prf_dbm,e_rfdc,gain,combined,extrapolated_flag,error_flag");
    REQUIRE(ls.size() == 9);
    for (std::size_t i = 1; i < ls.size(); ++i) CHECK(std::stod(field(ls[i], 2)) == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("fig. 4(b) model in td2 mode is above one for most rows") {
    write_file("cli_fig4b.json", kFig4bModel);
    const auto r = run({"gain-sweep", "cli_fig4b.json", "--mode", "td2", "--prf-dbm=-40:-5:1"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    int above = 0;
    for (std::size_t i = 1; i < ls.size(); ++i) above += std::stod(field(ls[i], 2)) > 1.0;
    CHECK(above > static_cast<int>(ls.size() - 1) / 2);
  }

  TEST_CASE("mc mode agrees with quadrature mode") {
    write_file("cli_fig4b.json", kFig4bModel);
    const auto q = lines(run({"gain-sweep", "cli_fig4b.json", "--mode", "td2", "--prf-dbm=-30,-10"}).out);
    const auto m = run({"gain-sweep", "cli_fig4b.json", "--mode", "mc", "--mc-of", "td2", "--trials", "200000",
                        "--seed", "4", "--prf-dbm=-30,-10"});
    REQUIRE(m.code == 0);
    const auto ml = lines(m.out);
    CHECK(ml.at(0) == "prf_dbm,e_rfdc,gain,combined,extrapolated_flag,std_error,error_flag");
    for (std::size_t i = 1; i <= 2; ++i) {
      const double quad = std::stod(field(q.at(i), 2));
      const double mc = std::stod(field(ml.at(i), 2));
      const double se = std::stod(field(ml.at(i), 5));
      CHECK(std::abs(quad - mc) < 3.0 * se);
    }
  }

  TEST_CASE("divergent rows are flagged and set the exit code") {
    write_file("cli_convex.json",
               R"({"degree":2,"a":0.01,"b":1,"c":0,"valid_range_w":[1e-7,1e-3],"p_rf_min_w":null})");
    const auto r = run({"gain-sweep", "cli_convex.json", "--prf-dbm=-30,-20"});
    CHECK(r.code == 1);
    const auto ls = lines(r.out);
    CHECK(field(ls.at(1), 5) == "1");
    CHECK(field(ls.at(1), 2) == "nan");
  }

  TEST_CASE("sensitivity floor lowers the fading gain") {
    write_file("cli_fig4b.json", kFig4bModel);
    const auto plain = lines(run({"gain-sweep", "cli_fig4b.json", "--prf-dbm=-30"}).out);
    const auto floored = lines(run({"gain-sweep", "cli_fig4b.json", "--prf-dbm=-30", "--sensitivity-dbm=-35"}).out);
    CHECK(std::stod(field(floored.at(1), 2)) < std::stod(field(plain.at(1), 2)));
  }

  TEST_CASE("extrapolated rows are flagged") {
    write_file("cli_fig4b.json", kFig4bModel);
    const auto ls = lines(run({"gain-sweep", "cli_fig4b.json", "--prf-dbm=-45,-20"}).out);
    CHECK(field(ls.at(1), 4) == "1");
    CHECK(field(ls.at(2), 4) == "0");
  }

  TEST_CASE("mc seed from the environment and from the flag") {
    const auto a = run({"mc", "--m", "2", "--trials", "20000", "--seed", "9"});
    setenv("WPTLAB_SEED", "9", 1);
    const auto b = run({"mc", "--m", "2", "--trials", "20000"});
    setenv("WPTLAB_SEED", "10", 1);
    const auto c = run({"mc", "--m", "2", "--trials", "20000"});
    setenv("WPTLAB_SEED", "x", 1);
    const auto bad = run({"mc", "--m", "2", "--trials", "20000"});
    unsetenv("WPTLAB_SEED");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
    CHECK(bad.code == 2);
  }

  TEST_CASE("synth and moments round trip") {
    REQUIRE(run({"synth", "--family", "multisine", "--n", "8", "--power-dbm=0", "--duration", "4e-7", "--out",
                 "cli_ms8.bin"})
                .code == 0);
    const auto r = run({"moments", "cli_ms8.bin"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls.at(0) == "m2,m4,se_m2,se_m4,count,m4_over_1p5_m2sq");
    CHECK(std::stod(field(ls.at(1), 0)) == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(std::stod(field(ls.at(1), 5)) == doctest::Approx(5.375).epsilon(5e-3));
    CHECK(wptlab::read_manifest("cli_ms8.bin.manifest.json").seed.has_value());
    CHECK(run({"moments", "missing.bin"}).code == 2);
  }

  TEST_CASE("synth to stdout writes CSV") {
    const auto r = run({"synth", "--duration", "1e-9"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("t_s,y\n", 0) == 0);
  }

  TEST_CASE("circuit sweep with e_td pairing") {
    const auto r = run({"circuit", "--scheme", "cw", "--scheme", "td-cw", "--prf-dbm=-20", "--realizations", "2",
                        "--seed", "3"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls.at(0) == "scheme,prf_dbm,p_dc_w,efficiency,std_error,realizations,e_td,unmodeled_region");
    REQUIRE(ls.size() == 3);
    CHECK(field(ls[1], 6).empty());
    CHECK(std::stod(field(ls[2], 6)) > 0.0);
    const double eff = std::stod(field(ls[1], 3));
    CHECK(eff > 0.0);
    CHECK(eff < 1.0);
  }

  TEST_CASE("circuit reads a config file") {
    write_file("cli_circuit.cfg", "rload_ohm=5000\nc1_node=diode\n");
    CHECK(run({"circuit", "--config", "cli_circuit.cfg", "--prf-dbm=-20"}).code == 0);
    write_file("cli_bad_circuit.cfg", "rload=5000\n");
    const auto bad = run({"circuit", "--config", "cli_bad_circuit.cfg", "--prf-dbm=-20"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 1") != std::string::npos);
  }

  TEST_CASE("re-running a manifest reproduces the numeric output byte for byte") {
    write_file("cli_fig4b.json", kFig4bModel);
    setenv("WPTLAB_SEED", "77", 1);
    REQUIRE(run({"gain-sweep", "cli_fig4b.json", "--mode", "mc", "--trials", "50000", "--prf-dbm=-30:-20:5", "--out",
                 "cli_replay.csv"})
                .code == 0);
    unsetenv("WPTLAB_SEED");
    const auto m = wptlab::read_manifest("cli_replay.csv.manifest.json");
    REQUIRE(m.seed.has_value());
    CHECK(*m.seed == 77);
    CHECK(m.rng_algorithm.find("mt19937_64") != std::string::npos);
    const std::string first = slurp("cli_replay.csv");
    std::vector<std::string> args = m.args;
    args.back() = "cli_replay2.csv";
    args.push_back("--seed");
    args.push_back(std::to_string(*m.seed));
    REQUIRE(run(args).code == 0);
    CHECK(slurp("cli_replay2.csv") == first);
  }
}
