#include "doctest.h"
#include "sharpdecay/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sharpdecay;
using namespace sharpdecay::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sharpdecay_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_field(const std::string& sub, const Json& cfg) {
  try {
    run(sub, cfg, {});
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("git blob hashes") {
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("selftest passes") {
  std::ostringstream os;
  CHECK(selftest(os) == 0);
  CHECK(os.str().find("FAIL") == std::string::npos);
}

TEST_CASE("invalid configurations name the offending field") {
  const Json base = Json::parse(R"({"name":"t","map":{"kind":"lsv","gamma":0.5},"params":{"n_max":10,"samples":1000}})");
  Json c = base;
  c["map"]["gama"] = 0.3;
  CHECK(config_error_field("tails", c) == "map.gama");
  c = base;
  c["params"]["n_maxx"] = 3;
  CHECK(config_error_field("tails", c) == "params.n_maxx");
  c = base;
  c["map"]["gamma"] = 1.5;
  CHECK(config_error_field("tails", c) == "map.gamma");
  c = base;
  c["seed"] = -4;
  CHECK(config_error_field("tails", c) == "seed");
  c = base;
  c["table"] = {{"kind", "stadium"}};
  CHECK(config_error_field("tails", c) == "map");
  c = base;
  c["observables"] = {{"v", {{"kind", "indicator_X_mollified"}, {"widht", 0.1}}}};
  CHECK(config_error_field("correlate", c) == "observables.v.widht");
  c = base;
  c["extra"] = 1;
  CHECK(config_error_field("tails", c) == "extra");
  const Json semi = Json::parse(R"({"table":{"kind":"semidispersing","rect":[1,1],"scatterers":[{"center":[0.5,0.5],"radius":0.3},{"center":[0.5,0.9],"radius":0.2}]}})");
  CHECK(config_error_field("tails", semi) == "table.scatterers");
  CHECK(config_error_field("renewal", Json::parse(R"({"map":{"kind":"doubling"}})")) == "map.kind");
  CHECK(config_error_field("fit", Json::parse(R"({"fits":[]})")) == "fits");
  CHECK(config_error_field("launch", Json::object()) == "<subcommand>");
}

TEST_CASE("runs are deterministic across worker counts") {
  const Json cfg = Json::parse(R"({"name":"det","map":{"kind":"lsv","gamma":0.5},"params":{"n_max":20,"samples":40000,"streams":16}})");
  for (const std::string sub : {"tails", "correlate", "birkhoff"}) {
    Json c = cfg;
    if (sub == "tails") c["params"] = {{"n_max", 20}, {"samples", 40000}};
    if (sub == "birkhoff") c["params"] = {{"n", 200}, {"samples", 64}};
    Overrides one, four;
    one.workers = 1;
    four.workers = 4;
    const auto a = run(sub, c, one);
    const auto b = run(sub, c, four);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i].content == b.files[i].content);
  }
}

TEST_CASE("outputs, manifest and directory ownership") {
  const auto dir = scratch("own");
  const Json cfg = Json::parse(R"({"name":"owner","map":{"kind":"doubling"},"params":{"n_max":10,"samples":5000},"seed":3})");
  const auto r = run("tails", cfg, {});
  write_outputs(r, dir, 0.5);
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("experiment") == "owner");
  CHECK(manifest.at("config").at("seed") == 3);
  CHECK(manifest.at("files").at("tails.csv") == git_blob_sha1(slurp(dir / "tails.csv")));
  CHECK(manifest.contains("wall_time_s"));
  const std::string first = slurp(dir / "tails.csv");
  write_outputs(run("tails", cfg, {}), dir, 0.7);
  CHECK(slurp(dir / "tails.csv") == first);

  Json other = cfg;
  other["name"] = "intruder";
  CHECK_THROWS_AS(write_outputs(run("tails", other, {}), dir, 0.1), ConfigError);
  CHECK(Json::parse(slurp(dir / "manifest.json")).at("experiment") == "owner");
  fs::remove_all(dir);
}

TEST_CASE("fit and report read emitted sequences") {
  const auto dir = scratch("pipeline");
  const Json cfg = Json::parse(R"({"name":"ren","map":{"kind":"lsv","gamma":0.5},"params":{"m":128,"N":64}})");
  write_outputs(run("renewal", cfg, {}), dir / "ren", 0.0);
  const std::string csv = (dir / "ren" / "renewal.csv").string();
  const auto f = run("fit", Json{{"name", "fits"}, {"fits", {{{"experiment", "rho"}, {"input", csv}, {"column", "rho_direct"}, {"window", {10, 60}}}}}}, {});
  const Json rec = Json::parse(f.files.at(0).content);
  CHECK(rec.at("experiment") == "rho");
  CHECK(rec.at("window") == Json::array({10, 60}));
  const auto rep = run("report", Json{{"name", "rep"},
                                      {"items",
                                       {{{"name", "mu_Y_squared"},
                                         {"fit", {{"input", csv}, {"column", "rho_direct"}, {"window", {10, 60}}, {"plateau", {{"p", 0}}}}},
                                         {"expected_c", 0.3644 * 0.3644},
                                         {"factor_c", 1.2}}}}},
                       {});
  CHECK(rep.passed);
  CHECK(rep.files.at(0).content.find("PASS") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const std::string bin = SHARPDECAY_CLI;
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  CHECK(shell(bin + " selftest") == 0);
  {
    std::ofstream(dir / "bad.json") << R"({"map":{"kind":"lsv","gamma":0.5,"bogus":1}})";
    std::ofstream(dir / "ok.json") << R"({"name":"okrun","map":{"kind":"doubling"},"params":{"n_max":5,"samples":1000}})";
    std::ofstream(dir / "broken.json") << "{";
    std::ofstream(dir / "fit.json") << R"({"name":"f","fits":[{"input":"/nonexistent.csv","window":[10,40]}]})";
    std::ofstream neg(dir / "neg.csv");
    neg << "n,rho\n";
    for (int n = 0; n <= 40; ++n) neg << n << "," << (n % 2 ? -1.0 : 1.0) / (n + 1) << "\n";
    std::ofstream(dir / "negfit.json") << R"({"name":"g","fits":[{"input":")" + (dir / "neg.csv").string() + R"(","window":[10,40]}]})";
  }
  CHECK(shell(bin + " fit --config " + (dir / "negfit.json").string() + " --out " + (dir / "g").string()) == 1);
  CHECK(shell(bin + " tails --config " + (dir / "bad.json").string()) == 2);
  CHECK(shell(bin + " tails --config " + (dir / "broken.json").string()) == 2);
  CHECK(shell(bin + " tails --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(shell(bin + " tails --config " + (dir / "ok.json").string() + " --workers x") == 2);
  CHECK(shell(bin + " fit --config " + (dir / "fit.json").string() + " --out " + (dir / "f").string()) == 2);
  CHECK(shell(bin + " renewal --gamma 0.5 --m 65 --N 64 --out " + (dir / "r").string()) == 2);
  CHECK(shell(bin + " renewal --gamma 0.5 --m 64 --N 64 --out " + (dir / "r").string()) == 0);
  CHECK(shell("SHARPDECAY_WORKERS=2 " + bin + " tails --config " + (dir / "ok.json").string() + " --out " + (dir / "out2").string()) == 0);
  CHECK(slurp(dir / "out" / "tails.csv") == slurp(dir / "out2" / "tails.csv"));
  fs::remove_all(dir);
}
