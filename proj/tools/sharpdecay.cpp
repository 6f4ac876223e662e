// sharpdecay: command-line runner for the tail, correlation, renewal,
// Birkhoff-sum and fitting experiments.
//
//   sharpdecay <subcommand> --config run.json [--workers K] [--seed S] [--out DIR]
//
// Exit status: 0 on success, 1 on a runtime failure, 2 on an invalid
// configuration. Failures print one JSON record on stderr.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "sharpdecay/experiment.hpp"

namespace ex = sharpdecay::experiment;

namespace {

const std::map<std::string, std::string> kModule = {
    {"tails", "inducing"}, {"correlate", "correlator"}, {"renewal", "renewal"}, {"birkhoff", "inducing"},
    {"fit", "fitkit"},     {"report", "fitkit"},        {"selftest", "cli"}};

int config_error(const std::string& field, const std::string& message) {
  ex::Json rec = {{"error", "config"}, {"field", field}, {"message", message}};
  std::cerr << rec.dump() << "\n";
  return 2;
}

int runtime_error(const std::string& subcommand, const std::string& message) {
  const auto it = kModule.find(subcommand);
  ex::Json rec = {{"error", "runtime"}, {"module", it == kModule.end() ? "cli" : it->second}, {"message", message}};
  std::cerr << rec.dump() << "\n";
  return 1;
}

int default_workers_from_env() {
  if (const char* env = std::getenv("SHARPDECAY_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0 && v <= 4096) return static_cast<int>(v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decay-of-correlation experiments for nonuniformly hyperbolic systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<double> gamma;
  std::optional<std::int64_t> grid_m, branches_N;

  std::map<std::string, CLI::App*> subs;
  for (const auto& name : ex::subcommands()) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    if (name == "selftest") continue;
    auto* cfg = sub->add_option("--config,-c", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    if (name != "renewal") cfg->required();
    sub->add_option("--workers", workers, "worker threads (0: hardware concurrency; default from SHARPDECAY_WORKERS)");
    sub->add_option("--seed", seed, "64-bit seed, overrides the config");
    sub->add_option("--out", out, "output directory, overrides the config");
    if (name == "renewal") {
      sub->add_option("--gamma", gamma, "LSV parameter in (0,1)");
      sub->add_option("--m", grid_m, "Ulam grid size (even, >= 64)");
      sub->add_option("--N", branches_N, "number of explicit branches");
    }
  }
  subs["selftest"]->add_option("--workers", workers, "ignored; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return config_error("<command line>", e.what());
  }

  std::string subcommand;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) subcommand = name;

  if (subcommand == "selftest") {
    const int failures = ex::selftest(std::cout);
    std::cout << (failures == 0 ? "selftest: all checks passed" : "selftest: " + std::to_string(failures) + " failed") << "\n";
    return failures == 0 ? 0 : 1;
  }

  ex::Json config = ex::Json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    try {
      config = ex::Json::parse(in);
    } catch (const ex::Json::parse_error& e) {
      return config_error("<file>", std::string("cannot parse ") + config_path + ": " + e.what());
    }
  }
  if (subcommand == "renewal") {
    if (!config.is_object()) return config_error("<root>", "expected an object");
    if (gamma || !config.contains("map")) config["map"] = {{"kind", "lsv"}, {"gamma", gamma.value_or(0.5)}};
    if (grid_m) config["params"]["m"] = *grid_m;
    if (branches_N) config["params"]["N"] = *branches_N;
  }

  ex::Overrides ov;
  ov.seed = seed;
  ov.workers = workers;
  if (!ov.workers && std::getenv("SHARPDECAY_WORKERS")) ov.workers = default_workers_from_env();
  ov.out = out;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto result = ex::run(subcommand, config, ov);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = ex::output_dir(result, ov);
    ex::write_outputs(result, dir, wall);
    std::cout << result.summary.dump(2) << "\n";
    std::cout << "wrote " << dir.string() << " (" << result.files.size() << " files, " << wall << " s)\n";
    return 0;
  } catch (const ex::ConfigError& e) {
    const std::string what = e.what();
    const auto pos = what.find(": ");
    return config_error(e.field(), pos == std::string::npos ? what : what.substr(pos + 2));
  } catch (const std::exception& e) {
    return runtime_error(subcommand, e.what());
  }
}
