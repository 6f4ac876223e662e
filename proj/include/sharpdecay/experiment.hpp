// Experiment runner: validated JSON configuration, dispatch to the modules,
// CSV/JSON artifacts and a run manifest.
#ifndef SHARPDECAY_EXPERIMENT_HPP
#define SHARPDECAY_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sharpdecay/core.hpp"

namespace sharpdecay::experiment {

using Json = nlohmann::ordered_json;

/// Invalid configuration; `field` is the dotted path of the offending entry.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct RunOutput {
  std::string experiment;
  std::string subcommand;
  std::vector<Artifact> files;
  Json summary;
  Json config;  // the validated configuration after overrides
  bool passed = true;
};

const std::vector<std::string>& subcommands();

/// Validates `config` for `subcommand` and runs it. Throws ConfigError
/// before any computation when the configuration is invalid.
RunOutput run(const std::string& subcommand, const Json& config, const Overrides& overrides);

/// Output directory of a run: override, then config "out", then runs/<name>.
std::filesystem::path output_dir(const RunOutput& run, const Overrides& overrides);

/// Writes the artifacts and manifest.json (config echo, git-style content
/// hashes, wall time). Refuses to write into another experiment's directory.
void write_outputs(const RunOutput& run, const std::filesystem::path& dir, double wall_seconds);

/// SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_sha1(const std::string& content);

/// Runs the built-in exact-example checks; returns the number of failures.
int selftest(std::ostream& os);

}  // namespace sharpdecay::experiment

#endif  // SHARPDECAY_EXPERIMENT_HPP
