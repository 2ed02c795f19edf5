#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "effham/model.hpp"
#include "json.hpp"

namespace effham::cli {

enum ExitCode : int { kOk = 0, kInvalid = 2, kNumerical = 3 };

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// Fully resolved run: the config JSON (blocks validated lazily per command),
// the model it names, and where output goes.
struct RunConfig {
  nlohmann::json config = nlohmann::json::object();
  Model model;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

// Throws ConfigError for unreadable files, unknown keys, or a missing model.
RunConfig resolve(const nlohmann::json& config, const Overrides& overrides,
                  const std::filesystem::path& base_dir = ".");
RunConfig load(const Overrides& overrides);

// Each command writes its files into out_dir and returns an exit code;
// diagnostics go to `log`. Errors are mapped to exit codes, never thrown.
int cmd_sweep(const RunConfig& run, std::ostream& log);
int cmd_velocity(const RunConfig& run, std::ostream& log);
int cmd_legendre(const RunConfig& run, std::ostream& log);
int cmd_simulate(const RunConfig& run, std::ostream& log);
int cmd_check(const RunConfig& run, std::ostream& log);
int cmd_validate(const RunConfig& run, std::ostream& log);

// Entry point used by the executable.
int main(int argc, char** argv);

}  // namespace effham::cli
